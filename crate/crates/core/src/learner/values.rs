use super::LearnerConfig;
use crate::error::Result;
use crate::model::{AtgModel, EdgeKey, UpdateOutcome};

/// Differential-variance reward; novel structure earns the wide-versus-thin
/// difference. Always within `[0, r_max]`.
pub fn intrinsic_reward(outcome: &UpdateOutcome<f64>, config: &LearnerConfig) -> f64 {
    let novelty = (config.wide_var - config.thin_var).abs();
    let raw = match outcome.norm_km1 {
        Some(prev) if !outcome.novel_edge && !outcome.novel_node => (outcome.norm_k - prev).abs(),
        _ => novelty,
    };
    raw.min(config.r_max).max(0.0)
}

/// `V(s)`: the best value leaving `s`, zero for a sink.
pub fn state_value(model: &AtgModel<f64>, s: &str) -> f64 {
    model.outgoing(s).map(|e| e.q).fold(0.0, f64::max)
}

/// `q ← (1−α)q + α(r + γV(s'))`, written back onto the edge.
pub fn value_update(model: &mut AtgModel<f64>, edge: &EdgeKey, reward: f64, config: &LearnerConfig) -> Result<f64> {
    let q = model
        .edge(edge)
        .map(|e| e.q)
        .ok_or_else(|| crate::error::AtgError::Structural(format!("no edge {edge:?}")))?;
    let target = reward + config.gamma * state_value(model, &edge.dst);
    let q_new = (1.0 - config.alpha) * q + config.alpha * target;
    model.set_q(edge, q_new)?;
    Ok(q_new)
}
