use std::io::Write;

use rayon::prelude::*;

use super::metric::model_error;
use super::stats::{mean, sample_std, welch_p};
use crate::config::RunConfig;
use crate::error::{AtgError, Result};
use crate::learner::{Learner, Method, StepLog};
use crate::model::AtgModel;
use crate::sim::SimWorld;

/// One seeded run with its errors at each checkpoint.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub seed: u64,
    pub errors: Vec<f64>,
    pub log: Vec<StepLog>,
    pub model: AtgModel<f64>,
}

/// Runs one trial to the last checkpoint. A run that stops early is scored
/// on its final model at the remaining checkpoints.
pub fn run_trial(config: &RunConfig, method: Method, checkpoints: &[usize], truth: &AtgModel<f64>) -> Result<TrialRecord> {
    let last = *checkpoints.last().ok_or_else(|| AtgError::config("checkpoints", "empty"))?;
    let mut learner_cfg = config.learner.clone();
    learner_cfg.max_actions = last;
    let world = SimWorld::new(config.sim.clone(), config.sim.seed)?;
    let learner = Learner::new(world, learner_cfg, method).map_err(|e| e.source)?;
    let mut errors = Vec::with_capacity(checkpoints.len());
    let mut failure = None;
    let out = learner
        .run_with(|l| {
            if checkpoints.get(errors.len()) == Some(&l.log().len()) && failure.is_none() {
                match model_error(l.model(), truth) {
                    Ok(e) => errors.push(e),
                    Err(e) => failure = Some(e),
                }
            }
        })
        .map_err(|e| e.source)?;
    if let Some(e) = failure {
        return Err(e);
    }
    if errors.len() < checkpoints.len() {
        let fin = model_error(&out.model, truth)?;
        errors.resize(checkpoints.len(), fin);
    }
    Ok(TrialRecord {
        seed: config.learner.seed,
        errors,
        log: out.log,
        model: out.model,
    })
}

/// Trials `0..n` seeded `base_seed + i`, run in parallel.
pub fn run_method(
    config: &RunConfig,
    method: Method,
    n_trials: usize,
    base_seed: u64,
    checkpoints: &[usize],
    truth: &AtgModel<f64>,
) -> Result<Vec<TrialRecord>> {
    (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let cfg = config.clone().with_seed(base_seed + i as u64);
            run_trial(&cfg, method, checkpoints, truth).map_err(|e| AtgError::Trial {
                trial: i,
                source: Box::new(e),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Absent with fewer than two trials.
    pub std: Option<f64>,
}

impl Cell {
    fn new(values: Vec<f64>) -> Self {
        Self {
            mean: mean(&values),
            std: sample_std(&values),
            values,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub checkpoint: usize,
    pub p: Option<f64>,
    pub proposed: Cell,
    pub baseline: Cell,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialTable {
    pub rows: Vec<TableRow>,
}

impl TrialTable {
    pub fn from_trials(checkpoints: &[usize], proposed: &[TrialRecord], baseline: &[TrialRecord]) -> Result<Self> {
        let column = |trials: &[TrialRecord], i: usize| -> Vec<f64> { trials.iter().map(|t| t.errors[i]).collect() };
        let rows = checkpoints
            .iter()
            .enumerate()
            .map(|(i, &checkpoint)| {
                let (p_vals, b_vals) = (column(proposed, i), column(baseline, i));
                let p = if p_vals.len() >= 2 && b_vals.len() >= 2 {
                    Some(welch_p(&p_vals, &b_vals)?)
                } else {
                    None
                };
                Ok(TableRow {
                    checkpoint,
                    p,
                    proposed: Cell::new(p_vals),
                    baseline: Cell::new(b_vals),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows })
    }

    /// `checkpoint,p,proposed_mean,proposed_std,baseline_mean,baseline_std`;
    /// undefined values are left empty.
    pub fn write_csv<W: Write>(&self, mut out: W, header: &[String]) -> Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["checkpoint", "p", "proposed_mean", "proposed_std", "baseline_mean", "baseline_std"])?;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.checkpoint.to_string(),
                opt(r.p),
                r.proposed.mean.to_string(),
                opt(r.proposed.std),
                r.baseline.mean.to_string(),
                opt(r.baseline.std),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Both methods over the same seeds, plus the comparison table.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub table: TrialTable,
    pub proposed: Vec<TrialRecord>,
    pub baseline: Vec<TrialRecord>,
}

pub fn run_trials(
    config: &RunConfig,
    n_trials: usize,
    base_seed: u64,
    checkpoints: &[usize],
    truth: &AtgModel<f64>,
) -> Result<Experiment> {
    if n_trials == 0 {
        return Err(AtgError::config("eval.trials", "must be at least 1"));
    }
    let proposed = run_method(config, Method::Proposed, n_trials, base_seed, checkpoints, truth)?;
    let baseline = run_method(config, Method::Baseline, n_trials, base_seed, checkpoints, truth)?;
    let table = TrialTable::from_trials(checkpoints, &proposed, &baseline)?;
    Ok(Experiment {
        table,
        proposed,
        baseline,
    })
}
