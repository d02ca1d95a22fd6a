use std::collections::BTreeSet;
use std::f64::consts::PI;

use crate::error::{AtgError, Result};
use crate::gaussian::circular_distance;
use crate::model::{ActionKind, AtgModel, EdgeKey};
use crate::sim::TACTILE_TYPE;

fn is_visual(model: &AtgModel<f64>, key: &str) -> bool {
    model.node(key).is_some_and(|n| {
        n.feature_ids
            .iter()
            .all(|&id| model.feature(id).is_some_and(|f| f.ftype != TACTILE_TYPE))
    })
}

fn kinds(model: &AtgModel<f64>) -> BTreeSet<ActionKind> {
    model.edges().map(|e| e.kind).collect()
}

fn check_kinds(learned: &AtgModel<f64>, truth: &AtgModel<f64>) -> Result<()> {
    let extra: Vec<String> = kinds(learned)
        .difference(&kinds(truth))
        .map(|k| k.to_string())
        .collect();
    if extra.is_empty() {
        Ok(())
    } else {
        Err(AtgError::KindMismatch(format!(
            "learned model uses {} which the ground truth lacks",
            extra.join(", ")
        )))
    }
}

/// Ground-truth ORBIT edges between purely visual aspects, in key order.
pub fn scored_edges(truth: &AtgModel<f64>) -> Vec<EdgeKey> {
    truth
        .edges()
        .filter(|e| e.kind == ActionKind::Orbit && is_visual(truth, &e.src) && is_visual(truth, &e.dst))
        .map(|e| e.key())
        .collect()
}

/// Mean circular difference between learned and true ORBIT edge means, with
/// π charged for each undiscovered edge.
pub fn model_error(learned: &AtgModel<f64>, truth: &AtgModel<f64>) -> Result<f64> {
    check_kinds(learned, truth)?;
    let scored = scored_edges(truth);
    if scored.is_empty() {
        return Err(AtgError::KindMismatch("ground truth has no visual ORBIT edges".into()));
    }
    let total: f64 = scored
        .iter()
        .map(|key| {
            let t = truth.edge(key).expect("scored edge in truth").dist.mean[0];
            learned
                .edge(key)
                .map_or(PI, |e| circular_distance(e.dist.mean[0], t))
        })
        .sum();
    // Each term is at most π; the clamp absorbs rounding in the sum.
    Ok((total / scored.len() as f64).min(PI))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraspAccuracy {
    /// Mean Euclidean distance (meters) over discovered edges.
    pub mean_distance: Option<f64>,
    pub discovered: usize,
    pub total: usize,
}

/// Accuracy of GRASP edge means, kept apart from the radian metric.
pub fn grasp_accuracy(learned: &AtgModel<f64>, truth: &AtgModel<f64>) -> GraspAccuracy {
    let mut dists = Vec::new();
    let mut total = 0;
    for t in truth.edges().filter(|e| e.kind == ActionKind::Grasp) {
        total += 1;
        if let Some(l) = learned.edge(&t.key()) {
            let d2: f64 = l
                .dist
                .mean
                .iter()
                .zip(&t.dist.mean)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dists.push(d2.sqrt());
        }
    }
    GraspAccuracy {
        mean_distance: (!dists.is_empty()).then(|| dists.iter().sum::<f64>() / dists.len() as f64),
        discovered: dists.len(),
        total,
    }
}
