use std::collections::{BTreeMap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{AtgError, Result};
use crate::learner::ActionSet;
use crate::linalg::Matrix;
use crate::model::{ActionKind, AtgModel, Experience};
use crate::observe::order_features;
use crate::sim::{canonical_state, step, visible_detections, true_aspect, Servos, SimConfig, StepFlag, WorldState};

/// Upper bound on distinct aspects before the sweep is declared open.
pub const MAX_ASPECTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepResolution {
    /// Samples over the orbit angle.
    pub orbit: usize,
    /// Samples per grasp offset dimension.
    pub grasp: usize,
}

impl Default for SweepResolution {
    fn default() -> Self {
        Self { orbit: 720, grasp: 8 }
    }
}

impl SweepResolution {
    pub fn doubled(self) -> Self {
        Self {
            orbit: self.orbit * 2,
            grasp: self.grasp * 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GroundTruth {
    pub model: AtgModel<f64>,
    pub resolution: SweepResolution,
}

fn cell_centers(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (i as f64 + 0.5) * (hi - lo) / n as f64).collect()
}

/// Parameter grid for one kind: cell centers of an even partition of the box.
pub fn sweep_grid(kind: ActionKind, res: SweepResolution) -> Vec<Vec<f64>> {
    match kind {
        ActionKind::Orbit => {
            let (lo, hi) = kind.bounds()[0];
            cell_centers(lo, hi, res.orbit).into_iter().map(|x| vec![x]).collect()
        }
        ActionKind::Grasp => {
            let axes: Vec<Vec<f64>> = kind
                .bounds()
                .iter()
                .map(|&(lo, hi)| cell_centers(lo, hi, res.grasp))
                .collect();
            let mut out = Vec::with_capacity(res.grasp.pow(3));
            for &x in &axes[0] {
                for &y in &axes[1] {
                    for &z in &axes[2] {
                        out.push(vec![x, y, z]);
                    }
                }
            }
            out
        }
        ActionKind::Release => vec![Vec::new()],
    }
}

fn add_node(model: &mut AtgModel<f64>, state: &WorldState, config: &SimConfig) -> Result<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ordered = order_features(&visible_detections(state, config, &mut rng));
    let ids: Vec<usize> = ordered
        .iter()
        .map(|d| model.upsert_feature(&d.ftype, &d.value, d.pos, Matrix::zeros(3, 3)))
        .collect();
    let key = true_aspect(state, config);
    model.get_or_create_node(&key, &ids)?;
    Ok(key)
}

/// Sweeps every action over a dense grid from every reachable aspect of a
/// noise-free world until no new aspect appears.
pub fn build_ground_truth(config: &SimConfig, actions: ActionSet, res: SweepResolution) -> Result<GroundTruth> {
    let config = config.noise_free();
    config.validate()?;
    let servos = Servos::new(&config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut model = AtgModel::new(1e-6);

    let start = WorldState::at(0.0, 0.0);
    let start_key = add_node(&mut model, &start, &config)?;
    let mut reps: BTreeMap<String, WorldState> = BTreeMap::new();
    reps.insert(start_key.clone(), start);
    let mut queue = VecDeque::from([start_key]);

    let grids: Vec<(ActionKind, Vec<Vec<f64>>)> = actions
        .kinds()
        .iter()
        .map(|&k| (k, sweep_grid(k, res)))
        .collect();

    while let Some(s) = queue.pop_front() {
        let state = reps[&s].clone();
        for (kind, grid) in &grids {
            for rho in grid {
                let (next, flag) = step(&config, &servos, &state, *kind, rho, &mut rng)?;
                if flag != StepFlag::Moved {
                    continue;
                }
                let s_prime = add_node(&mut model, &next, &config)?;
                if !reps.contains_key(&s_prime) {
                    if reps.len() >= MAX_ASPECTS {
                        return Err(AtgError::NotClosed(MAX_ASPECTS));
                    }
                    reps.insert(s_prime.clone(), canonical_state(&next, &config));
                    queue.push_back(s_prime.clone());
                }
                model.record_experience(&Experience {
                    s: s.clone(),
                    kind: *kind,
                    rho: rho.clone(),
                    s_prime,
                })?;
            }
        }
    }
    Ok(GroundTruth { model, resolution: res })
}
