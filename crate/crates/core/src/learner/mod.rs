//! Autonomous structure learning: stratified exploration, highest-value
//! exploitation, differential-variance reward and online value iteration,
//! plus the random-and-memorize baseline.

mod config;
mod lhs;
mod values;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{AtgError, Result};
use crate::model::{ActionKind, AtgModel, Experience};
use crate::observe::{detections_key, order_features, FeatureDetection, Tracker};
use crate::sim::{SimWorld, StepFlag};

pub use config::{ActionSet, KindSelection, LearnerConfig, LhsStrata};
pub use lhs::LhsGrid;
pub use values::{intrinsic_reward, state_value, value_update};

/// Something the robot can act in and look at.
pub trait Environment {
    fn execute(&mut self, kind: ActionKind, rho: &[f64]) -> Result<StepFlag>;
    fn observe(&mut self) -> Result<Vec<FeatureDetection<f64>>>;
}

impl Environment for SimWorld {
    fn execute(&mut self, kind: ActionKind, rho: &[f64]) -> Result<StepFlag> {
        self.act(kind, rho)
    }

    fn observe(&mut self) -> Result<Vec<FeatureDetection<f64>>> {
        Ok(self.sense())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Explore,
    Exploit,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Explore => "explore",
            Mode::Exploit => "exploit",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Proposed,
    Baseline,
}

impl Method {
    fn stream(self) -> u64 {
        match self {
            Method::Proposed => 1,
            Method::Baseline => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub kind: ActionKind,
    pub rho: Vec<f64>,
    pub mode: Mode,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepLog {
    /// One-based step index.
    pub step: usize,
    pub s: String,
    pub kind: ActionKind,
    pub rho: Vec<f64>,
    pub s_prime: String,
    pub reward: f64,
    pub mode: Mode,
    pub flag: StepFlag,
    pub node_count: usize,
    pub edge_count: usize,
    pub max_q: f64,
    pub mean_q: f64,
}

/// Per-node exploration bookkeeping: one grid per (node, kind) and the
/// kinds found not to apply at a node.
#[derive(Clone, Debug, Default)]
pub struct Explorer {
    grids: BTreeMap<(String, ActionKind), LhsGrid>,
    inapplicable: BTreeSet<(String, ActionKind)>,
}

impl Explorer {
    pub fn grid(&self, s: &str, kind: ActionKind) -> Option<&LhsGrid> {
        self.grids.get(&(s.to_owned(), kind))
    }

    fn grid_mut<R: Rng>(&mut self, s: &str, kind: ActionKind, config: &LearnerConfig, rng: &mut R) -> Result<&mut LhsGrid> {
        let key = (s.to_owned(), kind);
        if !self.grids.contains_key(&key) {
            let grid = LhsGrid::new(kind, config.lhs_strata.for_kind(kind), rng.next_u64())?;
            self.grids.insert(key.clone(), grid);
        }
        Ok(self.grids.get_mut(&key).expect("grid just inserted"))
    }

    pub fn mark_inapplicable(&mut self, s: &str, kind: ActionKind) {
        self.inapplicable.insert((s.to_owned(), kind));
    }

    pub fn is_applicable(&self, s: &str, kind: ActionKind) -> bool {
        !self.inapplicable.contains(&(s.to_owned(), kind))
    }

    /// Allowed kinds not yet ruled out at `s`; every kind if all are.
    pub fn candidate_kinds(&self, s: &str, config: &LearnerConfig) -> Vec<ActionKind> {
        let kinds: Vec<ActionKind> = config
            .actions
            .kinds()
            .iter()
            .copied()
            .filter(|&k| self.is_applicable(s, k))
            .collect();
        if kinds.is_empty() {
            config.actions.kinds().to_vec()
        } else {
            kinds
        }
    }

    /// Cells left before the node's grid for `kind` refills.
    fn weight(&self, s: &str, kind: ActionKind, config: &LearnerConfig) -> usize {
        match self.grid(s, kind) {
            Some(g) => g.remaining(),
            None => full_cycle(kind, config),
        }
    }

    fn choose_kind<R: Rng>(&self, s: &str, config: &LearnerConfig, rng: &mut R) -> ActionKind {
        let kinds = self.candidate_kinds(s, config);
        match config.kind_selection {
            KindSelection::Uniform => kinds[rng.random_range(0..kinds.len())],
            KindSelection::Coverage => {
                let weights: Vec<usize> = kinds.iter().map(|&k| self.weight(s, k, config)).collect();
                let mut pick = rng.random_range(0..weights.iter().sum::<usize>());
                for (&k, &w) in kinds.iter().zip(&weights) {
                    if pick < w {
                        return k;
                    }
                    pick -= w;
                }
                unreachable!("pick below total weight")
            }
        }
    }

    /// Every applicable grid of every node has been through a full cycle.
    pub fn discovery_pass_complete(&self, model: &AtgModel<f64>, config: &LearnerConfig) -> bool {
        model.nodes().all(|n| {
            self.candidate_kinds(&n.key, config)
                .into_iter()
                .all(|k| self.grid(&n.key, k).is_some_and(|g| g.cycles_completed() >= 1))
        })
    }
}

fn full_cycle(kind: ActionKind, config: &LearnerConfig) -> usize {
    if kind.param_dim() == 0 {
        1
    } else {
        config.lhs_strata.for_kind(kind)
    }
}

/// Picks the next action at `s`: a stratified draw with probability
/// `epsilon_explore` (or whenever `s` has no outgoing edges), otherwise a
/// draw from the distribution of the highest-valued outgoing edge.
pub fn select_action<R: Rng>(
    model: &AtgModel<f64>,
    explorer: &mut Explorer,
    s: &str,
    config: &LearnerConfig,
    rng: &mut R,
) -> Result<Selection> {
    let explore_roll: f64 = rng.random();
    let mut best = None;
    for e in model.outgoing(s).filter(|e| config.actions.kinds().contains(&e.kind)) {
        if best.is_none_or(|b: &crate::model::ActionEdge<f64>| e.q > b.q) {
            best = Some(e);
        }
    }
    match best {
        Some(edge) if explore_roll >= config.epsilon_explore => {
            let normals: Vec<f64> = (0..edge.dist.dim()).map(|_| rng.sample(StandardNormal)).collect();
            let raw = edge.dist.sample_with(&normals)?;
            Ok(Selection {
                kind: edge.kind,
                rho: edge.kind.project(&raw),
                mode: Mode::Exploit,
            })
        }
        _ => {
            let kind = explorer.choose_kind(s, config, rng);
            let rho = explorer.grid_mut(s, kind, config, rng)?.draw();
            Ok(Selection {
                kind,
                rho,
                mode: Mode::Explore,
            })
        }
    }
}

/// Uniform kind and uniform parameters over the whole box.
pub fn select_random<R: Rng>(config: &LearnerConfig, rng: &mut R) -> Selection {
    let kinds = config.actions.kinds();
    let kind = kinds[rng.random_range(0..kinds.len())];
    let rho = kind
        .bounds()
        .iter()
        .map(|&(lo, hi)| rng.random_range(lo..=hi))
        .collect();
    Selection {
        kind,
        rho,
        mode: Mode::Explore,
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub model: AtgModel<f64>,
    pub log: Vec<StepLog>,
}

/// A run that stopped on an error; the work done so far is kept.
#[derive(Debug, thiserror::Error)]
#[error("run aborted after {} steps: {source}", partial.log.len())]
pub struct RunError {
    #[source]
    pub source: AtgError,
    pub partial: Box<RunOutput>,
}

pub struct Learner<E> {
    config: LearnerConfig,
    method: Method,
    env: E,
    model: AtgModel<f64>,
    tracker: Tracker<f64>,
    explorer: Explorer,
    rng: ChaCha8Rng,
    log: Vec<StepLog>,
    current: String,
}

impl<E: Environment> Learner<E> {
    /// Validates the config and takes the first look at the world.
    pub fn new(env: E, config: LearnerConfig, method: Method) -> Result<Self, RunError> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(method.stream());
        let mut learner = Self {
            model: AtgModel::new(config.thin_var),
            config,
            method,
            env,
            tracker: Tracker::default(),
            explorer: Explorer::default(),
            rng,
            log: Vec::new(),
            current: String::new(),
        };
        let init = learner
            .config
            .validate()
            .and_then(|_| learner.perceive());
        match init {
            Ok(key) => {
                learner.current = key;
                Ok(learner)
            }
            Err(source) => Err(learner.abort(source)),
        }
    }

    fn abort(self, source: AtgError) -> RunError {
        RunError {
            source,
            partial: Box::new(RunOutput {
                model: self.model,
                log: self.log,
            }),
        }
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.config
    }

    pub fn model(&self) -> &AtgModel<f64> {
        &self.model
    }

    pub fn log(&self) -> &[StepLog] {
        &self.log
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    pub fn explorer(&self) -> &Explorer {
        &self.explorer
    }

    pub fn current_aspect(&self) -> &str {
        &self.current
    }

    /// Updates tracks and features from a fresh observation and returns the
    /// node key of what is in view.
    fn perceive(&mut self) -> Result<String> {
        let ordered = order_features(&self.env.observe()?);
        let mut ids = Vec::with_capacity(ordered.len());
        for det in &ordered {
            let track = self.tracker.update(det)?;
            let (mean, cov) = (track.mean, track.cov.clone());
            ids.push(self.model.upsert_feature(&det.ftype, &det.value, mean, cov));
        }
        let key = detections_key(&ordered);
        self.model.get_or_create_node(&key, &ids)?;
        Ok(key)
    }

    /// Values depleted after every node's grids have cycled once.
    pub fn is_converged(&self) -> bool {
        self.method == Method::Proposed
            && self.model.edge_count() > 0
            && self.model.edges().all(|e| e.q <= self.config.epsilon_stop)
            && self.explorer.discovery_pass_complete(&self.model, &self.config)
    }

    pub fn is_finished(&self) -> bool {
        self.log.len() >= self.config.max_actions || (self.config.stop_when_converged && self.is_converged())
    }

    pub fn step(&mut self) -> Result<&StepLog> {
        let s = self.current.clone();
        let sel = match self.method {
            Method::Proposed => select_action(&self.model, &mut self.explorer, &s, &self.config, &mut self.rng)?,
            Method::Baseline => select_random(&self.config, &mut self.rng),
        };
        let flag = self.env.execute(sel.kind, &sel.rho)?;
        let s_prime = self.perceive()?;
        let record = match flag {
            StepFlag::Moved => true,
            StepFlag::GraspFailed => self.config.record_failed_grasps,
            StepFlag::NoOp => false,
        };
        if flag == StepFlag::NoOp && self.config.skip_inapplicable && self.method == Method::Proposed {
            self.explorer.mark_inapplicable(&s, sel.kind);
        }
        let mut reward = 0.0;
        if record {
            let outcome = self.model.record_experience(&Experience {
                s: s.clone(),
                kind: sel.kind,
                rho: sel.rho.clone(),
                s_prime: s_prime.clone(),
            })?;
            reward = intrinsic_reward(&outcome, &self.config);
            if self.method == Method::Proposed {
                value_update(&mut self.model, &outcome.edge, reward, &self.config)?;
            }
        }
        self.current = s_prime.clone();
        self.log.push(StepLog {
            step: self.log.len() + 1,
            s,
            kind: sel.kind,
            rho: sel.rho,
            s_prime,
            reward,
            mode: sel.mode,
            flag,
            node_count: self.model.node_count(),
            edge_count: self.model.edge_count(),
            max_q: self.model.max_q(),
            mean_q: self.model.mean_q(),
        });
        Ok(self.log.last().expect("just pushed"))
    }

    /// Steps until finished, calling `on_step` after every step.
    pub fn run_with<F: FnMut(&Self)>(mut self, mut on_step: F) -> Result<RunOutput, RunError> {
        while !self.is_finished() {
            if let Err(e) = self.step() {
                return Err(self.abort(e));
            }
            on_step(&self);
        }
        Ok(RunOutput {
            model: self.model,
            log: self.log,
        })
    }

    pub fn run(self) -> Result<RunOutput, RunError> {
        self.run_with(|_| {})
    }
}

pub fn run_learning<E: Environment>(env: E, config: &LearnerConfig) -> Result<RunOutput, RunError> {
    Learner::new(env, config.clone(), Method::Proposed)?.run()
}

pub fn run_baseline<E: Environment>(env: E, config: &LearnerConfig) -> Result<RunOutput, RunError> {
    Learner::new(env, config.clone(), Method::Baseline)?.run()
}

/// Writes the step log as CSV, preceded by `# `-prefixed header lines.
pub fn write_step_log<W: Write>(mut out: W, log: &[StepLog], actions: ActionSet, header: &[String]) -> Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    let dim = actions.max_param_dim();
    let mut w = csv::Writer::from_writer(out);
    let mut cols = vec!["step".to_string(), "s".into(), "kind".into()];
    cols.extend((0..dim).map(|i| format!("rho{i}")));
    cols.extend(["s_prime", "reward", "mode", "nodes", "edges", "max_q"].map(String::from));
    w.write_record(&cols)?;
    for l in log {
        let mut rec = vec![l.step.to_string(), l.s.clone(), l.kind.to_string()];
        rec.extend((0..dim).map(|i| l.rho.get(i).map(|x| x.to_string()).unwrap_or_default()));
        rec.extend([
            l.s_prime.clone(),
            l.reward.to_string(),
            l.mode.to_string(),
            l.node_count.to_string(),
            l.edge_count.to_string(),
            l.max_q.to_string(),
        ]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
