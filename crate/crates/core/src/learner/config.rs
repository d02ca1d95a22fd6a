use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{AtgError, Result};
use crate::model::ActionKind;

/// Which control programs the robot may use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionSet {
    #[default]
    #[serde(rename = "orbit")]
    Orbit,
    #[serde(rename = "orbit+grasp")]
    OrbitGrasp,
}

impl ActionSet {
    pub fn kinds(self) -> &'static [ActionKind] {
        match self {
            ActionSet::Orbit => &[ActionKind::Orbit],
            ActionSet::OrbitGrasp => &ActionKind::ALL,
        }
    }

    /// Widest parameter vector among the allowed kinds.
    pub fn max_param_dim(self) -> usize {
        self.kinds().iter().map(|k| k.param_dim()).max().unwrap_or(0)
    }
}

impl fmt::Display for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ActionSet::Orbit => "orbit",
            ActionSet::OrbitGrasp => "orbit+grasp",
        })
    }
}

impl FromStr for ActionSet {
    type Err = AtgError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orbit" => Ok(ActionSet::Orbit),
            "orbit+grasp" => Ok(ActionSet::OrbitGrasp),
            other => Err(AtgError::config(
                "actions",
                format!("expected `orbit` or `orbit+grasp`, got `{other}`"),
            )),
        }
    }
}

/// How an exploratory step picks the action kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindSelection {
    /// Uniform over the allowed kinds.
    #[default]
    Uniform,
    /// Proportional to the cells left in each kind's grid at this node, so
    /// the node's grids drain together like one stratified design.
    Coverage,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LhsStrata {
    pub orbit: usize,
    pub grasp: usize,
}

impl Default for LhsStrata {
    fn default() -> Self {
        Self { orbit: 16, grasp: 6 }
    }
}

impl LhsStrata {
    pub fn for_kind(&self, kind: ActionKind) -> usize {
        match kind {
            ActionKind::Orbit => self.orbit,
            ActionKind::Grasp => self.grasp,
            ActionKind::Release => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_explore: f64,
    pub r_max: f64,
    pub epsilon_stop: f64,
    pub max_actions: usize,
    pub lhs_strata: LhsStrata,
    pub thin_var: f64,
    pub wide_var: f64,
    pub seed: u64,
    pub actions: ActionSet,
    pub kind_selection: KindSelection,
    /// Stop offering an action kind at a node once it has been a no-op there.
    pub skip_inapplicable: bool,
    /// Record failed grasps as `(s, GRASP, s)` experiences.
    pub record_failed_grasps: bool,
    /// End the run once values are depleted after a full discovery pass.
    pub stop_when_converged: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            gamma: 0.2,
            epsilon_explore: 0.95,
            r_max: 1.0,
            epsilon_stop: 0.01,
            max_actions: 500,
            lhs_strata: LhsStrata::default(),
            thin_var: 1e-6,
            wide_var: 10.0,
            seed: 0,
            actions: ActionSet::Orbit,
            kind_selection: KindSelection::Uniform,
            skip_inapplicable: true,
            record_failed_grasps: false,
            stop_when_converged: true,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |field: &str, msg: &str| Err(AtgError::config(format!("learner.{field}"), msg));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return err("alpha", "must lie in (0, 1]");
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return err("gamma", "must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.epsilon_explore) {
            return err("epsilon_explore", "must lie in [0, 1]");
        }
        if !(self.r_max.is_finite() && self.r_max > 0.0) {
            return err("r_max", "must be positive");
        }
        if !(self.epsilon_stop.is_finite() && self.epsilon_stop >= 0.0) {
            return err("epsilon_stop", "must be non-negative");
        }
        if self.max_actions == 0 {
            return err("max_actions", "must be at least 1");
        }
        if self.lhs_strata.orbit == 0 {
            return err("lhs_strata.orbit", "must be at least 1");
        }
        if self.lhs_strata.grasp == 0 {
            return err("lhs_strata.grasp", "must be at least 1");
        }
        if !(self.thin_var.is_finite() && self.thin_var > 0.0) {
            return err("thin_var", "must be positive");
        }
        if !(self.wide_var.is_finite() && self.wide_var > self.thin_var) {
            return err("wide_var", "must exceed thin_var");
        }
        Ok(())
    }

    /// Upper bound on any value: `r_max / (1 − γ)`.
    pub fn q_bound(&self) -> f64 {
        self.r_max / (1.0 - self.gamma)
    }
}
