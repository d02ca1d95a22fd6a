//! The aspect transition graph: a directed multigraph of aspect nodes joined
//! by parametrized action edges.
//!
//! Every edge keeps all parameter samples that produced its transition and a
//! Gaussian re-fitted from them after each append. Edge identity is the
//! triple `(src, kind, dst)`.

mod doc;
mod dot;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{AtgError, Result};
use crate::gaussian::{fit_circular, fit_gaussian, spectral_norm, wrap_angle, GaussianDist};
use crate::linalg::Matrix;
use crate::scalar::Real;

pub use doc::MODEL_FORMAT_VERSION;

const GRASP_OFFSET: f64 = 0.145;
const ORBIT_BOUNDS: [(f64, f64); 1] = [(-std::f64::consts::PI, std::f64::consts::PI)];
const GRASP_BOUNDS: [(f64, f64); 3] = [(-GRASP_OFFSET, GRASP_OFFSET); 3];

/// The control programs available to the robot.
///
/// Declaration order is the ordering used for deterministic tie-breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ActionKind {
    /// Move around the object on a fixed-radius circle by an angle (radians).
    Orbit,
    /// Bimanual grasp at a Cartesian offset (meters) from the facing side.
    Grasp,
    /// Let go of a held object and back off to the pre-grasp pose.
    Release,
}

impl ActionKind {
    pub const ALL: [ActionKind; 3] = [ActionKind::Orbit, ActionKind::Grasp, ActionKind::Release];

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Orbit => "ORBIT",
            ActionKind::Grasp => "GRASP",
            ActionKind::Release => "RELEASE",
        }
    }

    pub fn param_dim(self) -> usize {
        self.bounds().len()
    }

    /// Closed per-dimension parameter intervals.
    pub fn bounds(self) -> &'static [(f64, f64)] {
        match self {
            ActionKind::Orbit => &ORBIT_BOUNDS,
            ActionKind::Grasp => &GRASP_BOUNDS,
            ActionKind::Release => &[],
        }
    }

    /// Whether the parameter is an angle (fit with circular statistics).
    pub fn is_angular(self) -> bool {
        matches!(self, ActionKind::Orbit)
    }

    /// Checks dimension and bounds, returning the stored form of `rho`
    /// (angles wrapped into `(-π, π]`).
    pub fn normalize_params<T: Real>(self, rho: &[T]) -> Result<Vec<T>> {
        if rho.len() != self.param_dim() {
            return Err(AtgError::ParameterDomain {
                kind: self.name().into(),
                detail: format!("expected {} parameters, got {}", self.param_dim(), rho.len()),
            });
        }
        for (i, (&x, &(lo, hi))) in rho.iter().zip(self.bounds()).enumerate() {
            let (lo, hi) = (T::lit(lo), T::lit(hi));
            if !(x >= lo && x <= hi) {
                return Err(AtgError::ParameterDomain {
                    kind: self.name().into(),
                    detail: format!("parameter {i} = {x} outside [{lo}, {hi}]"),
                });
            }
        }
        Ok(if self.is_angular() {
            rho.iter().map(|&x| wrap_angle(x)).collect()
        } else {
            rho.to_vec()
        })
    }

    /// Projects an arbitrary vector onto the parameter domain: angles wrap,
    /// everything else clamps.
    pub fn project<T: Real>(self, rho: &[T]) -> Vec<T> {
        rho.iter()
            .zip(self.bounds())
            .map(|(&x, &(lo, hi))| {
                if self.is_angular() {
                    wrap_angle(x)
                } else {
                    x.max(T::lit(lo)).min(T::lit(hi))
                }
            })
            .collect()
    }

    /// Fits the edge distribution using the statistics suited to this kind.
    pub fn fit<T: Real>(self, samples: &[Vec<T>], thin_var: T) -> Result<GaussianDist<T>> {
        if self.is_angular() {
            fit_circular(samples, thin_var)
        } else {
            fit_gaussian(samples, thin_var)
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ActionKind {
    type Err = AtgError;

    fn from_str(s: &str) -> Result<Self> {
        ActionKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| AtgError::KindMismatch(format!("unknown action kind `{s}`")))
    }
}

/// A perceptual feature with its filtered position in the object frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Feature<T> {
    pub id: usize,
    pub ftype: String,
    pub value: String,
    pub pos_mean: [T; 3],
    pub pos_cov: Matrix<T>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectNode {
    pub key: String,
    pub feature_ids: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    pub src: String,
    pub kind: ActionKind,
    pub dst: String,
}

impl EdgeKey {
    pub fn new(src: impl Into<String>, kind: ActionKind, dst: impl Into<String>) -> Self {
        Self {
            src: src.into(),
            kind,
            dst: dst.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActionEdge<T> {
    pub src: String,
    pub dst: String,
    pub kind: ActionKind,
    /// Every successful parameter vector, in insertion order.
    pub samples: Vec<Vec<T>>,
    pub dist: GaussianDist<T>,
    pub q: T,
    pub visit_count: u64,
}

impl<T: Real> ActionEdge<T> {
    pub fn key(&self) -> EdgeKey {
        EdgeKey::new(self.src.clone(), self.kind, self.dst.clone())
    }
}

/// One `⟨s, a, ρ, s'⟩` interaction.
#[derive(Clone, Debug, PartialEq)]
pub struct Experience<T> {
    pub s: String,
    pub kind: ActionKind,
    pub rho: Vec<T>,
    pub s_prime: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UpdateOutcome<T> {
    pub edge: EdgeKey,
    /// `s'` had not taken part in any recorded transition before.
    pub novel_node: bool,
    pub novel_edge: bool,
    /// Spectral norm of the edge covariance after the append.
    pub norm_k: T,
    /// Spectral norm before the append; `None` for a fresh edge.
    pub norm_km1: Option<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtgModel<T> {
    pub(crate) thin_var: T,
    pub(crate) features: Vec<Feature<T>>,
    pub(crate) nodes: BTreeMap<String, AspectNode>,
    pub(crate) edges: BTreeMap<EdgeKey, ActionEdge<T>>,
}

impl<T: Real> AtgModel<T> {
    pub fn new(thin_var: T) -> Self {
        Self {
            thin_var,
            features: Vec::new(),
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
        }
    }

    pub fn thin_var(&self) -> T {
        self.thin_var
    }

    pub fn features(&self) -> &[Feature<T>] {
        &self.features
    }

    pub fn feature(&self, id: usize) -> Option<&Feature<T>> {
        self.features.get(id)
    }

    pub fn feature_id(&self, ftype: &str, value: &str) -> Option<usize> {
        self.features
            .iter()
            .find(|f| f.ftype == ftype && f.value == value)
            .map(|f| f.id)
    }

    /// Inserts a feature or refreshes the position estimate of an existing
    /// one; ids are assigned chronologically.
    pub fn upsert_feature(&mut self, ftype: &str, value: &str, mean: [T; 3], cov: Matrix<T>) -> usize {
        match self.feature_id(ftype, value) {
            Some(id) => {
                let f = &mut self.features[id];
                f.pos_mean = mean;
                f.pos_cov = cov;
                id
            }
            None => {
                let id = self.features.len();
                self.features.push(Feature {
                    id,
                    ftype: ftype.to_owned(),
                    value: value.to_owned(),
                    pos_mean: mean,
                    pos_cov: cov,
                });
                id
            }
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = &AspectNode> {
        self.nodes.values()
    }

    pub fn node(&self, key: &str) -> Option<&AspectNode> {
        self.nodes.get(key)
    }

    pub fn contains_node(&self, key: &str) -> bool {
        self.nodes.contains_key(key)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = &ActionEdge<T>> {
        self.edges.values()
    }

    pub fn edge(&self, key: &EdgeKey) -> Option<&ActionEdge<T>> {
        self.edges.get(key)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn sample_count(&self) -> usize {
        self.edges.values().map(|e| e.samples.len()).sum()
    }

    /// Edges leaving `s`, in key order.
    pub fn outgoing<'a>(&'a self, s: &'a str) -> impl Iterator<Item = &'a ActionEdge<T>> + 'a {
        self.edges
            .range(EdgeKey::new(s, ActionKind::Orbit, "")..)
            .take_while(move |(k, _)| k.src == s)
            .map(|(_, e)| e)
    }

    pub fn set_q(&mut self, key: &EdgeKey, q: T) -> Result<()> {
        let edge = self
            .edges
            .get_mut(key)
            .ok_or_else(|| AtgError::Structural(format!("no edge {key:?}")))?;
        edge.q = q;
        Ok(())
    }

    pub fn max_q(&self) -> T {
        self.edges.values().fold(T::zero(), |acc, e| acc.max(e.q))
    }

    pub fn mean_q(&self) -> T {
        if self.edges.is_empty() {
            return T::zero();
        }
        let sum = self.edges.values().fold(T::zero(), |acc, e| acc + e.q);
        sum / T::from_count(self.edges.len())
    }

    /// Returns the node for `key`, creating it when absent.
    pub fn get_or_create_node(&mut self, key: &str, feature_ids: &[usize]) -> Result<(&AspectNode, bool)> {
        if key.is_empty() {
            return Err(AtgError::Structural("aspect key must be nonempty".into()));
        }
        if let Some(&bad) = feature_ids.iter().find(|&&id| id >= self.features.len()) {
            return Err(AtgError::UnknownFeature(bad));
        }
        let novel = !self.nodes.contains_key(key);
        if !novel && self.nodes[key].feature_ids != feature_ids {
            return Err(AtgError::Structural(format!(
                "aspect `{key}` already exists with different features"
            )));
        }
        let node = self.nodes.entry(key.to_owned()).or_insert_with(|| AspectNode {
            key: key.to_owned(),
            feature_ids: feature_ids.to_vec(),
        });
        Ok((node, novel))
    }

    fn touched(&self, key: &str) -> bool {
        self.edges.keys().any(|k| k.src == key || k.dst == key)
    }

    /// Appends `exp.rho` to its edge (creating the edge if needed) and refits
    /// the edge distribution.
    pub fn record_experience(&mut self, exp: &Experience<T>) -> Result<UpdateOutcome<T>> {
        let rho = exp.kind.normalize_params(&exp.rho)?;
        for key in [&exp.s, &exp.s_prime] {
            if !self.nodes.contains_key(key.as_str()) {
                return Err(AtgError::UnknownNode(key.clone()));
            }
        }
        let novel_node = !self.touched(&exp.s_prime);
        let key = EdgeKey::new(exp.s.clone(), exp.kind, exp.s_prime.clone());
        let thin_var = self.thin_var;

        let (novel_edge, norm_km1) = match self.edges.get(&key) {
            Some(edge) => (false, Some(spectral_norm(&edge.dist.cov)?)),
            None => (true, None),
        };

        let edge = match self.edges.entry(key.clone()) {
            std::collections::btree_map::Entry::Occupied(o) => o.into_mut(),
            std::collections::btree_map::Entry::Vacant(v) => {
                let dist = exp.kind.fit(std::slice::from_ref(&rho), thin_var)?;
                v.insert(ActionEdge {
                    src: exp.s.clone(),
                    dst: exp.s_prime.clone(),
                    kind: exp.kind,
                    samples: Vec::new(),
                    dist,
                    q: T::zero(),
                    visit_count: 0,
                })
            }
        };
        edge.samples.push(rho);
        edge.dist = exp.kind.fit(&edge.samples, thin_var)?;
        edge.visit_count += 1;
        let norm_k = spectral_norm(&edge.dist.cov)?;

        Ok(UpdateOutcome {
            edge: key,
            novel_node,
            novel_edge,
            norm_k,
            norm_km1,
        })
    }

    /// Empirical `p(s' | s, kind)` from visit counts.
    pub fn transition_dist(&self, s: &str, kind: ActionKind) -> Result<BTreeMap<String, T>> {
        if !self.nodes.contains_key(s) {
            return Err(AtgError::UnknownNode(s.to_owned()));
        }
        let counts: Vec<(&str, u64)> = self
            .outgoing(s)
            .filter(|e| e.kind == kind)
            .map(|e| (e.dst.as_str(), e.visit_count))
            .collect();
        let total: u64 = counts.iter().map(|(_, c)| c).sum();
        if total == 0 {
            return Ok(BTreeMap::new());
        }
        let total = T::from_u64(total).expect("count fits scalar");
        Ok(counts
            .into_iter()
            .map(|(dst, c)| (dst.to_owned(), T::from_u64(c).expect("count fits scalar") / total))
            .collect())
    }

    /// Verifies referential integrity and that every edge distribution is
    /// exactly the fit of its samples.
    pub fn check_integrity(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (i, f) in self.features.iter().enumerate() {
            if f.id != i {
                return Err(AtgError::Structural(format!("feature at index {i} has id {}", f.id)));
            }
            if !seen.insert((f.ftype.as_str(), f.value.as_str())) {
                return Err(AtgError::Structural(format!(
                    "duplicate feature {}:{}",
                    f.ftype, f.value
                )));
            }
        }
        for (key, node) in &self.nodes {
            if key != &node.key {
                return Err(AtgError::Structural(format!("node key mismatch `{key}`")));
            }
            if let Some(&bad) = node.feature_ids.iter().find(|&&id| id >= self.features.len()) {
                return Err(AtgError::UnknownFeature(bad));
            }
        }
        for (key, edge) in &self.edges {
            if &edge.key() != key {
                return Err(AtgError::Structural(format!("edge stored under wrong key {key:?}")));
            }
            for end in [&key.src, &key.dst] {
                if !self.nodes.contains_key(end.as_str()) {
                    return Err(AtgError::UnknownNode(end.clone()));
                }
            }
            if edge.samples.is_empty() {
                return Err(AtgError::Structural(format!("edge {key:?} has no samples")));
            }
            if let Some(s) = edge.samples.iter().find(|s| s.len() != key.kind.param_dim()) {
                return Err(AtgError::DimensionMismatch {
                    expected: key.kind.param_dim(),
                    found: s.len(),
                });
            }
            if key.kind.fit(&edge.samples, self.thin_var)? != edge.dist {
                return Err(AtgError::Structural(format!(
                    "edge {key:?} distribution does not match its samples"
                )));
            }
        }
        Ok(())
    }
}
