//! A tagged cube seen by a robot that orbits it, grasps it with two hands
//! and releases it again.
//!
//! The cube's four side faces carry tags `0..4` (face `i` has outward normal
//! at angle `i·π/2` in the object frame); top and bottom carry `4` and `5`
//! and are never in view from orbit height. The robot's bearing relative to
//! the object falls into one of eight sectors: even sectors look straight at
//! one face, odd sectors look at the corner between two.

mod contact;
mod controller;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{AtgError, Result};
use crate::linalg::Matrix;
use crate::model::ActionKind;
use crate::observe::{detections_key, order_features, FeatureDetection};

pub use contact::{grasp_residuals, ContactPair, GraspResiduals};
pub use controller::{controller_step, Servo};

pub const TAG_TYPE: &str = "ARtag";
pub const TACTILE_TYPE: &str = "tactile";
pub const TACTILE_VALUE: &str = "grasp";
pub const SECTOR_COUNT: usize = 8;

const GRIP_FORCE: f64 = 5.0;
const HAND_JACOBIAN: [[f64; 3]; 3] = [[0.55, 0.05, 0.0], [0.0, 0.45, 0.08], [0.06, 0.0, 0.35]];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Meters.
    pub orbit_radius: f64,
    /// Meters.
    pub cube_side: f64,
    /// Radians; must be π/8 so eight sectors tile the circle.
    pub sector_half_width: f64,
    /// Orbit actuation noise standard deviation (radians).
    pub act_noise_sigma: f64,
    /// Feature position noise standard deviation (meters).
    pub obs_noise_sigma: f64,
    pub grasp_tol_xy: f64,
    pub grasp_tol_z: f64,
    pub residual_tol: f64,
    pub kappa: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            orbit_radius: 1.0,
            cube_side: 0.29,
            sector_half_width: FRAC_PI_8,
            act_noise_sigma: 0.02,
            obs_noise_sigma: 0.005,
            grasp_tol_xy: 0.10,
            grasp_tol_z: 0.08,
            residual_tol: 1e-6,
            kappa: 0.5,
            seed: 0,
        }
    }
}

impl SimConfig {
    /// The same world with all noise removed.
    pub fn noise_free(&self) -> Self {
        Self {
            act_noise_sigma: 0.0,
            obs_noise_sigma: 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sim.orbit_radius", self.orbit_radius),
            ("sim.cube_side", self.cube_side),
            ("sim.grasp_tol_xy", self.grasp_tol_xy),
            ("sim.grasp_tol_z", self.grasp_tol_z),
            ("sim.residual_tol", self.residual_tol),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(AtgError::config(field, "must be positive"));
            }
        }
        for (field, v) in [
            ("sim.act_noise_sigma", self.act_noise_sigma),
            ("sim.obs_noise_sigma", self.obs_noise_sigma),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(AtgError::config(field, "must be non-negative"));
            }
        }
        if (self.sector_half_width - FRAC_PI_8).abs() > 1e-12 {
            return Err(AtgError::config(
                "sim.sector_half_width",
                "must be π/8 so that eight sectors tile the orbit",
            ));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(AtgError::config("sim.kappa", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    /// Robot bearing on the orbit circle, in `[0, 2π)`.
    pub azimuth: f64,
    pub object_yaw: f64,
    pub held: bool,
    pub pre_grasp_azimuth: Option<f64>,
    pub contacts: Option<ContactPair>,
}

impl WorldState {
    pub fn at(azimuth: f64, object_yaw: f64) -> Self {
        Self {
            azimuth: wrap_2pi(azimuth),
            object_yaw,
            held: false,
            pre_grasp_azimuth: None,
            contacts: None,
        }
    }

    /// Bearing of the robot in the object frame, in `[0, 2π)`.
    pub fn relative_bearing(&self) -> f64 {
        wrap_2pi(self.azimuth - self.object_yaw)
    }
}

/// What an action did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepFlag {
    Moved,
    /// Hands reached the goal but the goal was outside the graspable region.
    GraspFailed,
    /// The action does not apply in this state (GRASP while held, RELEASE
    /// while not holding); nothing changed.
    NoOp,
}

pub fn wrap_2pi(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Sector index of a relative bearing: `floor((β + w)/(2w)) mod 8`.
pub fn sector_of(bearing: f64, half_width: f64) -> usize {
    let b = wrap_2pi(bearing);
    ((b + half_width) / (2.0 * half_width)).floor() as usize % SECTOR_COUNT
}

/// Side faces in view from a sector.
pub fn visible_faces(sector: usize) -> Vec<usize> {
    if sector.is_multiple_of(2) {
        vec![sector / 2]
    } else {
        vec![(sector - 1) / 2, sector.div_ceil(2) % 4]
    }
}

/// Face picked up from a sector; from a corner the counterclockwise face wins.
pub fn grasp_face(sector: usize) -> usize {
    sector.div_ceil(2) % 4
}

fn face_normal(face: usize) -> [f64; 3] {
    let a = face as f64 * FRAC_PI_2;
    [a.cos(), a.sin(), 0.0]
}

/// Rotates a grasp-frame vector (x along the face normal, y to its left,
/// z up) into the object frame.
fn grasp_to_object(face: usize, v: [f64; 3]) -> [f64; 3] {
    let [c, s, _] = face_normal(face);
    [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
}

fn face_center(face: usize, side: f64) -> [f64; 3] {
    face_normal(face).map(|x| x * side / 2.0)
}

pub fn reset(config: &SimConfig, seed: u64) -> Result<(WorldState, ChaCha8Rng)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let yaw = rng.random_range(0.0..TAU);
    Ok((WorldState::at(0.0, yaw), rng))
}

fn normal<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    sigma * z
}

fn contacts_for(face: usize, rho: &[f64], side: f64) -> ContactPair {
    let half = side / 2.0;
    let p_l = grasp_to_object(face, [rho[0], half, rho[2]]);
    let p_r = grasp_to_object(face, [rho[0], -half, rho[2]]);
    let centroid = [0, 1, 2].map(|i| (p_l[i] + p_r[i]) / 2.0);
    ContactPair {
        f_l: grasp_to_object(face, [0.0, -GRIP_FORCE, 0.0]),
        f_r: grasp_to_object(face, [0.0, GRIP_FORCE, 0.0]),
        r_l: [0, 1, 2].map(|i| p_l[i] - centroid[i]),
        r_r: [0, 1, 2].map(|i| p_r[i] - centroid[i]),
        centroid,
    }
}

/// Applies one action. Pure in `(state, kind, rho, rng)`.
pub fn step<R: Rng>(
    config: &SimConfig,
    servos: &Servos,
    state: &WorldState,
    kind: ActionKind,
    rho: &[f64],
    rng: &mut R,
) -> Result<(WorldState, StepFlag)> {
    if rho.len() != kind.param_dim() {
        return Err(AtgError::DimensionMismatch {
            expected: kind.param_dim(),
            found: rho.len(),
        });
    }
    let mut next = state.clone();
    match kind {
        ActionKind::Orbit => {
            let theta = rho[0] + normal(rng, config.act_noise_sigma);
            let reached = servos.orbit.converge(&[state.azimuth], &[state.azimuth + theta])?[0];
            let moved = reached - state.azimuth;
            next.azimuth = wrap_2pi(reached);
            if state.held {
                next.object_yaw = state.object_yaw + moved;
                next.pre_grasp_azimuth = state.pre_grasp_azimuth.map(|a| wrap_2pi(a + moved));
            }
            Ok((next, StepFlag::Moved))
        }
        ActionKind::Grasp => {
            if state.held {
                return Ok((next, StepFlag::NoOp));
            }
            servos.hands.converge(&[0.0; 3], rho)?;
            let inside = rho[0].abs() <= config.grasp_tol_xy
                && rho[1].abs() <= config.grasp_tol_xy
                && rho[2].abs() <= config.grasp_tol_z;
            let face = grasp_face(sector_of(state.relative_bearing(), config.sector_half_width));
            let contacts = contacts_for(face, rho, config.cube_side);
            if !inside || !grasp_residuals(&contacts).is_valid(config.residual_tol) {
                next.contacts = None;
                return Ok((next, StepFlag::GraspFailed));
            }
            let aligned = wrap_2pi(state.object_yaw + face as f64 * FRAC_PI_2);
            next.azimuth = aligned;
            next.pre_grasp_azimuth = Some(aligned);
            next.held = true;
            next.contacts = Some(contacts);
            Ok((next, StepFlag::Moved))
        }
        ActionKind::Release => {
            if !state.held {
                return Ok((next, StepFlag::NoOp));
            }
            next.held = false;
            next.azimuth = state.pre_grasp_azimuth.unwrap_or(state.azimuth);
            next.pre_grasp_azimuth = None;
            next.contacts = None;
            Ok((next, StepFlag::Moved))
        }
    }
}

/// Sensor readings for a state; noise is added when `rng` is given.
fn render<R: Rng>(state: &WorldState, config: &SimConfig, mut rng: Option<&mut R>) -> Vec<FeatureDetection<f64>> {
    let beta = state.relative_bearing();
    let right = [-beta.sin(), beta.cos(), 0.0];
    let sector = sector_of(beta, config.sector_half_width);
    let mut dets = Vec::new();
    for face in visible_faces(sector) {
        let center = face_center(face, config.cube_side);
        let image = [
            center.iter().zip(&right).map(|(p, r)| p * r).sum(),
            center[2],
        ];
        let pos = match rng.as_deref_mut() {
            Some(r) => center.map(|x| x + normal(r, config.obs_noise_sigma)),
            None => center,
        };
        dets.push(FeatureDetection::visual(TAG_TYPE, &face.to_string(), pos, image));
    }
    if let (true, Some(c)) = (state.held, &state.contacts) {
        let pos = match rng {
            Some(r) => c.centroid.map(|x| x + normal(r, config.obs_noise_sigma)),
            None => c.centroid,
        };
        dets.push(FeatureDetection::tactile(TACTILE_TYPE, TACTILE_VALUE, pos));
    }
    dets
}

pub fn visible_detections<R: Rng>(state: &WorldState, config: &SimConfig, rng: &mut R) -> Vec<FeatureDetection<f64>> {
    render(state, config, Some(rng))
}

/// Aspect key the sensors would report without noise.
pub fn true_aspect(state: &WorldState, config: &SimConfig) -> String {
    let dets = render::<ChaCha8Rng>(state, config, None);
    detections_key(&order_features(&dets))
}

/// Cached controllers for the orbit base and the hands.
#[derive(Clone, Debug)]
pub struct Servos {
    orbit: Servo,
    hands: Servo,
}

impl Servos {
    pub fn new(config: &SimConfig) -> Result<Self> {
        // The base is driven by arc length; bearing changes by 1/r per meter.
        let orbit = Servo::new(Matrix::from_rows(&[vec![1.0 / config.orbit_radius]])?, config.kappa)?;
        let rows: Vec<Vec<f64>> = HAND_JACOBIAN.iter().map(|r| r.to_vec()).collect();
        let hands = Servo::new(Matrix::from_rows(&rows)?, config.kappa)?;
        Ok(Self { orbit, hands })
    }
}

/// A simulated world with its own noise stream.
#[derive(Clone, Debug)]
pub struct SimWorld {
    config: SimConfig,
    servos: Servos,
    state: WorldState,
    rng: ChaCha8Rng,
}

impl SimWorld {
    pub fn new(config: SimConfig, seed: u64) -> Result<Self> {
        let (state, rng) = reset(&config, seed)?;
        Ok(Self {
            servos: Servos::new(&config)?,
            config,
            state,
            rng,
        })
    }

    /// Starts from an explicit state; used for noise-free sweeps.
    pub fn with_state(config: SimConfig, state: WorldState, seed: u64) -> Result<Self> {
        let mut world = Self::new(config, seed)?;
        world.state = state;
        Ok(world)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn true_aspect(&self) -> String {
        true_aspect(&self.state, &self.config)
    }

    pub fn act(&mut self, kind: ActionKind, rho: &[f64]) -> Result<StepFlag> {
        let (next, flag) = step(&self.config, &self.servos, &self.state, kind, rho, &mut self.rng)?;
        self.state = next;
        Ok(flag)
    }

    pub fn sense(&mut self) -> Vec<FeatureDetection<f64>> {
        visible_detections(&self.state, &self.config, &mut self.rng)
    }
}

/// Bearing of the center of sector `k` relative to the object.
pub fn sector_center(k: usize) -> f64 {
    k as f64 * PI / 4.0
}

/// Representative of a state's aspect: a free robot moves to the center of
/// its sector; a grasp is already aligned with its face.
pub fn canonical_state(state: &WorldState, config: &SimConfig) -> WorldState {
    if state.held {
        return state.clone();
    }
    let k = sector_of(state.relative_bearing(), config.sector_half_width);
    WorldState::at(state.object_yaw + sector_center(k), state.object_yaw)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet() -> SimConfig {
        SimConfig::default().noise_free()
    }

    fn world_at(bearing: f64) -> SimWorld {
        SimWorld::with_state(quiet(), WorldState::at(bearing, 0.0), 1).unwrap()
    }

    #[test]
    fn reset_is_deterministic() {
        let c = SimConfig::default();
        let (a, _) = reset(&c, 9).unwrap();
        assert_eq!(a, reset(&c, 9).unwrap().0);
        assert!(!a.held);
        assert_eq!(a.azimuth, 0.0);
    }

    #[test]
    fn orbit_quarter_turn() {
        let mut w = world_at(0.0);
        w.act(ActionKind::Orbit, &[PI / 4.0]).unwrap();
        assert!((w.state().azimuth - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn corner_key_matches_tag_order() {
        assert_eq!(world_at(7.0 * PI / 4.0).true_aspect(), "ARtag:3;ARtag:0");
        assert_eq!(world_at(0.0).true_aspect(), "ARtag:0");
        assert_eq!(world_at(PI / 4.0).true_aspect(), "ARtag:0;ARtag:1");
    }

    #[test]
    fn face_on_and_corner_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = SimConfig::default();
        assert_eq!(visible_detections(&WorldState::at(0.0, 0.0), &c, &mut rng).len(), 1);
        assert_eq!(visible_detections(&WorldState::at(PI / 4.0, 0.0), &c, &mut rng).len(), 2);
    }

    #[test]
    fn sweep_gives_eight_keys() {
        let keys: std::collections::BTreeSet<String> =
            (0..720).map(|i| world_at(i as f64 * TAU / 720.0).true_aspect()).collect();
        assert_eq!(keys.len(), 8);
    }

    #[test]
    fn grasp_and_release_face_on() {
        let mut w = world_at(PI);
        let before = w.true_aspect();
        assert_eq!(w.act(ActionKind::Grasp, &[0.0; 3]).unwrap(), StepFlag::Moved);
        assert!(w.state().held);
        let r = grasp_residuals(w.state().contacts.as_ref().unwrap());
        assert!(r.net_force2 < 1e-20 && r.net_moment2 < 1e-20);
        assert_eq!(w.true_aspect(), "ARtag:2;tactile:grasp");
        assert_eq!(w.act(ActionKind::Grasp, &[0.0; 3]).unwrap(), StepFlag::NoOp);
        w.act(ActionKind::Orbit, &[1.3]).unwrap();
        assert_eq!(w.true_aspect(), "ARtag:2;tactile:grasp");
        assert_eq!(w.act(ActionKind::Release, &[]).unwrap(), StepFlag::Moved);
        assert_eq!(w.true_aspect(), before);
        assert_eq!(w.act(ActionKind::Release, &[]).unwrap(), StepFlag::NoOp);
    }

    #[test]
    fn grasp_outside_box_fails() {
        let mut w = world_at(0.0);
        assert_eq!(
            w.act(ActionKind::Grasp, &[0.0, 0.0, 0.081]).unwrap(),
            StepFlag::GraspFailed
        );
        assert!(!w.state().held);
        assert_eq!(w.act(ActionKind::Grasp, &[0.1, -0.1, 0.08]).unwrap(), StepFlag::Moved);
    }

    #[test]
    fn corner_grasp_takes_ccw_face() {
        let mut w = world_at(7.0 * PI / 4.0);
        w.act(ActionKind::Grasp, &[0.0; 3]).unwrap();
        assert_eq!(w.true_aspect(), "ARtag:0;tactile:grasp");
    }

    #[test]
    fn bad_sector_width_rejected() {
        let c = SimConfig {
            sector_half_width: 0.3,
            ..SimConfig::default()
        };
        assert!(matches!(c.validate(), Err(AtgError::Config { .. })));
    }
}
