//! From raw detections to filtered feature estimates and aspect keys.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{AtgError, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Key of the aspect with no features in view.
pub const EMPTY_ASPECT: &str = "∅";

/// Default measurement noise standard deviation (meters).
pub const DEFAULT_MEAS_SIGMA: f64 = 0.01;
/// Default prior position standard deviation (meters).
pub const DEFAULT_PRIOR_SIGMA: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureDetection<T> {
    pub ftype: String,
    pub value: String,
    /// Object-frame position (meters).
    pub pos: [T; 3],
    /// Camera-plane coordinates, `x` to the right and `y` up. Visual only.
    pub image_xy: Option<[T; 2]>,
}

impl<T: Real> FeatureDetection<T> {
    pub fn visual(ftype: &str, value: &str, pos: [T; 3], image_xy: [T; 2]) -> Self {
        Self {
            ftype: ftype.into(),
            value: value.into(),
            pos,
            image_xy: Some(image_xy),
        }
    }

    pub fn tactile(ftype: &str, value: &str, pos: [T; 3]) -> Self {
        Self {
            ftype: ftype.into(),
            value: value.into(),
            pos,
            image_xy: None,
        }
    }

    pub fn is_visual(&self) -> bool {
        self.image_xy.is_some()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KalmanTrack<T> {
    pub ftype: String,
    pub value: String,
    pub mean: [T; 3],
    pub cov: Matrix<T>,
    pub n_obs: u64,
}

impl<T: Real> KalmanTrack<T> {
    pub fn new(ftype: &str, value: &str, mean: [T; 3], cov: Matrix<T>) -> Self {
        Self {
            ftype: ftype.into(),
            value: value.into(),
            mean,
            cov,
            n_obs: 0,
        }
    }
}

/// Static-state Kalman update: `K = P(P+R)⁻¹`, `μ' = μ + K(z − μ)`,
/// `P' = (I − K)P`.
pub fn kf_update<T: Real>(track: &KalmanTrack<T>, z: [T; 3], meas_noise: &Matrix<T>) -> Result<KalmanTrack<T>> {
    if meas_noise.rows() != 3 || meas_noise.cols() != 3 {
        return Err(AtgError::DimensionMismatch {
            expected: 3,
            found: meas_noise.rows(),
        });
    }
    let p = &track.cov;
    let s = p.add(meas_noise)?;
    let k = p.matmul(&s.inverse()?)?;
    let innovation: Vec<T> = z.iter().zip(&track.mean).map(|(&zi, &mi)| zi - mi).collect();
    let correction = k.mul_vec(&innovation)?;
    let mut mean = track.mean;
    for (m, c) in mean.iter_mut().zip(correction) {
        *m = *m + c;
    }
    let cov = Matrix::identity(3).sub(&k)?.matmul(p)?.symmetrized();
    Ok(KalmanTrack {
        ftype: track.ftype.clone(),
        value: track.value.clone(),
        mean,
        cov,
        n_obs: track.n_obs + 1,
    })
}

fn cmp_scalar<T: Real>(a: T, b: T) -> Ordering {
    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
}

fn cmp_identity<T>(a: &FeatureDetection<T>, b: &FeatureDetection<T>) -> Ordering {
    (&a.ftype, &a.value).cmp(&(&b.ftype, &b.value))
}

/// Visual detections left to right, then bottom to top; tactile detections
/// follow, sorted by `(ftype, value)`.
pub fn order_features<T: Real>(detections: &[FeatureDetection<T>]) -> Vec<FeatureDetection<T>> {
    let (mut visual, mut tactile): (Vec<_>, Vec<_>) =
        detections.iter().cloned().partition(|d| d.is_visual());
    visual.sort_by(|a, b| {
        let (pa, pb) = (a.image_xy.unwrap(), b.image_xy.unwrap());
        cmp_scalar(pa[0], pb[0])
            .then_with(|| cmp_scalar(pa[1], pb[1]))
            .then_with(|| cmp_identity(a, b))
    });
    tactile.sort_by(cmp_identity);
    visual.extend(tactile);
    visual
}

fn escape_into(out: &mut String, s: &str) {
    for c in s.chars() {
        if matches!(c, ':' | ';' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
}

/// `ftype:value` tokens joined with `;`. Separators inside either field are
/// backslash-escaped so distinct sequences never share a key.
pub fn aspect_key<S: AsRef<str>>(ordered: &[(S, S)]) -> String {
    if ordered.is_empty() {
        return EMPTY_ASPECT.to_owned();
    }
    let mut key = String::new();
    for (i, (ftype, value)) in ordered.iter().enumerate() {
        if i > 0 {
            key.push(';');
        }
        escape_into(&mut key, ftype.as_ref());
        key.push(':');
        escape_into(&mut key, value.as_ref());
    }
    key
}

pub fn detections_key<T>(ordered: &[FeatureDetection<T>]) -> String {
    let pairs: Vec<(&str, &str)> = ordered
        .iter()
        .map(|d| (d.ftype.as_str(), d.value.as_str()))
        .collect();
    aspect_key(&pairs)
}

/// One Kalman track per feature identity.
#[derive(Clone, Debug)]
pub struct Tracker<T> {
    meas_noise: Matrix<T>,
    prior_cov: Matrix<T>,
    tracks: BTreeMap<(String, String), KalmanTrack<T>>,
}

impl<T: Real> Default for Tracker<T> {
    fn default() -> Self {
        Self::new(T::lit(DEFAULT_MEAS_SIGMA), T::lit(DEFAULT_PRIOR_SIGMA))
    }
}

impl<T: Real> Tracker<T> {
    pub fn new(meas_sigma: T, prior_sigma: T) -> Self {
        Self {
            meas_noise: Matrix::identity(3).scale(meas_sigma * meas_sigma),
            prior_cov: Matrix::identity(3).scale(prior_sigma * prior_sigma),
            tracks: BTreeMap::new(),
        }
    }

    pub fn track(&self, ftype: &str, value: &str) -> Option<&KalmanTrack<T>> {
        self.tracks.get(&(ftype.to_owned(), value.to_owned()))
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    /// Folds one detection into its track, starting from the zero-mean prior
    /// the first time the feature is seen.
    pub fn update(&mut self, det: &FeatureDetection<T>) -> Result<&KalmanTrack<T>> {
        let id = (det.ftype.clone(), det.value.clone());
        let current = match self.tracks.get(&id) {
            Some(t) => t.clone(),
            None => KalmanTrack::new(&det.ftype, &det.value, [T::zero(); 3], self.prior_cov.clone()),
        };
        let next = kf_update(&current, det.pos, &self.meas_noise)?;
        self.tracks.insert(id.clone(), next);
        Ok(&self.tracks[&id])
    }
}
