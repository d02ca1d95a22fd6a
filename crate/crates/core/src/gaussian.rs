//! Gaussian fits over edge parameter samples and the covariance norm used
//! by the intrinsic reward.

use serde::{Deserialize, Serialize};

use crate::error::{AtgError, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Relative tolerance for the symmetry check in [`spectral_norm`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct GaussianDist<T> {
    pub mean: Vec<T>,
    pub cov: Matrix<T>,
    pub n_samples: usize,
}

impl<T: Real> GaussianDist<T> {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Draws `mean + V sqrt(Λ) z` with `z` standard normal; `normals` must
    /// supply one draw per dimension.
    pub fn sample_with(&self, normals: &[T]) -> Result<Vec<T>> {
        if normals.len() != self.dim() {
            return Err(AtgError::DimensionMismatch {
                expected: self.dim(),
                found: normals.len(),
            });
        }
        if self.dim() == 0 {
            return Ok(Vec::new());
        }
        let (vals, vecs) = self.cov.symmetric_eigen()?;
        let scaled: Vec<T> = vals
            .iter()
            .zip(normals)
            .map(|(&l, &z)| l.max(T::zero()).sqrt() * z)
            .collect();
        let offset = vecs.mul_vec(&scaled)?;
        Ok(self.mean.iter().zip(offset).map(|(&m, o)| m + o).collect())
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::TAU();
    let mut r = a % two_pi;
    if r <= -T::PI() {
        r = r + two_pi;
    } else if r > T::PI() {
        r = r - two_pi;
    }
    r
}

/// Absolute angular difference, in `[0, π]`.
pub fn circular_distance<T: Real>(a: T, b: T) -> T {
    wrap_angle(a - b).abs()
}

fn check_dims<T>(samples: &[Vec<T>]) -> Result<usize> {
    let dim = samples.first().ok_or(AtgError::EmptySamples)?.len();
    if let Some(bad) = samples.iter().find(|s| s.len() != dim) {
        return Err(AtgError::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    Ok(dim)
}

/// Sample mean and unbiased covariance; a single sample gets `thin_var·I`.
pub fn fit_gaussian<T: Real>(samples: &[Vec<T>], thin_var: T) -> Result<GaussianDist<T>> {
    let dim = check_dims(samples)?;
    let n = samples.len();
    let nt = T::from_count(n);
    let mut mean = vec![T::zero(); dim];
    for s in samples {
        for (m, &x) in mean.iter_mut().zip(s) {
            *m = *m + x;
        }
    }
    for m in &mut mean {
        *m = *m / nt;
    }
    if n == 1 {
        return Ok(GaussianDist {
            mean,
            cov: Matrix::identity(dim).scale(thin_var),
            n_samples: 1,
        });
    }
    let deviations: Vec<Vec<T>> = samples
        .iter()
        .map(|s| s.iter().zip(&mean).map(|(&x, &m)| x - m).collect())
        .collect();
    let cov = scatter(&deviations, dim, T::from_count(n - 1));
    Ok(GaussianDist {
        mean,
        cov: regularize(cov, thin_var)?,
        n_samples: n,
    })
}

/// One-dimensional fit for angles: circular mean, and the unbiased variance
/// of the wrapped deviations from that mean.
pub fn fit_circular<T: Real>(samples: &[Vec<T>], thin_var: T) -> Result<GaussianDist<T>> {
    let dim = check_dims(samples)?;
    if dim != 1 {
        return Err(AtgError::DimensionMismatch {
            expected: 1,
            found: dim,
        });
    }
    let n = samples.len();
    let (s, c) = samples.iter().fold((T::zero(), T::zero()), |(s, c), x| {
        (s + x[0].sin(), c + x[0].cos())
    });
    let nt = T::from_count(n);
    let mean = wrap_angle((s / nt).atan2(c / nt));
    if n == 1 {
        return Ok(GaussianDist {
            mean: vec![wrap_angle(samples[0][0])],
            cov: Matrix::identity(1).scale(thin_var),
            n_samples: 1,
        });
    }
    let deviations: Vec<Vec<T>> = samples
        .iter()
        .map(|x| vec![wrap_angle(x[0] - mean)])
        .collect();
    let cov = scatter(&deviations, 1, T::from_count(n - 1));
    Ok(GaussianDist {
        mean: vec![mean],
        cov: regularize(cov, thin_var)?,
        n_samples: n,
    })
}

fn scatter<T: Real>(deviations: &[Vec<T>], dim: usize, divisor: T) -> Matrix<T> {
    let mut cov = Matrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let sum = deviations
                .iter()
                .fold(T::zero(), |acc, d| acc + d[i] * d[j]);
            cov[(i, j)] = sum / divisor;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    cov
}

/// Adds `thin_var·I` when rounding has pushed the smallest eigenvalue below zero.
fn regularize<T: Real>(cov: Matrix<T>, thin_var: T) -> Result<Matrix<T>> {
    if cov.rows() == 0 {
        return Ok(cov);
    }
    let (vals, _) = cov.symmetric_eigen()?;
    let min = vals.iter().fold(T::infinity(), |acc, &v| acc.min(v));
    if min < T::zero() {
        cov.add(&Matrix::identity(cov.rows()).scale(thin_var))
    } else {
        Ok(cov)
    }
}

/// Largest eigenvalue of a symmetric PSD matrix, i.e. its 2-norm.
pub fn spectral_norm<T: Real>(cov: &Matrix<T>) -> Result<T> {
    if !cov.is_square() {
        return Err(AtgError::DimensionMismatch {
            expected: cov.rows(),
            found: cov.cols(),
        });
    }
    if cov.rows() == 0 {
        return Ok(T::zero());
    }
    let asym = cov.asymmetry();
    let scale = cov.max_abs().max(T::one());
    if asym > T::lit(SYMMETRY_TOLERANCE) * scale {
        return Err(AtgError::Asymmetric(asym.to_f64().unwrap_or(f64::NAN)));
    }
    let (vals, _) = cov.symmetric_eigen()?;
    let max = vals.iter().fold(T::neg_infinity(), |acc, &v| acc.max(v));
    Ok(max.max(T::zero()))
}
