use crate::error::{AtgError, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// One gradient step of a control-basis controller: `Δu = κ J# Δφ`.
pub fn controller_step<T: Real>(delta_phi: &[T], jacobian: &Matrix<T>, kappa: T) -> Result<Vec<T>> {
    if kappa.is_nan() || kappa <= T::zero() {
        return Err(AtgError::config("kappa", "controller gain must be positive"));
    }
    if delta_phi.len() != jacobian.rows() {
        return Err(AtgError::DimensionMismatch {
            expected: jacobian.rows(),
            found: delta_phi.len(),
        });
    }
    let du = jacobian.pseudo_inverse().mul_vec(delta_phi)?;
    Ok(du.into_iter().map(|x| x * kappa).collect())
}

/// A controller bound to a fixed Jacobian; the pseudoinverse is computed once.
#[derive(Clone, Debug)]
pub struct Servo {
    jacobian: Matrix<f64>,
    pinv: Matrix<f64>,
    kappa: f64,
}

const SERVO_TOLERANCE: f64 = 1e-12;
const SERVO_MAX_ITERS: usize = 10_000;

impl Servo {
    pub fn new(jacobian: Matrix<f64>, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(AtgError::config("kappa", "must lie in (0, 1]"));
        }
        Ok(Self {
            pinv: jacobian.pseudo_inverse(),
            jacobian,
            kappa,
        })
    }

    /// Iterates `u += κ J# (φ* − φ)`, `φ += J Δu` from `phi` until the error
    /// vanishes, returning the final controlled value.
    pub fn converge(&self, phi: &[f64], target: &[f64]) -> Result<Vec<f64>> {
        let mut phi = phi.to_vec();
        for _ in 0..SERVO_MAX_ITERS {
            let err: Vec<f64> = target.iter().zip(&phi).map(|(t, p)| t - p).collect();
            if err.iter().all(|e| e.abs() <= SERVO_TOLERANCE) {
                return Ok(phi);
            }
            let du: Vec<f64> = self.pinv.mul_vec(&err)?.into_iter().map(|x| x * self.kappa).collect();
            let dphi = self.jacobian.mul_vec(&du)?;
            for (p, d) in phi.iter_mut().zip(dphi) {
                *p += d;
            }
        }
        Err(AtgError::Environment("servo failed to converge".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_step() {
        let j = Matrix::from_rows(&[vec![2.0]]).unwrap();
        assert_eq!(controller_step(&[1.0], &j, 0.5).unwrap(), vec![0.25]);
    }

    #[test]
    fn zero_jacobian_gives_zero_step() {
        let j = Matrix::<f64>::zeros(1, 1);
        assert_eq!(controller_step(&[1.0], &j, 0.5).unwrap(), vec![0.0]);
    }

    #[test]
    fn rejects_bad_gain() {
        let j = Matrix::<f64>::identity(2);
        assert!(controller_step(&[1.0, 1.0], &j, 0.0).is_err());
        assert!(Servo::new(j, 1.5).is_err());
    }

    #[test]
    fn servo_reaches_target() {
        let j = Matrix::from_rows(&[vec![0.5, 0.1, 0.0], vec![0.0, 0.4, 0.1], vec![0.1, 0.0, 0.3]]).unwrap();
        let servo = Servo::new(j, 0.5).unwrap();
        let out = servo.converge(&[0.0; 3], &[0.1, -0.05, 0.02]).unwrap();
        for (o, t) in out.iter().zip([0.1, -0.05, 0.02]) {
            assert!((o - t).abs() <= 1e-12);
        }
    }
}
