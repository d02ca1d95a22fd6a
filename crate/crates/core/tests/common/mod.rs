//! Independent reference implementations shared by the oracle and acceptance tests.

#![allow(dead_code, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod props;

use atg_core::eval::{mean, sample_variance, welch_p};
use atg_core::gaussian::{fit_gaussian, spectral_norm};
use atg_core::linalg::Matrix;
use atg_core::sim::controller_step;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gauss(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| (0..cols).map(|_| gauss(rng)).collect()).collect()
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n)
        .map(|i| (0..m).map(|j| (0..k).map(|t| a[i][t] * b[t][j]).sum()).collect())
        .collect()
}

fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// `B Bᵀ` for a random `n × r` factor; rank-deficient when `r < n`.
pub fn random_psd(rng: &mut impl Rng, n: usize) -> Vec<Vec<f64>> {
    let r = rng.random_range(1..=n + 1);
    let scale = 10f64.powf(rng.random_range(-3.0..2.0));
    let b = random_matrix(rng, n, r);
    mat_mul(&b, &transpose(&b))
        .into_iter()
        .map(|row| row.into_iter().map(|x| x * scale).collect())
        .collect()
}

/// Largest eigenvalue of a PSD matrix by repeated squaring (power iteration
/// with step 2^k) followed by a Rayleigh quotient.
pub fn power_iteration_norm(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let frob = |m: &[Vec<f64>]| m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    if frob(a) == 0.0 {
        return 0.0;
    }
    let mut p: Vec<Vec<f64>> = a.to_vec();
    for _ in 0..64 {
        let f = frob(&p);
        p = p.iter().map(|r| r.iter().map(|x| x / f).collect()).collect();
        p = mat_mul(&p, &p);
    }
    // The dominant eigenvector is the largest column of the projector.
    let col = (0..n)
        .max_by(|&i, &j| {
            let ci: f64 = p.iter().map(|r| r[i] * r[i]).sum();
            let cj: f64 = p.iter().map(|r| r[j] * r[j]).sum();
            ci.total_cmp(&cj)
        })
        .unwrap();
    let mut v: Vec<f64> = p.iter().map(|r| r[col]).collect();
    for _ in 0..8 {
        let w: Vec<f64> = a.iter().map(|r| r.iter().zip(&v).map(|(x, y)| x * y).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        v = w.into_iter().map(|x| x / norm).collect();
    }
    let av: Vec<f64> = a.iter().map(|r| r.iter().zip(&v).map(|(x, y)| x * y).sum()).collect();
    av.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>() / v.iter().map(|x| x * x).sum::<f64>()
}

/// Worst relative gap between `spectral_norm` and the oracle.
pub fn spectral_norm_gap(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let n = rng.random_range(1..=6);
        let a = random_psd(&mut rng, n);
        let got = spectral_norm(&Matrix::from_rows(&a).unwrap()).unwrap();
        let want = power_iteration_norm(&a);
        worst = worst.max((got - want).abs() / want.abs().max(1.0));
    }
    worst
}

/// Covariance from pairwise differences: `Σ_ab (x_a − x_b)(x_a − x_b)ᵀ / (2n(n−1))`.
pub fn pairwise_covariance(samples: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = samples.len() as f64;
    let d = samples[0].len();
    let mut cov = vec![vec![0.0; d]; d];
    for a in samples {
        for b in samples {
            for i in 0..d {
                for j in 0..d {
                    cov[i][j] += (a[i] - b[i]) * (a[j] - b[j]);
                }
            }
        }
    }
    cov.iter()
        .map(|r| r.iter().map(|x| x / (2.0 * n * (n - 1.0))).collect())
        .collect()
}

pub fn fit_gaussian_gap(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let d = rng.random_range(1..=4);
        let n = rng.random_range(d + 2..d + 30);
        let offset = rng.random_range(-2.0..2.0);
        let samples: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| offset + gauss(&mut rng)).collect())
            .collect();
        let fit = fit_gaussian(&samples, 1e-6).unwrap();
        let cov = pairwise_covariance(&samples);
        for i in 0..d {
            let m: f64 = samples.iter().map(|s| s[i]).sum::<f64>() / n as f64;
            worst = worst.max((fit.mean[i] - m).abs());
            for j in 0..d {
                worst = worst.max((fit.cov[(i, j)] - cov[i][j]).abs());
            }
        }
    }
    worst
}

/// Worst residual of `J Δu − κ Δφ` over random full-row-rank Jacobians.
pub fn controller_gap(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let m = rng.random_range(1..=4);
        let n = rng.random_range(m..=6);
        let j = random_matrix(&mut rng, m, n);
        let jm = Matrix::from_rows(&j).unwrap();
        let kappa = rng.random_range(0.05..1.0);
        let dphi: Vec<f64> = (0..m).map(|_| gauss(&mut rng)).collect();
        let du = controller_step(&dphi, &jm, kappa).unwrap();
        for (row, target) in j.iter().zip(&dphi) {
            let got: f64 = row.iter().zip(&du).map(|(a, b)| a * b).sum();
            worst = worst.max((got - kappa * target).abs());
        }
    }
    worst
}

/// `ln Γ(x)` by upward recurrence to `x ≥ 10` and the Stirling series.
pub fn stirling_ln_gamma(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 10.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0)))));
    shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Two-sided Student-t tail by adaptive quadrature of the density on `[0, |t|]`.
pub fn t_two_sided_quadrature(t: f64, df: f64) -> f64 {
    let ln_c = stirling_ln_gamma((df + 1.0) / 2.0) - stirling_ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    let density = |x: f64| (ln_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp();
    let t = t.abs();
    // Split so the adaptive rule sees the peak and the tail separately.
    let mut inner = 0.0;
    let mut lo = 0.0;
    for hi in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0, 256.0, 1e4, 1e6] {
        let hi = f64::min(hi, t);
        if hi > lo {
            inner += integrate(density, lo, hi, 1e-13);
            lo = hi;
        }
    }
    if t > lo {
        inner += integrate(density, lo, t, 1e-13);
    }
    (1.0 - 2.0 * inner).clamp(0.0, 1.0)
}

/// Welch statistic and Welch–Satterthwaite degrees of freedom from scratch.
pub fn welch_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let (vx, vy) = (sample_variance(xs).unwrap(), sample_variance(ys).unwrap());
    let (nx, ny) = (xs.len() as f64, ys.len() as f64);
    let (a, b) = (vx / nx, vy / ny);
    let t = (mean(xs) - mean(ys)) / (a + b).sqrt();
    let df = (a + b).powi(2) / (a * a / (nx - 1.0) + b * b / (ny - 1.0));
    t_two_sided_quadrature(t, df)
}

pub fn welch_gap(cases: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let nx = rng.random_range(2..12);
        let ny = rng.random_range(2..12);
        let shift = rng.random_range(-3.0..3.0);
        let sy = 10f64.powf(rng.random_range(-1.0..1.0));
        let xs: Vec<f64> = (0..nx).map(|_| gauss(&mut rng)).collect();
        let ys: Vec<f64> = (0..ny).map(|_| shift + sy * gauss(&mut rng)).collect();
        let got = welch_p(&xs, &ys).unwrap();
        worst = worst.max((got - welch_oracle(&xs, &ys)).abs());
    }
    worst
}
