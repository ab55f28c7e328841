//! Independent reference values that do not go through the finite element code.

use perfhom::fem::Tensor2;
use std::f64::consts::PI;

/// Truncated double sine series for −Δu = 1 on the unit square with u = 0 on
/// the boundary, summed over odd m, n ≤ `max_mode`.
pub fn poisson_series(x: f64, y: f64, max_mode: usize) -> f64 {
    let mut sum = 0.0;
    for m in (1..=max_mode).step_by(2) {
        for n in (1..=max_mode).step_by(2) {
            let (mf, nf) = (m as f64, n as f64);
            let c = 16.0 / (PI.powi(4) * mf * nf * (mf * mf + nf * nf));
            sum += c * (mf * PI * x).sin() * (nf * PI * y).sin();
        }
    }
    sum
}

/// Harmonic mean of a 1-periodic profile by the midpoint rule with `n` nodes.
/// For smooth periodic integrands the rule converges spectrally.
pub fn harmonic_mean_1d(f: impl Fn(f64) -> f64, n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let inv: f64 = (0..n).map(|k| h / f((k as f64 + 0.5) * h)).sum();
    1.0 / inv
}

/// Arithmetic and harmonic means of a Y-periodic coefficient on an n×n
/// midpoint grid.
pub fn cell_means(f: impl Fn([f64; 2]) -> f64, n: usize) -> (f64, f64) {
    let h = 1.0 / n as f64;
    let mut arith = 0.0;
    let mut inv = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v = f([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
            arith += v * h * h;
            inv += h * h / v;
        }
    }
    (arith, 1.0 / inv)
}

/// Eigenvalues (ascending) of the symmetric part of a 2×2 tensor.
pub fn sym_eigenvalues(q: &Tensor2) -> [f64; 2] {
    let a = q[0][0];
    let d = q[1][1];
    let b = 0.5 * (q[0][1] + q[1][0]);
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    [mean - r, mean + r]
}

/// Least-squares slope of log(err) against log(eps).
pub fn loglog_slope(eps: &[f64], err: &[f64]) -> f64 {
    let n = eps.len() as f64;
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
