use super::{CsrMatrix, FemError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgOptions {
    /// Relative residual ‖Ax − b‖/‖b‖ target.
    pub tol: f64,
    /// Defaults to 10·dim when `None`.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { tol: 1e-10, max_iter: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn solve_linear(a: &CsrMatrix, b: &[f64], opts: CgOptions) -> Result<Vec<f64>, FemError> {
    solve_linear_from(a, b, vec![0.0; b.len()], opts).map(|(x, _)| x)
}

/// Jacobi-preconditioned conjugate gradients from the initial guess `x`.
pub fn solve_linear_from(
    a: &CsrMatrix,
    b: &[f64],
    mut x: Vec<f64>,
    opts: CgOptions,
) -> Result<(Vec<f64>, CgStats), FemError> {
    let n = a.dim();
    if b.len() != n || x.len() != n {
        return Err(FemError::DimensionMismatch { expected: n, found: b.len().min(x.len()) });
    }
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], CgStats { iterations: 0, relative_residual: 0.0 }));
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = a.mul_vec(&x);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut rnorm = dot(&r, &r).sqrt();
    if rnorm <= opts.tol * bnorm {
        return Ok((x, CgStats { iterations: 0, relative_residual: rnorm / bnorm }));
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(FemError::NoConvergence { iterations: it, residual: rnorm / bnorm });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rnorm = dot(&r, &r).sqrt();
        if !rnorm.is_finite() {
            return Err(FemError::NoConvergence { iterations: it, residual: rnorm });
        }
        if rnorm <= opts.tol * bnorm {
            return Ok((x, CgStats { iterations: it, relative_residual: rnorm / bnorm }));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(FemError::NoConvergence { iterations: max_iter, residual: rnorm / bnorm })
}
