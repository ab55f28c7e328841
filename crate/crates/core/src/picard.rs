//! Lagged fixed-point iteration shared by the microscopic and homogenized
//! solvers.
//!
//! Each sweep solves, per species i, `K_i s_i = M·R_i(u⁺) + A_i u_i − B_i F_i(u_i⁺)`
//! with the nonlinear terms frozen at the previous iterate (u⁺ = max(u, 0)),
//! then relaxes `u ← ω s + (1 − ω) u`.

use crate::error::{Error, Result};
use crate::expr::ReactionExpr;
use crate::fem::{solve_linear_from, CgOptions, CsrMatrix, DofMap, Field};
use crate::geometry::Mesh;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardOptions {
    /// Stop when ‖u^{n+1} − u^n‖_V ≤ tol·‖u^{n+1}‖_V.
    pub tol: f64,
    pub max_iter: usize,
    /// Under-relaxation factor in (0, 1].
    pub omega: f64,
    pub cg: CgOptions,
    /// Keep every iterate in the report (memory grows with the iteration count).
    pub keep_iterates: bool,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            tol: 1e-8,
            max_iter: 200,
            omega: 0.8,
            cg: CgOptions { tol: 1e-12, max_iter: None },
            keep_iterates: false,
        }
    }
}

/// Inputs of the contraction bound κ_p = C_p α⁻¹ max L_i N.
#[derive(Clone, Debug, PartialEq)]
pub struct KappaEstimate {
    pub kappa_hat: Option<f64>,
    pub poincare: f64,
    pub alpha: f64,
    pub lipschitz: Vec<f64>,
    pub n_species: usize,
    pub kappa_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PicardReport {
    /// ‖u^{n+1} − u^n‖_V for n = 0, 1, ...
    pub residuals: Vec<f64>,
    /// ‖u^{n+1}‖_V for n = 0, 1, ...
    pub norms: Vec<f64>,
    pub omega: f64,
    pub tol: f64,
    pub converged: bool,
    /// Filled in by the contraction estimate.
    pub kappa: Option<KappaEstimate>,
    /// u^0, u^1, ... when requested.
    pub iterates: Vec<Field>,
}

impl PicardReport {
    pub fn iterations(&self) -> usize {
        self.residuals.len()
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.residuals.last().copied()
    }

    /// Successive residual ratios; the first entry has no predecessor.
    pub fn ratios(&self) -> Vec<Option<f64>> {
        (0..self.residuals.len())
            .map(|n| {
                (n > 0 && self.residuals[n - 1] > 0.0).then(|| self.residuals[n] / self.residuals[n - 1])
            })
            .collect()
    }

    /// Geometric mean of the successive ratios, defined once three residuals
    /// exist and none of them vanished.
    pub fn kappa_hat(&self) -> Option<f64> {
        let r = &self.residuals;
        if r.len() < 3 || r.iter().any(|&x| !(x > 0.0)) {
            return None;
        }
        let n = (r.len() - 1) as f64;
        Some((r[r.len() - 1] / r[0]).powf(1.0 / n))
    }

    /// CSV with columns `n,residual,ratio`; comment lines carry metadata.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut s = String::new();
        for c in comments {
            let _ = writeln!(s, "# {c}");
        }
        let _ = writeln!(s, "# omega {}", self.omega);
        let _ = writeln!(s, "# tol {}", self.tol);
        let _ = writeln!(s, "# converged {}", self.converged);
        match self.kappa_hat() {
            Some(k) => {
                let _ = writeln!(s, "# kappa_hat {k}");
            }
            None => {
                let _ = writeln!(s, "# kappa_hat undefined");
            }
        }
        if let Some(k) = &self.kappa {
            let _ = writeln!(s, "# poincare {}", k.poincare);
            let _ = writeln!(s, "# alpha {}", k.alpha);
            let l: Vec<String> = k.lipschitz.iter().map(|x| x.to_string()).collect();
            let _ = writeln!(s, "# lipschitz {}", l.join(" "));
            let _ = writeln!(s, "# species {}", k.n_species);
            let _ = writeln!(s, "# kappa_bound {}", k.kappa_bound);
        }
        s.push_str("n,residual,ratio\n");
        for (n, (r, q)) in self.residuals.iter().zip(self.ratios()).enumerate() {
            match q {
                Some(q) => {
                    let _ = writeln!(s, "{n},{r:e},{q:e}");
                }
                None => {
                    let _ = writeln!(s, "{n},{r:e},");
                }
            }
        }
        s
    }
}

/// One species' reduced stiffness plus optional lagged zeroth-order terms.
pub(crate) struct SpeciesOperator {
    pub stiffness: CsrMatrix,
    /// Contributes `+A u_i` to the right-hand side.
    pub linear: Option<CsrMatrix>,
    /// Contributes `−B F_i(u_i⁺)` to the right-hand side.
    pub nonlinear: Option<CsrMatrix>,
}

pub(crate) struct PicardSystem<'a> {
    pub mesh: &'a Mesh,
    pub dofs: DofMap,
    pub mass: CsrMatrix,
    pub volume_scale: f64,
    pub ops: Vec<SpeciesOperator>,
    pub reactions: Vec<&'a ReactionExpr>,
    pub surface: Vec<&'a ReactionExpr>,
}

fn eval_nodal(expr: &ReactionExpr, u: &Field) -> Result<Vec<f64>> {
    if expr.is_constant() {
        let c = expr.eval(&vec![0.0; u.n_species()])?;
        return Ok(vec![c; u.n_vertices()]);
    }
    let mut vals = vec![0.0; u.n_species()];
    (0..u.n_vertices())
        .map(|v| {
            for (i, x) in vals.iter_mut().enumerate() {
                *x = u.species(i)[v].max(0.0);
            }
            Ok(expr.eval(&vals)?)
        })
        .collect()
}

impl PicardSystem<'_> {
    fn sweep(&self, u: &Field, cg: CgOptions) -> Result<Field> {
        let mut out = Vec::with_capacity(self.ops.len());
        for (i, op) in self.ops.iter().enumerate() {
            let r = eval_nodal(self.reactions[i], u)?;
            let mut load = self.mass.mul_vec(&r);
            if self.volume_scale != 1.0 {
                load.iter_mut().for_each(|x| *x *= self.volume_scale);
            }
            if let Some(a) = &op.linear {
                let au = a.mul_vec(u.species(i));
                load.iter_mut().zip(au).for_each(|(l, x)| *l += x);
            }
            if let Some(b) = &op.nonlinear {
                let f = eval_nodal(self.surface[i], u)?;
                let bf = b.mul_vec(&f);
                load.iter_mut().zip(bf).for_each(|(l, x)| *l -= x);
            }
            let rhs = self.dofs.reduce_vector(&load);
            let guess = self.dofs.restrict(u.species(i));
            let (x, _) = solve_linear_from(&op.stiffness, &rhs, guess, cg)?;
            out.push(self.dofs.expand(&x));
        }
        Ok(Field::from_species(out))
    }

    pub fn run(&self, u0: Field, opts: &PicardOptions) -> Result<(Field, PicardReport)> {
        let mut report = PicardReport {
            residuals: Vec::new(),
            norms: Vec::new(),
            omega: opts.omega,
            tol: opts.tol,
            converged: false,
            kappa: None,
            iterates: Vec::new(),
        };
        let mut u = u0;
        if opts.keep_iterates {
            report.iterates.push(u.clone());
        }
        for _ in 0..opts.max_iter {
            let s = self.sweep(&u, opts.cg)?;
            let next = if opts.omega == 1.0 {
                s
            } else {
                let vals = s
                    .values()
                    .iter()
                    .zip(u.values())
                    .map(|(a, b)| opts.omega * a + (1.0 - opts.omega) * b)
                    .collect::<Vec<_>>();
                Field::from_species(vals.chunks(u.n_vertices()).map(|c| c.to_vec()).collect())
            };
            let res = next.sub(&u).h1_seminorm(self.mesh);
            let norm = next.h1_seminorm(self.mesh);
            log::debug!("picard n={} residual={res:e} norm={norm:e}", report.residuals.len());
            report.residuals.push(res);
            report.norms.push(norm);
            u = next;
            if opts.keep_iterates {
                report.iterates.push(u.clone());
            }
            if !res.is_finite() || !u.is_finite() {
                return Err(Error::NoConvergence {
                    diagnosis: "iterates became non-finite".into(),
                    report: Box::new(report),
                    partial: Box::new(u),
                });
            }
            if res <= opts.tol * norm {
                report.converged = true;
                return Ok((u, report));
            }
        }
        let diagnosis = match report.ratios().last().copied().flatten() {
            Some(q) if q >= 1.0 => format!("residuals growing, last ratio {q:.3}"),
            Some(q) => format!("contraction too slow for max_iter, last ratio {q:.3}"),
            None => "iteration budget exhausted".to_string(),
        };
        Err(Error::NoConvergence { diagnosis, report: Box::new(report), partial: Box::new(u) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(res: &[f64]) -> PicardReport {
        PicardReport {
            residuals: res.to_vec(),
            norms: vec![1.0; res.len()],
            omega: 1.0,
            tol: 1e-8,
            converged: true,
            kappa: None,
            iterates: Vec::new(),
        }
    }

    #[test]
    fn kappa_hat_is_geometric_mean() {
        let r = report(&[1.0, 0.5, 0.125]);
        assert!((r.kappa_hat().unwrap() - 0.125f64.sqrt()).abs() < 1e-15);
        assert_eq!(report(&[1.0, 0.5]).kappa_hat(), None);
        assert_eq!(report(&[0.0]).kappa_hat(), None);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let csv = report(&[1.0, 0.5]).to_csv(&["config abc".into()]);
        assert!(csv.starts_with("# config abc\n"));
        let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows, ["n,residual,ratio", "0,1e0,", "1,5e-1,5e-1"]);
    }
}
