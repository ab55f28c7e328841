//! Two-scale reconstruction ũ₀ + m^ε(ε u₁ + ε² u₂), its error against the
//! microscopic solution, and log-log rate fits over a sequence of ε.

use crate::cell::CellSolution;
use crate::error::{Error, Result};
use crate::fem::{element_gradient, h1_seminorm, l2_norm, Field, Tensor2};
use crate::geometry::{Mesh, PointLocator};
use crate::macro_solver::{recover_gradient, recover_hessian};
use std::fmt;
use std::fmt::Write as _;

/// Orientation of the boundary-layer cut-off m^ε, piecewise linear in the
/// distance to the outer boundary with a transition band between ε and 2ε.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CutoffConvention {
    /// 0 within ε of the outer boundary, 1 beyond 2ε.
    #[default]
    Standard,
    /// 1 within ε of the outer boundary, 0 beyond 2ε. Spelled `paper` in
    /// configuration files and on the command line.
    NearBoundary,
}

impl CutoffConvention {
    pub fn name(self) -> &'static str {
        match self {
            CutoffConvention::Standard => "standard",
            CutoffConvention::NearBoundary => "paper",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "standard" => Some(CutoffConvention::Standard),
            "paper" => Some(CutoffConvention::NearBoundary),
            _ => None,
        }
    }

    /// Profile value at distance `dist` from the outer boundary.
    pub fn profile(self, dist: f64, epsilon: f64) -> f64 {
        let inner = ((dist - epsilon) / epsilon).clamp(0.0, 1.0);
        match self {
            CutoffConvention::Standard => inner,
            CutoffConvention::NearBoundary => 1.0 - inner,
        }
    }
}

impl fmt::Display for CutoffConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cutoff {
    pub values: Vec<f64>,
    /// Largest element gradient of the nodal interpolant.
    pub max_gradient: f64,
}

/// Distance to the boundary of the mesh's bounding rectangle.
fn outer_distance(lo: [f64; 2], hi: [f64; 2], p: [f64; 2]) -> f64 {
    (p[0] - lo[0]).min(hi[0] - p[0]).min(p[1] - lo[1]).min(hi[1] - p[1]).max(0.0)
}

fn bounding_box(mesh: &Mesh) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for v in &mesh.vertices {
        for k in 0..2 {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    (lo, hi)
}

pub fn build_cutoff(mesh: &Mesh, epsilon: f64, convention: CutoffConvention) -> Cutoff {
    let (lo, hi) = bounding_box(mesh);
    let values: Vec<f64> =
        mesh.vertices.iter().map(|&p| convention.profile(outer_distance(lo, hi, p), epsilon)).collect();
    let max_gradient = (0..mesh.n_triangles())
        .map(|t| {
            let g = element_gradient(mesh, &values, t);
            g[0].hypot(g[1])
        })
        .fold(0.0, f64::max);
    Cutoff { values, max_gradient }
}

/// ũ₀ and its first and second derivatives at a point, one entry per species.
#[derive(Clone, Debug, PartialEq)]
pub struct MacroSample {
    pub value: Vec<f64>,
    pub gradient: Vec<[f64; 2]>,
    pub hessian: Vec<Tensor2>,
}

/// Source of the homogenized solution and its derivatives.
pub trait MacroData {
    fn n_species(&self) -> usize;
    fn sample(&self, x: [f64; 2]) -> Option<MacroSample>;
}

/// P1 macro solution with recovered nodal derivatives, interpolated at
/// arbitrary points.
pub struct RecoveredMacro<'a> {
    mesh: &'a Mesh,
    locator: PointLocator<'a>,
    field: &'a Field,
    gradient: Vec<Vec<[f64; 2]>>,
    hessian: Vec<Vec<Tensor2>>,
}

impl<'a> RecoveredMacro<'a> {
    pub fn new(mesh: &'a Mesh, field: &'a Field) -> Self {
        let n = field.n_species();
        RecoveredMacro {
            mesh,
            locator: PointLocator::new(mesh),
            field,
            gradient: (0..n).map(|i| recover_gradient(mesh, field.species(i))).collect(),
            hessian: (0..n).map(|i| recover_hessian(mesh, field.species(i))).collect(),
        }
    }
}

impl MacroData for RecoveredMacro<'_> {
    fn n_species(&self) -> usize {
        self.field.n_species()
    }

    fn sample(&self, x: [f64; 2]) -> Option<MacroSample> {
        let (t, l) = self.locator.locate(x)?;
        let tri = self.mesh.triangles[t];
        let n = self.field.n_species();
        let mut s = MacroSample {
            value: vec![0.0; n],
            gradient: vec![[0.0; 2]; n],
            hessian: vec![[[0.0; 2]; 2]; n],
        };
        for i in 0..n {
            for a in 0..3 {
                let v = tri[a];
                s.value[i] += l[a] * self.field.species(i)[v];
                for j in 0..2 {
                    s.gradient[i][j] += l[a] * self.gradient[i][v][j];
                    for k in 0..2 {
                        s.hessian[i][j][k] += l[a] * self.hessian[i][v][j][k];
                    }
                }
            }
        }
        Some(s)
    }
}

/// Closed-form ũ₀ with exact derivatives, for manufactured solutions.
pub struct AnalyticMacro<F> {
    pub n_species: usize,
    pub eval: F,
}

impl<F: Fn([f64; 2]) -> MacroSample> MacroData for AnalyticMacro<F> {
    fn n_species(&self) -> usize {
        self.n_species
    }

    fn sample(&self, x: [f64; 2]) -> Option<MacroSample> {
        Some((self.eval)(x))
    }
}

/// Nodal reconstruction on the tiled micro mesh for expansion order 0, 1 or 2.
pub fn reconstruct(
    macro_data: &dyn MacroData,
    cell: &CellSolution,
    mesh_eps: &Mesh,
    order: usize,
    cutoff: &Cutoff,
) -> Result<Field> {
    let tiling = mesh_eps
        .tiling
        .as_ref()
        .ok_or_else(|| Error::MeshMismatch("micro mesh carries no tiling provenance".into()))?;
    if tiling.cell_hash != cell.mesh_hash {
        return Err(Error::MeshMismatch(format!(
            "micro mesh was tiled from cell mesh {} but the cell solution belongs to {}",
            tiling.cell_hash, cell.mesh_hash
        )));
    }
    if order > 2 {
        return Err(Error::Validation(format!("expansion order {order} is not one of 0, 1, 2")));
    }
    let theta = match (order, &cell.theta) {
        (2, None) => return Err(Error::Validation("order 2 needs the second cell function".into())),
        (2, Some(t)) => Some(t),
        _ => None,
    };
    let n = macro_data.n_species();
    if n != cell.n_species() {
        return Err(Error::MeshMismatch(format!(
            "macro field has {n} species, cell solution {}",
            cell.n_species()
        )));
    }
    let eps = mesh_eps.epsilon;
    let mut out = vec![vec![0.0; mesh_eps.n_vertices()]; n];
    for (v, &x) in mesh_eps.vertices.iter().enumerate() {
        let s = macro_data
            .sample(x)
            .ok_or_else(|| Error::MeshMismatch(format!("micro vertex ({}, {}) lies outside the macro mesh", x[0], x[1])))?;
        let cv = tiling.cell_vertex[v];
        for i in 0..n {
            let mut corr = 0.0;
            if order >= 1 {
                let chi = &cell.chi[i];
                let u1 = -(chi[0][cv] * s.gradient[i][0] + chi[1][cv] * s.gradient[i][1]);
                corr += eps * u1;
            }
            if let Some(theta) = theta {
                let th = &theta[i];
                let h = &s.hessian[i];
                let u2 = th[0][cv] * h[0][0] + th[1][cv] * h[0][1] + th[2][cv] * h[1][0] + th[3][cv] * h[1][1];
                corr += eps * eps * u2;
            }
            out[i][v] = s.value[i] + cutoff.values[v] * corr;
        }
    }
    Ok(Field::from_species(out))
}

/// (‖∇(u − r)‖_{L²}, ‖u − r‖_{L²}) on the micro mesh.
pub fn corrector_error(u_eps: &Field, reconstruction: &Field, mesh_eps: &Mesh) -> (f64, f64) {
    let diff = u_eps.sub(reconstruction);
    let (mut v, mut l) = (0.0, 0.0);
    for i in 0..diff.n_species() {
        v += h1_seminorm(mesh_eps, diff.species(i)).powi(2);
        l += l2_norm(mesh_eps, diff.species(i)).powi(2);
    }
    (v.sqrt(), l.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    pub h: f64,
    pub order: usize,
    /// ‖u^ε − reconstruction‖_{V^ε}.
    pub err_v: f64,
    /// ‖u^ε − ũ₀‖_{L²(Ω^ε)}.
    pub err_l2: f64,
    /// ‖u^ε‖_{V^ε}, the scale for the degeneracy test.
    pub solution_norm: f64,
    pub picard_iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub order: usize,
    pub rows: Vec<ConvergenceRow>,
    pub slope: Option<f64>,
    pub slope_l2: Option<f64>,
    /// Set when the errors sit at the solver floor and the slope carries no
    /// information.
    pub degenerate: bool,
}

/// Relative error level treated as solver noise.
pub const ERROR_FLOOR: f64 = 1e-6;

/// Least-squares slope of log(err) against log(ε).
pub fn fit_slope(eps: &[f64], err: &[f64]) -> Result<f64> {
    if eps.len() < 3 {
        return Err(Error::InsufficientPoints(eps.len()));
    }
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = err.iter().map(|e| e.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

impl ConvergenceReport {
    /// Sorts rows by decreasing ε and fits both slopes.
    pub fn from_rows(order: usize, mut rows: Vec<ConvergenceRow>) -> Result<Self> {
        if rows.len() < 3 {
            return Err(Error::InsufficientPoints(rows.len()));
        }
        rows.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
        let degenerate = rows.iter().any(|r| !(r.err_v > ERROR_FLOOR * r.solution_norm) || !(r.err_l2 > 0.0));
        let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
        let (slope, slope_l2) = if degenerate {
            (None, None)
        } else {
            let ev: Vec<f64> = rows.iter().map(|r| r.err_v).collect();
            let el: Vec<f64> = rows.iter().map(|r| r.err_l2).collect();
            (Some(fit_slope(&eps, &ev)?), Some(fit_slope(&eps, &el)?))
        };
        Ok(ConvergenceReport { order, rows, slope, slope_l2, degenerate })
    }

    /// CSV with columns `epsilon,h,M,err_Veps,err_L2`, followed by
    /// `slope=` and `slope_L2=` summary lines.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut s = String::new();
        for c in comments {
            let _ = writeln!(s, "# {c}");
        }
        s.push_str("epsilon,h,M,err_Veps,err_L2\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{:e},{:e}", r.epsilon, r.h, r.order, r.err_v, r.err_l2);
        }
        let show = |x: Option<f64>| x.map_or_else(|| "degenerate".to_string(), |v| format!("{v:.6}"));
        let _ = writeln!(s, "slope={}", show(self.slope));
        let _ = writeln!(s, "slope_L2={}", show(self.slope_l2));
        s
    }

    /// Plot script for the CSV written next to it as `csv_name`.
    pub fn gnuplot_script(&self, csv_name: &str) -> String {
        format!(
            "set datafile separator ','\nset logscale xy\nset xlabel 'epsilon'\nset ylabel 'error'\nset key left top\n\
             plot '{csv_name}' every ::1 using 1:4 with linespoints title 'V^eps error (M={})', \\\n     \
             '{csv_name}' every ::1 using 1:5 with linespoints title 'L2 error of u0'\n",
            self.order
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn near_boundary_convention_profile() {
        let eps = 0.125;
        assert_eq!(CutoffConvention::NearBoundary.profile(3.0 * eps, eps), 0.0);
        assert_eq!(CutoffConvention::NearBoundary.profile(0.5 * eps, eps), 1.0);
        assert_eq!(CutoffConvention::Standard.profile(0.5 * eps, eps), 0.0);
        assert_eq!(CutoffConvention::Standard.profile(1.5 * eps, eps), 0.5);
    }

    #[test]
    fn exact_power_law_slope() {
        let eps = [0.25, 0.125, 0.0625];
        let err: Vec<f64> = eps.iter().map(|e: &f64| 3.0 * e.powf(0.7)).collect();
        assert!((fit_slope(&eps, &err).unwrap() - 0.7).abs() < 1e-12);
        assert!(matches!(fit_slope(&eps[..2], &err[..2]), Err(Error::InsufficientPoints(2))));
    }
}
