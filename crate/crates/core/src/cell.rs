//! First and second cell problems on the periodic pore cell Y₁, the
//! effective tensor q and the hole-boundary averages ⟨a⟩, ⟨b⟩.

use crate::error::{Error, Result};
use crate::fem::{
    apply_periodic, assemble_boundary_mass, assemble_stiffness, integral, p1_gradients,
    solve_linear, CgOptions, CsrMatrix, DofMap, Tensor2,
};
use crate::geometry::{BoundaryTag, Mesh};
use crate::problem::ProblemSpec;
use std::fmt::Write as _;

/// Relative compatibility residual above which the second cell problem is
/// rejected.
pub const SOLVABILITY_TOL: f64 = 1e-6;

/// Boundary data for the second cell problem.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum ThetaBoundary {
    /// Homogeneous natural condition on the hole boundary.
    #[default]
    PureDiffusion,
    /// Surface flux b·F(u*) − a·u* frozen at a macroscopic value u* (one per
    /// species), applied to the diagonal components.
    Frozen,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSolution {
    pub mesh_hash: String,
    /// Per species, the two components of χ at the cell mesh vertices.
    pub chi: Vec<[Vec<f64>; 2]>,
    /// Per species, θ components (11, 12, 21, 22) when the second order is
    /// requested.
    pub theta: Option<Vec<[Vec<f64>; 4]>>,
    /// Symmetrized effective tensor per species.
    pub q: Vec<Tensor2>,
    /// ‖q − qᵀ‖ before symmetrization.
    pub q_asymmetry: Vec<f64>,
    pub surf_a: Vec<f64>,
    pub surf_b: Vec<f64>,
    /// |Y₁| / |Y|.
    pub porosity: f64,
}

/// Solves `K x = b` on the periodic space, projecting b onto the range of
/// the pure-Neumann operator, and returns the zero-mean nodal solution.
fn periodic_solve(
    mesh: &Mesh,
    dofs: &DofMap,
    k: &CsrMatrix,
    load: &[f64],
    cg: CgOptions,
) -> Result<Vec<f64>> {
    let mut b = dofs.reduce_vector(load);
    let mean = b.iter().sum::<f64>() / b.len() as f64;
    b.iter_mut().for_each(|x| *x -= mean);
    let x = solve_linear(k, &b, cg)?;
    let mut u = dofs.expand(&x);
    let shift = integral(mesh, &u) / mesh.area();
    u.iter_mut().for_each(|v| *v -= shift);
    Ok(u)
}

fn cell_system(mesh: &Mesh, d: &dyn Fn([f64; 2]) -> f64) -> Result<(DofMap, CsrMatrix)> {
    let dofs = apply_periodic(mesh)?;
    let k = assemble_stiffness(mesh, d)?;
    Ok((dofs.clone(), dofs.reduce_matrix(&k)))
}

/// χ = (χ¹, χ²) with ∫ d∇χᵏ·∇v = ∫ d ∂v/∂y_k for all periodic v, mean zero.
pub fn solve_chi(mesh: &Mesh, d: &dyn Fn([f64; 2]) -> f64, cg: CgOptions) -> Result<[Vec<f64>; 2]> {
    let (dofs, k) = cell_system(mesh, d)?;
    let mut out: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (dir, slot) in out.iter_mut().enumerate() {
        let mut load = vec![0.0; mesh.n_vertices()];
        for t in 0..mesh.n_triangles() {
            let (g, area) = p1_gradients(mesh, t);
            let dt = d(mesh.centroid(t));
            for (a, &v) in mesh.triangles[t].iter().enumerate() {
                load[v] += dt * area * g[a][dir];
            }
        }
        *slot = periodic_solve(mesh, &dofs, &k, &load, cg)?;
    }
    Ok(out)
}

/// Unsymmetrized q_jk = ∫_{Y₁} d (δ_jk − ∂_j χᵏ) with |Y| = 1.
fn raw_q(mesh: &Mesh, d: &dyn Fn([f64; 2]) -> f64, chi: &[Vec<f64>; 2]) -> Tensor2 {
    let mut q = [[0.0; 2]; 2];
    for t in 0..mesh.n_triangles() {
        let (g, area) = p1_gradients(mesh, t);
        let dt = d(mesh.centroid(t));
        let tri = mesh.triangles[t];
        for k in 0..2 {
            let mut grad = [0.0; 2];
            for a in 0..3 {
                grad[0] += chi[k][tri[a]] * g[a][0];
                grad[1] += chi[k][tri[a]] * g[a][1];
            }
            for j in 0..2 {
                let delta = if j == k { 1.0 } else { 0.0 };
                q[j][k] += dt * area * (delta - grad[j]);
            }
        }
    }
    q
}

/// Effective tensor (symmetrized) and the asymmetry ‖q − qᵀ‖ of the raw
/// quadrature.
pub fn compute_q(mesh: &Mesh, d: &dyn Fn([f64; 2]) -> f64, chi: &[Vec<f64>; 2]) -> (Tensor2, f64) {
    let q = raw_q(mesh, d, chi);
    let off = 0.5 * (q[0][1] + q[1][0]);
    let asym = std::f64::consts::SQRT_2 * (q[0][1] - q[1][0]).abs();
    ([[q[0][0], off], [off, q[1][1]]], asym)
}

/// ∫ w over the hole boundary by two-point Gauss quadrature on each edge.
pub fn boundary_integral(mesh: &Mesh, w: &dyn Fn([f64; 2]) -> f64) -> Result<f64> {
    let m = assemble_boundary_mass(mesh, BoundaryTag::Hole, w)?;
    Ok(m.values().iter().sum())
}

/// (⟨a⟩, ⟨b⟩) as line integrals over ∂Y₀.
pub fn compute_surface_averages(
    mesh: &Mesh,
    a: &dyn Fn([f64; 2]) -> f64,
    b: &dyn Fn([f64; 2]) -> f64,
) -> Result<(f64, f64)> {
    Ok((boundary_integral(mesh, a)?, boundary_integral(mesh, b)?))
}

/// Second cell function θ (components 11, 12, 21, 22) with volume source
/// −q_jk/|Y₁| + d(δ_jk − ∂_jχᵏ) and, when `flux` is given, the hole flux
/// ∫_{∂Y₀} g v on the diagonal components.
pub fn solve_theta(
    mesh: &Mesh,
    d: &dyn Fn([f64; 2]) -> f64,
    chi: &[Vec<f64>; 2],
    q: &Tensor2,
    flux: Option<&dyn Fn([f64; 2]) -> f64>,
    cg: CgOptions,
) -> Result<[Vec<f64>; 4]> {
    let (dofs, k) = cell_system(mesh, d)?;
    let pore = mesh.area();
    let flux_load = match flux {
        Some(g) => {
            let m = assemble_boundary_mass(mesh, BoundaryTag::Hole, g)?;
            m.mul_vec(&vec![1.0; mesh.n_vertices()])
        }
        None => vec![0.0; mesh.n_vertices()],
    };
    let mut out: [Vec<f64>; 4] = Default::default();
    for j in 0..2 {
        for kk in 0..2 {
            let delta = if j == kk { 1.0 } else { 0.0 };
            let mut load = vec![0.0; mesh.n_vertices()];
            let mut scale = 0.0;
            for t in 0..mesh.n_triangles() {
                let (g, area) = p1_gradients(mesh, t);
                let tri = mesh.triangles[t];
                let dchi: f64 = (0..3).map(|a| chi[kk][tri[a]] * g[a][j]).sum();
                let f = -q[j][kk] / pore + d(mesh.centroid(t)) * (delta - dchi);
                for &v in &tri {
                    load[v] += f * area / 3.0;
                }
                scale += f.abs() * area;
            }
            if j == kk {
                for (l, g) in load.iter_mut().zip(&flux_load) {
                    *l += g;
                }
                scale += flux_load.iter().map(|x| x.abs()).sum::<f64>();
            }
            let net: f64 = load.iter().sum();
            let residual = if scale > 0.0 { net.abs() / scale } else { 0.0 };
            if residual > SOLVABILITY_TOL {
                return Err(Error::SolvabilityViolation { residual, tolerance: SOLVABILITY_TOL });
            }
            out[2 * j + kk] = periodic_solve(mesh, &dofs, &k, &load, cg)?;
        }
    }
    Ok(out)
}

/// Options for [`solve_cell`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellOptions {
    pub cg: CgOptions,
    pub second_order: bool,
}

impl Default for CellOptions {
    fn default() -> Self {
        CellOptions { cg: CgOptions { tol: 1e-12, max_iter: None }, second_order: false }
    }
}

/// Solves every species' cell problems. `frozen` supplies the macroscopic
/// value u* per species for [`ThetaBoundary::Frozen`].
pub fn solve_cell(
    mesh: &Mesh,
    spec: &ProblemSpec,
    opts: CellOptions,
    theta_boundary: ThetaBoundary,
    frozen: Option<&[f64]>,
) -> Result<CellSolution> {
    let mut sol = CellSolution {
        mesh_hash: mesh.hash(),
        chi: Vec::new(),
        theta: opts.second_order.then(Vec::new),
        q: Vec::new(),
        q_asymmetry: Vec::new(),
        surf_a: Vec::new(),
        surf_b: Vec::new(),
        porosity: mesh.area(),
    };
    for (i, s) in spec.species.iter().enumerate() {
        // Undefined coefficient values become NaN and are reported by assembly.
        let d = |y: [f64; 2]| s.diffusion.eval(&y).unwrap_or(f64::NAN);
        let chi = solve_chi(mesh, &d, opts.cg)?;
        let (q, asym) = compute_q(mesh, &d, &chi);
        let a = |y: [f64; 2]| s.surface_a.eval(&y).unwrap_or(f64::NAN);
        let b = |y: [f64; 2]| s.surface_b.eval(&y).unwrap_or(f64::NAN);
        let (sa, sb) = compute_surface_averages(mesh, &a, &b)?;
        if let Some(theta) = sol.theta.as_mut() {
            let th = match (theta_boundary, frozen) {
                (ThetaBoundary::Frozen, Some(u)) => {
                    let ustar = u[i];
                    let fv = s.surface_reaction.eval(&{
                        let mut v = vec![0.0; spec.n_species()];
                        v[i] = ustar.max(0.0);
                        v
                    })?;
                    let g = move |y: [f64; 2]| b(y) * fv - a(y) * ustar;
                    solve_theta(mesh, &d, &chi, &q, Some(&g), opts.cg)?
                }
                _ => solve_theta(mesh, &d, &chi, &q, None, opts.cg)?,
            };
            theta.push(th);
        }
        sol.chi.push(chi);
        sol.q.push(q);
        sol.q_asymmetry.push(asym);
        sol.surf_a.push(sa);
        sol.surf_b.push(sb);
    }
    Ok(sol)
}

impl CellSolution {
    pub fn n_species(&self) -> usize {
        self.q.len()
    }

    /// Text form: header, porosity, `TENSOR` rows (q11 q12 q21 q22),
    /// `SURFACE` rows (⟨a⟩ ⟨b⟩), then nodal χ and optional θ blocks.
    pub fn write(&self, comments: &[String]) -> String {
        let mut s = String::new();
        for c in comments {
            let _ = writeln!(s, "# {c}");
        }
        let n = self.n_species();
        let nv = self.chi.first().map_or(0, |c| c[0].len());
        let _ = writeln!(s, "CELL {} {n}", self.mesh_hash);
        let _ = writeln!(s, "POROSITY {}", self.porosity);
        let _ = writeln!(s, "TENSOR");
        for (i, q) in self.q.iter().enumerate() {
            let _ = writeln!(s, "{} {} {} {} {} {}", i + 1, q[0][0], q[0][1], q[1][0], q[1][1], self.q_asymmetry[i]);
        }
        let _ = writeln!(s, "SURFACE");
        for i in 0..n {
            let _ = writeln!(s, "{} {} {}", i + 1, self.surf_a[i], self.surf_b[i]);
        }
        let _ = writeln!(s, "CHI {nv}");
        for v in 0..nv {
            let _ = write!(s, "{v}");
            for c in &self.chi {
                let _ = write!(s, " {} {}", c[0][v], c[1][v]);
            }
            s.push('\n');
        }
        if let Some(theta) = &self.theta {
            let _ = writeln!(s, "THETA {nv}");
            for v in 0..nv {
                let _ = write!(s, "{v}");
                for th in theta {
                    for c in th {
                        let _ = write!(s, " {}", c[v]);
                    }
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn read(text: &str) -> Result<Self> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim_start().starts_with('#') && !l.trim().is_empty())
            .map(|(i, l)| (i + 1, l))
            .collect();
        let mut r = Reader { lines, pos: 0 };
        let (ln, header) = r.next("header")?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 || h[0] != "CELL" {
            return Err(bad(ln, "expected 'CELL <hash> <species>'"));
        }
        let n: usize = h[2].parse().map_err(|_| bad(ln, "bad species count"))?;
        let (ln, por) = r.next("POROSITY")?;
        let porosity = match por.split_whitespace().collect::<Vec<_>>()[..] {
            ["POROSITY", p] => p.parse().map_err(|_| bad(ln, "bad porosity"))?,
            _ => return Err(bad(ln, "expected POROSITY")),
        };
        r.tag("TENSOR")?;
        let (mut q, mut asym) = (Vec::new(), Vec::new());
        for _ in 0..n {
            let v = r.row("tensor row", 5)?;
            q.push([[v[0], v[1]], [v[2], v[3]]]);
            asym.push(v[4]);
        }
        r.tag("SURFACE")?;
        let (mut sa, mut sb) = (Vec::new(), Vec::new());
        for _ in 0..n {
            let v = r.row("surface row", 2)?;
            sa.push(v[0]);
            sb.push(v[1]);
        }
        let chi_cols = r.block("CHI", 2 * n)?.ok_or_else(|| Error::Format("cell file has no CHI block".into()))?;
        let mut it = chi_cols.into_iter();
        let chi = (0..n).map(|_| [it.next().unwrap(), it.next().unwrap()]).collect();
        let theta = r.block("THETA", 4 * n)?.map(|cols| {
            let mut it = cols.into_iter();
            (0..n)
                .map(|_| [it.next().unwrap(), it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
                .collect()
        });
        Ok(CellSolution {
            mesh_hash: h[1].to_string(),
            chi,
            theta,
            q,
            q_asymmetry: asym,
            surf_a: sa,
            surf_b: sb,
            porosity,
        })
    }
}

fn bad(line: usize, msg: &str) -> Error {
    Error::Format(format!("cell file line {line}: {msg}"))
}

struct Reader<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let l = self.lines.get(self.pos).copied();
        self.pos += 1;
        l.ok_or_else(|| Error::Format(format!("cell file ends before {what}")))
    }

    fn tag(&mut self, name: &str) -> Result<()> {
        let (ln, l) = self.next(name)?;
        if l.trim() != name {
            return Err(bad(ln, &format!("expected {name}")));
        }
        Ok(())
    }

    /// Numbers after the leading index column.
    fn row(&mut self, what: &str, width: usize) -> Result<Vec<f64>> {
        let (ln, l) = self.next(what)?;
        let v = l
            .split_whitespace()
            .skip(1)
            .map(|t| t.parse::<f64>().map_err(|_| bad(ln, &format!("bad number '{t}'"))))
            .collect::<Result<Vec<f64>>>()?;
        if v.len() != width {
            return Err(bad(ln, &format!("{what} needs {width} values")));
        }
        Ok(v)
    }

    /// Nodal block `NAME <count>` as columns, or None at end of input.
    fn block(&mut self, name: &str, width: usize) -> Result<Option<Vec<Vec<f64>>>> {
        if self.pos >= self.lines.len() {
            return Ok(None);
        }
        let (ln, tag) = self.next(name)?;
        let parts: Vec<&str> = tag.split_whitespace().collect();
        if parts.len() != 2 || parts[0] != name {
            return Err(bad(ln, &format!("expected {name}")));
        }
        let nv: usize = parts[1].parse().map_err(|_| bad(ln, "bad vertex count"))?;
        let mut cols = vec![vec![0.0; nv]; width];
        for v in 0..nv {
            for (c, x) in cols.iter_mut().zip(self.row("nodal row", width)?) {
                c[v] = x;
            }
        }
        Ok(Some(cols))
    }
}
