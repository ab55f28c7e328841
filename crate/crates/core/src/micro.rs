//! The microscopic problem on the perforated domain Ω^ε: zero Dirichlet data
//! on the outer boundary and the lagged surface reaction ε(a u − b F(u)) on
//! the hole boundaries.

use crate::error::Result;
use crate::expr::{estimate_lipschitz, ReactionExpr};
use crate::fem::{
    apply_dirichlet, assemble_boundary_mass, assemble_mass, assemble_stiffness, solve_linear, Field,
};
use crate::geometry::{BoundaryTag, Mesh};
use crate::picard::{KappaEstimate, PicardOptions, PicardReport, PicardSystem, SpeciesOperator};
use crate::problem::ProblemSpec;
use std::f64::consts::PI;

fn cell_coefficient<'a>(mesh: &'a Mesh, e: &'a ReactionExpr) -> impl Fn([f64; 2]) -> f64 + 'a {
    // Undefined values become NaN, which assembly reports with the location.
    move |x| e.eval(&mesh.cell_coords(x)).unwrap_or(f64::NAN)
}

fn is_zero(e: &ReactionExpr) -> bool {
    e.is_constant() && (e.eval(&[0.0, 0.0]) == Ok(0.0))
}

/// Picard solve from u^0 = 0.
pub fn solve_micro(mesh: &Mesh, spec: &ProblemSpec, opts: &PicardOptions) -> Result<(Field, PicardReport)> {
    solve_micro_from(mesh, spec, opts, Field::zeros(spec.n_species(), mesh.n_vertices()))
}

/// Picard solve from a given starting iterate (for example the homogenized
/// solution interpolated to the micro mesh).
pub fn solve_micro_from(
    mesh: &Mesh,
    spec: &ProblemSpec,
    opts: &PicardOptions,
    u0: Field,
) -> Result<(Field, PicardReport)> {
    let dofs = apply_dirichlet(mesh, BoundaryTag::Exterior)?;
    let eps = mesh.epsilon;
    let ops = spec
        .species
        .iter()
        .map(|s| -> Result<SpeciesOperator> {
            let k = assemble_stiffness(mesh, cell_coefficient(mesh, &s.diffusion))?;
            let robin = |e: &ReactionExpr| -> Result<Option<_>> {
                if is_zero(e) {
                    return Ok(None);
                }
                let m = assemble_boundary_mass(mesh, BoundaryTag::Hole, cell_coefficient(mesh, e))?;
                Ok(Some(m.scaled(eps)))
            };
            let nonlinear = if is_zero(&s.surface_reaction) { None } else { robin(&s.surface_b)? };
            Ok(SpeciesOperator { stiffness: dofs.reduce_matrix(&k), linear: robin(&s.surface_a)?, nonlinear })
        })
        .collect::<Result<Vec<_>>>()?;
    let system = PicardSystem {
        mesh,
        dofs,
        mass: assemble_mass(mesh),
        volume_scale: 1.0,
        ops,
        reactions: spec.species.iter().map(|s| &s.reaction).collect(),
        surface: spec.species.iter().map(|s| &s.surface_reaction).collect(),
    };
    system.run(u0, opts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyReport {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub linf: f64,
    pub l2_domain: f64,
    pub l2_holes: f64,
    /// ‖u‖_∞ / (1 + ‖u‖_{L²(Ω^ε)} + ‖u‖_{L²(Γ^ε)}).
    pub ratio: f64,
}

pub fn check_solution_properties(u: &Field, mesh: &Mesh) -> PropertyReport {
    let n = u.n_species();
    let min: Vec<f64> = (0..n).map(|i| u.species(i).iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let max: Vec<f64> = (0..n).map(|i| u.species(i).iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
    let linf = u.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let l2_domain = u.l2_norm(mesh);
    let l2_holes = u.surface_l2_norm(mesh, BoundaryTag::Hole);
    PropertyReport { min, max, linf, l2_domain, l2_holes, ratio: linf / (1.0 + l2_domain + l2_holes) }
}

/// max ‖v‖_{L²}/‖∇v‖_{L²} over sine probes and a few inverse-iteration steps
/// of the Dirichlet Laplacian, which approach the extremal ratio from below.
pub fn measure_poincare(mesh: &Mesh) -> Result<f64> {
    let dofs = apply_dirichlet(mesh, BoundaryTag::Exterior)?;
    let k = dofs.reduce_matrix(&assemble_stiffness(mesh, |_| 1.0)?);
    let mass = assemble_mass(mesh);
    let ratio = |v: &[f64]| {
        let g = crate::fem::h1_seminorm(mesh, v);
        if g > 0.0 {
            crate::fem::l2_norm(mesh, v) / g
        } else {
            0.0
        }
    };
    let probe = |kx: f64, ky: f64| -> Vec<f64> {
        let v: Vec<f64> = mesh.vertices.iter().map(|p| (kx * PI * p[0]).sin() * (ky * PI * p[1]).sin()).collect();
        dofs.expand(&dofs.restrict(&v))
    };
    let mut best: f64 = 0.0;
    for (kx, ky) in [(1.0, 1.0), (1.0, 2.0), (2.0, 1.0)] {
        best = best.max(ratio(&probe(kx, ky)));
    }
    let mut v = probe(1.0, 1.0);
    let cg = crate::fem::CgOptions { tol: 1e-10, max_iter: None };
    for _ in 0..6 {
        let b = dofs.reduce_vector(&mass.mul_vec(&v));
        let x = solve_linear(&k, &b, cg)?;
        v = dofs.expand(&x);
        let s = crate::fem::l2_norm(mesh, &v);
        if s > 0.0 {
            v.iter_mut().for_each(|x| *x /= s);
        }
        best = best.max(ratio(&v));
    }
    Ok(best)
}

/// Measured contraction κ̂ next to the bound C_p α⁻¹ max L_i N, with the
/// Lipschitz constants sampled on the box [0, 1.05·max u_j] covering the
/// computed solution (reaction inputs are clamped at 0).
pub fn estimate_kappa(report: &PicardReport, mesh: &Mesh, spec: &ProblemSpec, u: &Field) -> Result<KappaEstimate> {
    let n = spec.n_species();
    let bounds: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let hi = u.species(j).iter().copied().fold(0.0f64, f64::max);
            (0.0, (1.05 * hi).max(1e-6))
        })
        .collect();
    let lipschitz: Vec<f64> = spec.species.iter().map(|s| estimate_lipschitz(&s.reaction, &bounds, 256)).collect();
    let poincare = measure_poincare(mesh)?;
    let alpha = spec.alpha();
    let lmax = lipschitz.iter().copied().fold(0.0, f64::max);
    Ok(KappaEstimate {
        kappa_hat: report.kappa_hat(),
        poincare,
        alpha,
        lipschitz,
        n_species: n,
        kappa_bound: poincare / alpha * lmax * n as f64,
    })
}
