//! The homogenized problem on the unperforated domain, and nodal recovery
//! of gradients and Hessians of its P1 solution.

use crate::cell::CellSolution;
use crate::error::{Error, Result};
use crate::expr::ReactionExpr;
use crate::fem::{apply_dirichlet, assemble_mass, assemble_tensor_stiffness, p1_gradients, Field, Tensor2};
use crate::geometry::{BoundaryTag, Mesh};
use crate::picard::{PicardOptions, PicardReport, PicardSystem, SpeciesOperator};
use crate::problem::ProblemSpec;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MacroMode {
    /// −∇·(q∇u) = p·R(u).
    #[default]
    VolumeOnly,
    /// Adds the surface averages as zeroth-order terms ⟨a⟩u − ⟨b⟩F(u).
    WithSurface,
}

impl MacroMode {
    pub fn name(self) -> &'static str {
        match self {
            MacroMode::VolumeOnly => "volume_only",
            MacroMode::WithSurface => "with_surface",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "volume_only" => Some(MacroMode::VolumeOnly),
            "with_surface" => Some(MacroMode::WithSurface),
            _ => None,
        }
    }
}

impl fmt::Display for MacroMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct MacroProblem<'a> {
    pub mesh: &'a Mesh,
    pub q: Vec<Tensor2>,
    /// |Y₁| / |Y|.
    pub porosity: f64,
    pub surf_a: Vec<f64>,
    pub surf_b: Vec<f64>,
    pub reactions: Vec<&'a ReactionExpr>,
    pub surface: Vec<&'a ReactionExpr>,
    pub mode: MacroMode,
}

impl<'a> MacroProblem<'a> {
    pub fn from_cell(mesh: &'a Mesh, cell: &CellSolution, spec: &'a ProblemSpec, mode: MacroMode) -> Self {
        MacroProblem {
            mesh,
            q: cell.q.clone(),
            porosity: cell.porosity,
            surf_a: cell.surf_a.clone(),
            surf_b: cell.surf_b.clone(),
            reactions: spec.species.iter().map(|s| &s.reaction).collect(),
            surface: spec.species.iter().map(|s| &s.surface_reaction).collect(),
            mode,
        }
    }

    /// q symmetric positive definite and porosity in (0, 1].
    pub fn validate(&self) -> Result<()> {
        if !(self.porosity > 0.0 && self.porosity <= 1.0 + 1e-12) {
            return Err(Error::Validation(format!("porosity {} is outside (0, 1]", self.porosity)));
        }
        for (i, q) in self.q.iter().enumerate() {
            let det = q[0][0] * q[1][1] - q[0][1] * q[1][0];
            if !(q[0][0] > 0.0 && det > 0.0) || (q[0][1] - q[1][0]).abs() > 1e-12 * q[0][0] {
                return Err(Error::Validation(format!("effective tensor of species {} is not SPD", i + 1)));
            }
        }
        Ok(())
    }
}

pub fn solve_macro(problem: &MacroProblem, opts: &PicardOptions) -> Result<(Field, PicardReport)> {
    problem.validate()?;
    let mesh = problem.mesh;
    let dofs = apply_dirichlet(mesh, BoundaryTag::Exterior)?;
    let mass = assemble_mass(mesh);
    let surface_on = problem.mode == MacroMode::WithSurface;
    let ops = problem
        .q
        .iter()
        .enumerate()
        .map(|(i, &q)| -> Result<SpeciesOperator> {
            let k = assemble_tensor_stiffness(mesh, |_| q)?;
            let zero_term = |c: f64| (surface_on && c != 0.0).then(|| mass.scaled(c));
            Ok(SpeciesOperator {
                stiffness: dofs.reduce_matrix(&k),
                linear: zero_term(problem.surf_a[i]),
                nonlinear: zero_term(problem.surf_b[i]),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let system = PicardSystem {
        mesh,
        dofs,
        mass,
        volume_scale: problem.porosity,
        ops,
        reactions: problem.reactions.clone(),
        surface: problem.surface.clone(),
    };
    system.run(Field::zeros(problem.q.len(), mesh.n_vertices()), opts)
}

/// Area-weighted average of the element gradients around each vertex.
pub fn recover_gradient(mesh: &Mesh, values: &[f64]) -> Vec<[f64; 2]> {
    let mut acc = vec![[0.0; 2]; mesh.n_vertices()];
    let mut weight = vec![0.0; mesh.n_vertices()];
    for t in 0..mesh.n_triangles() {
        let (g, area) = p1_gradients(mesh, t);
        let tri = mesh.triangles[t];
        let mut grad = [0.0; 2];
        for a in 0..3 {
            grad[0] += values[tri[a]] * g[a][0];
            grad[1] += values[tri[a]] * g[a][1];
        }
        for &v in &tri {
            acc[v][0] += area * grad[0];
            acc[v][1] += area * grad[1];
            weight[v] += area;
        }
    }
    acc.iter().zip(&weight).map(|(a, &w)| if w > 0.0 { [a[0] / w, a[1] / w] } else { [0.0; 2] }).collect()
}

/// Gradient recovery applied to each recovered gradient component;
/// entry [j][k] approximates ∂_j ∂_k.
pub fn recover_hessian(mesh: &Mesh, values: &[f64]) -> Vec<Tensor2> {
    let grad = recover_gradient(mesh, values);
    let gx: Vec<f64> = grad.iter().map(|g| g[0]).collect();
    let gy: Vec<f64> = grad.iter().map(|g| g[1]).collect();
    let hx = recover_gradient(mesh, &gx);
    let hy = recover_gradient(mesh, &gy);
    hx.iter().zip(&hy).map(|(a, b)| [[a[0], b[0]], [a[1], b[1]]]).collect()
}
