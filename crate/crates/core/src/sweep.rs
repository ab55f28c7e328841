//! End-to-end pipeline for one configuration: cell problems once, then per
//! ε the micro solve, the homogenized solve and the reconstruction error.

use crate::cell::{solve_cell, CellOptions, CellSolution, ThetaBoundary};
use crate::config::RunConfig;
use crate::corrector::{
    build_cutoff, corrector_error, reconstruct, ConvergenceReport, ConvergenceRow, RecoveredMacro,
};
use crate::error::{Error, Result};
use crate::fem::Field;
use crate::geometry::{build_perforated_domain_mesh, build_square_mesh, build_unit_cell_mesh, Mesh, PointLocator};
use crate::macro_solver::{solve_macro, MacroProblem};
use crate::micro::solve_micro;
use crate::picard::PicardReport;
use crate::problem::ProblemSpec;
use rayon::prelude::*;

pub fn cell_mesh(cfg: &RunConfig) -> Result<Mesh> {
    Ok(build_unit_cell_mesh(&cfg.geometry(), cfg.cell_h())?)
}

/// Homogenized mesh for a given 1/ε: a structured grid with h = ε / h_ratio.
pub fn macro_mesh(cfg: &RunConfig, eps_inv: usize) -> Mesh {
    build_square_mesh(eps_inv * cfg.h_ratio)
}

pub fn micro_mesh(cell: &Mesh, eps_inv: usize) -> Result<Mesh> {
    Ok(build_perforated_domain_mesh(cell, 1.0 / eps_inv as f64)?)
}

/// Cell solution for the configuration. With frozen θ data the homogenized
/// problem is solved first on the coarsest sweep mesh and evaluated at the
/// domain centre.
pub fn cell_solution(cfg: &RunConfig, spec: &ProblemSpec, mesh: &Mesh, order: usize) -> Result<CellSolution> {
    let opts = CellOptions { cg: cfg.cg(), second_order: order >= 2 };
    if opts.second_order && cfg.theta_boundary == ThetaBoundary::Frozen {
        let first = solve_cell(mesh, spec, CellOptions { second_order: false, ..opts }, ThetaBoundary::PureDiffusion, None)?;
        let k = cfg.eps_inv.iter().copied().min().unwrap_or(4);
        let mm = macro_mesh(cfg, k);
        let (u0, _) = solve_macro(&MacroProblem::from_cell(&mm, &first, spec, cfg.macro_mode), &cfg.picard())?;
        let loc = PointLocator::new(&mm);
        let centre: Vec<f64> = (0..u0.n_species())
            .map(|i| loc.interpolate(u0.species(i), [0.5, 0.5]).unwrap_or(0.0))
            .collect();
        return solve_cell(mesh, spec, opts, ThetaBoundary::Frozen, Some(&centre));
    }
    solve_cell(mesh, spec, opts, ThetaBoundary::PureDiffusion, None)
}

/// Everything computed for one ε.
pub struct EpsilonRun {
    pub row: ConvergenceRow,
    pub micro_mesh: Mesh,
    pub micro: Field,
    pub micro_report: PicardReport,
    pub macro_mesh: Mesh,
    pub macro_field: Field,
    pub macro_report: PicardReport,
    pub reconstruction: Field,
}

pub fn run_epsilon(
    cfg: &RunConfig,
    spec: &ProblemSpec,
    cell_mesh: &Mesh,
    cell: &CellSolution,
    eps_inv: usize,
    order: usize,
) -> Result<EpsilonRun> {
    let eps = 1.0 / eps_inv as f64;
    let mesh_eps = micro_mesh(cell_mesh, eps_inv)?;
    let (micro, micro_report) = solve_micro(&mesh_eps, spec, &cfg.picard())?;
    let mm = macro_mesh(cfg, eps_inv);
    let (macro_field, macro_report) = solve_macro(&MacroProblem::from_cell(&mm, cell, spec, cfg.macro_mode), &cfg.picard())?;
    let data = RecoveredMacro::new(&mm, &macro_field);
    let cutoff = build_cutoff(&mesh_eps, eps, cfg.cutoff);
    let reconstruction = reconstruct(&data, cell, &mesh_eps, order, &cutoff)?;
    let plain = reconstruct(&data, cell, &mesh_eps, 0, &cutoff)?;
    let (err_v, _) = corrector_error(&micro, &reconstruction, &mesh_eps);
    let (_, err_l2) = corrector_error(&micro, &plain, &mesh_eps);
    let row = ConvergenceRow {
        epsilon: eps,
        h: eps / cfg.h_ratio as f64,
        order,
        err_v,
        err_l2,
        solution_norm: micro.h1_seminorm(&mesh_eps),
        picard_iterations: micro_report.iterations(),
    };
    Ok(EpsilonRun {
        row,
        micro_mesh: mesh_eps,
        micro,
        micro_report,
        macro_mesh: mm,
        macro_field,
        macro_report,
        reconstruction,
    })
}

/// Convergence study over `eps_inv` for expansion order `order`, running
/// the ε cases on a pool of `cfg.jobs` workers.
pub fn rate_sweep(cfg: &RunConfig, eps_inv: &[usize], order: usize) -> Result<ConvergenceReport> {
    if eps_inv.len() < 3 {
        return Err(Error::InsufficientPoints(eps_inv.len()));
    }
    let spec = cfg.validate()?;
    let cm = cell_mesh(cfg)?;
    let cell = cell_solution(cfg, &spec, &cm, order)?;
    rate_sweep_with_cell(cfg, &spec, &cm, &cell, eps_inv, order)
}

/// [`rate_sweep`] with a precomputed cell solution, for example one loaded
/// from disk.
pub fn rate_sweep_with_cell(
    cfg: &RunConfig,
    spec: &ProblemSpec,
    cm: &Mesh,
    cell: &CellSolution,
    eps_inv: &[usize],
    order: usize,
) -> Result<ConvergenceReport> {
    if eps_inv.len() < 3 {
        return Err(Error::InsufficientPoints(eps_inv.len()));
    }
    if cell.mesh_hash != cm.hash() {
        return Err(Error::MeshMismatch(format!(
            "cell solution belongs to mesh {} but the configuration generates {}",
            cell.mesh_hash,
            cm.hash()
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Validation(format!("worker pool: {e}")))?;
    let rows = pool.install(|| {
        eps_inv
            .par_iter()
            .map(|&k| run_epsilon(cfg, spec, cm, cell, k, order).map(|r| r.row))
            .collect::<Result<Vec<_>>>()
    })?;
    ConvergenceReport::from_rows(order, rows)
}
