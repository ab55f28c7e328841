//! The acceptance criteria. Each check returns an [`Outcome`] whose detail
//! line carries the measured numbers next to the threshold.

use crate::exprgen::{ridders_derivative, TreeGen};
use crate::oracles::{cell_means, harmonic_mean_1d, poisson_series, sym_eigenvalues};
use perfhom::cell::{solve_cell, CellOptions, CellSolution, ThetaBoundary};
use perfhom::config::load_config;
use perfhom::corrector::{ConvergenceReport, CutoffConvention};
use perfhom::expr::{parse, render, ReactionExpr, VarKind};
use perfhom::fem::{apply_dirichlet, assemble_mass, assemble_stiffness, solve_linear, CgOptions};
use perfhom::geometry::{build_square_mesh, build_unit_cell_mesh, BoundaryTag, CellGeometry, Mesh};
use perfhom::macro_solver::{solve_macro, MacroMode, MacroProblem};
use perfhom::micro::{check_solution_properties, estimate_kappa, solve_micro};
use perfhom::picard::PicardOptions;
use perfhom::problem::{ProblemSpec, SpeciesText};
use perfhom::sweep::{cell_mesh, micro_mesh, rate_sweep};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::sync::OnceLock;

pub const RATE_SLOPE_MIN: f64 = 0.45;
pub const LAMINATE_REL_TOL: f64 = 0.01;
pub const LAMINATE_OFF_DIAG_TOL: f64 = 0.005;
pub const TRIVIAL_Q_TOL: f64 = 1e-8;
pub const CONTRACTION_SLACK: f64 = 1.2;
pub const POSITIVITY_FLOOR: f64 = -1e-8;
pub const BOUNDEDNESS_RATIO_MAX: f64 = 2.0;
pub const POISSON_CENTRE: f64 = 0.07367;
pub const POISSON_TOL: f64 = 5e-4;
pub const PARSER_TREES: usize = 1000;
pub const GRADIENT_POINTS: usize = 100;
pub const GRADIENT_REL_TOL: f64 = 1e-6;
pub const SANDWICH_REL_TOL: f64 = 0.01;
pub const CUTOFF_SLOPE_TOL: f64 = 0.15;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, detail }
    }
}

pub type Check = fn() -> perfhom::Result<Outcome>;

/// Every criterion in order, with a short label.
pub fn all() -> Vec<(&'static str, Check)> {
    vec![
        ("corrector rate", corrector_rate as Check),
        ("laminate effective tensor", laminate_tensor),
        ("trivial homogenization", trivial_homogenization),
        ("Picard contraction", picard_contraction),
        ("positivity and boundedness", positivity_and_boundedness),
        ("Poisson centre value", poisson_centre),
        ("parser round trip and gradients", parser_suite),
        ("Voigt-Reuss sandwich", voigt_reuss),
    ]
}

/// Invariants checked after the criteria, reported the same way.
pub fn invariants() -> Vec<(&'static str, Check)> {
    vec![("cut-off conventions agree on the rate", cutoff_conventions as Check)]
}

/// Shipped configuration directory at the workspace root.
pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cell_spec(d: &str) -> perfhom::Result<ProblemSpec> {
    ProblemSpec::parse(&[SpeciesText::new(d, "0", "0", "1", "0", 0.1)])
}

fn solid_cell(d: &str, n: usize) -> perfhom::Result<(Mesh, ProblemSpec, CellSolution)> {
    let mesh = build_unit_cell_mesh(&CellGeometry::no_hole(), 1.0 / n as f64)?;
    let spec = cell_spec(d)?;
    let cell = solve_cell(&mesh, &spec, CellOptions::default(), ThetaBoundary::PureDiffusion, None)?;
    Ok((mesh, spec, cell))
}

/// −∇·(c∇u) = 1 on the unit square with zero Dirichlet data, solved as a
/// single linear system.
fn plain_poisson(mesh: &Mesh, c: f64, cg: CgOptions) -> perfhom::Result<Vec<f64>> {
    let dofs = apply_dirichlet(mesh, BoundaryTag::Exterior)?;
    let k = dofs.reduce_matrix(&assemble_stiffness(mesh, |_| c)?);
    let b = dofs.reduce_vector(&assemble_mass(mesh).mul_vec(&vec![1.0; mesh.n_vertices()]));
    Ok(dofs.expand(&solve_linear(&k, &b, cg)?))
}

/// Benchmark sweep over the configured ε list with the given cut-off.
fn benchmark_sweep(convention: CutoffConvention) -> perfhom::Result<ConvergenceReport> {
    let mut cfg = load_config(&configs_dir().join("benchmark.cfg"))?;
    cfg.jobs = std::thread::available_parallelism().map_or(1, |n| n.get()).min(cfg.eps_inv.len());
    cfg.cutoff = convention;
    let eps_inv = cfg.eps_inv.clone();
    rate_sweep(&cfg, &eps_inv, 1)
}

/// The standard-convention sweep is shared by the rate criterion and the
/// cut-off invariant, so it runs once per process.
fn standard_sweep() -> perfhom::Result<ConvergenceReport> {
    static SWEEP: OnceLock<Result<ConvergenceReport, String>> = OnceLock::new();
    SWEEP
        .get_or_init(|| benchmark_sweep(CutoffConvention::Standard).map_err(|e| e.to_string()))
        .clone()
        .map_err(perfhom::Error::Validation)
}

pub fn corrector_rate() -> perfhom::Result<Outcome> {
    let report = standard_sweep()?;
    let errors: Vec<String> = report.rows.iter().map(|r| format!("{:.3e}", r.err_v)).collect();
    let slope = report.slope.unwrap_or(f64::NAN);
    Ok(Outcome::new(
        slope >= RATE_SLOPE_MIN,
        format!("slope {slope:.3} (need >= {RATE_SLOPE_MIN}); errors [{}]", errors.join(", ")),
    ))
}

pub fn cutoff_conventions() -> perfhom::Result<Outcome> {
    let standard = standard_sweep()?.slope.unwrap_or(f64::NAN);
    let near = benchmark_sweep(CutoffConvention::NearBoundary)?.slope.unwrap_or(f64::NAN);
    let gap = (standard - near).abs();
    Ok(Outcome::new(
        gap <= CUTOFF_SLOPE_TOL,
        format!("slope {standard:.3} (standard) vs {near:.3} (near-boundary); gap {gap:.3} (need <= {CUTOFF_SLOPE_TOL})"),
    ))
}

pub fn laminate_tensor() -> perfhom::Result<Outcome> {
    let (_, _, cell) = solid_cell("1 + 0.5*sin(2*pi*y1)", 64)?;
    let q = cell.q[0];
    let harmonic = harmonic_mean_1d(|y| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * y).sin(), 100_000);
    let e11 = (q[0][0] - harmonic).abs() / harmonic;
    let e22 = (q[1][1] - 1.0).abs();
    let off = q[0][1].abs().max(q[1][0].abs());
    Ok(Outcome::new(
        e11 <= LAMINATE_REL_TOL && e22 <= LAMINATE_REL_TOL && off <= LAMINATE_OFF_DIAG_TOL,
        format!(
            "q11 {:.5} vs harmonic {harmonic:.5} (rel {e11:.1e}); q22 {:.5} vs 1 (rel {e22:.1e}); off-diagonal {off:.1e}",
            q[0][0], q[1][1]
        ),
    ))
}

pub fn trivial_homogenization() -> perfhom::Result<Outcome> {
    let c = 2.0;
    let (_, spec, cell) = solid_cell("2", 64)?;
    let chi_max = cell.chi[0].iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    let q = cell.q[0];
    let q_err = [(q[0][0] - c).abs(), q[0][1].abs(), q[1][0].abs(), (q[1][1] - c).abs()]
        .into_iter()
        .fold(0.0, f64::max);
    let mm = build_square_mesh(64);
    let opts = PicardOptions { omega: 1.0, ..PicardOptions::default() };
    let (u, _) = solve_macro(&MacroProblem::from_cell(&mm, &cell, &spec, MacroMode::VolumeOnly), &opts)?;
    let plain = plain_poisson(&mm, c, opts.cg)?;
    let differing = u.species(0).iter().zip(&plain).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
    Ok(Outcome::new(
        chi_max <= CellOptions::default().cg.tol && q_err <= TRIVIAL_Q_TOL && differing == 0,
        format!("max |chi| {chi_max:.1e}; max |q - cI| {q_err:.1e}; macro vs plain FEM: {differing} differing nodal values"),
    ))
}

pub fn picard_contraction() -> perfhom::Result<Outcome> {
    let cfg = load_config(&configs_dir().join("nonlinear.cfg"))?;
    let spec = cfg.validate()?;
    let mesh = micro_mesh(&cell_mesh(&cfg)?, 4)?;
    let opts = PicardOptions { keep_iterates: true, ..cfg.picard() };
    let (u, report) = solve_micro(&mesh, &spec, &opts)?;
    let kappa = estimate_kappa(&report, &mesh, &spec, &u)?;
    let Some(k) = report.kappa_hat() else {
        return Ok(Outcome::new(false, format!("kappa_hat undefined after {} iterations", report.iterations())));
    };
    let first = report.iterates[1].h1_seminorm(&mesh);
    let mut worst = 0.0f64;
    for (n, it) in report.iterates.iter().enumerate().skip(2) {
        let bound = k.powi(n as i32) / (1.0 - k) * first * CONTRACTION_SLACK;
        worst = worst.max(it.sub(&u).h1_seminorm(&mesh) / bound);
    }
    Ok(Outcome::new(
        kappa.kappa_bound < 1.0 && k < 1.0 && worst <= 1.0,
        format!(
            "kappa_p {:.3}; kappa_hat {k:.3} over {} iterations; worst error/bound {worst:.3}",
            kappa.kappa_bound,
            report.iterations()
        ),
    ))
}

pub fn positivity_and_boundedness() -> perfhom::Result<Outcome> {
    let cfg = load_config(&configs_dir().join("nonlinear.cfg"))?;
    let spec = cfg.validate()?;
    let cm = cell_mesh(&cfg)?;
    let mut mins = Vec::new();
    let mut ratios = Vec::new();
    for k in [4, 8] {
        let mesh = micro_mesh(&cm, k)?;
        let (u, _) = solve_micro(&mesh, &spec, &cfg.picard())?;
        let p = check_solution_properties(&u, &mesh);
        mins.push(p.min.iter().copied().fold(f64::INFINITY, f64::min));
        ratios.push(p.ratio);
    }
    let min = mins.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = ratios[0].max(ratios[1]) / ratios[0].min(ratios[1]);
    Ok(Outcome::new(
        min >= POSITIVITY_FLOOR && spread < BOUNDEDNESS_RATIO_MAX,
        format!(
            "nodal min {min:.2e}; bound ratio {:.4} (1/4) vs {:.4} (1/8), spread {spread:.3}",
            ratios[0], ratios[1]
        ),
    ))
}

pub fn poisson_centre() -> perfhom::Result<Outcome> {
    let mesh = build_square_mesh(64);
    let u = plain_poisson(&mesh, 1.0, CgOptions { tol: 1e-12, max_iter: None })?;
    let centre = mesh
        .vertices
        .iter()
        .position(|p| (p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12)
        .ok_or_else(|| perfhom::Error::Validation("grid has no centre vertex".into()))?;
    let value = u[centre];
    let series = poisson_series(0.5, 0.5, 399);
    Ok(Outcome::new(
        (value - POISSON_CENTRE).abs() <= POISSON_TOL,
        format!("u(1/2, 1/2) = {value:.6} vs {POISSON_CENTRE} +- {POISSON_TOL} (series {series:.6})"),
    ))
}

pub fn parser_suite() -> perfhom::Result<Outcome> {
    let mut round_trip_failures = Vec::new();
    let mut gen = TreeGen::new(ChaCha8Rng::seed_from_u64(0x5eed), 1, false);
    for k in 0..PARSER_TREES {
        let (arity, kind) = if k % 2 == 0 { (gen.rng().gen_range(1..=3), VarKind::Species) } else { (2, VarKind::Space) };
        gen.set_arity(arity);
        let tree = gen.tree(6);
        let text = render(&tree, kind);
        match parse(&text, arity, kind) {
            Ok(back) if back == tree => {}
            _ => round_trip_failures.push(text),
        }
    }

    let mut smooth = TreeGen::new(ChaCha8Rng::seed_from_u64(0xd1ff), 1, true);
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    let mut gradient_failures = 0usize;
    for _ in 0..PARSER_TREES {
        let arity = smooth.rng().gen_range(1..=3);
        smooth.set_arity(arity);
        let expr = ReactionExpr { ast: smooth.tree(4), arity, kind: VarKind::Species };
        for _ in 0..GRADIENT_POINTS {
            let x: Vec<f64> = (0..arity).map(|_| smooth.rng().gen_range(-1.0..1.0)).collect();
            let (_, grad) = expr.eval_gradient(&x)?;
            let f = |p: &[f64]| expr.eval(p).unwrap_or(f64::NAN);
            for (j, g) in grad.iter().enumerate() {
                let (fd, _) = ridders_derivative(f, &x, j, 1e-3);
                let rel = (g - fd).abs() / g.abs().max(1.0);
                checked += 1;
                worst = worst.max(rel);
                if !(rel <= GRADIENT_REL_TOL) {
                    gradient_failures += 1;
                }
            }
        }
    }
    let example = round_trip_failures.first().map_or(String::new(), |t| format!(" e.g. `{t}`"));
    Ok(Outcome::new(
        round_trip_failures.is_empty() && gradient_failures == 0,
        format!(
            "{} of {PARSER_TREES} trees failed to round-trip{example}; {gradient_failures} of {checked} partials off by > {GRADIENT_REL_TOL} (worst {worst:.1e})",
            round_trip_failures.len()
        ),
    ))
}

/// Coefficient profiles without holes for the bounds check.
pub const SANDWICH_PROFILES: [&str; 3] = [
    "1 + 0.5*sin(2*pi*y1)*sin(2*pi*y2)",
    "2 + cos(2*pi*y1) + 0.5*cos(2*pi*y2)",
    "exp(sin(2*pi*y1) + 0.5*cos(2*pi*(y1 + y2)))",
];

pub fn voigt_reuss() -> perfhom::Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for text in SANDWICH_PROFILES {
        let (_, spec, cell) = solid_cell(text, 64)?;
        let d = &spec.species[0].diffusion;
        let (arith, harmonic) = cell_means(|y| d.eval(&y).unwrap_or(f64::NAN), 512);
        let [lo, hi] = sym_eigenvalues(&cell.q[0]);
        pass &= lo >= harmonic * (1.0 - SANDWICH_REL_TOL) && hi <= arith * (1.0 + SANDWICH_REL_TOL);
        parts.push(format!("{harmonic:.4} <= [{lo:.4}, {hi:.4}] <= {arith:.4}"));
    }
    Ok(Outcome::new(pass, parts.join("; ")))
}
