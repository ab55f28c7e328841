use perfhom::config::{load_config, RunConfig};
use perfhom::fem::Field;
use perfhom::geometry::{build_unit_cell_mesh, CellGeometry, Mesh};
use perfhom::micro::{check_solution_properties, estimate_kappa, measure_poincare, solve_micro};
use perfhom::picard::{PicardOptions, PicardReport};
use perfhom::problem::{ProblemSpec, SpeciesText};
use perfhom::sweep::{cell_mesh, micro_mesh};
use std::path::PathBuf;

fn config(name: &str) -> RunConfig {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    load_config(&dir.join(name)).unwrap()
}

fn coarsest_micro(cfg: &RunConfig) -> Mesh {
    let k = cfg.eps_inv.iter().copied().min().unwrap();
    micro_mesh(&cell_mesh(cfg).unwrap(), k).unwrap()
}

fn single(d: &str, a: &str, b: &str, r: &str, f: &str) -> ProblemSpec {
    ProblemSpec::parse(&[SpeciesText::new(d, a, b, r, f, 1.0)]).unwrap()
}

fn disk_micro(eps_inv: usize, n: usize) -> Mesh {
    micro_mesh(&build_unit_cell_mesh(&CellGeometry::disk(0.25), 1.0 / n as f64).unwrap(), eps_inv).unwrap()
}

fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("PERFHOM_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}; rerun with PERFHOM_BLESS=1", path.display()));
    let (exp, act): (Vec<&str>, Vec<&str>) = (expected.lines().collect(), actual.lines().collect());
    assert_eq!(exp.len(), act.len(), "golden {name} changed shape:\n{actual}");
    for (e, a) in exp.iter().zip(&act) {
        let (ek, ev) = e.split_once(' ').unwrap();
        let (ak, av) = a.split_once(' ').unwrap();
        assert_eq!(ek, ak);
        match (ev.parse::<f64>(), av.parse::<f64>()) {
            (Ok(x), Ok(y)) => assert!((x - y).abs() <= 1e-6 * x.abs().max(1e-12), "{ek}: {x} vs {y}"),
            _ => assert_eq!(ev, av, "{ek}"),
        }
    }
}

fn summary(u: &Field, mesh: &Mesh, report: &PicardReport) -> String {
    let mut s = format!("iterations {}\n", report.iterations());
    s += &format!("kappa_hat {:.9e}\n", report.kappa_hat().unwrap_or(f64::NAN));
    for i in 0..u.n_species() {
        let x = u.species(i);
        s += &format!("min{} {:.9e}\n", i + 1, x.iter().copied().fold(f64::INFINITY, f64::min));
        s += &format!("max{} {:.9e}\n", i + 1, x.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    s += &format!("seminorm {:.9e}\n", u.h1_seminorm(mesh));
    s
}

#[test]
fn zero_data_converges_in_one_iteration() {
    let mesh = disk_micro(4, 8);
    let (u, report) = solve_micro(&mesh, &single("1", "0", "0", "0", "0"), &PicardOptions::default()).unwrap();
    assert!(report.converged);
    assert_eq!(report.iterations(), 1);
    assert!(u.values().iter().all(|&x| x == 0.0));
    let p = check_solution_properties(&u, &mesh);
    assert_eq!((p.min[0], p.max[0], p.linf, p.ratio), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn single_solid_tile_reproduces_the_square_poisson_problem() {
    let cell = build_unit_cell_mesh(&CellGeometry::no_hole(), 1.0 / 64.0).unwrap();
    let mesh = micro_mesh(&cell, 1).unwrap();
    let (u, report) = solve_micro(&mesh, &single("1", "0", "0", "1", "0"), &PicardOptions::default()).unwrap();
    assert!(report.converged);
    let centre = mesh.vertices.iter().position(|p| p[0] == 0.5 && p[1] == 0.5).unwrap();
    assert!((u.species(0)[centre] - 0.07367).abs() <= 5e-4, "{}", u.species(0)[centre]);
    assert!(u.values().iter().all(|&x| x >= -1e-12));
}

#[test]
fn two_species_catalog_run_contracts_and_matches_golden_summary() {
    let cfg = config("nonlinear.cfg");
    let spec = cfg.validate().unwrap();
    let mesh = coarsest_micro(&cfg);
    let (u, report) = solve_micro(&mesh, &spec, &cfg.picard()).unwrap();
    assert!(report.converged);
    assert!(report.kappa_hat().unwrap() < 1.0);
    golden("micro_nonlinear.txt", &summary(&u, &mesh, &report));
}

#[test]
fn weak_linear_reaction_contracts_within_the_bound() {
    let mesh = disk_micro(4, 8);
    let spec = single("1", "0", "0", "0.01*u1 + 1", "0");
    // Stop before warm-started CG reaches an exact fixed point and the last
    // residual becomes zero.
    let opts = PicardOptions { omega: 1.0, tol: 1e-9, ..PicardOptions::default() };
    let (_, report) = solve_micro(&mesh, &spec, &opts).unwrap();
    let cp = measure_poincare(&mesh).unwrap();
    let k = report.kappa_hat().unwrap();
    assert!(k <= 3.0 * cp * 0.01 / 1.0, "kappa_hat {k}, C_p {cp}");
}

#[test]
fn shipped_configurations_contract() {
    for name in ["benchmark.cfg", "nonlinear.cfg", "laminate.cfg", "surface.cfg"] {
        let cfg = config(name);
        let spec = cfg.validate().unwrap();
        let mesh = coarsest_micro(&cfg);
        let opts = PicardOptions { tol: 1e-10, ..cfg.picard() };
        let (u, report) = solve_micro(&mesh, &spec, &opts).unwrap();
        assert!(report.converged, "{name}");
        if let Some(k) = report.kappa_hat() {
            assert!(k < 1.0, "{name}: kappa_hat {k}");
        }
        let kappa = estimate_kappa(&report, &mesh, &spec, &u).unwrap();
        assert!(kappa.kappa_bound < 1.0, "{name}: kappa_p {}", kappa.kappa_bound);
    }
}

#[test]
fn residuals_decay_geometrically() {
    let cfg = config("nonlinear.cfg");
    let spec = cfg.validate().unwrap();
    let mesh = coarsest_micro(&cfg);
    let (_, report) = solve_micro(&mesh, &spec, &cfg.picard()).unwrap();
    let k = report.kappa_hat().unwrap();
    let r = &report.residuals;
    let n0 = 2;
    for n in n0..r.len() {
        assert!(r[n] <= 1.2 * r[n0] * k.powi((n - n0) as i32), "n={n}: {} vs kappa_hat {k}", r[n]);
    }
}

#[test]
fn iteration_count_is_mesh_independent() {
    let cfg = config("nonlinear.cfg");
    let spec = cfg.validate().unwrap();
    let counts: Vec<usize> = [8, 16]
        .iter()
        .map(|&n| solve_micro(&disk_micro(4, n), &spec, &cfg.picard()).unwrap().1.iterations())
        .collect();
    assert!(counts[0].abs_diff(counts[1]) <= 2, "{counts:?}");
}

#[test]
fn relaxation_does_not_change_the_limit() {
    let cfg = config("nonlinear.cfg");
    let spec = cfg.validate().unwrap();
    let mesh = coarsest_micro(&cfg);
    let tol = 1e-10;
    let (a, _) = solve_micro(&mesh, &spec, &PicardOptions { omega: 1.0, tol, ..cfg.picard() }).unwrap();
    let (b, _) = solve_micro(&mesh, &spec, &PicardOptions { omega: 0.5, tol, ..cfg.picard() }).unwrap();
    let diff = a.sub(&b).h1_seminorm(&mesh);
    assert!(diff <= 10.0 * tol * a.h1_seminorm(&mesh).max(1.0), "{diff}");
}

#[test]
fn permuting_species_permutes_the_solution() {
    let cfg = config("nonlinear.cfg");
    let spec = cfg.validate().unwrap();
    let swapped = ProblemSpec::parse(&[
        SpeciesText::new("1", "0.1", "0.1", "-u2*u1 + 1", "u1/(1 + u1)", 1.0),
        SpeciesText::new("1", "0.1", "0.1", "u2*u1 - u2^2", "u2/(1 + u2)", 1.0),
    ])
    .unwrap();
    let mesh = coarsest_micro(&cfg);
    let (u, ru) = solve_micro(&mesh, &spec, &cfg.picard()).unwrap();
    let (v, rv) = solve_micro(&mesh, &swapped, &cfg.picard()).unwrap();
    assert_eq!(ru.iterations(), rv.iterations());
    assert_eq!(u.species(0), v.species(1));
    assert_eq!(u.species(1), v.species(0));
}
