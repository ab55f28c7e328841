use perfhom::config::load_config;
use perfhom::fem::{apply_dirichlet, assemble_mass, assemble_stiffness, solve_linear, Field};
use perfhom::geometry::{build_square_mesh, BoundaryTag, Mesh};
use perfhom::macro_solver::{recover_gradient, recover_hessian, solve_macro, MacroMode, MacroProblem};
use perfhom::picard::PicardOptions;
use perfhom::problem::{ProblemSpec, SpeciesText};
use perfhom::sweep::{cell_mesh, cell_solution, macro_mesh};
use std::path::PathBuf;

fn unit_source() -> ProblemSpec {
    ProblemSpec::parse(&[SpeciesText::new("1", "0", "0", "1", "0", 1.0)]).unwrap()
}

fn isotropic<'a>(mesh: &'a Mesh, spec: &'a ProblemSpec, c: f64, porosity: f64) -> MacroProblem<'a> {
    MacroProblem {
        mesh,
        q: vec![[[c, 0.0], [0.0, c]]],
        porosity,
        surf_a: vec![0.0],
        surf_b: vec![0.0],
        reactions: spec.species.iter().map(|s| &s.reaction).collect(),
        surface: spec.species.iter().map(|s| &s.surface_reaction).collect(),
        mode: MacroMode::VolumeOnly,
    }
}

fn centre(mesh: &Mesh) -> usize {
    mesh.vertices.iter().position(|p| p[0] == 0.5 && p[1] == 0.5).unwrap()
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

#[test]
fn unit_tensor_reproduces_the_poisson_centre_value() {
    let mesh = build_square_mesh(64);
    let spec = unit_source();
    let (u, report) = solve_macro(&isotropic(&mesh, &spec, 1.0, 1.0), &PicardOptions::default()).unwrap();
    assert!(report.converged);
    let v = u.species(0)[centre(&mesh)];
    assert!((v - 0.07367).abs() <= 5e-4, "{v}");
}

#[test]
fn scaling_the_tensor_scales_the_solution_inversely() {
    let mesh = build_square_mesh(32);
    let spec = unit_source();
    let (u1, _) = solve_macro(&isotropic(&mesh, &spec, 1.0, 1.0), &PicardOptions::default()).unwrap();
    let (u3, _) = solve_macro(&isotropic(&mesh, &spec, 3.0, 1.0), &PicardOptions::default()).unwrap();
    let scaled: Vec<f64> = u3.species(0).iter().map(|x| 3.0 * x).collect();
    assert!(max_rel_diff(u1.species(0), &scaled) < 1e-9);
}

#[test]
fn porosity_scales_a_constant_source() {
    let mesh = build_square_mesh(32);
    let spec = unit_source();
    let (u1, _) = solve_macro(&isotropic(&mesh, &spec, 1.0, 1.0), &PicardOptions::default()).unwrap();
    let (up, _) = solve_macro(&isotropic(&mesh, &spec, 1.0, 0.8), &PicardOptions::default()).unwrap();
    let scaled: Vec<f64> = u1.species(0).iter().map(|x| 0.8 * x).collect();
    assert!(max_rel_diff(up.species(0), &scaled) < 1e-9);
}

#[test]
fn invalid_effective_data_is_rejected() {
    let mesh = build_square_mesh(4);
    let spec = unit_source();
    let mut p = isotropic(&mesh, &spec, 1.0, 1.0);
    p.q[0][0][1] = 2.0;
    p.q[0][1][0] = 2.0;
    assert!(solve_macro(&p, &PicardOptions::default()).is_err());
    let p = isotropic(&mesh, &spec, 1.0, 0.0);
    assert!(solve_macro(&p, &PicardOptions::default()).is_err());
}

#[test]
fn unit_tensor_macro_solve_is_bit_identical_to_plain_fem() {
    let mesh = build_square_mesh(32);
    let spec = unit_source();
    let opts = PicardOptions { omega: 1.0, ..PicardOptions::default() };
    let (u, _) = solve_macro(&isotropic(&mesh, &spec, 1.5, 1.0), &opts).unwrap();
    let dofs = apply_dirichlet(&mesh, BoundaryTag::Exterior).unwrap();
    let k = dofs.reduce_matrix(&assemble_stiffness(&mesh, |_| 1.5).unwrap());
    let b = dofs.reduce_vector(&assemble_mass(&mesh).mul_vec(&vec![1.0; mesh.n_vertices()]));
    let plain = dofs.expand(&solve_linear(&k, &b, opts.cg).unwrap());
    assert!(u.species(0).iter().zip(&plain).all(|(a, b)| a.to_bits() == b.to_bits()));
}

fn surface_run(mode: MacroMode) -> (Mesh, Field, perfhom::picard::PicardReport) {
    let cfg = load_config(&PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/surface.cfg")).unwrap();
    let spec = cfg.validate().unwrap();
    let cm = cell_mesh(&cfg).unwrap();
    let cell = cell_solution(&cfg, &spec, &cm, 1).unwrap();
    let mm = macro_mesh(&cfg, 4);
    let (u, report) = solve_macro(&MacroProblem::from_cell(&mm, &cell, &spec, mode), &cfg.picard()).unwrap();
    (mm, u, report)
}

#[test]
fn surface_terms_change_the_homogenized_solution() {
    let (mesh, with, report) = surface_run(MacroMode::WithSurface);
    let (_, without, _) = surface_run(MacroMode::VolumeOnly);
    assert!(report.converged);
    assert!(report.kappa_hat().is_none_or(|k| k < 1.0));
    let diff = with.sub(&without).h1_seminorm(&mesh);
    assert!(diff > 1e-3 * without.h1_seminorm(&mesh), "{diff}");
    // The linear exchange term feeds the species, so the solution grows.
    let c = centre(&mesh);
    assert!(with.species(0)[c] > without.species(0)[c]);
    let golden = format!(
        "iterations {}\ncentre {:.9e}\nseminorm {:.9e}\n",
        report.iterations(),
        with.species(0)[c],
        with.h1_seminorm(&mesh)
    );
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/macro_surface.txt");
    if std::env::var_os("PERFHOM_BLESS").is_some() {
        std::fs::write(&path, &golden).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap();
    for (e, a) in expected.lines().zip(golden.lines()) {
        let (ek, ev) = e.split_once(' ').unwrap();
        let (ak, av) = a.split_once(' ').unwrap();
        assert_eq!(ek, ak);
        let (x, y): (f64, f64) = (ev.parse().unwrap(), av.parse().unwrap());
        assert!((x - y).abs() <= 1e-6 * x.abs(), "{ek}: {x} vs {y}");
    }
}

#[test]
fn recovered_derivatives_of_polynomials() {
    let h = 1.0 / 32.0;
    let mesh = build_square_mesh(32);
    let x1: Vec<f64> = mesh.vertices.iter().map(|p| p[0]).collect();
    for g in recover_gradient(&mesh, &x1) {
        assert!((g[0] - 1.0).abs() < 1e-12 && g[1].abs() < 1e-12);
    }
    let sq: Vec<f64> = mesh.vertices.iter().map(|p| p[0] * p[0]).collect();
    let hess = recover_hessian(&mesh, &sq);
    for (p, hv) in mesh.vertices.iter().zip(&hess) {
        let interior = p.iter().all(|&x| x > 2.0 * h + 1e-12 && x < 1.0 - 2.0 * h - 1e-12);
        if interior {
            assert!((hv[0][0] - 2.0).abs() <= 0.1, "{p:?} {hv:?}");
            assert!(hv[0][1].abs() <= 0.1 && hv[1][0].abs() <= 0.1 && hv[1][1].abs() <= 0.1, "{p:?} {hv:?}");
        }
    }
    let constant = vec![4.2; mesh.n_vertices()];
    assert!(recover_gradient(&mesh, &constant).iter().flatten().all(|&x| x == 0.0));
    assert!(recover_hessian(&mesh, &constant).iter().flatten().flatten().all(|&x| x == 0.0));
}

#[test]
fn homogenized_solution_self_converges() {
    let spec = unit_source();
    let values: Vec<f64> = [8, 16, 32, 64]
        .iter()
        .map(|&n| {
            let mesh = build_square_mesh(n);
            let (u, _) = solve_macro(&isotropic(&mesh, &spec, 0.7, 0.9), &PicardOptions::default()).unwrap();
            u.species(0)[centre(&mesh)]
        })
        .collect();
    let diffs: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{values:?}");
}
