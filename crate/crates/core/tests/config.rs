use perfhom::cell::ThetaBoundary;
use perfhom::config::{load_config, save_config, HoleKind, RunConfig};
use perfhom::corrector::CutoffConvention;
use perfhom::geometry::HoleShape;
use perfhom::macro_solver::MacroMode;
use perfhom::problem::SpeciesText;
use perfhom::Error;
use proptest::prelude::*;

const DIFFUSION: [&str; 4] = ["1", "2 + sin(2*pi*y1)", "1 + 0.5*cos(2*pi*(y1 - y2))", "exp(0.2*sin(2*pi*y2))"];
const REACTION: [&str; 4] = ["0", "1", "u1/(1 + u1)", "0.25 - 0.1*u1"];
// Surface reactions of species k may only involve u_k; `#` stands for k.
const SURFACE: [&str; 3] = ["0", "u#/(1 + u#)", "0.5*u#"];

fn species(n: usize) -> impl Strategy<Value = Vec<SpeciesText>> {
    prop::collection::vec(
        (0..4usize, 0.0f64..2.0, 0.0f64..2.0, 0..4usize, 0..3usize, 0.05f64..0.5),
        n,
    )
    .prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(k, (d, a, b, r, f, alpha))| {
                let f = SURFACE[f].replace('#', &(k + 1).to_string());
                SpeciesText::new(DIFFUSION[d], &a.to_string(), &b.to_string(), REACTION[r], &f, alpha)
            })
            .collect()
    })
}

fn run_config() -> impl Strategy<Value = RunConfig> {
    let hole = prop_oneof![
        Just(HoleKind::None),
        Just(HoleKind::Shape(HoleShape::Disk)),
        Just(HoleKind::Shape(HoleShape::Square)),
    ];
    let eps = prop::collection::btree_set(1usize..64, 1..5).prop_map(|s| s.into_iter().collect::<Vec<_>>());
    let solver = (1e-12f64..1e-4, 1usize..500, 0.05f64..=1.0, 1e-14f64..1e-8, 0..3usize, 1usize..9);
    let modes = (any::<bool>(), any::<bool>(), any::<bool>());
    (hole, 0.05f64..0.35, eps, 4usize..64, (1usize..4).prop_flat_map(species), solver, modes, "[a-z]{1,8}(/[a-z0-9_]{1,8})?")
        .prop_map(|(hole, radius, eps_inv, h_ratio, species, (tol, max_iter, omega, linear_tol, order, jobs), (c, m, t), dir)| {
            RunConfig {
                hole,
                radius,
                eps_inv,
                h_ratio,
                species,
                tol,
                max_iter,
                omega,
                linear_tol,
                cutoff: if c { CutoffConvention::NearBoundary } else { CutoffConvention::Standard },
                macro_mode: if m { MacroMode::WithSurface } else { MacroMode::VolumeOnly },
                order,
                theta_boundary: if t { ThetaBoundary::Frozen } else { ThetaBoundary::PureDiffusion },
                jobs,
                output_dir: dir,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn saved_configurations_load_back_unchanged(cfg in run_config()) {
        prop_assert!(cfg.validate().is_ok());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        save_config(&cfg, &path).unwrap();
        let back = load_config(&path).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
        prop_assert_eq!(back.to_text(), cfg.to_text());
    }

    #[test]
    fn hash_tracks_result_relevant_fields(cfg in run_config(), jobs in 1usize..16) {
        let other = RunConfig { jobs, output_dir: "elsewhere".into(), ..cfg.clone() };
        prop_assert_eq!(other.hash(), cfg.hash());
        let changed = RunConfig { h_ratio: cfg.h_ratio + 1, ..cfg.clone() };
        prop_assert_ne!(changed.hash(), cfg.hash());
    }
}

#[test]
fn shipped_configurations_validate() {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(cfg.eps_inv.len() >= 2, "{}", path.display());
    }
}

#[test]
fn omitted_floor_defaults_to_the_smallest_diffusion_value() {
    let cfg = RunConfig::parse("species.d1 = 2 + sin(2*pi*y1)\n").unwrap();
    let alpha = cfg.species[0].alpha;
    assert!(alpha > 1.0 && alpha < 1.01, "{alpha}");
}

#[test]
fn unknown_keys_and_bad_values_report_their_line() {
    for (text, line) in [
        ("geometry.hole = disk\nsolver.colour = red\n", 2),
        ("# comment\n\nsolver.omega = fast\n", 3),
        ("species.count = 1\nspecies.d2 = 1\n", 2),
        ("geometry.hole = triangle\n", 1),
    ] {
        match RunConfig::parse(text) {
            Err(Error::Config { line: l, .. }) => assert_eq!(l, line, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn semantic_errors_are_validation_errors() {
    for text in ["solver.omega = 1.5\n", "geometry.h_ratio = 2\n", "geometry.radius = 0.5\n", "solver.order = 3\n"] {
        let cfg = RunConfig::parse(text).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Validation(_))), "{text}");
    }
}
