use perfhom::fem::Field;
use perfhom::geometry::read_mesh;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn perfhom(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perfhom"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Copy of a shipped configuration with some lines replaced or appended.
fn variant(dir: &Path, base: &str, edits: &[(&str, &str)]) -> PathBuf {
    let mut text = std::fs::read_to_string(configs().join(base)).unwrap();
    for (key, value) in edits {
        let line = format!("{key} = {value}");
        match text.lines().find(|l| l.trim_start().starts_with(&format!("{key} "))) {
            Some(old) => text = text.replace(old, &line),
            None => text = format!("{text}{line}\n"),
        }
    }
    let path = dir.join(format!("{base}.edited"));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn cell_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("nonlinear.cfg");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let ra = perfhom(&["cell"], &cfg, &a);
    let rb = perfhom(&["cell"], &cfg, &b);
    assert!(ra.status.success(), "{}", stderr(&ra));
    assert_eq!(ra.stdout, rb.stdout);
    for name in ["cell.sol", "cell.mesh"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    // The echoed configuration differs only in the output directory, which
    // the hash leaves out.
    let first_line = |d: &Path| std::fs::read_to_string(d.join("config.txt")).unwrap().lines().next().unwrap().to_string();
    assert_eq!(first_line(&a), first_line(&b));
    let stdout = String::from_utf8(ra.stdout).unwrap();
    assert!(stdout.contains("species 2: q = [["), "{stdout}");
}

#[test]
fn mesh_command_writes_readable_meshes() {
    let dir = tempfile::tempdir().unwrap();
    let out = perfhom(&["mesh", "--eps", "1/2,1/4"], &configs().join("surface.cfg"), dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let cell = read_mesh(&std::fs::read_to_string(dir.path().join("cell.mesh")).unwrap()).unwrap();
    let micro = read_mesh(&std::fs::read_to_string(dir.path().join("micro_eps4.mesh")).unwrap()).unwrap();
    assert_eq!(micro.n_triangles(), 16 * cell.n_triangles());
    assert_eq!(micro.tiling.as_ref().unwrap().cell_hash, cell.hash());
}

#[test]
fn exhausted_iteration_budget_exits_two_with_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = variant(dir.path(), "nonlinear.cfg", &[("solver.max_iter", "1"), ("geometry.eps", "1/4")]);
    let out = perfhom(&["micro"], &cfg, &dir.path().join("run"));
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let field = std::fs::read_to_string(dir.path().join("run/micro_eps4.field")).unwrap();
    assert!(field.contains("not converged"), "{}", &field[..200.min(field.len())]);
    let (u, _) = Field::read(&field).unwrap();
    assert_eq!(u.n_species(), 2);
    let csv = std::fs::read_to_string(dir.path().join("run/micro_eps4_picard.csv")).unwrap();
    assert!(csv.contains("# converged false"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 2);
}

#[test]
fn invalid_configuration_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = variant(dir.path(), "benchmark.cfg", &[("solver.omega", "1.5")]);
    let out = perfhom(&["cell"], &cfg, &dir.path().join("run"));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("omega"), "{}", stderr(&out));

    let cfg = variant(dir.path(), "laminate.cfg", &[("solver.colour", "red")]);
    let out = perfhom(&["cell"], &cfg, &dir.path().join("run"));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 13"), "{}", stderr(&out));
}

#[test]
fn verify_reuses_matching_cell_solutions_and_refuses_foreign_ones() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let cfg = variant(dir.path(), "benchmark.cfg", &[("geometry.eps", "1/2, 1/4, 1/8")]);
    let first = perfhom(&["verify", "--gnuplot-script"], &cfg, &run);
    assert!(first.status.success(), "{}", stderr(&first));
    let stdout = String::from_utf8(first.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("slope=")), "{stdout}");
    let csv = std::fs::read_to_string(run.join("convergence.csv")).unwrap();
    assert!(csv.contains("epsilon,h,M,err_Veps,err_L2"));
    assert!(run.join("convergence.gp").exists());

    let again = perfhom(&["verify"], &cfg, &run);
    assert!(again.status.success(), "{}", stderr(&again));
    assert_eq!(std::fs::read_to_string(run.join("convergence.csv")).unwrap(), csv);

    let other = variant(dir.path(), "benchmark.cfg", &[("geometry.eps", "1/2, 1/4, 1/8"), ("geometry.radius", "0.2")]);
    let refused = perfhom(&["verify"], &other, &run);
    assert_eq!(refused.status.code(), Some(1));
    assert!(stderr(&refused).contains("was written by config"), "{}", stderr(&refused));
}
