//! Command-line entry point: mesh generation, cell problems, micro and
//! homogenized solves, and corrector convergence studies.

use clap::{Parser, Subcommand, ValueEnum};
use perfhom::cell::CellSolution;
use perfhom::config::{load_config, parse_epsilon, RunConfig};
use perfhom::corrector::CutoffConvention;
use perfhom::error::Error;
use perfhom::fem::{FemError, Field};
use perfhom::geometry::{write_mesh, Mesh};
use perfhom::macro_solver::{solve_macro, MacroMode, MacroProblem};
use perfhom::micro::{check_solution_properties, estimate_kappa, solve_micro};
use perfhom::picard::PicardReport;
use perfhom::problem::ProblemSpec;
use perfhom::sweep::{cell_mesh, cell_solution, macro_mesh, micro_mesh, rate_sweep_with_cell};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "perfhom", version, about = "Periodic homogenization toolkit for perforated domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Write the unit-cell mesh and the perforated-domain mesh for every ε.
    Mesh,
    /// Solve the cell problems and write the cell solution.
    Cell,
    /// Solve the microscopic problem for every ε.
    Micro,
    /// Solve the homogenized problem on the mesh matching every ε.
    Macro,
    /// Run the corrector convergence study and print the fitted slope.
    Verify,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum CutoffArg {
    Paper,
    Standard,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
#[value(rename_all = "snake_case")]
enum MacroModeArg {
    VolumeOnly,
    WithSurface,
}

#[derive(clap::Args, Debug)]
struct Overrides {
    /// Configuration file (`section.key = value` lines). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated ε list such as "1/4,1/8,1/16".
    #[arg(long, global = true)]
    eps: Option<String>,
    /// Expansion order M (0, 1 or 2).
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Worker threads for the ε sweep.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    cutoff: Option<CutoffArg>,
    #[arg(long = "macro-mode", global = true, value_enum)]
    macro_mode: Option<MacroModeArg>,
    /// Also write a gnuplot script next to the convergence CSV.
    #[arg(long = "gnuplot-script", global = true)]
    gnuplot_script: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NoConvergence { .. } | Error::Fem(FemError::NoConvergence { .. }) => 2,
        _ => 1,
    }
}

fn apply_overrides(mut cfg: RunConfig, o: &Overrides) -> Result<RunConfig, Error> {
    if let Some(out) = &o.out {
        cfg.output_dir = out.to_string_lossy().into_owned();
    }
    if let Some(list) = &o.eps {
        cfg.eps_inv = list
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(parse_epsilon)
            .collect::<Result<_, _>>()
            .map_err(|m| Error::Validation(format!("--eps: {m}")))?;
    }
    if let Some(m) = o.order {
        cfg.order = m;
    }
    if let Some(j) = o.jobs {
        cfg.jobs = j;
    }
    if let Some(c) = o.cutoff {
        cfg.cutoff = match c {
            CutoffArg::Paper => CutoffConvention::NearBoundary,
            CutoffArg::Standard => CutoffConvention::Standard,
        };
    }
    if let Some(m) = o.macro_mode {
        cfg.macro_mode = match m {
            MacroModeArg::VolumeOnly => MacroMode::VolumeOnly,
            MacroModeArg::WithSurface => MacroMode::WithSurface,
        };
    }
    Ok(cfg)
}

/// Config hash recorded in an artifact's `# config <hash>` comment.
fn artifact_hash(text: &str) -> Option<&str> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix("# config ").map(str::trim))
}

struct Run {
    cfg: RunConfig,
    spec: ProblemSpec,
    out: PathBuf,
    hash: String,
}

impl Run {
    fn comments(&self, what: &str) -> Vec<String> {
        vec![format!("config {}", self.hash), what.to_string()]
    }

    fn write(&self, name: &str, text: &str) -> Result<(), Error> {
        let path = self.out.join(name);
        std::fs::write(&path, text)?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    fn write_mesh(&self, name: &str, mesh: &Mesh, what: &str) -> Result<(), Error> {
        self.write(name, &write_mesh(mesh, &self.comments(what)))
    }

    fn write_field(&self, name: &str, field: &Field, mesh: &Mesh, what: &str) -> Result<(), Error> {
        self.write(name, &field.write(&mesh.hash(), &self.comments(what)))
    }

    fn write_report(&self, name: &str, report: &PicardReport, what: &str) -> Result<(), Error> {
        self.write(name, &report.to_csv(&self.comments(what)))
    }

    fn mesh(&self) -> Result<(), Error> {
        let cm = cell_mesh(&self.cfg)?;
        self.write_mesh("cell.mesh", &cm, "unit-cell mesh")?;
        for &k in &self.cfg.eps_inv {
            let m = micro_mesh(&cm, k)?;
            self.write_mesh(&format!("micro_eps{k}.mesh"), &m, &format!("perforated domain, eps = 1/{k}"))?;
        }
        Ok(())
    }

    fn cell(&self) -> Result<(Mesh, CellSolution), Error> {
        let cm = cell_mesh(&self.cfg)?;
        let cell = cell_solution(&self.cfg, &self.spec, &cm, self.cfg.order)?;
        self.write_mesh("cell.mesh", &cm, "unit-cell mesh")?;
        self.write("cell.sol", &cell.write(&self.comments("cell solution")))?;
        for (i, q) in cell.q.iter().enumerate() {
            println!(
                "species {}: q = [[{:.6}, {:.6}], [{:.6}, {:.6}]]  <a> = {:.6}  <b> = {:.6}",
                i + 1,
                q[0][0],
                q[0][1],
                q[1][0],
                q[1][1],
                cell.surf_a[i],
                cell.surf_b[i]
            );
        }
        println!("porosity = {:.6}", cell.porosity);
        Ok((cm, cell))
    }

    fn micro(&self) -> Result<(), Error> {
        let cm = cell_mesh(&self.cfg)?;
        for &k in &self.cfg.eps_inv {
            let m = micro_mesh(&cm, k)?;
            let tag = format!("micro solution, eps = 1/{k}");
            match solve_micro(&m, &self.spec, &self.cfg.picard()) {
                Ok((u, mut report)) => {
                    report.kappa = Some(estimate_kappa(&report, &m, &self.spec, &u)?);
                    self.write_field(&format!("micro_eps{k}.field"), &u, &m, &tag)?;
                    self.write_report(&format!("micro_eps{k}_picard.csv"), &report, &tag)?;
                    let p = check_solution_properties(&u, &m);
                    println!(
                        "eps = 1/{k}: {} iterations, min = {:.3e}, max = {:.3e}, Linf ratio = {:.4}",
                        report.iterations(),
                        p.min.iter().copied().fold(f64::INFINITY, f64::min),
                        p.max.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                        p.ratio
                    );
                }
                Err(Error::NoConvergence { diagnosis, report, partial }) => {
                    let tag = format!("{tag} (not converged: {diagnosis})");
                    self.write_field(&format!("micro_eps{k}.field"), &partial, &m, &tag)?;
                    self.write_report(&format!("micro_eps{k}_picard.csv"), &report, &tag)?;
                    return Err(Error::NoConvergence { diagnosis, report, partial });
                }
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    fn macro_(&self) -> Result<(), Error> {
        let cm = cell_mesh(&self.cfg)?;
        let cell = cell_solution(&self.cfg, &self.spec, &cm, 0)?;
        for &k in &self.cfg.eps_inv {
            let mm = macro_mesh(&self.cfg, k);
            let tag = format!("homogenized solution ({}), h = 1/{}", self.cfg.macro_mode, k * self.cfg.h_ratio);
            let problem = MacroProblem::from_cell(&mm, &cell, &self.spec, self.cfg.macro_mode);
            match solve_macro(&problem, &self.cfg.picard()) {
                Ok((u, report)) => {
                    self.write_field(&format!("macro_eps{k}.field"), &u, &mm, &tag)?;
                    self.write_report(&format!("macro_eps{k}_picard.csv"), &report, &tag)?;
                    println!("eps = 1/{k}: {} iterations", report.iterations());
                }
                Err(Error::NoConvergence { diagnosis, report, partial }) => {
                    let tag = format!("{tag} (not converged: {diagnosis})");
                    self.write_field(&format!("macro_eps{k}.field"), &partial, &mm, &tag)?;
                    self.write_report(&format!("macro_eps{k}_picard.csv"), &report, &tag)?;
                    return Err(Error::NoConvergence { diagnosis, report, partial });
                }
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    /// Reuses `cell.sol` from the output directory when its provenance
    /// matches, refuses it when it does not.
    fn verify(&self, gnuplot: bool) -> Result<(), Error> {
        let existing = self.out.join("cell.sol");
        let (cm, cell) = match std::fs::read_to_string(&existing) {
            Ok(text) => {
                let found = artifact_hash(&text).unwrap_or("none");
                if found != self.hash {
                    return Err(Error::MeshMismatch(format!(
                        "{} was written by config {found}, current config is {}; remove it or use another --out",
                        existing.display(),
                        self.hash
                    )));
                }
                let cell = CellSolution::read(&text)?;
                if self.cfg.order == 2 && cell.theta.is_none() {
                    self.cell()?
                } else {
                    (cell_mesh(&self.cfg)?, cell)
                }
            }
            Err(_) => self.cell()?,
        };
        let report = rate_sweep_with_cell(&self.cfg, &self.spec, &cm, &cell, &self.cfg.eps_inv, self.cfg.order)?;
        let what = format!("corrector study, M = {}, cutoff = {}", self.cfg.order, self.cfg.cutoff);
        self.write("convergence.csv", &report.to_csv(&self.comments(&what)))?;
        if gnuplot {
            self.write("convergence.gp", &report.gnuplot_script("convergence.csv"))?;
        }
        match report.slope {
            Some(s) => println!("slope={s:.6}"),
            None => println!("slope=degenerate (errors at the solver floor)"),
        }
        Ok(())
    }
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let cfg = match &cli.opts.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    let cfg = apply_overrides(cfg, &cli.opts)?;
    let spec = cfg.validate()?;
    let out = PathBuf::from(&cfg.output_dir);
    std::fs::create_dir_all(&out)?;
    let run = Run { hash: cfg.hash(), spec, out, cfg };
    run.write("config.txt", &format!("# config {}\n{}", run.hash, run.cfg.to_text()))?;
    match cli.command {
        Command::Mesh => run.mesh(),
        Command::Cell => run.cell().map(|_| ()),
        Command::Micro => run.micro(),
        Command::Macro => run.macro_(),
        Command::Verify => run.verify(cli.opts.gnuplot_script),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
