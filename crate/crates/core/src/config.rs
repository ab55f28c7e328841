//! Run configuration: a line-oriented `section.key = value` text format with
//! documented defaults, validation and a content hash.

use crate::cell::ThetaBoundary;
use crate::corrector::CutoffConvention;
use crate::error::{Error, Result};
use crate::fem::CgOptions;
use crate::geometry::{CellGeometry, HoleShape};
use crate::macro_solver::MacroMode;
use crate::picard::PicardOptions;
use crate::problem::{ProblemSpec, SpeciesText};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HoleKind {
    None,
    Shape(HoleShape),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub hole: HoleKind,
    /// Disk radius or square half-side.
    pub radius: f64,
    /// 1/ε for every ε of the sweep.
    pub eps_inv: Vec<usize>,
    /// h = ε / h_ratio on every mesh.
    pub h_ratio: usize,
    pub species: Vec<SpeciesText>,
    pub tol: f64,
    pub max_iter: usize,
    pub omega: f64,
    pub linear_tol: f64,
    pub cutoff: CutoffConvention,
    pub macro_mode: MacroMode,
    pub order: usize,
    pub theta_boundary: ThetaBoundary,
    pub jobs: usize,
    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            hole: HoleKind::Shape(HoleShape::Disk),
            radius: 0.25,
            eps_inv: vec![4, 8, 16, 32],
            h_ratio: 8,
            species: vec![SpeciesText::new("1", "0", "0", "0", "0", 1.0)],
            tol: 1e-8,
            max_iter: 200,
            omega: 0.8,
            linear_tol: 1e-12,
            cutoff: CutoffConvention::Standard,
            macro_mode: MacroMode::VolumeOnly,
            order: 1,
            theta_boundary: ThetaBoundary::PureDiffusion,
            jobs: 1,
            output_dir: "out".into(),
        }
    }
}

fn theta_name(t: ThetaBoundary) -> &'static str {
    match t {
        ThetaBoundary::PureDiffusion => "pure",
        ThetaBoundary::Frozen => "frozen",
    }
}

/// Parses "1/4", "0.25" or "4" style ε entries; returns 1/ε.
pub fn parse_epsilon(s: &str) -> std::result::Result<usize, String> {
    let s = s.trim();
    let value = if let Some((num, den)) = s.split_once('/') {
        let (n, d) = (num.trim().parse::<f64>(), den.trim().parse::<f64>());
        match (n, d) {
            (Ok(n), Ok(d)) if d != 0.0 => n / d,
            _ => return Err(format!("'{s}' is not a number or fraction")),
        }
    } else {
        s.parse::<f64>().map_err(|_| format!("'{s}' is not a number or fraction"))?
    };
    if !(value > 0.0 && value <= 1.0) {
        return Err(format!("ε = {s} must lie in (0, 1]"));
    }
    let inv = 1.0 / value;
    let k = inv.round();
    if (inv - k).abs() > 1e-9 * k {
        return Err(format!("ε = {s} is not the reciprocal of an integer"));
    }
    Ok(k as usize)
}

fn parse_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(parse_epsilon).collect()
}

impl RunConfig {
    pub fn geometry(&self) -> CellGeometry {
        match self.hole {
            HoleKind::None => CellGeometry::no_hole(),
            HoleKind::Shape(HoleShape::Disk) => CellGeometry::disk(self.radius),
            HoleKind::Shape(HoleShape::Square) => CellGeometry::square(self.radius),
        }
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.eps_inv.iter().map(|&k| 1.0 / k as f64).collect()
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        ProblemSpec::parse(&self.species)
    }

    pub fn picard(&self) -> PicardOptions {
        PicardOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            omega: self.omega,
            cg: self.cg(),
            keep_iterates: false,
        }
    }

    pub fn cg(&self) -> CgOptions {
        CgOptions { tol: self.linear_tol, max_iter: None }
    }

    /// Unit-cell mesh size matching h = ε / h_ratio after tiling.
    pub fn cell_h(&self) -> f64 {
        1.0 / self.h_ratio as f64
    }

    /// Semantic checks beyond syntax; returns the parsed problem.
    pub fn validate(&self) -> Result<ProblemSpec> {
        let v = |m: String| Err(Error::Validation(m));
        self.geometry().validate().map_err(|e| Error::Validation(e.to_string()))?;
        if self.eps_inv.is_empty() {
            return v("geometry.eps lists no ε values".into());
        }
        let mut seen = self.eps_inv.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.eps_inv.len() {
            return v("geometry.eps repeats a value".into());
        }
        if self.h_ratio < 4 {
            return v(format!("geometry.h_ratio = {} must be at least 4", self.h_ratio));
        }
        if !(self.tol > 0.0) || !(self.linear_tol > 0.0) {
            return v("solver tolerances must be positive".into());
        }
        if self.max_iter == 0 {
            return v("solver.max_iter must be at least 1".into());
        }
        if !(self.omega > 0.0 && self.omega <= 1.0) {
            return v(format!("solver.omega = {} must lie in (0, 1]", self.omega));
        }
        if self.order > 2 {
            return v(format!("solver.order = {} must be 0, 1 or 2", self.order));
        }
        if self.jobs == 0 {
            return v("solver.jobs must be at least 1".into());
        }
        let spec = self.problem()?;
        spec.validate(&self.geometry())?;
        Ok(spec)
    }

    /// Canonical text form: every key, fixed order, shortest round-trip floats.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let hole = match self.hole {
            HoleKind::None => "none",
            HoleKind::Shape(h) => h.name(),
        };
        let eps: Vec<String> = self.eps_inv.iter().map(|k| format!("1/{k}")).collect();
        let _ = writeln!(s, "geometry.hole = {hole}");
        let _ = writeln!(s, "geometry.radius = {}", self.radius);
        let _ = writeln!(s, "geometry.eps = {}", eps.join(", "));
        let _ = writeln!(s, "geometry.h_ratio = {}", self.h_ratio);
        let _ = writeln!(s, "species.count = {}", self.species.len());
        for (i, sp) in self.species.iter().enumerate() {
            let k = i + 1;
            let _ = writeln!(s, "species.d{k} = {}", sp.d);
            let _ = writeln!(s, "species.a{k} = {}", sp.a);
            let _ = writeln!(s, "species.b{k} = {}", sp.b);
            let _ = writeln!(s, "species.R{k} = {}", sp.r);
            let _ = writeln!(s, "species.F{k} = {}", sp.f);
            let _ = writeln!(s, "species.alpha{k} = {}", sp.alpha);
        }
        let _ = writeln!(s, "solver.tol = {}", self.tol);
        let _ = writeln!(s, "solver.max_iter = {}", self.max_iter);
        let _ = writeln!(s, "solver.omega = {}", self.omega);
        let _ = writeln!(s, "solver.linear_tol = {}", self.linear_tol);
        let _ = writeln!(s, "solver.cutoff = {}", self.cutoff);
        let _ = writeln!(s, "solver.macro_mode = {}", self.macro_mode);
        let _ = writeln!(s, "solver.order = {}", self.order);
        let _ = writeln!(s, "solver.theta_boundary = {}", theta_name(self.theta_boundary));
        let _ = writeln!(s, "solver.jobs = {}", self.jobs);
        let _ = writeln!(s, "output.dir = {}", self.output_dir);
        s
    }

    /// First 16 hex digits of the SHA-256 of the canonical text. The worker
    /// count and output directory do not influence results and are left out.
    pub fn hash(&self) -> String {
        let canonical = RunConfig { jobs: 1, output_dir: String::new(), ..self.clone() }.to_text();
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.trim();
            if body.is_empty() || body.starts_with('#') {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| Error::Config { line, message: format!("expected 'section.key = value', got '{body}'") })?;
            let key = key.trim().to_string();
            if !key.contains('.') {
                return Err(Error::Config { line, message: format!("key '{key}' has no section") });
            }
            if entries.insert(key.clone(), (line, value.trim().to_string())).is_some() {
                return Err(Error::Config { line, message: format!("duplicate key '{key}'") });
            }
        }
        let mut cfg = RunConfig::default();
        let count = match entries.get("species.count") {
            Some((line, v)) => v
                .parse::<usize>()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| Error::Config { line: *line, message: format!("species.count '{v}' must be a positive integer") })?,
            None => 1,
        };
        let mut species: Vec<(SpeciesText, bool)> =
            (0..count).map(|_| (SpeciesText::new("1", "0", "0", "0", "0", 0.0), false)).collect();
        for (key, (line, value)) in &entries {
            let line = *line;
            let err = |m: String| Error::Config { line, message: m };
            let num = |v: &str| v.parse::<f64>().map_err(|_| err(format!("{key}: '{v}' is not a number")));
            let int = |v: &str| v.parse::<usize>().map_err(|_| err(format!("{key}: '{v}' is not a non-negative integer")));
            match key.as_str() {
                "geometry.hole" => {
                    cfg.hole = match value.as_str() {
                        "none" => HoleKind::None,
                        other => HoleKind::Shape(
                            HoleShape::parse(other).ok_or_else(|| err(format!("unknown hole shape '{other}'")))?,
                        ),
                    }
                }
                "geometry.radius" => cfg.radius = num(value)?,
                "geometry.eps" => cfg.eps_inv = parse_list(value).map_err(|m| Error::Validation(format!("line {line}: {m}")))?,
                "geometry.h_ratio" => cfg.h_ratio = int(value)?,
                "species.count" => {}
                "solver.tol" => cfg.tol = num(value)?,
                "solver.max_iter" => cfg.max_iter = int(value)?,
                "solver.omega" => cfg.omega = num(value)?,
                "solver.linear_tol" => cfg.linear_tol = num(value)?,
                "solver.cutoff" => {
                    cfg.cutoff = CutoffConvention::parse(value)
                        .ok_or_else(|| err(format!("solver.cutoff must be 'paper' or 'standard', got '{value}'")))?
                }
                "solver.macro_mode" => {
                    cfg.macro_mode = MacroMode::parse(value)
                        .ok_or_else(|| err(format!("solver.macro_mode must be 'volume_only' or 'with_surface', got '{value}'")))?
                }
                "solver.order" => cfg.order = int(value)?,
                "solver.theta_boundary" => {
                    cfg.theta_boundary = match value.as_str() {
                        "pure" => ThetaBoundary::PureDiffusion,
                        "frozen" => ThetaBoundary::Frozen,
                        _ => return Err(err(format!("solver.theta_boundary must be 'pure' or 'frozen', got '{value}'"))),
                    }
                }
                "solver.jobs" => cfg.jobs = int(value)?,
                "output.dir" => cfg.output_dir = value.clone(),
                k if k.starts_with("species.") => {
                    let rest = &k["species.".len()..];
                    let split = rest.find(|c: char| c.is_ascii_digit()).ok_or_else(|| err(format!("unknown key '{k}'")))?;
                    let (field, idx) = rest.split_at(split);
                    let idx: usize = idx.parse().map_err(|_| err(format!("unknown key '{k}'")))?;
                    if idx == 0 || idx > count {
                        return Err(err(format!("{k} refers to species {idx} but species.count = {count}")));
                    }
                    let (sp, alpha_set) = &mut species[idx - 1];
                    match field {
                        "d" => sp.d = value.clone(),
                        "a" => sp.a = value.clone(),
                        "b" => sp.b = value.clone(),
                        "R" => sp.r = value.clone(),
                        "F" => sp.f = value.clone(),
                        "alpha" => {
                            sp.alpha = num(value)?;
                            *alpha_set = true;
                        }
                        _ => return Err(err(format!("unknown key '{k}'"))),
                    }
                }
                k => return Err(err(format!("unknown key '{k}'"))),
            }
        }
        cfg.species = Vec::with_capacity(count);
        for (mut sp, alpha_set) in species {
            if !alpha_set {
                sp.alpha = default_alpha(&sp.d)?;
            }
            cfg.species.push(sp);
        }
        Ok(cfg)
    }
}

/// Without an explicit floor, α_i is the smallest sampled value of d_i.
fn default_alpha(d: &str) -> Result<f64> {
    let e = crate::expr::ReactionExpr::parse(d, 2, crate::expr::VarKind::Space)
        .map_err(|e| Error::Validation(format!("d: {e}")))?;
    let n = 33;
    let mut lo = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            let y = [(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64];
            lo = lo.min(e.eval(&y)?);
        }
    }
    Ok(lo)
}

/// Reads, parses and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg = RunConfig::parse(&text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn save_config(cfg: &RunConfig, path: &Path) -> Result<()> {
    std::fs::write(path, cfg.to_text())?;
    Ok(())
}
