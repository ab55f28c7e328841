//! Species data of the semi-linear system: diffusion d_i(y), surface
//! coefficients a_i(y), b_i(y), volume reactions R_i(u), surface reactions
//! F_i(u_i) and ellipticity floors α_i.

use crate::error::{Error, Result};
use crate::expr::{ReactionExpr, VarKind};
use crate::geometry::CellGeometry;

#[derive(Clone, Debug, PartialEq)]
pub struct SpeciesSpec {
    pub diffusion: ReactionExpr,
    pub surface_a: ReactionExpr,
    pub surface_b: ReactionExpr,
    pub reaction: ReactionExpr,
    pub surface_reaction: ReactionExpr,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub species: Vec<SpeciesSpec>,
}

/// Expression strings for one species, parsed by [`ProblemSpec::parse`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpeciesText {
    pub d: String,
    pub a: String,
    pub b: String,
    pub r: String,
    pub f: String,
    pub alpha: f64,
}

impl SpeciesText {
    pub fn new(d: &str, a: &str, b: &str, r: &str, f: &str, alpha: f64) -> Self {
        SpeciesText { d: d.into(), a: a.into(), b: b.into(), r: r.into(), f: f.into(), alpha }
    }
}

fn sample_grid(n: usize) -> impl Iterator<Item = [f64; 2]> {
    (0..n).flat_map(move |i| (0..n).map(move |j| [(i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64]))
}

fn hole_samples(geom: &CellGeometry, n: usize) -> Vec<[f64; 2]> {
    if !geom.has_hole() {
        return sample_grid(8).collect();
    }
    (0..n)
        .map(|k| {
            let t = k as f64 / n as f64;
            match geom.shape {
                crate::geometry::HoleShape::Disk => {
                    let th = 2.0 * std::f64::consts::PI * t;
                    [0.5 + geom.radius * th.cos(), 0.5 + geom.radius * th.sin()]
                }
                crate::geometry::HoleShape::Square => {
                    let s = 4.0 * t;
                    let (side, u) = (s.floor() as usize, s.fract());
                    let r = geom.radius;
                    let (x, y) = match side {
                        0 => (-r + 2.0 * r * u, -r),
                        1 => (r, -r + 2.0 * r * u),
                        2 => (r - 2.0 * r * u, r),
                        _ => (-r, r - 2.0 * r * u),
                    };
                    [0.5 + x, 0.5 + y]
                }
            }
        })
        .collect()
}

impl ProblemSpec {
    pub fn parse(species: &[SpeciesText]) -> Result<Self> {
        let n = species.len();
        if n == 0 {
            return Err(Error::Validation("at least one species is required".into()));
        }
        let parsed = species
            .iter()
            .enumerate()
            .map(|(i, s)| -> Result<SpeciesSpec> {
                let ctx = |what: &str, e: crate::expr::ExprError| {
                    Error::Validation(format!("species {}: {what}: {e}", i + 1))
                };
                let surface_reaction =
                    ReactionExpr::parse(&s.f, n, VarKind::Species).map_err(|e| ctx("F", e))?;
                if surface_reaction.variables().iter().any(|&v| v != i) {
                    return Err(Error::Validation(format!(
                        "species {}: F may only depend on u{}",
                        i + 1,
                        i + 1
                    )));
                }
                Ok(SpeciesSpec {
                    diffusion: ReactionExpr::parse(&s.d, 2, VarKind::Space).map_err(|e| ctx("d", e))?,
                    surface_a: ReactionExpr::parse(&s.a, 2, VarKind::Space).map_err(|e| ctx("a", e))?,
                    surface_b: ReactionExpr::parse(&s.b, 2, VarKind::Space).map_err(|e| ctx("b", e))?,
                    reaction: ReactionExpr::parse(&s.r, n, VarKind::Species).map_err(|e| ctx("R", e))?,
                    surface_reaction,
                    alpha: s.alpha,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ProblemSpec { species: parsed })
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    /// Smallest ellipticity floor over all species.
    pub fn alpha(&self) -> f64 {
        self.species.iter().map(|s| s.alpha).fold(f64::INFINITY, f64::min)
    }

    /// Checks ellipticity d_i ≥ α_i > 0 on a sample grid of Y and a_i, b_i ≥ 0
    /// on sample points of the hole boundary.
    pub fn validate(&self, geom: &CellGeometry) -> Result<()> {
        for (i, s) in self.species.iter().enumerate() {
            let k = i + 1;
            if !(s.alpha > 0.0) {
                return Err(Error::Validation(format!(
                    "species {k}: ellipticity floor alpha = {} must be positive",
                    s.alpha
                )));
            }
            for y in sample_grid(33) {
                let d = s.diffusion.eval(&y)?;
                if !(d >= s.alpha) {
                    return Err(Error::Validation(format!(
                        "species {k}: d({:.3}, {:.3}) = {d} is below the ellipticity floor {}",
                        y[0], y[1], s.alpha
                    )));
                }
            }
            for y in hole_samples(geom, 64) {
                for (name, e) in [("a", &s.surface_a), ("b", &s.surface_b)] {
                    let v = e.eval(&y)?;
                    if !(v >= 0.0) {
                        return Err(Error::Validation(format!(
                            "species {k}: {name}({:.3}, {:.3}) = {v} is negative; surface rates must be non-negative",
                            y[0], y[1]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
