//! Triangulations of the perforated unit cell and of the ε-tiled perforated
//! unit square.
//!
//! The unit cell mesh is an annular structured grid: one ring of vertices on
//! the cell boundary, one on the hole boundary, and graded layers in between.
//! The four cell faces carry uniformly spaced vertices, so opposite faces
//! match one-to-one and the perforated domain is obtained by tiling copies of
//! the cell mesh without re-meshing.

mod generate;
mod io;
mod locate;
mod quality;

pub use generate::{build_perforated_domain_mesh, build_square_mesh, build_unit_cell_mesh};
pub use io::{read_mesh, write_mesh, MeshFormatError};
pub use locate::PointLocator;
pub use quality::{mesh_quality, QualityReport, QUALITY_FLOOR_DEG};

use sha2::{Digest, Sha256};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh quality failure: {0}")]
    QualityFailure(String),
    #[error("invalid cell geometry: {0}")]
    GeometryError(String),
    #[error("tiling error: {0}")]
    TilingError(String),
    #[error("invalid mesh parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HoleShape {
    Disk,
    Square,
}

impl HoleShape {
    pub fn name(self) -> &'static str {
        match self {
            HoleShape::Disk => "disk",
            HoleShape::Square => "square",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "disk" => Some(HoleShape::Disk),
            "square" => Some(HoleShape::Square),
            _ => None,
        }
    }
}

impl fmt::Display for HoleShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The hole Y₀ centred in the unit cell Y = (0,1)².
///
/// `radius` is the disk radius or the half-side of a square hole. A radius of
/// zero means the cell is not perforated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellGeometry {
    pub shape: HoleShape,
    pub radius: f64,
}

impl CellGeometry {
    pub fn disk(radius: f64) -> Self {
        CellGeometry { shape: HoleShape::Disk, radius }
    }

    pub fn square(half_side: f64) -> Self {
        CellGeometry { shape: HoleShape::Square, radius: half_side }
    }

    pub fn no_hole() -> Self {
        CellGeometry { shape: HoleShape::Disk, radius: 0.0 }
    }

    pub fn has_hole(&self) -> bool {
        self.radius > 0.0
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        if !self.radius.is_finite() || self.radius < 0.0 {
            return Err(MeshError::GeometryError(format!(
                "hole size must be a non-negative number, got {}",
                self.radius
            )));
        }
        if self.radius >= 0.5 {
            return Err(MeshError::GeometryError(format!(
                "{} hole of size {} touches the cell boundary",
                self.shape, self.radius
            )));
        }
        Ok(())
    }

    /// Analytic pore volume |Y₁|.
    pub fn pore_area(&self) -> f64 {
        let r = self.radius;
        match self.shape {
            HoleShape::Disk => 1.0 - std::f64::consts::PI * r * r,
            HoleShape::Square => 1.0 - 4.0 * r * r,
        }
    }

    /// Analytic hole perimeter |∂Y₀|.
    pub fn hole_perimeter(&self) -> f64 {
        match self.shape {
            HoleShape::Disk => 2.0 * std::f64::consts::PI * self.radius,
            HoleShape::Square => 8.0 * self.radius,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Hole,
    Exterior,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Hole => "HOLE",
            BoundaryTag::Exterior => "EXTERIOR",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

/// Provenance of a mesh built by tiling a unit-cell mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct Tiling {
    /// Hash of the unit-cell mesh the tiles were copied from.
    pub cell_hash: String,
    /// Number of cells along each side of the unit square (1/ε).
    pub cells_per_side: usize,
    /// For every vertex, the master vertex of the unit-cell mesh it is a copy of.
    pub cell_vertex: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// (master, slave) pairs identifying opposite faces of the unit cell.
    pub periodic_pairs: Vec<(usize, usize)>,
    pub epsilon: f64,
    pub geometry: CellGeometry,
    /// Target edge length the mesh was generated with.
    pub h: f64,
    pub tiling: Option<Tiling>,
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [p, q, r] = self.triangle_coords(t);
        signed_area(p, q, r)
    }

    pub fn area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.signed_area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [p, q, r] = self.triangle_coords(t);
        [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
    }

    /// Cell coordinates y = x/ε mod 1 of a physical point.
    pub fn cell_coords(&self, x: [f64; 2]) -> [f64; 2] {
        if self.epsilon == 1.0 {
            return x;
        }
        let y0 = x[0] / self.epsilon;
        let y1 = x[1] / self.epsilon;
        [y0 - y0.floor(), y1 - y1.floor()]
    }

    pub fn edges_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = [usize; 2]> + '_ {
        self.boundary_edges.iter().filter(move |e| e.tag == tag).map(|e| e.vertices)
    }

    /// Sorted, deduplicated vertices lying on edges with `tag`.
    pub fn boundary_vertices(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut vs: Vec<usize> = self.edges_with_tag(tag).flatten().collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    pub fn boundary_length(&self, tag: BoundaryTag) -> f64 {
        self.edges_with_tag(tag)
            .map(|[a, b]| dist(self.vertices[a], self.vertices[b]))
            .sum()
    }

    /// Content hash over the geometric payload (comments excluded).
    pub fn hash(&self) -> String {
        let text = io::mesh_to_string(self, &[]);
        let digest = Sha256::digest(text.as_bytes());
        hex::encode(&digest[..16])
    }

    /// Resolves periodic chains: for every vertex, its root master and the
    /// integer lattice shift from the root to the vertex.
    pub fn periodic_roots(&self) -> Vec<(usize, [i64; 2])> {
        let n = self.n_vertices();
        let mut parent: Vec<Option<usize>> = vec![None; n];
        for &(m, s) in &self.periodic_pairs {
            parent[s] = Some(m);
        }
        (0..n)
            .map(|v| {
                let mut cur = v;
                let mut shift = [0i64; 2];
                let mut guard = 0;
                while let Some(m) = parent[cur] {
                    let a = self.vertices[m];
                    let b = self.vertices[cur];
                    shift[0] += (b[0] - a[0]).round() as i64;
                    shift[1] += (b[1] - a[1]).round() as i64;
                    cur = m;
                    guard += 1;
                    assert!(guard <= n, "cyclic periodic pairing");
                }
                (cur, shift)
            })
            .collect()
    }
}

pub(crate) fn signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

pub(crate) fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}
