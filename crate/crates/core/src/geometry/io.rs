//! Plain-text mesh format.
//!
//! ```text
//! # optional comment lines
//! META epsilon <f64>
//! META hole <disk|square> <size>
//! META h <f64>
//! META cells <k>            (tiled meshes only)
//! META cell_hash <hex>      (tiled meshes only)
//! VERTICES <n>
//! <index> <x> <y>
//! TRIANGLES <n>
//! <v0> <v1> <v2>
//! EDGES <n>
//! <v0> <v1> <HOLE|EXTERIOR>
//! PERIODIC <n>
//! <master> <slave>
//! TILEMAP <n>               (tiled meshes only)
//! <vertex> <cell vertex>
//! ```
//!
//! Floats are written in shortest round-trip form, so write → read is exact.

use super::{BoundaryEdge, BoundaryTag, CellGeometry, HoleShape, Mesh, Tiling};
use std::fmt::Write as _;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
#[error("mesh file line {line}: {message}")]
pub struct MeshFormatError {
    pub line: usize,
    pub message: String,
}

pub(crate) fn mesh_to_string(mesh: &Mesh, comments: &[String]) -> String {
    let mut s = String::new();
    for c in comments {
        let _ = writeln!(s, "# {c}");
    }
    let _ = writeln!(s, "META epsilon {}", mesh.epsilon);
    let _ = writeln!(s, "META hole {} {}", mesh.geometry.shape, mesh.geometry.radius);
    let _ = writeln!(s, "META h {}", mesh.h);
    if let Some(t) = &mesh.tiling {
        let _ = writeln!(s, "META cells {}", t.cells_per_side);
        let _ = writeln!(s, "META cell_hash {}", t.cell_hash);
    }
    let _ = writeln!(s, "VERTICES {}", mesh.vertices.len());
    for (i, v) in mesh.vertices.iter().enumerate() {
        let _ = writeln!(s, "{i} {} {}", v[0], v[1]);
    }
    let _ = writeln!(s, "TRIANGLES {}", mesh.triangles.len());
    for t in &mesh.triangles {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "EDGES {}", mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let _ = writeln!(s, "{} {} {}", e.vertices[0], e.vertices[1], e.tag.name());
    }
    let _ = writeln!(s, "PERIODIC {}", mesh.periodic_pairs.len());
    for (m, sl) in &mesh.periodic_pairs {
        let _ = writeln!(s, "{m} {sl}");
    }
    if let Some(t) = &mesh.tiling {
        let _ = writeln!(s, "TILEMAP {}", t.cell_vertex.len());
        for (v, c) in t.cell_vertex.iter().enumerate() {
            let _ = writeln!(s, "{v} {c}");
        }
    }
    s
}

/// Serializes `mesh`, prefixing each entry of `comments` as a `#` line.
pub fn write_mesh(mesh: &Mesh, comments: &[String]) -> String {
    mesh_to_string(mesh, comments)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_content(&mut self) -> Option<&'a str> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let l = l.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            return Some(l);
        }
        None
    }

    fn err(&self, message: impl Into<String>) -> MeshFormatError {
        MeshFormatError { line: self.line, message: message.into() }
    }

    fn fields<const N: usize>(&mut self, what: &str) -> Result<[&'a str; N], MeshFormatError> {
        let l = self.next_content().ok_or_else(|| self.err(format!("unexpected end of file in {what}")))?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        parts.try_into().map_err(|_| self.err(format!("expected {N} fields in {what}")))
    }
}

fn num<T: FromStr>(lines: &Lines, s: &str) -> Result<T, MeshFormatError> {
    s.parse().map_err(|_| lines.err(format!("invalid number '{s}'")))
}

pub fn read_mesh(text: &str) -> Result<Mesh, MeshFormatError> {
    let mut lines = Lines { inner: text.lines().enumerate(), line: 0 };
    let mut epsilon = None;
    let mut geometry = None;
    let mut h = None;
    let mut cells = None;
    let mut cell_hash = None;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut boundary_edges = Vec::new();
    let mut periodic_pairs = Vec::new();
    let mut cell_vertex: Option<Vec<usize>> = None;

    while let Some(l) = lines.next_content() {
        let parts: Vec<&str> = l.split_whitespace().collect();
        match parts.as_slice() {
            ["META", "epsilon", v] => epsilon = Some(num::<f64>(&lines, v)?),
            ["META", "hole", shape, r] => {
                let shape = HoleShape::parse(shape).ok_or_else(|| lines.err("unknown hole shape"))?;
                geometry = Some(CellGeometry { shape, radius: num(&lines, r)? });
            }
            ["META", "h", v] => h = Some(num::<f64>(&lines, v)?),
            ["META", "cells", v] => cells = Some(num::<usize>(&lines, v)?),
            ["META", "cell_hash", v] => cell_hash = Some(v.to_string()),
            ["VERTICES", n] => {
                let n: usize = num(&lines, n)?;
                vertices.reserve(n);
                for i in 0..n {
                    let [idx, x, y] = lines.fields::<3>("VERTICES")?;
                    if num::<usize>(&lines, idx)? != i {
                        return Err(lines.err("vertex indices must be consecutive"));
                    }
                    vertices.push([num(&lines, x)?, num(&lines, y)?]);
                }
            }
            ["TRIANGLES", n] => {
                let n: usize = num(&lines, n)?;
                for _ in 0..n {
                    let [a, b, c] = lines.fields::<3>("TRIANGLES")?;
                    triangles.push([num(&lines, a)?, num(&lines, b)?, num(&lines, c)?]);
                }
            }
            ["EDGES", n] => {
                let n: usize = num(&lines, n)?;
                for _ in 0..n {
                    let [a, b, tag] = lines.fields::<3>("EDGES")?;
                    let tag = match tag {
                        "HOLE" => BoundaryTag::Hole,
                        "EXTERIOR" => BoundaryTag::Exterior,
                        _ => return Err(lines.err(format!("unknown edge tag '{tag}'"))),
                    };
                    boundary_edges.push(BoundaryEdge { vertices: [num(&lines, a)?, num(&lines, b)?], tag });
                }
            }
            ["PERIODIC", n] => {
                let n: usize = num(&lines, n)?;
                for _ in 0..n {
                    let [m, s] = lines.fields::<2>("PERIODIC")?;
                    periodic_pairs.push((num(&lines, m)?, num(&lines, s)?));
                }
            }
            ["TILEMAP", n] => {
                let n: usize = num(&lines, n)?;
                let mut map = Vec::with_capacity(n);
                for i in 0..n {
                    let [v, c] = lines.fields::<2>("TILEMAP")?;
                    if num::<usize>(&lines, v)? != i {
                        return Err(lines.err("tile map indices must be consecutive"));
                    }
                    map.push(num(&lines, c)?);
                }
                cell_vertex = Some(map);
            }
            _ => return Err(lines.err(format!("unrecognized line '{l}'"))),
        }
    }

    let nv = vertices.len();
    let check = |v: usize| v < nv;
    if !triangles.iter().all(|t| t.iter().all(|&v| check(v)))
        || !boundary_edges.iter().all(|e| e.vertices.iter().all(|&v| check(v)))
        || !periodic_pairs.iter().all(|&(m, s)| check(m) && check(s))
    {
        return Err(MeshFormatError { line: 0, message: "vertex index out of range".into() });
    }
    let missing = |what: &str| MeshFormatError { line: 0, message: format!("missing META {what}") };
    let tiling = match (cells, cell_hash, cell_vertex) {
        (Some(cells_per_side), Some(cell_hash), Some(cell_vertex)) => {
            Some(Tiling { cell_hash, cells_per_side, cell_vertex })
        }
        (None, None, None) => None,
        _ => return Err(MeshFormatError { line: 0, message: "incomplete tiling metadata".into() }),
    };
    Ok(Mesh {
        vertices,
        triangles,
        boundary_edges,
        periodic_pairs,
        epsilon: epsilon.ok_or_else(|| missing("epsilon"))?,
        geometry: geometry.ok_or_else(|| missing("hole"))?,
        h: h.ok_or_else(|| missing("h"))?,
        tiling,
    })
}
