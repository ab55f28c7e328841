use super::norms;
use crate::geometry::{BoundaryTag, Mesh};
use std::fmt::Write as _;
use thiserror::Error;

/// Nodal values of N species on one mesh, stored species-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    n_species: usize,
    n_vertices: usize,
    values: Vec<f64>,
}

#[derive(Debug, Error)]
#[error("field file line {line}: {message}")]
pub struct FieldFormatError {
    pub line: usize,
    pub message: String,
}

impl Field {
    pub fn zeros(n_species: usize, n_vertices: usize) -> Self {
        Field { n_species, n_vertices, values: vec![0.0; n_species * n_vertices] }
    }

    pub fn from_species(species: Vec<Vec<f64>>) -> Self {
        let n_species = species.len();
        let n_vertices = species.first().map_or(0, Vec::len);
        assert!(species.iter().all(|s| s.len() == n_vertices), "ragged species data");
        Field { n_species, n_vertices, values: species.concat() }
    }

    pub fn n_species(&self) -> usize {
        self.n_species
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn species(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_vertices..(i + 1) * self.n_vertices]
    }

    pub fn species_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.n_vertices..(i + 1) * self.n_vertices]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values of all species at vertex `v`.
    pub fn at(&self, v: usize) -> Vec<f64> {
        (0..self.n_species).map(|i| self.values[i * self.n_vertices + v]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn sub(&self, other: &Field) -> Field {
        assert_eq!(self.values.len(), other.values.len());
        Field {
            n_species: self.n_species,
            n_vertices: self.n_vertices,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    fn combine(&self, mesh: &Mesh, f: impl Fn(&Mesh, &[f64]) -> f64) -> f64 {
        (0..self.n_species).map(|i| f(mesh, self.species(i)).powi(2)).sum::<f64>().sqrt()
    }

    /// ‖v‖_{V} = (Σᵢ ‖∇vᵢ‖²)^{1/2}.
    pub fn h1_seminorm(&self, mesh: &Mesh) -> f64 {
        self.combine(mesh, norms::h1_seminorm)
    }

    pub fn l2_norm(&self, mesh: &Mesh) -> f64 {
        self.combine(mesh, norms::l2_norm)
    }

    pub fn surface_l2_norm(&self, mesh: &Mesh, tag: BoundaryTag) -> f64 {
        self.combine(mesh, |m, v| norms::surface_l2_norm(m, v, tag))
    }

    /// `FIELD <mesh hash> <N>` header, then one line of N values per vertex.
    pub fn write(&self, mesh_hash: &str, comments: &[String]) -> String {
        let mut s = String::new();
        for c in comments {
            let _ = writeln!(s, "# {c}");
        }
        let _ = writeln!(s, "FIELD {mesh_hash} {}", self.n_species);
        for v in 0..self.n_vertices {
            let row: Vec<String> = (0..self.n_species)
                .map(|i| self.values[i * self.n_vertices + v].to_string())
                .collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    /// Parses a field file, returning the field and the mesh hash it names.
    pub fn read(text: &str) -> Result<(Field, String), FieldFormatError> {
        let mut header: Option<(String, usize)> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let err = |message: String| FieldFormatError { line: i + 1, message };
            let l = line.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            match &header {
                None => {
                    let parts: Vec<&str> = l.split_whitespace().collect();
                    match parts.as_slice() {
                        ["FIELD", hash, n] => {
                            let n = n.parse().map_err(|_| err(format!("invalid species count '{n}'")))?;
                            header = Some((hash.to_string(), n));
                        }
                        _ => return Err(err("expected 'FIELD <mesh hash> <N>' header".into())),
                    }
                }
                Some((_, n)) => {
                    let row: Vec<f64> = l
                        .split_whitespace()
                        .map(|x| x.parse().map_err(|_| err(format!("invalid value '{x}'"))))
                        .collect::<Result<_, _>>()?;
                    if row.len() != *n {
                        return Err(err(format!("expected {n} values, found {}", row.len())));
                    }
                    rows.push(row);
                }
            }
        }
        let (hash, n) = header.ok_or(FieldFormatError { line: 0, message: "missing FIELD header".into() })?;
        let species = (0..n).map(|i| rows.iter().map(|r| r[i]).collect()).collect::<Vec<Vec<f64>>>();
        let field = if n == 0 { Field::zeros(0, rows.len()) } else { Field::from_species(species) };
        Ok((field, hash))
    }
}
