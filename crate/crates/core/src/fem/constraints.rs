use super::{CsrMatrix, FemError};
use crate::geometry::{BoundaryTag, Mesh};

/// Maps mesh vertices to reduced unknowns. Zero-Dirichlet vertices carry no
/// unknown; periodic slaves share the unknown of their root master.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    map: Vec<Option<usize>>,
    n_dofs: usize,
}

impl DofMap {
    pub fn identity(n_vertices: usize) -> Self {
        DofMap { map: (0..n_vertices).map(Some).collect(), n_dofs: n_vertices }
    }

    /// `dirichlet`: vertices held at zero. `periodic`: (master, slave) pairs,
    /// chains allowed.
    pub fn new(
        n_vertices: usize,
        dirichlet: &[usize],
        periodic: &[(usize, usize)],
    ) -> Result<Self, FemError> {
        let mut fixed = vec![false; n_vertices];
        for &v in dirichlet {
            fixed[v] = true;
        }
        let mut parent: Vec<Option<usize>> = vec![None; n_vertices];
        for &(m, s) in periodic {
            if fixed[s] {
                return Err(FemError::ConstraintConflict(s));
            }
            parent[s] = Some(m);
        }
        let root = |mut v: usize| {
            while let Some(m) = parent[v] {
                v = m;
            }
            v
        };
        let mut map = vec![None; n_vertices];
        let mut n_dofs = 0;
        for v in 0..n_vertices {
            if parent[v].is_none() && !fixed[v] {
                map[v] = Some(n_dofs);
                n_dofs += 1;
            }
        }
        for v in 0..n_vertices {
            if parent[v].is_some() {
                let r = root(v);
                if fixed[r] {
                    return Err(FemError::ConstraintConflict(v));
                }
                map[v] = map[r];
            }
        }
        Ok(DofMap { map, n_dofs })
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_vertices(&self) -> usize {
        self.map.len()
    }

    pub fn dof(&self, v: usize) -> Option<usize> {
        self.map[v]
    }

    /// Pᵀ A P: Dirichlet rows and columns dropped, slave rows and columns
    /// folded into masters.
    pub fn reduce_matrix(&self, a: &CsrMatrix) -> CsrMatrix {
        let trip = a
            .triplets()
            .filter_map(|(i, j, v)| Some((self.map[i]?, self.map[j]?, v)))
            .collect();
        CsrMatrix::from_triplets(self.n_dofs, trip)
    }

    pub fn reduce_vector(&self, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs];
        for (v, &x) in b.iter().enumerate() {
            if let Some(d) = self.map[v] {
                out[d] += x;
            }
        }
        out
    }

    /// Nodal values of a reduced vector: zero on Dirichlet vertices, master
    /// value on slaves.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        self.map.iter().map(|d| d.map_or(0.0, |d| x[d])).collect()
    }

    /// Reduced vector taking each unknown's value from its owning vertex.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_dofs];
        let mut seen = vec![false; self.n_dofs];
        for (v, d) in self.map.iter().enumerate() {
            if let Some(d) = *d {
                if !seen[d] {
                    out[d] = full[v];
                    seen[d] = true;
                }
            }
        }
        out
    }
}

/// Zero Dirichlet condition on every vertex of the `tag` boundary.
pub fn apply_dirichlet(mesh: &Mesh, tag: BoundaryTag) -> Result<DofMap, FemError> {
    DofMap::new(mesh.n_vertices(), &mesh.boundary_vertices(tag), &[])
}

/// Periodic identification of opposite cell faces.
pub fn apply_periodic(mesh: &Mesh) -> Result<DofMap, FemError> {
    DofMap::new(mesh.n_vertices(), &[], &mesh.periodic_pairs)
}
