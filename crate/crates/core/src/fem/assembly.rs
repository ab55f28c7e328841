use super::{CsrMatrix, FemError};
use crate::geometry::{BoundaryTag, Mesh};

pub type Tensor2 = [[f64; 2]; 2];

/// Gradients of the three P1 basis functions on triangle `t`, and its area.
pub fn p1_gradients(mesh: &Mesh, t: usize) -> ([[f64; 2]; 3], f64) {
    let [p0, p1, p2] = mesh.triangle_coords(t);
    let two_area = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    let g = [
        [(p1[1] - p2[1]) / two_area, (p2[0] - p1[0]) / two_area],
        [(p2[1] - p0[1]) / two_area, (p0[0] - p2[0]) / two_area],
        [(p0[1] - p1[1]) / two_area, (p1[0] - p0[0]) / two_area],
    ];
    (g, 0.5 * two_area)
}

/// Piecewise-constant gradient of a nodal field on triangle `t`.
pub fn element_gradient(mesh: &Mesh, values: &[f64], t: usize) -> [f64; 2] {
    let (g, _) = p1_gradients(mesh, t);
    let tri = mesh.triangles[t];
    let mut out = [0.0; 2];
    for a in 0..3 {
        out[0] += values[tri[a]] * g[a][0];
        out[1] += values[tri[a]] * g[a][1];
    }
    out
}

fn checked(x: [f64; 2], v: f64) -> Result<f64, FemError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(FemError::EvalError { at: x, value: v })
    }
}

/// ∫ ∇v·Q∇w with Q sampled at element centroids (physical coordinates).
pub fn assemble_tensor_stiffness(
    mesh: &Mesh,
    q: impl Fn([f64; 2]) -> Tensor2,
) -> Result<CsrMatrix, FemError> {
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let c = mesh.centroid(t);
        let qt = q(c);
        for row in &qt {
            for &v in row {
                checked(c, v)?;
            }
        }
        let (g, area) = p1_gradients(mesh, t);
        let tri = mesh.triangles[t];
        // Each pair is evaluated once and mirrored, so the matrix is
        // symmetric bit for bit; only the symmetric part of Q contributes.
        let off = 0.5 * (qt[0][1] + qt[1][0]);
        for a in 0..3 {
            for b in a..3 {
                let qg = [qt[0][0] * g[b][0] + off * g[b][1], off * g[b][0] + qt[1][1] * g[b][1]];
                let k = area * (g[a][0] * qg[0] + g[a][1] * qg[1]);
                trip.push((tri[a], tri[b], k));
                if a != b {
                    trip.push((tri[b], tri[a], k));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(mesh.n_vertices(), trip))
}

/// ∫ d ∇v·∇w with the scalar coefficient sampled at element centroids.
pub fn assemble_stiffness(mesh: &Mesh, d: impl Fn([f64; 2]) -> f64) -> Result<CsrMatrix, FemError> {
    assemble_tensor_stiffness(mesh, |x| {
        let v = d(x);
        [[v, 0.0], [0.0, v]]
    })
}

/// Consistent P1 mass matrix.
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    let mut trip = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let area = mesh.signed_area(t);
        let tri = mesh.triangles[t];
        for a in 0..3 {
            for b in 0..3 {
                let w = if a == b { area / 6.0 } else { area / 12.0 };
                trip.push((tri[a], tri[b], w));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.n_vertices(), trip)
}

const GAUSS2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// ∫_{edges with tag} w v φ dS by the two-point Gauss rule on every edge.
pub fn assemble_boundary_mass(
    mesh: &Mesh,
    tag: BoundaryTag,
    w: impl Fn([f64; 2]) -> f64,
) -> Result<CsrMatrix, FemError> {
    let mut trip = Vec::new();
    for [a, b] in mesh.edges_with_tag(tag) {
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        let mut local = [[0.0; 2]; 2];
        for s in GAUSS2 {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let wx = checked(x, w(x))?;
            let phi = [1.0 - s, s];
            for i in 0..2 {
                for j in 0..2 {
                    local[i][j] += 0.5 * len * wx * phi[i] * phi[j];
                }
            }
        }
        let idx = [a, b];
        for i in 0..2 {
            for j in 0..2 {
                trip.push((idx[i], idx[j], local[i][j]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(mesh.n_vertices(), trip))
}

/// ∫ f φ_v for a piecewise-constant (per element) source `f`.
pub fn element_load(mesh: &Mesh, f: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0; mesh.n_vertices()];
    for t in 0..mesh.n_triangles() {
        let share = f[t] * mesh.signed_area(t) / 3.0;
        for &v in &mesh.triangles[t] {
            b[v] += share;
        }
    }
    b
}
