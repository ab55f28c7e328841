use super::assembly::element_gradient;
use crate::geometry::{BoundaryTag, Mesh};

/// (∫|∇v|²)^{1/2}, exact for P1.
pub fn h1_seminorm(mesh: &Mesh, values: &[f64]) -> f64 {
    (0..mesh.n_triangles())
        .map(|t| {
            let g = element_gradient(mesh, values, t);
            mesh.signed_area(t) * (g[0] * g[0] + g[1] * g[1])
        })
        .sum::<f64>()
        .sqrt()
}

/// (∫v²)^{1/2}, exact for P1.
pub fn l2_norm(mesh: &Mesh, values: &[f64]) -> f64 {
    (0..mesh.n_triangles())
        .map(|t| {
            let [a, b, c] = mesh.triangles[t].map(|v| values[v]);
            mesh.signed_area(t) / 6.0 * (a * a + b * b + c * c + a * b + b * c + a * c)
        })
        .sum::<f64>()
        .sqrt()
}

/// (∫_{edges with tag} v² dS)^{1/2}, exact for P1 traces.
pub fn surface_l2_norm(mesh: &Mesh, values: &[f64], tag: BoundaryTag) -> f64 {
    mesh.edges_with_tag(tag)
        .map(|[i, j]| {
            let (pa, pb) = (mesh.vertices[i], mesh.vertices[j]);
            let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
            let (a, b) = (values[i], values[j]);
            len / 3.0 * (a * a + a * b + b * b)
        })
        .sum::<f64>()
        .sqrt()
}

/// Area-weighted integral of a nodal field.
pub fn integral(mesh: &Mesh, values: &[f64]) -> f64 {
    (0..mesh.n_triangles())
        .map(|t| {
            let s: f64 = mesh.triangles[t].iter().map(|&v| values[v]).sum();
            mesh.signed_area(t) * s / 3.0
        })
        .sum()
}
