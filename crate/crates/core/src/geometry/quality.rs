use super::{signed_area, Mesh, MeshError};

/// Minimum interior angle every generated mesh must reach.
pub const QUALITY_FLOOR_DEG: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityReport {
    pub min_angle_deg: f64,
    /// Longest edge over shortest altitude, normalized so an equilateral
    /// triangle scores 1.
    pub max_aspect: f64,
    pub area: f64,
}

fn angles_deg(p: [[f64; 2]; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        let a = p[i];
        let b = p[(i + 1) % 3];
        let c = p[(i + 2) % 3];
        let u = [b[0] - a[0], b[1] - a[1]];
        let v = [c[0] - a[0], c[1] - a[1]];
        let cross = u[0] * v[1] - u[1] * v[0];
        let dot = u[0] * v[0] + u[1] * v[1];
        out[i] = cross.abs().atan2(dot).to_degrees();
    }
    out
}

pub(crate) fn min_angle_deg(mesh: &Mesh) -> f64 {
    (0..mesh.n_triangles())
        .flat_map(|t| angles_deg(mesh.triangle_coords(t)))
        .fold(f64::INFINITY, f64::min)
}

pub fn mesh_quality(mesh: &Mesh) -> Result<QualityReport, MeshError> {
    let mut min_angle = f64::INFINITY;
    let mut max_aspect: f64 = 0.0;
    let mut area = 0.0;
    for t in 0..mesh.n_triangles() {
        let p = mesh.triangle_coords(t);
        let a = signed_area(p[0], p[1], p[2]);
        if !(a > 0.0) {
            return Err(MeshError::QualityFailure(format!(
                "triangle {t} {:?} has non-positive area {a}",
                mesh.triangles[t]
            )));
        }
        area += a;
        for ang in angles_deg(p) {
            min_angle = min_angle.min(ang);
        }
        let longest = (0..3)
            .map(|i| super::dist(p[i], p[(i + 1) % 3]))
            .fold(0.0, f64::max);
        let min_altitude = 2.0 * a / longest;
        max_aspect = max_aspect.max(longest / min_altitude * (3f64.sqrt() / 2.0));
    }
    Ok(QualityReport { min_angle_deg: min_angle, max_aspect, area })
}
