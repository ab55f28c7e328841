use super::{
    quality::min_angle_deg, signed_area, BoundaryEdge, BoundaryTag, CellGeometry, HoleShape, Mesh,
    MeshError, Tiling, QUALITY_FLOOR_DEG,
};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

fn segments_per_side(h: f64) -> Result<usize, MeshError> {
    if !(h > 0.0 && h <= 0.25) {
        return Err(MeshError::InvalidParameter(format!(
            "target edge length must lie in (0, 0.25], got {h}"
        )));
    }
    Ok(((1.0 / h) - 1e-9).ceil() as usize)
}

/// Uniform right-triangle grid of the unit square with `n` cells per side.
fn grid(n: usize) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let nf = n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / nf, j as f64 / nf]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    (vertices, triangles)
}

/// Structured mesh of the unperforated unit square Ω with all of ∂Ω tagged
/// EXTERIOR. Used for the homogenized problem and for plain FEM checks.
pub fn build_square_mesh(n: usize) -> Mesh {
    assert!(n >= 1);
    let (vertices, triangles) = grid(n);
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut boundary_edges = Vec::with_capacity(4 * n);
    for i in 0..n {
        for [a, b] in [
            [idx(i, 0), idx(i + 1, 0)],
            [idx(n, i), idx(n, i + 1)],
            [idx(i + 1, n), idx(i, n)],
            [idx(0, i + 1), idx(0, i)],
        ] {
            boundary_edges.push(BoundaryEdge { vertices: [a, b], tag: BoundaryTag::Exterior });
        }
    }
    Mesh {
        vertices,
        triangles,
        boundary_edges,
        periodic_pairs: Vec::new(),
        epsilon: 1.0,
        geometry: CellGeometry::no_hole(),
        h: 1.0 / n as f64,
        tiling: None,
    }
}

/// Point `j` of the outer ring (4m points, counter-clockwise from the origin).
fn outer_point(j: usize, m: usize) -> [f64; 2] {
    let mf = m as f64;
    let (side, i) = (j / m, j % m);
    match side {
        0 => [i as f64 / mf, 0.0],
        1 => [1.0, i as f64 / mf],
        2 => [(m - i) as f64 / mf, 1.0],
        _ => [0.0, (m - i) as f64 / mf],
    }
}

fn inner_point(j: usize, m: usize, geom: &CellGeometry) -> [f64; 2] {
    match geom.shape {
        HoleShape::Disk => {
            let theta = 1.25 * PI + 2.0 * PI * j as f64 / (4 * m) as f64;
            [0.5 + geom.radius * theta.cos(), 0.5 + geom.radius * theta.sin()]
        }
        HoleShape::Square => {
            let o = outer_point(j, m);
            let s = 2.0 * geom.radius;
            [0.5 + s * (o[0] - 0.5), 0.5 + s * (o[1] - 0.5)]
        }
    }
}

/// Normalized layer positions t₀ = 0 < … < t_p = 1 growing geometrically from
/// a first layer of thickness `first` over a total depth `depth`.
fn graded_layers(p: usize, first: f64, depth: f64) -> Vec<f64> {
    let sum = |q: f64| (0..p).map(|k| q.powi(k as i32)).sum::<f64>();
    let target = depth / first;
    let (mut lo, mut hi) = (1e-3_f64, 1e3_f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if sum(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = (lo * hi).sqrt();
    let mut t = Vec::with_capacity(p + 1);
    let mut acc = 0.0;
    t.push(0.0);
    for k in 0..p {
        acc += q.powi(k as i32);
        t.push(acc);
    }
    let total = acc;
    t.iter_mut().for_each(|x| *x /= total);
    t[p] = 1.0;
    t
}

fn annular_mesh(geom: &CellGeometry, m: usize, layers: &[f64], h: f64) -> Mesh {
    let p = layers.len() - 1;
    let ring = 4 * m;
    let idx = |j: usize, k: usize| k * ring + (j % ring);
    let mut vertices = Vec::with_capacity(ring * (p + 1));
    for &t in layers.iter() {
        for j in 0..ring {
            let o = outer_point(j, m);
            if t == 1.0 {
                vertices.push(o);
            } else {
                let i = inner_point(j, m, geom);
                vertices.push([(1.0 - t) * i[0] + t * o[0], (1.0 - t) * i[1] + t * o[1]]);
            }
        }
    }
    let mut triangles = Vec::with_capacity(2 * ring * p);
    for k in 0..p {
        for j in 0..ring {
            let (a, b, c, d) = (idx(j, k), idx(j + 1, k), idx(j + 1, k + 1), idx(j, k + 1));
            let len2 = |u: usize, v: usize| {
                let (x, y) = (vertices[u], vertices[v]);
                (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)
            };
            let tris = if len2(a, c) <= len2(b, d) { [[a, b, c], [a, c, d]] } else { [[a, b, d], [b, c, d]] };
            for mut tri in tris {
                if signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) < 0.0 {
                    tri.swap(1, 2);
                }
                triangles.push(tri);
            }
        }
    }
    let boundary_edges = (0..ring)
        .map(|j| BoundaryEdge { vertices: [idx(j, 0), idx(j + 1, 0)], tag: BoundaryTag::Hole })
        .collect();
    let outer = |j: usize| idx(j, p);
    Mesh {
        vertices,
        triangles,
        boundary_edges,
        periodic_pairs: ring_periodic_pairs(m, outer),
        epsilon: 1.0,
        geometry: *geom,
        h,
        tiling: None,
    }
}

/// x-pairs (0,y)→(1,y) for every face vertex including corners, y-pairs
/// (x,0)→(x,1) for x < 1. Every slave appears exactly once.
fn ring_periodic_pairs(m: usize, outer: impl Fn(usize) -> usize) -> Vec<(usize, usize)> {
    let ring = 4 * m;
    let left = |i: usize| outer((ring - i) % ring); // (0, i/m)
    let right = |i: usize| outer(m + i); // (1, i/m)
    let bottom = |i: usize| outer(i); // (i/m, 0)
    let top = |i: usize| outer(2 * m + (m - i)); // (i/m, 1)
    let mut pairs = Vec::with_capacity(2 * m + 1);
    for i in 0..=m {
        pairs.push((left(i), right(i)));
    }
    for i in 0..m {
        pairs.push((bottom(i), top(i)));
    }
    pairs
}

fn grid_cell_mesh(m: usize, h: f64) -> Mesh {
    let (vertices, triangles) = grid(m);
    let idx = |i: usize, j: usize| j * (m + 1) + i;
    let mut periodic_pairs = Vec::with_capacity(2 * m + 1);
    for j in 0..=m {
        periodic_pairs.push((idx(0, j), idx(m, j)));
    }
    for i in 0..m {
        periodic_pairs.push((idx(i, 0), idx(i, m)));
    }
    Mesh {
        vertices,
        triangles,
        boundary_edges: Vec::new(),
        periodic_pairs,
        epsilon: 1.0,
        geometry: CellGeometry::no_hole(),
        h,
        tiling: None,
    }
}

/// Conforming mesh of the pore cell Y₁ with periodic face pairing.
///
/// Each face of Y carries `ceil(1/h)` equal segments. Holes are meshed with
/// graded radial layers; the layer count giving the best minimum angle is
/// kept.
pub fn build_unit_cell_mesh(geom: &CellGeometry, h: f64) -> Result<Mesh, MeshError> {
    geom.validate()?;
    let m = segments_per_side(h)?;
    if !geom.has_hole() {
        return Ok(grid_cell_mesh(m, h));
    }
    let r = geom.radius;
    let side = 1.0 / m as f64;
    let (first, depth) = match geom.shape {
        HoleShape::Disk => (
            2.0 * PI * r / (4 * m) as f64,
            0.5 * ((0.5 - r) + (FRAC_1_SQRT_2 - r)),
        ),
        HoleShape::Square => (2.0 * r / m as f64, 0.5 * (1.0 + 2f64.sqrt()) * (0.5 - r)),
    };
    let p0 = ((depth / (0.5 * (first + side))).round() as usize).max(1);
    let mut best: Option<(f64, Mesh)> = None;
    for p in p0.saturating_sub(1).max(1)..=p0 + 2 {
        let mesh = annular_mesh(geom, m, &graded_layers(p, first, depth), h);
        let angle = min_angle_deg(&mesh);
        if best.as_ref().is_none_or(|(a, _)| angle > *a + 1e-12) {
            best = Some((angle, mesh));
        }
    }
    let (angle, mesh) = best.expect("at least one layer count tried");
    if !(angle >= QUALITY_FLOOR_DEG) {
        return Err(MeshError::QualityFailure(format!(
            "minimum angle {angle:.2}° below floor {QUALITY_FLOOR_DEG}° for {} hole of size {r} at h = {h}",
            geom.shape
        )));
    }
    Ok(mesh)
}

/// Which faces of the unit cell an edge lies on (both endpoints on the face).
fn cell_face(a: [f64; 2], b: [f64; 2]) -> Option<usize> {
    if a[1] == 0.0 && b[1] == 0.0 {
        Some(0)
    } else if a[0] == 1.0 && b[0] == 1.0 {
        Some(1)
    } else if a[1] == 1.0 && b[1] == 1.0 {
        Some(2)
    } else if a[0] == 0.0 && b[0] == 0.0 {
        Some(3)
    } else {
        None
    }
}

/// Edges of a triangulation used by exactly one triangle.
pub(crate) fn free_edges(triangles: &[[usize; 3]]) -> Vec<[usize; 2]> {
    let mut edges: Vec<([usize; 2], [usize; 2])> = triangles
        .iter()
        .flat_map(|t| [[t[0], t[1]], [t[1], t[2]], [t[2], t[0]]])
        .map(|e| ([e[0].min(e[1]), e[0].max(e[1])], e))
        .collect();
    edges.sort_unstable_by_key(|(k, _)| *k);
    let mut out = Vec::new();
    let mut i = 0;
    while i < edges.len() {
        let mut j = i + 1;
        while j < edges.len() && edges[j].0 == edges[i].0 {
            j += 1;
        }
        if j - i == 1 {
            out.push(edges[i].1);
        }
        i = j;
    }
    out
}

/// Tiles (1/ε)² copies of the unit-cell mesh over Ω = (0,1)².
///
/// Vertex coordinates are ε·(y + (i,j)) for cell vertex y in tile (i,j);
/// vertices on shared tile faces are created once. `cell_mesh` must be a
/// unit-cell mesh with periodic pairs.
pub fn build_perforated_domain_mesh(cell_mesh: &Mesh, epsilon: f64) -> Result<Mesh, MeshError> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(MeshError::TilingError(format!("ε must lie in (0, 1], got {epsilon}")));
    }
    let kf = (1.0 / epsilon).round();
    if ((1.0 / epsilon) - kf).abs() > 1e-9 * kf {
        return Err(MeshError::TilingError(format!("1/ε = {} is not an integer", 1.0 / epsilon)));
    }
    if cell_mesh.epsilon != 1.0 || cell_mesh.periodic_pairs.is_empty() {
        return Err(MeshError::TilingError("tiling requires a periodic unit-cell mesh".into()));
    }
    let k = kf as usize;
    let eps = 1.0 / kf;
    let nc = cell_mesh.n_vertices();
    let roots = cell_mesh.periodic_roots();

    let key = |ti: usize, tj: usize, root: usize| (tj * (k + 1) + ti) * nc + root;
    let mut global: Vec<usize> = vec![usize::MAX; (k + 1) * (k + 1) * nc];
    let mut vertices = Vec::new();
    let mut cell_vertex = Vec::new();
    let mut local = vec![0usize; nc];
    let mut triangles = Vec::with_capacity(k * k * cell_mesh.n_triangles());
    let mut boundary_edges = Vec::new();

    let outer_edges: Vec<([usize; 2], usize)> = free_edges(&cell_mesh.triangles)
        .into_iter()
        .filter_map(|[a, b]| {
            cell_face(cell_mesh.vertices[a], cell_mesh.vertices[b]).map(|f| ([a, b], f))
        })
        .collect();

    for tj in 0..k {
        for ti in 0..k {
            for v in 0..nc {
                let (root, shift) = roots[v];
                let gi = ti + shift[0] as usize;
                let gj = tj + shift[1] as usize;
                let slot = &mut global[key(gi, gj, root)];
                if *slot == usize::MAX {
                    let y = cell_mesh.vertices[v];
                    *slot = vertices.len();
                    vertices.push([eps * (y[0] + ti as f64), eps * (y[1] + tj as f64)]);
                    cell_vertex.push(root);
                }
                local[v] = *slot;
            }
            for t in &cell_mesh.triangles {
                triangles.push([local[t[0]], local[t[1]], local[t[2]]]);
            }
            for e in &cell_mesh.boundary_edges {
                boundary_edges.push(BoundaryEdge {
                    vertices: [local[e.vertices[0]], local[e.vertices[1]]],
                    tag: e.tag,
                });
            }
            for &([a, b], face) in &outer_edges {
                let on_exterior = match face {
                    0 => tj == 0,
                    1 => ti == k - 1,
                    2 => tj == k - 1,
                    _ => ti == 0,
                };
                if on_exterior {
                    boundary_edges.push(BoundaryEdge {
                        vertices: [local[a], local[b]],
                        tag: BoundaryTag::Exterior,
                    });
                }
            }
        }
    }

    Ok(Mesh {
        vertices,
        triangles,
        boundary_edges,
        periodic_pairs: Vec::new(),
        epsilon: eps,
        geometry: cell_mesh.geometry,
        h: cell_mesh.h * eps,
        tiling: Some(Tiling { cell_hash: cell_mesh.hash(), cells_per_side: k, cell_vertex }),
    })
}
