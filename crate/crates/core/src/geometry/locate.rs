use super::Mesh;

/// Bucket grid over triangle bounding boxes for point location and P1
/// interpolation.
pub struct PointLocator<'a> {
    mesh: &'a Mesh,
    origin: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &mesh.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let side = (mesh.n_triangles() as f64).sqrt().ceil().max(1.0) as usize;
        let dims = [side, side];
        let cell = [
            ((hi[0] - lo[0]) / side as f64).max(f64::MIN_POSITIVE),
            ((hi[1] - lo[1]) / side as f64).max(f64::MIN_POSITIVE),
        ];
        let mut loc = PointLocator { mesh, origin: lo, cell, dims, buckets: vec![Vec::new(); side * side] };
        for t in 0..mesh.n_triangles() {
            let p = mesh.triangle_coords(t);
            let bl = [p.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min), p.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min)];
            let bh = [p.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max), p.iter().map(|q| q[1]).fold(f64::NEG_INFINITY, f64::max)];
            let (i0, j0) = loc.bucket_of(bl);
            let (i1, j1) = loc.bucket_of(bh);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    loc.buckets[j * dims[0] + i].push(t);
                }
            }
        }
        loc
    }

    fn bucket_of(&self, p: [f64; 2]) -> (usize, usize) {
        let f = |k: usize| {
            let x = ((p[k] - self.origin[k]) / self.cell[k]).floor();
            (x.max(0.0) as usize).min(self.dims[k] - 1)
        };
        (f(0), f(1))
    }

    fn barycentric(&self, t: usize, p: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.mesh.triangle_coords(t);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Containing triangle and barycentric coordinates. Points within a
    /// relative distance of ~1e-9 outside the mesh snap to the nearest
    /// triangle of their bucket.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let (i, j) = self.bucket_of(p);
        let mut best: Option<(f64, usize, [f64; 3])> = None;
        for &t in &self.buckets[j * self.dims[0] + i] {
            let l = self.barycentric(t, p);
            let worst = l.iter().cloned().fold(f64::INFINITY, f64::min);
            if worst >= 0.0 {
                return Some((t, l));
            }
            if best.as_ref().is_none_or(|b| worst > b.0) {
                best = Some((worst, t, l));
            }
        }
        match best {
            Some((worst, t, l)) if worst > -1e-9 => {
                let clamped = l.map(|x| x.max(0.0));
                let s: f64 = clamped.iter().sum();
                Some((t, clamped.map(|x| x / s)))
            }
            _ => None,
        }
    }

    /// P1 interpolation of nodal `values` at `p`.
    pub fn interpolate(&self, values: &[f64], p: [f64; 2]) -> Option<f64> {
        let (t, l) = self.locate(p)?;
        let tri = self.mesh.triangles[t];
        Some(l[0] * values[tri[0]] + l[1] * values[tri[1]] + l[2] * values[tri[2]])
    }
}
