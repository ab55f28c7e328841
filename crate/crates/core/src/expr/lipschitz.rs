use super::ReactionExpr;

/// Axis-aligned sampling box, one (lo, hi) pair per variable.
pub type Bounds = Vec<(f64, f64)>;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// k-th point (k ≥ 1) of the Halton sequence in `dim` dimensions.
pub fn halton(k: u64, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|d| {
            let base = PRIMES[d % PRIMES.len()] as u64;
            let (mut f, mut r, mut i) = (1.0, 0.0, k);
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        })
        .collect()
}

/// max ‖∇f‖₁ over the box corners, its centre and `samples` Halton points.
///
/// This is a sampled estimate, not a certified bound. Points where the
/// expression is undefined are skipped.
pub fn estimate_lipschitz(expr: &ReactionExpr, bounds: &[(f64, f64)], samples: usize) -> f64 {
    let n = expr.arity.min(bounds.len());
    let map = |unit: &[f64]| -> Vec<f64> {
        bounds.iter().zip(unit).map(|(&(lo, hi), &t)| lo + t * (hi - lo)).collect()
    };
    let grad_l1 = |x: &[f64]| -> f64 {
        match expr.eval_gradient(x) {
            Ok((_, g)) => g.iter().take(n).map(|v| v.abs()).sum(),
            Err(_) => 0.0,
        }
    };
    let mut best: f64 = 0.0;
    if n <= 10 {
        for mask in 0..(1u32 << n) {
            let unit: Vec<f64> = (0..bounds.len())
                .map(|d| if d < n && mask & (1 << d) != 0 { 1.0 } else { 0.0 })
                .collect();
            best = best.max(grad_l1(&map(&unit)));
        }
    }
    best = best.max(grad_l1(&map(&vec![0.5; bounds.len()])));
    for k in 1..=samples as u64 {
        best = best.max(grad_l1(&map(&halton(k, bounds.len()))));
    }
    best
}
