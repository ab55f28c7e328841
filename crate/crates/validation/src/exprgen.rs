//! Seeded random expression trees and a finite-difference gradient reference.

use perfhom::expr::{BinOp, Expr, Func};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random syntax trees over `arity` variables.
///
/// In smooth mode the trees are infinitely differentiable on all of ℝⁿ:
/// `min`/`max` are left out, every denominator has the form `1 + t^2`, and
/// `exp` only sees bounded arguments. Literals stay in [0, 2) so function
/// values remain comparable to their gradients and a finite-difference
/// reference is not swamped by cancellation.
pub struct TreeGen {
    rng: ChaCha8Rng,
    arity: usize,
    smooth: bool,
}

impl TreeGen {
    pub fn new(rng: ChaCha8Rng, arity: usize, smooth: bool) -> Self {
        TreeGen { rng, arity, smooth }
    }

    pub fn set_arity(&mut self, arity: usize) {
        self.arity = arity;
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn number(&mut self) -> f64 {
        if self.smooth {
            return self.rng.gen_range(0.0..2.0);
        }
        match self.rng.gen_range(0..4) {
            0 => self.rng.gen_range(0..10) as f64,
            1 => self.rng.gen_range(0..64) as f64 / 8.0,
            2 => self.rng.gen_range(0.0..3.0),
            _ => 10f64.powi(self.rng.gen_range(-6..4)),
        }
    }

    fn leaf(&mut self) -> Expr {
        match self.rng.gen_range(0..6) {
            0 | 1 => Expr::Num(self.number()),
            2 => Expr::Pi,
            _ => Expr::Var(self.rng.gen_range(0..self.arity)),
        }
    }

    pub fn tree(&mut self, depth: usize) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.2) {
            return self.leaf();
        }
        let sub = |g: &mut Self| Box::new(g.tree(depth - 1));
        match self.rng.gen_range(0..10) {
            0 => Expr::Neg(sub(self)),
            1 => Expr::Bin(BinOp::Add, sub(self), sub(self)),
            2 => Expr::Bin(BinOp::Sub, sub(self), sub(self)),
            3 | 4 => Expr::Bin(BinOp::Mul, sub(self), sub(self)),
            5 => {
                let num = sub(self);
                let den = if self.smooth {
                    Box::new(Expr::Bin(BinOp::Add, Box::new(Expr::Num(1.0)), Box::new(Expr::Pow(sub(self), 2))))
                } else {
                    sub(self)
                };
                Expr::Bin(BinOp::Div, num, den)
            }
            6 => Expr::Pow(sub(self), self.rng.gen_range(1..=if self.smooth { 3 } else { 5 })),
            7 => Expr::Call(if self.rng.gen_bool(0.5) { Func::Sin } else { Func::Cos }, vec![self.tree(depth - 1)]),
            8 => {
                let arg = self.tree(depth - 1);
                let arg = if self.smooth { Expr::Call(Func::Sin, vec![arg]) } else { arg };
                Expr::Call(Func::Exp, vec![arg])
            }
            _ if self.smooth => Expr::Bin(BinOp::Mul, sub(self), sub(self)),
            _ => {
                let f = if self.rng.gen_bool(0.5) { Func::Min } else { Func::Max };
                Expr::Call(f, vec![self.tree(depth - 1), self.tree(depth - 1)])
            }
        }
    }
}

/// Derivative of `f` in coordinate `k` by Ridders' method: central
/// differences on a geometric sequence of steps starting at `h`, extrapolated
/// to zero step with Neville's scheme. The whole tableau is built and the
/// entry with the smallest error estimate wins, which guards against early
/// agreement between steps that are too coarse. Returns the estimate and its
/// error estimate.
pub fn ridders_derivative(f: impl Fn(&[f64]) -> f64, x: &[f64], k: usize, h: f64) -> (f64, f64) {
    const SHRINK: f64 = 1.4;
    const STEPS: usize = 30;
    let central = |h: f64| {
        let mut p = x.to_vec();
        p[k] = x[k] + h;
        let up = f(&p);
        p[k] = x[k] - h;
        (up - f(&p)) / (2.0 * h)
    };
    let mut table = vec![vec![0.0; STEPS]; STEPS];
    let mut h = h;
    table[0][0] = central(h);
    let mut best = (table[0][0], f64::INFINITY);
    for i in 1..STEPS {
        h /= SHRINK;
        table[0][i] = central(h);
        let mut fac = SHRINK * SHRINK;
        for j in 1..=i {
            table[j][i] = (table[j - 1][i] * fac - table[j - 1][i - 1]) / (fac - 1.0);
            fac *= SHRINK * SHRINK;
            let err = (table[j][i] - table[j - 1][i]).abs().max((table[j][i] - table[j - 1][i - 1]).abs());
            if err <= best.1 {
                best = (table[j][i], err);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn ridders_resolves_fast_oscillation() {
        let f = |x: &[f64]| (300.0 * x[0]).sin() + x[0] * x[1];
        let (d, err) = ridders_derivative(f, &[0.3, 2.0], 0, 1e-3);
        let exact = 300.0 * 90f64.cos() + 2.0;
        assert!((d - exact).abs() < 1e-7 * exact.abs(), "{d} {exact} {err}");
    }

    #[test]
    fn trees_respect_arity() {
        let mut g = TreeGen::new(ChaCha8Rng::seed_from_u64(1), 2, false);
        for _ in 0..200 {
            let t = g.tree(5);
            let e = perfhom::expr::ReactionExpr { ast: t, arity: 2, kind: perfhom::expr::VarKind::Species };
            assert!(e.variables().iter().all(|&v| v < 2));
        }
    }
}
