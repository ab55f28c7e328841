use super::{BinOp, Expr, ExprError, Func};
use std::f64::consts::PI;

fn finite(x: f64, what: &str) -> Result<f64, ExprError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(ExprError::DomainError(format!("{what} produced {x}")))
    }
}

pub fn eval(e: &Expr, vals: &[f64]) -> Result<f64, ExprError> {
    Ok(match e {
        Expr::Num(x) => *x,
        Expr::Pi => PI,
        Expr::Var(i) => *vals
            .get(*i)
            .ok_or_else(|| ExprError::DomainError(format!("variable {} not supplied", i + 1)))?,
        Expr::Neg(a) => -eval(a, vals)?,
        Expr::Bin(op, a, b) => {
            let (x, y) = (eval(a, vals)?, eval(b, vals)?);
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == 0.0 {
                        return Err(ExprError::DomainError("division by zero".into()));
                    }
                    finite(x / y, "division")?
                }
            }
        }
        Expr::Pow(a, n) => finite(eval(a, vals)?.powi(*n as i32), "power")?,
        Expr::Call(f, args) => {
            let x = eval(&args[0], vals)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => finite(x.exp(), "exp")?,
                Func::Min => x.min(eval(&args[1], vals)?),
                Func::Max => x.max(eval(&args[1], vals)?),
            }
        }
    })
}

/// Value and gradient with respect to the first `n` variables, by forward
/// propagation of derivatives through the tree.
pub fn eval_gradient(e: &Expr, vals: &[f64], n: usize) -> Result<(f64, Vec<f64>), ExprError> {
    Ok(match e {
        Expr::Num(x) => (*x, vec![0.0; n]),
        Expr::Pi => (PI, vec![0.0; n]),
        Expr::Var(i) => {
            let mut g = vec![0.0; n];
            if *i < n {
                g[*i] = 1.0;
            }
            (eval(e, vals)?, g)
        }
        Expr::Neg(a) => {
            let (v, g) = eval_gradient(a, vals, n)?;
            (-v, g.into_iter().map(|x| -x).collect())
        }
        Expr::Bin(op, a, b) => {
            let (x, gx) = eval_gradient(a, vals, n)?;
            let (y, gy) = eval_gradient(b, vals, n)?;
            let zip = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
                gx.iter().zip(&gy).map(|(p, q)| f(*p, *q)).collect()
            };
            match op {
                BinOp::Add => (x + y, zip(&|p, q| p + q)),
                BinOp::Sub => (x - y, zip(&|p, q| p - q)),
                BinOp::Mul => (x * y, zip(&|p, q| p * y + x * q)),
                BinOp::Div => {
                    if y == 0.0 {
                        return Err(ExprError::DomainError("division by zero".into()));
                    }
                    (finite(x / y, "division")?, zip(&|p, q| (p * y - x * q) / (y * y)))
                }
            }
        }
        Expr::Pow(a, k) => {
            let (x, g) = eval_gradient(a, vals, n)?;
            let v = finite(x.powi(*k as i32), "power")?;
            let dv = if *k == 0 { 0.0 } else { *k as f64 * x.powi(*k as i32 - 1) };
            (v, g.into_iter().map(|p| dv * p).collect())
        }
        Expr::Call(f, args) => {
            let (x, gx) = eval_gradient(&args[0], vals, n)?;
            match f {
                Func::Sin => (x.sin(), gx.into_iter().map(|p| x.cos() * p).collect()),
                Func::Cos => (x.cos(), gx.into_iter().map(|p| -x.sin() * p).collect()),
                Func::Exp => {
                    let v = finite(x.exp(), "exp")?;
                    (v, gx.into_iter().map(|p| v * p).collect())
                }
                Func::Min | Func::Max => {
                    let (y, gy) = eval_gradient(&args[1], vals, n)?;
                    let take_first = if *f == Func::Min { x <= y } else { x >= y };
                    if take_first {
                        (x, gx)
                    } else {
                        (y, gy)
                    }
                }
            }
        }
    })
}
