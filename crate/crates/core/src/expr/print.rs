use super::{BinOp, Expr, VarKind};
use std::fmt::Write as _;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

fn write_wrapped(out: &mut String, e: &Expr, kind: VarKind, wrap: bool) {
    if wrap {
        out.push('(');
        write_expr(out, e, kind);
        out.push(')');
    } else {
        write_expr(out, e, kind);
    }
}

fn write_expr(out: &mut String, e: &Expr, kind: VarKind) {
    match e {
        Expr::Num(x) => {
            let _ = write!(out, "{x}");
        }
        Expr::Pi => out.push_str("pi"),
        Expr::Var(i) => {
            let _ = write!(out, "{}{}", kind.prefix(), i + 1);
        }
        Expr::Neg(a) => {
            out.push('-');
            write_wrapped(out, a, kind, precedence(a) < 3);
        }
        Expr::Bin(op, a, b) => {
            let p = precedence(e);
            write_wrapped(out, a, kind, precedence(a) < p);
            out.push_str(match op {
                BinOp::Add => " + ",
                BinOp::Sub => " - ",
                BinOp::Mul => "*",
                BinOp::Div => "/",
            });
            write_wrapped(out, b, kind, precedence(b) <= p);
        }
        Expr::Pow(a, n) => {
            write_wrapped(out, a, kind, precedence(a) < 4);
            let _ = write!(out, "^{n}");
        }
        Expr::Call(f, args) => {
            out.push_str(f.name());
            out.push('(');
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_expr(out, a, kind);
            }
            out.push(')');
        }
    }
}

/// Minimal-parenthesis rendering that re-parses to the same tree.
pub fn render(e: &Expr, kind: VarKind) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, kind);
    s
}
