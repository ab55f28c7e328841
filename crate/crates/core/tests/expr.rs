use perfhom::expr::{estimate_lipschitz, parse, render, BinOp, Expr, ExprError, Func, ReactionExpr, VarKind};
use proptest::prelude::*;

fn species(text: &str, n: usize) -> ReactionExpr {
    ReactionExpr::parse(text, n, VarKind::Species).unwrap()
}

#[test]
fn product_reaction_value_and_gradient() {
    let r = species("u1*u2 - u1^2", 2);
    assert_eq!(r.eval(&[2.0, 3.0]).unwrap(), 2.0);
    let (v, g) = r.eval_gradient(&[1.0, 1.0]).unwrap();
    assert_eq!(v, 0.0);
    assert_eq!(g, vec![-1.0, 1.0]);
}

#[test]
fn redundant_parentheses_vanish() {
    assert_eq!(parse("((u1))", 1, VarKind::Species).unwrap(), Expr::Var(0));
}

#[test]
fn out_of_range_identifier_is_an_arity_error() {
    assert!(matches!(parse("u3", 2, VarKind::Species), Err(ExprError::ArityError { .. })));
    assert!(matches!(parse("u1 + y1", 1, VarKind::Species), Err(ExprError::ParseError { .. })));
}

#[test]
fn division_by_zero_is_reported() {
    assert!(matches!(species("1/(u1 - 1)", 1).eval(&[1.0]), Err(ExprError::DomainError(_))));
}

#[test]
fn lipschitz_examples() {
    assert!((estimate_lipschitz(&species("0.5*u1", 1), &[(0.0, 7.0)], 64) - 0.5).abs() < 1e-15);
    assert_eq!(estimate_lipschitz(&species("3 + pi", 2), &[(0.0, 1.0), (0.0, 1.0)], 64), 0.0);
    let l = estimate_lipschitz(&species("u1*u2 - u1^2", 2), &[(0.0, 1.0), (0.0, 1.0)], 4096);
    assert!((l - 3.0).abs() <= 0.05 && l <= 3.0, "{l}");
}

#[test]
fn lipschitz_grows_with_sample_count_towards_the_corner_value() {
    let r = species("u1*u2 - u1^2", 2);
    let box2 = [(0.0, 2.0), (0.0, 2.0)];
    let coarse = estimate_lipschitz(&r, &box2, 16);
    let fine = estimate_lipschitz(&r, &box2, 4096);
    assert!(coarse <= fine && fine <= 6.0 && fine > 5.9, "{coarse} {fine}");
}

#[test]
fn lipschitz_is_monotone_in_nested_boxes() {
    let r = species("u1^3 - 2*u1*u2 + sin(u2)", 2);
    let mut last = 0.0;
    for m in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let l = estimate_lipschitz(&r, &[(0.0, m), (0.0, m)], 512);
        assert!(l.is_finite() && l >= last, "{m}: {l} < {last}");
        last = l;
    }
}

fn tree(arity: usize) -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u32..1000).prop_map(|k| Expr::Num(k as f64 / 8.0)),
        (0.0f64..1e4).prop_map(Expr::Num),
        Just(Expr::Pi),
        (0..arity).prop_map(Expr::Var),
    ];
    leaf.prop_recursive(6, 64, 3, |inner| {
        let bin = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)];
        let unary = prop_oneof![Just(Func::Sin), Just(Func::Cos), Just(Func::Exp)];
        let binary = prop_oneof![Just(Func::Min), Just(Func::Max)];
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (bin, inner.clone(), inner.clone()).prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
            (inner.clone(), 1u32..6).prop_map(|(a, n)| Expr::Pow(Box::new(a), n)),
            (unary, inner.clone()).prop_map(|(f, a)| Expr::Call(f, vec![a])),
            (binary, inner.clone(), inner).prop_map(|(f, a, b)| Expr::Call(f, vec![a, b])),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn print_then_parse_is_the_identity(t in tree(3), c in tree(2)) {
        let text = render(&t, VarKind::Species);
        prop_assert_eq!(parse(&text, 3, VarKind::Species).unwrap(), t, "{}", text);
        let text = render(&c, VarKind::Space);
        prop_assert_eq!(parse(&text, 2, VarKind::Space).unwrap(), c, "{}", text);
    }

    #[test]
    fn gradient_of_a_sum_is_the_sum_of_gradients(
        a in tree(2),
        b in tree(2),
        x in prop::array::uniform2(-2.0f64..2.0),
    ) {
        let ea = ReactionExpr { ast: a.clone(), arity: 2, kind: VarKind::Species };
        let eb = ReactionExpr { ast: b.clone(), arity: 2, kind: VarKind::Species };
        let sum = ReactionExpr { ast: Expr::Bin(BinOp::Add, Box::new(a), Box::new(b)), arity: 2, kind: VarKind::Species };
        if let (Ok((va, ga)), Ok((vb, gb))) = (ea.eval_gradient(&x), eb.eval_gradient(&x)) {
            if let Ok((vs, gs)) = sum.eval_gradient(&x) {
                prop_assert_eq!(vs.to_bits(), (va + vb).to_bits());
                for k in 0..2 {
                    let expect = ga[k] + gb[k];
                    prop_assert!(gs[k] == expect || (gs[k].is_nan() && expect.is_nan()));
                }
            }
        }
    }

    #[test]
    fn evaluation_is_deterministic(t in tree(2), x in prop::array::uniform2(-3.0f64..3.0)) {
        let e = ReactionExpr { ast: t, arity: 2, kind: VarKind::Species };
        let first = e.eval(&x).map(f64::to_bits);
        prop_assert_eq!(first, e.eval(&x).map(f64::to_bits));
    }

    #[test]
    fn seeded_polynomial_gradients_match_differences(
        coeffs in prop::collection::vec(-3.0f64..3.0, 10),
        x in prop::array::uniform2(-1.5f64..1.5),
    ) {
        // Cubic in two variables with all monomials up to degree 3.
        let monomials = ["1", "u1", "u2", "u1^2", "u1*u2", "u2^2", "u1^3", "u1^2*u2", "u1*u2^2", "u2^3"];
        let text = coeffs
            .iter()
            .zip(monomials)
            .map(|(c, m)| if *c < 0.0 { format!("-({})*{m}", -c) } else { format!("{c}*{m}") })
            .collect::<Vec<_>>()
            .join(" + ");
        let e = species(&text, 2);
        let (_, g) = e.eval_gradient(&x).unwrap();
        for k in 0..2 {
            let h = 1e-4;
            let at = |s: f64| {
                let mut p = x;
                p[k] += s * h;
                e.eval(&p).unwrap()
            };
            // Fourth-order central difference is exact for cubics up to rounding.
            let fd = (8.0 * (at(1.0) - at(-1.0)) - (at(2.0) - at(-2.0))) / (12.0 * h);
            prop_assert!((g[k] - fd).abs() <= 1e-6 * g[k].abs().max(1.0), "{} vs {}", g[k], fd);
        }
    }
}
