use confgeom_core::expr::Expression;
use confgeom_core::jets::{coefficient_count, Jet};
use proptest::prelude::*;

fn jet_strategy(dim: usize, order: usize) -> impl Strategy<Value = Jet> {
    prop::collection::vec(-2.0f64..2.0, coefficient_count(dim, order)).prop_map(move |c| Jet::from_coeffs(dim, order, &c))
}

fn close(a: &Jet, b: &Jet, tol: f64) -> bool {
    let scale = a.max_abs().max(b.max_abs()).max(1.0);
    (a - b).max_abs() <= tol * scale
}

/// Dense polynomial product truncated at total degree `order`, by multi-index addition.
fn brute_product(a: &Jet, b: &Jet) -> Jet {
    let lay = a.layout();
    let order = a.order();
    let n = coefficient_count(a.dim(), order);
    let mut terms = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let alpha: Vec<u8> = lay.monomial(i).iter().zip(lay.monomial(j)).map(|(x, y)| x + y).collect();
            if alpha.iter().map(|&x| x as usize).sum::<usize>() <= order {
                terms.push((alpha, a.coeffs()[i] * b.coeffs()[j]));
            }
        }
    }
    Jet::from_terms(a.dim(), order, &terms).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(a in jet_strategy(3, 4), b in jet_strategy(3, 4), c in jet_strategy(3, 4)) {
        prop_assert!(close(&(&(&a * &b) * &c), &(&a * &(&b * &c)), 1e-13));
        prop_assert!(close(&(&a * &(&b + &c)), &(&(&a * &b) + &(&a * &c)), 1e-13));
        prop_assert!(close(&(&a * &b), &(&b * &a), 1e-13));
    }

    #[test]
    fn product_matches_polynomial_multiplication(a in jet_strategy(2, 3), b in jet_strategy(2, 3)) {
        prop_assert!(close(&(&a * &b), &brute_product(&a, &b), 1e-14));
    }

    #[test]
    fn truncation_commutes_with_evaluation(x in -0.5f64..0.5, y in -0.5f64..0.5, k in 1usize..5) {
        let e = Expression::parse("exp(x1*x2) / (2 + sin(x1 - x2)) + sqrt(3 + x1^2)", 2).unwrap();
        let hi = e.eval_jet(&[x, y], k).unwrap().truncate(k - 1);
        let lo = e.eval_jet(&[x, y], k - 1).unwrap();
        prop_assert!(close(&hi, &lo, 1e-14));
    }

    #[test]
    fn sqrt_matches_finite_differences(a in jet_strategy(2, 4)) {
        let mut c = a.coeffs().to_vec();
        c[0] = 4.0;
        let a = Jet::from_coeffs(2, 4, &c);
        let s = a.sqrt().unwrap();
        let f = |x: f64, y: f64| a.eval_offset(&[x, y]).sqrt();
        let h = 1e-3;
        let dx = (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h);
        let dxy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
        prop_assert!((s.derivative(&[1, 0]).unwrap() - dx).abs() < 1e-5 * dx.abs().max(1.0));
        prop_assert!((s.derivative(&[1, 1]).unwrap() - dxy).abs() < 1e-5 * dxy.abs().max(1.0));
    }

    #[test]
    fn order_zero_equals_plain_evaluation(e in expr_strategy(), x in prop::array::uniform3(-1.0f64..1.0)) {
        let ex = Expression::parse(&e, 3).unwrap();
        let v = ex.eval(&x).unwrap();
        let j = ex.eval_jet(&x, 0).unwrap().value();
        prop_assert!((v - j).abs() <= 1e-12 * v.abs().max(1.0));
    }

    #[test]
    fn print_parse_is_a_fixed_point(e in expr_strategy()) {
        let a = Expression::parse(&e, 3).unwrap();
        let b = Expression::parse(&a.to_string(), 3).unwrap();
        let c = Expression::parse(&b.to_string(), 3).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(b.to_string(), c.to_string());
    }

    #[test]
    fn derivatives_match_richardson_differences(e in expr_strategy(), x in prop::array::uniform3(-0.8f64..0.8)) {
        let ex = Expression::parse(&e, 3).unwrap();
        let j = ex.eval_jet(&x, 2).unwrap();
        for var in 0..3 {
            let d = |h: f64| {
                let mut a = x;
                let mut b = x;
                a[var] += h;
                b[var] -= h;
                (ex.eval(&a).unwrap() - ex.eval(&b).unwrap()) / (2.0 * h)
            };
            let fd = (4.0 * d(5e-4) - d(1e-3)) / 3.0;
            let mut alpha = [0u8; 3];
            alpha[var] = 1;
            let jd = j.derivative(&alpha).unwrap();
            prop_assert!((jd - fd).abs() <= 1e-6 * jd.abs().max(fd.abs()).max(1.0), "{} vs {}", jd, fd);
        }
    }
}

/// Expressions that stay inside every function's analytic domain on `[−1, 1]³`.
fn expr_strategy() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (1usize..=3).prop_map(|i| format!("x{i}")),
        (-3.0f64..3.0).prop_map(|c| format!("{c:.3}")),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})*({b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a})/(2 + sin({b}))")),
            (inner.clone(), 0i64..4).prop_map(|(a, n)| format!("({a})^{n}")),
            inner.clone().prop_map(|a| format!("-({a})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("tanh({a})")),
            inner.clone().prop_map(|a| format!("exp(tanh({a}))")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("log(2 + cos({a}))")),
        ]
    })
}

#[test]
fn composed_source_equals_jet_composition() {
    let p = [0.3, -0.4];
    let inner = Expression::parse("sin(x1)*x2 + 0.5", 2).unwrap().eval_jet(&p, 4).unwrap();
    let outer = Expression::parse("exp(sin(x1)*x2 + 0.5)", 2).unwrap().eval_jet(&p, 4).unwrap();
    assert!(close(&inner.exp(), &outer, 1e-14));
    let root = Expression::parse("sqrt(4 + x1^2*x2)", 2).unwrap().eval_jet(&p, 4).unwrap();
    let arg = Expression::parse("4 + x1^2*x2", 2).unwrap().eval_jet(&p, 4).unwrap();
    assert!(close(&arg.sqrt().unwrap(), &root, 1e-14));
}

#[test]
fn coefficient_beyond_order_is_an_error() {
    let j = Expression::parse("x1^2*x2", 2).unwrap().eval_jet(&[0.0, 0.0], 3).unwrap();
    assert_eq!(j.derivative(&[2, 1]).unwrap(), 2.0);
    assert!(j.coefficient(&[2, 2]).is_err());
}

#[test]
fn singular_reciprocal_is_rejected() {
    let x = Jet::variable(2, 2, 0, 0.0);
    assert!(x.recip().is_err());
    assert!(Expression::parse("log(x1)", 2).unwrap().eval_jet(&[0.0, 1.0], 2).is_err());
}
