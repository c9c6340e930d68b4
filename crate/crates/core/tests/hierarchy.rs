use proptest::prelude::*;

use asram::hierarchy::{
    bound_quantifiers, eval_bounded, parse_formula, Body, BoundAssignment, CmpOp, Formula, Quant, QuantSpec, Term,
    DEFAULT_BUDGET,
};
use asram::value::Value;

fn term(vars: usize) -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (0u64..6).prop_map(|n| Term::Lit(Value::from(n))),
        (0..vars).prop_map(Term::Var),
        Just(Term::Inp),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Term::Monus(Box::new(a), Box::new(b))),
        ]
    })
}

fn body(vars: usize) -> impl Strategy<Value = Body> {
    let cmp = prop_oneof![Just(CmpOp::Eq), Just(CmpOp::Lt), Just(CmpOp::Le)];
    let leaf = (cmp, term(vars), term(vars)).prop_map(|(op, a, b)| Body::Cmp(op, a, b));
    leaf.prop_recursive(2, 8, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Body::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Body::Or(Box::new(a), Box::new(b))),
            inner.prop_map(|a| Body::Not(Box::new(a))),
        ]
    })
}

fn formula(quants: Vec<Quant>) -> impl Strategy<Value = Formula> {
    let k = quants.len();
    body(k.max(1)).prop_map(move |body| Formula {
        prefix: quants
            .iter()
            .enumerate()
            .map(|(i, &quant)| QuantSpec {
                quant,
                var: format!("v{i}"),
                bound: None,
            })
            .collect(),
        body,
    })
}

fn any_prefix() -> impl Strategy<Value = Vec<Quant>> {
    prop::collection::vec(prop_oneof![Just(Quant::Exists), Just(Quant::Forall)], 1..=3)
}

fn eval(f: &Formula, inp: u64, bounds: &[u64], cap: u64) -> bool {
    eval_bounded(f, &Value::from(inp), &BoundAssignment::new(bounds.to_vec(), cap), DEFAULT_BUDGET).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn printing_round_trips(f in any_prefix().prop_flat_map(formula)) {
        let text = f.to_string();
        prop_assert_eq!(parse_formula(&text).unwrap(), f);
    }

    #[test]
    fn bounding_only_touches_prefix_bounds(f in any_prefix().prop_flat_map(formula), a in 1u64..50) {
        let k = f.prefix.len();
        let g = bound_quantifiers(&f, &BoundAssignment::new(vec![a; k - 1], 7)).unwrap();
        prop_assert_eq!(&g.body, &f.body);
        prop_assert_eq!(g.prefix.len(), k);
        for (i, (p, q)) in f.prefix.iter().zip(&g.prefix).enumerate() {
            prop_assert_eq!(p.quant, q.quant);
            prop_assert_eq!(&p.var, &q.var);
            prop_assert_eq!(q.bound, (i + 1 < k).then_some(a));
        }
    }

    #[test]
    fn bounded_formula_evaluates_like_the_assignment(
        f in any_prefix().prop_flat_map(formula), a in 1u64..6, cap in 1u64..6, inp in 0u64..10,
    ) {
        let k = f.prefix.len();
        let b = BoundAssignment::new(vec![a; k - 1], cap);
        let g = bound_quantifiers(&f, &b).unwrap();
        prop_assert_eq!(eval(&f, inp, &b.bounds, cap), eval(&g, inp, &b.bounds, cap));
    }

    #[test]
    fn existential_formulas_are_monotone_up(
        f in prop::collection::vec(Just(Quant::Exists), 1..=3).prop_flat_map(formula),
        small in prop::collection::vec(1u64..5, 3), grow in prop::collection::vec(0u64..4, 3), inp in 0u64..10,
    ) {
        let k = f.prefix.len();
        let lo: Vec<u64> = small[..k - 1].to_vec();
        let hi: Vec<u64> = lo.iter().zip(&grow).map(|(a, g)| a + g).collect();
        let (lo_cap, hi_cap) = (small[k - 1], small[k - 1] + grow[k - 1]);
        if eval(&f, inp, &lo, lo_cap) {
            prop_assert!(eval(&f, inp, &hi, hi_cap));
        }
    }

    #[test]
    fn universal_formulas_are_monotone_down(
        f in prop::collection::vec(Just(Quant::Forall), 1..=3).prop_flat_map(formula),
        small in prop::collection::vec(1u64..5, 3), grow in prop::collection::vec(0u64..4, 3), inp in 0u64..10,
    ) {
        let k = f.prefix.len();
        let lo: Vec<u64> = small[..k - 1].to_vec();
        let hi: Vec<u64> = lo.iter().zip(&grow).map(|(a, g)| a + g).collect();
        let (lo_cap, hi_cap) = (small[k - 1], small[k - 1] + grow[k - 1]);
        if !eval(&f, inp, &lo, lo_cap) {
            prop_assert!(!eval(&f, inp, &hi, hi_cap));
        }
    }
}

#[test]
fn reference_example_parses() {
    let f = parse_formula("EXISTS a . FORALL b . (b <= a + 3) AND (a*a < inp)").unwrap();
    let g = bound_quantifiers(&f, &BoundAssignment::new(vec![10], 20)).unwrap();
    assert_eq!(g.to_string(), "EXISTS a < 10 . FORALL b . b <= a + 3 AND a * a < inp");
    // b ranges over 0..=20, so b <= a + 3 fails for every a < 10.
    assert!(!eval(&g, 100, &[10], 20));
    assert!(eval(&g, 100, &[10], 12));
}
