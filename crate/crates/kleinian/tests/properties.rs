use proptest::prelude::*;

use kleinian::abelfun::{p_derive, r_oracle, r_to_p, term_parity, RFunctionId};
use kleinian::basis::{numerator, numerator_via_wp, Evaluator, FunctionSpec, Probe};
use kleinian::combinat::integer_partitions;
use kleinian::curve::CurveModel;
use kleinian::hirota::{closed_form_d, closed_form_h, closed_form_sh, iterate_d, iterate_h, symmetrize, to_rational, DerivSymbol, Label, TensorPoly};
use kleinian::linalg::{rank, solve, Echelon, Insert};
use kleinian::params::ParamSpace;
use kleinian::rational::{q, Q};
use kleinian::sigma::{from_json, solve_expansion, to_json};
use kleinian::symfunc::{brute_force_monomial, monomial_sym_at_roots};

fn f() -> DerivSymbol {
    DerivSymbol::new("f", &[])
}

fn label_list(max_len: usize) -> impl Strategy<Value = Vec<Label>> {
    prop::collection::vec(1u16..=4, 1..=max_len)
}

fn small_q() -> impl Strategy<Value = Q> {
    (-9i64..=9, 1i64..=4).prop_map(|(a, b)| Q::new(a.into(), b.into()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn d_closed_form_matches_iteration(ix in label_list(5)) {
        let g = DerivSymbol::new("g", &[]);
        let t = TensorPoly::tensor_of(&[f(), g.clone()], 2);
        prop_assert_eq!(iterate_d(&ix, &t).unwrap(), closed_form_d(&ix, &f(), &g));
    }

    #[test]
    fn h_closed_form_matches_iteration(ix in label_list(4), m in 2usize..=4) {
        let funcs: Vec<DerivSymbol> = (0..m).map(|k| DerivSymbol::new(&format!("f{k}"), &[])).collect();
        let t = TensorPoly::tensor_of(&funcs, m as u32);
        prop_assert_eq!(iterate_h(&ix, m, &t).unwrap(), closed_form_h(&ix, m, &funcs).unwrap());
    }

    #[test]
    fn h_operators_commute(ix in label_list(4), m in 2usize..=3) {
        let t = TensorPoly::tensor_power(&f(), m);
        let mut rev = ix.clone();
        rev.reverse();
        prop_assert_eq!(iterate_h(&ix, m, &t).unwrap(), iterate_h(&rev, m, &t).unwrap());
    }

    #[test]
    fn symmetrized_h_vanishes_unless_divisible(ix in label_list(6), m in 2usize..=3) {
        let s = to_rational(&symmetrize(&iterate_h(&ix, m, &TensorPoly::tensor_power(&f(), m)).unwrap())).unwrap();
        prop_assert_eq!(s.is_zero(), ix.len() % m != 0);
        prop_assert_eq!(s, closed_form_sh(&ix, m, &f()).unwrap());
    }

    #[test]
    fn odd_d_vanishes_on_squares(ix in label_list(7).prop_filter("odd", |v| v.len() % 2 == 1)) {
        prop_assert!(symmetrize(&iterate_d(&ix, &TensorPoly::tensor_power(&f(), 2)).unwrap()).is_zero());
    }

    #[test]
    fn r_expansion_matches_oracle(m in 2usize..=3, k in 1usize..=2, ix in prop::collection::vec(1u16..=3, 6)) {
        let n = m * k;
        let id = RFunctionId::new(m, &ix[..n]).unwrap();
        let p = r_to_p(&id).0;
        prop_assert_eq!(&p, &r_oracle(&id).unwrap());
        prop_assert_eq!(term_parity(&p), Some(if n % 2 == 0 { 1 } else { -1 }));
    }

    #[test]
    fn derivative_of_r_raises_parity(ix in prop::collection::vec(1u16..=3, 2), i in 1u16..=3) {
        let id = RFunctionId::new(2, &ix).unwrap();
        let d = p_derive(&r_to_p(&id).0, i);
        prop_assert_eq!(term_parity(&d), Some(-1));
    }

    #[test]
    fn solve_recovers_solution(xs in prop::collection::vec(small_q(), 3), a in prop::collection::vec(prop::collection::vec(small_q(), 3), 5)) {
        let rows: Vec<Vec<Q>> = a.iter().map(|r| {
            let mut row = r.clone();
            row.push(r.iter().zip(&xs).map(|(p, q)| p * q).sum());
            row
        }).collect();
        let s = solve(rows.clone(), 3);
        prop_assert!(!s.inconsistent);
        for r in &rows {
            let lhs: Q = r[..3].iter().zip(&s.x[0]).map(|(p, q)| p * q).sum();
            prop_assert_eq!(&lhs, &r[3]);
        }
        let coeffs: Vec<Vec<Q>> = a.clone();
        prop_assert_eq!(s.rank, rank(&coeffs));
    }

    #[test]
    fn echelon_rank_matches_bareiss(a in prop::collection::vec(prop::collection::vec(-2i64..=2, 4), 1..6)) {
        let rows: Vec<Vec<Q>> = a.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect();
        let mut e = Echelon::default();
        for (k, r) in rows.iter().enumerate() {
            if let Insert::Dependent(c) = e.insert(r) {
                prop_assert!(rank(&rows[..k + 1]) == rank(&rows[..k]));
                prop_assert_eq!(c.len(), e.rank());
            }
        }
        prop_assert_eq!(e.rank(), rank(&rows));
    }

    #[test]
    fn truncated_products_associate(a in prop::collection::vec(small_q(), 10), b in prop::collection::vec(small_q(), 10), c in prop::collection::vec(small_q(), 10)) {
        let sp = ParamSpace::new(vec![2, 3], 8);
        let v = |x: &Vec<Q>| { let mut p = sp.zero(); for (k, y) in x.iter().enumerate().take(sp.len()) { p.0[k] = y.clone(); } p };
        let (a, b, c) = (v(&a), v(&b), v(&c));
        prop_assert_eq!(sp.mul(&sp.mul(&a, &b), &c), sp.mul(&a, &sp.mul(&b, &c)));
        prop_assert_eq!(sp.mul(&a, &b), sp.mul(&b, &a));
    }

    #[test]
    fn spec_roundtrip(m in 2usize..=3, ix in prop::collection::vec(1u16..=3, 1..=6), by in prop::collection::vec(1u16..=3, 0..=2)) {
        let r = FunctionSpec::r(m, &ix).unwrap();
        let s = if by.is_empty() { r } else { FunctionSpec::deriv(r, &by) };
        prop_assert_eq!(FunctionSpec::parse(&s.to_string()).unwrap(), s);
    }
}

#[test]
fn monomial_symmetric_functions_agree() {
    for m in 1..=4 {
        for n in 0..=7 {
            for rho in integer_partitions(n, m) {
                assert_eq!(monomial_sym_at_roots(&rho, m).unwrap(), brute_force_monomial(&rho, m).unwrap(), "{:?} {m}", rho.parts);
            }
        }
    }
}

#[test]
fn derivative_routes_agree_on_series() {
    let c = CurveModel::cyclic(2, 5).unwrap();
    let e = solve_expansion(&c, 8).unwrap();
    for (ix, i) in [(vec![1, 2], 1u16), (vec![2, 2], 2), (vec![1, 1, 2, 2], 1)] {
        let base = FunctionSpec::r(2, &ix).unwrap();
        let d = FunctionSpec::deriv(base.clone(), &[i]);
        let FunctionSpec::R(id) = &base else { unreachable!() };
        let via = FunctionSpec::poly("dR", p_derive(&r_to_p(id).0, i));
        let (na, nb) = (numerator(&d, 5).unwrap(), numerator(&via, 5).unwrap());
        let big = na.pole.max(nb.pole);
        let mut ev = Evaluator::new(&e, vec![Probe::Full]);
        assert_eq!(ev.numerator_series(&na, big, 0).unwrap(), ev.numerator_series(&nb, big, 0).unwrap(), "{d}");
        let nw = numerator_via_wp(&base, 5).unwrap();
        assert!(nw.pole >= base.pole_order());
    }
}

#[test]
fn expansion_files_roundtrip_and_detect_tampering() {
    let c = CurveModel::cyclic(2, 5).unwrap();
    let e = solve_expansion(&c, 6).unwrap();
    let text = to_json(&e).unwrap();
    let back = from_json(&text).unwrap();
    assert_eq!(back.terms, e.terms);
    assert_eq!(to_json(&back).unwrap(), text);
    let tampered = text.replacen("\"1/3\"", "\"2/3\"", 1);
    assert_ne!(tampered, text);
    assert!(from_json(&tampered).is_err());
}
