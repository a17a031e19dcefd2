//! Q- and R-functions: operator definition, expansion into Kleinian
//! ℘-functions, the `σ = e^φ` oracle, parity and the symbolic lattice-shift
//! invariance check.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed};

use crate::combinat::all_set_partitions;
use crate::error::{Error, Result};
use crate::hirota::{closed_form_sh, lattice_shift_poly, DerivSymbol, Factor, Label, Names, RatDiffPoly, SymKind};
use crate::poly::{Mono, Poly};
use crate::rational::{fmt_q, q, Q};

/// Variables of ℘-polynomials: multi-index ℘ symbols and curve parameters.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PVar {
    /// `℘_{i₁…i_k}` with sorted indices, `k ≥ 2`.
    P(Vec<Label>),
    /// `λ_j`.
    Lambda(u16),
}

pub type PPoly = Poly<PVar, Q>;

pub fn wp(indices: &[Label]) -> PVar {
    let mut v = indices.to_vec();
    v.sort_unstable();
    PVar::P(v)
}

/// `R^[m]_{i₁…i_n}` with sorted indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RFunctionId {
    pub m: usize,
    pub indices: Vec<Label>,
}

impl RFunctionId {
    pub fn new(m: usize, indices: &[Label]) -> Result<Self> {
        if m < 2 {
            return Err(Error::Invalid(format!("R-functions need order m >= 2, got {m}")));
        }
        let mut v = indices.to_vec();
        v.sort_unstable();
        Ok(RFunctionId { m, indices: v })
    }

    pub fn n(&self) -> usize {
        self.indices.len()
    }

    pub fn is_nonzero(&self) -> bool {
        self.n() > 0 && self.n() % self.m == 0
    }

    /// Weight `−Σ wt(u_i)`, with `weights[i−1]` the weight of `u_i`.
    pub fn weight(&self, weights: &[usize]) -> i64 {
        -(self.indices.iter().map(|&i| weights[i as usize - 1] as i64).sum::<i64>())
    }
}

impl fmt::Display for RFunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        write!(f, "R{}[{}]", self.m, idx.join(","))
    }
}

/// `R = scale · numerator / σ^{sigma_power}` in σ-derivative symbols.
#[derive(Clone, Debug)]
pub struct RDefinition {
    pub numerator: RatDiffPoly,
    pub scale: Q,
    pub sigma_power: u32,
}

pub fn sigma_symbol() -> DerivSymbol {
    DerivSymbol::new("sigma", &[])
}

/// `R^[m]_I = −1/(m σ^m) · S∘H^[m]_I(⊗^m σ)`.
pub fn r_define(id: &RFunctionId) -> Result<RDefinition> {
    Ok(RDefinition {
        numerator: closed_form_sh(&id.indices, id.m, &sigma_symbol())?,
        scale: -Q::one() / q(id.m as i64),
        sigma_power: id.m as u32,
    })
}

/// Set partitions of `items` whose blocks all have size divisible by `m`.
pub fn divisible_set_partitions(items: &[Label], m: usize) -> Vec<Vec<Vec<Label>>> {
    all_set_partitions(items).into_iter().filter(|p| p.iter().all(|b| b.len() % m == 0)).collect()
}

/// Closed-form ℘ expansion `Σ (−m)^{ℓ−1} ∏_{B∈π} ℘_B` over set partitions
/// into blocks of sizes divisible by `m`. Returns zero with a note when
/// `m ∤ n`.
pub fn r_to_p(id: &RFunctionId) -> (PPoly, Option<String>) {
    if !id.is_nonzero() {
        return (PPoly::zero(), Some(format!("zero: m = {} does not divide n = {}", id.m, id.n())));
    }
    let mut out = PPoly::zero();
    let mm = -q(id.m as i64);
    for pi in divisible_set_partitions(&id.indices, id.m) {
        let c = num_traits::pow(mm.clone(), pi.len() - 1);
        let mono = pi.iter().fold(Vec::new(), |acc: Mono<PVar>, b| crate::poly::mono_mul(&acc, &vec![(wp(b), 1)]));
        out.add_term(mono, c);
    }
    (out, None)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Phi {
    D(Vec<Label>),
}

/// Independent expansion: substitutes `σ = e^φ` into the operator
/// definition, with `φ_I = −℘_I` for `|I| ≥ 2`, and checks that every term
/// carrying a first derivative `φ_i` cancels.
pub fn r_oracle(id: &RFunctionId) -> Result<PPoly> {
    if !id.is_nonzero() {
        return Ok(PPoly::zero());
    }
    let def = r_define(id)?;
    let mut bell: BTreeMap<Vec<Label>, Poly<Phi, Q>> = BTreeMap::new();
    let mut total = Poly::<Phi, Q>::zero();
    for (mono, c) in &def.numerator.terms {
        let mut t = Poly::<Phi, Q>::constant(c * &def.scale);
        for (f, e) in mono {
            let s = match f {
                Factor::Sym(s) if s.kind == SymKind::Generic => s,
                _ => return Err(Error::Consistency("unexpected factor in R numerator".into())),
            };
            let y = bell.entry(s.derivs.clone()).or_insert_with(|| complete_bell(&s.derivs)).clone();
            t = t.mul(&y.pow(*e, q(1)));
        }
        total.add_assign(&t);
    }
    let mut out = PPoly::zero();
    for (mono, c) in &total.terms {
        let mut pm: Mono<PVar> = Vec::new();
        let mut coef = c.clone();
        for (Phi::D(ix), e) in mono {
            if ix.len() < 2 {
                return Err(Error::Consistency(format!("first-derivative φ terms survive in {id}")));
            }
            if e % 2 == 1 {
                coef = -coef;
            }
            pm = crate::poly::mono_mul(&pm, &vec![(PVar::P(ix.clone()), *e)]);
        }
        out.add_term(pm, coef);
    }
    Ok(out)
}

/// `e^{−φ} ∂_I e^φ = Σ_π ∏_{B∈π} φ_B`.
fn complete_bell(ix: &[Label]) -> Poly<Phi, Q> {
    if ix.is_empty() {
        return Poly::constant(q(1));
    }
    let mut r = Poly::zero();
    for pi in all_set_partitions(ix) {
        let mono = pi.iter().fold(Vec::new(), |acc: Mono<Phi>, b| {
            let mut b = b.clone();
            b.sort_unstable();
            crate::poly::mono_mul(&acc, &vec![(Phi::D(b), 1)])
        });
        r.add_term(mono, q(1));
    }
    r
}

/// Parity of `R^[m]_I` under `u ↦ −u`: `(−1)^n`, whatever the parity of σ.
pub fn parity(id: &RFunctionId, _sigma_parity: i32) -> i32 {
    if id.n() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Sign picked up by each term under `u ↦ −u`; `None` if terms disagree.
pub fn term_parity(p: &PPoly) -> Option<i32> {
    let mut out = None;
    for mono in p.terms.keys() {
        let deg: u32 = mono.iter().map(|(v, e)| if let PVar::P(ix) = v { ix.len() as u32 * e } else { 0 }).sum();
        let s = if deg % 2 == 0 { 1 } else { -1 };
        match out {
            None => out = Some(s),
            Some(t) if t != s => return None,
            _ => {}
        }
    }
    out
}

/// Applies the lattice shift to the numerator and checks that it equals
/// `h^m` times the numerator, so that the ratio with `m σ^m` is unchanged.
pub fn shift_invariance_check(id: &RFunctionId) -> Result<bool> {
    let def = r_define(id)?;
    let shifted = lattice_shift_poly(&def.numerator, "sigma");
    let hm = RatDiffPoly::term(vec![(Factor::Sym(DerivSymbol::exp_linear("h")), id.m as u32)], q(1));
    Ok(shifted.sub(&def.numerator.mul(&hm)).is_zero())
}

/// `∂_i` of a ℘-polynomial using `∂_i ℘_J = ℘_{J∪{i}}`.
pub fn p_derive(p: &PPoly, i: Label) -> PPoly {
    let mut out = PPoly::zero();
    for (mono, c) in &p.terms {
        for (k, (v, e)) in mono.iter().enumerate() {
            if let PVar::P(ix) = v {
                let mut rest = mono.clone();
                if *e == 1 {
                    rest.remove(k);
                } else {
                    rest[k].1 -= 1;
                }
                let mut nix = ix.clone();
                nix.push(i);
                out.add_term(crate::poly::mono_mul(&rest, &vec![(wp(&nix), 1)]), c * q(*e as i64));
            }
        }
    }
    out
}

/// Weight of every term, or `None` if the polynomial is inhomogeneous.
/// `u_weights[i−1]` is the weight of `u_i`; `λ_j` has weight `−n(s−j)`.
pub fn ppoly_weight(p: &PPoly, u_weights: &[usize], n: usize, s: usize) -> Option<i64> {
    let mut out = None;
    for mono in p.terms.keys() {
        let w: i64 = mono
            .iter()
            .map(|(v, e)| {
                let wv = match v {
                    PVar::P(ix) => -(ix.iter().map(|&i| u_weights[i as usize - 1] as i64).sum::<i64>()),
                    PVar::Lambda(j) => -((n * (s - *j as usize)) as i64),
                };
                wv * *e as i64
            })
            .sum();
        match out {
            None => out = Some(w),
            Some(x) if x != w => return None,
            _ => {}
        }
    }
    out
}

fn render_var(v: &PVar, names: &Names, unicode: bool) -> String {
    const SUB: [char; 10] = ['₀', '₁', '₂', '₃', '₄', '₅', '₆', '₇', '₈', '₉'];
    let sub = |s: String| -> String { s.chars().map(|c| c.to_digit(10).map(|d| SUB[d as usize]).unwrap_or(c)).collect() };
    match (v, unicode) {
        (PVar::P(ix), false) => {
            let s: Vec<String> = ix.iter().map(|&l| names.name(l)).collect();
            format!("p[{}]", s.join(","))
        }
        (PVar::P(ix), true) => {
            let all_digits = ix.iter().all(|&l| l < 10 && names.name(l) == l.to_string());
            let s: Vec<String> = ix.iter().map(|&l| names.name(l)).collect();
            if all_digits {
                format!("℘{}", sub(s.concat()))
            } else {
                format!("℘_{{{}}}", s.join(","))
            }
        }
        (PVar::Lambda(j), false) => format!("lambda[{j}]"),
        (PVar::Lambda(j), true) => format!("λ{}", sub(j.to_string())),
    }
}

/// Renders a ℘-polynomial, ASCII (`p[1,2]`, `lambda[3]`) or with ℘ and λ.
pub fn render_ppoly(p: &PPoly, names: &Names, unicode: bool) -> String {
    if p.is_zero() {
        return "0".into();
    }
    // terms with fewer factors first
    let mut terms: Vec<(&Mono<PVar>, &Q)> = p.terms.iter().collect();
    terms.sort_by_key(|(m, _)| m.iter().filter(|(v, _)| matches!(v, PVar::P(_))).map(|(_, e)| *e).sum::<u32>());
    let mut out = String::new();
    let (mul, minus) = if unicode { ("", " − ") } else { ("*", " - ") };
    for (i, (m, c)) in terms.into_iter().enumerate() {
        let a = c.abs();
        let mono: Vec<String> = m
            .iter()
            .map(|(v, e)| {
                let s = render_var(v, names, unicode);
                if *e > 1 {
                    format!("{s}^{e}")
                } else {
                    s
                }
            })
            .collect();
        let mono = mono.join(mul);
        let body = if m.is_empty() {
            fmt_q(&a)
        } else if a.is_one() {
            mono
        } else {
            format!("{}{}{}", fmt_q(&a), if unicode { "" } else { "*" }, mono)
        };
        if i == 0 {
            if c.is_negative() {
                out.push('-');
            }
        } else {
            out.push_str(if c.is_negative() { minus } else { " + " });
        }
        out.push_str(&body);
    }
    out
}

/// Renders an R-function id with names, e.g. `R^[3]_{1,2,2}`.
pub fn render_rid(id: &RFunctionId, names: &Names) -> String {
    let s: Vec<String> = id.indices.iter().map(|&l| names.name(l)).collect();
    format!("R{}[{}]", id.m, s.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rid(m: usize, ix: &[Label]) -> RFunctionId {
        RFunctionId::new(m, ix).unwrap()
    }

    #[test]
    fn q_two_index_is_p() {
        let (p, note) = r_to_p(&rid(2, &[1, 2]));
        assert!(note.is_none());
        assert_eq!(render_ppoly(&p, &Names::default(), false), "p[1,2]");
        let d = r_define(&rid(2, &[1, 2])).unwrap();
        // numerator 2(σσ_12 − σ_1σ_2) with scale −1/2
        assert_eq!(d.numerator.len(), 2);
        assert_eq!(d.scale, crate::rational::qf(-1, 2));
    }

    #[test]
    fn q_four_index() {
        let mut names = Names::default();
        let ix: Vec<Label> = ["i", "j", "k", "l"].iter().map(|s| names.intern(s)).collect();
        let (p, _) = r_to_p(&rid(2, &ix));
        assert_eq!(p.len(), 4);
        assert_eq!(
            render_ppoly(&p, &names, false),
            "p[i,j,k,l] - 2*p[i,j]*p[k,l] - 2*p[i,k]*p[j,l] - 2*p[i,l]*p[j,k]"
        );
    }

    #[test]
    fn term_counts() {
        let (q6, _) = r_to_p(&rid(2, &[1, 2, 3, 4, 5, 6]));
        assert_eq!(q6.len(), 31);
        let (r36, _) = r_to_p(&rid(3, &[1, 2, 3, 4, 5, 6]));
        assert_eq!(r36.len(), 11);
        assert!(r36.terms.values().filter(|c| **c == q(-3)).count() == 10);
        let (z, note) = r_to_p(&rid(3, &[1, 2]));
        assert!(z.is_zero() && note.unwrap().contains("does not divide"));
        assert_eq!(render_ppoly(&r_to_p(&rid(3, &[1, 1, 1])).0, &Names::default(), false), "p[1,1,1]");
    }

    #[test]
    fn oracle_agrees() {
        for (m, ix) in [(2, vec![1, 2]), (2, vec![1, 2, 3, 4]), (3, vec![1, 2, 3]), (2, vec![1, 1, 2, 2]), (3, vec![1, 1, 2, 2, 2, 2])] {
            let id = rid(m, &ix);
            assert_eq!(r_oracle(&id).unwrap(), r_to_p(&id).0, "{id}");
        }
    }

    #[test]
    fn shift_invariance() {
        assert!(shift_invariance_check(&rid(2, &[1, 2])).unwrap());
        assert!(shift_invariance_check(&rid(3, &[1, 2, 3])).unwrap());
        assert!(shift_invariance_check(&rid(2, &[1, 2, 3, 4])).unwrap());
    }

    #[test]
    fn parity_and_derivative() {
        let (p, _) = r_to_p(&rid(3, &[1, 2, 2, 2, 2, 2]));
        assert_eq!(term_parity(&p), Some(parity(&rid(3, &[1, 2, 2, 2, 2, 2]), -1)));
        let d = p_derive(&r_to_p(&rid(2, &[1, 1])).0, 2);
        assert_eq!(render_ppoly(&d, &Names::default(), true), "℘₁₁₂");
        assert_eq!(ppoly_weight(&p, &[3, 1], 2, 5), Some(-8));
    }
}
