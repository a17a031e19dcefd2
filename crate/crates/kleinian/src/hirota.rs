//! Tensor differential algebra: slot derivatives, the Baker–Hirota operator
//! `D`, the generalized operators `H^[m]`, the symmetrizer `S`, closed forms
//! of iterated operators, Leibniz rules and the symbolic lattice shift.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::combinat::{combinations, constrained_set_partitions, integer_partitions, multiset_permutations, z_weight};
use crate::cyclo::Cyclo;
use crate::error::{Error, Result};
use crate::poly::{mono_mul, Mono, Poly};
use crate::rational::{fmt_q, q, Q};
use crate::symfunc::monomial_sym_at_roots;

/// A variable label. Repeated labels denote the same variable.
pub type Label = u16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymKind {
    Generic,
    /// `h = χ e^L`: differentiation multiplies by `L_i`.
    ExpLinear,
}

/// `f_{i₁…i_k}` for an abstract function `f`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DerivSymbol {
    pub func: String,
    pub kind: SymKind,
    pub derivs: Vec<Label>,
}

impl DerivSymbol {
    pub fn new(func: &str, derivs: &[Label]) -> Self {
        let mut d = derivs.to_vec();
        d.sort_unstable();
        DerivSymbol { func: func.to_string(), kind: SymKind::Generic, derivs: d }
    }

    pub fn exp_linear(func: &str) -> Self {
        DerivSymbol { func: func.to_string(), kind: SymKind::ExpLinear, derivs: Vec::new() }
    }
}

impl Ord for DerivSymbol {
    fn cmp(&self, o: &Self) -> Ordering {
        (&self.func, self.kind, self.derivs.len(), &self.derivs).cmp(&(&o.func, o.kind, o.derivs.len(), &o.derivs))
    }
}

impl PartialOrd for DerivSymbol {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// A commuting factor inside a slot.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    Sym(DerivSymbol),
    /// First derivative `L_i` of the linear exponent; constant under `∂`.
    L(Label),
}

pub type Slot = Mono<Factor>;

/// Commutative polynomial in derivative symbols, the image of `S`.
pub type DiffPoly = Poly<Factor, Cyclo>;

/// Same, with rational coefficients.
pub type RatDiffPoly = Poly<Factor, Q>;

/// Derivative of a slot monomial with respect to variable `i`.
pub fn derive_slot(slot: &Slot, i: Label) -> Vec<(Slot, u32)> {
    let mut out = Vec::new();
    for (k, (f, e)) in slot.iter().enumerate() {
        let sym = match f {
            Factor::Sym(s) => s,
            Factor::L(_) => continue,
        };
        let mut rest: Slot = slot.clone();
        match sym.kind {
            SymKind::ExpLinear => {
                let t = mono_mul(&rest, &vec![(Factor::L(i), 1)]);
                out.push((t, *e));
            }
            SymKind::Generic => {
                if *e == 1 {
                    rest.remove(k);
                } else {
                    rest[k].1 -= 1;
                }
                let mut d = sym.clone();
                d.derivs.push(i);
                d.derivs.sort_unstable();
                out.push((mono_mul(&rest, &vec![(Factor::Sym(d), 1)]), *e));
            }
        }
    }
    out
}

/// Formal sum of coefficient-weighted tensor products with `slots` entries.
/// Coefficients live in `ℚ(ζ)` with `ζ` of order `order`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorPoly {
    pub slots: usize,
    pub order: u32,
    pub terms: BTreeMap<Vec<Slot>, Cyclo>,
}

impl TensorPoly {
    pub fn zero(slots: usize, order: u32) -> Self {
        TensorPoly { slots, order, terms: BTreeMap::new() }
    }

    pub fn single(order: u32, slots: Vec<Slot>, c: Cyclo) -> Self {
        let mut t = Self::zero(slots.len(), order);
        t.add_term(slots, c);
        t
    }

    /// `f⊗f⊗…⊗f` with `m` factors; coefficients in `ℚ(ζ_m)`.
    pub fn tensor_power(sym: &DerivSymbol, m: usize) -> Self {
        let slot: Slot = vec![(Factor::Sym(sym.clone()), 1)];
        Self::single(m.max(2) as u32, vec![slot; m], Cyclo::one(m.max(2) as u32))
    }

    /// `f^[1]⊗…⊗f^[m]` from one symbol per slot.
    pub fn tensor_of(syms: &[DerivSymbol], order: u32) -> Self {
        let slots = syms.iter().map(|s| vec![(Factor::Sym(s.clone()), 1)]).collect();
        Self::single(order, slots, Cyclo::one(order))
    }

    /// `1⊗…⊗1`.
    pub fn unit(slots: usize, order: u32) -> Self {
        Self::single(order, vec![Vec::new(); slots], Cyclo::one(order))
    }

    pub fn add_term(&mut self, key: Vec<Slot>, c: Cyclo) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(e) => {
                let s = &*e + &c;
                if s.is_zero() {
                    self.terms.remove(&key);
                } else {
                    *e = s;
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.compatible(o)?;
        let mut r = self.clone();
        for (k, c) in &o.terms {
            r.add_term(k.clone(), c.clone());
        }
        Ok(r)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        TensorPoly { slots: self.slots, order: self.order, terms: self.terms.iter().map(|(k, c)| (k.clone(), -c)).collect() }
    }

    pub fn scale(&self, c: &Cyclo) -> Self {
        let mut r = Self::zero(self.slots, self.order);
        for (k, v) in &self.terms {
            r.add_term(k.clone(), v * c);
        }
        r
    }

    fn compatible(&self, o: &Self) -> Result<()> {
        if self.slots != o.slots {
            return Err(Error::SizeMismatch { expected: self.slots, got: o.slots });
        }
        if self.order != o.order {
            return Err(Error::Invalid(format!("mixed root-of-unity orders {} and {}", self.order, o.order)));
        }
        Ok(())
    }

    /// Entrywise product `(a⊗b)(c⊗d) = ac⊗bd`.
    pub fn product(&self, o: &Self) -> Result<Self> {
        self.compatible(o)?;
        let mut r = Self::zero(self.slots, self.order);
        for (k1, c1) in &self.terms {
            for (k2, c2) in &o.terms {
                let key = k1.iter().zip(k2).map(|(a, b)| mono_mul(a, b)).collect();
                r.add_term(key, c1 * c2);
            }
        }
        Ok(r)
    }
}

/// `∂_i^[j]`: differentiates slot `j` (1-based) with respect to `i`.
pub fn slot_derive(j: usize, i: Label, t: &TensorPoly) -> Result<TensorPoly> {
    if j == 0 || j > t.slots {
        return Err(Error::Invalid(format!("slot {j} out of range 1..={}", t.slots)));
    }
    let mut r = TensorPoly::zero(t.slots, t.order);
    for (key, c) in &t.terms {
        for (slot, mult) in derive_slot(&key[j - 1], i) {
            let mut k = key.clone();
            k[j - 1] = slot;
            r.add_term(k, c.scale(&q(mult as i64)));
        }
    }
    Ok(r)
}

/// Baker–Hirota operator `D_i = ∂_i^[1] − ∂_i^[2]` on two-slot tensors.
pub fn hirota_d(i: Label, t: &TensorPoly) -> Result<TensorPoly> {
    if t.slots != 2 {
        return Err(Error::SizeMismatch { expected: 2, got: t.slots });
    }
    slot_derive(1, i, t)?.sub(&slot_derive(2, i, t)?)
}

/// `H_i^[m] = Σ_j ζ^{j−1} ∂_i^[j]` on `m`-slot tensors.
pub fn hirota_h(i: Label, m: usize, t: &TensorPoly) -> Result<TensorPoly> {
    if m < 2 {
        return Err(Error::Invalid("operator order must be at least 2".into()));
    }
    if t.slots != m {
        return Err(Error::SizeMismatch { expected: m, got: t.slots });
    }
    if t.order != m as u32 {
        return Err(Error::Invalid(format!(
            "mixed-order composition: H^[{m}] applied to an expression over roots of order {}",
            t.order
        )));
    }
    let mut r = TensorPoly::zero(m, t.order);
    for j in 1..=m {
        let d = slot_derive(j, i, t)?.scale(&Cyclo::zeta_pow(t.order, j as i64 - 1));
        r = r.add(&d)?;
    }
    Ok(r)
}

/// Applies `H^[m]` for each label, innermost last in the slice.
pub fn iterate_h(labels: &[Label], m: usize, t: &TensorPoly) -> Result<TensorPoly> {
    let mut cur = t.clone();
    for &i in labels.iter().rev() {
        cur = hirota_h(i, m, &cur)?;
    }
    Ok(cur)
}

pub fn iterate_d(labels: &[Label], t: &TensorPoly) -> Result<TensorPoly> {
    let mut cur = t.clone();
    for &i in labels.iter().rev() {
        cur = hirota_d(i, &cur)?;
    }
    Ok(cur)
}

/// `S`: multiplies slots commutatively.
pub fn symmetrize(t: &TensorPoly) -> DiffPoly {
    let mut r = DiffPoly::zero();
    for (key, c) in &t.terms {
        let m = key.iter().fold(Vec::new(), |acc, s| mono_mul(&acc, s));
        r.add_term(m, c.clone());
    }
    r
}

/// Converts to rational coefficients when every coefficient is rational.
pub fn to_rational(p: &DiffPoly) -> Option<RatDiffPoly> {
    let mut r = RatDiffPoly::zero();
    for (m, c) in &p.terms {
        r.add_term(m.clone(), c.as_rational()?);
    }
    Some(r)
}

/// Derivative symbol `f_J` for a base symbol, honouring the exp-linear rule.
fn derived(base: &DerivSymbol, labels: &[Label]) -> Slot {
    match base.kind {
        SymKind::Generic => {
            let mut d = base.clone();
            d.derivs.extend_from_slice(labels);
            d.derivs.sort_unstable();
            vec![(Factor::Sym(d), 1)]
        }
        SymKind::ExpLinear => {
            let mut s: Slot = vec![(Factor::Sym(base.clone()), 1)];
            for &l in labels {
                s = mono_mul(&s, &vec![(Factor::L(l), 1)]);
            }
            s
        }
    }
}

/// Closed form of `D_{i₁}…D_{i_n}(f⊗g)`: `Σ_J (−1)^{|J|} f_{I∖J}⊗g_J`.
pub fn closed_form_d(labels: &[Label], f: &DerivSymbol, g: &DerivSymbol) -> TensorPoly {
    let n = labels.len();
    let mut r = TensorPoly::zero(2, 2);
    for k in 0..=n {
        for j in combinations(n, k) {
            let jl: Vec<Label> = j.iter().map(|&p| labels[p]).collect();
            let rest: Vec<Label> = (0..n).filter(|p| !j.contains(p)).map(|p| labels[p]).collect();
            let c = Cyclo::from_q(2, q(if k % 2 == 0 { 1 } else { -1 }));
            r.add_term(vec![derived(f, &rest), derived(g, &jl)], c);
        }
    }
    r
}

/// Closed form of `H^[m]_{i₁}…H^[m]_{i_n}(f^[1]⊗…⊗f^[m])`:
/// `Σ_ρ Σ_{ψ∈Ψ(ρ)} ζ^{z(ψ)} Σ_{π∈Π(ψ)} ⊗_k f^[k]_{π_k}`.
pub fn closed_form_h(labels: &[Label], m: usize, funcs: &[DerivSymbol]) -> Result<TensorPoly> {
    if funcs.len() != m || m < 2 {
        return Err(Error::SizeMismatch { expected: m, got: funcs.len() });
    }
    let n = labels.len();
    let order = m as u32;
    let mut r = TensorPoly::zero(m, order);
    if n == 0 {
        return Ok(TensorPoly::tensor_of(funcs, order));
    }
    for rho in integer_partitions(n, m) {
        for psi in multiset_permutations(&rho) {
            let c = Cyclo::zeta_pow(order, z_weight(&psi) as i64);
            for pi in constrained_set_partitions(labels, &psi)? {
                let key = pi.iter().zip(funcs).map(|(b, f)| derived(f, b)).collect();
                r.add_term(key, c.clone());
            }
        }
    }
    Ok(r)
}

/// Closed form of `S∘H^[m]_{i₁}…H^[m]_{i_n}(⊗^m f)`:
/// `Σ_ρ M_ρ(1,ζ,…) Σ_{π∈Π(ρ)} ∏_k f_{π_k}` with integer coefficients.
pub fn closed_form_sh(labels: &[Label], m: usize, f: &DerivSymbol) -> Result<RatDiffPoly> {
    let n = labels.len();
    let mut r = RatDiffPoly::zero();
    if n == 0 {
        return Ok(RatDiffPoly::term(vec![(Factor::Sym(f.clone()), m as u32)], q(1)));
    }
    for rho in integer_partitions(n, m) {
        let mval = monomial_sym_at_roots(&rho, m)?;
        if mval.is_zero() {
            continue;
        }
        for pi in constrained_set_partitions(labels, &rho.parts)? {
            let mono = pi.iter().fold(Vec::new(), |acc, b| mono_mul(&acc, &derived(f, b)));
            r.add_term(mono, mval.clone());
        }
    }
    Ok(r)
}

/// Leibniz form of `D_I((a⊗b)(c⊗d))`: `Σ_{J⊆I} D_J(a⊗b)·D_{I∖J}(c⊗d)`.
pub fn leibniz_d(labels: &[Label], t1: &TensorPoly, t2: &TensorPoly) -> Result<TensorPoly> {
    leibniz_generic(labels, t1, t2, |ls, t| iterate_d(ls, t))
}

/// Leibniz form of `H^[m]_I(t₁t₂)`.
pub fn leibniz_h(labels: &[Label], m: usize, t1: &TensorPoly, t2: &TensorPoly) -> Result<TensorPoly> {
    leibniz_generic(labels, t1, t2, |ls, t| iterate_h(ls, m, t))
}

fn leibniz_generic(
    labels: &[Label],
    t1: &TensorPoly,
    t2: &TensorPoly,
    op: impl Fn(&[Label], &TensorPoly) -> Result<TensorPoly>,
) -> Result<TensorPoly> {
    t1.compatible(t2)?;
    let n = labels.len();
    let mut r = TensorPoly::zero(t1.slots, t1.order);
    for k in 0..=n {
        for j in combinations(n, k) {
            let a: Vec<Label> = j.iter().map(|&p| labels[p]).collect();
            let b: Vec<Label> = (0..n).filter(|p| !j.contains(p)).map(|p| labels[p]).collect();
            r = r.add(&op(&a, t1)?.product(&op(&b, t2)?)?)?;
        }
    }
    Ok(r)
}

/// Image of `σ_I` under the lattice shift: `h Σ_{J⊆I} σ_{I∖J} ∏_{j∈J} L_j`.
fn shift_symbol(sym: &DerivSymbol, h: &DerivSymbol) -> Poly<Factor, Q> {
    let n = sym.derivs.len();
    let mut r = Poly::zero();
    for k in 0..=n {
        for j in combinations(n, k) {
            let rest: Vec<Label> = (0..n).filter(|p| !j.contains(p)).map(|p| sym.derivs[p]).collect();
            let mut mono: Slot = vec![(Factor::Sym(h.clone()), 1)];
            mono = mono_mul(&mono, &vec![(Factor::Sym(DerivSymbol { derivs: rest, ..sym.clone() }), 1)]);
            for &p in &j {
                mono = mono_mul(&mono, &vec![(Factor::L(sym.derivs[p]), 1)]);
            }
            r.add_term(mono, q(1));
        }
    }
    r
}

fn shift_slot(slot: &Slot, func: &str, h: &DerivSymbol) -> Poly<Factor, Q> {
    let mut r = Poly::constant(q(1));
    for (f, e) in slot {
        let base = match f {
            Factor::Sym(s) if s.func == func && s.kind == SymKind::Generic => shift_symbol(s, h),
            other => Poly::var(other.clone(), q(1)),
        };
        r = r.mul(&base.pow(*e, q(1)));
    }
    r
}

/// Lattice shift on a tensor: every `σ_I` (function `func`) is replaced by
/// its shifted expansion with `h` the exp-linear factor.
pub fn lattice_shift(t: &TensorPoly, func: &str) -> TensorPoly {
    let h = DerivSymbol::exp_linear("h");
    let mut r = TensorPoly::zero(t.slots, t.order);
    for (key, c) in &t.terms {
        let mut acc: Vec<(Vec<Slot>, Q)> = vec![(Vec::new(), q(1))];
        for slot in key {
            let sp = shift_slot(slot, func, &h);
            let mut next = Vec::new();
            for (k, a) in &acc {
                for (m, b) in &sp.terms {
                    let mut kk = k.clone();
                    kk.push(m.clone());
                    next.push((kk, a * b));
                }
            }
            acc = next;
        }
        for (k, a) in acc {
            r.add_term(k, c.scale(&a));
        }
    }
    r
}

/// Lattice shift on a commutative expression.
pub fn lattice_shift_poly(p: &RatDiffPoly, func: &str) -> RatDiffPoly {
    let h = DerivSymbol::exp_linear("h");
    let mut r = RatDiffPoly::zero();
    for (m, c) in &p.terms {
        r.add_assign(&shift_slot(m, func, &h).scale(c));
    }
    r
}

/// Label names used when rendering.
#[derive(Clone, Debug, Default)]
pub struct Names {
    names: Vec<(Label, String)>,
}

impl Names {
    /// Interns a textual label. Purely numeric labels keep their value.
    pub fn intern(&mut self, s: &str) -> Label {
        if let Some((l, _)) = self.names.iter().find(|(_, n)| n == s) {
            return *l;
        }
        let l = match s.parse::<Label>() {
            Ok(v) if !self.names.iter().any(|(l, _)| *l == v) => v,
            _ => (1000 + self.names.len()) as Label,
        };
        self.names.push((l, s.to_string()));
        l
    }

    pub fn name(&self, l: Label) -> String {
        self.names.iter().find(|(k, _)| *k == l).map(|(_, n)| n.clone()).unwrap_or_else(|| l.to_string())
    }
}

pub fn render_symbol(s: &DerivSymbol, names: &Names) -> String {
    if s.derivs.is_empty() {
        s.func.clone()
    } else {
        let idx: Vec<String> = s.derivs.iter().map(|&l| names.name(l)).collect();
        format!("{}[{}]", s.func, idx.join(","))
    }
}

pub fn render_factor(f: &Factor, names: &Names) -> String {
    match f {
        Factor::Sym(s) => render_symbol(s, names),
        Factor::L(l) => format!("L[{}]", names.name(*l)),
    }
}

pub fn render_mono(m: &Slot, names: &Names, sep: &str) -> String {
    if m.is_empty() {
        return "1".into();
    }
    m.iter()
        .map(|(f, e)| {
            let s = render_factor(f, names);
            if *e > 1 {
                format!("{s}^{e}")
            } else {
                s
            }
        })
        .collect::<Vec<_>>()
        .join(sep)
}

/// Coefficient of the form `±ζ^k`, if it is one.
fn root_power(c: &Cyclo) -> Option<(bool, u32)> {
    let m = c.order();
    for k in 0..m {
        let z = Cyclo::zeta_pow(m, k as i64);
        if &z == c {
            return Some((false, k));
        }
        if -&z == *c {
            return Some((true, k));
        }
    }
    None
}

/// Human-readable tensor rendering, e.g. `f[1,2]⊗g − f⊗g[1,2]`.
pub fn render_tensor(t: &TensorPoly, names: &Names) -> String {
    if t.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    // higher derivatives in earlier slots first
    for (i, (key, c)) in t.terms.iter().rev().enumerate() {
        let body: Vec<String> = key.iter().map(|s| render_mono(s, names, "·")).collect();
        let body = body.join("⊗");
        let (neg, coef) = match (c.as_rational(), root_power(c)) {
            (Some(r), _) => {
                let a = r.abs();
                (r.is_negative(), if a.is_one() { String::new() } else { format!("{}·", fmt_q(&a)) })
            }
            (None, Some((neg, k))) => (neg, if k == 1 { "ζ·".to_string() } else { format!("ζ^{k}·") }),
            (None, None) => (false, format!("({c})·")),
        };
        if i == 0 {
            if neg {
                out.push('−');
            }
        } else {
            out.push_str(if neg { " − " } else { " + " });
        }
        out.push_str(&coef);
        out.push_str(&body);
    }
    out
}

/// ASCII rendering of a rational expression with its integer content pulled
/// out, e.g. `2*(f*f[i,j] - f[i]*f[j])`.
pub fn render_diffpoly(p: &RatDiffPoly, names: &Names) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let content = p
        .terms
        .values()
        .fold(Q::zero(), |acc, c| if acc.is_zero() { c.abs() } else { gcd_q(&acc, &c.abs()) });
    let first_neg = p.terms.values().next().map(|c| c.is_negative()).unwrap_or(false);
    let content = if first_neg { -content } else { content };
    let mut body = String::new();
    for (i, (m, c)) in p.terms.iter().enumerate() {
        let r = c / &content;
        let a = r.abs();
        let mono = render_mono(m, names, "*");
        let term = if a.is_one() && !m.is_empty() { mono } else if m.is_empty() { fmt_q(&a) } else { format!("{}*{mono}", fmt_q(&a)) };
        if i == 0 {
            if r.is_negative() {
                body.push('-');
            }
        } else {
            body.push_str(if r.is_negative() { " - " } else { " + " });
        }
        body.push_str(&term);
    }
    if content.is_one() {
        body
    } else if (-&content).is_one() {
        format!("-({body})")
    } else if p.len() == 1 {
        format!("{}*{}", fmt_q(&content), body)
    } else {
        format!("{}*({})", fmt_q(&content), body)
    }
}

fn gcd_q(a: &Q, b: &Q) -> Q {
    use num_integer::Integer;
    let n = a.numer().gcd(b.numer());
    let d = a.denom().lcm(b.denom());
    Q::new(n, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f() -> DerivSymbol {
        DerivSymbol::new("f", &[])
    }

    #[test]
    fn slot_derivatives() {
        let t = TensorPoly::tensor_power(&f(), 3);
        let d = slot_derive(2, 1, &t).unwrap();
        assert_eq!(render_tensor(&d, &Names::default()), "f⊗f[1]⊗f");
        let fj = TensorPoly::tensor_of(&[DerivSymbol::new("f", &[2]), DerivSymbol::new("g", &[])], 2);
        let d = slot_derive(1, 1, &fj).unwrap();
        assert_eq!(render_tensor(&d, &Names::default()), "f[1,2]⊗g");
        let hh = TensorPoly::tensor_of(&[DerivSymbol::exp_linear("h"), DerivSymbol::exp_linear("h")], 2);
        let d = slot_derive(1, 3, &hh).unwrap();
        assert_eq!(render_tensor(&d, &Names::default()), "h·L[3]⊗h");
        assert!(slot_derive(3, 1, &hh).is_err());
    }

    #[test]
    fn hirota_d_basics() {
        let fg = TensorPoly::tensor_of(&[f(), DerivSymbol::new("g", &[])], 2);
        let d = hirota_d(1, &fg).unwrap();
        assert_eq!(render_tensor(&d, &Names::default()), "f[1]⊗g − f⊗g[1]");
        let ff = TensorPoly::tensor_power(&f(), 2);
        let s = to_rational(&symmetrize(&iterate_d(&[1, 2], &ff).unwrap())).unwrap();
        let mut names = Names::default();
        let (i, j) = (names.intern("i"), names.intern("j"));
        let s2 = to_rational(&symmetrize(&iterate_d(&[i, j], &ff).unwrap())).unwrap();
        assert_eq!(render_diffpoly(&s2, &names), "2*(f*f[i,j] - f[i]*f[j])");
        assert_eq!(s.len(), 2);
        assert_eq!(iterate_d(&[1, 2], &fg).unwrap(), iterate_d(&[2, 1], &fg).unwrap());
    }

    #[test]
    fn h_two_is_d() {
        let ff = TensorPoly::tensor_power(&f(), 2);
        assert_eq!(hirota_h(1, 2, &ff).unwrap(), hirota_d(1, &ff).unwrap());
    }

    #[test]
    fn hexample_nine_terms() {
        let t = TensorPoly::tensor_power(&f(), 3);
        let r = iterate_h(&[1, 2], 3, &t).unwrap();
        assert_eq!(r.len(), 9);
        assert_eq!(r, closed_form_h(&[1, 2], 3, &[f(), f(), f()]).unwrap());
        assert!(symmetrize(&r).is_zero());
        let one = hirota_h(1, 3, &t).unwrap();
        assert_eq!(render_tensor(&one, &Names::default()), "f[1]⊗f⊗f + ζ·f⊗f[1]⊗f + ζ^2·f⊗f⊗f[1]");
    }

    #[test]
    fn mixed_order_rejected() {
        let t = TensorPoly::tensor_power(&f(), 3);
        let h3 = hirota_h(1, 3, &t).unwrap();
        assert!(hirota_h(1, 2, &h3).is_err());
        let t4 = TensorPoly { slots: 3, order: 4, terms: t.terms.keys().map(|k| (k.clone(), Cyclo::one(4))).collect() };
        assert!(hirota_h(1, 3, &t4).is_err());
    }

    #[test]
    fn closed_sh_vanishing() {
        assert!(closed_form_sh(&[1, 2], 3, &f()).unwrap().is_zero());
        assert!(!closed_form_sh(&[1, 2, 3], 3, &f()).unwrap().is_zero());
        let direct = to_rational(&symmetrize(&iterate_h(&[1, 2, 3], 3, &TensorPoly::tensor_power(&f(), 3)).unwrap())).unwrap();
        assert_eq!(direct, closed_form_sh(&[1, 2, 3], 3, &f()).unwrap());
    }

    #[test]
    fn lattice_shift_small() {
        let s = DerivSymbol::new("sigma", &[]);
        let t = TensorPoly::tensor_of(&[s.clone(), DerivSymbol::new("sigma", &[1])], 2);
        let r = lattice_shift(&t, "sigma");
        assert_eq!(r.len(), 2);
        let p = RatDiffPoly::var(Factor::Sym(DerivSymbol::new("sigma", &[1])), q(1));
        let sh = lattice_shift_poly(&p, "sigma");
        let names = Names::default();
        assert_eq!(render_diffpoly(&sh, &names), "h*sigma*L[1] + h*sigma[1]");
    }
}
