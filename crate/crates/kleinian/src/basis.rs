//! Spaces `Γ(m)` of Abelian functions with poles of order at most `m` on the
//! Θ-divisor: evaluation of candidate functions as series, exact
//! independence tests, greedy basis construction and relation finding.
//!
//! Every function is handled through its numerator `f·σ^k`, a polynomial in
//! σ and its derivatives (with optional λ factors). Comparisons happen at a
//! common power `σ^M`. Series are either full multivariate expansions or
//! restrictions to rays `u_i = r_i τ^{w_i}`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::time::Instant;

use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::abelfun::{ppoly_weight, r_to_p, term_parity, wp, PPoly, PVar, RFunctionId};
use crate::curve::CurveModel;
use crate::error::{Error, Result};
use crate::hirota::{closed_form_sh, derive_slot, DerivSymbol, Factor, Label, RatDiffPoly};
use crate::linalg::{self, Echelon, Insert};
use crate::params::PVal;
use crate::rational::{fmt_q, q, Q};
use crate::sigma::{random_q, Mode, SigmaExpansion};
use crate::series::WSeries;

/// A candidate Abelian function.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FunctionSpec {
    One,
    R(RFunctionId),
    /// `∂_{by} base`, indices sorted.
    Deriv { base: Box<FunctionSpec>, by: Vec<Label> },
    /// A polynomial in ℘-functions and λ.
    Poly { name: String, poly: PPoly },
}

impl FunctionSpec {
    pub fn r(m: usize, indices: &[Label]) -> Result<Self> {
        Ok(FunctionSpec::R(RFunctionId::new(m, indices)?))
    }

    pub fn deriv(base: FunctionSpec, by: &[Label]) -> Self {
        match base {
            FunctionSpec::Deriv { base, by: inner } => {
                let mut v = inner;
                v.extend_from_slice(by);
                v.sort_unstable();
                FunctionSpec::Deriv { base, by: v }
            }
            b => {
                let mut v = by.to_vec();
                v.sort_unstable();
                FunctionSpec::Deriv { base: Box::new(b), by: v }
            }
        }
    }

    pub fn poly(name: &str, poly: PPoly) -> Self {
        FunctionSpec::Poly { name: name.into(), poly }
    }

    /// `℘₁₁℘₂₂ − ℘₁₂²`.
    pub fn delta() -> Self {
        let mut p = PPoly::zero();
        p.add_term(vec![(wp(&[1, 1]), 1), (wp(&[2, 2]), 1)], q(1));
        p.add_term(vec![(wp(&[1, 2]), 2)], q(-1));
        Self::poly("Delta", p)
    }

    /// Order of the pole on the Θ-divisor as written.
    pub fn pole_order(&self) -> usize {
        match self {
            FunctionSpec::One => 0,
            FunctionSpec::R(id) => id.m,
            FunctionSpec::Deriv { base, by } => match **base {
                FunctionSpec::One => 0,
                _ => base.pole_order() + by.len(),
            },
            FunctionSpec::Poly { poly, .. } => poly
                .terms
                .keys()
                .map(|m| m.iter().map(|(v, e)| if let PVar::P(ix) = v { ix.len() * *e as usize } else { 0 }).sum::<usize>())
                .max()
                .unwrap_or(0),
        }
    }

    /// Sato weight; `None` for inhomogeneous polynomials.
    pub fn weight(&self, c: &CurveModel) -> Option<i64> {
        let w = c.u_weights();
        let idx_w = |ix: &[Label]| -> i64 { ix.iter().map(|&i| w[i as usize - 1] as i64).sum() };
        match self {
            FunctionSpec::One => Some(0),
            FunctionSpec::R(id) => Some(id.weight(&w)),
            FunctionSpec::Deriv { base, by } => base.weight(c).map(|x| x - idx_w(by)),
            FunctionSpec::Poly { poly, .. } => ppoly_weight(poly, &w, c.n, c.s),
        }
    }

    /// Sign under `u ↦ −u`.
    pub fn parity(&self) -> Option<i32> {
        match self {
            FunctionSpec::One => Some(1),
            FunctionSpec::R(id) => Some(if id.n() % 2 == 0 { 1 } else { -1 }),
            FunctionSpec::Deriv { base, by } => base.parity().map(|p| if by.len() % 2 == 0 { p } else { -p }),
            FunctionSpec::Poly { poly, .. } => term_parity(poly),
        }
    }

    /// Row label in reports, e.g. `R2[1,3]` or `d[1]R2[2,2,2,2]`.
    pub fn family(&self) -> String {
        match self {
            FunctionSpec::One => "1".into(),
            FunctionSpec::R(id) => format!("R{} {}-index", id.m, id.n()),
            FunctionSpec::Deriv { base, by } => format!("d^{} {}", by.len(), base.family()),
            FunctionSpec::Poly { .. } => "polynomial".into(),
        }
    }

    fn check_indices(&self, g: usize) -> Result<()> {
        let ok = |ix: &[Label]| ix.iter().all(|&i| i >= 1 && i as usize <= g);
        let good = match self {
            FunctionSpec::One => true,
            FunctionSpec::R(id) => ok(&id.indices),
            FunctionSpec::Deriv { base, by } => {
                base.check_indices(g)?;
                ok(by)
            }
            FunctionSpec::Poly { poly, .. } => poly.terms.keys().all(|m| m.iter().all(|(v, _)| if let PVar::P(ix) = v { ok(ix) } else { true })),
        };
        if good {
            Ok(())
        } else {
            Err(Error::Invalid(format!("{self} uses an index outside 1..={g}")))
        }
    }

    /// Parses `1`, `R3[1,2,2]`, `Q[1,1,3,3]`, `p[1,2]`, `d[1]R2[2,2,2,2]`
    /// and `Delta`.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        let err = |msg: &str| Error::Parse { pos: 0, msg: format!("{msg} in {s:?}") };
        if t == "1" {
            return Ok(FunctionSpec::One);
        }
        if t.eq_ignore_ascii_case("delta") {
            return Ok(Self::delta());
        }
        let bracket = |body: &str| -> Result<(Vec<Label>, usize)> {
            let open = body.find('[').ok_or_else(|| err("expected '['"))?;
            let close = body.find(']').ok_or_else(|| err("expected ']'"))?;
            let ix = body[open + 1..close]
                .split(',')
                .filter(|x| !x.trim().is_empty())
                .map(|x| x.trim().parse::<Label>().map_err(|_| err("bad index")))
                .collect::<Result<Vec<_>>>()?;
            Ok((ix, close + 1))
        };
        if let Some(rest) = t.strip_prefix("d[") {
            let (by, end) = bracket(&t[1..])?;
            let _ = rest;
            let base = Self::parse(&t[1 + end..])?;
            return Ok(Self::deriv(base, &by));
        }
        if let Some(rest) = t.strip_prefix('R') {
            let open = rest.find('[').ok_or_else(|| err("expected '['"))?;
            let m: usize = rest[..open].parse().map_err(|_| err("bad order"))?;
            let (ix, end) = bracket(rest)?;
            if end != rest.len() {
                return Err(err("trailing input"));
            }
            return Self::r(m, &ix);
        }
        if t.starts_with("Q[") {
            let (ix, _) = bracket(t)?;
            return Self::r(2, &ix);
        }
        if t.starts_with("p[") {
            let (ix, _) = bracket(t)?;
            if ix.len() < 2 {
                return Err(err("℘ needs at least two indices"));
            }
            return Ok(Self::poly(t, PPoly::var(wp(&ix), q(1))));
        }
        Err(err("unknown function"))
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::One => write!(f, "1"),
            FunctionSpec::R(id) => write!(f, "{id}"),
            FunctionSpec::Deriv { base, by } => {
                let b: Vec<String> = by.iter().map(|i| i.to_string()).collect();
                write!(f, "d[{}]{}", b.join(","), base)
            }
            FunctionSpec::Poly { name, .. } => write!(f, "{name}"),
        }
    }
}

/// `f = Σ λ^β N_β / σ^pole` with `N_β` polynomials in σ-derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct Numerator {
    pub pole: usize,
    pub terms: BTreeMap<Vec<u16>, RatDiffPoly>,
}

fn sigma_factor(ix: &[Label]) -> RatDiffPoly {
    RatDiffPoly::term(vec![(Factor::Sym(DerivSymbol::new("sigma", ix)), 1)], q(1))
}

/// Symbolic `∂_i` of a polynomial in σ-derivatives.
pub fn diff_poly(p: &RatDiffPoly, i: Label) -> RatDiffPoly {
    let mut out = RatDiffPoly::zero();
    for (m, c) in &p.terms {
        for (slot, k) in derive_slot(m, i) {
            out.add_term(slot, c * q(k as i64));
        }
    }
    out
}

/// `σ^{|J|} ∂_J log σ` by `L_{I+j} = σ ∂_j L_I − |I| σ_j L_I`.
fn log_numerator(ix: &[Label], memo: &mut HashMap<Vec<Label>, RatDiffPoly>) -> RatDiffPoly {
    if let Some(x) = memo.get(ix) {
        return x.clone();
    }
    let r = if ix.len() == 1 {
        sigma_factor(ix)
    } else {
        let (head, j) = (&ix[..ix.len() - 1], ix[ix.len() - 1]);
        let l = log_numerator(head, memo);
        let s = sigma_factor(&[]);
        s.mul(&diff_poly(&l, j)).sub(&sigma_factor(&[j]).mul(&l).scale(&q(head.len() as i64)))
    };
    memo.insert(ix.to_vec(), r.clone());
    r
}

fn sigma_pow(k: usize) -> RatDiffPoly {
    RatDiffPoly::term(if k == 0 { vec![] } else { vec![(Factor::Sym(DerivSymbol::new("sigma", &[])), k as u32)] }, q(1))
}

/// Numerator of a ℘-polynomial with ℘_J = −L_J/σ^{|J|}.
pub fn poly_numerator(p: &PPoly, s: usize) -> Numerator {
    let mut memo = HashMap::new();
    let mut parts: Vec<(Vec<u16>, usize, RatDiffPoly)> = Vec::new();
    for (m, c) in &p.terms {
        let mut lam = vec![0u16; s];
        let mut num = RatDiffPoly::constant(c.clone());
        let mut pole = 0;
        for (v, e) in m {
            match v {
                PVar::Lambda(j) => lam[*j as usize] += *e as u16,
                PVar::P(ix) => {
                    let l = log_numerator(ix, &mut memo).scale(&q(-1));
                    for _ in 0..*e {
                        num = num.mul(&l);
                    }
                    pole += ix.len() * *e as usize;
                }
            }
        }
        parts.push((lam, pole, num));
    }
    let pole = parts.iter().map(|x| x.1).max().unwrap_or(0);
    let mut terms: BTreeMap<Vec<u16>, RatDiffPoly> = BTreeMap::new();
    for (lam, k, num) in parts {
        terms.entry(lam).or_default().add_assign(&num.mul(&sigma_pow(pole - k)));
    }
    terms.retain(|_, v| !v.is_zero());
    Numerator { pole, terms }
}

/// Numerator built from the operator definition (σ-derivative route).
pub fn numerator(spec: &FunctionSpec, s: usize) -> Result<Numerator> {
    let zero_lam = vec![0u16; s];
    Ok(match spec {
        FunctionSpec::One => Numerator { pole: 0, terms: BTreeMap::from([(zero_lam, RatDiffPoly::constant(q(1)))]) },
        FunctionSpec::R(id) => {
            let mut terms = BTreeMap::new();
            if id.is_nonzero() {
                let p = closed_form_sh(&id.indices, id.m, &DerivSymbol::new("sigma", &[]))?.scale(&(-Q::one() / q(id.m as i64)));
                terms.insert(zero_lam, p);
            }
            Numerator { pole: id.m, terms }
        }
        FunctionSpec::Deriv { base, by } => {
            let mut n = numerator(base, s)?;
            if n.pole == 0 {
                return Ok(Numerator { pole: 0, terms: BTreeMap::new() });
            }
            for &i in by {
                let k = q(n.pole as i64);
                let s0 = sigma_factor(&[]);
                let si = sigma_factor(&[i]);
                n.terms = n.terms.iter().map(|(l, p)| (l.clone(), s0.mul(&diff_poly(p, i)).sub(&si.mul(p).scale(&k)))).collect();
                n.terms.retain(|_, v| !v.is_zero());
                n.pole += 1;
            }
            n
        }
        FunctionSpec::Poly { poly, .. } => poly_numerator(poly, s),
    })
}

/// Numerator obtained through the ℘-expansion (independent route).
pub fn numerator_via_wp(spec: &FunctionSpec, s: usize) -> Result<Numerator> {
    match spec {
        FunctionSpec::R(id) => Ok(poly_numerator(&r_to_p(id).0, s)).map(|mut n| {
            n.pole = n.pole.max(id.m);
            n
        }),
        _ => numerator(spec, s),
    }
}

/// Where series are evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum Probe {
    Full,
    Ray(Vec<Q>),
}

/// Deterministic rays with nonzero rational coordinates.
pub fn random_rays(g: usize, count: usize, seed: u64) -> Vec<Vec<Q>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7a75_0000);
    (0..count).map(|_| (0..g).map(|_| random_q(&mut rng)).collect()).collect()
}

/// Caches σ-derivatives and their restrictions.
pub struct Evaluator<'a> {
    pub e: &'a SigmaExpansion,
    weights: Vec<usize>,
    full: HashMap<Vec<Label>, WSeries>,
    probed: HashMap<(usize, Vec<Label>), WSeries>,
    powers: HashMap<(usize, usize), WSeries>,
    probes: Vec<Probe>,
}

impl<'a> Evaluator<'a> {
    pub fn new(e: &'a SigmaExpansion, probes: Vec<Probe>) -> Self {
        Evaluator { e, weights: e.u_weights(), full: HashMap::new(), probed: HashMap::new(), powers: HashMap::new(), probes }
    }

    pub fn probes(&self) -> &[Probe] {
        &self.probes
    }

    fn full_deriv(&mut self, ix: &[Label]) -> WSeries {
        if let Some(x) = self.full.get(ix) {
            return x.clone();
        }
        let r = if ix.is_empty() {
            self.e.series()
        } else {
            self.full_deriv(&ix[..ix.len() - 1]).derive(ix[ix.len() - 1] as usize - 1)
        };
        self.full.insert(ix.to_vec(), r.clone());
        r
    }

    pub fn sigma_deriv(&mut self, probe: usize, ix: &[Label]) -> WSeries {
        let key = (probe, ix.to_vec());
        if let Some(x) = self.probed.get(&key) {
            return x.clone();
        }
        let f = self.full_deriv(ix);
        let r = match &self.probes[probe] {
            Probe::Full => f,
            Probe::Ray(r) => f.restrict_ray(r, &self.weights),
        };
        self.probed.insert(key, r.clone());
        r
    }

    fn sigma_power(&mut self, probe: usize, k: usize) -> WSeries {
        if let Some(x) = self.powers.get(&(probe, k)) {
            return x.clone();
        }
        let r = if k == 0 {
            let nv = if self.probes[probe] == Probe::Full { self.e.genus() } else { 1 };
            WSeries::one(self.e.space(), nv)
        } else {
            self.sigma_power(probe, k - 1).mul(&self.sigma_deriv(probe, &[]))
        };
        self.powers.insert((probe, k), r.clone());
        r
    }

    pub fn eval_poly(&mut self, probe: usize, p: &RatDiffPoly) -> WSeries {
        let nv = if self.probes[probe] == Probe::Full { self.e.genus() } else { 1 };
        let mut out = WSeries::zero(self.e.space(), nv);
        for (m, c) in &p.terms {
            let mut t = WSeries::one(self.e.space(), nv).scale(c);
            for (f, k) in m {
                let Factor::Sym(sym) = f else { continue };
                let s = self.sigma_deriv(probe, &sym.derivs);
                for _ in 0..*k {
                    t = t.mul(&s);
                }
            }
            out.add_assign(&t);
        }
        out
    }

    /// `f · σ^M` at a probe.
    pub fn numerator_series(&mut self, num: &Numerator, big_m: usize, probe: usize) -> Result<WSeries> {
        if num.pole > big_m {
            return Err(Error::Invalid(format!("pole order {} exceeds common order {big_m}", num.pole)));
        }
        let nv = if self.probes[probe] == Probe::Full { self.e.genus() } else { 1 };
        let mut out = WSeries::zero(self.e.space(), nv);
        for (lam, p) in &num.terms {
            let mut s = self.eval_poly(probe, p);
            if lam.iter().any(|&k| k > 0) {
                s = s.mul_pval(&self.e.emb.lambda_mono(lam, &Q::one()));
            }
            out.add_assign(&s);
        }
        Ok(out.mul(&self.sigma_power(probe, big_m - num.pole)))
    }
}

/// `f · σ^M` as a full multivariate series.
pub fn evaluate_function(spec: &FunctionSpec, e: &SigmaExpansion, big_m: usize) -> Result<WSeries> {
    spec.check_indices(e.genus())?;
    let num = numerator(spec, e.curve.s)?;
    Evaluator::new(e, vec![Probe::Full]).numerator_series(&num, big_m, 0)
}

/// Coordinates of numerators on rays at `λ` specialized to the expansion's
/// values, restricted to exponents where truncation cannot interfere.
struct RayVectors<'a> {
    ev: Evaluator<'a>,
    big_m: usize,
    cutoff: i64,
}

impl<'a> RayVectors<'a> {
    fn new(e: &'a SigmaExpansion, big_m: usize, min_weight: i64, rays: usize, seed: u64) -> Self {
        let probes = random_rays(e.genus(), rays, seed).into_iter().map(Probe::Ray).collect();
        let wmin = (big_m * e.wt_sigma) as i64 + min_weight;
        let top = (big_m * e.wt_sigma) as i64 + e.depth as i64;
        let cutoff = (wmin + e.exact_below().min(1 << 20) as i64 - 1).min(top);
        RayVectors { ev: Evaluator::new(e, probes), big_m, cutoff }
    }

    fn vector(&mut self, spec: &FunctionSpec) -> Result<Vec<Q>> {
        let num = numerator(spec, self.ev.e.curve.s)?;
        let width = (self.cutoff + 1).max(0) as usize;
        let mut out = vec![Q::zero(); width * self.ev.probes().len()];
        for r in 0..self.ev.probes().len() {
            let s = self.ev.numerator_series(&num, self.big_m, r)?;
            for (e, v) in s.collapse(&[1], self.cutoff) {
                out[r * width + e[0] as usize] = v;
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct IndependenceOptions {
    pub rays: usize,
    pub seed: u64,
}

impl Default for IndependenceOptions {
    fn default() -> Self {
        IndependenceOptions { rays: 8, seed: 11 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceResult {
    pub rank: usize,
    /// For the first dependent entry: its index and coefficients over the
    /// independent entries before it.
    pub dependency: Option<(usize, Vec<Q>)>,
}

/// Exact rank of the numerators at a common pole order, evaluated on rays
/// at the expansion's specialization.
pub fn independence_check(specs: &[FunctionSpec], e: &SigmaExpansion, opts: &IndependenceOptions) -> Result<IndependenceResult> {
    for s in specs {
        s.check_indices(e.genus())?;
    }
    let big_m = specs.iter().map(|s| s.pole_order()).max().unwrap_or(0);
    let min_w = specs.iter().map(|s| s.weight(&e.curve).unwrap_or(0)).min().unwrap_or(0);
    let mut rv = RayVectors::new(e, big_m, min_w, opts.rays, opts.seed);
    let mut ech = Echelon::default();
    let mut dependency = None;
    for (k, s) in specs.iter().enumerate() {
        let v = rv.vector(s)?;
        if let Insert::Dependent(c) = ech.insert(&v) {
            if dependency.is_none() {
                dependency = Some((k, c));
            }
        }
    }
    Ok(IndependenceResult { rank: ech.rank(), dependency })
}

#[derive(Clone, Debug)]
pub struct BasisOptions {
    pub rays: usize,
    pub seed: u64,
}

impl Default for BasisOptions {
    fn default() -> Self {
        BasisOptions { rays: 12, seed: 11 }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BasisEntry {
    pub function: String,
    pub weight: i64,
    pub parity: i32,
    pub family: String,
    /// Candidates of equal weight that would also have been accepted here.
    pub alternatives: Vec<String>,
    #[serde(skip)]
    pub spec: FunctionSpec,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BasisReport {
    pub n: usize,
    pub s: usize,
    pub pole_order: usize,
    pub target: usize,
    pub entries: Vec<BasisEntry>,
    pub rank: usize,
    pub complete: bool,
    pub deficit: usize,
    pub rejected: Vec<String>,
    pub depth: u32,
    pub rays: usize,
    pub seed: u64,
    pub even: usize,
    pub odd: usize,
    /// Set by [`build_basis_auto`] when an independent replay agreed.
    pub verified: bool,
}

impl BasisReport {
    pub fn specs(&self) -> Vec<FunctionSpec> {
        self.entries.iter().map(|e| e.spec.clone()).collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.function.clone()).collect()
    }

    /// Entry counts per family.
    pub fn family_counts(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            *out.entry(e.family.clone()).or_insert(0) += 1;
        }
        out
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "Γ({}) for the ({},{})-curve: {} of {} entries{}\n",
            self.pole_order,
            self.n,
            self.s,
            self.entries.len(),
            self.target,
            if self.complete { "" } else { " (incomplete)" }
        );
        s.push_str(&format!("{:>4}  {:<22} {:>7}  {:<6} {}\n", "#", "function", "weight", "parity", "alternatives"));
        for (i, e) in self.entries.iter().enumerate() {
            s.push_str(&format!(
                "{:>4}  {:<22} {:>7}  {:<6} {}\n",
                i + 1,
                e.function,
                e.weight,
                if e.parity > 0 { "even" } else { "odd" },
                e.alternatives.join(", ")
            ));
        }
        s.push_str(&format!("even {} odd {}\n", self.even, self.odd));
        s
    }
}

fn multisets(g: usize, k: usize) -> Vec<Vec<Label>> {
    fn rec(start: usize, g: usize, k: usize, cur: &mut Vec<Label>, out: &mut Vec<Vec<Label>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=g {
            cur.push(i as Label);
            rec(i, g, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, g, k, &mut Vec::new(), &mut out);
    out
}

/// Candidate `R^[m]` functions with `m` or `2m` indices, ordered by
/// increasing `|weight|`; ties go to the index multiset that is smaller
/// when written in decreasing order.
pub fn r_candidates(c: &CurveModel, m: usize, floor: i64) -> Vec<FunctionSpec> {
    let g = c.genus();
    let mut out: Vec<(i64, Vec<Label>, FunctionSpec)> = Vec::new();
    for k in [m, 2 * m] {
        for ix in multisets(g, k) {
            let spec = FunctionSpec::r(m, &ix).expect("m >= 2");
            let w = spec.weight(c).unwrap();
            if w < floor {
                continue;
            }
            let mut key = ix.clone();
            key.reverse();
            out.push((-w, key, spec));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    out.into_iter().map(|x| x.2).collect()
}

/// Greedy construction of a basis for `Γ(m)`: the `Γ(m−1)` basis, then
/// `R^[m]` candidates, then first derivatives of the `Γ(m−1)` entries.
pub fn build_basis(c: &CurveModel, m: usize, e: &SigmaExpansion, opts: &BasisOptions) -> Result<BasisReport> {
    if m == 0 {
        return Err(Error::Invalid("pole order must be at least 1".into()));
    }
    let g = c.genus();
    let target = m.pow(g as u32);
    let floor = -((m * e.wt_sigma) as i64);
    let seed_specs: Vec<FunctionSpec> = if m == 1 {
        vec![FunctionSpec::One]
    } else {
        let prev = build_basis(c, m - 1, e, opts)?;
        if !prev.complete {
            return Err(Error::DepthInsufficient { have: e.depth as usize, need: e.depth as usize + c.n });
        }
        prev.specs()
    };
    let mut candidates: Vec<FunctionSpec> = seed_specs.clone();
    if m >= 2 {
        candidates.extend(r_candidates(c, m, floor));
        for b in &seed_specs {
            if *b == FunctionSpec::One {
                continue;
            }
            for i in 1..=g {
                let d = FunctionSpec::deriv(b.clone(), &[i as Label]);
                if d.weight(c).unwrap_or(i64::MIN) >= floor {
                    candidates.push(d);
                }
            }
        }
    }
    let mut rv = RayVectors::new(e, m, floor, opts.rays, opts.seed);
    let mut vectors: Vec<Option<Vec<Q>>> = vec![None; candidates.len()];
    let mut ech = Echelon::default();
    let mut entries: Vec<BasisEntry> = Vec::new();
    let mut rejected = Vec::new();
    for k in 0..candidates.len() {
        if entries.len() == target {
            break;
        }
        let spec = candidates[k].clone();
        if vectors[k].is_none() {
            vectors[k] = Some(rv.vector(&spec)?);
        }
        let v = vectors[k].clone().unwrap();
        let before = ech.clone();
        match ech.insert(&v) {
            Insert::Dependent(_) => rejected.push(spec.to_string()),
            Insert::Independent => {
                let w = spec.weight(c).unwrap();
                let mut alternatives = Vec::new();
                for j in k + 1..candidates.len() {
                    if candidates[j].weight(c) != Some(w) || k < seed_specs.len() {
                        continue;
                    }
                    if vectors[j].is_none() {
                        vectors[j] = Some(rv.vector(&candidates[j])?);
                    }
                    let mut probe = before.clone();
                    if let Insert::Independent = probe.insert(vectors[j].as_ref().unwrap()) {
                        alternatives.push(candidates[j].to_string());
                    }
                }
                entries.push(BasisEntry {
                    function: spec.to_string(),
                    weight: w,
                    parity: spec.parity().unwrap_or(1),
                    family: spec.family(),
                    alternatives,
                    spec,
                });
            }
        }
    }
    let chosen: BTreeSet<String> = entries.iter().map(|e| e.function.clone()).collect();
    for e in &mut entries {
        e.alternatives.retain(|a| !chosen.contains(a));
    }
    let even = entries.iter().filter(|e| e.parity > 0).count();
    Ok(BasisReport {
        n: c.n,
        s: c.s,
        pole_order: m,
        target,
        rank: ech.rank(),
        complete: entries.len() == target,
        deficit: target - entries.len(),
        odd: entries.len() - even,
        even,
        entries,
        rejected,
        depth: e.depth,
        rays: opts.rays,
        seed: opts.seed,
        verified: false,
    })
}

#[derive(Clone, Debug)]
pub struct AutoOptions {
    pub start_depth: u32,
    pub max_depth: u32,
    /// Seed of the primary λ-specialization; the replay uses `seed + 1`.
    pub seed: u64,
    /// Extra depth for the replay.
    pub margin: u32,
    pub budget_secs: Option<u64>,
    pub basis: BasisOptions,
}

impl AutoOptions {
    pub fn new(c: &CurveModel, m: usize) -> Self {
        let w = (m * crate::curve::sigma_weight(c).unwrap_or(1)) as u32;
        let start = w.div_ceil(c.n as u32).max(2) * c.n as u32;
        AutoOptions { start_depth: start, max_depth: start + 8 * c.n as u32, seed: 7, margin: 2 * c.n as u32, budget_secs: None, basis: BasisOptions::default() }
    }
}

/// One step of [`build_basis_auto`].
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct AutoStep {
    pub depth: u32,
    pub entries: usize,
    pub note: String,
}

/// Builds `Γ(m)` from specialized expansions supplied by `expansion(depth,
/// seed)`, raising the depth until the basis is complete, then replays the
/// greedy run at a second specialization and a deeper truncation. The
/// report is marked verified when both runs choose the same entries.
pub fn build_basis_auto(
    c: &CurveModel,
    m: usize,
    opts: &AutoOptions,
    mut expansion: impl FnMut(u32, u64) -> Result<SigmaExpansion>,
) -> Result<(BasisReport, Vec<AutoStep>)> {
    let start = Instant::now();
    let over = |t: &Instant| opts.budget_secs.is_some_and(|b| t.elapsed().as_secs() > b);
    let step = c.n as u32;
    let mut depth = opts.start_depth;
    let mut log = Vec::new();
    loop {
        let e = expansion(depth, opts.seed)?;
        let rep = match build_basis(c, m, &e, &opts.basis) {
            Ok(r) => r,
            Err(Error::DepthInsufficient { .. }) => {
                log.push(AutoStep { depth, entries: 0, note: "lower pole order incomplete".into() });
                if depth + step > opts.max_depth {
                    return Err(Error::DepthInsufficient { have: depth as usize, need: (depth + step) as usize });
                }
                depth += step;
                continue;
            }
            Err(x) => return Err(x),
        };
        if !rep.complete {
            log.push(AutoStep { depth, entries: rep.entries.len(), note: format!("deficit {}", rep.deficit) });
            if depth + step > opts.max_depth || over(&start) {
                return Ok((rep, log));
            }
            depth += step;
            continue;
        }
        log.push(AutoStep { depth, entries: rep.entries.len(), note: "complete".into() });
        if over(&start) {
            return Err(Error::Budget(opts.budget_secs.unwrap_or(0)));
        }
        let check_depth = depth + opts.margin;
        let e2 = expansion(check_depth, opts.seed + 1)?;
        let replay = build_basis(c, m, &e2, &opts.basis)?;
        let same = replay.names() == rep.names();
        log.push(AutoStep {
            depth: check_depth,
            entries: replay.entries.len(),
            note: if same { "replay agrees".into() } else { "replay differs".into() },
        });
        if same || check_depth + step > opts.max_depth {
            let mut rep = rep;
            rep.verified = same;
            return Ok((rep, log));
        }
        depth += step;
    }
}

#[derive(Clone, Debug)]
pub struct RelationOptions {
    pub rays: usize,
    pub seed: u64,
}

impl Default for RelationOptions {
    fn default() -> Self {
        RelationOptions { rays: 4, seed: 23 }
    }
}

/// `target = Σ coefficient_b(λ) · basis_b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Relation {
    pub target: FunctionSpec,
    pub terms: Vec<(FunctionSpec, PPoly)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RelationOutcome {
    Found(Relation),
    /// No relation with the given ansatz; the witness names a failing
    /// coefficient.
    Independent { witness: String },
}

fn lambda_monos(c: &CurveModel, weight: i64) -> Vec<Vec<u16>> {
    let mut out = Vec::new();
    if weight < 0 {
        return out;
    }
    fn rec(c: &CurveModel, j: usize, rem: i64, cur: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
        if j == c.s {
            if rem == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let w = c.lambda_weight(j) as i64;
        for k in 0..=rem / w {
            cur.push(k as u16);
            rec(c, j + 1, rem - k * w, cur, out);
            cur.pop();
        }
    }
    rec(c, 0, weight, &mut Vec::new(), &mut out);
    out
}

fn lambda_ppoly(e: &[u16], coef: Q) -> PPoly {
    let m: Vec<(PVar, u32)> = e.iter().enumerate().filter(|(_, &k)| k > 0).map(|(j, &k)| (PVar::Lambda(j as u16), k as u32)).collect();
    PPoly::term(m, coef)
}

fn series_rows(cols: &[WSeries], target: &WSeries, key_of: impl Fn(&Vec<u32>, usize) -> String) -> (Vec<Vec<Q>>, Vec<String>) {
    let mut keys: BTreeSet<(Vec<u32>, usize)> = BTreeSet::new();
    for s in cols.iter().chain(std::iter::once(target)) {
        for (e, v) in &s.terms {
            for (k, x) in v.0.iter().enumerate() {
                if !x.is_zero() {
                    keys.insert((e.clone(), k));
                }
            }
        }
    }
    let get = |s: &WSeries, e: &Vec<u32>, k: usize| -> Q { s.terms.get(e).map(|v| v.0[k].clone()).unwrap_or_else(Q::zero) };
    let mut rows = Vec::new();
    let mut names = Vec::new();
    for (e, k) in &keys {
        let mut row: Vec<Q> = cols.iter().map(|c| get(c, e, *k)).collect();
        row.push(get(target, e, *k));
        rows.push(row);
        names.push(key_of(e, *k));
    }
    (rows, names)
}

/// Expresses `target` through `basis` with λ-polynomial coefficients of
/// matching weight. Requires a symbolic expansion.
pub fn find_relation(target: &FunctionSpec, basis: &[FunctionSpec], e: &SigmaExpansion, opts: &RelationOptions) -> Result<RelationOutcome> {
    if e.mode != Mode::Symbolic {
        return Err(Error::Invalid("relation finding needs a symbolic expansion".into()));
    }
    let c = &e.curve;
    target.check_indices(c.genus())?;
    let wt = target.weight(c).ok_or_else(|| Error::Invalid(format!("{target} is not weight-homogeneous")))?;
    let big_m = basis.iter().chain(std::iter::once(target)).map(|s| s.pole_order()).max().unwrap_or(0);
    let mut unknowns: Vec<(usize, Vec<u16>)> = Vec::new();
    for (b, spec) in basis.iter().enumerate() {
        spec.check_indices(c.genus())?;
        let wb = spec.weight(c).ok_or_else(|| Error::Invalid(format!("{spec} is not weight-homogeneous")))?;
        for beta in lambda_monos(c, wb - wt) {
            unknowns.push((b, beta));
        }
    }
    let probes: Vec<Probe> = random_rays(c.genus(), opts.rays, opts.seed).into_iter().map(Probe::Ray).collect();
    let nprobes = probes.len();
    let mut ev = Evaluator::new(e, probes);
    let nums: Vec<Numerator> = basis.iter().map(|b| numerator(b, c.s)).collect::<Result<_>>()?;
    let tnum = numerator(target, c.s)?;
    let mut rows: Vec<Vec<Q>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for p in 0..nprobes {
        let mut base: Vec<WSeries> = Vec::new();
        for n in &nums {
            base.push(ev.numerator_series(n, big_m, p)?);
        }
        let cols: Vec<WSeries> = unknowns.iter().map(|(b, beta)| base[*b].mul_pval(&e.emb.lambda_mono(beta, &Q::one()))).collect();
        let t = ev.numerator_series(&tnum, big_m, p)?;
        let sp = e.space().clone();
        let (r, nm) = series_rows(&cols, &t, |ex, k| format!("ray {p}, τ^{}, λ^{:?}", ex[0], sp.mono(k)));
        rows.extend(r);
        names.extend(nm);
    }
    let nu = unknowns.len();
    if rows.is_empty() {
        return Ok(RelationOutcome::Found(Relation { target: target.clone(), terms: Vec::new() }));
    }
    let sol = linalg::solve(rows.clone(), nu);
    if sol.inconsistent {
        let x = &sol.x[0];
        let witness = rows
            .iter()
            .zip(&names)
            .find(|(r, _)| r[..nu].iter().zip(x).fold(Q::zero(), |a, (p, q)| a + p * q) != r[nu])
            .map(|(_, n)| n.clone())
            .unwrap_or_default();
        return Ok(RelationOutcome::Independent { witness });
    }
    if sol.rank < nu {
        return Err(Error::DepthInsufficient { have: e.depth as usize, need: e.depth as usize + 2 * c.n });
    }
    let mut terms: Vec<(FunctionSpec, PPoly)> = basis.iter().map(|b| (b.clone(), PPoly::zero())).collect();
    for ((b, beta), x) in unknowns.iter().zip(&sol.x[0]) {
        if !x.is_zero() {
            terms[*b].1.add_assign(&lambda_ppoly(beta, x.clone()));
        }
    }
    terms.retain(|(_, p)| !p.is_zero());
    Ok(RelationOutcome::Found(Relation { target: target.clone(), terms }))
}

/// Substitutes the relation into another expansion (typically specialized
/// and deeper) and checks that it holds exactly, on rays and, when
/// `full` is set, as a multivariate series.
pub fn verify_relation(rel: &Relation, e: &SigmaExpansion, rays: usize, seed: u64, full: bool) -> Result<bool> {
    let c = &e.curve;
    let big_m = rel.terms.iter().map(|(b, _)| b.pole_order()).chain(std::iter::once(rel.target.pole_order())).max().unwrap_or(0);
    let mut probes: Vec<Probe> = random_rays(c.genus(), rays, seed).into_iter().map(Probe::Ray).collect();
    if full {
        probes.push(Probe::Full);
    }
    let np = probes.len();
    let mut ev = Evaluator::new(e, probes);
    let tnum = numerator(&rel.target, c.s)?;
    for p in 0..np {
        let mut acc = ev.numerator_series(&tnum, big_m, p)?;
        for (b, coef) in &rel.terms {
            let n = numerator(b, c.s)?;
            let s = ev.numerator_series(&n, big_m, p)?;
            let mut cv: PVal = e.space().zero();
            for (m, x) in &coef.terms {
                let mut lam = vec![0u16; c.s];
                for (v, k) in m {
                    if let PVar::Lambda(j) = v {
                        lam[*j as usize] += *k as u16;
                    }
                }
                cv.add_assign(&e.emb.lambda_mono(&lam, x));
            }
            acc.sub_assign(&s.mul_pval(&cv));
        }
        if !acc.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Renders `target = Σ coef · f` with ASCII or unicode λ.
pub fn render_relation(rel: &Relation, unicode: bool) -> String {
    let names = crate::hirota::Names::default();
    let mut parts: Vec<String> = Vec::new();
    for (b, p) in &rel.terms {
        for (m, x) in &p.terms {
            let lam = crate::abelfun::render_ppoly(&PPoly::term(m.clone(), q(1)), &names, unicode);
            let mut body = String::new();
            if m.is_empty() && *b == FunctionSpec::One {
                body.push_str(&fmt_q(&num_traits::Signed::abs(x)));
            } else {
                let a = num_traits::Signed::abs(x);
                if !a.is_one() {
                    body.push_str(&fmt_q(&a));
                    body.push('*');
                }
                if !m.is_empty() {
                    body.push_str(&lam);
                    if *b != FunctionSpec::One {
                        body.push('*');
                    }
                }
                if *b != FunctionSpec::One {
                    body.push_str(&b.to_string());
                }
            }
            let neg = num_traits::Signed::is_negative(x);
            parts.push(if parts.is_empty() { if neg { format!("-{body}") } else { body } } else if neg { format!(" - {body}") } else { format!(" + {body}") });
        }
    }
    if parts.is_empty() {
        parts.push("0".into());
    }
    format!("{} = {}", rel.target, parts.concat())
}

/// Coefficient of `basis_b · λ^β` in a relation.
pub fn relation_coefficient(rel: &Relation, b: &FunctionSpec, lam: &[(u16, u32)]) -> Q {
    let m: Vec<(PVar, u32)> = lam.iter().map(|&(j, k)| (PVar::Lambda(j), k)).collect();
    rel.terms.iter().find(|(x, _)| x == b).and_then(|(_, p)| p.terms.get(&m).cloned()).unwrap_or_else(Q::zero)
}

/// Runtime in milliseconds since `t`.
pub fn elapsed_ms(t: &Instant) -> u128 {
    t.elapsed().as_millis()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigma::{random_specialization, solve_expansion, solve_with, SolveOptions};

    #[test]
    fn parse_and_display() {
        for s in ["1", "R2[1,1]", "R3[1,2,2,2,2,2]", "d[1]R2[2,2,2,2]", "Delta"] {
            assert_eq!(FunctionSpec::parse(s).unwrap().to_string(), s);
        }
        assert_eq!(FunctionSpec::parse("Q[3,1,1,3]").unwrap().to_string(), "R2[1,1,3,3]");
        assert!(FunctionSpec::parse("R2[1,").is_err());
    }

    #[test]
    fn routes_agree() {
        let c = CurveModel::cyclic(2, 5).unwrap();
        let e = solve_expansion(&c, 8).unwrap();
        for spec in [FunctionSpec::r(2, &[1, 2]).unwrap(), FunctionSpec::r(2, &[1, 1, 2, 2]).unwrap(), FunctionSpec::r(3, &[1, 2, 2]).unwrap()] {
            let (na, nb) = (numerator(&spec, 5).unwrap(), numerator_via_wp(&spec, 5).unwrap());
            let m = na.pole.max(nb.pole);
            let a = Evaluator::new(&e, vec![Probe::Full]).numerator_series(&na, m, 0).unwrap();
            let b = Evaluator::new(&e, vec![Probe::Full]).numerator_series(&nb, m, 0).unwrap();
            assert_eq!(a, b, "{spec}");
        }
        let q12 = evaluate_function(&FunctionSpec::r(2, &[1, 2]).unwrap(), &e, 2).unwrap();
        let s = e.series();
        let direct = s.derive(0).mul(&s.derive(1)).sub(&s.mul(&s.derive(0).derive(1)));
        assert_eq!(q12, direct);
    }

    #[test]
    fn genus2_gamma2() {
        let c = CurveModel::cyclic(2, 5).unwrap();
        let e = solve_with(&c, &SolveOptions::new(12, Mode::Specialized(random_specialization(5, 3)))).unwrap();
        let specs: Vec<FunctionSpec> = ["1", "R2[1,1]", "R2[1,2]", "R2[2,2]"].iter().map(|s| FunctionSpec::parse(s).unwrap()).collect();
        assert_eq!(independence_check(&specs, &e, &Default::default()).unwrap().rank, 4);
        let mut dup = specs.clone();
        dup.push(specs[2].clone());
        let r = independence_check(&dup, &e, &Default::default()).unwrap();
        assert_eq!(r.rank, 4);
        assert_eq!(r.dependency.unwrap().0, 4);
        let rep = build_basis(&c, 2, &e, &Default::default()).unwrap();
        assert!(rep.complete);
        assert_eq!(rep.names(), vec!["1", "R2[2,2]", "R2[1,2]", "R2[1,1]"]);
        let one = build_basis(&c, 1, &e, &Default::default()).unwrap();
        assert_eq!(one.names(), vec!["1"]);
        let (auto, log) = build_basis_auto(&c, 2, &AutoOptions::new(&c, 2), |d, seed| {
            solve_with(&c, &SolveOptions::new(d, Mode::Specialized(random_specialization(5, seed))))
        })
        .unwrap();
        assert!(auto.verified, "{log:?}");
        assert_eq!(auto.names(), rep.names());
    }

    fn found(target: &str, basis: &[&str], e: &SigmaExpansion) -> Relation {
        let b: Vec<FunctionSpec> = basis.iter().map(|s| FunctionSpec::parse(s).unwrap()).collect();
        match find_relation(&FunctionSpec::parse(target).unwrap(), &b, e, &Default::default()).unwrap() {
            RelationOutcome::Found(r) => r,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn classical_genus2_relations() {
        let c = CurveModel::cyclic(2, 5).unwrap();
        let e = solve_expansion(&c, 10).unwrap();
        let r = found("R2[2,2,2,2]", &["1", "R2[1,2]", "R2[2,2]"], &e);
        assert_eq!(render_relation(&r, false), "R2[2,2,2,2] = 2*lambda[3] + 4*R2[1,2] + 4*lambda[4]*R2[2,2]");
        let r = found("R2[1,2,2,2]", &["1", "R2[1,1]", "R2[1,2]", "R2[2,2]"], &e);
        assert_eq!(render_relation(&r, false), "R2[1,2,2,2] = -2*R2[1,1] + 4*lambda[4]*R2[1,2]");
    }

    #[test]
    fn delta_relation() {
        let c = CurveModel::cyclic(2, 5).unwrap();
        let e = solve_expansion(&c, 12).unwrap();
        let r = found("Delta", &["1", "R2[1,1]", "R2[1,2]", "R2[2,2]", "R3[1,2,2,2,2,2]"], &e);
        assert_eq!(
            render_relation(&r, false),
            "Delta = 9/5*lambda[1] + 2/5*lambda[4]*R2[1,1] + 7/5*lambda[3]*R2[1,2] - 4/5*lambda[4]^2*R2[1,2] + 1/20*R3[1,2,2,2,2,2]"
        );
        let check = solve_with(&c, &SolveOptions::new(18, Mode::Specialized(random_specialization(5, 4)))).unwrap();
        assert!(verify_relation(&r, &check, 2, 1, true).unwrap());
        let mut wrong = r.clone();
        wrong.terms[0].1 = wrong.terms[0].1.scale(&q(-1));
        assert!(!verify_relation(&wrong, &check, 2, 1, false).unwrap());
    }

    #[test]
    fn unit_relation() {
        let c = CurveModel::cyclic(2, 5).unwrap();
        let e = solve_expansion(&c, 8).unwrap();
        let basis: Vec<FunctionSpec> = ["1", "R2[2,2]", "R2[1,2]"].iter().map(|s| FunctionSpec::parse(s).unwrap()).collect();
        match find_relation(&basis[2], &basis, &e, &Default::default()).unwrap() {
            RelationOutcome::Found(r) => {
                assert_eq!(r.terms, vec![(basis[2].clone(), PPoly::constant(q(1)))]);
            }
            other => panic!("{other:?}"),
        }
    }
}
