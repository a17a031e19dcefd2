//! Weight-graded expansion of the multivariate σ-function of a cyclic
//! `(n,s)`-curve.
//!
//! Level 0 is the Schur–Weierstrass polynomial. Each further level `d`
//! (a multiple of `n`) adds terms `u^α · c_α(λ)` with `wt(u^α) = wt(σ) + d`
//! and `c_α` of λ-weight `d`. The coefficients are fixed by two families of
//! exact linear conditions evaluated at random rational points near
//! infinity:
//!
//! * vanishing on the stratum: `σ(u(P_1) + … + u(P_{g−1})) = 0`;
//! * Klein's formula for the fundamental bidifferential,
//!   `(x_P − x_Q)² Σ ℘_{ij}(v) h_i(P) h_j(Q) = F(P,Q)` with
//!   `v = u(P) − u(Q) + u(P_1) + … + u(P_{g−1})`, multiplied through by `σ(v)²`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::time::Instant;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::abelfun::{PPoly, PVar};
use crate::curve::{hol_value, sigma_weight, CurveModel, Embedding, Lambdas, LocalData, Point};
use crate::error::{Error, Result};
use crate::klein::{klein_polynomial, KleinForm};
use crate::linalg;
use crate::params::{PVal, Space};
use crate::poly::Poly;
use crate::rational::{fmt_q, parse_q, q, qf, qpow, Q};
use crate::series::{exp_weight, WSeries};

pub const FORMAT_VERSION: u32 = 1;

/// Bound on numerators and denominators of sampled local parameters.
const POINT_HEIGHT: i64 = 3;

/// Treatment of the curve parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Mode {
    Symbolic,
    /// `λ_j = a_j t^{s−j}`.
    Specialized(Vec<Q>),
    /// All `λ_j = 0`.
    Zero,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Symbolic => "symbolic",
            Mode::Specialized(_) => "specialized",
            Mode::Zero => "zero",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub depth: u32,
    pub mode: Mode,
    pub seed: u64,
    /// Extra rows per constraint family beyond the number of unknowns.
    pub margin: usize,
    pub budget_secs: Option<u64>,
}

impl SolveOptions {
    pub fn new(depth: u32, mode: Mode) -> Self {
        SolveOptions { depth, mode, seed: 1, margin: 4, budget_secs: None }
    }
}

/// Deterministic rational values for `a_j`.
pub fn random_specialization(s: usize, seed: u64) -> Vec<Q> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5bec);
    (0..s).map(|_| random_q(&mut rng)).collect()
}

pub(crate) fn random_q(rng: &mut ChaCha8Rng) -> Q {
    random_q_height(rng, 9)
}

pub(crate) fn random_q_height(rng: &mut ChaCha8Rng, h: i64) -> Q {
    let p: i64 = rng.gen_range(1..=h);
    let d: i64 = rng.gen_range(1..=h);
    let sgn = if rng.gen_bool(0.5) { 1 } else { -1 };
    qf(sgn * p, d)
}

#[derive(Clone, Debug)]
pub struct SigmaExpansion {
    pub curve: CurveModel,
    pub wt_sigma: usize,
    pub depth: u32,
    pub mode: Mode,
    pub seed: u64,
    pub emb: Embedding,
    pub terms: BTreeMap<Vec<u32>, PVal>,
}

/// A solved term in readable form.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub u_exp: Vec<u32>,
    pub lambda_exp: Vec<u16>,
    pub coeff: Q,
}

pub fn embedding_for(c: &CurveModel, mode: &Mode, depth: u32) -> Embedding {
    match mode {
        Mode::Symbolic => Embedding::new(c, Lambdas::Symbolic, depth),
        Mode::Specialized(a) => Embedding::new(c, Lambdas::Specialized(a.clone()), depth),
        Mode::Zero => Embedding::new(c, Lambdas::Specialized(vec![Q::zero(); c.s]), 0),
    }
}

impl SigmaExpansion {
    pub fn space(&self) -> &Space {
        &self.emb.space
    }

    pub fn genus(&self) -> usize {
        self.curve.genus()
    }

    pub fn u_weights(&self) -> Vec<usize> {
        self.curve.u_weights()
    }

    /// The expansion as a series in `u`.
    pub fn series(&self) -> WSeries {
        let mut s = WSeries::zero(self.space(), self.genus());
        for (e, v) in &self.terms {
            s.add_term(e.clone(), v);
        }
        s
    }

    /// Exclusive bound on the λ-weight through which the expansion is exact.
    pub fn exact_below(&self) -> u32 {
        if self.mode == Mode::Zero {
            return u32::MAX;
        }
        let n = self.curve.n as u32;
        (self.depth / n + 1) * n
    }

    /// Terms in canonical order: λ-weight, then u-exponent, then λ-exponent.
    pub fn term_list(&self) -> Vec<Term> {
        let sp = self.space();
        let mut out = Vec::new();
        for (e, v) in &self.terms {
            for (k, c) in v.0.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let lambda_exp = match self.mode {
                    Mode::Symbolic => sp.mono(k).to_vec(),
                    _ => Vec::new(),
                };
                out.push((sp.mono_weight(k), Term { u_exp: e.clone(), lambda_exp, coeff: c.clone() }));
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.u_exp.cmp(&b.1.u_exp)).then(a.1.lambda_exp.cmp(&b.1.lambda_exp)));
        out.into_iter().map(|x| x.1).collect()
    }

    /// The λ-free part.
    pub fn schur_part(&self) -> BTreeMap<Vec<u32>, Q> {
        self.terms.iter().map(|(e, v)| (e.clone(), v.constant_term().clone())).filter(|(_, c)| !c.is_zero()).collect()
    }

    /// Checks homogeneity, parity and level structure.
    pub fn validate(&self) -> Result<()> {
        let w = self.u_weights();
        let n = self.curve.n as i64;
        for (e, v) in &self.terms {
            let ue = exp_weight(e, &w);
            let deg: u32 = e.iter().sum();
            if (deg as usize) % 2 != self.wt_sigma % 2 {
                return Err(Error::Consistency(format!("term {e:?} has the wrong parity")));
            }
            for (k, c) in v.0.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let d = ue - self.wt_sigma as i64;
                if d != self.space().mono_weight(k) as i64 || d % n != 0 {
                    return Err(Error::Consistency(format!("term {e:?} is not weight-homogeneous")));
                }
            }
        }
        Ok(())
    }

    /// `∂_I σ` with one-based indices.
    pub fn eval_derivative_series(&self, idx: &[u16]) -> Result<WSeries> {
        let g = self.genus();
        let mut s = self.series();
        for &i in idx {
            if i == 0 || i as usize > g {
                return Err(Error::Invalid(format!("derivative index {i} outside 1..={g}")));
            }
            s = s.derive(i as usize - 1);
        }
        Ok(s)
    }

    /// Checks `σ(u(P_1)+…+u(P_{g−1})) = 0` at fresh points.
    pub fn vanishing_check(&self, seed: u64, points: usize) -> Result<bool> {
        let g = self.genus();
        if g < 2 {
            return Ok(true);
        }
        let local = LocalData::new(&self.curve, self.depth.max(1) as usize)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sp = self.space().clone();
        for _ in 0..points {
            let xis = distinct_points(&mut rng, g - 1);
            let pts: Vec<Point> = xis.iter().map(|x| local.point(&self.emb, x)).collect();
            let v = vsum(&sp, g, &pts, &vec![1; g - 1]);
            let mut total = sp.zero();
            for (e, c) in &self.terms {
                total.add_assign(&sp.mul(c, &mono_value(&sp, &v, e, self.depth)));
            }
            if !total.is_zero() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn mono_value(sp: &Space, v: &[PVal], e: &[u32], cap: u32) -> PVal {
    let mut r = sp.constant(Q::one());
    for (x, &k) in v.iter().zip(e) {
        for _ in 0..k {
            r = sp.mul_upto(&r, x, cap);
        }
    }
    r
}

fn distinct_points(rng: &mut ChaCha8Rng, k: usize) -> Vec<Q> {
    let mut out: Vec<Q> = Vec::new();
    while out.len() < k {
        let x = random_q_height(rng, POINT_HEIGHT);
        if !out.iter().any(|y| y == &x || y == &-x.clone()) {
            out.push(x);
        }
    }
    out
}

fn vsum(sp: &Space, g: usize, pts: &[Point], signs: &[i64]) -> Vec<PVal> {
    let mut v = vec![sp.zero(); g];
    for (p, &sg) in pts.iter().zip(signs) {
        for i in 0..g {
            if sg > 0 {
                v[i].add_assign(&p.u[i]);
            } else {
                v[i].sub_assign(&p.u[i]);
            }
        }
    }
    v
}

/// Exponent vectors of weight `w` whose degree has the given parity.
pub fn u_monomials(weights: &[usize], w: usize, parity: usize) -> Vec<Vec<u32>> {
    fn rec(ws: &[usize], i: usize, rem: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == ws.len() {
            if rem == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for k in 0..=rem / ws[i] {
            cur.push(k as u32);
            rec(ws, i + 1, rem - k * ws[i], cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(weights, 0, w, &mut Vec::new(), &mut out);
    out.retain(|e| e.iter().sum::<u32>() as usize % 2 == parity % 2);
    out
}

/// Schur–Weierstrass polynomial: the Schur function of the partition
/// `(w_i − g + i)` with `p_k = k·u_{(k)}` for each gap `k`.
pub fn schur_weierstrass(c: &CurveModel) -> BTreeMap<Vec<u32>, Q> {
    let w = c.u_weights();
    let g = w.len();
    let part: Vec<i64> = (0..g).map(|i| w[i] as i64 - (g - 1 - i) as i64).collect();
    let maxk = part[0] as usize + g;
    type UP = Poly<usize, Q>;
    let p: Vec<UP> = (0..=maxk)
        .map(|k| match w.iter().position(|&x| x == k) {
            Some(i) if k > 0 => UP::var(i, q(k as i64)),
            _ => UP::zero(),
        })
        .collect();
    let mut h: Vec<UP> = vec![UP::constant(q(1))];
    for k in 1..=maxk {
        let mut acc = UP::zero();
        for r in 1..=k {
            acc.add_assign(&p[r].mul(&h[k - r]));
        }
        h.push(acc.scale(&qf(1, k as i64)));
    }
    let entry = |i: usize, j: usize| -> UP {
        let k = part[i] - i as i64 + j as i64;
        if k < 0 {
            UP::zero()
        } else {
            h[k as usize].clone()
        }
    };
    fn det(m: &[Vec<Poly<usize, Q>>]) -> Poly<usize, Q> {
        if m.len() == 1 {
            return m[0][0].clone();
        }
        let mut acc = Poly::zero();
        for j in 0..m.len() {
            if m[0][j].is_zero() {
                continue;
            }
            let minor: Vec<Vec<_>> = m[1..].iter().map(|r| r.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, x)| x.clone()).collect()).collect();
            let t = m[0][j].mul(&det(&minor));
            if j % 2 == 0 {
                acc.add_assign(&t);
            } else {
                acc = acc.sub(&t);
            }
        }
        acc
    }
    let m: Vec<Vec<UP>> = (0..g).map(|i| (0..g).map(|j| entry(i, j)).collect()).collect();
    let sw = det(&m);
    sw.terms
        .iter()
        .map(|(mono, c)| {
            let mut e = vec![0u32; g];
            for (v, k) in mono {
                e[*v] += k;
            }
            (e, c.clone())
        })
        .collect()
}

struct KleinCfg {
    v: Vec<PVal>,
    v0: Vec<Q>,
    a: Vec<PVal>,
    a0: Vec<Q>,
    f: PVal,
    f0: Q,
    st: CfgState,
    k: Vec<PVal>,
    ss: PVal,
}

struct VanCfg {
    v: Vec<PVal>,
    v0: Vec<Q>,
    st: CfgState,
}

/// Values of `σ`, `σ_i`, `σ_ij` at a configuration, together with a cache
/// of monomial values.
struct CfgState {
    s: PVal,
    si: Vec<PVal>,
    sij: Vec<PVal>,
    mono: HashMap<Vec<u32>, PVal>,
}

impl CfgState {
    fn new(sp: &Space, g: usize) -> Self {
        CfgState { s: sp.zero(), si: vec![sp.zero(); g], sij: vec![sp.zero(); g * g], mono: HashMap::new() }
    }

    fn mono(&mut self, sp: &Space, v: &[PVal], e: &[u32], cap: u32) -> PVal {
        if let Some(x) = self.mono.get(e) {
            return x.clone();
        }
        let r = match e.iter().position(|&k| k > 0) {
            None => sp.constant(Q::one()),
            Some(i) => {
                let mut e2 = e.to_vec();
                e2[i] -= 1;
                let prev = self.mono(sp, v, &e2, cap);
                sp.mul_upto(&prev, &v[i], cap)
            }
        };
        self.mono.insert(e.to_vec(), r.clone());
        r
    }

    /// Adds `x · u^α` and its first and second derivatives.
    fn add_term(&mut self, sp: &Space, v: &[PVal], alpha: &[u32], x: &PVal, cap: u32, with_second: bool) {
        let g = alpha.len();
        let m = self.mono(sp, v, alpha, cap);
        self.s.add_assign(&sparse_mul(sp, x, &m));
        for i in 0..g {
            if alpha[i] == 0 {
                continue;
            }
            let mut e = alpha.to_vec();
            e[i] -= 1;
            let mi = self.mono(sp, v, &e, cap);
            self.si[i].add_assign(&sparse_mul(sp, &x.scale(&q(alpha[i] as i64)), &mi));
            if !with_second {
                continue;
            }
            for j in 0..g {
                if e[j] == 0 {
                    continue;
                }
                let mut e2 = e.clone();
                e2[j] -= 1;
                let mij = self.mono(sp, v, &e2, cap);
                let c = q(alpha[i] as i64 * e[j] as i64);
                self.sij[i * g + j].add_assign(&sparse_mul(sp, &x.scale(&c), &mij));
            }
        }
    }
}

fn sparse_mul(sp: &Space, x: &PVal, m: &PVal) -> PVal {
    let mut out = sp.zero();
    for (k, c) in x.0.iter().enumerate() {
        if !c.is_zero() {
            sp.add_mul_mono(&mut out, k, c, m);
        }
    }
    out
}

fn q_mono(v0: &[Q], e: &[u32], d: &[usize]) -> Q {
    let mut e: Vec<i64> = e.iter().map(|&k| k as i64).collect();
    let mut c = Q::one();
    for &i in d {
        if e[i] == 0 {
            return Q::zero();
        }
        c *= q(e[i]);
        e[i] -= 1;
    }
    for (x, &k) in v0.iter().zip(&e) {
        if k > 0 {
            c *= qpow(x, k);
        }
    }
    c
}

impl KleinCfg {
    fn new(sp: &Space, g: usize, emb: &Embedding, local: &LocalData, kf: &KleinForm, c: &CurveModel, xis: &[Q]) -> Self {
        let pts: Vec<Point> = xis.iter().map(|x| local.point(emb, x)).collect();
        let mut signs = vec![1, -1];
        signs.extend(std::iter::repeat(1).take(g - 1));
        let v = vsum(sp, g, &pts, &signs);
        let hol = c.holomorphic();
        let h1: Vec<PVal> = hol.iter().map(|h| hol_value(emb, &pts[0], h)).collect();
        let h2: Vec<PVal> = hol.iter().map(|h| hol_value(emb, &pts[1], h)).collect();
        let dx = pts[0].x.sub(&pts[1].x);
        let dx2 = sp.mul(&dx, &dx);
        let mut a = Vec::new();
        for i in 0..g {
            for j in 0..g {
                a.push(sp.mul(&dx2, &sp.mul(&h1[i], &h2[j])));
            }
        }
        let f = kf.eval(emb, &pts[0], &pts[1]);
        let v0 = v.iter().map(|x| x.constant_term().clone()).collect();
        let a0 = a.iter().map(|x| x.constant_term().clone()).collect();
        let f0 = f.constant_term().clone();
        KleinCfg { v, v0, a, a0, f, f0, st: CfgState::new(sp, g), k: vec![sp.zero(); g * g], ss: sp.zero() }
    }

    /// Records the weight-`d` parts of `σ_iσ_j − σσ_ij` and `σ²`.
    fn close_level(&mut self, sp: &Space, g: usize, d: u32) {
        for i in 0..g {
            for j in 0..g {
                let t = sp.mul_component(&self.st.si[i], &self.st.si[j], d).sub(&sp.mul_component(&self.st.s, &self.st.sij[i * g + j], d));
                self.k[i * g + j].add_assign(&t);
            }
        }
        self.ss.add_assign(&sp.mul_component(&self.st.s, &self.st.s, d));
    }

    /// Weight-`d` part of the Klein residual for the current σ.
    fn residual(&self, sp: &Space, g: usize, d: u32) -> PVal {
        let mut out = sp.zero();
        for i in 0..g {
            for j in 0..g {
                let mut kk = self.k[i * g + j].clone();
                kk.add_assign(&sp.mul_component(&self.st.si[i], &self.st.si[j], d));
                kk.sub_assign(&sp.mul_component(&self.st.s, &self.st.sij[i * g + j], d));
                out.add_assign(&sp.mul_component(&self.a[i * g + j], &kk, d));
            }
        }
        let mut ss = self.ss.clone();
        ss.add_assign(&sp.mul_component(&self.st.s, &self.st.s, d));
        out.sub_assign(&sp.mul_component(&self.f, &ss, d));
        out
    }

    /// Derivative of the residual in the direction of `u^α` at `λ = 0`.
    fn linear_row(&self, g: usize, alphas: &[Vec<u32>], sw0: &Sw0) -> Vec<Q> {
        alphas
            .iter()
            .map(|al| {
                let d0 = q_mono(&self.v0, al, &[]);
                let di: Vec<Q> = (0..g).map(|i| q_mono(&self.v0, al, &[i])).collect();
                let mut tot = Q::zero();
                for i in 0..g {
                    for j in 0..g {
                        let a = &self.a0[i * g + j];
                        if a.is_zero() {
                            continue;
                        }
                        let dij = q_mono(&self.v0, al, &[i, j]);
                        let t = &sw0.si[i] * &di[j] + &di[i] * &sw0.si[j] - &sw0.s * dij - &d0 * &sw0.sij[i * g + j];
                        tot += a * t;
                    }
                }
                tot - q(2) * &self.f0 * &sw0.s * d0
            })
            .collect()
    }

    fn sw0(&self, g: usize) -> Sw0 {
        Sw0 {
            s: self.st.s.constant_term().clone(),
            si: self.st.si.iter().map(|x| x.constant_term().clone()).collect(),
            sij: (0..g * g).map(|k| self.st.sij[k].constant_term().clone()).collect(),
        }
    }
}

struct Sw0 {
    s: Q,
    si: Vec<Q>,
    sij: Vec<Q>,
}

fn check_budget(start: &Instant, budget: Option<u64>) -> Result<()> {
    if let Some(b) = budget {
        if start.elapsed().as_secs() > b {
            return Err(Error::Budget(b));
        }
    }
    Ok(())
}

/// Solves for σ with symbolic λ to λ-weight `depth`.
pub fn solve_expansion(c: &CurveModel, depth: u32) -> Result<SigmaExpansion> {
    solve_with(c, &SolveOptions::new(depth, Mode::Symbolic))
}

pub fn solve_with(c: &CurveModel, opts: &SolveOptions) -> Result<SigmaExpansion> {
    if !c.cyclic {
        return Err(Error::Invalid("σ expansions require a cyclic curve".into()));
    }
    let start = Instant::now();
    let g = c.genus();
    let n = c.n as u32;
    let wts = sigma_weight(c)?;
    let weights = c.u_weights();
    let depth = if opts.mode == Mode::Zero { 0 } else { opts.depth };
    let emb = embedding_for(c, &opts.mode, depth);
    let sp = emb.space.clone();
    let local = LocalData::new(c, depth.max(1) as usize)?;
    let kf = klein_polynomial(c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let levels: Vec<u32> = (1..).map(|k| k * n).take_while(|&d| d <= depth).collect();
    let max_unknowns = levels.iter().map(|&d| u_monomials(&weights, wts + d as usize, wts).len()).max().unwrap_or(0);
    let sw_monos = u_monomials(&weights, wts, wts);
    let ncfg = max_unknowns.max(sw_monos.len()) + opts.margin;

    let van_xis: Vec<Vec<Q>> = if g >= 2 { (0..ncfg).map(|_| distinct_points(&mut rng, g - 1)).collect() } else { Vec::new() };
    let klein_xis: Vec<Vec<Q>> = (0..ncfg).map(|_| distinct_points(&mut rng, g + 1)).collect();

    let mut vans: Vec<VanCfg> = van_xis
        .par_iter()
        .map(|xis| {
            let pts: Vec<Point> = xis.iter().map(|x| local.point(&emb, x)).collect();
            let v = vsum(&sp, g, &pts, &vec![1; g - 1]);
            let v0 = v.iter().map(|x| x.constant_term().clone()).collect();
            VanCfg { v, v0, st: CfgState::new(&sp, g) }
        })
        .collect();
    let mut kcfgs: Vec<KleinCfg> = klein_xis.par_iter().map(|xis| KleinCfg::new(&sp, g, &emb, &local, &kf, c, xis)).collect();

    // Level 0: the vanishing conditions at λ = 0 fix the Schur–Weierstrass
    // part up to scale.
    let jt = schur_weierstrass(c);
    let sw: BTreeMap<Vec<u32>, Q> = if g >= 2 {
        let rows: Vec<Vec<Q>> = vans.iter().map(|cf| sw_monos.iter().map(|a| q_mono(&cf.v0, a, &[])).collect()).collect();
        let ns = linalg::nullspace(rows, sw_monos.len());
        if ns.len() != 1 {
            return Err(Error::Underdetermined { level: 0, nullity: ns.len() });
        }
        let raw: BTreeMap<Vec<u32>, Q> = sw_monos.iter().cloned().zip(ns[0].iter().cloned()).filter(|(_, x)| !x.is_zero()).collect();
        let (e0, c0) = jt.iter().next().ok_or_else(|| Error::Consistency("empty Schur polynomial".into()))?;
        let scale = c0 / raw.get(e0).cloned().unwrap_or_else(Q::zero);
        let scaled: BTreeMap<Vec<u32>, Q> = raw.into_iter().map(|(e, x)| (e, x * &scale)).collect();
        if scaled != jt {
            return Err(Error::Consistency("vanishing solution differs from the Schur–Weierstrass polynomial".into()));
        }
        scaled
    } else {
        jt
    };

    let mut terms: BTreeMap<Vec<u32>, PVal> = BTreeMap::new();
    for (e, x) in &sw {
        terms.insert(e.clone(), sp.constant(x.clone()));
    }
    kcfgs.par_iter_mut().for_each(|cf| {
        for (e, x) in &sw {
            cf.st.add_term(&sp, &cf.v, e, &sp.constant(x.clone()), depth, true);
        }
        cf.close_level(&sp, g, 0);
    });
    vans.par_iter_mut().for_each(|cf| {
        for (e, x) in &sw {
            cf.st.add_term(&sp, &cf.v, e, &sp.constant(x.clone()), depth, false);
        }
    });
    for cf in &kcfgs {
        let r = cf.k.iter().zip(&cf.a0).fold(Q::zero(), |acc, (k, a)| acc + a * k.constant_term()) - &cf.f0 * cf.ss.constant_term();
        if !r.is_zero() {
            return Err(Error::Consistency("Klein identity fails at λ = 0".into()));
        }
    }
    let sw0: Vec<Sw0> = kcfgs.iter().map(|cf| cf.sw0(g)).collect();

    for &d in &levels {
        check_budget(&start, opts.budget_secs)?;
        let alphas = u_monomials(&weights, wts + d as usize, wts);
        let lam = sp.monos_of_weight(d);
        if alphas.is_empty() || lam.is_empty() {
            kcfgs.par_iter_mut().for_each(|cf| cf.close_level(&sp, g, d));
            continue;
        }
        let na = alphas.len();
        let krows: Vec<Vec<Q>> = kcfgs
            .par_iter()
            .zip(&sw0)
            .map(|(cf, s0)| {
                let mut row = cf.linear_row(g, &alphas, s0);
                let r = cf.residual(&sp, g, d);
                row.extend(lam.iter().map(|&k| -r.0[k].clone()));
                row
            })
            .collect();
        let vrows: Vec<Vec<Q>> = vans
            .par_iter()
            .map(|cf| {
                let mut row: Vec<Q> = alphas.iter().map(|a| q_mono(&cf.v0, a, &[])).collect();
                row.extend(lam.iter().map(|&k| -cf.st.s.0[k].clone()));
                row
            })
            .collect();
        let mut rows = krows;
        rows.extend(vrows);
        let sol = linalg::solve(rows, na);
        if sol.rank < na {
            return Err(Error::Underdetermined { level: d as usize, nullity: na - sol.rank });
        }
        if sol.inconsistent {
            return Err(Error::Inconsistent { level: d as usize });
        }
        let mut new_terms: Vec<(Vec<u32>, PVal)> = Vec::new();
        for (ai, al) in alphas.iter().enumerate() {
            let mut x = sp.zero();
            for (col, &k) in lam.iter().enumerate() {
                x.0[k] = sol.x[col][ai].clone();
            }
            if !x.is_zero() {
                new_terms.push((al.clone(), x));
            }
        }
        let cap = depth - d;
        kcfgs.par_iter_mut().for_each(|cf| {
            for (al, x) in &new_terms {
                cf.st.add_term(&sp, &cf.v, al, x, cap, true);
            }
            cf.close_level(&sp, g, d);
        });
        vans.par_iter_mut().for_each(|cf| {
            for (al, x) in &new_terms {
                cf.st.add_term(&sp, &cf.v, al, x, cap, false);
            }
        });
        for (al, x) in new_terms {
            terms.entry(al).or_insert_with(|| sp.zero()).add_assign(&x);
        }
    }

    let e = SigmaExpansion { curve: c.clone(), wt_sigma: wts, depth, mode: opts.mode.clone(), seed: opts.seed, emb, terms };
    e.validate()?;
    Ok(e)
}

/// Truncated Laurent series in one variable with λ-polynomial coefficients.
pub type Laurent = BTreeMap<i64, PPoly>;

/// Series for the Weierstrass functions with invariants `g2`, `g3`.
#[derive(Clone, Debug)]
pub struct Genus1Oracle {
    /// `℘(u) = u^{−2} + Σ c_k u^{2k−2}`, exponents below `depth`.
    pub wp: Laurent,
    /// `σ(u)`, exponents at most `depth`.
    pub sigma: Laurent,
    pub depth: i64,
}

fn lmul(a: &Laurent, b: &Laurent, max: i64) -> Laurent {
    let mut r: Laurent = BTreeMap::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            if ea + eb <= max {
                r.entry(ea + eb).or_default().add_assign(&ca.mul(cb));
            }
        }
    }
    r.retain(|_, v| !v.is_zero());
    r
}

/// `℘` by the recursion from `(℘′)² = 4℘³ − g₂℘ − g₃`, then
/// `σ = u·exp(−∬(℘ − u^{−2}))`.
pub fn genus1_oracle(g2: &PPoly, g3: &PPoly, depth: usize) -> Result<Genus1Oracle> {
    if depth < 5 {
        return Err(Error::Invalid("genus-1 oracle needs depth ≥ 5".into()));
    }
    let kmax = depth / 2 + 2;
    let mut c: Vec<PPoly> = vec![PPoly::zero(); kmax + 1];
    if kmax >= 2 {
        c[2] = g2.scale(&qf(1, 20));
    }
    if kmax >= 3 {
        c[3] = g3.scale(&qf(1, 28));
    }
    for k in 4..=kmax {
        let mut acc = PPoly::zero();
        for m in 2..=k - 2 {
            acc.add_assign(&c[m].mul(&c[k - m]));
        }
        c[k] = acc.scale(&qf(3, ((2 * k + 1) * (k - 3)) as i64));
    }
    let mut wp: Laurent = BTreeMap::new();
    wp.insert(-2, PPoly::constant(q(1)));
    for (k, ck) in c.iter().enumerate().skip(2) {
        let e = 2 * k as i64 - 2;
        if e < depth as i64 && !ck.is_zero() {
            wp.insert(e, ck.clone());
        }
    }
    // exp(A), A = −Σ c_k u^{2k}/((2k)(2k−1)), in powers of u².
    let half = depth / 2;
    let a: Vec<PPoly> = (0..=half)
        .map(|k| if k >= 2 && k <= kmax { c[k].scale(&qf(-1, (2 * k * (2 * k - 1)) as i64)) } else { PPoly::zero() })
        .collect();
    let mut ex: Vec<PPoly> = vec![PPoly::constant(q(1))];
    for m in 1..=half {
        let mut acc = PPoly::zero();
        for k in 1..=m {
            acc.add_assign(&a[k].mul(&ex[m - k]).scale(&q(k as i64)));
        }
        ex.push(acc.scale(&qf(1, m as i64)));
    }
    let mut sigma: Laurent = BTreeMap::new();
    for (m, x) in ex.into_iter().enumerate() {
        let e = 2 * m as i64 + 1;
        if e <= depth as i64 && !x.is_zero() {
            sigma.insert(e, x);
        }
    }
    Ok(Genus1Oracle { wp, sigma, depth: depth as i64 })
}

/// `−(log σ)″` for `σ = u + …`, exact for exponents below `depth − 1`.
pub fn wp_from_sigma(sigma: &Laurent, depth: i64) -> Result<Laurent> {
    // σ = u·T with T = 1 + O(u²); ℘ = u^{−2} − (T″T − T′²)/T².
    let t: Laurent = sigma.iter().map(|(e, c)| (e - 1, c.clone())).collect();
    if t.get(&0) != Some(&PPoly::constant(q(1))) {
        return Err(Error::Invalid("σ must start with u".into()));
    }
    let max = depth;
    let d1 = |s: &Laurent| -> Laurent { s.iter().filter(|(e, _)| **e != 0).map(|(e, c)| (e - 1, c.scale(&q(*e)))).collect() };
    let t1 = d1(&t);
    let t2 = d1(&t1);
    let mut num = lmul(&t2, &t, max);
    for (e, c) in lmul(&t1, &t1, max) {
        num.entry(e).or_default().add_assign(&c.scale(&q(-1)));
    }
    num.retain(|_, v| !v.is_zero());
    // 1/T² by recursion.
    let t_sq = lmul(&t, &t, max);
    let mut inv: Laurent = BTreeMap::new();
    inv.insert(0, PPoly::constant(q(1)));
    for e in 1..=max {
        let mut acc = PPoly::zero();
        for (k, c) in &t_sq {
            if *k >= 1 && *k <= e {
                if let Some(x) = inv.get(&(e - k)) {
                    acc.add_assign(&c.mul(x));
                }
            }
        }
        if !acc.is_zero() {
            inv.insert(e, acc.scale(&q(-1)));
        }
    }
    let corr = lmul(&num, &inv, max);
    let mut wp: Laurent = BTreeMap::new();
    wp.insert(-2, PPoly::constant(q(1)));
    for (e, c) in corr {
        if e < max - 1 {
            wp.entry(e).or_default().add_assign(&c.scale(&q(-1)));
        }
    }
    wp.retain(|_, v| !v.is_zero());
    Ok(wp)
}

/// `(℘′)² − 4℘³ − Σ b_k ℘^k` truncated below `max`; zero for a correct `℘`.
pub fn wp_ode_residual(wp: &Laurent, coeffs: &[PPoly], max: i64) -> Laurent {
    let d: Laurent = wp.iter().map(|(e, c)| (e - 1, c.scale(&q(*e)))).collect();
    let mut r = lmul(&d, &d, max);
    let wp2 = lmul(wp, wp, max + 4);
    let wp3 = lmul(&wp2, wp, max);
    let mut sub = |s: &Laurent, k: &PPoly| {
        for (e, c) in s {
            if *e <= max {
                r.entry(*e).or_default().add_assign(&c.mul(k).scale(&q(-1)));
            }
        }
    };
    sub(&wp3, &PPoly::constant(q(4)));
    let one: Laurent = BTreeMap::from([(0, PPoly::constant(q(1)))]);
    let pw = [one, wp.clone(), wp2];
    for (k, b) in coeffs.iter().enumerate().take(3) {
        sub(&pw[k], b);
    }
    r.retain(|e, v| !v.is_zero() && *e <= max);
    r
}

/// The solver's genus-1 σ as a Laurent series with λ-polynomial coefficients.
pub fn genus1_laurent(e: &SigmaExpansion) -> Laurent {
    let mut out: Laurent = BTreeMap::new();
    for t in e.term_list() {
        let mut m = Vec::new();
        for (j, &k) in t.lambda_exp.iter().enumerate() {
            if k > 0 {
                m.push((PVar::Lambda(j as u16), k as u32));
            }
        }
        out.entry(t.u_exp[0] as i64).or_default().add_term(m, t.coeff);
    }
    out.retain(|_, v| !v.is_zero());
    out
}

// ---------------------------------------------------------------------------
// Persistence

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct CurveHeader {
    pub n: usize,
    pub s: usize,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct TermRecord {
    pub u_exp: Vec<u32>,
    pub lambda_exp: BTreeMap<u16, u16>,
    pub coeff: String,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct ExpansionFile {
    pub format_version: u32,
    pub generator: String,
    pub seed: u64,
    pub curve: CurveHeader,
    pub wt_sigma: usize,
    pub depth: u32,
    pub mode: String,
    pub specialization: Option<Vec<String>>,
    pub terms: Vec<TermRecord>,
    pub checksum: String,
}

fn checksum(terms: &[TermRecord]) -> Result<String> {
    let body = serde_json::to_vec(terms)?;
    Ok(hex::encode(Sha256::digest(&body)))
}

pub fn to_file(e: &SigmaExpansion) -> Result<ExpansionFile> {
    let terms: Vec<TermRecord> = e
        .term_list()
        .into_iter()
        .map(|t| TermRecord {
            u_exp: t.u_exp,
            lambda_exp: t.lambda_exp.iter().enumerate().filter(|(_, &k)| k > 0).map(|(j, &k)| (j as u16, k)).collect(),
            coeff: fmt_q(&t.coeff),
        })
        .collect();
    let checksum = checksum(&terms)?;
    Ok(ExpansionFile {
        format_version: FORMAT_VERSION,
        generator: format!("kleinian {}", env!("CARGO_PKG_VERSION")),
        seed: e.seed,
        curve: CurveHeader { n: e.curve.n, s: e.curve.s },
        wt_sigma: e.wt_sigma,
        depth: e.depth,
        mode: e.mode.name().into(),
        specialization: match &e.mode {
            Mode::Specialized(a) => Some(a.iter().map(fmt_q).collect()),
            _ => None,
        },
        terms,
        checksum,
    })
}

pub fn to_json(e: &SigmaExpansion) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&to_file(e)?)?;
    s.push('\n');
    Ok(s)
}

pub fn store_expansion(e: &SigmaExpansion, path: &Path) -> Result<()> {
    fs::write(path, to_json(e)?)?;
    Ok(())
}

pub fn from_file(f: &ExpansionFile) -> Result<SigmaExpansion> {
    if f.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!("format version {} (expected {FORMAT_VERSION})", f.format_version)));
    }
    if checksum(&f.terms)? != f.checksum {
        return Err(Error::Format("checksum mismatch".into()));
    }
    let c = CurveModel::cyclic(f.curve.n, f.curve.s)?;
    let wts = sigma_weight(&c)?;
    if wts != f.wt_sigma {
        return Err(Error::Format(format!("wt_sigma {} does not match the curve ({wts})", f.wt_sigma)));
    }
    let mode = match (f.mode.as_str(), &f.specialization) {
        ("symbolic", None) => Mode::Symbolic,
        ("zero", None) => Mode::Zero,
        ("specialized", Some(a)) => Mode::Specialized(a.iter().map(|x| parse_q(x)).collect::<Result<_>>()?),
        _ => return Err(Error::Format(format!("unknown mode {:?}", f.mode))),
    };
    if let Mode::Specialized(a) = &mode {
        if a.len() != c.s {
            return Err(Error::Format("specialization has the wrong length".into()));
        }
    }
    let emb = embedding_for(&c, &mode, f.depth);
    let sp = emb.space.clone();
    let w = c.u_weights();
    let g = c.genus();
    let mut terms: BTreeMap<Vec<u32>, PVal> = BTreeMap::new();
    for t in &f.terms {
        if t.u_exp.len() != g {
            return Err(Error::Format(format!("term {:?} has the wrong length", t.u_exp)));
        }
        let coeff = parse_q(&t.coeff)?;
        let d = exp_weight(&t.u_exp, &w) - wts as i64;
        let mut lexp = vec![0u16; c.s];
        for (&j, &k) in &t.lambda_exp {
            if j as usize >= c.s {
                return Err(Error::Format(format!("λ index {j} out of range")));
            }
            lexp[j as usize] = k;
        }
        let lw = c.lambda_mono_weight(&lexp) as i64;
        let bad = || Error::Consistency(format!("term {:?} is not weight-homogeneous", t.u_exp));
        let val = match &mode {
            Mode::Symbolic => {
                if lw != d {
                    return Err(bad());
                }
                sp.monomial(&lexp, coeff)
            }
            _ => {
                if lw != 0 || d < 0 || d % c.n as i64 != 0 || d > f.depth as i64 {
                    return Err(bad());
                }
                sp.monomial(&[(d / c.n as i64) as u16], coeff)
            }
        };
        if val.is_zero() {
            return Err(Error::Format(format!("term {:?} lies beyond the stated depth", t.u_exp)));
        }
        terms.entry(t.u_exp.clone()).or_insert_with(|| sp.zero()).add_assign(&val);
    }
    let e = SigmaExpansion { curve: c, wt_sigma: wts, depth: f.depth, mode, seed: f.seed, emb, terms };
    e.validate()?;
    Ok(e)
}

pub fn from_json(s: &str) -> Result<SigmaExpansion> {
    let f: ExpansionFile = serde_json::from_str(s)?;
    from_file(&f)
}

pub fn load_expansion(path: &Path) -> Result<SigmaExpansion> {
    from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schur_weierstrass_polynomials() {
        let sw = schur_weierstrass(&CurveModel::cyclic(2, 5).unwrap());
        assert_eq!(sw, BTreeMap::from([(vec![0, 3], qf(1, 3)), (vec![1, 0], q(-1))]));
        let sw = schur_weierstrass(&CurveModel::cyclic(2, 3).unwrap());
        assert_eq!(sw, BTreeMap::from([(vec![1], q(1))]));
    }

    #[test]
    fn zero_mode_is_schur_weierstrass() {
        for (n, s) in [(2, 5), (2, 7), (3, 4)] {
            let c = CurveModel::cyclic(n, s).unwrap();
            let e = solve_with(&c, &SolveOptions::new(10, Mode::Zero)).unwrap();
            assert_eq!(e.schur_part(), schur_weierstrass(&c));
            assert_eq!(e.terms.len(), e.schur_part().len());
        }
    }

    #[test]
    fn genus2_symbolic() {
        let c = CurveModel::cyclic(2, 5).unwrap();
        let e = solve_expansion(&c, 10).unwrap();
        assert!(e.vanishing_check(99, 3).unwrap());
        let back = from_json(&to_json(&e).unwrap()).unwrap();
        assert_eq!(back.terms, e.terms);
    }

    #[test]
    fn genus1_matches_oracle() {
        let c = CurveModel::cyclic(2, 3).unwrap();
        let e = solve_expansion(&c, 16).unwrap();
        let lam = |j: u16, k: i64| PPoly::var(PVar::Lambda(j), q(k));
        let o = genus1_oracle(&lam(1, -4), &lam(0, -4), 17).unwrap();
        let mut mine = genus1_laurent(&e);
        for v in mine.values_mut() {
            v.terms.retain(|m, _| !m.iter().any(|(x, _)| *x == PVar::Lambda(2)));
        }
        mine.retain(|_, v| !v.is_zero());
        assert_eq!(mine, o.sigma);
    }

    #[test]
    fn load_rejects_inhomogeneous() {
        let c = CurveModel::cyclic(2, 5).unwrap();
        let e = solve_expansion(&c, 4).unwrap();
        let mut f = to_file(&e).unwrap();
        f.terms[0].u_exp[0] += 1;
        f.checksum = checksum(&f.terms).unwrap();
        assert!(from_file(&f).is_err());
    }
}
