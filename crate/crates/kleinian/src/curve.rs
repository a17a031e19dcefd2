//! Cyclic `(n,s)`-curves `y^n = x^s + λ_{s−1}x^{s−1} + … + λ_0`: weights,
//! holomorphic differentials, local expansions at infinity and the Abel map.
//!
//! The local parameter is `ξ` with `x = ξ^{−n}`. Holomorphic differentials
//! are `du_i = x^a y^b dx / (n y^{n−1})`; integrating from infinity gives
//! `u_i = −ξ^{w_i}/w_i + …`, with `w_i` the `i`-th largest gap.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::abelfun::{PPoly, PVar};
use crate::combinat::{gap_sequence, GapData};
use crate::error::{Error, Result};
use crate::params::{PVal, ParamSpace, Space};
use crate::poly::Mono;
use crate::rational::{gbinom, q, qf, qpow, Q};

/// Curve descriptor. The general model only records degree bounds of the
/// coefficient polynomials `q_j(x)`; expansions require the cyclic form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveModel {
    pub n: usize,
    pub s: usize,
    pub cyclic: bool,
    pub gaps: GapData,
    /// `⌊js/n⌋` for `j = 1..n` in the general model.
    pub degree_bounds: Vec<usize>,
}

/// `x^a y^b` with integrated leading exponent `w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HolMono {
    pub w: usize,
    pub a: usize,
    pub b: usize,
}

impl CurveModel {
    pub fn cyclic(n: usize, s: usize) -> Result<Self> {
        let gaps = gap_sequence(n, s)?;
        Ok(CurveModel { n, s, cyclic: true, gaps, degree_bounds: (1..=n).map(|j| j * s / n).collect() })
    }

    pub fn general(n: usize, s: usize) -> Result<Self> {
        Ok(CurveModel { cyclic: false, ..Self::cyclic(n, s)? })
    }

    pub fn genus(&self) -> usize {
        self.gaps.genus
    }

    /// Weights of `u_1..u_g`, decreasing.
    pub fn u_weights(&self) -> Vec<usize> {
        self.gaps.u_weights()
    }

    /// Absolute weight `n(s−j)` of `λ_j`.
    pub fn lambda_weight(&self, j: usize) -> u32 {
        (self.n * (self.s - j)) as u32
    }

    pub fn lambda_weights(&self) -> Vec<u32> {
        (0..self.s).map(|j| self.lambda_weight(j)).collect()
    }

    /// Weight of a λ-monomial given by exponents.
    pub fn lambda_mono_weight(&self, e: &[u16]) -> u32 {
        e.iter().enumerate().map(|(j, &k)| k as u32 * self.lambda_weight(j)).sum()
    }

    /// Monomials `x^a y^b` (`b ≤ n−2`) of the holomorphic differentials,
    /// ordered so that `u_1` has the largest weight.
    pub fn holomorphic(&self) -> Vec<HolMono> {
        let (n, s) = (self.n as i64, self.s as i64);
        let mut out = Vec::new();
        for b in 0..n - 1 {
            for a in 0..s {
                let w = s * (n - 1 - b) - n * (a + 1);
                if w > 0 {
                    out.push(HolMono { w: w as usize, a: a as usize, b: b as usize });
                }
            }
        }
        out.sort_by(|p, q| q.w.cmp(&p.w));
        out
    }

    fn require_cyclic(&self) -> Result<()> {
        if self.cyclic {
            Ok(())
        } else {
            Err(Error::Invalid("local expansions are implemented for cyclic curves only".into()))
        }
    }
}

/// `wt(σ) = (n²−1)(s²−1)/24`.
pub fn sigma_weight(c: &CurveModel) -> Result<usize> {
    let num = (c.n * c.n - 1) * (c.s * c.s - 1);
    if num % 24 != 0 {
        return Err(Error::Consistency(format!("σ weight {num}/24 is not integral")));
    }
    Ok(num / 24)
}

pub fn lambda_var(j: usize) -> PVar {
    PVar::Lambda(j as u16)
}

/// Laurent series in `ξ` with λ-polynomial coefficients, exact for
/// exponents below `order`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalSeries {
    pub coeffs: BTreeMap<i64, PPoly>,
    pub order: i64,
}

impl LocalSeries {
    pub fn mul(&self, o: &LocalSeries) -> LocalSeries {
        let lo_a = self.coeffs.keys().next().copied().unwrap_or(0);
        let lo_b = o.coeffs.keys().next().copied().unwrap_or(0);
        let order = (self.order + lo_b).min(o.order + lo_a);
        let mut coeffs: BTreeMap<i64, PPoly> = BTreeMap::new();
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in &o.coeffs {
                if ea + eb >= order {
                    continue;
                }
                coeffs.entry(ea + eb).or_default().add_assign(&ca.mul(cb));
            }
        }
        coeffs.retain(|_, v| !v.is_zero());
        LocalSeries { coeffs, order }
    }

    /// Weight of every coefficient equals `exponent − shift`, i.e. the series
    /// is homogeneous of total weight `shift` (with `wt ξ = 1` and `wt λ`
    /// negative).
    pub fn is_homogeneous(&self, shift: i64, c: &CurveModel) -> bool {
        self.coeffs.iter().all(|(e, p)| {
            p.terms.keys().all(|m| {
                let lw: i64 = m.iter().map(|(v, k)| if let PVar::Lambda(j) = v { c.lambda_weight(*j as usize) as i64 * *k as i64 } else { 0 }).sum();
                e - shift == lw
            })
        })
    }
}

/// `q(ξ) = Σ_j λ_j ξ^{n(s−j)}` so that `y^n = ξ^{−ns}(1 + q)`.
fn q_series(c: &CurveModel, depth: i64) -> LocalSeries {
    let mut coeffs = BTreeMap::new();
    for j in 0..c.s {
        let e = c.lambda_weight(j) as i64;
        if e <= depth {
            coeffs.insert(e, PPoly::var(lambda_var(j), q(1)));
        }
    }
    LocalSeries { coeffs, order: depth + 1 }
}

/// `(1+q)^r` up to `ξ^depth`.
fn binomial_series(c: &CurveModel, r: &Q, depth: i64) -> LocalSeries {
    let qs = q_series(c, depth);
    let mut out = LocalSeries { coeffs: BTreeMap::from([(0, PPoly::constant(q(1)))]), order: depth + 1 };
    let mut qk = out.clone();
    let min_w = c.lambda_weight(c.s - 1) as i64;
    for k in 1..=(depth / min_w) as usize {
        qk = qk.mul(&qs);
        qk.order = depth + 1;
        let b = gbinom(r, k);
        for (e, p) in &qk.coeffs {
            out.coeffs.entry(*e).or_default().add_assign(&p.scale(&b));
        }
    }
    out.coeffs.retain(|_, v| !v.is_zero());
    out
}

/// `y(ξ) = ξ^{−s}(1+q)^{1/n}`, exact through λ-weight `depth`.
pub fn y_series(c: &CurveModel, depth: usize) -> Result<LocalSeries> {
    c.require_cyclic()?;
    if depth == 0 {
        return Err(Error::Invalid("depth must be positive".into()));
    }
    let b = binomial_series(c, &qf(1, c.n as i64), depth as i64);
    let s = c.s as i64;
    Ok(LocalSeries { coeffs: b.coeffs.into_iter().map(|(e, p)| (e - s, p)).collect(), order: b.order - s })
}

/// `y^n − x^s − Σ λ_j x^j` for a candidate `y(ξ)`; zero to the series'
/// precision when `y` is correct.
pub fn curve_residual(c: &CurveModel, y: &LocalSeries) -> LocalSeries {
    let mut yn = y.clone();
    for _ in 1..c.n {
        yn = yn.mul(y);
    }
    let ns = (c.n * c.s) as i64;
    yn.coeffs.entry(-ns).or_default().add_assign(&PPoly::constant(q(-1)));
    for j in 0..c.s {
        let e = -((c.n * j) as i64);
        if e < yn.order {
            yn.coeffs.entry(e).or_default().add_assign(&PPoly::var(lambda_var(j), q(-1)));
        }
    }
    yn.coeffs.retain(|_, v| !v.is_zero());
    yn
}

/// `u_i(ξ)` for `i = 1..g`, exact through λ-weight `depth` beyond the leading
/// term.
pub fn abel_series(c: &CurveModel, depth: usize) -> Result<Vec<LocalSeries>> {
    c.require_cyclic()?;
    let hol = c.holomorphic();
    if hol.len() != c.genus() {
        return Err(Error::Consistency(format!("{} differentials for genus {}", hol.len(), c.genus())));
    }
    let mut out = Vec::new();
    for (h, w) in hol.iter().zip(c.u_weights()) {
        if h.w != w {
            return Err(Error::Consistency(format!("no differential of weight {w}")));
        }
        let r = Q::new((h.b as i64 - c.n as i64 + 1).into(), (c.n as i64).into());
        let b = binomial_series(c, &r, depth as i64);
        let coeffs = b
            .coeffs
            .into_iter()
            .map(|(e, p)| {
                let k = w as i64 + e;
                (k, p.scale(&qf(-1, k)))
            })
            .collect();
        out.push(LocalSeries { coeffs, order: b.order + w as i64 });
    }
    Ok(out)
}

/// How curve parameters are represented inside a [`ParamSpace`].
#[derive(Clone, Debug)]
pub enum Lambdas {
    /// One variable per `λ_j`, weight `n(s−j)`.
    Symbolic,
    /// `λ_j = a_j t^{s−j}` with a single grading variable of weight `n`.
    Specialized(Vec<Q>),
}

/// A parameter space together with the images of the `λ_j`.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub space: Space,
    pub lambdas: Lambdas,
    pub n: usize,
    pub s: usize,
}

impl Embedding {
    pub fn new(c: &CurveModel, lambdas: Lambdas, depth: u32) -> Self {
        let space = match &lambdas {
            Lambdas::Symbolic => ParamSpace::new(c.lambda_weights(), depth),
            Lambdas::Specialized(_) => ParamSpace::new(vec![c.n as u32], depth),
        };
        Embedding { space, lambdas, n: c.n, s: c.s }
    }

    /// Image of `coef · λ^e`.
    pub fn lambda_mono(&self, e: &[u16], coef: &Q) -> PVal {
        match &self.lambdas {
            Lambdas::Symbolic => self.space.monomial(e, coef.clone()),
            Lambdas::Specialized(a) => {
                let mut c = coef.clone();
                let mut deg = 0u16;
                for (j, &k) in e.iter().enumerate() {
                    if k > 0 {
                        c *= qpow(&a[j], k as i64);
                        deg += k * (self.s - j) as u16;
                    }
                }
                self.space.monomial(&[deg], c)
            }
        }
    }

    /// Image of a λ-polynomial.
    pub fn lampoly(&self, p: &PPoly) -> PVal {
        let mut out = self.space.zero();
        for (m, c) in &p.terms {
            out.add_assign(&self.lambda_mono(&lambda_exps(m, self.s), c));
        }
        out
    }

    /// Value of a local series at `ξ = x0`.
    pub fn eval_series(&self, ser: &LocalSeries, x0: &Q) -> PVal {
        let mut out = self.space.zero();
        for (e, p) in &ser.coeffs {
            if *e >= ser.order {
                continue;
            }
            out.add_assign(&self.lampoly(p).scale(&qpow(x0, *e)));
        }
        out
    }
}

/// Exponent vector of a λ-monomial.
pub fn lambda_exps(m: &Mono<PVar>, s: usize) -> Vec<u16> {
    let mut e = vec![0u16; s];
    for (v, k) in m {
        if let PVar::Lambda(j) = v {
            e[*j as usize] += *k as u16;
        }
    }
    e
}

/// A point on the curve near infinity, evaluated in a parameter space.
#[derive(Clone, Debug)]
pub struct Point {
    pub xi: Q,
    pub x: PVal,
    pub y: PVal,
    pub u: Vec<PVal>,
}

/// Precomputed local data for evaluating points.
#[derive(Clone, Debug)]
pub struct LocalData {
    pub y: LocalSeries,
    pub u: Vec<LocalSeries>,
}

impl LocalData {
    pub fn new(c: &CurveModel, depth: usize) -> Result<Self> {
        Ok(LocalData { y: y_series(c, depth.max(1))?, u: abel_series(c, depth)? })
    }

    pub fn point(&self, emb: &Embedding, xi: &Q) -> Point {
        let x = emb.space.constant(qpow(xi, -(emb.n as i64)));
        let y = emb.eval_series(&self.y, xi);
        let u = self.u.iter().map(|s| emb.eval_series(s, xi)).collect();
        Point { xi: xi.clone(), x, y, u }
    }
}

/// `x^a y^b` at a point.
pub fn hol_value(emb: &Embedding, p: &Point, h: &HolMono) -> PVal {
    let sp = &emb.space;
    sp.mul(&sp.pow(&p.x, h.a as u32), &sp.pow(&p.y, h.b as u32))
}

pub fn is_zero_series(s: &LocalSeries) -> bool {
    s.coeffs.iter().all(|(e, p)| *e >= s.order || p.is_zero())
}

pub fn leading(s: &LocalSeries) -> Option<(i64, Q)> {
    s.coeffs.iter().next().map(|(e, p)| (*e, p.terms.get(&Vec::new()).cloned().unwrap_or_else(Q::zero)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights() {
        assert_eq!(sigma_weight(&CurveModel::cyclic(2, 7).unwrap()).unwrap(), 6);
        assert_eq!(sigma_weight(&CurveModel::cyclic(3, 4).unwrap()).unwrap(), 5);
        assert_eq!(sigma_weight(&CurveModel::cyclic(2, 3).unwrap()).unwrap(), 1);
        let c = CurveModel::cyclic(3, 4).unwrap();
        let h: Vec<(usize, usize, usize)> = c.holomorphic().iter().map(|h| (h.w, h.a, h.b)).collect();
        assert_eq!(h, vec![(5, 0, 0), (2, 1, 0), (1, 0, 1)]);
    }

    #[test]
    fn y_series_residual() {
        for (n, s) in [(2, 3), (2, 5), (3, 4), (2, 7)] {
            let c = CurveModel::cyclic(n, s).unwrap();
            let y = y_series(&c, 20).unwrap();
            assert!(is_zero_series(&curve_residual(&c, &y)), "({n},{s})");
            assert!(y.is_homogeneous(-(s as i64), &c));
        }
    }

    #[test]
    fn abel_leading_terms() {
        let c = CurveModel::cyclic(2, 7).unwrap();
        let u = abel_series(&c, 12).unwrap();
        let lead: Vec<(i64, Q)> = u.iter().map(|s| leading(s).unwrap()).collect();
        assert_eq!(lead, vec![(5, qf(-1, 5)), (3, qf(-1, 3)), (1, q(-1))]);
        for (s, w) in u.iter().zip([5, 3, 1]) {
            assert!(s.is_homogeneous(w, &c));
        }
        let e = abel_series(&CurveModel::cyclic(2, 3).unwrap(), 0).unwrap();
        assert_eq!(e[0].coeffs.len(), 1);
    }

    #[test]
    fn general_model_rejected() {
        let c = CurveModel::general(3, 5).unwrap();
        assert_eq!(c.degree_bounds, vec![1, 3, 5]);
        assert!(y_series(&c, 5).is_err());
    }

    #[test]
    fn specialized_embedding() {
        let c = CurveModel::cyclic(2, 5).unwrap();
        let emb = Embedding::new(&c, Lambdas::Specialized(vec![q(1), q(2), q(3), q(4), q(5)]), 10);
        let v = emb.lambda_mono(&[0, 0, 0, 1, 1], &q(1));
        // λ_3 λ_4 = 4·5 t^{2+1}
        assert_eq!(v.0[3], q(20));
    }
}
