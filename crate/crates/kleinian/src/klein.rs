//! The polynomial `F(x,y;z,w)` of the fundamental bidifferential
//!
//! `ω(P,Q) = F(P,Q) dx dz / ((x−z)² n² y^{n−1} w^{n−1})`
//!
//! built from the non-symmetric part `F_Ω` plus `(x−z)² Σ h_i(P) r_i(Q)`.
//! The `r_i` are fixed by symmetry modulo the curve equation and by a band
//! condition on `|wt_P − wt_Q|`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::curve::{CurveModel, Embedding, Point};
use crate::error::{Error, Result};
use crate::linalg;
use crate::params::PVal;
use crate::rational::{q, Q};

/// `x^a y^b z^c w^d λ^β`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KMono {
    pub a: u32,
    pub b: u32,
    pub c: u32,
    pub d: u32,
    pub lam: Vec<u16>,
}

/// Polynomial in `x, y, z, w, λ`, kept in normal form `b, d < n`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KPoly {
    pub terms: BTreeMap<KMono, Q>,
}

struct Ctx {
    n: u32,
    s: u32,
    nl: usize,
}

impl Ctx {
    fn mono(&self, a: u32, b: u32, c: u32, d: u32) -> KMono {
        KMono { a, b, c, d, lam: vec![0; self.nl] }
    }

    fn single(&self, m: KMono, v: Q) -> KPoly {
        let mut p = KPoly::default();
        p.add_term(m, v);
        self.normal(p)
    }

    fn lam(&self, j: usize, m: KMono) -> KMono {
        let mut m = m;
        m.lam[j] += 1;
        m
    }

    fn normal(&self, p: KPoly) -> KPoly {
        let mut out = KPoly::default();
        let mut stack: Vec<(KMono, Q)> = p.terms.into_iter().collect();
        while let Some((m, v)) = stack.pop() {
            if m.b >= self.n {
                let base = KMono { a: m.a, b: m.b - self.n, ..m.clone() };
                stack.push((KMono { a: base.a + self.s, ..base.clone() }, v.clone()));
                for j in 0..self.nl {
                    stack.push((self.lam(j, KMono { a: base.a + j as u32, ..base.clone() }), v.clone()));
                }
            } else if m.d >= self.n {
                let base = KMono { d: m.d - self.n, ..m.clone() };
                stack.push((KMono { c: base.c + self.s, ..base.clone() }, v.clone()));
                for j in 0..self.nl {
                    stack.push((self.lam(j, KMono { c: base.c + j as u32, ..base.clone() }), v.clone()));
                }
            } else {
                out.add_term(m, v);
            }
        }
        out
    }

    fn mul(&self, x: &KPoly, y: &KPoly) -> KPoly {
        let mut r = KPoly::default();
        for (m1, v1) in &x.terms {
            for (m2, v2) in &y.terms {
                let lam = m1.lam.iter().zip(&m2.lam).map(|(p, q)| p + q).collect();
                let m = KMono { a: m1.a + m2.a, b: m1.b + m2.b, c: m1.c + m2.c, d: m1.d + m2.d, lam };
                r.add_term(m, v1 * v2);
            }
        }
        self.normal(r)
    }

    fn lam_monos(&self, weight: i64) -> Vec<Vec<u16>> {
        let mut out = Vec::new();
        if weight < 0 {
            return out;
        }
        fn rec(j: usize, rem: i64, cur: &mut Vec<u16>, ctx: &Ctx, out: &mut Vec<Vec<u16>>) {
            if j == ctx.nl {
                if rem == 0 {
                    out.push(cur.clone());
                }
                return;
            }
            let w = (ctx.n * (ctx.s - j as u32)) as i64;
            for k in 0..=rem / w {
                cur.push(k as u16);
                rec(j + 1, rem - k * w, cur, ctx, out);
                cur.pop();
            }
        }
        rec(0, weight, &mut Vec::new(), self, &mut out);
        out
    }
}

impl KPoly {
    pub fn add_term(&mut self, m: KMono, v: Q) {
        if v.is_zero() {
            return;
        }
        let e = self.terms.entry(m.clone()).or_insert_with(Q::zero);
        *e += v;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add_scaled(&mut self, o: &KPoly, k: &Q) {
        for (m, v) in &o.terms {
            self.add_term(m.clone(), v * k);
        }
    }

    /// Exchange `(x,y) ↔ (z,w)`.
    pub fn swap(&self) -> KPoly {
        let mut r = KPoly::default();
        for (m, v) in &self.terms {
            r.add_term(KMono { a: m.c, b: m.d, c: m.a, d: m.b, lam: m.lam.clone() }, v.clone());
        }
        r
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.swap() == *self
    }
}

/// Solved Klein polynomial for a curve.
#[derive(Clone, Debug)]
pub struct KleinForm {
    pub n: usize,
    pub s: usize,
    pub poly: KPoly,
    /// Band width used to pin down `F`.
    pub band: u32,
    /// Number of parameters left free (and set to zero) after the band rule.
    pub free: usize,
}

fn ctx(c: &CurveModel) -> Ctx {
    Ctx { n: c.n as u32, s: c.s as u32, nl: c.s }
}

/// `F_Ω = n w^{n−1} Σ_k y^{n−k} w^{k−1} + (x−z) p′(z) Σ_{k≥2} (k−1) y^{n−k} w^{k−2}`.
fn f_omega(cx: &Ctx) -> KPoly {
    let (n, s) = (cx.n, cx.s);
    let mut pz = cx.single(cx.mono(0, 0, s - 1, 0), q(s as i64));
    for j in 1..s as usize {
        pz.add_term(cx.lam(j, cx.mono(0, 0, j as u32 - 1, 0)), q(j as i64));
    }
    let mut x_z = cx.single(cx.mono(1, 0, 0, 0), q(1));
    x_z.add_term(cx.mono(0, 0, 1, 0), q(-1));
    let xzp = cx.mul(&x_z, &pz);
    let mut f = KPoly::default();
    for k in 1..=n {
        f.add_scaled(&cx.single(cx.mono(0, n - k, 0, n - 1 + k - 1), q(n as i64)), &q(1));
        if k >= 2 {
            let t = cx.single(cx.mono(0, n - k, 0, k - 2), q((k - 1) as i64));
            f.add_scaled(&cx.mul(&xzp, &t), &q(1));
        }
    }
    f
}

/// Solve for `F` with the smallest band width `t ≥ n` giving a consistent
/// system.
pub fn klein_polynomial(c: &CurveModel) -> Result<KleinForm> {
    if !c.cyclic {
        return Err(Error::Invalid("Klein polynomial requires a cyclic curve".into()));
    }
    let cx = ctx(c);
    let g = c.genus() as i64;
    let hol = c.holomorphic();
    let fo = f_omega(&cx);
    let mut x_z = cx.single(cx.mono(1, 0, 0, 0), q(1));
    x_z.add_term(cx.mono(0, 0, 1, 0), q(-1));
    let xz2 = cx.mul(&x_z, &x_z);

    let mut cols: Vec<KPoly> = Vec::new();
    for h in &hol {
        let tw = 2 * g - 1 + h.w as i64;
        let hp = cx.single(cx.mono(h.a as u32, h.b as u32, 0, 0), q(1));
        let base = cx.mul(&xz2, &hp);
        for d in 0..cx.n {
            for cc in 0..=(tw / cx.n as i64) {
                let rest = tw - cx.n as i64 * cc - (cx.s * d) as i64;
                for be in cx.lam_monos(rest) {
                    let m = KMono { a: 0, b: 0, c: cc as u32, d, lam: be };
                    cols.push(cx.mul(&base, &cx.single(m, q(1))));
                }
            }
        }
    }
    let nu = cols.len();
    let anti: Vec<KPoly> = cols.iter().map(|p| {
        let mut a = p.clone();
        a.add_scaled(&p.swap(), &q(-1));
        a
    }).collect();
    let mut rhs = fo.clone();
    rhs.add_scaled(&fo.swap(), &q(-1));

    let mut sym_rows = Vec::new();
    let mut keys: std::collections::BTreeSet<&KMono> = rhs.terms.keys().collect();
    for a in &anti {
        keys.extend(a.terms.keys());
    }
    for k in &keys {
        let mut row: Vec<Q> = anti.iter().map(|a| a.terms.get(*k).cloned().unwrap_or_else(Q::zero)).collect();
        row.push(-rhs.terms.get(*k).cloned().unwrap_or_else(Q::zero));
        sym_rows.push(row);
    }

    let wt = |m: &KMono| -> (i64, i64) { ((cx.n * m.a + cx.s * m.b) as i64, (cx.n * m.c + cx.s * m.d) as i64) };
    let max_t = (2 * g as u32 + 2) * cx.n * cx.s;
    for t in cx.n..=max_t {
        let bad = |m: &KMono| {
            let (p, qq) = wt(m);
            (p - qq).unsigned_abs() > t as u64
        };
        let mut bkeys: std::collections::BTreeSet<&KMono> = fo.terms.keys().filter(|m| bad(m)).collect();
        for c in &cols {
            bkeys.extend(c.terms.keys().filter(|m| bad(m)));
        }
        let mut rows = sym_rows.clone();
        for k in &bkeys {
            let mut row: Vec<Q> = cols.iter().map(|c| c.terms.get(*k).cloned().unwrap_or_else(Q::zero)).collect();
            row.push(-fo.terms.get(*k).cloned().unwrap_or_else(Q::zero));
            rows.push(row);
        }
        let sol = linalg::solve(rows, nu);
        if sol.inconsistent {
            continue;
        }
        let mut f = fo.clone();
        for (c, v) in cols.iter().zip(&sol.x[0]) {
            f.add_scaled(c, v);
        }
        if !f.is_symmetric() {
            return Err(Error::Consistency("Klein polynomial is not symmetric".into()));
        }
        return Ok(KleinForm { n: c.n, s: c.s, poly: f, band: t, free: sol.nullity() });
    }
    Err(Error::Consistency("no band width gives a consistent Klein polynomial".into()))
}

/// BEL form for hyperelliptic curves: `2yw + Σ_k x^k z^k (2λ_{2k} + λ_{2k+1}(x+z))`.
pub fn bel_polynomial(c: &CurveModel) -> KPoly {
    let cx = ctx(c);
    let mut f = KPoly::default();
    f.add_term(cx.mono(0, 1, 0, 1), q(2));
    let lam = |j: usize, m: KMono| if j < c.s { Some(cx.lam(j, m)) } else if j == c.s { Some(m) } else { None };
    for k in 0..=c.genus() as u32 {
        if let Some(m) = lam(2 * k as usize, cx.mono(k, 0, k, 0)) {
            f.add_term(m, q(2));
        }
        for (a, cc) in [(k + 1, k), (k, k + 1)] {
            if let Some(m) = lam(2 * k as usize + 1, cx.mono(a, 0, cc, 0)) {
                f.add_term(m, q(1));
            }
        }
    }
    f
}

impl KleinForm {
    /// `F(P,Q)` in the embedding's parameter space.
    pub fn eval(&self, emb: &Embedding, p: &Point, qp: &Point) -> PVal {
        let sp = &emb.space;
        let pow_cache = |v: &PVal, k: u32, cache: &mut Vec<PVal>| -> PVal {
            while cache.len() <= k as usize {
                let next = if cache.is_empty() { sp.constant(Q::one()) } else { sp.mul(cache.last().unwrap(), v) };
                cache.push(next);
            }
            cache[k as usize].clone()
        };
        let (mut cx, mut cy, mut cz, mut cw) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let mut out = sp.zero();
        for (m, v) in &self.poly.terms {
            let l = emb.lambda_mono(&m.lam, v);
            let a = sp.mul(&pow_cache(&p.x, m.a, &mut cx), &pow_cache(&p.y, m.b, &mut cy));
            let b = sp.mul(&pow_cache(&qp.x, m.c, &mut cz), &pow_cache(&qp.y, m.d, &mut cw));
            out.add_assign(&sp.mul(&l, &sp.mul(&a, &b)));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyperelliptic_matches_bel() {
        for s in [3, 5, 7] {
            let c = CurveModel::cyclic(2, s).unwrap();
            let k = klein_polynomial(&c).unwrap();
            assert_eq!(k.poly, bel_polynomial(&c), "s = {s}");
            assert_eq!(k.band, 2);
        }
    }

    #[test]
    fn trigonal_is_symmetric() {
        let c = CurveModel::cyclic(3, 4).unwrap();
        let k = klein_polynomial(&c).unwrap();
        assert!(k.poly.is_symmetric());
        assert_eq!(k.band, 7);
        assert_eq!(k.free, 1);
    }
}
