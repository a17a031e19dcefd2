//! Polynomials in `u_1..u_g` whose coefficients live in a graded parameter
//! ring. Truncation happens only in the parameter grading, so every stored
//! coefficient is exact.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::params::{PVal, Space};
use crate::rational::{qpow, Q};

#[derive(Clone, Debug)]
pub struct WSeries {
    pub space: Space,
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u32>, PVal>,
}

impl PartialEq for WSeries {
    fn eq(&self, o: &Self) -> bool {
        self.nvars == o.nvars && self.terms == o.terms
    }
}

pub fn exp_weight(e: &[u32], weights: &[usize]) -> i64 {
    e.iter().zip(weights).map(|(&k, &w)| k as i64 * w as i64).sum()
}

impl WSeries {
    pub fn zero(space: &Space, nvars: usize) -> Self {
        WSeries { space: space.clone(), nvars, terms: BTreeMap::new() }
    }

    pub fn constant(space: &Space, nvars: usize, c: PVal) -> Self {
        let mut s = Self::zero(space, nvars);
        s.add_term(vec![0; nvars], &c);
        s
    }

    pub fn one(space: &Space, nvars: usize) -> Self {
        Self::constant(space, nvars, space.constant(Q::from_integer(1.into())))
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

    pub fn add_term(&mut self, e: Vec<u32>, v: &PVal) {
        if v.is_zero() {
            return;
        }
        match self.terms.get_mut(&e) {
            Some(x) => {
                x.add_assign(v);
                if x.is_zero() {
                    self.terms.remove(&e);
                }
            }
            None => {
                self.terms.insert(e, v.clone());
            }
        }
    }

    pub fn add_assign(&mut self, o: &WSeries) {
        for (e, v) in &o.terms {
            self.add_term(e.clone(), v);
        }
    }

    pub fn sub_assign(&mut self, o: &WSeries) {
        for (e, v) in &o.terms {
            self.add_term(e.clone(), &v.neg());
        }
    }

    pub fn add(&self, o: &WSeries) -> WSeries {
        let mut r = self.clone();
        r.add_assign(o);
        r
    }

    pub fn sub(&self, o: &WSeries) -> WSeries {
        let mut r = self.clone();
        r.sub_assign(o);
        r
    }

    pub fn scale(&self, c: &Q) -> WSeries {
        if c.is_zero() {
            return Self::zero(&self.space, self.nvars);
        }
        WSeries { space: self.space.clone(), nvars: self.nvars, terms: self.terms.iter().map(|(e, v)| (e.clone(), v.scale(c))).collect() }
    }

    pub fn mul_pval(&self, p: &PVal) -> WSeries {
        let mut r = Self::zero(&self.space, self.nvars);
        for (e, v) in &self.terms {
            r.add_term(e.clone(), &self.space.mul(v, p));
        }
        r
    }

    pub fn mul(&self, o: &WSeries) -> WSeries {
        let mut acc: BTreeMap<Vec<u32>, PVal> = BTreeMap::new();
        for (e1, v1) in &self.terms {
            for (e2, v2) in &o.terms {
                let p = self.space.mul(v1, v2);
                if p.is_zero() {
                    continue;
                }
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                match acc.get_mut(&e) {
                    Some(x) => x.add_assign(&p),
                    None => {
                        acc.insert(e, p);
                    }
                }
            }
        }
        acc.retain(|_, v| !v.is_zero());
        WSeries { space: self.space.clone(), nvars: self.nvars, terms: acc }
    }

    pub fn pow(&self, k: u32) -> WSeries {
        let mut r = Self::one(&self.space, self.nvars);
        for _ in 0..k {
            r = r.mul(self);
        }
        r
    }

    /// `∂/∂u_i` with `i` zero-based.
    pub fn derive(&self, i: usize) -> WSeries {
        let mut r = Self::zero(&self.space, self.nvars);
        for (e, v) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            r.add_term(e2, &v.scale(&Q::from_integer(e[i].into())));
        }
        r
    }

    /// Restriction to the ray `u_i = r_i τ^{w_i}`, giving a series in `τ`.
    pub fn restrict_ray(&self, r: &[Q], weights: &[usize]) -> WSeries {
        let mut out = Self::zero(&self.space, 1);
        for (e, v) in &self.terms {
            let mut c = Q::from_integer(1.into());
            for (k, x) in e.iter().zip(r) {
                if *k > 0 {
                    c *= qpow(x, *k as i64);
                }
            }
            out.add_term(vec![exp_weight(e, weights) as u32], &v.scale(&c));
        }
        out
    }

    /// Sum of parameter components (the value at `t = 1` for a specialized
    /// ring), restricted to monomials of weight at most `cutoff`.
    pub fn collapse(&self, weights: &[usize], cutoff: i64) -> BTreeMap<Vec<u32>, Q> {
        self.terms
            .iter()
            .filter(|(e, _)| exp_weight(e, weights) <= cutoff)
            .map(|(e, v)| (e.clone(), v.total()))
            .filter(|(_, v)| !v.is_zero())
            .collect()
    }

    /// Common value of `wt(u^α) − wt(parameter monomial)` over all terms, if
    /// the series is homogeneous.
    pub fn homogeneous_weight(&self, weights: &[usize]) -> Option<Option<i64>> {
        let mut w = None;
        for (e, v) in &self.terms {
            let ue = exp_weight(e, weights);
            for (k, x) in v.0.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                let t = ue - self.space.mono_weight(k) as i64;
                match w {
                    None => w = Some(t),
                    Some(w0) if w0 != t => return None,
                    _ => {}
                }
            }
        }
        Some(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamSpace;
    use crate::rational::q;

    #[test]
    fn arithmetic() {
        let sp = ParamSpace::new(vec![2], 4);
        let mut a = WSeries::zero(&sp, 2);
        a.add_term(vec![1, 0], &sp.constant(q(1)));
        a.add_term(vec![0, 1], &sp.monomial(&[1], q(2)));
        let b = a.mul(&a);
        assert_eq!(b.terms[&vec![1, 1]], sp.monomial(&[1], q(4)));
        assert_eq!(b.terms[&vec![0, 2]], sp.monomial(&[2], q(4)));
        let d = b.derive(0);
        assert_eq!(d.terms[&vec![1, 0]], sp.constant(q(2)));
        assert_eq!(b.homogeneous_weight(&[1, 3]), Some(Some(2)));
        let r = a.restrict_ray(&[q(2), q(3)], &[1, 3]);
        assert_eq!(r.terms[&vec![1]], sp.constant(q(2)));
        assert_eq!(r.terms[&vec![3]], sp.monomial(&[1], q(6)));
    }
}
