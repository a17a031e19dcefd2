//! Sparse commutative polynomials over an exact coefficient ring.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::cyclo::Cyclo;
use crate::rational::Q;

/// Exact coefficient ring used by [`Poly`].
pub trait Coeff: Clone + PartialEq {
    fn is_zero_c(&self) -> bool;
    fn add_c(&self, o: &Self) -> Self;
    fn mul_c(&self, o: &Self) -> Self;
    fn neg_c(&self) -> Self;
    fn scale_q(&self, x: &Q) -> Self;
}

impl Coeff for Q {
    fn is_zero_c(&self) -> bool {
        self.is_zero()
    }
    fn add_c(&self, o: &Self) -> Self {
        self + o
    }
    fn mul_c(&self, o: &Self) -> Self {
        self * o
    }
    fn neg_c(&self) -> Self {
        -self
    }
    fn scale_q(&self, x: &Q) -> Self {
        self * x
    }
}

impl Coeff for Cyclo {
    fn is_zero_c(&self) -> bool {
        self.is_zero()
    }
    fn add_c(&self, o: &Self) -> Self {
        self + o
    }
    fn mul_c(&self, o: &Self) -> Self {
        self * o
    }
    fn neg_c(&self) -> Self {
        -self
    }
    fn scale_q(&self, x: &Q) -> Self {
        self.scale(x)
    }
}

/// A monomial: variables with positive exponents, sorted by variable.
pub type Mono<V> = Vec<(V, u32)>;

pub fn mono_mul<V: Ord + Clone>(a: &Mono<V>, b: &Mono<V>) -> Mono<V> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j].clone());
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0.clone(), a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

pub fn mono_degree<V>(a: &Mono<V>) -> u32 {
    a.iter().map(|(_, e)| e).sum()
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Poly<V: Ord, C> {
    pub terms: BTreeMap<Mono<V>, C>,
}

impl<V: Ord, C> Default for Poly<V, C> {
    fn default() -> Self {
        Poly { terms: BTreeMap::new() }
    }
}

impl<V: Ord + Clone, C: Coeff> Poly<V, C> {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: C) -> Self {
        Self::term(Vec::new(), c)
    }

    pub fn term(mono: Mono<V>, c: C) -> Self {
        let mut p = Self::zero();
        p.add_term(mono, c);
        p
    }

    pub fn var(v: V, one: C) -> Self {
        Self::term(vec![(v, 1)], one)
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

    pub fn add_term(&mut self, mono: Mono<V>, c: C) {
        if c.is_zero_c() {
            return;
        }
        match self.terms.get_mut(&mono) {
            Some(e) => {
                let s = e.add_c(&c);
                if s.is_zero_c() {
                    self.terms.remove(&mono);
                } else {
                    *e = s;
                }
            }
            None => {
                self.terms.insert(mono, c);
            }
        }
    }

    pub fn add_assign(&mut self, o: &Self) {
        for (m, c) in &o.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        r.add_assign(o);
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (m, c) in &o.terms {
            r.add_term(m.clone(), c.neg_c());
        }
        r
    }

    pub fn neg(&self) -> Self {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg_c())).collect() }
    }

    pub fn scale(&self, x: &Q) -> Self {
        let mut r = Self::zero();
        for (m, c) in &self.terms {
            r.add_term(m.clone(), c.scale_q(x));
        }
        r
    }

    pub fn scale_c(&self, x: &C) -> Self {
        let mut r = Self::zero();
        for (m, c) in &self.terms {
            r.add_term(m.clone(), c.mul_c(x));
        }
        r
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = Self::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                r.add_term(mono_mul(m1, m2), c1.mul_c(c2));
            }
        }
        r
    }

    pub fn pow(&self, e: u32, one: C) -> Self {
        let mut r = Self::constant(one);
        for _ in 0..e {
            r = r.mul(self);
        }
        r
    }

    /// Replaces every variable through `f`, which returns a polynomial.
    pub fn substitute<W: Ord + Clone>(&self, one: C, mut f: impl FnMut(&V) -> Poly<W, C>) -> Poly<W, C> {
        let mut cache: BTreeMap<V, Poly<W, C>> = BTreeMap::new();
        let mut out = Poly::<W, C>::zero();
        for (m, c) in &self.terms {
            let mut t = Poly::<W, C>::constant(c.clone());
            for (v, e) in m {
                let base = cache.entry(v.clone()).or_insert_with(|| f(v)).clone();
                t = t.mul(&base.pow(*e, one.clone()));
            }
            out.add_assign(&t);
        }
        out
    }

    /// Every variable occurring in the polynomial.
    pub fn variables(&self) -> Vec<V> {
        let mut vs: Vec<V> = self.terms.keys().flat_map(|m| m.iter().map(|(v, _)| v.clone())).collect();
        vs.sort();
        vs.dedup();
        vs
    }
}
