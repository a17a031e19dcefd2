//! Weight-truncated polynomial rings for curve parameters.
//!
//! A [`ParamSpace`] fixes the variables, their positive weights and a
//! maximal weight; [`PVal`] is a dense coefficient vector over the
//! monomials of weight at most that bound. Symbolic work uses one variable
//! per `λ_j`; specialized work uses a single grading variable `t` with
//! `λ_j = a_j t^{s−j}`, so the weight grading survives specialization.

use std::collections::HashMap;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::rational::Q;

#[derive(Debug)]
pub struct ParamSpace {
    pub weights: Vec<u32>,
    pub max_weight: u32,
    monos: Vec<Vec<u16>>,
    mono_weight: Vec<u32>,
    index: HashMap<Vec<u16>, usize>,
    /// Product table grouped by output weight: `(i, j, k)` with `m_i m_j = m_k`.
    table: Vec<Vec<(u32, u32, u32)>>,
    /// For each monomial `m_k`, pairs `(i, l)` with `m_i m_k = m_l`.
    shifts: Vec<Vec<(u32, u32)>>,
}

pub type Space = Arc<ParamSpace>;

impl ParamSpace {
    pub fn new(weights: Vec<u32>, max_weight: u32) -> Space {
        let mut monos: Vec<Vec<u16>> = Vec::new();
        fn rec(w: &[u32], j: usize, rem: u32, cur: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
            if j == w.len() {
                out.push(cur.clone());
                return;
            }
            let mut k = 0u32;
            while k * w[j] <= rem {
                cur.push(k as u16);
                rec(w, j + 1, rem - k * w[j], cur, out);
                cur.pop();
                k += 1;
            }
        }
        rec(&weights, 0, max_weight, &mut Vec::new(), &mut monos);
        let wt = |m: &Vec<u16>| m.iter().zip(&weights).map(|(&e, &w)| e as u32 * w).sum::<u32>();
        monos.sort_by(|a, b| wt(a).cmp(&wt(b)).then(a.cmp(b)));
        let mono_weight: Vec<u32> = monos.iter().map(wt).collect();
        let index: HashMap<Vec<u16>, usize> = monos.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let mut table = vec![Vec::new(); max_weight as usize + 1];
        for i in 0..monos.len() {
            for j in 0..monos.len() {
                let w = mono_weight[i] + mono_weight[j];
                if w > max_weight {
                    break;
                }
                let prod: Vec<u16> = monos[i].iter().zip(&monos[j]).map(|(a, b)| a + b).collect();
                table[w as usize].push((i as u32, j as u32, index[&prod] as u32));
            }
        }
        let mut shifts = vec![Vec::new(); monos.len()];
        for grp in &table {
            for &(i, j, k) in grp {
                shifts[j as usize].push((i, k));
            }
        }
        Arc::new(ParamSpace { weights, max_weight, monos, mono_weight, index, table, shifts })
    }

    pub fn nvars(&self) -> usize {
        self.weights.len()
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    pub fn mono(&self, k: usize) -> &[u16] {
        &self.monos[k]
    }

    pub fn mono_weight(&self, k: usize) -> u32 {
        self.mono_weight[k]
    }

    pub fn index_of(&self, m: &[u16]) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// Indices of monomials of exactly weight `w`.
    pub fn monos_of_weight(&self, w: u32) -> Vec<usize> {
        (0..self.monos.len()).filter(|&k| self.mono_weight[k] == w).collect()
    }

    pub fn zero(&self) -> PVal {
        PVal(vec![Q::zero(); self.monos.len()])
    }

    pub fn constant(&self, c: Q) -> PVal {
        let mut v = self.zero();
        v.0[0] = c;
        v
    }

    /// `c · m_k`, or zero if the monomial is beyond the truncation.
    pub fn monomial(&self, exps: &[u16], c: Q) -> PVal {
        let mut v = self.zero();
        if let Some(k) = self.index_of(exps) {
            v.0[k] = c;
        }
        v
    }

    pub fn mul(&self, a: &PVal, b: &PVal) -> PVal {
        self.mul_upto(a, b, self.max_weight)
    }

    /// Product truncated at weight `w`.
    pub fn mul_upto(&self, a: &PVal, b: &PVal, w: u32) -> PVal {
        let mut out = self.zero();
        let az: Vec<bool> = a.0.iter().map(|x| x.is_zero()).collect();
        let bz: Vec<bool> = b.0.iter().map(|x| x.is_zero()).collect();
        for grp in self.table.iter().take(w.min(self.max_weight) as usize + 1) {
            for &(i, j, k) in grp {
                if az[i as usize] || bz[j as usize] {
                    continue;
                }
                out.0[k as usize] += &a.0[i as usize] * &b.0[j as usize];
            }
        }
        out
    }

    /// Only the weight-`w` part of the product.
    pub fn mul_component(&self, a: &PVal, b: &PVal, w: u32) -> PVal {
        let mut out = self.zero();
        if w > self.max_weight {
            return out;
        }
        for &(i, j, k) in &self.table[w as usize] {
            let (x, y) = (&a.0[i as usize], &b.0[j as usize]);
            if x.is_zero() || y.is_zero() {
                continue;
            }
            out.0[k as usize] += x * y;
        }
        out
    }

    /// `c · m_k · a`.
    pub fn mul_mono(&self, k: usize, c: &Q, a: &PVal) -> PVal {
        let mut out = self.zero();
        for &(i, l) in &self.shifts[k] {
            let x = &a.0[i as usize];
            if !x.is_zero() {
                out.0[l as usize] = x * c;
            }
        }
        out
    }

    /// `a += c · m_k · b`.
    pub fn add_mul_mono(&self, a: &mut PVal, k: usize, c: &Q, b: &PVal) {
        for &(i, l) in &self.shifts[k] {
            let x = &b.0[i as usize];
            if !x.is_zero() {
                a.0[l as usize] += x * c;
            }
        }
    }

    pub fn pow(&self, a: &PVal, e: u32) -> PVal {
        let mut r = self.constant(Q::one());
        for _ in 0..e {
            r = self.mul(&r, a);
        }
        r
    }

    /// Keeps only the part of weight `w`.
    pub fn component(&self, a: &PVal, w: u32) -> PVal {
        let mut out = self.zero();
        for k in 0..a.0.len() {
            if self.mono_weight[k] == w {
                out.0[k] = a.0[k].clone();
            }
        }
        out
    }
}

/// Dense truncated polynomial over a [`ParamSpace`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PVal(pub Vec<Q>);

impl PVal {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| x.is_zero())
    }

    pub fn constant_term(&self) -> &Q {
        &self.0[0]
    }

    pub fn add_assign(&mut self, o: &PVal) {
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            if !b.is_zero() {
                *a += b;
            }
        }
    }

    pub fn sub_assign(&mut self, o: &PVal) {
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            if !b.is_zero() {
                *a -= b;
            }
        }
    }

    pub fn add(&self, o: &PVal) -> PVal {
        let mut r = self.clone();
        r.add_assign(o);
        r
    }

    pub fn sub(&self, o: &PVal) -> PVal {
        let mut r = self.clone();
        r.sub_assign(o);
        r
    }

    pub fn scale(&self, c: &Q) -> PVal {
        PVal(self.0.iter().map(|x| if x.is_zero() { Q::zero() } else { x * c }).collect())
    }

    pub fn neg(&self) -> PVal {
        PVal(self.0.iter().map(|x| -x).collect())
    }

    /// Sum of all coefficients, i.e. the value at `t = 1` in the specialized
    /// grading.
    pub fn total(&self) -> Q {
        self.0.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn truncated_products() {
        let sp = ParamSpace::new(vec![2, 3], 6);
        let a = sp.monomial(&[1, 0], q(1)).add(&sp.constant(q(1)));
        let b = sp.monomial(&[0, 1], q(2));
        let ab = sp.mul(&a, &b);
        assert_eq!(ab.0[sp.index_of(&[1, 1]).unwrap()], q(2));
        let a3 = sp.pow(&a, 4);
        // (1+x)^4 truncated at weight 6 keeps x^0..x^3
        assert_eq!(a3.0[sp.index_of(&[3, 0]).unwrap()], q(4));
        assert_eq!(sp.mul_mono(sp.index_of(&[0, 1]).unwrap(), &q(3), &a), sp.mul(&sp.monomial(&[0, 1], q(3)), &a));
        let c = sp.mul_component(&a, &b, 5);
        assert_eq!(c, sp.component(&ab, 5));
    }
}
