//! Exact arithmetic in `ℚ(ζ)` for a primitive `m`-th root of unity `ζ`.
//!
//! Elements are coefficient vectors in the power basis `1, ζ, …, ζ^{φ(m)−1}`;
//! products are reduced modulo the cyclotomic polynomial `Φ_m`.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{One, Zero};

use crate::rational::{fmt_q, q, Q};

/// Integer coefficients of `Φ_m`, lowest degree first.
pub fn cyclotomic_poly(m: u32) -> Vec<i64> {
    // x^m - 1 divided by Φ_d for every proper divisor d.
    let mut num = vec![0i64; m as usize + 1];
    num[0] = -1;
    num[m as usize] = 1;
    for d in 1..m {
        if m % d == 0 {
            num = exact_div(&num, &cyclotomic_poly(d));
        }
    }
    num
}

fn exact_div(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut rem = a.to_vec();
    let db = b.len() - 1;
    let lead = *b.last().unwrap();
    let mut quo = vec![0i64; a.len() - db];
    for k in (0..quo.len()).rev() {
        let c = rem[k + db] / lead;
        quo[k] = c;
        for (j, &bj) in b.iter().enumerate() {
            rem[k + j] -= c * bj;
        }
    }
    debug_assert!(rem.iter().all(|&x| x == 0));
    quo
}

/// `ζ^k` for `k < m` written in the power basis of `ℚ(ζ)`.
fn power_table(m: u32) -> Arc<Vec<Vec<Q>>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<Vec<Q>>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&m) {
        return t.clone();
    }
    let phi = cyclotomic_poly(m);
    let deg = phi.len() - 1;
    let mut table = Vec::with_capacity(m as usize);
    let mut cur = vec![Q::zero(); deg];
    cur[0] = Q::one();
    for _ in 0..m {
        table.push(cur.clone());
        // multiply by ζ and reduce the overflow with Φ_m (monic)
        let top = cur[deg - 1].clone();
        let mut next = vec![Q::zero(); deg];
        for i in (1..deg).rev() {
            next[i] = cur[i - 1].clone();
        }
        for i in 0..deg {
            next[i] -= &top * q(phi[i]);
        }
        cur = next;
    }
    let t = Arc::new(table);
    cache.lock().unwrap().insert(m, t.clone());
    t
}

/// An element of `ℚ(ζ_m)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cyclo {
    m: u32,
    c: Vec<Q>,
}

impl Cyclo {
    pub fn degree(m: u32) -> usize {
        cyclotomic_poly(m).len() - 1
    }

    pub fn zero(m: u32) -> Self {
        Cyclo { m, c: vec![Q::zero(); Self::degree(m)] }
    }

    pub fn from_q(m: u32, x: Q) -> Self {
        let mut z = Self::zero(m);
        z.c[0] = x;
        z
    }

    pub fn one(m: u32) -> Self {
        Self::from_q(m, Q::one())
    }

    /// `ζ^k`, any integer `k`.
    pub fn zeta_pow(m: u32, k: i64) -> Self {
        let k = k.rem_euclid(m as i64) as usize;
        Cyclo { m, c: power_table(m)[k].clone() }
    }

    pub fn order(&self) -> u32 {
        self.m
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.is_zero())
    }

    /// The rational value, if every non-constant coefficient vanishes.
    pub fn as_rational(&self) -> Option<Q> {
        if self.c[1..].iter().all(|x| x.is_zero()) {
            Some(self.c[0].clone())
        } else {
            None
        }
    }

    pub fn scale(&self, x: &Q) -> Self {
        Cyclo { m: self.m, c: self.c.iter().map(|a| a * x).collect() }
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.m, other.m, "mixing roots of unity of different orders");
    }
}

impl Add for &Cyclo {
    type Output = Cyclo;
    fn add(self, o: &Cyclo) -> Cyclo {
        self.check(o);
        Cyclo { m: self.m, c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Cyclo {
    type Output = Cyclo;
    fn sub(self, o: &Cyclo) -> Cyclo {
        self.check(o);
        Cyclo { m: self.m, c: self.c.iter().zip(&o.c).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &Cyclo {
    type Output = Cyclo;
    fn neg(self) -> Cyclo {
        Cyclo { m: self.m, c: self.c.iter().map(|a| -a).collect() }
    }
}

impl Mul for &Cyclo {
    type Output = Cyclo;
    fn mul(self, o: &Cyclo) -> Cyclo {
        self.check(o);
        let table = power_table(self.m);
        let deg = self.c.len();
        let mut out = vec![Q::zero(); deg];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let ab = a * b;
                let k = (i + j) % self.m as usize;
                if k < deg {
                    out[k] += ab;
                } else {
                    for (t, r) in table[k].iter().enumerate() {
                        if !r.is_zero() {
                            out[t] += &ab * r;
                        }
                    }
                }
            }
        }
        Cyclo { m: self.m, c: out }
    }
}

impl fmt::Display for Cyclo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (k, c) in self.c.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let z = match k {
                0 => String::new(),
                1 => "ζ".to_string(),
                _ => format!("ζ^{k}"),
            };
            let cs = fmt_q(c);
            parts.push(match (k, cs.as_str()) {
                (0, _) => cs,
                (_, "1") => z,
                (_, "-1") => format!("-{z}"),
                _ => format!("{cs}{z}"),
            });
        }
        if parts.is_empty() {
            return write!(f, "0");
        }
        let mut s = parts[0].clone();
        for p in &parts[1..] {
            match p.strip_prefix('-') {
                Some(rest) => s.push_str(&format!(" - {rest}")),
                None => s.push_str(&format!(" + {p}")),
            }
        }
        write!(f, "{s}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclotomic_polys() {
        assert_eq!(cyclotomic_poly(2), vec![1, 1]);
        assert_eq!(cyclotomic_poly(3), vec![1, 1, 1]);
        assert_eq!(cyclotomic_poly(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn roots_sum_to_zero() {
        for m in 2..=12u32 {
            let mut s = Cyclo::zero(m);
            for k in 0..m {
                s = &s + &Cyclo::zeta_pow(m, k as i64);
            }
            assert!(s.is_zero(), "m={m}");
            let z = Cyclo::zeta_pow(m, 1);
            let mut p = Cyclo::one(m);
            for _ in 0..m {
                p = &p * &z;
            }
            assert_eq!(p, Cyclo::one(m));
        }
        assert_eq!(Cyclo::zeta_pow(2, 1).as_rational(), Some(q(-1)));
    }

    #[test]
    fn display() {
        let z = Cyclo::zeta_pow(3, 2);
        assert_eq!(z.to_string(), "-1 - ζ");
        assert_eq!(Cyclo::zero(4).to_string(), "0");
    }
}
