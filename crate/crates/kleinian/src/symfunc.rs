//! Monomial symmetric functions evaluated at the `m`-th roots of unity,
//! via Doubilet's power-sum expansion and by brute force.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::combinat::{all_set_partitions, mobius, multiset_permutations, z_weight, Partition};
use crate::cyclo::Cyclo;
use crate::error::{Error, Result};
use crate::rational::{factorial, fmt_q, q, Q};

/// `p_k(1, ζ, …, ζ^{m−1})`: `m` when `m | k` (so `p_0 = m`), else 0.
pub fn power_sum_at_roots(k: usize, m: usize) -> i64 {
    if k % m == 0 {
        m as i64
    } else {
        0
    }
}

/// A polynomial in power sums. Keys are power-sum indices sorted descending.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PowerSumPoly {
    pub terms: BTreeMap<Vec<usize>, Q>,
}

impl PowerSumPoly {
    pub fn add_term(&mut self, mut key: Vec<usize>, c: Q) {
        key.sort_unstable_by(|a, b| b.cmp(a));
        let e = self.terms.entry(key.clone()).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&key);
        }
    }

    /// Evaluates with `p_k ↦ power_sum_at_roots(k, m)`.
    pub fn eval_at_roots(&self, m: usize) -> Q {
        self.terms
            .iter()
            .map(|(k, c)| c * q(k.iter().map(|&i| power_sum_at_roots(i, m)).product()))
            .sum()
    }

    /// Replaces every `p_0` by the number `m`.
    pub fn reduce_p0(&self, m: usize) -> PowerSumPoly {
        let mut out = PowerSumPoly::default();
        for (k, c) in &self.terms {
            let zeros = k.iter().filter(|&&i| i == 0).count() as u32;
            let key: Vec<usize> = k.iter().copied().filter(|&i| i > 0).collect();
            out.add_term(key, c * q((m as i64).pow(zeros)));
        }
        out
    }

    pub fn is_homogeneous(&self, n: usize) -> bool {
        self.terms.keys().all(|k| k.iter().sum::<usize>() == n)
    }
}

impl fmt::Display for PowerSumPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        // fewest factors first, larger indices first within a length
        let mut keys: Vec<(&Vec<usize>, &Q)> = self.terms.iter().collect();
        keys.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then(b.0.cmp(a.0)));
        for (k, c) in keys {
            let mut mono = String::new();
            let mut i = 0;
            while i < k.len() {
                let mut j = i;
                while j < k.len() && k[j] == k[i] {
                    j += 1;
                }
                mono.push_str(&format!("p{}", k[i]));
                if j - i > 1 {
                    mono.push_str(&format!("^{}", j - i));
                }
                i = j;
            }
            let neg = c < &Q::zero();
            let a = if neg { -c.clone() } else { c.clone() };
            let cs = if a.is_one() && !mono.is_empty() { String::new() } else { fmt_q(&a) };
            let sep = match (first, neg) {
                (true, true) => "-",
                (true, false) => "",
                (false, true) => " - ",
                (false, false) => " + ",
            };
            write!(f, "{sep}{cs}{mono}")?;
            first = false;
        }
        Ok(())
    }
}

/// Doubilet's formula `M̂_ρ = Σ_π μ(π) p_{ν(ρ,π)}`, with `p_0` left unreduced.
pub fn doubilet_expand(rho: &Partition) -> PowerSumPoly {
    let m = rho.len();
    let pos: Vec<usize> = (0..m).collect();
    let mut out = PowerSumPoly::default();
    for pi in all_set_partitions(&pos) {
        let sizes: Vec<usize> = pi.iter().map(|b| b.len()).collect();
        let nu: Vec<usize> = pi.iter().map(|b| b.iter().map(|&i| rho.parts[i]).sum()).collect();
        out.add_term(nu, Q::from_integer(mobius(&sizes, m)));
    }
    out
}

/// `M_ρ` at `X_k = ζ^{k−1}`: Doubilet's form divided by `∏ η_i!`.
pub fn monomial_sym_at_roots(rho: &Partition, m: usize) -> Result<Q> {
    if rho.len() != m {
        return Err(Error::SizeMismatch { expected: m, got: rho.len() });
    }
    let hat = doubilet_expand(rho).eval_at_roots(m);
    let eta = rho.multiplicities().iter().fold(BigInt::one(), |acc, &e| acc * factorial(e));
    let val = hat / Q::from_integer(eta);
    if !val.is_integer() {
        return Err(Error::Consistency(format!("M_{:?} at roots is not integral: {val}", rho.parts)));
    }
    Ok(val)
}

/// `M_ρ` at `X_k = ζ^{k−1}` by summing `ζ^{z(ψ)}` over distinct orderings.
pub fn brute_force_monomial(rho: &Partition, m: usize) -> Result<Q> {
    if rho.len() != m {
        return Err(Error::SizeMismatch { expected: m, got: rho.len() });
    }
    let mut acc = Cyclo::zero(m.max(2) as u32);
    for psi in multiset_permutations(rho) {
        acc = &acc + &Cyclo::zeta_pow(m.max(2) as u32, z_weight(&psi) as i64);
    }
    if m == 1 {
        return Ok(q(1));
    }
    acc.as_rational()
        .ok_or_else(|| Error::Consistency(format!("M_{:?} at roots is not rational: {acc}", rho.parts)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinat::integer_partitions;

    fn pp(v: &[usize]) -> Partition {
        Partition { parts: v.to_vec() }
    }

    #[test]
    fn power_sums() {
        assert_eq!(power_sum_at_roots(3, 3), 3);
        assert_eq!(power_sum_at_roots(5, 3), 0);
        assert_eq!(power_sum_at_roots(0, 4), 4);
    }

    #[test]
    fn doubilet_examples() {
        assert_eq!(doubilet_expand(&pp(&[3, 1, 1])).to_string(), "2p5 - 2p4p1 - p3p2 + p3p1^2");
        let d = doubilet_expand(&pp(&[3, 0, 0]));
        assert_eq!(d.to_string(), "2p3 - 3p3p0 + p3p0^2");
        assert_eq!(d.reduce_p0(3).to_string(), "2p3");
        assert_eq!(doubilet_expand(&pp(&[4])).to_string(), "p4");
    }

    #[test]
    fn monomials_at_roots() {
        assert_eq!(monomial_sym_at_roots(&pp(&[3, 1, 1]), 3).unwrap(), q(0));
        assert_eq!(monomial_sym_at_roots(&pp(&[3, 0, 0]), 3).unwrap(), q(3));
        assert_eq!(brute_force_monomial(&pp(&[2, 0, 0]), 3).unwrap(), q(0));
        assert_eq!(brute_force_monomial(&pp(&[0, 0, 0]), 3).unwrap(), q(1));
        // one distinct ordering of [3,3,3], so M = ζ^0·ζ^3·ζ^6 = 1; M̂ = 3!·M = 6
        assert_eq!(brute_force_monomial(&pp(&[3, 3, 3]), 3).unwrap(), q(1));
        assert_eq!(doubilet_expand(&pp(&[3, 3, 3])).eval_at_roots(3), q(6));
    }

    #[test]
    fn doubilet_matches_brute_force() {
        for m in 2..=4 {
            for n in 0..=8 {
                for rho in integer_partitions(n, m) {
                    let a = monomial_sym_at_roots(&rho, m).unwrap();
                    let b = brute_force_monomial(&rho, m).unwrap();
                    assert_eq!(a, b, "{rho:?}");
                    assert!(doubilet_expand(&rho).is_homogeneous(n));
                    if n % m != 0 {
                        assert!(a.is_zero());
                    }
                }
            }
        }
    }
}
