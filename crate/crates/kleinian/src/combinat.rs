//! Partitions, multiset permutations, set partitions, Möbius values and
//! Weierstrass gap data.
//!
//! All enumerations are deterministic: integer partitions and multiset
//! permutations come out in reverse-lexicographic order, set partitions in
//! lexicographic order of their restricted growth strings.

use num_bigint::BigInt;
use num_integer::Integer;

use crate::error::{Error, Result};
use crate::rational::factorial;

/// A partition of `n` into at most `m` parts, zero padded to length `m`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    pub parts: Vec<usize>,
}

impl Partition {
    pub fn new(parts: Vec<usize>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Invalid(format!("parts not weakly decreasing: {parts:?}")));
        }
        Ok(Partition { parts })
    }

    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Multiplicities of every value occurring in the parts, zeros included.
    pub fn multiplicities(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.parts.len() {
            let mut j = i;
            while j < self.parts.len() && self.parts[j] == self.parts[i] {
                j += 1;
            }
            out.push(j - i);
            i = j;
        }
        out
    }

    /// Number of nonzero parts.
    pub fn nonzero(&self) -> usize {
        self.parts.iter().filter(|&&p| p > 0).count()
    }
}

/// Every partition of `n` into at most `m` parts, padded with zeros.
pub fn integer_partitions(n: usize, m: usize) -> Vec<Partition> {
    fn rec(rem: usize, max: usize, slots: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if slots == 0 {
            if rem == 0 {
                out.push(Partition { parts: cur.clone() });
            }
            return;
        }
        if rem > max * slots {
            return;
        }
        for p in (0..=max.min(rem)).rev() {
            cur.push(p);
            rec(rem - p, p, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if m == 0 {
        return out;
    }
    rec(n, n, m, &mut Vec::with_capacity(m), &mut out);
    out
}

/// Partitions of `n` whose nonzero parts are all divisible by `m`, without
/// zero padding.
pub fn partitions_divisible(n: usize, m: usize) -> Vec<Vec<usize>> {
    if n % m != 0 {
        return Vec::new();
    }
    integer_partitions(n / m, n / m)
        .into_iter()
        .map(|p| p.parts.into_iter().filter(|&x| x > 0).map(|x| x * m).collect())
        .collect()
}

/// All distinct orderings of the parts, in reverse-lexicographic order.
pub fn multiset_permutations(rho: &Partition) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = rho.parts.clone();
    cur.sort_unstable_by(|a, b| b.cmp(a));
    let mut out = vec![cur.clone()];
    // Previous permutation in lexicographic order, repeated until exhausted.
    loop {
        let n = cur.len();
        if n < 2 {
            break;
        }
        let mut i = n - 1;
        while i > 0 && cur[i - 1] <= cur[i] {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        let mut j = n - 1;
        while cur[j] >= cur[i - 1] {
            j -= 1;
        }
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
    out
}

/// `z(ψ) = Σ (k−1) ψ_k`.
pub fn z_weight(psi: &[usize]) -> usize {
    psi.iter().enumerate().map(|(k, &p)| k * p).sum()
}

pub fn multinomial(parts: &[usize]) -> BigInt {
    let n: usize = parts.iter().sum();
    parts.iter().fold(factorial(n), |acc, &p| acc / factorial(p))
}

/// Splits of `items` into ordered blocks of sizes `psi` (empty blocks allowed).
pub fn constrained_set_partitions<T: Clone>(items: &[T], psi: &[usize]) -> Result<Vec<Vec<Vec<T>>>> {
    let total: usize = psi.iter().sum();
    if total != items.len() {
        return Err(Error::SizeMismatch { expected: items.len(), got: total });
    }
    let idx: Vec<usize> = (0..items.len()).collect();
    let mut out = Vec::new();
    split_rec(&idx, psi, &mut Vec::new(), &mut out);
    Ok(out
        .into_iter()
        .map(|blocks| blocks.into_iter().map(|b| b.into_iter().map(|i| items[i].clone()).collect()).collect())
        .collect())
}

fn split_rec(rem: &[usize], psi: &[usize], cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
    if psi.is_empty() {
        out.push(cur.clone());
        return;
    }
    for comb in combinations(rem.len(), psi[0]) {
        let block: Vec<usize> = comb.iter().map(|&i| rem[i]).collect();
        let rest: Vec<usize> = rem.iter().enumerate().filter(|(i, _)| !comb.contains(i)).map(|(_, &x)| x).collect();
        cur.push(block);
        split_rec(&rest, &psi[1..], cur, out);
        cur.pop();
    }
}

/// `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if c[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// All unordered partitions of `items` into nonempty blocks.
pub fn all_set_partitions<T: Clone>(items: &[T]) -> Vec<Vec<Vec<T>>> {
    let n = items.len();
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    let mut rgs = vec![0usize; n];
    fn rec<T: Clone>(pos: usize, maxb: usize, rgs: &mut Vec<usize>, items: &[T], out: &mut Vec<Vec<Vec<T>>>) {
        if pos == items.len() {
            let mut blocks: Vec<Vec<T>> = vec![Vec::new(); maxb + 1];
            for (i, &b) in rgs.iter().enumerate() {
                blocks[b].push(items[i].clone());
            }
            out.push(blocks);
            return;
        }
        for b in 0..=maxb + 1 {
            rgs[pos] = b;
            rec(pos + 1, maxb.max(b), rgs, items, out);
        }
    }
    rgs[0] = 0;
    rec(1, 0, &mut rgs, items, &mut out);
    out
}

/// `μ(π) = (−1)^{m−ℓ} ∏ (|π_i| − 1)!` for a partition of an `m`-set into
/// blocks of the given sizes.
pub fn mobius(block_sizes: &[usize], m: usize) -> BigInt {
    let l = block_sizes.len();
    let mag = block_sizes.iter().fold(BigInt::from(1), |acc, &b| acc * factorial(b.saturating_sub(1)));
    if (m - l) % 2 == 0 {
        mag
    } else {
        -mag
    }
}

pub fn bell(n: usize) -> BigInt {
    let mut row = vec![BigInt::from(1)];
    for _ in 0..n {
        let mut next = vec![row.last().unwrap().clone()];
        for x in &row {
            let v = next.last().unwrap() + x;
            next.push(v);
        }
        row = next;
    }
    row[0].clone()
}

/// Genus and Weierstrass gaps of the semigroup generated by `n` and `s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapData {
    pub n: usize,
    pub s: usize,
    pub genus: usize,
    /// Gaps in increasing order.
    pub gaps: Vec<usize>,
}

impl GapData {
    /// Weights of `u_1..u_g`: the gaps in decreasing order.
    pub fn u_weights(&self) -> Vec<usize> {
        self.gaps.iter().rev().copied().collect()
    }
}

pub fn gap_sequence(n: usize, s: usize) -> Result<GapData> {
    if n < 2 || s <= n || n.gcd(&s) != 1 {
        return Err(Error::Invalid(format!("need coprime 2 <= n < s, got ({n},{s})")));
    }
    let genus = (n - 1) * (s - 1) / 2;
    let conductor = 2 * genus;
    let gaps: Vec<usize> = (1..conductor.max(1))
        .filter(|&k| !(0..=k / s).any(|b| (k - b * s) % n == 0))
        .collect();
    if gaps.len() != genus {
        return Err(Error::Consistency(format!("gap count {} != genus {genus}", gaps.len())));
    }
    Ok(GapData { n, s, genus, gaps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pp(v: &[usize]) -> Partition {
        Partition { parts: v.to_vec() }
    }

    #[test]
    fn partitions_small() {
        assert_eq!(integer_partitions(2, 3), vec![pp(&[2, 0, 0]), pp(&[1, 1, 0])]);
        assert_eq!(integer_partitions(4, 2), vec![pp(&[4, 0]), pp(&[3, 1]), pp(&[2, 2])]);
        assert_eq!(integer_partitions(1, 4), vec![pp(&[1, 0, 0, 0])]);
        assert_eq!(partitions_divisible(6, 3), vec![vec![6], vec![3, 3]]);
    }

    #[test]
    fn permutations_and_z() {
        assert_eq!(multiset_permutations(&pp(&[2, 0, 0])), vec![vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 2]]);
        assert_eq!(multiset_permutations(&pp(&[1, 1, 0])), vec![vec![1, 1, 0], vec![1, 0, 1], vec![0, 1, 1]]);
        assert_eq!(multiset_permutations(&pp(&[1, 1, 1])).len(), 1);
        assert_eq!(z_weight(&[2, 0, 0]), 0);
        assert_eq!(z_weight(&[0, 2, 0]), 2);
        assert_eq!(z_weight(&[0, 0, 2]), 4);
        assert_eq!(z_weight(&[1, 1, 0]), 1);
    }

    #[test]
    fn constrained_splits() {
        let s = constrained_set_partitions(&["i1", "i2"], &[1, 1, 0]).unwrap();
        assert_eq!(s, vec![vec![vec!["i1"], vec!["i2"], vec![]], vec![vec!["i2"], vec!["i1"], vec![]]]);
        let s = constrained_set_partitions(&["i1", "i2"], &[2, 0, 0]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(constrained_set_partitions(&[1, 2, 3], &[1, 1, 1]).unwrap().len(), 6);
        assert!(constrained_set_partitions(&[1, 2], &[1, 0]).is_err());
    }

    #[test]
    fn set_partitions_and_mobius() {
        assert_eq!(all_set_partitions(&[1, 2, 3]).len(), 5);
        assert_eq!(all_set_partitions(&[1]).len(), 1);
        assert_eq!(all_set_partitions(&[1, 2, 3, 4]).len(), 15);
        assert_eq!(mobius(&[3], 3), BigInt::from(2));
        assert_eq!(mobius(&[2, 1], 3), BigInt::from(-1));
        assert_eq!(mobius(&[1, 1, 1], 3), BigInt::from(1));
    }

    #[test]
    fn gaps() {
        let g = gap_sequence(2, 7).unwrap();
        assert_eq!((g.genus, g.u_weights()), (3, vec![5, 3, 1]));
        assert_eq!(gap_sequence(3, 4).unwrap().u_weights(), vec![5, 2, 1]);
        assert_eq!(gap_sequence(2, 3).unwrap().u_weights(), vec![1]);
        assert!(gap_sequence(2, 4).is_err());
        assert!(gap_sequence(5, 3).is_err());
    }
}
