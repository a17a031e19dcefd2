//! Exact linear algebra over the rationals: reduced row echelon form with
//! several right-hand sides, fraction-free rank, and an incremental echelon
//! basis for greedy independence testing.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::rational::Q;

/// Outcome of solving `A X = B` column by column.
#[derive(Clone, Debug)]
pub struct Solution {
    pub rank: usize,
    pub ncols: usize,
    pub pivots: Vec<usize>,
    /// One solution per right-hand side, free variables set to zero.
    pub x: Vec<Vec<Q>>,
    /// Rows beyond the rank with nonzero right-hand sides.
    pub inconsistent: bool,
}

impl Solution {
    pub fn nullity(&self) -> usize {
        self.ncols - self.rank
    }
}

/// Solves `[A | B]`, where `A` has `ncols` columns.
///
/// Full column rank systems take a fast route: pivot rows are chosen
/// modulo a prime, the square subsystem is solved by fraction-free
/// elimination, and every row is then checked exactly. Anything else falls
/// back to rational Gauss–Jordan.
pub fn solve(rows: Vec<Vec<Q>>, ncols: usize) -> Solution {
    match solve_fast(&rows, ncols) {
        Some(s) => s,
        None => solve_exact(rows, ncols),
    }
}

const P: u64 = (1 << 61) - 1;

fn mulmod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P as u128) as u64
}

fn powmod(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a);
        }
        a = mulmod(a, a);
        e >>= 1;
    }
    r
}

fn bigmod(x: &BigInt) -> u64 {
    let p = BigInt::from(P);
    let r = x.mod_floor(&p);
    r.to_u64_digits().1.first().copied().unwrap_or(0)
}

fn qmod(x: &Q) -> Option<u64> {
    let d = bigmod(x.denom());
    if d == 0 {
        return None;
    }
    Some(mulmod(bigmod(x.numer()), powmod(d, P - 2)))
}

fn int_row(r: &[Q]) -> Vec<BigInt> {
    let l = r.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let v: Vec<BigInt> = r.iter().map(|x| x.numer() * (&l / x.denom())).collect();
    let g = v.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() || g.is_one() {
        v
    } else {
        v.into_iter().map(|x| x / &g).collect()
    }
}

fn solve_fast(rows: &[Vec<Q>], ncols: usize) -> Option<Solution> {
    let m = rows.len();
    if m < ncols || ncols == 0 {
        return None;
    }
    let total = rows[0].len();
    let nrhs = total - ncols;
    let mut a: Vec<Vec<u64>> = Vec::with_capacity(m);
    for r in rows {
        a.push(r[..ncols].iter().map(qmod).collect::<Option<Vec<u64>>>()?);
    }
    let mut order: Vec<usize> = (0..m).collect();
    for c in 0..ncols {
        let p = (c..m).find(|&i| a[order[i]][c] != 0)?;
        order.swap(c, p);
        let pr = a[order[c]].clone();
        let inv = powmod(pr[c], P - 2);
        for &i in &order[c + 1..] {
            let f = mulmod(a[i][c], inv);
            if f == 0 {
                continue;
            }
            for (x, y) in a[i].iter_mut().zip(&pr).skip(c) {
                *x = (*x + P - mulmod(f, *y)) % P;
            }
        }
    }
    // Fraction-free elimination on the selected rows, in pivot order.
    let mut b: Vec<Vec<BigInt>> = order[..ncols].iter().map(|&i| int_row(&rows[i])).collect();
    let mut prev = BigInt::one();
    for c in 0..ncols {
        if b[c][c].is_zero() {
            return None;
        }
        for i in c + 1..ncols {
            for j in c + 1..total {
                let v = (&b[c][c] * &b[i][j] - &b[i][c] * &b[c][j]) / &prev;
                b[i][j] = v;
            }
            b[i][c] = BigInt::zero();
        }
        prev = b[c][c].clone();
    }
    let mut x = vec![vec![Q::zero(); ncols]; nrhs];
    for (k, xk) in x.iter_mut().enumerate() {
        for i in (0..ncols).rev() {
            let mut acc = Q::from_integer(b[i][ncols + k].clone());
            for j in i + 1..ncols {
                if !b[i][j].is_zero() && !xk[j].is_zero() {
                    acc -= &xk[j] * Q::from_integer(b[i][j].clone());
                }
            }
            xk[i] = acc / Q::from_integer(b[i][i].clone());
        }
    }
    let inconsistent = rows.iter().any(|r| {
        (0..nrhs).any(|k| {
            let mut acc = Q::zero();
            for j in 0..ncols {
                if !r[j].is_zero() && !x[k][j].is_zero() {
                    acc += &r[j] * &x[k][j];
                }
            }
            acc != r[ncols + k]
        })
    });
    Some(Solution { rank: ncols, ncols, pivots: (0..ncols).collect(), x, inconsistent })
}

fn solve_exact(mut rows: Vec<Vec<Q>>, ncols: usize) -> Solution {
    let m = rows.len();
    let total = rows.first().map(|r| r.len()).unwrap_or(ncols);
    let nrhs = total - ncols;
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..m).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m {
            break;
        }
    }
    let inconsistent = rows[r..].iter().any(|row| row[ncols..].iter().any(|x| !x.is_zero()));
    let mut x = vec![vec![Q::zero(); ncols]; nrhs];
    for (i, &c) in pivots.iter().enumerate() {
        for (k, xk) in x.iter_mut().enumerate() {
            xk[c] = rows[i][ncols + k].clone();
        }
    }
    Solution { rank: pivots.len(), ncols, pivots, x, inconsistent }
}

/// Basis of the right nullspace of `A`.
pub fn nullspace(rows: Vec<Vec<Q>>, ncols: usize) -> Vec<Vec<Q>> {
    let m = rows.len();
    let mut rows = rows;
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..m).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        let pr = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, y) in row.iter_mut().zip(&pr) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); ncols];
            v[f] = Q::one();
            for (i, &c) in pivots.iter().enumerate() {
                v[c] = -rows[i][f].clone();
            }
            v
        })
        .collect()
}

/// Rank by Bareiss fraction-free elimination after clearing denominators.
pub fn rank(rows: &[Vec<Q>]) -> usize {
    let mut a: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| {
            let l = r.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            r.iter().map(|x| x.numer() * (&l / x.denom())).collect()
        })
        .collect();
    let m = a.len();
    let n = a.first().map(|r| r.len()).unwrap_or(0);
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..m).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        for i in r + 1..m {
            for j in c + 1..n {
                let v = (&a[r][c] * &a[i][j] - &a[i][c] * &a[r][j]) / &prev;
                a[i][j] = v;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        r += 1;
        if r == m {
            break;
        }
    }
    r
}

/// Incrementally maintained echelon form. Each stored row remembers the
/// combination of inserted vectors that produced it, so dependencies can be
/// reported.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    rows: Vec<(usize, Vec<Q>, Vec<Q>)>,
    inserted: usize,
}

/// Result of offering a vector to an [`Echelon`].
#[derive(Clone, Debug)]
pub enum Insert {
    Independent,
    /// Coefficients `c` over earlier inserted vectors with `v = Σ c_k v_k`.
    Dependent(Vec<Q>),
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v`; stores it if independent. Dependent vectors are not
    /// counted as inserted.
    pub fn insert(&mut self, v: &[Q]) -> Insert {
        let mut v = v.to_vec();
        let mut comb = vec![Q::zero(); self.inserted + 1];
        comb[self.inserted] = Q::one();
        for (p, row, rc) in &self.rows {
            if v[*p].is_zero() {
                continue;
            }
            let f = v[*p].clone();
            for (x, y) in v.iter_mut().zip(row) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
            for (x, y) in comb.iter_mut().zip(rc) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        match v.iter().position(|x| !x.is_zero()) {
            Some(p) => {
                let inv = v[p].recip();
                let row: Vec<Q> = v.iter().map(|x| x * &inv).collect();
                let rc: Vec<Q> = comb.iter().map(|x| x * &inv).collect();
                self.rows.push((p, row, rc));
                self.inserted += 1;
                Insert::Independent
            }
            None => {
                // comb · (v_0..v_{k-1}, v) = 0 with last entry 1
                let dep = comb[..self.inserted].iter().map(|x| -x).collect();
                Insert::Dependent(dep)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn m(rows: &[&[i64]]) -> Vec<Vec<Q>> {
        rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect()
    }

    #[test]
    fn solve_and_rank() {
        let a = m(&[&[1, 2, 5], &[3, 4, 11], &[2, 4, 10]]);
        let s = solve(a.clone(), 2);
        assert_eq!(s.rank, 2);
        assert!(!s.inconsistent);
        assert_eq!(s.x[0], vec![q(1), q(2)]);
        let bad = m(&[&[1, 1, 1], &[1, 1, 2]]);
        assert!(solve(bad, 2).inconsistent);
        assert_eq!(rank(&m(&[&[1, 2, 3], &[2, 4, 6], &[0, 1, 1]])), 2);
        let ns = nullspace(m(&[&[1, 2, 3], &[2, 4, 6]]), 3);
        assert_eq!(ns.len(), 2);
    }

    #[test]
    fn fast_and_exact_routes_agree() {
        let a = m(&[&[2, 1, 0, 3], &[1, 3, 1, 5], &[0, 1, 4, 6], &[3, 4, 1, 8], &[1, 1, 1, 3]]);
        let f = solve(a.clone(), 3);
        let e = solve_exact(a.clone(), 3);
        assert_eq!(f.x, e.x);
        assert_eq!(f.inconsistent, e.inconsistent);
        let mut b = a;
        b[4][3] = q(4);
        assert!(solve(b, 3).inconsistent);
    }

    #[test]
    fn echelon_dependencies() {
        let mut e = Echelon::default();
        assert!(matches!(e.insert(&[q(1), q(0), q(1)]), Insert::Independent));
        assert!(matches!(e.insert(&[q(0), q(1), q(1)]), Insert::Independent));
        match e.insert(&[q(2), q(3), q(5)]) {
            Insert::Dependent(c) => assert_eq!(c, vec![q(2), q(3)]),
            _ => panic!("expected dependency"),
        }
        assert_eq!(e.rank(), 2);
    }
}
