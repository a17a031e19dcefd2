//! Genus-1 σ from the general solver against the Weierstrass recursion.
//!
//! `cargo run --release --example genus1_check -- 16`

use kleinian::curve::CurveModel;
use kleinian::abelfun::{render_ppoly, PPoly, PVar};
use kleinian::hirota::Names;
use kleinian::rational::q;
use kleinian::sigma::{genus1_laurent, genus1_oracle, solve_expansion};

fn main() -> kleinian::Result<()> {
    let depth: u32 = std::env::args().nth(1).map_or(16, |a| a.parse().expect("depth"));
    let c = CurveModel::cyclic(2, 3)?;
    let e = solve_expansion(&c, depth)?;
    let lam = |j: u16, k: i64| PPoly::var(PVar::Lambda(j), q(k));
    let o = genus1_oracle(&lam(1, -4), &lam(0, -4), depth as usize + 1)?;
    let mut mine = genus1_laurent(&e);
    for v in mine.values_mut() {
        v.terms.retain(|m, _| !m.iter().any(|(x, _)| *x == PVar::Lambda(2)));
    }
    mine.retain(|_, v| !v.is_zero());
    for (k, v) in &mine {
        println!("u^{k}: {}", render_ppoly(v, &Names::default(), true));
    }
    println!("agrees with the Weierstrass recursion at λ₂ = 0: {}", mine == o.sigma);
    Ok(())
}
