//! Monomial symmetric functions at the m-th roots of unity, by Doubilet's
//! formula and by direct summation.
//!
//! `cargo run --example symfunc_roots -- 3 6`

use kleinian::combinat::integer_partitions;
use kleinian::symfunc::{brute_force_monomial, doubilet_expand, monomial_sym_at_roots};

fn main() -> kleinian::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer"));
    let m = args.next().unwrap_or(3);
    let max = args.next().unwrap_or(6);
    for n in 0..=max {
        for rho in integer_partitions(n, m) {
            let fast = monomial_sym_at_roots(&rho, m)?;
            let slow = brute_force_monomial(&rho, m)?;
            let hat = doubilet_expand(&rho).eval_at_roots(m);
            println!("{:?}: M = {fast} (direct {slow}), M^ = {hat}", rho.parts);
        }
    }
    Ok(())
}
