//! Build a basis of Γ(m) greedily, raising the expansion depth until it is
//! complete, and print the table.
//!
//! `cargo run --release --example basis_table -- 2 7 2`

use std::time::Instant;

use kleinian::basis::{build_basis_auto, AutoOptions};
use kleinian::curve::CurveModel;
use kleinian::sigma::{random_specialization, solve_with, Mode, SolveOptions};

fn main() -> kleinian::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let (n, s, m) = (args.first().copied().unwrap_or(2), args.get(1).copied().unwrap_or(5), args.get(2).copied().unwrap_or(2));
    let c = CurveModel::cyclic(n, s)?;
    let mut opts = AutoOptions::new(&c, m);
    if let Some(&d) = args.get(3) {
        opts.start_depth = d as u32;
    }
    let t = Instant::now();
    let (rep, log) = build_basis_auto(&c, m, &opts, |d, seed| {
        solve_with(&c, &SolveOptions::new(d, Mode::Specialized(random_specialization(s, seed))))
    })?;
    for step in &log {
        println!("depth {:>3}: {:>3} entries, {}", step.depth, step.entries, step.note);
    }
    print!("{}", rep.table());
    println!("verified {} in {:.2?}", rep.verified, t.elapsed());
    Ok(())
}
