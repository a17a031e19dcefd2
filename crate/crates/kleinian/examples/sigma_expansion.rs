//! Solve the σ-expansion of a cyclic curve and print its leading terms.
//!
//! `cargo run --release --example sigma_expansion -- 2 5 12 [symbolic|specialized|zero]`

use std::time::Instant;

use kleinian::curve::CurveModel;
use kleinian::rational::fmt_q;
use kleinian::sigma::{random_specialization, solve_with, Mode, SolveOptions};

fn main() -> kleinian::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(2, |a| a.parse().unwrap());
    let s: usize = args.get(1).map_or(5, |a| a.parse().unwrap());
    let depth: u32 = args.get(2).map_or(10, |a| a.parse().unwrap());
    let c = CurveModel::cyclic(n, s)?;
    let mode = match args.get(3).map(String::as_str) {
        Some("specialized") => Mode::Specialized(random_specialization(s, 7)),
        Some("zero") => Mode::Zero,
        _ => Mode::Symbolic,
    };
    let t = Instant::now();
    let e = solve_with(&c, &SolveOptions::new(depth, mode))?;
    let terms = e.term_list();
    println!("({n},{s}) wt(σ) = {} depth {} mode {}: {} terms in {:.2?}", e.wt_sigma, e.depth, e.mode.name(), terms.len(), t.elapsed());
    for t in terms.iter().take(12) {
        println!("  u^{:?} λ^{:?}  {}", t.u_exp, t.lambda_exp, fmt_q(&t.coeff));
    }
    Ok(())
}
