//! Express ℘₁₁℘₂₂ − ℘₁₂² on the genus-2 curve through R-functions.
//!
//! `cargo run --release --example delta_relation -- 12`

use std::time::Instant;

use kleinian::basis::{find_relation, render_relation, verify_relation, FunctionSpec, RelationOutcome};
use kleinian::curve::CurveModel;
use kleinian::sigma::{random_specialization, solve_expansion, solve_with, Mode, SolveOptions};

fn main() -> kleinian::Result<()> {
    let depth: u32 = std::env::args().nth(1).map_or(12, |a| a.parse().unwrap());
    let c = CurveModel::cyclic(2, 5)?;
    let basis: Vec<FunctionSpec> = ["1", "R2[1,1]", "R2[1,2]", "R2[2,2]", "R3[1,2,2,2,2,2]"]
        .iter()
        .map(|s| FunctionSpec::parse(s))
        .collect::<kleinian::Result<_>>()?;
    let t = Instant::now();
    let e = solve_expansion(&c, depth)?;
    println!("symbolic expansion to depth {depth} in {:.2?}", t.elapsed());
    match find_relation(&FunctionSpec::delta(), &basis, &e, &Default::default())? {
        RelationOutcome::Found(rel) => {
            println!("{}", render_relation(&rel, true));
            let check = solve_with(&c, &SolveOptions::new(depth + 6, Mode::Specialized(random_specialization(5, 99))))?;
            println!("verified at depth {}: {}", depth + 6, verify_relation(&rel, &check, 3, 5, true)?);
        }
        RelationOutcome::Independent { witness } => println!("no relation; fails at {witness}"),
    }
    println!("total {:.2?}", t.elapsed());
    Ok(())
}
