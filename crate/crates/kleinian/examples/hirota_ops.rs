//! Apply symmetrized Hirota programs and print the resulting differential polynomials.
//!
//! `cargo run --example hirota_ops -- "S D[i] D[j] (f^x2)" "S H[3,i] H[3,j] H[3,k] (f^x3)"`

use kleinian::cli::{eval_program, parse_program};

fn main() -> kleinian::Result<()> {
    let mut programs: Vec<String> = std::env::args().skip(1).collect();
    if programs.is_empty() {
        programs = ["S D[i] D[j] (f^x2)", "S D[1] (f, g)", "S H[3,i] H[3,j] H[3,k] (f^x3)", "S H[3,i] (f^x3)"]
            .map(String::from)
            .to_vec();
    }
    for src in &programs {
        println!("{src}\n  = {}", eval_program(&parse_program(src)?)?);
    }
    Ok(())
}
