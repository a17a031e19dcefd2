//! Expand R-functions in Kleinian ℘-functions and check them against the
//! set-partition oracle.
//!
//! `cargo run --example rfun_expand -- 3 1,1,2,2,2,2`

use kleinian::abelfun::{r_oracle, r_to_p, render_ppoly, term_parity, RFunctionId};
use kleinian::hirota::Names;

fn main() -> kleinian::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cases: Vec<(usize, Vec<u16>)> = if args.len() >= 2 {
        vec![(args[0].parse().expect("m"), args[1].split(',').map(|s| s.trim().parse().expect("index")).collect())]
    } else {
        vec![(2, vec![1, 1]), (2, vec![1, 2, 2, 2]), (3, vec![1, 2, 2]), (3, vec![1, 2, 2, 2, 2, 2])]
    };
    let names = Names::default();
    for (m, ix) in cases {
        let id = RFunctionId::new(m, &ix)?;
        let (p, note) = r_to_p(&id);
        println!("{id} = {}", render_ppoly(&p, &names, true));
        if let Some(note) = note {
            println!("  ({note})");
        }
        println!("  oracle agrees: {}, parity: {:?}", r_oracle(&id)? == p, term_parity(&p));
    }
    Ok(())
}
