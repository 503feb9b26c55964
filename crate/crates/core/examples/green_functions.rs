//! Green's function edge entries of a box and the block identity that
//! expresses an eigenfunction inside the box through its boundary values.
//!
//! ```text
//! cargo run --release --example green_functions -- [lambda] [box length]
//! ```

use std::sync::Arc;

use amo_lab::cf::Frequency;
use amo_lab::cocycle::OperatorParams;
use amo_lab::greens::{block_identity_residual, GreenBlock};
use amo_lab::phase::Phase;
use amo_lab::spectral::{mid_spectrum_pairs, TridiagonalOperator};

fn main() -> amo_lab::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let lambda: f64 = args.first().map_or(4.0, |s| s.parse().expect("lambda"));
    let len: i64 = args.get(1).map_or(120, |s| s.parse().expect("length"));
    let p = OperatorParams::new(lambda, Arc::new(Frequency::golden()), Phase::default(), 0.0)?;

    let op = TridiagonalOperator::new(&p, 400)?;
    let pair = &mid_spectrum_pairs(&op, 1, 1e-8)[0];
    let (phase, phi) = pair.centered(&p)?;
    let p = p.with_theta(phase).with_energy(pair.energy);
    println!("eigenpair E = {:.8}, centred phase {phase:?}", pair.energy);

    // a box on the longer side of the localization centre
    let (x1, x2) = if phi.hi() >= -phi.lo { (20, 20 + len - 1) } else { (-20 - len + 1, -20) };
    assert!(phi.contains(x1 - 1) && phi.contains(x2 + 1), "box does not fit the truncation");
    let blk = GreenBlock::new(&p, x1, x2)?;
    println!("box [{x1}, {x2}]: det = {}, flagged {}", blk.det(), blk.denominator_flagged());
    println!("{:>5} {:>12} {:>12} {:>12} {:>10}", "y", "ln|G(x1,y)|", "ln|G(y,x2)|", "-L|y-x1|", "block res");
    for y in (x1..=x2).step_by((len as usize / 10).max(1)) {
        let e = blk.edges(y)?;
        let r = block_identity_residual(&p, &phi, x1, x2, y)?;
        println!("{y:>5} {:>12.3} {:>12.3} {:>12.3} {:>10.1e}", e.g_left.logmag(), e.g_right.logmag(), -p.big_l() * (y - x1) as f64, r.relative);
    }
    Ok(())
}
