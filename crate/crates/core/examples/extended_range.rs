//! Quantities far outside binary64 range: long transfer products, box
//! determinants and their software-float cross-check.
//!
//! ```text
//! cargo run --release --example extended_range -- [lambda]
//! ```

use std::sync::Arc;

use amo_lab::cf::Frequency;
use amo_lab::cocycle::{transfer, OperatorParams};
use amo_lab::greens::{box_det, box_det_hp};
use amo_lab::numerics::LogScalar;
use amo_lab::phase::Phase;

fn main() -> amo_lab::Result<()> {
    let lambda: f64 = std::env::args().nth(1).map_or(5.0, |s| s.parse().expect("lambda"));
    let p = OperatorParams::new(lambda, Arc::new(Frequency::golden()), Phase::Real { value: 0.3 }, 0.2)?;

    for k in [1_000i64, 100_000, 1_000_000] {
        let t = transfer(&p, k, &p.theta)?;
        let norm = t.matrix.norm();
        println!("k = {k:>7}: ln||A_k|| = {:.3} (norm = {norm}), per step {:.5}, ln lambda = {:.5}", t.log_norm(), t.log_norm() / k as f64, lambda.ln());
    }

    // the same determinant in binary64 with exponent tracking and in
    // 256-bit software floats
    for len in [50i64, 500, 5000] {
        let a = box_det(&p, 0, len - 1, None)?;
        let b = box_det_hp(&p, 0, len - 1, 256)?.to_log_scalar();
        println!("P on [0, {}]: {}  (256-bit: {}, rel diff {:.2e}, cancellation flag {})", len - 1, a.value, b, a.value.rel_diff(&b), a.cancellation);
    }

    let huge = LogScalar::from_log(1, 1e5);
    let tiny = LogScalar::from_log(1, -1e5);
    println!("e^1e5 * e^-1e5 = {}", huge * tiny);
    println!("e^1e5 + e^-1e5 - e^1e5 = {}", huge.add(tiny).sub(huge));
    Ok(())
}
