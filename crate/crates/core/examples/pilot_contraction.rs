//! Pilot study for the half-site contraction threshold.
//!
//! Computes mid-spectrum eigenpairs of the truncated operator at a
//! completely resonant phase, measures `r_{1/2} / (r_0 + r_1)` at two scales
//! and prints the exponent `ln(ratio) / (L q_n)` for each pair.
//!
//! ```text
//! cargo run --release --example pilot_contraction -- [lambda] [size] [epsilon]
//! ```

use std::sync::Arc;

use amo_lab::cf::Frequency;
use amo_lab::cocycle::OperatorParams;
use amo_lab::phase::Phase;
use amo_lab::resonance::profile::half_site_contraction;
use amo_lab::resonance::resonance_amplitudes;
use amo_lab::spectral::{mid_spectrum_pairs, TridiagonalOperator};

fn main() -> amo_lab::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let lambda: f64 = args.first().map_or(4.0, |s| s.parse().expect("lambda"));
    let size: i64 = args.get(1).map_or(2000, |s| s.parse().expect("size"));
    let eps: f64 = args.get(2).map_or(0.01, |s| s.parse().expect("epsilon"));
    let freq = Arc::new(Frequency::golden());
    let params = OperatorParams::new(lambda, freq.clone(), Phase::default(), 0.0)?;
    let big_l = params.big_l();
    let op = TridiagonalOperator::new(&params, size)?;
    let pairs = mid_spectrum_pairs(&op, 10, 1e-8);
    println!("lambda={lambda} size={size} eps={eps} pairs={}", pairs.len());
    for n in [8usize, 10] {
        let q = freq.q_u64(n)? as f64;
        let mut exps = Vec::new();
        for pair in &pairs {
            let (phase, phi) = pair.centered(&params)?;
            let prof = resonance_amplitudes(&phi, &freq, n, eps, -1, 1)?;
            let p = params.with_theta(phase).with_energy(pair.energy);
            let h = half_site_contraction(&prof, &p, 0, 10.0)?;
            let e = h.log_ratio / (big_l * q);
            println!("  n={n} E={:+.6} exponent={e:.4}", pair.energy);
            exps.push(e);
        }
        exps.sort_by(f64::total_cmp);
        let below = exps.iter().filter(|&&e| e <= -0.3).count();
        println!(
            "n={n} q_n={q} min={:.4} median={:.4} max={:.4} at_or_below_-0.3={below}/{}",
            exps[0],
            exps[exps.len() / 2],
            exps[exps.len() - 1],
            exps.len()
        );
    }
    Ok(())
}
