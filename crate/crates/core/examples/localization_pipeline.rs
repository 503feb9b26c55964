//! End-to-end localization run: eigenpairs of the truncated operator at
//! `theta = 0`, decay fits, resonance profiles at several scales and the
//! decay certificate.
//!
//! ```text
//! cargo run --release --example localization_pipeline -- [lambda] [size]
//! ```

use std::sync::Arc;

use amo_lab::cf::Frequency;
use amo_lab::cocycle::OperatorParams;
use amo_lab::phase::Phase;
use amo_lab::resonance::{decay_certificate, resonance_amplitudes};
use amo_lab::spectral::{decay_rate, mid_spectrum_pairs, DecayOptions, TridiagonalOperator};

fn main() -> amo_lab::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let lambda: f64 = args.first().map_or(4.0, |s| s.parse().expect("lambda"));
    let size: i64 = args.get(1).map_or(2000, |s| s.parse().expect("size"));
    let eps = 0.01;
    let freq = Arc::new(Frequency::golden());
    let params = OperatorParams::new(lambda, freq.clone(), Phase::default(), 0.0)?;
    let big_l = params.big_l();
    let op = TridiagonalOperator::new(&params, size)?;
    for pair in mid_spectrum_pairs(&op, 10, 1e-8) {
        let (_, phi) = pair.centered(&params)?;
        let fit = decay_rate(&phi, big_l, 0.0, &DecayOptions::default())?;
        let side = (-phi.lo).min(phi.hi());
        let profiles = [8usize, 10, 12]
            .iter()
            .map(|&n| {
                let q = freq.q_u64(n)? as i64;
                let reach = ((side - window_pad(q, eps)) / q).max(0);
                resonance_amplitudes(&phi, &freq, n, eps, -reach, reach)
            })
            .collect::<amo_lab::Result<Vec<_>>>()?;
        let lo = freq.q_u64(12)? as i64;
        let hi = (0.9 * side as f64) as i64;
        let cert = decay_certificate(&profiles, &phi, big_l, 0.0, 10.0, (lo, hi))?;
        let measured_ok = cert.scales.iter().flat_map(|s| &s.rows).filter(|r| r.pass == Some(true)).count();
        let measured = cert.scales.iter().flat_map(|s| &s.rows).filter(|r| r.pass.is_some()).count();
        println!(
            "E={:+.6} fit={:.4} final_rate={:.4} theorem={:.4} side={side} rows_below_closed_form={measured_ok}/{measured}",
            pair.energy, fit.rate, cert.final_rate, cert.theorem_rate
        );
    }
    Ok(())
}

fn window_pad(q: i64, eps: f64) -> i64 {
    amo_lab::resonance::profile::window_radius(q, eps) + q / 2
}
