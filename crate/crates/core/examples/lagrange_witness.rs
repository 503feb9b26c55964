//! Lagrange interpolation terms over cosine nodes, the uniform lower bound
//! witness for P_k, and the sine-minima claims of a Lagrange scheme.
//!
//! ```text
//! cargo run --release --example lagrange_witness -- [n]
//! ```

use std::sync::Arc;

use amo_lab::cf::Frequency;
use amo_lab::cocycle::OperatorParams;
use amo_lab::phase::Phase;
use amo_lab::resonance::{build_scheme, lagrange_terms, sine_minima_audit, uniform_witness, SchemeKind};

fn main() -> amo_lab::Result<()> {
    let n: usize = std::env::args().nth(1).map_or(8, |s| s.parse().expect("n"));
    let freq = Arc::new(Frequency::golden());
    let q = freq.q_u64(n)? as i64;
    let p = OperatorParams::new(4.0, freq.clone(), Phase::Real { value: 0.137 }, 0.3)?;

    // q_n consecutive phases theta + m alpha
    let phases: Vec<Phase> = (1..=q).map(|m| p.theta.shifted(&freq, m)).collect::<amo_lab::Result<_>>()?;
    let thetas: Vec<f64> = phases.iter().map(|t| t.value(&freq)).collect::<amo_lab::Result<_>>()?;
    let lag = lagrange_terms(&thetas)?;
    let worst = lag.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("n = {n}, q_n = {q}: max Lag_m = {worst:.3} ({}), per node {:.4}", lag.method, worst / q as f64);

    let w = uniform_witness(&p, &phases)?;
    println!("witness node m = {}: ln|P_k| = {:.3} >= {:.3} : {}", w.m, w.lhs.logmag(), w.rhs.logmag(), w.pass);

    // the scheme needs a large scale; these are the smallest feasible ones
    // at eps = 0.01
    let theta = Phase::Resonant { m: 0, l: 0 };
    for (kind, scale) in [(SchemeKind::HalfSite, 17), (SchemeKind::FullSite, 16)] {
        let s = build_scheme(&freq, scale, 1, kind, 0.01)?;
        let a = sine_minima_audit(&s, &freq, &theta, 10.0)?;
        println!(
            "{kind:?} n = {scale}: s = {}, q' = {}, |I1 u I2| = {}, minima {} achievers {} lagrange {:?}",
            s.s,
            s.q_prime,
            s.size(),
            a.minima_pass,
            a.achiever_pass,
            a.lag_pass
        );
    }
    Ok(())
}
