//! Lyapunov exponent across the spectrum, compared with ln lambda.
//!
//! ```text
//! cargo run --release --example lyapunov_sweep -- [lambda] [steps] [phases]
//! ```

use std::sync::Arc;

use amo_lab::cf::Frequency;
use amo_lab::cocycle::{lyapunov, OperatorParams};
use amo_lab::phase::Phase;
use amo_lab::spectral::{spectrum_sample, uniform_phases};

fn main() -> amo_lab::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let lambda: f64 = args.first().map_or(3.0, |s| s.parse().expect("lambda"));
    let steps: i64 = args.get(1).map_or(10_000, |s| s.parse().expect("steps"));
    let phases: usize = args.get(2).map_or(64, |s| s.parse().expect("phases"));
    let p = OperatorParams::new(lambda, Arc::new(Frequency::golden()), Phase::default(), 0.0)?;

    let spectrum = spectrum_sample(&p, &uniform_phases(8), 200)?;
    println!("spectrum sample: {} energies in [{:.4}, {:.4}], half-grid Hausdorff distance {:.2e}", spectrum.energies.len(), spectrum.energies[0], spectrum.energies[spectrum.energies.len() - 1], spectrum.hausdorff.unwrap_or(f64::NAN));
    println!("{:>10} {:>10} {:>10}", "energy", "estimate", "- ln lam");
    let m = spectrum.energies.len();
    for i in 0..12 {
        let e = spectrum.energies[(2 * i + 1) * m / 24];
        let est = lyapunov(&p.with_energy(e), steps, phases)?;
        println!("{e:>10.5} {:>10.5} {:>10.2e}", est.mean, est.mean - lambda.ln());
    }
    // off the spectrum the exponent exceeds ln lambda
    for e in [spectrum.energies[m - 1] + 1.0, spectrum.energies[m - 1] + 5.0] {
        let est = lyapunov(&p.with_energy(e), steps, phases)?;
        println!("{e:>10.5} {:>10.5} {:>10.2e}  (outside)", est.mean, est.mean - lambda.ln());
    }
    Ok(())
}
