//! Runs every sampled finite-scale audit and prints pass fractions.
//!
//! ```text
//! cargo run --release --example lemma_audits -- [samples] [seed]
//! ```

use std::sync::Arc;

use amo_lab::audit::{pass_fraction, run_audit, AuditKind, AuditSetup};
use amo_lab::cf::Frequency;
use amo_lab::phase::Phase;

fn main() -> amo_lab::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let samples: usize = args.first().map_or(5, |s| s.parse().expect("samples"));
    let seed: u64 = args.get(1).map_or(1, |s| s.parse().expect("seed"));
    let setup = AuditSetup {
        lambda: 4.0,
        freq: Arc::new(Frequency::golden()),
        theta: Phase::default(),
        scales: vec![8, 10],
        epsilon: 0.1,
        big_c: 10.0,
        samples,
        seed,
        truncation: 1000,
        eigenpairs: 4,
        window_epsilon: 0.01,
    };
    for kind in AuditKind::ALL {
        let recs = run_audit(&setup, kind)?;
        let skipped = recs.iter().filter(|r| r.pass.is_none()).count();
        match pass_fraction(&recs) {
            Some(f) => println!("{:<12} {:>4} records, {skipped:>3} skipped, {:>6.1}% pass", kind.name(), recs.len(), 100.0 * f),
            None => println!("{:<12} {:>4} records, all skipped", kind.name(), recs.len()),
        }
        if let Some(r) = recs.iter().find(|r| r.pass == Some(false)) {
            println!("    e.g. {} measured {:.3} > bound {:.3}", r.params, r.measured_log, r.bound_log);
        }
    }
    Ok(())
}
