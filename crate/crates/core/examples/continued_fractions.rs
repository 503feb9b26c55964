//! Continued fractions of the frequency: convergents, the beta estimate,
//! the Diophantine sandwich and the phase resonance exponent.
//!
//! ```text
//! cargo run --example continued_fractions -- [golden | silver | beta=<target>]
//! ```

use amo_lab::cf::{beta_estimate, convergent_table, delta_estimate, diophantine_audit, frequency_with_beta, Frequency};
use amo_lab::phase::Phase;

fn main() -> amo_lab::Result<()> {
    let arg = std::env::args().nth(1).unwrap_or_else(|| "golden".into());
    let freq = match arg.as_str() {
        "golden" => Frequency::golden(),
        "silver" => Frequency::silver(),
        s => {
            let target: f64 = s.strip_prefix("beta=").and_then(|t| t.parse().ok()).expect("golden, silver or beta=<target>");
            frequency_with_beta(target, 12, 4096)?
        }
    };
    println!("alpha ~ {:.15}", freq.alpha_f64()?);
    println!("{:>3} {:>6} {:>14} {:>14}  sandwich  best-approx", "n", "a_n", "p_n", "q_n");
    for row in convergent_table(&freq, 14)? {
        let audit = if row.n >= 1 { Some(diophantine_audit(&freq, row.n, 1_000_000)?) } else { None };
        let (sw, ba) = match &audit {
            Some(a) => (if a.pass { "ok" } else { "FAIL" }, a.gdc1.map_or("-", |b| if b { "ok" } else { "FAIL" })),
            None => ("-", "-"),
        };
        println!("{:>3} {:>6} {:>14} {:>14}  {sw:>8}  {ba:>11}", row.n, row.a, row.p, row.q);
    }
    println!("beta estimate (N = 12): {:.4}", beta_estimate(&freq, 12)?);

    // a completely resonant phase has 2 theta + k alpha integer for one k,
    // which the resonance exponent skips
    for theta in [Phase::Resonant { m: 3, l: 0 }, Phase::Real { value: 0.1234 }] {
        let d = delta_estimate(&freq, &theta, 10_000)?;
        println!("delta({theta:?}) over |k| <= 1e4: {:.4} at k = {}, skipped {:?}", d.value, d.argmax, d.skipped);
    }
    Ok(())
}
