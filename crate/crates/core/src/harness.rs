//! Run configuration and the subcommands behind the `amo-lab` binary.
//!
//! Configuration is a flat TOML table. Values are resolved in this order,
//! later entries winning: built-in defaults, the config file, `--set
//! key=value` overrides. Every output embeds `schema_version`, the config
//! hash and the crate version.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::audit::{run_audit, AuditKind, AuditSetup};
use crate::cf::{beta_estimate, cf_expand, convergent_table, diophantine_audit, frequency_with_beta, Frequency, RealBall};
use crate::cocycle::{lyapunov, OperatorParams};
use crate::error::{Error, Result};
use crate::numerics::PrecisionMode;
use crate::phase::Phase;
use crate::resonance::profile::window_radius;
use crate::resonance::{decay_certificate, resonance_amplitudes, DecayCertificate};
use crate::sites::SiteValues;
use crate::spectral::{decay_rate, mid_spectrum_pairs, spectrum_sample, uniform_phases, DecayFit, DecayOptions, TridiagonalOperator};

pub const SCHEMA_VERSION: u32 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `golden`, `silver`, `quotients`, `real` or `beta`.
    pub frequency: String,
    pub quotients: Vec<u64>,
    /// Repeated tail for `frequency = "quotients"`; empty means a finite list.
    pub quotients_period: Vec<u64>,
    /// Decimal expansion for `frequency = "real"`.
    pub alpha_decimal: String,
    /// Treat `alpha_decimal` as an exact rational instead of a ball of half
    /// an ulp of its last digit.
    pub alpha_exact: bool,
    pub beta_target: f64,
    pub beta_depth: usize,
    pub q_budget_bits: u64,
    /// Continued-fraction depth for reports and `beta` estimates.
    pub cf_depth: usize,
    /// Enumeration cap for the exhaustive best-approximation check.
    pub q_budget: u64,
    pub lambda: f64,
    /// `theta = (theta_m alpha + theta_l) / 2` unless `theta_real` is set.
    pub theta_m: i64,
    pub theta_l: i64,
    pub theta_real: Option<f64>,
    pub scales: Vec<usize>,
    pub epsilon: f64,
    /// `epsilon` for resonance windows and schemes; must be below 1/40.
    pub window_epsilon: f64,
    #[serde(rename = "c")]
    pub big_c: f64,
    /// The truncation is `[-truncation_sites, truncation_sites]`.
    pub truncation_sites: i64,
    pub eigenpairs: usize,
    pub seed: u64,
    pub samples: usize,
    pub energy_min: f64,
    pub energy_max: f64,
    pub energy_count: usize,
    pub k_steps: Vec<i64>,
    pub phase_samples: usize,
    pub spectrum_sites: i64,
    pub spectrum_phases: usize,
    /// `auto`, `binary64` or `high`.
    pub precision: String,
    pub precision_bits: usize,
    pub output_dir: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            frequency: "golden".into(),
            quotients: Vec::new(),
            quotients_period: Vec::new(),
            alpha_decimal: String::new(),
            alpha_exact: false,
            beta_target: 0.5,
            beta_depth: 12,
            q_budget_bits: 4096,
            cf_depth: 20,
            q_budget: 100_000,
            lambda: 4.0,
            theta_m: 0,
            theta_l: 0,
            theta_real: None,
            scales: vec![8, 10, 12],
            epsilon: 0.1,
            window_epsilon: 0.01,
            big_c: 10.0,
            truncation_sites: 2000,
            eigenpairs: 10,
            seed: 1,
            samples: 20,
            energy_min: -10.0,
            energy_max: 10.0,
            energy_count: 21,
            k_steps: vec![1000],
            phase_samples: 16,
            spectrum_sites: 200,
            spectrum_phases: 16,
            precision: "auto".into(),
            precision_bits: 256,
            output_dir: None,
        }
    }
}

fn bad(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

impl RunConfig {
    /// Parses a config file body and applies `key=value` overrides (values
    /// in TOML syntax; bare words are taken as strings).
    pub fn from_sources(file: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = match file {
            Some(s) => s.parse().map_err(|e| Error::Config(format!("config file: {e}")))?,
            None => toml::Table::new(),
        };
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            let k = k.trim();
            let value = match format!("v = {}", v.trim()).parse::<toml::Table>() {
                Ok(mut t) => t.remove("v").expect("parsed key"),
                Err(_) => toml::Value::String(v.trim().to_string()),
            };
            table.insert(k.to_string(), value);
        }
        let cfg: RunConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let body = match path {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?),
            None => None,
        };
        Self::from_sources(body.as_deref(), overrides)
    }

    pub fn validate(&self) -> Result<()> {
        match self.frequency.as_str() {
            "golden" | "silver" => {}
            "quotients" => {
                if self.quotients.is_empty() {
                    return Err(bad("quotients", "required when frequency = \"quotients\""));
                }
                if self.quotients.iter().chain(&self.quotients_period).any(|&a| a == 0) {
                    return Err(bad("quotients", "partial quotients must be positive"));
                }
            }
            "real" => {
                if self.alpha_decimal.is_empty() {
                    return Err(bad("alpha_decimal", "required when frequency = \"real\""));
                }
            }
            "beta" => {
                if !(self.beta_target > 0.0 && self.beta_target.is_finite()) {
                    return Err(bad("beta_target", "must be positive"));
                }
                if self.beta_depth < 2 {
                    return Err(bad("beta_depth", "must be at least 2"));
                }
            }
            other => return Err(bad("frequency", format!("unknown kind `{other}`"))),
        }
        if !self.lambda.is_finite() {
            return Err(bad("lambda", "must be finite"));
        }
        if let Some(t) = self.theta_real {
            if !t.is_finite() {
                return Err(bad("theta_real", "must be finite"));
            }
        }
        if self.scales.is_empty() || self.scales.iter().any(|&n| n < 2) {
            return Err(bad("scales", "need at least one scale, each >= 2"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(bad("epsilon", "must lie in (0, 1)"));
        }
        if !(self.window_epsilon > 0.0 && self.window_epsilon < 1.0 / 40.0) {
            return Err(bad("window_epsilon", "must lie in (0, 1/40) so resonance windows are disjoint"));
        }
        if !(self.big_c > 0.0 && self.big_c.is_finite()) {
            return Err(bad("c", "must be positive"));
        }
        if self.truncation_sites < 10 {
            return Err(bad("truncation_sites", "must be at least 10"));
        }
        if self.spectrum_sites < 1 || self.spectrum_phases < 1 {
            return Err(bad("spectrum_sites", "spectrum_sites and spectrum_phases must be positive"));
        }
        if self.eigenpairs == 0 {
            return Err(bad("eigenpairs", "must be positive"));
        }
        if self.samples == 0 {
            return Err(bad("samples", "must be positive"));
        }
        if !(self.energy_min.is_finite() && self.energy_max.is_finite() && self.energy_min <= self.energy_max) {
            return Err(bad("energy_min", "need finite energy_min <= energy_max"));
        }
        if self.k_steps.iter().any(|&k| k < 1) {
            return Err(bad("k_steps", "step counts must be positive"));
        }
        if self.phase_samples == 0 {
            return Err(bad("phase_samples", "must be positive"));
        }
        match self.precision.as_str() {
            "auto" | "binary64" => {}
            "high" if self.precision_bits >= 64 => {}
            "high" => return Err(bad("precision_bits", "must be at least 64")),
            other => return Err(bad("precision", format!("unknown mode `{other}`"))),
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form, with
    /// `output_dir` left out.
    pub fn hash(&self) -> String {
        let body = serde_json::to_string(&RunConfig { output_dir: None, ..self.clone() }).expect("config serializes");
        let digest = Sha256::digest(body.as_bytes());
        digest.iter().take(8).fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn build_frequency(&self) -> Result<Frequency> {
        match self.frequency.as_str() {
            "golden" => Ok(Frequency::golden()),
            "silver" => Ok(Frequency::silver()),
            "quotients" => Frequency::periodic(&self.quotients, &self.quotients_period),
            "real" => {
                let ball = RealBall::from_decimal(&self.alpha_decimal).map_err(|e| bad("alpha_decimal", e))?;
                let ball = if self.alpha_exact { RealBall::exact(ball.center) } else { ball };
                cf_expand(&ball, self.cf_depth)
            }
            "beta" => frequency_with_beta(self.beta_target, self.beta_depth, self.q_budget_bits),
            other => Err(bad("frequency", format!("unknown kind `{other}`"))),
        }
    }

    pub fn theta(&self) -> Phase {
        match self.theta_real {
            Some(value) => Phase::Real { value },
            None => Phase::Resonant { m: self.theta_m, l: self.theta_l },
        }
    }

    fn precision_mode(&self) -> PrecisionMode {
        match self.precision.as_str() {
            "binary64" => PrecisionMode::Binary64,
            "high" => PrecisionMode::High { bits: self.precision_bits },
            _ => PrecisionMode::Auto,
        }
    }

    pub fn params(&self, freq: Arc<Frequency>, energy: f64) -> Result<OperatorParams> {
        let mut p = OperatorParams::new(self.lambda, freq, self.theta(), energy)?;
        p.precision = self.precision_mode();
        Ok(p)
    }

    fn header(&self) -> serde_json::Value {
        json!({"schema_version": SCHEMA_VERSION, "config_hash": self.hash(), "version": VERSION})
    }

    fn csv_header(&self) -> String {
        format!("# schema_version={SCHEMA_VERSION} config_hash={} version={VERSION}\n", self.hash())
    }

    fn audit_setup(&self, freq: Arc<Frequency>) -> AuditSetup {
        AuditSetup {
            lambda: self.lambda,
            freq,
            theta: self.theta(),
            scales: self.scales.clone(),
            epsilon: self.epsilon,
            big_c: self.big_c,
            samples: self.samples,
            seed: self.seed,
            truncation: self.truncation_sites,
            eigenpairs: self.eigenpairs,
            window_epsilon: self.window_epsilon,
        }
    }
}

/// Process exit status for an error: 2 for configuration problems (and
/// rational frequencies), 3 when precision ran out, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::NonGeneric(_) => 2,
        Error::PrecisionExhausted(_) => 3,
        _ => 1,
    }
}

/// A named output file.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub body: String,
}

impl Artifact {
    fn new(name: impl Into<String>, body: String) -> Self {
        Artifact { name: name.into(), body }
    }
}

/// Writes artifacts into `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    artifacts
        .iter()
        .map(|a| {
            let p = dir.join(&a.name);
            std::fs::write(&p, &a.body)?;
            Ok(p)
        })
        .collect()
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

/// Convergent table, `beta` estimate and the Diophantine audit per scale.
pub fn cmd_cf(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let freq = cfg.build_frequency()?;
    let depth = match freq.len() {
        Some(len) if freq.period().is_empty() => cfg.cf_depth.min(len.saturating_sub(1)),
        _ => cfg.cf_depth,
    };
    let table = convergent_table(&freq, depth)?;
    let beta = if depth >= 1 { Some(beta_estimate(&freq, depth)?) } else { None };
    let audits = (1..depth).map(|n| diophantine_audit(&freq, n, cfg.q_budget)).collect::<Result<Vec<_>>>()?;
    let mut report = cfg.header();
    report["frequency"] = json!({"origin": freq.origin(), "note": freq.note(), "prefix": freq.prefix().iter().map(|a| a.to_string()).collect::<Vec<_>>(), "period": freq.period().iter().map(|a| a.to_string()).collect::<Vec<_>>()});
    report["convergents"] = json!(table);
    report["beta_estimate"] = json!(beta);
    report["diophantine"] = json!(audits);
    Ok(vec![Artifact::new("cf.json", pretty(&report))])
}

/// Energies `energy_min + i (energy_max - energy_min) / (count - 1)`.
pub fn energy_grid(cfg: &RunConfig) -> Vec<f64> {
    match cfg.energy_count {
        0 => Vec::new(),
        1 => vec![cfg.energy_min],
        c => (0..c).map(|i| cfg.energy_min + (cfg.energy_max - cfg.energy_min) * i as f64 / (c - 1) as f64).collect(),
    }
}

/// CSV sweep of `(1/k) ln ||A_k(theta)||` over the energy grid, `k_steps`
/// and `phase_samples` phases.
pub fn cmd_lyapunov(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    lyapunov_at(cfg, &energy_grid(cfg))
}

pub fn lyapunov_at(cfg: &RunConfig, energies: &[f64]) -> Result<Vec<Artifact>> {
    let freq = Arc::new(cfg.build_frequency()?);
    let mut out = cfg.csv_header();
    out.push_str("energy,theta,k,log_norm,estimate\n");
    for &e in energies {
        let p = cfg.params(freq.clone(), e)?;
        for &k in &cfg.k_steps {
            let est = lyapunov(&p, k, cfg.phase_samples)?;
            for s in &est.per_theta {
                let _ = writeln!(out, "{e},{},{},{},{}", s.theta, s.k, s.log_norm, s.estimate);
            }
        }
    }
    Ok(vec![Artifact::new("lyapunov.csv", out)])
}

/// CSV with columns `site, amplitude_sign, amplitude_log`.
pub fn eigenfunction_csv(cfg: &RunConfig, energy: f64, phi: &SiteValues) -> String {
    let mut out = cfg.csv_header();
    let _ = writeln!(out, "# energy={energy}");
    out.push_str("site,amplitude_sign,amplitude_log\n");
    for (x, v) in phi.sites() {
        if v.is_zero() {
            let _ = writeln!(out, "{x},0,-inf");
        } else {
            let _ = writeln!(out, "{x},{},{}", v.sign(), v.logmag());
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub energy: f64,
    pub center: i64,
    pub residual: f64,
    pub boundary_mass: f64,
    /// Phase at which the recentred eigenfunction lives.
    pub phase: Phase,
    pub fit: DecayFit,
    pub certificate: Option<DecayCertificate>,
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizeReport {
    pub schema_version: u32,
    pub config_hash: String,
    pub version: String,
    pub lambda: f64,
    pub beta_estimate: f64,
    pub truncation_sites: i64,
    pub warnings: Vec<String>,
    pub pairs: Vec<PairReport>,
}

/// Eigenpairs, decay fits and decay certificates at the configured phase.
/// The certificate is skipped when the phase is not completely resonant.
pub fn localize(cfg: &RunConfig) -> Result<(LocalizeReport, Vec<(f64, SiteValues)>)> {
    let freq = Arc::new(cfg.build_frequency()?);
    let beta = beta_estimate(&freq, cfg.cf_depth)?;
    let p = cfg.params(freq.clone(), 0.0)?;
    let big_l = p.big_l();
    let mut warnings = Vec::new();
    if let Some(w) = p.regime_warning(beta) {
        warnings.push(w);
    }
    let resonant = p.theta.is_resonant();
    if !resonant {
        warnings.push("theta is not completely resonant (2 theta not in alpha Z + Z): certificate disabled".into());
    }
    let op = TridiagonalOperator::new(&p, cfg.truncation_sites)?;
    let band = crate::spectral::boundary_band(cfg.truncation_sites);
    let opts = DecayOptions::default();
    let mut pairs = Vec::new();
    let mut dumps = Vec::new();
    let top = *cfg.scales.iter().max().expect("validated");
    for pair in mid_spectrum_pairs(&op, cfg.eigenpairs, 1e-8) {
        let (phase, phi) = pair.centered(&p)?;
        let fit = decay_rate(&phi, big_l, beta, &opts)?;
        let mut flags = Vec::new();
        if !fit.in_regime {
            flags.push("out_of_regime".to_string());
        }
        let side = (-phi.lo).min(phi.hi());
        let certificate = if resonant {
            let mut profiles = Vec::new();
            for &n in &cfg.scales {
                let q = freq.q_u64(n)? as i64;
                let reach = (side - window_radius(q, cfg.window_epsilon) - q / 2) / q;
                if reach >= 1 {
                    profiles.push(resonance_amplitudes(&phi, &freq, n, cfg.window_epsilon, -reach, reach)?);
                }
            }
            let lo = freq.q_u64(top)? as i64;
            let hi = (0.9 * side as f64) as i64;
            if profiles.is_empty() || lo > hi {
                flags.push("certificate_skipped: eigenfunction too close to the boundary".into());
                None
            } else {
                let c = decay_certificate(&profiles, &phi, big_l, beta, cfg.big_c, (lo, hi))?;
                if c.clamped {
                    flags.push("rate_clamped".into());
                }
                Some(c)
            }
        } else {
            None
        };
        pairs.push(PairReport {
            energy: pair.energy,
            center: pair.center(),
            residual: pair.residual,
            boundary_mass: pair.boundary_mass(band),
            phase,
            fit,
            certificate,
            flags,
        });
        dumps.push((pair.energy, phi));
    }
    let report = LocalizeReport {
        schema_version: SCHEMA_VERSION,
        config_hash: cfg.hash(),
        version: VERSION.into(),
        lambda: cfg.lambda,
        beta_estimate: beta,
        truncation_sites: cfg.truncation_sites,
        warnings,
        pairs,
    };
    Ok((report, dumps))
}

/// `localize.json` plus one `eigenfunction_XX.csv` per pair.
pub fn cmd_localize(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let (report, dumps) = localize(cfg)?;
    let mut out = vec![Artifact::new("localize.json", pretty(&serde_json::to_value(&report).expect("report")))];
    for (i, (e, phi)) in dumps.iter().enumerate() {
        out.push(Artifact::new(format!("eigenfunction_{i:02}.csv"), eigenfunction_csv(cfg, *e, phi)));
    }
    Ok(out)
}

/// JSON lines, one per audited case.
pub fn cmd_audit(cfg: &RunConfig, which: AuditKind) -> Result<Vec<Artifact>> {
    let freq = Arc::new(cfg.build_frequency()?);
    let records = run_audit(&cfg.audit_setup(freq), which)?;
    let header = cfg.header();
    let mut out = String::new();
    for r in records {
        let mut v = serde_json::to_value(&r).expect("record");
        for (k, val) in header.as_object().expect("object") {
            v[k] = val.clone();
        }
        out.push_str(&serde_json::to_string(&v).expect("json"));
        out.push('\n');
    }
    Ok(vec![Artifact::new(format!("audit_{}.jsonl", which.name()), out)])
}

/// Sorted union of truncation eigenvalues over a uniform phase grid.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let freq = Arc::new(cfg.build_frequency()?);
    let p = cfg.params(freq, 0.0)?;
    let s = spectrum_sample(&p, &uniform_phases(cfg.spectrum_phases), cfg.spectrum_sites)?;
    let mut report = cfg.header();
    report["sites"] = json!(cfg.spectrum_sites);
    report["phases"] = json!(cfg.spectrum_phases);
    report["hausdorff"] = json!(s.hausdorff);
    report["energies"] = json!(s.energies);
    Ok(vec![Artifact::new("spectrum.json", pretty(&report))])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_hash_is_stable() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.hash(), RunConfig::default().hash());
        assert_eq!(c.hash().len(), 16);
        let d = RunConfig { lambda: 3.0, ..RunConfig::default() };
        assert_ne!(c.hash(), d.hash());
        let e = RunConfig { output_dir: Some("elsewhere".into()), ..RunConfig::default() };
        assert_eq!(c.hash(), e.hash());
    }

    #[test]
    fn overrides_beat_the_file() {
        let c = RunConfig::from_sources(Some("lambda = 2.5\nscales = [9]\n"), &["lambda=3".into(), "frequency=silver".into()]).unwrap();
        assert_eq!(c.lambda, 3.0);
        assert_eq!(c.scales, vec![9]);
        assert_eq!(c.frequency, "silver");
    }

    #[test]
    fn field_level_errors() {
        let e = RunConfig::from_sources(Some("window_epsilon = 0.1\n"), &[]).unwrap_err();
        assert!(e.to_string().contains("window_epsilon"), "{e}");
        let e = RunConfig::from_sources(Some("lamda = 3\n"), &[]).unwrap_err();
        assert!(e.to_string().contains("lamda"), "{e}");
        assert_eq!(exit_code(&e), 2);
        assert!(RunConfig::from_sources(None, &["scales=[]".into()]).is_err());
        assert!(RunConfig::from_sources(None, &["noequals".into()]).is_err());
    }

    #[test]
    fn golden_table_is_fibonacci() {
        let c = RunConfig { cf_depth: 10, ..RunConfig::default() };
        let a = cmd_cf(&c).unwrap();
        let v: serde_json::Value = serde_json::from_str(&a[0].body).unwrap();
        let q: Vec<u64> = v["convergents"].as_array().unwrap().iter().map(|r| r["q"].as_str().unwrap().parse().unwrap()).collect();
        assert_eq!(q, vec![1, 1, 2, 3, 5, 8, 13, 21, 34, 55, 89]);
        assert_eq!(v["schema_version"], 1);
    }

    #[test]
    fn rational_input_is_a_config_error() {
        let c = RunConfig { frequency: "real".into(), alpha_decimal: "0.375".into(), alpha_exact: true, ..RunConfig::default() };
        let e = cmd_cf(&c).unwrap_err();
        assert!(matches!(e, Error::NonGeneric(_)));
        assert_eq!(exit_code(&e), 2);
    }

    #[test]
    fn empty_energy_window_gives_header_only() {
        let c = RunConfig { energy_count: 0, ..RunConfig::default() };
        let a = cmd_lyapunov(&c).unwrap();
        let lines: Vec<&str> = a[0].body.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("# schema_version=1 config_hash="));
        assert_eq!(lines[1], "energy,theta,k,log_norm,estimate");
    }

    #[test]
    fn free_operator_has_zero_exponent() {
        let c = RunConfig { lambda: 0.0, energy_min: 0.5, energy_max: 0.5, energy_count: 1, k_steps: vec![4000], ..RunConfig::default() };
        let a = cmd_lyapunov(&c).unwrap();
        for line in a[0].body.lines().skip(2) {
            let est: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
            assert!(est.abs() < 0.01, "{line}");
        }
    }

    #[test]
    fn real_phase_disables_certificate() {
        let c = RunConfig { theta_real: Some(0.3), truncation_sites: 200, eigenpairs: 2, scales: vec![6], ..RunConfig::default() };
        let (r, _) = localize(&c).unwrap();
        assert!(r.warnings.iter().any(|w| w.contains("certificate disabled")));
        assert!(r.pairs.iter().all(|p| p.certificate.is_none()));
    }

    #[test]
    fn out_of_regime_is_flagged() {
        let c = RunConfig { lambda: 1.05, truncation_sites: 200, eigenpairs: 2, scales: vec![6], ..RunConfig::default() };
        let (r, _) = localize(&c).unwrap();
        assert!(r.pairs.iter().all(|p| p.flags.iter().any(|f| f == "out_of_regime")));
    }

    #[test]
    fn eigenfunction_csv_columns() {
        let c = RunConfig::default();
        let phi = SiteValues::from_f64(-1, &[0.5, 1.0, -0.25]);
        let s = eigenfunction_csv(&c, 0.1, &phi);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[2], "site,amplitude_sign,amplitude_log");
        assert_eq!(lines[4], "0,1,0");
        assert!(lines[5].starts_with("1,-1,"));
    }
}
