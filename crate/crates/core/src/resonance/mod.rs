//! Lagrange interpolation terms, sampling schemes, resonance profiles and the
//! decay certificate assembled from them.

pub mod certificate;
pub mod lagrange;
pub mod profile;
pub mod scheme;

pub use certificate::{decay_certificate, DecayCertificate, ScaleCertificate};
pub use lagrange::{lagrange_terms, uniform_witness, LagrangeTerms, UniformWitness};
pub use profile::{resonance_amplitudes, ResonanceProfile};
pub use scheme::{build_scheme, sine_minima_audit, LagrangeScheme, SchemeKind, SineMinimaAudit};
