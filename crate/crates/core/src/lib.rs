//! Link models for decoy-state BB84 carried over all-optical OFDM.
//!
//! The crate is organised bottom-up:
//!
//! - [`params`]: physical constants, derived chip/pulse geometry and the
//!   decoder configuration ([`SchemeSpec`]).
//! - [`misalign`]: the per-subcarrier timing-error model and the three
//!   statistics the closed-form link budgets consume.
//! - [`optics`]: complex-envelope simulation of the MZI-based ODFT, the
//!   active switch + star-FFT decoder and the Monte-Carlo link-budget oracle.
//! - [`keyrate`]: infinite-decoy secret-key-rate expressions.
//! - [`schemes`]: closed-form link budgets, key-rate reports, gate-width
//!   optimization and the single-carrier DWDM baseline.
//!
//! All times are in picoseconds.

pub mod keyrate;
pub mod misalign;
pub mod optics;
pub mod params;
pub mod schemes;

pub use keyrate::{GainErrorSet, KeyRateError};
pub use misalign::{MisalignmentModel, TimingStatistics};
pub use params::{ParamsError, SchemeKind, SchemeSpec, SystemParams};
pub use schemes::{KeyRateReport, LinkBudget, SchemeError};
