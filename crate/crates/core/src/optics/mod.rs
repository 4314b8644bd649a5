//! Complex-envelope optics: 2x2 couplers, MZI stages, the ODFT and the
//! Monte-Carlo link-budget oracle.

mod matrix;
mod oracle;
mod tree;
mod waveform;

pub use matrix::{dft_matrix, mzi_matrix, ComplexMatrix};
pub use oracle::{mc_link_budget, mc_link_budget_gates, McEstimate};
pub use tree::{mzi_apply, odft_tree, TreeOutput};
pub use waveform::{gated_energy, odft_ports, GateWindow, Waveform};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpticsError {
    #[error("gate [{start}, {end}) extends beyond waveform support [{support_start}, {support_end})")]
    GateOutsideSupport {
        start: f64,
        end: f64,
        support_start: f64,
        support_end: f64,
    },
    #[error("invalid gate window [{0}, {1})")]
    InvalidGate(f64, f64),
    #[error("time {value} is not a multiple of the sample period {period}")]
    OffGrid { value: f64, period: f64 },
    #[error("sample periods differ: {0} vs {1}")]
    PeriodMismatch(f64, f64),
    #[error("MZI-tree ODFT needs a power-of-two size, got {0}")]
    NotPowerOfTwo(usize),
    #[error("sample period must be finite and > 0, got {0}")]
    InvalidPeriod(f64),
}
