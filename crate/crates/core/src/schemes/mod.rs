//! Closed-form link budgets and key-rate reports for the three OFDM decoders
//! and the single-carrier DWDM baseline.

mod optimize;

pub use optimize::{gate_kinks, golden_section_max, optimize_gate, GATE_GRID_POINTS};

use thiserror::Error;

use crate::keyrate::{self, GainErrorSet, KeyRateError};
use crate::misalign::TimingStatistics;
use crate::params::{ParamsError, SchemeKind, SchemeSpec, SystemParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("gate narrowing b = {b} ps must lie in [0, {limit}) ps")]
    InvalidGate { b: f64, limit: f64 },
    #[error(transparent)]
    KeyRate(#[from] KeyRateError),
    #[error(transparent)]
    Params(#[from] ParamsError),
}

/// Per-gate transmission and noise figures of one decoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    /// Fraction of the signal energy collected by the gate.
    pub eta_g: f64,
    /// Detector efficiency times channel (and switch) loss.
    pub eta_sys: f64,
    /// eta_g * eta_sys.
    pub eta: f64,
    /// Dark-count probability per gate.
    pub p_dc: f64,
    /// Inter-subcarrier crosstalk click probability per gate.
    pub p_xtalk: f64,
    /// Gate width T_g in ps.
    pub gate_width: f64,
    /// eta_g fell outside [0, 1] and was clamped.
    pub eta_g_clamped: bool,
    /// Timing errors can exceed a chip slot, beyond the overlap geometry the
    /// expressions are built on.
    pub extrapolated: bool,
}

/// Everything the key-rate pipeline produces for one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateReport {
    pub scheme: SchemeKind,
    /// Number of parallel QKD channels.
    pub channels: usize,
    pub gate_narrowing: f64,
    pub budget: LinkBudget,
    pub y0: f64,
    pub gains: GainErrorSet,
    /// Secure key per pulse, unclamped.
    pub p_per_pulse: f64,
    /// Aggregate secure key rate in bit/s, clamped at zero.
    pub rate_bps: f64,
    /// Occupied optical bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// rate / bandwidth in bit/s/Hz.
    pub spectral_efficiency: f64,
}

fn clamp_unit(x: f64) -> (f64, bool) {
    if x < 0.0 {
        (0.0, true)
    } else if x > 1.0 {
        (1.0, true)
    } else {
        (x, false)
    }
}

/// E[(|tau| - x)^+], also for x < 0.
fn ramp(stats: &impl TimingStatistics, x: f64) -> f64 {
    if x <= 0.0 {
        stats.mean_abs() - x
    } else {
        stats.excess(x)
    }
}

/// Scheme I: gated fraction of the matched symbol and crosstalk energy per
/// unit of mu eta'. The last delayed copy is missing from the gate over
/// w(|tau|) = clamp(|tau|, b, T_c - b) - b.
fn scheme1_terms(n: f64, t: f64, tc: f64, b: f64, stats: &impl TimingStatistics) -> (f64, f64) {
    let c = 1.0 - ((n - 1.0) / n).powi(2);
    let w = ramp(stats, b) - ramp(stats, tc - b);
    let eta_g = 1.0 / n - 2.0 * b / t - c * w / t;
    let xtalk_per_unit = 2.0 * (n - 1.0) / (n * n * t) * w;
    (eta_g, xtalk_per_unit)
}

/// Scheme II through the passive ODFT. Relative to the gate slot, the fully
/// combined pulse sits on [delta + t, T_c - delta + t) and the previous slot's
/// pulse, carrying (N-1)/N of the matched and 1/N of each mismatched
/// amplitude, on [delta + t - T_c, t - delta). Both overlaps with the gate
/// [b, T_c - b) are trapezoids in t = |tau|, written as sums of ramps.
fn scheme2_terms(n: f64, tc: f64, tp: f64, delta: f64, b: f64, stats: &impl TimingStatistics) -> (f64, f64) {
    let c = 1.0 - ((n - 1.0) / n).powi(2);
    let g = tc - 2.0 * b;
    let (short, long) = (g.min(tp), g.max(tp));
    let main = short - ramp(stats, (b - delta).abs()) + ramp(stats, tc - delta - b);
    let prev = ramp(stats, b + delta) - ramp(stats, b + delta + short) - ramp(stats, b + delta + long)
        + ramp(stats, 2.0 * tc - delta - b);
    let shortfall = tp - main - (1.0 - c) * prev;
    let eta_g = 1.0 / n - shortfall / (n * tp);
    let xtalk_per_unit = 2.0 * (n - 1.0) / (n * n * n * tp) * prev;
    (eta_g, xtalk_per_unit)
}

/// Passive Scheme II gating efficiency as the tail-statistics expansion over
/// |tau| >= b + delta, |b - delta| <= |tau| < b + delta and |tau| < b - delta.
/// Agrees with [`link_budget`] while |tau| < T_c - delta - b; beyond that the
/// expansion keeps charging the combined pulse for leaving a gate it has
/// already left.
pub fn scheme2_eta_g_expanded(params: &SystemParams, b: f64, stats: &impl TimingStatistics) -> f64 {
    let n = params.num_subcarriers() as f64;
    let (tp, delta) = (params.pulse_width(), params.guard());
    let c = 1.0 - ((n - 1.0) / n).powi(2);
    let (x1, x2) = (b + delta, (b - delta).abs());
    let (p1, e1) = (stats.tail_prob(x1), stats.tail_mean(x1));
    let (p2, e2) = (stats.tail_prob(x2), stats.tail_mean(x2));
    let p3 = if b > delta { 1.0 - stats.tail_prob(b - delta) } else { 0.0 };
    let outer = 2.0 * b * p1 + c * stats.excess(x1);
    let middle = (b - delta) * (p2 - p1) + (p2 * e2 - p1 * e1);
    let inner = 2.0 * (b - delta) * p3;
    1.0 / n - (outer + middle + inner) / (n * tp)
}

/// Closed-form link budget.
pub fn link_budget(
    scheme: &SchemeSpec,
    params: &SystemParams,
    stats: &impl TimingStatistics,
) -> Result<LinkBudget, SchemeError> {
    let kind = scheme.kind;
    let eta_sys = params.eta_sys(kind);
    if kind == SchemeKind::DwdmBaseline {
        let gate_width = params.dwdm_pulse();
        return Ok(LinkBudget {
            eta_g: 1.0,
            eta_sys,
            eta: eta_sys,
            p_dc: params.dark_count_rate() * gate_width,
            p_xtalk: 0.0,
            gate_width,
            eta_g_clamped: false,
            extrapolated: false,
        });
    }

    let tc = params.chip_slot();
    let b = scheme.gate_narrowing();
    if !(b >= 0.0 && b < tc / 2.0) {
        return Err(SchemeError::InvalidGate { b, limit: tc / 2.0 });
    }
    let n = params.num_subcarriers() as f64;
    let mu = params.mu();
    let (raw_eta_g, p_xtalk) = match kind {
        SchemeKind::Scheme1Passive => {
            let (g, x) = scheme1_terms(n, params.symbol_duration(), tc, b, stats);
            (g, x * mu * eta_sys)
        }
        SchemeKind::Scheme2Passive => {
            let (g, x) = scheme2_terms(n, tc, params.pulse_width(), params.guard(), b, stats);
            (g, x * mu * eta_sys)
        }
        // The switch routes every chip slot to the FFT: N times the passive
        // figures, kept as a literal product so the identity is exact.
        SchemeKind::Scheme2Active => {
            let (g, x) = scheme2_terms(n, tc, params.pulse_width(), params.guard(), b, stats);
            (n * g, n * (x * mu * eta_sys))
        }
        SchemeKind::DwdmBaseline => unreachable!(),
    };
    let (eta_g, eta_g_clamped) = clamp_unit(raw_eta_g);
    let gate_width = tc - 2.0 * b;
    Ok(LinkBudget {
        eta_g,
        eta_sys,
        eta: eta_g * eta_sys,
        p_dc: params.dark_count_rate() * gate_width,
        p_xtalk,
        gate_width,
        eta_g_clamped,
        extrapolated: stats.support_bound().is_none_or(|a| a >= tc),
    })
}

/// Full key-rate pipeline for one decoder configuration.
pub fn key_rate(
    scheme: &SchemeSpec,
    params: &SystemParams,
    stats: &impl TimingStatistics,
) -> Result<KeyRateReport, SchemeError> {
    let budget = link_budget(scheme, params, stats)?;
    let y0 = keyrate::ofdm_yield(budget.p_dc, budget.p_xtalk)?;
    let gains = keyrate::gains_and_errors(budget.eta, params.mu(), y0, params.phase_error())?;
    let p_per_pulse = keyrate::secret_fraction(&gains, params.ec_inefficiency())?;
    let (channels, bandwidth_hz) = if scheme.kind.is_ofdm() {
        let n = params.num_subcarriers();
        (n, n as f64 / (params.symbol_duration() * 1e-12))
    } else {
        (1, params.dwdm_spacing_ghz() * 1e9)
    };
    let rate_bps = keyrate::total_rate(p_per_pulse, channels, params.rep_period());
    Ok(KeyRateReport {
        scheme: scheme.kind,
        channels,
        gate_narrowing: scheme.gate_narrowing(),
        budget,
        y0,
        gains,
        p_per_pulse,
        rate_bps,
        bandwidth_hz,
        spectral_efficiency: rate_bps / bandwidth_hz,
    })
}

/// Single carrier in one DWDM slot, no crosstalk, full-pulse gate.
pub fn dwdm_baseline(params: &SystemParams) -> Result<KeyRateReport, SchemeError> {
    key_rate(
        &SchemeSpec::full_gate(SchemeKind::DwdmBaseline),
        params,
        &crate::misalign::MisalignmentModel::aligned(),
    )
}
