//! Infinite-decoy BB84 key-rate expressions (GLLP with decoy states).

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KeyRateError {
    #[error("probability {0} outside [0, 1]")]
    DomainError(f64),
    #[error("noise probabilities p_dc = {p_dc}, p_xtalk = {p_xtalk} sum above 1")]
    ProbabilityOverflow { p_dc: f64, p_xtalk: f64 },
    #[error("transmissivity {0} outside (0, 1]")]
    DegenerateChannel(f64),
    #[error("inconsistent gain/error set: {0}")]
    InvalidGainSet(String),
}

/// Signal gain, QBER, single-photon gain and single-photon error rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainErrorSet {
    pub q_mu: f64,
    pub e_mu: f64,
    pub q1: f64,
    pub e1: f64,
}

/// h(p) = -p log2 p - (1-p) log2 (1-p), with h(0) = h(1) = 0.
pub fn binary_entropy(p: f64) -> Result<f64, KeyRateError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(KeyRateError::DomainError(p));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (-p).ln_1p() / std::f64::consts::LN_2)
}

/// Background yield of a gated OFDM detector: either of two detectors clicks
/// from a dark count or crosstalk, Y0 = 1 - (1 - (p_dc + p_xtalk))^2.
pub fn ofdm_yield(p_dc: f64, p_xtalk: f64) -> Result<f64, KeyRateError> {
    if p_dc < 0.0 || p_xtalk < 0.0 || !p_dc.is_finite() || !p_xtalk.is_finite() {
        return Err(KeyRateError::DomainError(if p_dc < 0.0 { p_dc } else { p_xtalk }));
    }
    let p = p_dc + p_xtalk;
    if p > 1.0 {
        return Err(KeyRateError::ProbabilityOverflow { p_dc, p_xtalk });
    }
    // 1 - (1 - p)^2 = p (2 - p), free of cancellation for small p.
    Ok(p * (2.0 - p))
}

/// Gains and error rates for overall transmissivity `eta`, mean photon number
/// `mu`, background yield `y0` and optical misalignment error `e_d`.
pub fn gains_and_errors(eta: f64, mu: f64, y0: f64, e_d: f64) -> Result<GainErrorSet, KeyRateError> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(KeyRateError::DegenerateChannel(eta));
    }
    for p in [y0, e_d] {
        if !(0.0..=1.0).contains(&p) {
            return Err(KeyRateError::DomainError(p));
        }
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(KeyRateError::InvalidGainSet(format!("mu = {mu}")));
    }
    // 1 - e^{-eta mu} via expm1 keeps precision for eta mu << 1.
    let detect = -(-eta * mu).exp_m1();
    let q_mu = y0 + (1.0 - y0) * detect;
    let e_mu = (0.5 * y0 + e_d * detect) / q_mu;
    let y1 = (1.0 - eta) * y0 + eta;
    let q1 = y1 * mu * (-mu).exp();
    let e1 = (0.5 * y0 + e_d * eta) / y1;
    let set = GainErrorSet { q_mu, e_mu, q1, e1 };
    if !(q1 <= q_mu && e_mu <= 0.5 + 1e-12 && e1 <= 0.5 + 1e-12) {
        return Err(KeyRateError::InvalidGainSet(format!("{set:?}")));
    }
    Ok(set)
}

/// Secure key per pulse P = Q1 (1 - h(e1)) - f Q_mu h(E_mu). May be negative.
pub fn secret_fraction(set: &GainErrorSet, f: f64) -> Result<f64, KeyRateError> {
    Ok(set.q1 * (1.0 - binary_entropy(set.e1.min(0.5))?) - f * set.q_mu * binary_entropy(set.e_mu.min(0.5))?)
}

/// Aggregate key rate in bit/s for `n` parallel channels, repetition period
/// `t_s` in ps; negative key fractions are clamped to zero.
pub fn total_rate(p_per_pulse: f64, n: usize, t_s: f64) -> f64 {
    (n as f64 * p_per_pulse / (t_s * 1e-12)).max(0.0)
}
