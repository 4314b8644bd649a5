//! System parameters and decoder configuration.
//!
//! [`SystemParams`] is built from a flat key/value map by [`SystemParams::validate`]
//! and is immutable afterwards. Durations are picoseconds; the dark-count rate is
//! accepted per nanosecond and stored per picosecond.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Raw parameter map, as read from a config file or built in code.
pub type RawParams = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("`{name}` = {value} is out of range (allowed: {allowed})")]
    OutOfRange {
        name: String,
        value: f64,
        allowed: String,
    },
}

impl ParamsError {
    /// Name of the offending key.
    pub fn key(&self) -> &str {
        match self {
            ParamsError::MissingKey(k) | ParamsError::UnknownKey(k) => k,
            ParamsError::OutOfRange { name, .. } => name,
        }
    }

    fn out_of_range(name: &str, value: f64, allowed: &str) -> Self {
        ParamsError::OutOfRange {
            name: name.to_string(),
            value,
            allowed: allowed.to_string(),
        }
    }
}

pub const KEY_MU: &str = "mu";
pub const KEY_DETECTOR_EFFICIENCY: &str = "detector_efficiency";
pub const KEY_CHANNEL_LOSS_DB: &str = "channel_loss_db";
pub const KEY_SWITCH_LOSS_DB: &str = "switch_loss_db";
pub const KEY_DARK_COUNT_RATE_PER_NS: &str = "dark_count_rate_per_ns";
pub const KEY_EC_INEFFICIENCY: &str = "error_correction_inefficiency";
pub const KEY_PHASE_ERROR: &str = "phase_error";
pub const KEY_REP_PERIOD_PS: &str = "pulse_repetition_ps";
pub const KEY_SYMBOL_DURATION_PS: &str = "symbol_duration_ps";
pub const KEY_NUM_SUBCARRIERS: &str = "num_subcarriers";
pub const KEY_DELTA_OVER_TP: &str = "delta_over_tp";
pub const KEY_DWDM_SPACING_GHZ: &str = "dwdm_channel_spacing_ghz";
pub const KEY_DWDM_PULSE_PS: &str = "dwdm_pulse_ps";

/// Keys that [`SystemParams::validate`] requires.
pub const REQUIRED_KEYS: [&str; 10] = [
    KEY_MU,
    KEY_DETECTOR_EFFICIENCY,
    KEY_CHANNEL_LOSS_DB,
    KEY_DARK_COUNT_RATE_PER_NS,
    KEY_EC_INEFFICIENCY,
    KEY_PHASE_ERROR,
    KEY_REP_PERIOD_PS,
    KEY_SYMBOL_DURATION_PS,
    KEY_NUM_SUBCARRIERS,
    KEY_DELTA_OVER_TP,
];

/// Keys with a built-in default when absent from the map.
pub const OPTIONAL_KEYS: [(&str, f64); 3] = [
    (KEY_SWITCH_LOSS_DB, 2.0),
    (KEY_DWDM_SPACING_GHZ, 50.0),
    (KEY_DWDM_PULSE_PS, 100.0),
];

/// Nominal operating point: mu = 0.48, eta_d = 0.3, 10 dB loss, 1e-7 dark counts
/// per ns, f = 1.22, e_d = 0.005, T_s = 210 ps, T = 100 ps, N = 16, delta/T_p = 0.04.
pub fn table_one_raw() -> RawParams {
    [
        (KEY_MU, 0.48),
        (KEY_DETECTOR_EFFICIENCY, 0.3),
        (KEY_CHANNEL_LOSS_DB, 10.0),
        (KEY_SWITCH_LOSS_DB, 2.0),
        (KEY_DARK_COUNT_RATE_PER_NS, 1e-7),
        (KEY_EC_INEFFICIENCY, 1.22),
        (KEY_PHASE_ERROR, 0.005),
        (KEY_REP_PERIOD_PS, 210.0),
        (KEY_SYMBOL_DURATION_PS, 100.0),
        (KEY_NUM_SUBCARRIERS, 16.0),
        (KEY_DELTA_OVER_TP, 0.04),
        (KEY_DWDM_SPACING_GHZ, 50.0),
        (KEY_DWDM_PULSE_PS, 100.0),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Validated physical parameters and derived OFDM geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    mu: f64,
    detector_efficiency: f64,
    channel_loss_db: f64,
    switch_loss_db: f64,
    dark_count_rate: f64,
    ec_inefficiency: f64,
    phase_error: f64,
    rep_period: f64,
    symbol_duration: f64,
    num_subcarriers: usize,
    delta_over_tp: f64,
    dwdm_spacing_ghz: f64,
    dwdm_pulse: f64,
    chip_slot: f64,
    pulse_width: f64,
    guard: f64,
}

impl SystemParams {
    /// Validate a raw map. Unknown keys, missing required keys and invariant
    /// violations are rejected; optional keys fall back to [`OPTIONAL_KEYS`].
    pub fn validate(raw: &RawParams) -> Result<Self, ParamsError> {
        let known = |k: &str| REQUIRED_KEYS.contains(&k) || OPTIONAL_KEYS.iter().any(|(o, _)| *o == k);
        if let Some(k) = raw.keys().find(|k| !known(k)) {
            return Err(ParamsError::UnknownKey(k.clone()));
        }
        let get = |k: &str| -> Result<f64, ParamsError> {
            let v = match raw.get(k) {
                Some(v) => *v,
                None => OPTIONAL_KEYS
                    .iter()
                    .find(|(o, _)| *o == k)
                    .map(|(_, d)| *d)
                    .ok_or_else(|| ParamsError::MissingKey(k.to_string()))?,
            };
            if !v.is_finite() {
                return Err(ParamsError::out_of_range(k, v, "finite"));
            }
            Ok(v)
        };
        let check = |k: &str, ok: fn(f64) -> bool, allowed: &str| -> Result<f64, ParamsError> {
            let v = get(k)?;
            if ok(v) {
                Ok(v)
            } else {
                Err(ParamsError::out_of_range(k, v, allowed))
            }
        };

        let mu = check(KEY_MU, |v| v > 0.0, "> 0")?;
        let detector_efficiency = check(KEY_DETECTOR_EFFICIENCY, |v| v > 0.0 && v <= 1.0, "(0, 1]")?;
        let channel_loss_db = check(KEY_CHANNEL_LOSS_DB, |v| v >= 0.0, ">= 0")?;
        let switch_loss_db = check(KEY_SWITCH_LOSS_DB, |v| v >= 0.0, ">= 0")?;
        let dark_per_ns = check(KEY_DARK_COUNT_RATE_PER_NS, |v| v >= 0.0, ">= 0")?;
        let ec_inefficiency = check(KEY_EC_INEFFICIENCY, |v| v >= 1.0, ">= 1")?;
        let phase_error = check(KEY_PHASE_ERROR, |v| (0.0..0.5).contains(&v), "[0, 0.5)")?;
        let symbol_duration = check(KEY_SYMBOL_DURATION_PS, |v| v > 0.0, "> 0")?;
        let rep_period = get(KEY_REP_PERIOD_PS)?;
        if rep_period < symbol_duration {
            return Err(ParamsError::out_of_range(
                KEY_REP_PERIOD_PS,
                rep_period,
                &format!(">= symbol_duration_ps ({symbol_duration})"),
            ));
        }
        let n_raw = check(KEY_NUM_SUBCARRIERS, |v| v >= 1.0 && v.fract() == 0.0 && v <= 4096.0, "integer in [1, 4096]")?;
        let delta_over_tp = check(KEY_DELTA_OVER_TP, |v| v >= 0.0, ">= 0")?;
        let dwdm_spacing_ghz = check(KEY_DWDM_SPACING_GHZ, |v| v > 0.0, "> 0")?;
        let dwdm_pulse = check(KEY_DWDM_PULSE_PS, |v| v > 0.0, "> 0")?;

        let num_subcarriers = n_raw as usize;
        let chip_slot = symbol_duration / num_subcarriers as f64;
        let pulse_width = chip_slot / (1.0 + 2.0 * delta_over_tp);
        let guard = delta_over_tp * pulse_width;

        Ok(SystemParams {
            mu,
            detector_efficiency,
            channel_loss_db,
            switch_loss_db,
            dark_count_rate: dark_per_ns / 1000.0,
            ec_inefficiency,
            phase_error,
            rep_period,
            symbol_duration,
            num_subcarriers,
            delta_over_tp,
            dwdm_spacing_ghz,
            dwdm_pulse,
            chip_slot,
            pulse_width,
            guard,
        })
    }

    /// Nominal operating point with `N = 16`.
    pub fn table_one() -> Self {
        Self::validate(&table_one_raw()).expect("nominal parameters are valid")
    }

    /// Back to the raw key/value form accepted by [`SystemParams::validate`].
    pub fn to_raw(&self) -> RawParams {
        [
            (KEY_MU, self.mu),
            (KEY_DETECTOR_EFFICIENCY, self.detector_efficiency),
            (KEY_CHANNEL_LOSS_DB, self.channel_loss_db),
            (KEY_SWITCH_LOSS_DB, self.switch_loss_db),
            (KEY_DARK_COUNT_RATE_PER_NS, self.dark_count_rate * 1000.0),
            (KEY_EC_INEFFICIENCY, self.ec_inefficiency),
            (KEY_PHASE_ERROR, self.phase_error),
            (KEY_REP_PERIOD_PS, self.rep_period),
            (KEY_SYMBOL_DURATION_PS, self.symbol_duration),
            (KEY_NUM_SUBCARRIERS, self.num_subcarriers as f64),
            (KEY_DELTA_OVER_TP, self.delta_over_tp),
            (KEY_DWDM_SPACING_GHZ, self.dwdm_spacing_ghz),
            (KEY_DWDM_PULSE_PS, self.dwdm_pulse),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }

    /// Copy with one key replaced, re-validated.
    pub fn with_value(&self, key: &str, value: f64) -> Result<Self, ParamsError> {
        let mut raw = self.to_raw();
        raw.insert(key.to_string(), value);
        Self::validate(&raw)
    }

    pub fn with_subcarriers(&self, n: usize) -> Result<Self, ParamsError> {
        self.with_value(KEY_NUM_SUBCARRIERS, n as f64)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn detector_efficiency(&self) -> f64 {
        self.detector_efficiency
    }

    pub fn channel_loss_db(&self) -> f64 {
        self.channel_loss_db
    }

    pub fn switch_loss_db(&self) -> f64 {
        self.switch_loss_db
    }

    /// Dark counts per picosecond.
    pub fn dark_count_rate(&self) -> f64 {
        self.dark_count_rate
    }

    pub fn ec_inefficiency(&self) -> f64 {
        self.ec_inefficiency
    }

    pub fn phase_error(&self) -> f64 {
        self.phase_error
    }

    /// Protocol repetition period T_s.
    pub fn rep_period(&self) -> f64 {
        self.rep_period
    }

    /// OFDM symbol duration T.
    pub fn symbol_duration(&self) -> f64 {
        self.symbol_duration
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn delta_over_tp(&self) -> f64 {
        self.delta_over_tp
    }

    pub fn dwdm_spacing_ghz(&self) -> f64 {
        self.dwdm_spacing_ghz
    }

    pub fn dwdm_pulse(&self) -> f64 {
        self.dwdm_pulse
    }

    /// Chip slot T_c = T / N.
    pub fn chip_slot(&self) -> f64 {
        self.chip_slot
    }

    /// Scheme II pulse width T_p, so that T_p + 2 delta = T_c.
    pub fn pulse_width(&self) -> f64 {
        self.pulse_width
    }

    /// Scheme II guard delta on each side of the pulse.
    pub fn guard(&self) -> f64 {
        self.guard
    }

    /// Link transmissivity excluding the gating stage: detector efficiency and
    /// channel loss, plus the switch insertion loss for the active decoder.
    pub fn eta_sys(&self, kind: SchemeKind) -> f64 {
        let mut eta = self.detector_efficiency * db_to_linear(self.channel_loss_db);
        if kind == SchemeKind::Scheme2Active {
            eta *= db_to_linear(self.switch_loss_db);
        }
        eta
    }
}

/// Power transmission for a loss given in dB.
pub fn db_to_linear(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Decoder configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeKind {
    /// Directly generated subcarriers, passive MZI-tree ODFT.
    Scheme1Passive,
    /// OIDFT-generated pulse trains, passive MZI-tree ODFT.
    Scheme2Passive,
    /// OIDFT-generated pulse trains, switch + star-FFT decoder.
    Scheme2Active,
    /// Single carrier per 50 GHz slot.
    DwdmBaseline,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Scheme1Passive,
        SchemeKind::Scheme2Passive,
        SchemeKind::Scheme2Active,
        SchemeKind::DwdmBaseline,
    ];

    pub const OFDM: [SchemeKind; 3] = [
        SchemeKind::Scheme1Passive,
        SchemeKind::Scheme2Passive,
        SchemeKind::Scheme2Active,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Scheme1Passive => "scheme1",
            SchemeKind::Scheme2Passive => "scheme2-passive",
            SchemeKind::Scheme2Active => "scheme2-active",
            SchemeKind::DwdmBaseline => "dwdm",
        }
    }

    pub fn is_ofdm(self) -> bool {
        self != SchemeKind::DwdmBaseline
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scheme `{s}` (expected scheme1, scheme2-passive, scheme2-active or dwdm)"))
    }
}

/// Decoder configuration plus the gate narrowing `b` applied to each side
/// of the chip-slot gate (T_g = T_c - 2b). Ignored by the DWDM baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    gate_narrowing: f64,
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind, gate_narrowing: f64) -> Result<Self, ParamsError> {
        if !(gate_narrowing.is_finite() && gate_narrowing >= 0.0) {
            return Err(ParamsError::out_of_range("gate_narrowing", gate_narrowing, ">= 0"));
        }
        Ok(SchemeSpec { kind, gate_narrowing })
    }

    /// Full chip-slot gate.
    pub fn full_gate(kind: SchemeKind) -> Self {
        SchemeSpec { kind, gate_narrowing: 0.0 }
    }

    pub fn gate_narrowing(&self) -> f64 {
        if self.kind.is_ofdm() {
            self.gate_narrowing
        } else {
            0.0
        }
    }
}
