//! Library side of the `ofdmqkd` command: config files, sweeps, figure
//! presets, oracle verification and report formatting.

pub mod config;
pub mod figures;
pub mod sweep;
pub mod verify;

use std::fmt::Write;

use ofdmqkd::schemes::KeyRateReport;

pub const THREADS_ENV: &str = "OFDMQKD_THREADS";

/// Rayon pool honouring `OFDMQKD_THREADS` (unset or 0: one thread per core).
pub fn thread_pool() -> Result<rayon::ThreadPool, String> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("{THREADS_ENV} must be a non-negative integer, got `{v}`"))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())
}

/// Every link-budget and key-rate field as `key = value unit` lines.
pub fn format_report(r: &KeyRateReport) -> String {
    let b = &r.budget;
    let g = &r.gains;
    let mut out = String::new();
    let mut line = |key: &str, value: String, unit: &str| {
        let _ = writeln!(out, "{key:<20} = {value}{}{unit}", if unit.is_empty() { "" } else { " " });
    };
    line("scheme", r.scheme.to_string(), "");
    line("channels", r.channels.to_string(), "");
    line("gate_narrowing", format!("{:.9e}", r.gate_narrowing), "ps");
    line("gate_width", format!("{:.9e}", b.gate_width), "ps");
    line("eta_g", format!("{:.9e}", b.eta_g), "");
    line("eta_sys", format!("{:.9e}", b.eta_sys), "");
    line("eta", format!("{:.9e}", b.eta), "");
    line("p_dc", format!("{:.9e}", b.p_dc), "per gate");
    line("p_xtalk", format!("{:.9e}", b.p_xtalk), "per gate");
    line("eta_g_clamped", b.eta_g_clamped.to_string(), "");
    line("extrapolated", b.extrapolated.to_string(), "");
    line("y0", format!("{:.9e}", r.y0), "");
    line("q_mu", format!("{:.9e}", g.q_mu), "");
    line("e_mu", format!("{:.9e}", g.e_mu), "");
    line("q1", format!("{:.9e}", g.q1), "");
    line("e1", format!("{:.9e}", g.e1), "");
    line("p_per_pulse", format!("{:.9e}", r.p_per_pulse), "bit/pulse");
    line("r_total", format!("{:.9e}", r.rate_bps), "bit/s");
    line("bandwidth", format!("{:.9e}", r.bandwidth_hz), "Hz");
    line("spectral_efficiency", format!("{:.9e}", r.spectral_efficiency), "bit/s/Hz");
    line("s_percent", format!("{:.9e}", 100.0 * r.spectral_efficiency), "%");
    out
}
