use crate::misalign::TimingStatistics;
use crate::params::{SchemeKind, SchemeSpec, SystemParams};

use super::{dwdm_baseline, key_rate, KeyRateReport, SchemeError};

/// Coarse grid resolution over b in [0, T_c/2).
pub const GATE_GRID_POINTS: usize = 256;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`. Returns (x, f(x)).
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Narrowings at which the link budget changes piecewise form; the optimum
/// often sits on one of them. Only those inside [0, T_c/2) are returned.
pub fn gate_kinks(kind: SchemeKind, params: &SystemParams, stats: &impl TimingStatistics) -> Vec<f64> {
    let Some(a) = stats.support_bound() else {
        return Vec::new();
    };
    let (tc, tp, delta) = (params.chip_slot(), params.pulse_width(), params.guard());
    // Values of b at which a ramp breakpoint of the link budget meets the
    // support edge a, plus b = delta where gate and pulse widths swap order.
    let raw = match kind {
        SchemeKind::Scheme1Passive => vec![a, tc - a],
        SchemeKind::Scheme2Passive | SchemeKind::Scheme2Active => vec![
            delta,
            delta + a,
            delta - a,
            a - delta,
            tc - delta - a,
            tc + delta - a,
            a - delta - tp,
            a + delta - tc,
            2.0 * tc - delta - a,
        ],
        SchemeKind::DwdmBaseline => Vec::new(),
    };
    let limit = tc / 2.0;
    raw.into_iter().filter(|&b| b >= 0.0 && b < limit).collect()
}

/// Gate narrowing maximising the secret key per pulse, with the report at that
/// point. Grid search, golden-section refinement around the best grid point,
/// then the piecewise breakpoints; ties go to the smaller narrowing. When no
/// narrowing yields a positive key the full gate is returned.
pub fn optimize_gate(
    kind: SchemeKind,
    params: &SystemParams,
    stats: &impl TimingStatistics,
) -> Result<(f64, KeyRateReport), SchemeError> {
    if !kind.is_ofdm() {
        return Ok((0.0, dwdm_baseline(params)?));
    }
    let tc = params.chip_slot();
    let step = tc / 2.0 / GATE_GRID_POINTS as f64;
    let b_max = step * (GATE_GRID_POINTS - 1) as f64;
    let objective = |b: f64| -> f64 {
        SchemeSpec::new(kind, b)
            .ok()
            .and_then(|s| key_rate(&s, params, stats).ok())
            .map_or(f64::NEG_INFINITY, |r| r.p_per_pulse)
    };

    let mut best = (0.0, objective(0.0));
    let mut best_i = 0;
    for i in 1..GATE_GRID_POINTS {
        let b = i as f64 * step;
        let v = objective(b);
        if v > best.1 {
            best = (b, v);
            best_i = i;
        }
    }
    let lo = best_i.saturating_sub(1) as f64 * step;
    let hi = ((best_i + 1) as f64 * step).min(b_max);
    let mut candidates = vec![golden_section_max(objective, lo, hi, 1e-4 * tc)];
    candidates.extend(gate_kinks(kind, params, stats).into_iter().map(|b| (b, objective(b))));
    for (b, v) in candidates {
        if v > best.1 || (v == best.1 && b < best.0) {
            best = (b, v);
        }
    }

    let b_star = if best.1 > 0.0 { best.0 } else { 0.0 };
    let report = key_rate(&SchemeSpec::new(kind, b_star)?, params, stats)?;
    Ok((b_star, report))
}
