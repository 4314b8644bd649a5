//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs under `cargo test` (custom harness).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use ofdmqkd::misalign::MisalignmentModel;
use ofdmqkd::optics::{dft_matrix, gated_energy, mc_link_budget, mzi_matrix, odft_ports, odft_tree, GateWindow, Waveform};
use ofdmqkd::schemes::{dwdm_baseline, key_rate, link_budget, optimize_gate};
use ofdmqkd::{SchemeKind, SchemeSpec, SystemParams};
use ofdmqkd_cli::figures::{figure_rows, presets, DEFAULT_GRID};
use ofdmqkd_cli::sweep::{SweepGrid, SweepRow};
use ofdmqkd_cli::verify::{run_verify, A_OVER_TC};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn table_one() -> SystemParams {
    SystemParams::table_one()
}

fn ideal_gating() -> Outcome {
    let aligned = MisalignmentModel::aligned();
    for n in [4usize, 8, 16] {
        let p = table_one().with_subcarriers(n).unwrap();
        for kind in SchemeKind::OFDM {
            let spec = SchemeSpec::full_gate(kind);
            let want = if kind == SchemeKind::Scheme2Active { 1.0 } else { 1.0 / n as f64 };
            let closed = link_budget(&spec, &p, &aligned).unwrap();
            let mc = mc_link_budget(&spec, &p, &aligned, 4096, 1);
            if closed.eta_g != want || closed.p_xtalk != 0.0 {
                return Err(format!("{kind} N={n}: closed eta_g = {:e}, want {want:e}", closed.eta_g));
            }
            if (mc.eta_g - want).abs() > 1e-12 {
                return Err(format!("{kind} N={n}: Monte-Carlo eta_g = {:e}, want {want:e}", mc.eta_g));
            }
        }
    }
    Ok("eta_g = 1/N (scheme1, scheme2-passive) and 1 (scheme2-active) for N in {4,8,16}".into())
}

fn active_is_n_passive() -> Outcome {
    let mut cells = 0;
    for n in [4usize, 8, 16] {
        let p = table_one().with_subcarriers(n).unwrap().with_value("switch_loss_db", 0.0).unwrap();
        let tc = p.chip_slot();
        for af in A_OVER_TC {
            let m = MisalignmentModel::uniform(af * tc).unwrap();
            for bf in [0.0, 0.02, 0.05, 0.15] {
                let pas = link_budget(&SchemeSpec::new(SchemeKind::Scheme2Passive, bf * tc).unwrap(), &p, &m).unwrap();
                let act = link_budget(&SchemeSpec::new(SchemeKind::Scheme2Active, bf * tc).unwrap(), &p, &m).unwrap();
                let k = n as f64;
                if act.eta_g != k * pas.eta_g || act.p_xtalk != k * pas.p_xtalk {
                    return Err(format!("N={n} a/Tc={af} b/Tc={bf}: {act:?} vs {k} x {pas:?}"));
                }
                cells += 1;
            }
        }
    }
    ensure(cells == 48, format!("bit-exact on {cells} cells"))
}

fn oracle_equivalence() -> Outcome {
    let (trials, seed) = (1_000_000, 42);
    let cells = run_verify(&table_one(), trials, seed, &A_OVER_TC).map_err(|e| e.to_string())?;
    let failed: Vec<String> = cells.iter().filter(|c| !c.passed()).map(|c| c.table_row()).collect();
    // Aligned cells and analytically zero crosstalk have round-off-level
    // spread; their z-scores say nothing statistical and are left out.
    let worst = cells
        .iter()
        .flat_map(|c| {
            [
                (c.closed.eta_g, c.mc.eta_g, c.mc.eta_g_stderr),
                (c.closed.p_xtalk, c.mc.p_xtalk, c.mc.p_xtalk_stderr),
            ]
        })
        .filter(|&(v, _, se)| se > 1e-9 * v.abs() && se > 1e-30)
        .map(|(v, est, se)| ((v - est) / se).abs())
        .fold(0.0, f64::max);
    ensure(
        failed.is_empty(),
        format!(
            "{}/{} cells within 3 sigma and 1% ({trials} trials, seed {seed}, worst statistical |z| = {worst:.2}){}",
            cells.len() - failed.len(),
            cells.len(),
            failed.iter().map(|f| format!("\n    {f}")).collect::<String>()
        ),
    )
}

fn circuit_correctness() -> Outcome {
    let mut worst_tree = 0.0f64;
    let mut worst_leak = 0.0f64;
    let t = 100.0;
    for n in [2usize, 4, 8] {
        let tc = t / n as f64;
        let dt = tc / 64.0;
        let chirp = Waveform::from_fn(dt, 0.0, t, |x| Complex64::from_polar(1.0 + 0.01 * x, 0.2 * x + 0.003 * x * x)).unwrap();
        let tree = odft_tree(&chirp, n, tc).map_err(|e| e.to_string())?;
        let direct = odft_ports(&chirp, n, tc).map_err(|e| e.to_string())?;
        for m in 0..n {
            let expected = direct[m].scaled(tree.phases[m]);
            let diff = Waveform::sum(&[tree.ports[m].clone(), expected.scaled((-1.0).into())]).unwrap();
            worst_tree = diff.samples().iter().map(|s| s.norm()).fold(worst_tree, f64::max);
        }
        // Single subcarrier k at orthogonal spacing, unit energy over [0, T).
        for k in 0..n {
            let x = Waveform::tone_burst(dt, 0.0, t, Complex64::new(t.sqrt().recip(), 0.0), 2.0 * PI * k as f64 / t).unwrap();
            let ports = odft_ports(&x, n, tc).unwrap();
            let gate = GateWindow::new(t - tc, t).unwrap();
            for (m, y) in ports.iter().enumerate() {
                let e = gated_energy(y, &gate).unwrap();
                if m == k {
                    if (e - 1.0 / n as f64).abs() > 1e-10 {
                        return Err(format!("N={n} k={k}: matched gated energy {e}"));
                    }
                } else {
                    worst_leak = worst_leak.max(e);
                }
            }
        }
    }
    let mut worst_unitary = 0.0f64;
    for n in [1usize, 2, 4, 8, 16] {
        worst_unitary = worst_unitary.max(dft_matrix(n).unitarity_defect());
    }
    for (omega, delay) in [(0.0, 0.0), (0.7, 3.0), (2.0 * PI / 100.0, 50.0), (1.3, 12.5)] {
        for phase in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
            worst_unitary = worst_unitary.max(mzi_matrix(omega, delay, phase).unitarity_defect());
        }
    }
    let msg = format!(
        "tree vs delay-sum max |diff| = {worst_tree:.1e}, unitarity defect = {worst_unitary:.1e}, mismatched-port leakage = {worst_leak:.1e}"
    );
    ensure(worst_tree < 1e-10 && worst_unitary < 1e-12 && worst_leak < 1e-10, msg)
}

/// Gated leakage of a subcarrier displaced by `tau` into every other port of
/// the delay-sum ODFT, averaged over ports and BB84 phases. The reference and
/// signal pulses recombine with amplitude sqrt(mu / T) (e^{j phi_B} + e^{j phi_A}).
fn phase_averaged_leakage(n: usize, t: f64, mu: f64, steps: i64) -> (f64, f64) {
    let tc = t / n as f64;
    let dt = tc / 64.0;
    let tau = steps as f64 * dt;
    let k = 1 % n;
    let gate = GateWindow::new(t - tc, t).unwrap();
    let (mut total, mut count) = (0.0, 0usize);
    for phi_a in [0.0, PI / 2.0, PI, 1.5 * PI] {
        for phi_b in [0.0, PI / 2.0] {
            let amp = (mu / t).sqrt() * (Complex64::from_polar(1.0, phi_b) + Complex64::from_polar(1.0, phi_a));
            let x = Waveform::tone_burst(dt, tau, t + tau, amp, 2.0 * PI * k as f64 / t).unwrap();
            let ports = odft_ports(&x, n, tc).unwrap();
            for (_, y) in ports.iter().enumerate().filter(|(m, _)| *m != k) {
                total += gated_energy(y, &gate).unwrap();
                count += 1;
            }
        }
    }
    (total / count as f64, 2.0 * mu * tau.abs() / (n * n) as f64 / t)
}

fn phase_average_identity() -> Outcome {
    let mut worst = 0.0f64;
    for n in [2usize, 4, 8, 16] {
        for steps in [-40i64, -7, 1, 5, 23, 63] {
            let (got, want) = phase_averaged_leakage(n, 100.0, 0.48, steps);
            worst = worst.max((got / want - 1.0).abs());
        }
    }
    ensure(worst < 1e-9, format!("max relative deviation from 2 mu |tau| / (N^2 T) = {worst:.1e}"))
}

fn fig10_ratio() -> Outcome {
    let p = table_one();
    let m = MisalignmentModel::from_normalized_mean(0.02, p.symbol_duration()).unwrap();
    let (b, act) = optimize_gate(SchemeKind::Scheme2Active, &p, &m).map_err(|e| e.to_string())?;
    let dwdm = dwdm_baseline(&p).unwrap();
    let ratio = act.rate_bps / dwdm.rate_bps;
    ensure(
        ratio > 4.0,
        format!(
            "R(scheme2-active, N=16, b*={b:.4} ps) / R(dwdm) = {:.4e} / {:.4e} = {ratio:.3} (threshold 4)",
            act.rate_bps, dwdm.rate_bps
        ),
    )
}

fn spectral_efficiency_ratio() -> Outcome {
    let p = table_one();
    let (_, peak) = optimize_gate(SchemeKind::Scheme2Active, &p, &MisalignmentModel::aligned()).map_err(|e| e.to_string())?;
    let dwdm = dwdm_baseline(&p).unwrap();
    let (s_ofdm, s_dwdm) = (100.0 * peak.spectral_efficiency, 100.0 * dwdm.spectral_efficiency);
    let ratio = s_ofdm / s_dwdm;
    let within_2 = |v: f64, r: f64| v / r <= 2.0 && r / v <= 2.0;
    ensure(
        (ratio - 3.0).abs() <= 0.5 && within_2(s_ofdm, 0.36) && within_2(s_dwdm, 0.11),
        format!(
            "S_ofdm = {s_ofdm:.4}% (reported 0.36%), S_dwdm = {s_dwdm:.4}% (reported 0.11%), ratio = {ratio:.3} (3.0 +/- 0.5)"
        ),
    )
}

fn fig7_crossover() -> Outcome {
    let mut notes = Vec::new();
    for n in [4usize, 8, 16] {
        let p = table_one().with_subcarriers(n).unwrap();
        let at = |norm: f64| {
            let m = MisalignmentModel::from_normalized_mean(norm, p.symbol_duration()).unwrap();
            key_rate(&SchemeSpec::full_gate(SchemeKind::Scheme2Active), &p, &m).unwrap().budget
        };
        let (lo, hi) = (at(1e-4), at(0.05));
        if !(lo.p_xtalk < lo.p_dc && hi.p_xtalk > hi.p_dc) {
            return Err(format!("N={n}: at 1e-4 p_xtalk={:e} p_dc={:e}; at 0.05 p_xtalk={:e} p_dc={:e}", lo.p_xtalk, lo.p_dc, hi.p_xtalk, hi.p_dc));
        }
        notes.push(format!("N={n}: {:.1e}/{:.1e}", hi.p_xtalk, hi.p_dc));
    }
    Ok(format!("p_xtalk < p_dc at 1e-4, p_xtalk > p_dc at 0.05 ({})", notes.join(", ")))
}

/// r_bps per (label, N), in grid order.
fn curves(rows: &[SweepRow]) -> BTreeMap<(String, usize), Vec<(f64, f64)>> {
    let mut out: BTreeMap<(String, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        out.entry((r.label.clone(), r.n())).or_default().push((r.misalign_norm, r.report.rate_bps));
    }
    out
}

fn figure_sweeps() -> Result<Vec<(&'static str, Vec<SweepRow>)>, String> {
    let grid: SweepGrid = DEFAULT_GRID.parse().map_err(|e: ofdmqkd_cli::sweep::SweepError| e.to_string())?;
    let p = table_one();
    presets()
        .into_iter()
        .filter(|f| f.name != "fig7")
        .map(|f| figure_rows(&f, &p, &grid.values()).map(|rows| (f.name, rows)).map_err(|e| e.to_string()))
        .collect()
}

fn optimal_gate_dominance(sweeps: &[(&'static str, Vec<SweepRow>)]) -> Outcome {
    let mut points = 0;
    for (name, rows) in sweeps {
        let c = curves(rows);
        let dwdm = &c[&("dwdm".to_string(), 1)];
        for ((label, n), fixed) in c.iter().filter(|((l, _), _)| l != "dwdm" && !l.ends_with("-opt")) {
            let opt = &c[&(format!("{label}-opt"), *n)];
            for (i, (&(x, r0), &(_, r_opt))) in fixed.iter().zip(opt).enumerate() {
                if r_opt < r0 {
                    return Err(format!("{name} {label} N={n} x={x:e}: optimal {r_opt:e} < full gate {r0:e}"));
                }
                if label == "scheme1" && r_opt > dwdm[i].1 {
                    return Err(format!("{name} N={n} x={x:e}: scheme1-opt {r_opt:e} > dwdm {:e}", dwdm[i].1));
                }
                points += 1;
            }
        }
    }
    Ok(format!("r(b*) >= r(0) at {points} points; scheme1-opt never above dwdm"))
}

fn monotonic_degradation(sweeps: &[(&'static str, Vec<SweepRow>)]) -> Outcome {
    let mut series = 0;
    for (name, rows) in sweeps {
        for ((label, n), curve) in curves(rows) {
            for w in curve.windows(2) {
                if w[1].1 > w[0].1 {
                    return Err(format!("{name} {label} N={n}: r rises from {:e} to {:e} between x={:e} and x={:e}", w[0].1, w[1].1, w[0].0, w[1].0));
                }
            }
            series += 1;
        }
    }
    Ok(format!("r_bps non-increasing along all {series} series"))
}

fn main() -> ExitCode {
    let mut all_ok = true;
    let mut report = |id: u32, title: &str, start: Instant, outcome: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                all_ok = false;
                ("FAIL", d)
            }
        };
        println!("[{tag}] criterion {id:>2} {title} ({secs:.2} s): {detail}");
    };

    let s = Instant::now();
    report(1, "ideal gating transmissivities", s, ideal_gating());
    let s = Instant::now();
    report(2, "active = N x passive", s, active_is_n_passive());
    let s = Instant::now();
    report(3, "oracle equivalence", s, oracle_equivalence());
    let s = Instant::now();
    report(4, "circuit correctness", s, circuit_correctness());
    let s = Instant::now();
    report(5, "phase-average crosstalk identity", s, phase_average_identity());
    let s = Instant::now();
    report(6, "active N=16 beats 4x single carrier", s, fig10_ratio());
    let s = Instant::now();
    report(7, "spectral-efficiency ratio", s, spectral_efficiency_ratio());
    let s = Instant::now();
    report(8, "noise crossover", s, fig7_crossover());
    let s = Instant::now();
    let sweeps = figure_sweeps();
    let sweep_secs = s.elapsed();
    match sweeps {
        Ok(sweeps) => {
            let s = Instant::now() - sweep_secs;
            report(9, "optimal-gate dominance", s, optimal_gate_dominance(&sweeps));
            let s = Instant::now();
            report(10, "monotonic degradation", s, monotonic_degradation(&sweeps));
        }
        Err(e) => {
            report(9, "optimal-gate dominance", s, Err(e.clone()));
            report(10, "monotonic degradation", s, Err(e));
        }
    }

    if all_ok {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
