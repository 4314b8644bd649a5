//! Monte-Carlo link-budget oracle.
//!
//! Every trial draws a timing error, a laser phase and a BB84 phase per
//! subcarrier, one receiver phase and an observed port, then propagates the
//! complex envelopes through the decoder. All envelopes are piecewise constant
//! (times a carrier for Scheme I), so gated energies are integrated exactly
//! from the breakpoints instead of on a sample grid.
//!
//! Trials are grouped into fixed-size chunks, each with its own ChaCha stream;
//! chunk statistics are merged in chunk order, so results do not depend on the
//! number of worker threads.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::misalign::{MisalignmentModel, TimingStatistics};
use crate::params::{SchemeKind, SchemeSpec, SystemParams};

const CHUNK: u64 = 4096;

/// Sample means and standard errors of the gating efficiency and the per-gate
/// crosstalk click probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub eta_g: f64,
    pub eta_g_stderr: f64,
    pub p_xtalk: f64,
    pub p_xtalk_stderr: f64,
    pub trials: u64,
}

/// Monte-Carlo estimate for a single decoder configuration.
pub fn mc_link_budget(
    scheme: &SchemeSpec,
    params: &SystemParams,
    model: &MisalignmentModel,
    trials: u64,
    seed: u64,
) -> McEstimate {
    mc_link_budget_gates(scheme.kind, params, model, &[scheme.gate_narrowing()], trials, seed)[0]
}

/// Monte-Carlo estimates for several gate narrowings evaluated on the same draws.
///
/// Panics if a narrowing is negative or not below `T_c / 2`.
pub fn mc_link_budget_gates(
    kind: SchemeKind,
    params: &SystemParams,
    model: &MisalignmentModel,
    narrowings: &[f64],
    trials: u64,
    seed: u64,
) -> Vec<McEstimate> {
    assert!(trials > 0, "at least one trial");
    if kind == SchemeKind::DwdmBaseline {
        let exact = McEstimate {
            eta_g: 1.0,
            eta_g_stderr: 0.0,
            p_xtalk: 0.0,
            p_xtalk_stderr: 0.0,
            trials,
        };
        return vec![exact; narrowings.len()];
    }
    let engine = Engine::new(kind, params, narrowings);
    let chunks = trials.div_ceil(CHUNK);
    let stats: Vec<Stats> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(trials - c * CHUNK);
            engine.run_chunk(model, seed, c, len)
        })
        .collect();
    let mut total = Stats::new(2 * narrowings.len());
    for s in &stats {
        total.merge(s);
    }
    (0..narrowings.len())
        .map(|g| McEstimate {
            eta_g: total.mean[2 * g],
            eta_g_stderr: total.stderr(2 * g),
            p_xtalk: total.mean[2 * g + 1],
            p_xtalk_stderr: total.stderr(2 * g + 1),
            trials,
        })
        .collect()
}

/// Running mean / sum of squared deviations per quantity.
#[derive(Debug, Clone)]
struct Stats {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Stats {
    fn new(len: usize) -> Self {
        Stats {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let d = v - *mean;
            *mean += d / n;
            *m2 += d * (v - *mean);
        }
    }

    fn merge(&mut self, other: &Stats) {
        if other.count == 0 {
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * nb / n;
            self.m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        self.count += other.count;
    }

    fn stderr(&self, i: usize) -> f64 {
        if self.count < 2 {
            return f64::INFINITY;
        }
        let n = self.count as f64;
        (self.m2[i] / (n - 1.0) / n).sqrt()
    }
}

/// Rectangular envelope segment of one subcarrier.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Burst {
    pub start: f64,
    pub end: f64,
    pub amp: Complex64,
}

/// Piece of the merged port field: constant amplitude on the carrier
/// e^{j harmonic w_1 t}, w_1 = 2 pi / T.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Piece {
    pub start: f64,
    pub end: f64,
    pub amp: Complex64,
    pub harmonic: usize,
    pub channel: usize,
}

pub(crate) struct Engine {
    kind: SchemeKind,
    n: usize,
    symbol: f64,
    chip: f64,
    pulse: f64,
    guard: f64,
    mu: f64,
    eta_sys: f64,
    gates: Vec<(f64, f64)>,
    outer: (f64, f64),
    roots: Vec<Complex64>,
    base_omega: f64,
    /// 1 / (d w_1) for harmonic differences d = 1..N-1.
    inv_omega: Vec<f64>,
}

impl Engine {
    pub(crate) fn new(kind: SchemeKind, params: &SystemParams, narrowings: &[f64]) -> Self {
        let n = params.num_subcarriers();
        let t = params.symbol_duration();
        let tc = params.chip_slot();
        assert!(!narrowings.is_empty(), "at least one gate");
        for &b in narrowings {
            assert!(b >= 0.0 && b < tc / 2.0, "gate narrowing {b} outside [0, T_c/2)");
        }
        let gates: Vec<(f64, f64)> = narrowings.iter().map(|&b| (t - tc + b, t - b)).collect();
        let outer = gates.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(s, e)| (lo.min(s), hi.max(e)));
        Engine {
            kind,
            n,
            symbol: t,
            chip: tc,
            pulse: params.pulse_width(),
            guard: params.guard(),
            mu: params.mu(),
            eta_sys: params.eta_sys(kind),
            gates,
            outer,
            roots: (0..n).map(|i| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / n as f64)).collect(),
            base_omega: 2.0 * PI / t,
            inv_omega: (0..n).map(|d| t / (2.0 * PI * d as f64)).collect(),
        }
    }

    /// e^{j 2 pi e / N} for a signed integer exponent.
    #[cfg(test)]
    fn root(&self, e: i64) -> Complex64 {
        self.roots[e.rem_euclid(self.n as i64) as usize]
    }

    /// Carrier angular frequency of subcarrier `k` at baseband.
    #[cfg(test)]
    fn carrier(&self, k: usize) -> f64 {
        self.harmonic(k) as f64 * self.base_omega
    }

    fn harmonic(&self, k: usize) -> usize {
        match self.kind {
            SchemeKind::Scheme1Passive => k,
            _ => 0,
        }
    }

    /// Sum of e^{j 2 pi (first + i step) / N} over `count` consecutive i, by the
    /// geometric series. A full period of a nonzero step gives exactly zero.
    fn root_sum(&self, first: i64, step: i64, count: i64) -> Complex64 {
        let n = self.n as i64;
        if count <= 0 {
            return Complex64::new(0.0, 0.0);
        }
        let head = self.roots[first.rem_euclid(n) as usize];
        let step = step.rem_euclid(n);
        if step == 0 {
            return head * count as f64;
        }
        let one = Complex64::new(1.0, 0.0);
        let tail = self.roots[(count * step).rem_euclid(n) as usize];
        head * (one - tail) / (one - self.roots[step as usize])
    }

    /// Unit-energy envelope of subcarrier `k` at output port `m`, restricted to
    /// segments that can reach the widest gate.
    pub(crate) fn bursts(&self, k: usize, m: usize, tau: f64, out: &mut Vec<Burst>) {
        out.clear();
        let (lo, hi) = self.outer;
        let n = self.n as i64;
        let (k, m) = (k as i64, m as i64);
        let nf = self.n as f64;
        let hits = |s: f64, e: f64| s < hi && e > lo;
        match self.kind {
            SchemeKind::Scheme1Passive => {
                // Copy c of the delay line: x(t - c T_c) weighted by w^{cm}.
                let scale = 1.0 / (nf * self.symbol.sqrt());
                let step = (m - k).rem_euclid(n) as usize;
                let mut idx = 0usize;
                for c in 0..n {
                    let start = tau + c as f64 * self.chip;
                    let end = start + self.symbol;
                    if hits(start, end) {
                        out.push(Burst {
                            start,
                            end,
                            amp: self.roots[idx] * scale,
                        });
                    }
                    idx += step;
                    if idx >= self.n {
                        idx -= self.n;
                    }
                }
            }
            SchemeKind::Scheme2Passive => {
                // Output slot s collects copy c of Alice's slot s - c.
                let scale = 1.0 / (nf * (nf * self.pulse).sqrt());
                let offset = self.guard + tau;
                let s_lo = (((lo - offset - self.pulse) / self.chip).floor() as i64).max(0);
                let s_hi = (((hi - offset) / self.chip).ceil() as i64).min(2 * n - 2);
                for s in s_lo..=s_hi {
                    let start = s as f64 * self.chip + offset;
                    let end = start + self.pulse;
                    if !hits(start, end) {
                        continue;
                    }
                    let c0 = (s - n + 1).max(0);
                    let c1 = s.min(n - 1);
                    let amp = self.root_sum(k * s + c0 * (m - k), m - k, c1 - c0 + 1);
                    out.push(Burst {
                        start,
                        end,
                        amp: amp * scale,
                    });
                }
            }
            SchemeKind::Scheme2Active => {
                // Path i keeps [i T_c, (i+1) T_c) and delays it by (N-1-i) T_c, so
                // Alice's slot i + j lands at the same place for every path.
                let scale = 1.0 / (nf * self.pulse.sqrt());
                let offset = self.guard + tau;
                let base = (n - 1) as f64 * self.chip;
                let j_lo = (((-offset - self.pulse) / self.chip).floor() as i64).max(1 - n);
                let j_hi = (((self.chip - offset) / self.chip).ceil() as i64).min(n - 1);
                for j in j_lo..=j_hi {
                    let ps = j as f64 * self.chip + offset;
                    let start = base + ps.max(0.0);
                    let end = base + (ps + self.pulse).min(self.chip);
                    if !(end > start && hits(start, end)) {
                        continue;
                    }
                    let i0 = (-j).max(0);
                    let i1 = (n - 1 - j).min(n - 1);
                    let amp = self.root_sum(k * (i0 + j) - i0 * m, k - m, i1 - i0 + 1);
                    out.push(Burst {
                        start,
                        end,
                        amp: amp * scale,
                    });
                }
            }
            SchemeKind::DwdmBaseline => unreachable!("no ODFT for the single-carrier baseline"),
        }
    }

    /// Resolve overlapping bursts of one subcarrier into disjoint pieces inside
    /// the widest gate, scaled by `factor`. Sums that cancel to round-off are
    /// dropped.
    pub(crate) fn merge(
        &self,
        bursts: &[Burst],
        factor: Complex64,
        channel: usize,
        edges: &mut Vec<f64>,
        out: &mut Vec<Piece>,
    ) {
        let (lo, hi) = self.outer;
        edges.clear();
        edges.push(lo);
        edges.push(hi);
        for b in bursts {
            for x in [b.start, b.end] {
                if x > lo && x < hi {
                    edges.push(x);
                }
            }
        }
        edges.sort_unstable_by(f64::total_cmp);
        edges.dedup();
        let harmonic = self.harmonic(channel);
        for w in edges.windows(2) {
            let (s, e) = (w[0], w[1]);
            if e <= s {
                continue;
            }
            let mid = 0.5 * (s + e);
            let mut amp = Complex64::new(0.0, 0.0);
            let mut mag = 0.0;
            for b in bursts.iter().filter(|b| b.start <= mid && mid < b.end) {
                amp += b.amp;
                mag += b.amp.l1_norm();
            }
            if amp.l1_norm() > 1e-12 * mag {
                out.push(Piece {
                    start: s,
                    end: e,
                    amp: amp * factor,
                    harmonic,
                    channel,
                });
            }
        }
    }

    /// Exact energy of the coherent sum of `pieces` over `[g0, g1)`. Pieces
    /// must be sorted by start time, and pieces of one subcarrier must not
    /// overlap.
    #[cfg(test)]
    fn energy(&self, pieces: &[Piece], g0: f64, g1: f64, scratch: &mut Scratch) -> f64 {
        if self.kind == SchemeKind::Scheme1Passive {
            self.carrier_energy(pieces, g0, g1, scratch)
        } else {
            edge_events(pieces, &mut scratch.events);
            sweep_energy(&scratch.events, g0, g1)
        }
    }

    /// Scheme I: pairwise cross terms with distinct carriers.
    fn carrier_energy(&self, pieces: &[Piece], g0: f64, g1: f64, scratch: &mut Scratch) -> f64 {
        let Scratch { clipped, table, times, blocks, .. } = scratch;
        clipped.clear();
        table.clear();
        times.clear();
        blocks.clear();
        for p in pieces {
            let (s, e) = (p.start.max(g0), p.end.min(g1));
            if e > s {
                clipped.push(Piece { start: s, end: e, ..*p });
            }
        }
        let n = self.n;
        // One table of e^{j d w_1 t}, d < N, per distinct edge time; clipped
        // pieces mostly share the gate edges.
        for p in clipped.iter() {
            for t in [p.start, p.end] {
                let block = match times.iter().position(|&x| x == t) {
                    Some(b) => b,
                    None => {
                        let z = Complex64::from_polar(1.0, self.base_omega * t);
                        let mut w = Complex64::new(1.0, 0.0);
                        for _ in 0..n {
                            table.push(w);
                            w *= z;
                        }
                        times.push(t);
                        times.len() - 1
                    }
                };
                blocks.push(block);
            }
        }
        let phasor = |piece: usize, edge: usize, d: i64| {
            let v = table[blocks[2 * piece + edge] * n + d.unsigned_abs() as usize];
            if d < 0 {
                v.conj()
            } else {
                v
            }
        };

        let mut total = 0.0;
        for (i, p) in clipped.iter().enumerate() {
            total += p.amp.norm_sqr() * (p.end - p.start);
            for (j, q) in clipped.iter().enumerate().skip(i + 1) {
                if q.start >= p.end {
                    break;
                }
                if q.channel == p.channel {
                    continue;
                }
                let d = p.harmonic as i64 - q.harmonic as i64;
                let integral = if d == 0 {
                    Complex64::new(p.end.min(q.end) - q.start, 0.0)
                } else {
                    // (e^{j d w_1 t1} - e^{j d w_1 t0}) / (j d w_1)
                    let end = if p.end <= q.end { phasor(i, 1, d) } else { phasor(j, 1, d) };
                    let diff = end - phasor(j, 0, d);
                    let inv = d.signum() as f64 * self.inv_omega[d.unsigned_abs() as usize];
                    Complex64::new(diff.im * inv, -diff.re * inv)
                };
                total += 2.0 * (p.amp * q.amp.conj() * integral).re;
            }
        }
        total
    }

    fn run_chunk(&self, model: &MisalignmentModel, seed: u64, chunk: u64, len: u64) -> Stats {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk);
        let n = self.n;
        let g = self.gates.len();
        let mut stats = Stats::new(2 * g);
        let mut tau = vec![0.0; n];
        let mut theta = vec![0.0; n];
        let mut phi_a = vec![0u8; n];
        let mut bursts = Vec::new();
        let mut edges = Vec::new();
        let mut matched = Vec::new();
        let mut cross = Vec::new();
        let mut scratch = Scratch::default();
        let mut matched_events = Vec::new();
        let mut cross_events = Vec::new();
        let mut sample = vec![0.0; 2 * g];
        let sqrt_mu = self.mu.sqrt();
        for _ in 0..len {
            let m = rng.random_range(0..n);
            for t in tau.iter_mut() {
                *t = model.draw(&mut rng);
            }
            for t in theta.iter_mut() {
                *t = rng.random::<f64>() * 2.0 * PI;
            }
            for p in phi_a.iter_mut() {
                *p = rng.random_range(0..4u8);
            }
            let phi_b = rng.random_range(0..2u8);

            matched.clear();
            self.bursts(m, m, tau[m], &mut bursts);
            self.merge(&bursts, Complex64::new(1.0, 0.0), m, &mut edges, &mut matched);

            cross.clear();
            let bob = Complex64::from_polar(1.0, PI / 2.0 * phi_b as f64);
            for k in (0..n).filter(|&k| k != m) {
                let alice = Complex64::from_polar(1.0, PI / 2.0 * phi_a[k] as f64);
                let factor = Complex64::from_polar(sqrt_mu, theta[k]) * (bob + alice);
                self.bursts(k, m, tau[k], &mut bursts);
                self.merge(&bursts, factor, k, &mut edges, &mut cross);
            }
            cross.sort_unstable_by(|a, b| a.start.total_cmp(&b.start));

            if self.kind == SchemeKind::Scheme1Passive {
                for (i, &(g0, g1)) in self.gates.iter().enumerate() {
                    sample[2 * i] = self.carrier_energy(&matched, g0, g1, &mut scratch);
                    sample[2 * i + 1] = self.eta_sys * self.carrier_energy(&cross, g0, g1, &mut scratch);
                }
            } else {
                edge_events(&matched, &mut matched_events);
                edge_events(&cross, &mut cross_events);
                for (i, &(g0, g1)) in self.gates.iter().enumerate() {
                    sample[2 * i] = sweep_energy(&matched_events, g0, g1);
                    sample[2 * i + 1] = self.eta_sys * sweep_energy(&cross_events, g0, g1);
                }
            }
            stats.push(&sample);
        }
        stats
    }
}

/// Sorted field steps (time, change in amplitude) of pieces sharing a carrier.
fn edge_events(pieces: &[Piece], events: &mut Vec<(f64, Complex64)>) {
    events.clear();
    for p in pieces {
        events.push((p.start, p.amp));
        events.push((p.end, -p.amp));
    }
    events.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
}

/// Energy of a piecewise-constant field over `[g0, g1)`. Clamping the event
/// times to the gate keeps them sorted, so one sort serves every gate.
fn sweep_energy(events: &[(f64, Complex64)], g0: f64, g1: f64) -> f64 {
    let mut field = Complex64::new(0.0, 0.0);
    let mut last = g0;
    let mut total = 0.0;
    for &(t, delta) in events {
        let t = t.clamp(g0, g1);
        total += field.norm_sqr() * (t - last);
        field += delta;
        last = t;
    }
    total
}

/// Reusable buffers for the gated-energy integrators.
#[derive(Default)]
pub(crate) struct Scratch {
    clipped: Vec<Piece>,
    table: Vec<Complex64>,
    times: Vec<f64>,
    blocks: Vec<usize>,
    #[cfg(test)]
    events: Vec<(f64, Complex64)>,
}
