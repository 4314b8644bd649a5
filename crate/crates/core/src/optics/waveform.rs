use num_complex::Complex64;

use super::OpticsError;

/// Relative slack used when snapping times onto the sample grid.
const GRID_EPS: f64 = 1e-9;

/// Uniformly sampled complex envelope. Sample `i` sits at
/// `(start_index + i) * sample_period` and stands for the interval up to the
/// next sample (left-endpoint Riemann sums).
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    sample_period: f64,
    start_index: i64,
    samples: Vec<Complex64>,
}

fn grid_index(value: f64, period: f64) -> Result<i64, OpticsError> {
    let q = value / period;
    let r = q.round();
    if (q - r).abs() > GRID_EPS * q.abs().max(1.0) {
        return Err(OpticsError::OffGrid { value, period });
    }
    Ok(r as i64)
}

impl Waveform {
    pub fn new(sample_period: f64, start_time: f64, samples: Vec<Complex64>) -> Result<Self, OpticsError> {
        if !(sample_period.is_finite() && sample_period > 0.0) {
            return Err(OpticsError::InvalidPeriod(sample_period));
        }
        Ok(Waveform {
            sample_period,
            start_index: grid_index(start_time, sample_period)?,
            samples,
        })
    }

    /// Samples `f(t)` at every grid instant in `[start, end)`.
    pub fn from_fn(
        sample_period: f64,
        start: f64,
        end: f64,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Self, OpticsError> {
        let mut w = Self::new(sample_period, start, Vec::new())?;
        let last = grid_index(end, sample_period)?;
        w.samples = (w.start_index..last).map(|i| f(i as f64 * sample_period)).collect();
        Ok(w)
    }

    /// Rectangular pulse of `amplitude` on carrier `omega` over `[start, end)`.
    pub fn tone_burst(
        sample_period: f64,
        start: f64,
        end: f64,
        amplitude: Complex64,
        omega: f64,
    ) -> Result<Self, OpticsError> {
        Self::from_fn(sample_period, start, end, |t| amplitude * Complex64::from_polar(1.0, omega * t))
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn start_time(&self) -> f64 {
        self.start_index as f64 * self.sample_period
    }

    pub fn end_time(&self) -> f64 {
        (self.start_index + self.samples.len() as i64) as f64 * self.sample_period
    }

    pub fn time_at(&self, i: usize) -> f64 {
        (self.start_index + i as i64) as f64 * self.sample_period
    }

    /// Sample at absolute grid index, zero outside the support.
    fn at_index(&self, idx: i64) -> Complex64 {
        let i = idx - self.start_index;
        if i < 0 || i >= self.samples.len() as i64 {
            Complex64::new(0.0, 0.0)
        } else {
            self.samples[i as usize]
        }
    }

    /// x(t - delay); `delay` must be on the sample grid.
    pub fn delayed(&self, delay: f64) -> Result<Self, OpticsError> {
        let shift = grid_index(delay, self.sample_period)?;
        Ok(Waveform {
            start_index: self.start_index + shift,
            ..self.clone()
        })
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Waveform {
            samples: self.samples.iter().map(|s| s * c).collect(),
            ..self.clone()
        }
    }

    /// Point-wise sum over the union of supports.
    pub fn sum(parts: &[Waveform]) -> Result<Self, OpticsError> {
        let first = parts.first().expect("at least one waveform");
        let dt = first.sample_period;
        if let Some(w) = parts.iter().find(|w| w.sample_period != dt) {
            return Err(OpticsError::PeriodMismatch(dt, w.sample_period));
        }
        let lo = parts.iter().map(|w| w.start_index).min().unwrap();
        let hi = parts.iter().map(|w| w.start_index + w.samples.len() as i64).max().unwrap();
        let mut samples = vec![Complex64::new(0.0, 0.0); (hi - lo) as usize];
        for w in parts {
            let off = (w.start_index - lo) as usize;
            for (acc, s) in samples[off..off + w.samples.len()].iter_mut().zip(&w.samples) {
                *acc += s;
            }
        }
        Ok(Waveform {
            sample_period: dt,
            start_index: lo,
            samples,
        })
    }

    /// Total energy sum |x_i|^2 dt.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() * self.sample_period
    }
}

/// Detector gate `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateWindow {
    pub start: f64,
    pub end: f64,
}

impl GateWindow {
    pub fn new(start: f64, end: f64) -> Result<Self, OpticsError> {
        if !(start.is_finite() && end.is_finite() && end > start) {
            return Err(OpticsError::InvalidGate(start, end));
        }
        Ok(GateWindow { start, end })
    }

    pub fn width(&self) -> f64 {
        self.end - self.start
    }
}

/// Energy of the samples whose instants fall inside the gate. A gate that
/// reaches outside the waveform support is an error; a gate containing no
/// sample instant yields zero.
pub fn gated_energy(w: &Waveform, gate: &GateWindow) -> Result<f64, OpticsError> {
    let dt = w.sample_period;
    let slack = GRID_EPS * dt;
    if gate.start < w.start_time() - slack || gate.end > w.end_time() + slack {
        return Err(OpticsError::GateOutsideSupport {
            start: gate.start,
            end: gate.end,
            support_start: w.start_time(),
            support_end: w.end_time(),
        });
    }
    let lo = (gate.start / dt - GRID_EPS).ceil() as i64;
    let hi = (gate.end / dt - GRID_EPS).ceil() as i64;
    Ok((lo..hi).map(|i| w.at_index(i).norm_sqr()).sum::<f64>() * dt)
}

/// Delay-and-sum ODFT: port m carries
/// y_m(t) = (1/n) sum_l e^{j 2 pi l m / n} x(t - l T_c).
/// `chip_slot` must be on the sample grid.
pub fn odft_ports(input: &Waveform, n: usize, chip_slot: f64) -> Result<Vec<Waveform>, OpticsError> {
    assert!(n > 0, "ODFT size must be positive");
    let copies = (0..n)
        .map(|l| input.delayed(l as f64 * chip_slot))
        .collect::<Result<Vec<_>, _>>()?;
    let scale = 1.0 / n as f64;
    (0..n)
        .map(|m| {
            let weighted: Vec<Waveform> = copies
                .iter()
                .enumerate()
                .map(|(l, c)| {
                    let phase = 2.0 * std::f64::consts::PI * ((l * m) % n) as f64 / n as f64;
                    c.scaled(Complex64::from_polar(scale, phase))
                })
                .collect();
            Waveform::sum(&weighted)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn gated_energy_counts_left_endpoints() {
        let w = Waveform::new(1.0, 0.0, vec![c(1.0), c(2.0), c(3.0)]).unwrap();
        assert_eq!(gated_energy(&w, &GateWindow::new(0.0, 3.0).unwrap()).unwrap(), 14.0);
        assert_eq!(gated_energy(&w, &GateWindow::new(1.0, 2.0).unwrap()).unwrap(), 4.0);
        assert_eq!(gated_energy(&w, &GateWindow::new(0.5, 1.5).unwrap()).unwrap(), 4.0);
        assert_eq!(gated_energy(&w, &GateWindow::new(1.2, 1.8).unwrap()).unwrap(), 0.0);
        assert!(matches!(
            gated_energy(&w, &GateWindow::new(-1.0, 2.0).unwrap()),
            Err(OpticsError::GateOutsideSupport { .. })
        ));
        assert!(GateWindow::new(2.0, 2.0).is_err());
    }

    #[test]
    fn off_grid_times_are_rejected() {
        assert!(Waveform::new(0.5, 0.25, vec![]).is_err());
        let w = Waveform::new(0.5, 1.0, vec![c(1.0)]).unwrap();
        assert!(w.delayed(0.3).is_err());
        assert_eq!(w.delayed(1.5).unwrap().start_time(), 2.5);
    }

    #[test]
    fn sum_covers_union() {
        let a = Waveform::new(1.0, 0.0, vec![c(1.0), c(1.0)]).unwrap();
        let b = Waveform::new(1.0, 3.0, vec![c(2.0)]).unwrap();
        let s = Waveform::sum(&[a, b]).unwrap();
        assert_eq!(s.start_time(), 0.0);
        assert_eq!(s.end_time(), 4.0);
        assert_eq!(s.samples(), &[c(1.0), c(1.0), c(0.0), c(2.0)]);
    }

    #[test]
    fn delay_sum_conserves_energy() {
        // The ODFT output ports together carry exactly the input energy.
        let dt = 0.25;
        let x = Waveform::from_fn(dt, 0.0, 40.0, |t| Complex64::from_polar(1.0 + 0.1 * t, 0.37 * t)).unwrap();
        for n in [2, 4, 8] {
            let ports = odft_ports(&x, n, 5.0).unwrap();
            let total: f64 = ports.iter().map(Waveform::energy).sum();
            assert_relative_eq!(total, x.energy(), max_relative = 1e-12);
        }
    }

    #[test]
    fn matched_subcarrier_is_fully_recovered_in_centre_slot() {
        // Tone k = m, aligned: port m is (1/N)-weighted sum of N in-phase copies
        // inside the gate [T - T_c, T), so the gated field equals x.
        let (n, t) = (4usize, 40.0);
        let tc = t / n as f64;
        let dt = tc / 64.0;
        for k in 0..n {
            let omega = 2.0 * std::f64::consts::PI * k as f64 / t;
            let x = Waveform::tone_burst(dt, 0.0, t, c(1.0 / t.sqrt()), omega).unwrap();
            let ports = odft_ports(&x, n, tc).unwrap();
            let gate = GateWindow::new(t - tc, t).unwrap();
            for (m, port) in ports.iter().enumerate() {
                let e = gated_energy(port, &gate).unwrap();
                let expected = if m == k { tc / t } else { 0.0 };
                assert!((e - expected).abs() < 1e-12, "k={k} m={m} e={e}");
            }
        }
    }
}
