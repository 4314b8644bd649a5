//! Cascaded MZI implementation of the ODFT.
//!
//! Uses the factorisation sum_{l<N} z^l = prod_s (1 + z^{2^s}), z = w^m D_{T_c}.
//! Stage i has differential delay (N / 2^{i+1}) T_c. A node that has so far
//! selected the residue class r = m mod 2^i applies the extra phase
//! e^{j pi r / 2^i}; its cross output (j/2)(1 + cD) keeps residue r and its bar
//! output (1/2)(1 - cD) selects r + 2^i.

use num_complex::Complex64;

use super::waveform::Waveform;
use super::OpticsError;

/// Time-domain MZI: coupler, lower arm delayed by `delay` and multiplied by
/// `extra_phase`, coupler. Returns (bar, cross) outputs.
pub fn mzi_apply(
    in1: &Waveform,
    in2: Option<&Waveform>,
    delay: f64,
    extra_phase: Complex64,
) -> Result<(Waveform, Waveform), OpticsError> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let j = Complex64::new(0.0, 1.0);
    let (u1, u2) = match in2 {
        Some(x2) => (
            Waveform::sum(&[in1.scaled(s.into()), x2.scaled(j * s)])?,
            Waveform::sum(&[in1.scaled(j * s), x2.scaled(s.into())])?,
        ),
        None => (in1.scaled(s.into()), in1.scaled(j * s)),
    };
    let v2 = u2.delayed(delay)?.scaled(extra_phase);
    let out1 = Waveform::sum(&[u1.scaled(s.into()), v2.scaled(j * s)])?;
    let out2 = Waveform::sum(&[u1.scaled(j * s), v2.scaled(s.into())])?;
    Ok((out1, out2))
}

/// Output of [`odft_tree`]: `ports[m] = phases[m] * y_m`, where `y_m` is the
/// delay-and-sum output of [`super::odft_ports`].
#[derive(Debug, Clone)]
pub struct TreeOutput {
    pub ports: Vec<Waveform>,
    pub phases: Vec<Complex64>,
}

/// Passive ODFT built from log2(n) stages of MZIs; the unused input of every
/// MZI is vacuum.
pub fn odft_tree(input: &Waveform, n: usize, chip_slot: f64) -> Result<TreeOutput, OpticsError> {
    if n == 0 || !n.is_power_of_two() {
        return Err(OpticsError::NotPowerOfTwo(n));
    }
    let j = Complex64::new(0.0, 1.0);
    // (residue, field, accumulated constant phase)
    let mut nodes = vec![(0usize, input.clone(), Complex64::new(1.0, 0.0))];
    let mut span = 1usize;
    while span < n {
        let delay = (n / (2 * span)) as f64 * chip_slot;
        let mut next = Vec::with_capacity(nodes.len() * 2);
        for (r, field, phase) in nodes {
            let c = Complex64::from_polar(1.0, std::f64::consts::PI * r as f64 / span as f64);
            let (bar, cross) = mzi_apply(&field, None, delay, c)?;
            next.push((r, cross, phase * j));
            next.push((r + span, bar, phase));
        }
        nodes = next;
        span *= 2;
    }
    nodes.sort_by_key(|(r, _, _)| *r);
    let (ports, phases) = nodes.into_iter().map(|(_, w, p)| (w, p)).unzip();
    Ok(TreeOutput { ports, phases })
}
