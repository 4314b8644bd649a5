//! Misalignment sweeps and their CSV form.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use ofdmqkd::misalign::{MisalignError, MisalignmentModel};
use ofdmqkd::schemes::{key_rate, optimize_gate, KeyRateReport, SchemeError};
use ofdmqkd::{ParamsError, SchemeKind, SchemeSpec, SystemParams};
use rayon::prelude::*;
use thiserror::Error;

pub const CSV_HEADER: &str = "scheme,N,misalign_norm,b_ps,gate_width_ps,eta_g,eta,p_dc,p_xtalk,y0,q_mu,e_mu,q1,e1,p_per_pulse,r_bps,s_percent";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid grid `{spec}`: {reason}")]
    Grid { spec: String, reason: String },
    #[error("invalid gate_narrowing `{0}`: expected picoseconds or `opt`")]
    Gate(String),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Misalign(#[from] MisalignError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridScale {
    Log,
    Linear,
}

/// Grid over the normalized mean misalignment E|tau| / T.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub scale: GridScale,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl SweepGrid {
    pub fn new(scale: GridScale, lo: f64, hi: f64, points: usize) -> Result<Self, String> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(format!("need finite lo < hi, got {lo} and {hi}"));
        }
        if points < 2 {
            return Err(format!("need at least 2 points, got {points}"));
        }
        if scale == GridScale::Log && lo <= 0.0 {
            return Err(format!("log grid needs lo > 0, got {lo}"));
        }
        if lo < 0.0 {
            return Err(format!("misalignment cannot be negative, got {lo}"));
        }
        Ok(SweepGrid { scale, lo, hi, points })
    }

    /// Grid values in ascending order; both endpoints are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| match (i, self.scale) {
                (0, _) => self.lo,
                (i, _) if i == self.points - 1 => self.hi,
                (i, GridScale::Log) => self.lo * (self.hi / self.lo).powf(i as f64 / last),
                (i, GridScale::Linear) => self.lo + (self.hi - self.lo) * i as f64 / last,
            })
            .collect()
    }
}

impl FromStr for SweepGrid {
    type Err = SweepError;

    /// `log:LO:HI:POINTS` or `lin:LO:HI:POINTS`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: String| SweepError::Grid {
            spec: s.to_string(),
            reason,
        };
        let parts: Vec<&str> = s.split(':').collect();
        let [scale, lo, hi, points] = parts[..] else {
            return Err(err("expected SCALE:LO:HI:POINTS".into()));
        };
        let scale = match scale {
            "log" => GridScale::Log,
            "lin" | "linear" => GridScale::Linear,
            other => return Err(err(format!("unknown scale `{other}`"))),
        };
        let lo: f64 = lo.parse().map_err(|_| err(format!("bad lower bound `{lo}`")))?;
        let hi: f64 = hi.parse().map_err(|_| err(format!("bad upper bound `{hi}`")))?;
        let points: usize = points.parse().map_err(|_| err(format!("bad point count `{points}`")))?;
        SweepGrid::new(scale, lo, hi, points).map_err(err)
    }
}

/// Fixed narrowing b in ps, or the rate-maximising one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateChoice {
    Fixed(f64),
    Optimal,
}

impl FromStr for GateChoice {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "opt" {
            return Ok(GateChoice::Optimal);
        }
        s.parse().map(GateChoice::Fixed).map_err(|_| SweepError::Gate(s.to_string()))
    }
}

impl fmt::Display for GateChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateChoice::Fixed(b) => write!(f, "{b}"),
            GateChoice::Optimal => f.write_str("opt"),
        }
    }
}

/// Evaluate one operating point; returns the narrowing actually used.
pub fn evaluate(
    kind: SchemeKind,
    gate: GateChoice,
    params: &SystemParams,
    model: &MisalignmentModel,
) -> Result<KeyRateReport, SweepError> {
    Ok(match gate {
        GateChoice::Optimal => optimize_gate(kind, params, model)?.1,
        GateChoice::Fixed(b) => key_rate(&SchemeSpec::new(kind, b)?, params, model)?,
    })
}

/// One curve of a sweep: a decoder and its gate policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Series {
    pub kind: SchemeKind,
    pub gate: GateChoice,
}

impl Series {
    /// CSV label: the scheme name, suffixed `-opt` for optimal gating.
    pub fn label(&self) -> String {
        match (self.gate, self.kind.is_ofdm()) {
            (GateChoice::Optimal, true) => format!("{}-opt", self.kind),
            _ => self.kind.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub label: String,
    pub misalign_norm: f64,
    pub report: KeyRateReport,
}

impl SweepRow {
    /// `N` column: subcarrier count for OFDM, 1 for the single-carrier baseline.
    pub fn n(&self) -> usize {
        self.report.channels
    }

    pub fn to_csv(&self) -> String {
        let r = &self.report;
        let b = &r.budget;
        let g = &r.gains;
        let values = [
            self.misalign_norm,
            r.gate_narrowing,
            b.gate_width,
            b.eta_g,
            b.eta,
            b.p_dc,
            b.p_xtalk,
            r.y0,
            g.q_mu,
            g.e_mu,
            g.q1,
            g.e1,
            r.p_per_pulse,
            r.rate_bps,
            100.0 * r.spectral_efficiency,
        ];
        let mut line = format!("{},{}", self.label, self.n());
        for v in values {
            line.push_str(&format!(",{v:.9e}"));
        }
        line
    }
}

/// Rows ordered by series, then N, then grid point. The baseline ignores N
/// and contributes one row per grid point.
pub fn run_sweep(
    params: &SystemParams,
    series: &[Series],
    subcarriers: &[usize],
    grid: &[f64],
) -> Result<Vec<SweepRow>, SweepError> {
    let mut tasks = Vec::new();
    for s in series {
        let ns: &[usize] = if s.kind.is_ofdm() { subcarriers } else { &[params.num_subcarriers()] };
        for &n in ns {
            let p = params.with_subcarriers(n)?;
            for &x in grid {
                tasks.push((*s, p.clone(), x));
            }
        }
    }
    tasks
        .into_par_iter()
        .map(|(s, p, x)| {
            let model = MisalignmentModel::from_normalized_mean(x, p.symbol_duration())?;
            Ok(SweepRow {
                label: s.label(),
                misalign_norm: x,
                report: evaluate(s.kind, s.gate, &p, &model)?,
            })
        })
        .collect()
}

pub fn csv_string(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(256 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

/// Write through a temporary file in the target directory, then rename, so a
/// failed run never leaves a truncated CSV behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), SweepError> {
    let io = |source| SweepError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_stable() {
        let cols: Vec<&str> = CSV_HEADER.split(',').collect();
        assert_eq!(cols.len(), 17);
        assert_eq!(cols[0], "scheme");
        assert_eq!(cols[16], "s_percent");
    }

    #[test]
    fn grid_parsing() {
        let g: SweepGrid = "log:1e-4:1e-1:4".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 4);
        assert_eq!(v[0], 1e-4);
        assert_eq!(v[3], 1e-1);
        assert!((v[1] - 1e-3).abs() < 1e-15);
        let l: SweepGrid = "lin:0:1:3".parse().unwrap();
        assert_eq!(l.values(), vec![0.0, 0.5, 1.0]);
        for bad in ["log:1e-4:1e-1:1", "log:0:1:5", "lin:1:0:5", "cubic:0:1:5", "log:1:2", "lin:a:1:3"] {
            assert!(bad.parse::<SweepGrid>().is_err(), "{bad}");
        }
    }

    #[test]
    fn gate_choice_parsing() {
        assert_eq!("opt".parse::<GateChoice>().unwrap(), GateChoice::Optimal);
        assert_eq!("-1".parse::<GateChoice>().unwrap(), GateChoice::Fixed(-1.0));
        assert!("wide".parse::<GateChoice>().is_err());
    }

    #[test]
    fn rows_follow_series_then_n_then_grid() {
        let p = SystemParams::table_one();
        let series = [
            Series { kind: SchemeKind::Scheme2Active, gate: GateChoice::Fixed(0.0) },
            Series { kind: SchemeKind::Scheme2Active, gate: GateChoice::Optimal },
            Series { kind: SchemeKind::DwdmBaseline, gate: GateChoice::Optimal },
        ];
        let rows = run_sweep(&p, &series, &[4, 8], &[1e-3, 1e-2]).unwrap();
        let keys: Vec<(String, usize, f64)> = rows.iter().map(|r| (r.label.clone(), r.n(), r.misalign_norm)).collect();
        assert_eq!(keys.len(), 10);
        assert_eq!(keys[0], ("scheme2-active".into(), 4, 1e-3));
        assert_eq!(keys[3], ("scheme2-active".into(), 8, 1e-2));
        assert_eq!(keys[4], ("scheme2-active-opt".into(), 4, 1e-3));
        assert_eq!(keys[8], ("dwdm".into(), 1, 1e-3));
        let line = rows[0].to_csv();
        assert_eq!(line.split(',').count(), 17);
        assert!(line.starts_with("scheme2-active,4,1.000000000e-3,"));
    }

    #[test]
    fn atomic_write_replaces_target() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "a\n").unwrap();
        write_atomic(&path, "b\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "b\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
