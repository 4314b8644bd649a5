//! Presets for the four misalignment figures.

use std::path::{Path, PathBuf};

use ofdmqkd::{SchemeKind, SystemParams};

use crate::sweep::{csv_string, run_sweep, write_atomic, GateChoice, Series, SweepError, SweepRow};

pub const DEFAULT_GRID: &str = "log:1e-4:1e-1:50";
pub const FIGURE_SUBCARRIERS: [usize; 3] = [4, 8, 16];

#[derive(Debug, Clone)]
pub struct FigurePreset {
    /// File stem, e.g. `fig10`.
    pub name: &'static str,
    pub series: Vec<Series>,
}

fn fixed_and_optimal(kind: SchemeKind) -> Vec<Series> {
    vec![
        Series { kind, gate: GateChoice::Fixed(0.0) },
        Series { kind, gate: GateChoice::Optimal },
        Series { kind: SchemeKind::DwdmBaseline, gate: GateChoice::Fixed(0.0) },
    ]
}

/// fig7: noise components of the active decoder at the full gate.
/// fig8 to fig10: key rate of each decoder at the full and the optimal gate,
/// next to the single-carrier baseline.
pub fn presets() -> Vec<FigurePreset> {
    vec![
        FigurePreset {
            name: "fig7",
            series: vec![Series { kind: SchemeKind::Scheme2Active, gate: GateChoice::Fixed(0.0) }],
        },
        FigurePreset { name: "fig8", series: fixed_and_optimal(SchemeKind::Scheme1Passive) },
        FigurePreset { name: "fig9", series: fixed_and_optimal(SchemeKind::Scheme2Passive) },
        FigurePreset { name: "fig10", series: fixed_and_optimal(SchemeKind::Scheme2Active) },
    ]
}

pub fn figure_rows(preset: &FigurePreset, params: &SystemParams, grid: &[f64]) -> Result<Vec<SweepRow>, SweepError> {
    run_sweep(params, &preset.series, &FIGURE_SUBCARRIERS, grid)
}

/// Write `<name>.csv` for every preset into `dir`.
pub fn write_figures(params: &SystemParams, grid: &[f64], dir: &Path) -> Result<Vec<PathBuf>, SweepError> {
    std::fs::create_dir_all(dir).map_err(|source| SweepError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    for preset in presets() {
        let rows = figure_rows(&preset, params, grid)?;
        let path = dir.join(format!("{}.csv", preset.name));
        write_atomic(&path, &csv_string(&rows))?;
        written.push(path);
    }
    Ok(written)
}
