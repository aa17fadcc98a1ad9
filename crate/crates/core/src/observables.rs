//! Yields, rates, unit conversions, frequency scans and CSV records.

use crate::coupling::Orientation;
use crate::propagator::{propagate_system, Checkpoint, CoupledSystem, PropagationOptions, PropagationResult};
use crate::pulse::{fourier_component_fixed_window, Pulse, PulseSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use thiserror::Error;

/// eV per hartree.
pub const HARTREE_EV: f64 = 27.211386;
/// Speed of light in atomic units.
pub const SPEED_OF_LIGHT_AU: f64 = 137.035999;
/// Bohr radius in nm.
pub const BOHR_NM: f64 = 0.0529177;

#[derive(Debug, Error)]
pub enum ObservablesError {
    #[error("yield {0} must lie in [0, 1)")]
    InvalidYield(f64),
    #[error("{what} must be positive and finite (got {value})")]
    NonPositive { what: &'static str, value: f64 },
    #[error("frequency grid must be strictly monotone with positive entries")]
    BadGrid,
    #[error("resonance {0} eV lies outside the grid")]
    OutsideGrid(f64),
    #[error("series do not share a grid: {0}")]
    GridMismatch(String),
    #[error("csv line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("csv: {0}")]
    CsvIo(#[from] csv::Error),
}

/// A photon energy or wavelength in all three units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Units {
    pub omega_ev: f64,
    pub omega_au: f64,
    pub lambda_nm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    EnergyEv(f64),
    EnergyAu(f64),
    WavelengthNm(f64),
}

/// `λ = 2π c a₀ / ω`.
pub fn convert_units(q: Quantity) -> Result<Units, ObservablesError> {
    let (what, value) = match q {
        Quantity::EnergyEv(v) => ("photon energy", v),
        Quantity::EnergyAu(v) => ("photon energy", v),
        Quantity::WavelengthNm(v) => ("wavelength", v),
    };
    if !(value > 0.0 && value.is_finite()) {
        return Err(ObservablesError::NonPositive { what, value });
    }
    let k = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_AU * BOHR_NM;
    let omega_au = match q {
        Quantity::EnergyEv(v) => v / HARTREE_EV,
        Quantity::EnergyAu(v) => v,
        Quantity::WavelengthNm(v) => k / v,
    };
    Ok(Units {
        omega_ev: omega_au * HARTREE_EV,
        omega_au,
        lambda_nm: k / omega_au,
    })
}

/// `Ip/N` in eV for `N = 1..=n_max`.
pub fn photon_thresholds(ip: f64, n_max: u32) -> Result<Vec<f64>, ObservablesError> {
    if !(ip > 0.0 && ip.is_finite()) {
        return Err(ObservablesError::NonPositive { what: "ionisation potential", value: ip });
    }
    Ok((1..=n_max).map(|n| ip * HARTREE_EV / f64::from(n)).collect())
}

/// `-ln(1 - Y) / T_p`.
pub fn rate_from_yield(y: f64, tp: f64) -> Result<f64, ObservablesError> {
    if !(0.0..1.0).contains(&y) {
        return Err(ObservablesError::InvalidYield(y));
    }
    if !(tp > 0.0 && tp.is_finite()) {
        return Err(ObservablesError::NonPositive { what: "pulse duration", value: tp });
    }
    Ok(-(-y).ln_1p() / tp)
}

/// Partition of the final population, normalised to the final norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Yields {
    pub p_gs: f64,
    pub y_exc: f64,
    pub y_ion: f64,
}

/// Ground, bound-excited and ionised populations. States above the
/// threshold of the basis count as ionised.
pub fn yields(result: &PropagationResult) -> Yields {
    let mut ion = 0.0;
    let mut exc = 0.0;
    let mut gs = 0.0;
    for (i, (c, e)) in result.coefficients.iter().zip(result.energies()).enumerate() {
        let p = c.norm_sqr();
        if i == result.initial_index {
            gs += p;
        } else if e > result.threshold {
            ion += p;
        } else {
            exc += p;
        }
    }
    let norm = gs + exc + ion;
    Yields {
        p_gs: gs / norm,
        y_exc: exc / norm,
        y_ion: ion / norm,
    }
}

/// One propagation's outcome with its pulse metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct YieldRecord {
    pub omega_ev: f64,
    pub lambda_nm: f64,
    pub p_gs: f64,
    pub y_exc: f64,
    pub y_ion: f64,
    pub orientation: Orientation,
    /// Report yields doubled (one active electron standing in for two).
    pub factor_two: bool,
    pub cycles: u32,
    pub intensity: f64,
    pub preset_id: String,
    pub norm_drift: f64,
}

impl YieldRecord {
    pub fn new(result: &PropagationResult, pulse: &PulseSpec, orientation: Orientation, preset_id: &str, factor_two: bool) -> Self {
        let y = yields(result);
        let omega_ev = pulse.omega * HARTREE_EV;
        Self {
            omega_ev,
            lambda_nm: lambda_nm(pulse.omega),
            p_gs: y.p_gs,
            y_exc: y.y_exc,
            y_ion: y.y_ion,
            orientation,
            factor_two,
            cycles: pulse.cycles,
            intensity: pulse.intensity,
            preset_id: preset_id.to_string(),
            norm_drift: result.norm_drift,
        }
    }

    fn multiplier(&self) -> f64 {
        if self.factor_two {
            2.0
        } else {
            1.0
        }
    }

    pub fn reported_y_exc(&self) -> f64 {
        self.multiplier() * self.y_exc
    }

    pub fn reported_y_ion(&self) -> f64 {
        self.multiplier() * self.y_ion
    }

    /// `|1 - P_gs - Y_exc - Y_ion|`.
    pub fn partition_error(&self) -> f64 {
        (1.0 - self.p_gs - self.y_exc - self.y_ion).abs()
    }
}

fn lambda_nm(omega_au: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT_AU * BOHR_NM / omega_au
}

/// Cycle count and peak intensity shared by every point of a scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseTemplate {
    pub cycles: u32,
    pub intensity: f64,
}

impl PulseTemplate {
    pub fn at(&self, omega_au: f64) -> PulseSpec {
        PulseSpec::new(omega_au, self.cycles, self.intensity)
    }
}

/// A scan point that did not produce a record.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanFailure {
    pub omega_ev: f64,
    pub orientation: Orientation,
    pub cycles: u32,
    pub intensity: f64,
    pub preset_id: String,
    pub factor_two: bool,
    pub message: String,
}

pub type ScanOutcome = Result<YieldRecord, ScanFailure>;

/// One coupled system per orientation.
#[derive(Clone, Copy)]
pub struct ScanTarget<'a> {
    pub orientation: Orientation,
    pub system: &'a CoupledSystem,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSettings {
    pub preset_id: String,
    pub factor_two: bool,
    pub parallel: bool,
}

fn check_grid(grid: &[f64]) -> Result<(), ObservablesError> {
    let positive = grid.iter().all(|&w| w > 0.0 && w.is_finite());
    let up = grid.windows(2).all(|w| w[1] > w[0]);
    let down = grid.windows(2).all(|w| w[1] < w[0]);
    if grid.is_empty() || !positive || !(up || down) {
        return Err(ObservablesError::BadGrid);
    }
    Ok(())
}

/// Evaluate `run` on every point, in order, optionally on the rayon pool.
/// A panicking point is reported as an error instead of aborting the scan.
pub fn run_points<P: Sync, T: Send>(points: &[P], parallel: bool, run: impl Fn(&P) -> Result<T, String> + Sync) -> Vec<Result<T, String>> {
    let guarded = |p: &P| match catch_unwind(AssertUnwindSafe(|| run(p))) {
        Ok(r) => r,
        Err(panic) => Err(panic
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| panic.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "point panicked".into())),
    };
    if parallel {
        points.par_iter().map(guarded).collect()
    } else {
        points.iter().map(guarded).collect()
    }
}

/// One propagation per `(frequency, orientation)`, frequency-major, in
/// grid order.
pub fn scan(
    targets: &[ScanTarget<'_>],
    template: PulseTemplate,
    grid_ev: &[f64],
    opts: &PropagationOptions,
    settings: &ScanSettings,
) -> Result<Vec<ScanOutcome>, ObservablesError> {
    check_grid(grid_ev)?;
    let points: Vec<(f64, ScanTarget<'_>)> = grid_ev.iter().flat_map(|&w| targets.iter().map(move |t| (w, *t))).collect();
    let results = run_points(&points, settings.parallel, |(w, target)| {
        let spec = template.at(w / HARTREE_EV);
        let pulse = Pulse::new(spec).map_err(|e| e.to_string())?;
        let result = propagate_system(target.system, &pulse, opts).map_err(|e| e.to_string())?;
        Ok(YieldRecord::new(&result, &spec, target.orientation, &settings.preset_id, settings.factor_two))
    });
    Ok(points
        .iter()
        .zip(results)
        .map(|((w, target), r)| {
            r.map_err(|message| ScanFailure {
                omega_ev: *w,
                orientation: target.orientation,
                cycles: template.cycles,
                intensity: template.intensity,
                preset_id: settings.preset_id.clone(),
                factor_two: settings.factor_two,
                message,
            })
        })
        .collect())
}

/// `Y_par / Y_perp` pointwise; both series must share their grid.
pub fn yield_ratio(parallel: &[YieldRecord], perpendicular: &[YieldRecord]) -> Result<Vec<(f64, f64)>, ObservablesError> {
    if parallel.len() != perpendicular.len() {
        return Err(ObservablesError::GridMismatch(format!("{} vs {} points", parallel.len(), perpendicular.len())));
    }
    parallel
        .iter()
        .zip(perpendicular)
        .map(|(a, b)| {
            if (a.omega_ev - b.omega_ev).abs() > 1e-9 * a.omega_ev.abs().max(1.0) {
                return Err(ObservablesError::GridMismatch(format!("{} eV vs {} eV", a.omega_ev, b.omega_ev)));
            }
            Ok((a.omega_ev, a.y_ion / b.y_ion))
        })
        .collect()
}

/// `|F_{ω₀}(ω)|²` of the pulse with carrier `ω` at every grid point,
/// scaled so that the value at `ω = ω₀` equals `rate_at_resonance`.
pub fn convolution_model(
    omega0_ev: f64,
    template: PulseTemplate,
    grid_ev: &[f64],
    rate_at_resonance: f64,
) -> Result<Vec<f64>, ObservablesError> {
    check_grid(grid_ev)?;
    let (lo, hi) = (grid_ev[0].min(grid_ev[grid_ev.len() - 1]), grid_ev[0].max(grid_ev[grid_ev.len() - 1]));
    if !(omega0_ev >= lo && omega0_ev <= hi) {
        return Err(ObservablesError::OutsideGrid(omega0_ev));
    }
    let omega0 = omega0_ev / HARTREE_EV;
    let kernel = |w_ev: f64| {
        let spec = template.at(w_ev / HARTREE_EV);
        let window = spec.duration();
        fourier_component_fixed_window(1.0, spec.omega, omega0, window).powi(2)
    };
    let scale = rate_at_resonance / kernel(omega0_ev);
    Ok(grid_ev.iter().map(|&w| scale * kernel(w)).collect())
}

/// Indices of strict interior local maxima.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1])
        .collect()
}

/// Width between the 10% and 90% crossings of a rising edge, the levels
/// taken between the minimum and the maximum of `y`, searched leftwards
/// from the maximum. `grid` must increase.
pub fn falloff_width(grid: &[f64], y: &[f64]) -> Option<f64> {
    if grid.len() != y.len() || grid.len() < 3 || !grid.windows(2).all(|w| w[1] > w[0]) {
        return None;
    }
    let (imax, &ymax) = y.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    let ymin = y[..=imax].iter().copied().fold(f64::INFINITY, f64::min);
    let crossing = |level: f64| -> Option<f64> {
        let target = ymin + level * (ymax - ymin);
        (1..=imax).rev().find(|&i| y[i - 1] <= target && y[i] >= target).map(|i| {
            let f = if y[i] == y[i - 1] { 0.0 } else { (target - y[i - 1]) / (y[i] - y[i - 1]) };
            grid[i - 1] + f * (grid[i] - grid[i - 1])
        })
    };
    Some(crossing(0.9)? - crossing(0.1)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    #[serde(rename = "omega_eV")]
    omega_ev: String,
    lambda_nm: String,
    #[serde(rename = "P_gs")]
    p_gs: String,
    #[serde(rename = "Y_exc")]
    y_exc: String,
    #[serde(rename = "Y_ion")]
    y_ion: String,
    orientation: String,
    #[serde(rename = "Nc")]
    cycles: u32,
    #[serde(rename = "intensity_Wcm2")]
    intensity: String,
    preset_id: String,
    factor_2: bool,
    norm_drift: String,
    status: String,
}

/// Ten significant digits.
pub fn format_sig10(x: f64) -> String {
    format!("{x:.9e}")
}

fn to_row(o: &ScanOutcome) -> CsvRow {
    match o {
        Ok(r) => CsvRow {
            omega_ev: format_sig10(r.omega_ev),
            lambda_nm: format_sig10(r.lambda_nm),
            p_gs: format_sig10(r.p_gs),
            y_exc: format_sig10(r.y_exc),
            y_ion: format_sig10(r.y_ion),
            orientation: r.orientation.to_string(),
            cycles: r.cycles,
            intensity: format_sig10(r.intensity),
            preset_id: r.preset_id.clone(),
            factor_2: r.factor_two,
            norm_drift: format_sig10(r.norm_drift),
            status: "ok".into(),
        },
        Err(f) => CsvRow {
            omega_ev: format_sig10(f.omega_ev),
            // from the written frequency, so that rewriting a parsed row is stable
            lambda_nm: format_sig10(lambda_nm(format_sig10(f.omega_ev).parse::<f64>().unwrap_or(f.omega_ev) / HARTREE_EV)),
            p_gs: "NaN".into(),
            y_exc: "NaN".into(),
            y_ion: "NaN".into(),
            orientation: f.orientation.to_string(),
            cycles: f.cycles,
            intensity: format_sig10(f.intensity),
            preset_id: f.preset_id.clone(),
            factor_2: f.factor_two,
            norm_drift: "NaN".into(),
            status: format!("error: {}", f.message.replace(['\n', '\r'], " ")),
        },
    }
}

/// Yields are written as computed; `factor_2` marks records whose
/// reported yields are doubled.
pub fn write_csv<W: Write>(w: W, outcomes: &[ScanOutcome]) -> Result<(), ObservablesError> {
    let mut wr = csv::Writer::from_writer(w);
    for o in outcomes {
        wr.serialize(to_row(o))?;
    }
    if outcomes.is_empty() {
        wr.write_record(CSV_HEADER)?;
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub const CSV_HEADER: [&str; 12] = [
    "omega_eV",
    "lambda_nm",
    "P_gs",
    "Y_exc",
    "Y_ion",
    "orientation",
    "Nc",
    "intensity_Wcm2",
    "preset_id",
    "factor_2",
    "norm_drift",
    "status",
];

pub fn read_csv<R: Read>(r: R) -> Result<Vec<ScanOutcome>, ObservablesError> {
    let mut rd = csv::Reader::from_reader(r);
    if rd.headers()?.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(ObservablesError::Csv { line: 1, message: "unexpected header".into() });
    }
    let mut out = Vec::new();
    for row in rd.deserialize::<CsvRow>() {
        let row = row?;
        let line = out.len() as u64 + 2;
        let num = |s: &str| -> Result<f64, ObservablesError> {
            s.parse::<f64>().map_err(|e| ObservablesError::Csv { line, message: format!("'{s}': {e}") })
        };
        let orientation: Orientation = row.orientation.parse().map_err(|message| ObservablesError::Csv { line, message })?;
        if let Some(message) = row.status.strip_prefix("error: ") {
            out.push(Err(ScanFailure {
                omega_ev: num(&row.omega_ev)?,
                orientation,
                cycles: row.cycles,
                intensity: num(&row.intensity)?,
                preset_id: row.preset_id,
                factor_two: row.factor_2,
                message: message.to_string(),
            }));
        } else if row.status == "ok" {
            out.push(Ok(YieldRecord {
                omega_ev: num(&row.omega_ev)?,
                lambda_nm: num(&row.lambda_nm)?,
                p_gs: num(&row.p_gs)?,
                y_exc: num(&row.y_exc)?,
                y_ion: num(&row.y_ion)?,
                orientation,
                factor_two: row.factor_2,
                cycles: row.cycles,
                intensity: num(&row.intensity)?,
                preset_id: row.preset_id,
                norm_drift: num(&row.norm_drift)?,
            }));
        } else {
            return Err(ObservablesError::Csv { line, message: format!("unknown status '{}'", row.status) });
        }
    }
    Ok(out)
}

/// `t,P_gs,norm` rows.
pub fn write_checkpoints<W: Write>(w: W, checkpoints: &[Checkpoint]) -> Result<(), ObservablesError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["t", "P_gs", "norm"])?;
    for c in checkpoints {
        wr.write_record([format_sig10(c.t), format_sig10(c.p_gs), format_sig10(c.norm)])?;
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hartree_is_one_atomic_unit() {
        let u = convert_units(Quantity::EnergyEv(27.211386)).unwrap();
        assert!((u.omega_au - 1.0).abs() < 1e-15);
        let back = convert_units(Quantity::WavelengthNm(u.lambda_nm)).unwrap();
        assert!((back.omega_ev - 27.211386).abs() < 1e-12);
        assert!(convert_units(Quantity::EnergyEv(0.0)).is_err());
        assert!(convert_units(Quantity::WavelengthNm(-3.0)).is_err());
    }

    #[test]
    fn rate_formula() {
        assert_eq!(rate_from_yield(0.0, 5.0).unwrap(), 0.0);
        let r = rate_from_yield(1.0 - (-1.0f64).exp(), 1.0).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
        let y = 1e-4;
        let r = rate_from_yield(y, 100.0).unwrap();
        assert!((r / (y / 100.0) - 1.0).abs() <= y / 2.0 * 1.01);
        assert!(rate_from_yield(1.0, 1.0).is_err());
        assert!(rate_from_yield(-0.1, 1.0).is_err());
    }

    #[test]
    fn thresholds_divide_ip() {
        let t = photon_thresholds(0.5, 5).unwrap();
        assert_eq!(t.len(), 5);
        assert!((t[1] * 2.0 - t[0]).abs() < 1e-14);
        assert!(photon_thresholds(0.0, 3).is_err());
    }

    #[test]
    fn grids_must_be_monotone() {
        assert!(check_grid(&[1.0, 2.0, 3.0]).is_ok());
        assert!(check_grid(&[3.0, 2.0]).is_ok());
        assert!(check_grid(&[1.0, 1.0]).is_err());
        assert!(check_grid(&[1.0, 3.0, 2.0]).is_err());
        assert!(check_grid(&[]).is_err());
        assert!(check_grid(&[-1.0, 2.0]).is_err());
    }

    #[test]
    fn falloff_of_a_linear_ramp() {
        let grid: Vec<f64> = (0..=10).map(f64::from).collect();
        let y: Vec<f64> = grid.iter().map(|&x| x.min(10.0)).collect();
        assert!((falloff_width(&grid, &y).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn panicking_points_become_errors() {
        let out = run_points(&[1, 2, 3], true, |&p| if p == 2 { panic!("boom") } else { Ok(p * 10) });
        assert_eq!(out[0], Ok(10));
        assert_eq!(out[1], Err("boom".to_string()));
        assert_eq!(out[2], Ok(30));
    }

    #[test]
    fn local_maxima_are_strict() {
        assert_eq!(local_maxima(&[0.0, 1.0, 0.0, 2.0, 2.0, 1.0, 3.0]), vec![1]);
    }
}
