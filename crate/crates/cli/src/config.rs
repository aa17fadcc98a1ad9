//! Run configuration: a TOML file with five sections, every key optional.
//! The schema and defaults are documented in `docs/config.md`.

use boxtdse::atom::{ip_approx, ModelAtomSpec};
use boxtdse::observables::{PulseTemplate, HARTREE_EV};
use boxtdse::propagator::PropagationOptions;
use boxtdse::system::{preset, presets, SystemSpec, ALPHA_R14};
use boxtdse::two_center::TwoCenterSpec;
use boxtdse::Orientation;
use serde::Deserialize;
use std::fmt;
use std::path::{Path, PathBuf};

pub const DEFAULT_PRESET: &str = "atom-r14-fast";

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse(String),
    Invalid { key: String, message: String },
    Io { path: PathBuf, message: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(m) => write!(f, "invalid config: {m}"),
            ConfigError::Invalid { key, message } => write!(f, "invalid config key `{key}`: {message}"),
            ConfigError::Io { path, message } => write!(f, "{}: {message}", path.display()),
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemSection,
    pub basis: BasisSection,
    pub pulse: PulseSection,
    pub propagation: PropagationSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Atom,
    TwoCenter,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub preset: Option<String>,
    pub kind: Option<SystemKind>,
    pub alpha: Option<f64>,
    pub target_ip: Option<f64>,
    pub r: Option<f64>,
    pub lambda_max: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisSize {
    Fast,
    Default,
    Small,
    Convergence,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisSection {
    pub size: Option<BasisSize>,
    #[serde(rename = "box")]
    pub box_radius: Option<f64>,
    pub splines: Option<usize>,
    pub order: Option<usize>,
    pub l_max: Option<u32>,
    pub xi_splines: Option<usize>,
    pub xi_order: Option<usize>,
    pub eta_splines: Option<usize>,
    pub eta_order: Option<usize>,
    pub quad_points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub start_ev: f64,
    pub stop_ev: f64,
    pub step_ev: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseSection {
    pub cycles: u32,
    pub intensity: f64,
    pub omega_ev: f64,
    pub grid_ev: Option<Vec<f64>>,
    pub grid: Option<GridRange>,
    pub orientations: Option<Vec<String>>,
}

impl Default for PulseSection {
    fn default() -> Self {
        Self {
            cycles: 10,
            intensity: 1e13,
            omega_ev: 12.0,
            grid_ev: None,
            grid: None,
            orientations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationSection {
    pub rtol: f64,
    pub atol: f64,
    /// Negative or zero disables the cut.
    pub e_cut_ev: f64,
    pub lambda_max: Option<u32>,
    pub interaction_picture: bool,
    pub max_steps: usize,
}

impl Default for PropagationSection {
    fn default() -> Self {
        let d = PropagationOptions::default();
        Self {
            rtol: d.rtol,
            atol: d.atol,
            e_cut_ev: 300.0,
            lambda_max: None,
            interaction_picture: d.interaction_picture,
            max_steps: d.max_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub checkpoints: Option<PathBuf>,
    pub checkpoint_stride: usize,
    pub factor_two: Option<bool>,
    pub parallel: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            path: None,
            checkpoints: None,
            checkpoint_stride: 100,
            factor_two: None,
            parallel: true,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    /// Check every key and assemble the run.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let (system, preset_id, preset_factor_two) = self.resolve_system()?;
        let orientations = self.resolve_orientations(&system)?;
        let p = &self.pulse;
        if p.cycles < 2 {
            return Err(invalid("pulse.cycles", format!("{} cycles; at least 2 are needed", p.cycles)));
        }
        if !(p.intensity >= 0.0 && p.intensity.is_finite()) {
            return Err(invalid("pulse.intensity", format!("{} must be finite and non-negative", p.intensity)));
        }
        if !(p.omega_ev > 0.0 && p.omega_ev.is_finite()) {
            return Err(invalid("pulse.omega_ev", format!("{} must be positive", p.omega_ev)));
        }
        let grid_ev = self.resolve_grid()?;
        let propagation = self.resolve_propagation()?;
        let o = &self.output;
        if o.checkpoint_stride == 0 {
            return Err(invalid("output.checkpoint_stride", "must be positive"));
        }
        Ok(Resolved {
            target_ip: self.system.target_ip,
            system,
            preset_id,
            factor_two: o.factor_two.unwrap_or(preset_factor_two),
            orientations,
            template: PulseTemplate {
                cycles: p.cycles,
                intensity: p.intensity,
            },
            omega_ev: p.omega_ev,
            grid_ev,
            propagation,
            output: o.path.clone(),
            checkpoints: o.checkpoints.clone(),
            parallel: o.parallel,
        })
    }

    fn resolve_system(&self) -> Result<(SystemSpec, String, bool), ConfigError> {
        let s = &self.system;
        let b = &self.basis;
        let named = match (&s.preset, s.kind) {
            (Some(id), _) => Some(id.as_str()),
            (None, None) => Some(DEFAULT_PRESET),
            (None, Some(_)) => None,
        };
        let (mut spec, id, factor_two) = match named {
            Some(id) => {
                let p = preset(id).ok_or_else(|| {
                    let known: Vec<_> = presets().iter().map(|p| p.id).collect();
                    invalid("system.preset", format!("unknown preset '{id}' (known: {})", known.join(", ")))
                })?;
                if let Some(kind) = s.kind {
                    let matches = matches!(
                        (kind, &p.system),
                        (SystemKind::Atom, SystemSpec::Atom(_)) | (SystemKind::TwoCenter, SystemSpec::TwoCenter(_))
                    );
                    if !matches {
                        return Err(invalid("system.kind", format!("does not match preset '{id}'")));
                    }
                }
                if b.size.is_some() {
                    return Err(invalid("basis.size", "cannot be combined with a preset"));
                }
                (p.system, p.id.to_string(), p.factor_two)
            }
            None => match s.kind {
                Some(SystemKind::TwoCenter) => {
                    let r = s.r.unwrap_or(1.4);
                    check_positive("system.r", r)?;
                    let spec = match b.size.unwrap_or(BasisSize::Default) {
                        BasisSize::Default => TwoCenterSpec::default_preset(r),
                        BasisSize::Convergence => TwoCenterSpec::convergence_preset(r),
                        BasisSize::Small => TwoCenterSpec::small_preset(r),
                        BasisSize::Fast => return Err(invalid("basis.size", "'fast' applies to the atom only")),
                    };
                    (SystemSpec::TwoCenter(spec), String::new(), false)
                }
                _ => {
                    let spec = match b.size.unwrap_or(BasisSize::Fast) {
                        BasisSize::Fast => ModelAtomSpec::fast_preset(ALPHA_R14),
                        BasisSize::Default => ModelAtomSpec::default_preset(ALPHA_R14),
                        other => {
                            return Err(invalid("basis.size", format!("'{other:?}' applies to the two-center system only")))
                        }
                    };
                    (SystemSpec::Atom(spec), String::new(), true)
                }
            },
        };
        let untouched = spec.clone();
        self.apply_overrides(&mut spec)?;
        let id = if !id.is_empty() && spec == untouched {
            id
        } else {
            format!("custom-{}", &crate::cache::fingerprint_hex(&spec, s.target_ip)[..8])
        };
        Ok((spec, id, factor_two))
    }

    fn apply_overrides(&self, spec: &mut SystemSpec) -> Result<(), ConfigError> {
        let s = &self.system;
        let b = &self.basis;
        let only = |key: &str, present: bool, kind: &str| -> Result<(), ConfigError> {
            if present {
                Err(invalid(key, format!("does not apply to the {kind}")))
            } else {
                Ok(())
            }
        };
        match spec {
            SystemSpec::Atom(a) => {
                only("system.r", s.r.is_some(), "model atom")?;
                only("system.lambda_max", s.lambda_max.is_some(), "model atom; use basis.l_max")?;
                for (key, v) in [
                    ("basis.xi_splines", b.xi_splines),
                    ("basis.xi_order", b.xi_order),
                    ("basis.eta_splines", b.eta_splines),
                    ("basis.eta_order", b.eta_order),
                ] {
                    only(key, v.is_some(), "model atom")?;
                }
                match (s.alpha, s.target_ip) {
                    (Some(_), Some(_)) => return Err(invalid("system.target_ip", "give either system.alpha or system.target_ip")),
                    (Some(alpha), None) => {
                        if !alpha.is_finite() {
                            return Err(invalid("system.alpha", "must be finite"));
                        }
                        a.alpha = alpha;
                    }
                    (None, Some(ip)) => {
                        if !(ip > 0.05 && ip <= 5.0) {
                            return Err(invalid("system.target_ip", format!("{ip} lies outside (0.05, 5]")));
                        }
                        // replaced by the calibrated value when the basis is built
                        a.alpha = ip_approx_inverse(ip);
                    }
                    (None, None) => {}
                }
                if let Some(v) = b.box_radius {
                    check_positive("basis.box", v)?;
                    a.r_max = v;
                }
                if let Some(v) = b.order {
                    check_order("basis.order", v)?;
                    a.order = v;
                }
                if let Some(v) = b.splines {
                    a.n_splines = v;
                }
                if a.n_splines < a.order + 2 {
                    return Err(invalid("basis.splines", format!("{} splines of order {} are too few", a.n_splines, a.order)));
                }
                if let Some(v) = b.l_max {
                    check_range("basis.l_max", v as usize, 0, 20)?;
                    a.l_max = v;
                }
                if let Some(v) = b.quad_points {
                    check_range("basis.quad_points", v, 1, 64)?;
                    a.quad_points = v;
                }
            }
            SystemSpec::TwoCenter(m) => {
                only("system.alpha", s.alpha.is_some(), "two-center system")?;
                only("system.target_ip", s.target_ip.is_some(), "two-center system")?;
                only("basis.splines", b.splines.is_some(), "two-center system; use basis.xi_splines")?;
                only("basis.order", b.order.is_some(), "two-center system; use basis.xi_order")?;
                only("basis.l_max", b.l_max.is_some(), "two-center system; use system.lambda_max")?;
                let box_radius = m.xi_max * m.r / 2.0;
                if let Some(r) = s.r {
                    check_positive("system.r", r)?;
                    m.r = r;
                }
                let box_radius = b.box_radius.unwrap_or(box_radius);
                check_positive("basis.box", box_radius)?;
                m.xi_max = 2.0 * box_radius / m.r;
                if m.xi_max <= 1.0 {
                    return Err(invalid("basis.box", "must exceed half the internuclear distance"));
                }
                if let Some(v) = s.lambda_max {
                    check_range("system.lambda_max", v as usize, 0, 10)?;
                    m.lambda_max = v;
                }
                for (key, v, target) in [
                    ("basis.xi_order", b.xi_order, &mut m.xi_order),
                    ("basis.eta_order", b.eta_order, &mut m.eta_order),
                ] {
                    if let Some(v) = v {
                        check_order(key, v)?;
                        *target = v;
                    }
                }
                for (key, v, target) in [
                    ("basis.xi_splines", b.xi_splines, &mut m.xi_splines),
                    ("basis.eta_splines", b.eta_splines, &mut m.eta_splines),
                ] {
                    if let Some(v) = v {
                        check_range(key, v, 4, 4000)?;
                        *target = v;
                    }
                }
                if m.xi_splines < m.xi_order + 2 {
                    return Err(invalid("basis.xi_splines", "too few for basis.xi_order"));
                }
                if m.eta_splines < m.eta_order + 2 {
                    return Err(invalid("basis.eta_splines", "too few for basis.eta_order"));
                }
                if let Some(v) = b.quad_points {
                    check_range("basis.quad_points", v, 1, 64)?;
                    m.quad_points = v;
                }
            }
        }
        Ok(())
    }

    fn resolve_orientations(&self, system: &SystemSpec) -> Result<Vec<Orientation>, ConfigError> {
        let allowed = system.orientations();
        let Some(names) = &self.pulse.orientations else {
            return Ok(vec![allowed[0]]);
        };
        if names.is_empty() {
            return Err(invalid("pulse.orientations", "must not be empty"));
        }
        let mut out = Vec::new();
        for n in names {
            let o: Orientation = n.parse().map_err(|m: String| invalid("pulse.orientations", m))?;
            if !allowed.contains(&o) {
                return Err(invalid("pulse.orientations", format!("'{o}' does not apply to this system")));
            }
            if out.contains(&o) {
                return Err(invalid("pulse.orientations", format!("'{o}' listed twice")));
            }
            out.push(o);
        }
        Ok(out)
    }

    fn resolve_grid(&self) -> Result<Option<Vec<f64>>, ConfigError> {
        let grid = match (&self.pulse.grid_ev, &self.pulse.grid) {
            (Some(_), Some(_)) => return Err(invalid("pulse.grid", "give either pulse.grid or pulse.grid_ev")),
            (None, None) => return Ok(None),
            (Some(g), None) => {
                let positive = g.iter().all(|&w| w > 0.0 && w.is_finite());
                let up = g.windows(2).all(|w| w[1] > w[0]);
                let down = g.windows(2).all(|w| w[1] < w[0]);
                if g.is_empty() || !positive || !(up || down) {
                    return Err(invalid("pulse.grid_ev", "must be non-empty, positive and strictly monotone"));
                }
                g.clone()
            }
            (None, Some(r)) => {
                if !(r.start_ev > 0.0 && r.start_ev.is_finite()) {
                    return Err(invalid("pulse.grid.start_ev", "must be positive"));
                }
                if !(r.step_ev > 0.0 && r.step_ev.is_finite()) {
                    return Err(invalid("pulse.grid.step_ev", "must be positive"));
                }
                if !(r.stop_ev >= r.start_ev && r.stop_ev.is_finite()) {
                    return Err(invalid("pulse.grid.stop_ev", "must not lie below start_ev"));
                }
                let n = ((r.stop_ev - r.start_ev) / r.step_ev + 1e-9).floor() as usize + 1;
                if n > 100_000 {
                    return Err(invalid("pulse.grid.step_ev", format!("{n} points is too many")));
                }
                (0..n).map(|i| r.start_ev + i as f64 * r.step_ev).collect()
            }
        };
        Ok(Some(grid))
    }

    fn resolve_propagation(&self) -> Result<PropagationOptions, ConfigError> {
        let p = &self.propagation;
        let tol_ok = |x: f64| x > 0.0 && x <= 1e-2;
        if !tol_ok(p.rtol) {
            return Err(invalid("propagation.rtol", format!("{:e} lies outside (0, 1e-2]", p.rtol)));
        }
        if !tol_ok(p.atol) {
            return Err(invalid("propagation.atol", format!("{:e} lies outside (0, 1e-2]", p.atol)));
        }
        if !p.e_cut_ev.is_finite() {
            return Err(invalid("propagation.e_cut_ev", "must be finite"));
        }
        if p.max_steps == 0 {
            return Err(invalid("propagation.max_steps", "must be positive"));
        }
        Ok(PropagationOptions {
            rtol: p.rtol,
            atol: p.atol,
            e_cut: (p.e_cut_ev > 0.0).then(|| p.e_cut_ev / HARTREE_EV),
            lambda_max: p.lambda_max,
            interaction_picture: p.interaction_picture,
            checkpoint_stride: self.output.checkpoints.as_ref().map(|_| self.output.checkpoint_stride),
            max_steps: p.max_steps,
            ..PropagationOptions::default()
        })
    }
}

fn check_positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("{v} must be positive")))
    }
}

fn check_range(key: &str, v: usize, lo: usize, hi: usize) -> Result<(), ConfigError> {
    if (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(invalid(key, format!("{v} lies outside [{lo}, {hi}]")))
    }
}

fn check_order(key: &str, v: usize) -> Result<(), ConfigError> {
    check_range(key, v, 2, 20)
}

/// Starting guess for a calibration target: inverts the closed-form
/// approximation by bisection.
fn ip_approx_inverse(ip: f64) -> f64 {
    let (mut lo, mut hi) = (-0.99, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ip_approx(mid) < ip {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A fully checked run description.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub system: SystemSpec,
    /// Refit `alpha` to this Ip when the basis is built.
    pub target_ip: Option<f64>,
    pub preset_id: String,
    pub factor_two: bool,
    pub orientations: Vec<Orientation>,
    pub template: PulseTemplate,
    pub omega_ev: f64,
    pub grid_ev: Option<Vec<f64>>,
    pub propagation: PropagationOptions,
    pub output: Option<PathBuf>,
    pub checkpoints: Option<PathBuf>,
    pub parallel: bool,
}
