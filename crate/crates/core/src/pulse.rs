//! cos² laser pulses with zero carrier-envelope phase.
//!
//! The envelope multiplies the field, `F(t) = F₀ cos²(πt/T_p) cos(ωt)` on
//! `[-T_p/2, T_p/2]`, and the vector potential is its exact antiderivative.
//! Expanding the envelope, `F` is a sum of three cosines at `ω` and
//! `ω ± Ω`, `Ω = 2π/T_p`, which gives closed forms for `A(t)` and for the
//! windowed Fourier component.

use thiserror::Error;

/// Intensity (W/cm²) corresponding to a field of one atomic unit.
pub const AU_INTENSITY: f64 = 3.509_447_58e16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PulseError {
    #[error("a cos² pulse needs at least 2 cycles (got {0})")]
    TooFewCycles(u32),
    #[error("carrier frequency {0} must be positive and finite")]
    InvalidFrequency(f64),
    #[error("intensity {0} W/cm² must be non-negative and finite")]
    InvalidIntensity(f64),
    #[error("t = {t} outside the pulse window [-{half}, {half}]")]
    OutsideWindow { t: f64, half: f64 },
}

/// Carrier frequency (hartree), cycle count and peak intensity (W/cm²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSpec {
    pub omega: f64,
    pub cycles: u32,
    pub intensity: f64,
}

impl PulseSpec {
    pub fn new(omega: f64, cycles: u32, intensity: f64) -> Self {
        Self { omega, cycles, intensity }
    }

    pub fn validate(&self) -> Result<(), PulseError> {
        if self.cycles < 2 {
            return Err(PulseError::TooFewCycles(self.cycles));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(PulseError::InvalidFrequency(self.omega));
        }
        if !(self.intensity >= 0.0 && self.intensity.is_finite()) {
            return Err(PulseError::InvalidIntensity(self.intensity));
        }
        Ok(())
    }

    /// `T_p = 2π N_c / ω`.
    pub fn duration(&self) -> f64 {
        2.0 * std::f64::consts::PI * f64::from(self.cycles) / self.omega
    }

    /// Peak field `F₀ = √(I / I_au)`.
    pub fn peak_field(&self) -> f64 {
        (self.intensity / AU_INTENSITY).sqrt()
    }
}

/// Anything that supplies a vector potential on a finite window.
pub trait Drive: Sync {
    /// Start and end of the interaction.
    fn window(&self) -> (f64, f64);
    fn vector_potential(&self, t: f64) -> f64;
}

/// A validated pulse with its derived constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    spec: PulseSpec,
    f0: f64,
    tp: f64,
    /// Envelope frequency `2π/T_p`.
    big_omega: f64,
}

impl Pulse {
    pub fn new(spec: PulseSpec) -> Result<Self, PulseError> {
        spec.validate()?;
        let tp = spec.duration();
        Ok(Self {
            spec,
            f0: spec.peak_field(),
            tp,
            big_omega: 2.0 * std::f64::consts::PI / tp,
        })
    }

    pub fn spec(&self) -> &PulseSpec {
        &self.spec
    }

    pub fn duration(&self) -> f64 {
        self.tp
    }

    pub fn peak_field(&self) -> f64 {
        self.f0
    }

    fn check(&self, t: f64) -> Result<(), PulseError> {
        let half = 0.5 * self.tp;
        // allow rounding at the window edges
        if t.abs() > half * (1.0 + 1e-14) || t.is_nan() {
            return Err(PulseError::OutsideWindow { t, half });
        }
        Ok(())
    }

    /// `F(t)`.
    pub fn field(&self, t: f64) -> Result<f64, PulseError> {
        self.check(t)?;
        let env = (std::f64::consts::PI * t / self.tp).cos();
        Ok(self.f0 * env * env * (self.spec.omega * t).cos())
    }

    /// `A(t) = -∫_{-T_p/2}^{t} F(t') dt'`.
    pub fn vector_potential(&self, t: f64) -> Result<f64, PulseError> {
        self.check(t)?;
        Ok(self.vector_potential_unchecked(t))
    }

    fn vector_potential_unchecked(&self, t: f64) -> f64 {
        let w = self.spec.omega;
        let wp = w + self.big_omega;
        let wm = w - self.big_omega;
        // the antiderivative below is odd and vanishes at ±T_p/2 for
        // integer N_c >= 2
        let g = (w * t).sin() / w + (wp * t).sin() / (2.0 * wp) + (wm * t).sin() / (2.0 * wm);
        -0.5 * self.f0 * g
    }

    /// Fourier component `F_{ω₀} = (2/T_p) ∫ F(t) cos(ω₀ t) dt` of this pulse.
    pub fn fourier_component(&self, omega0: f64) -> Result<f64, PulseError> {
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(PulseError::InvalidFrequency(omega0));
        }
        Ok(fourier_component_fixed_window(self.f0, self.spec.omega, omega0, self.tp))
    }
}

impl Drive for Pulse {
    fn window(&self) -> (f64, f64) {
        (-0.5 * self.tp, 0.5 * self.tp)
    }

    fn vector_potential(&self, t: f64) -> f64 {
        self.vector_potential_unchecked(t)
    }
}

/// `sin(x)/x`.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// `(2/T) ∫_{-T/2}^{T/2} F₀ cos²(πt/T) cos(ωt) cos(ω₀t) dt` for an
/// arbitrary window `T`; symmetric under `ω ↔ ω₀`.
pub fn fourier_component_fixed_window(f0: f64, omega: f64, omega0: f64, window: f64) -> f64 {
    let big = 2.0 * std::f64::consts::PI / window;
    let h = 0.5 * window;
    let term = |a: f64| sinc((a - omega0) * h) + sinc((a + omega0) * h);
    0.5 * f0 * (term(omega) + 0.5 * term(omega + big) + 0.5 * term(omega - big))
}

/// `F_{ω₀}(ω)` for `spec`.
pub fn fourier_component(spec: &PulseSpec, omega0: f64) -> Result<f64, PulseError> {
    Pulse::new(*spec)?.fourier_component(omega0)
}
