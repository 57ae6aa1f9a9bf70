//! UWB probe waveforms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseKind {
    /// First derivative of a Gaussian.
    GaussianMonocycle,
    /// Second derivative of a Gaussian (Mexican hat), peak at t = 0.
    Ricker,
    /// Sine carrier under a Gaussian envelope.
    GaussianModulatedSine,
}

/// A transmitted pulse, centered on t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub kind: PulseKind,
    /// Spectral peak frequency (Hz).
    pub center_frequency: f64,
    pub amplitude: f64,
}

impl Default for Pulse {
    fn default() -> Self {
        Pulse {
            kind: PulseKind::GaussianMonocycle,
            center_frequency: 3e9,
            amplitude: 1.0,
        }
    }
}

impl Pulse {
    pub fn new(kind: PulseKind, center_frequency: f64, amplitude: f64) -> Result<Self> {
        let p = Pulse {
            kind,
            center_frequency,
            amplitude,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.center_frequency.is_finite() && self.center_frequency > 0.0) {
            return Err(Error::Validation(format!(
                "pulse center frequency must be > 0, got {}",
                self.center_frequency
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::Validation("pulse amplitude must be finite".into()));
        }
        Ok(())
    }

    /// Waveform value at time `t` relative to the pulse center.
    ///
    /// Every kind is scaled so that its peak |value| equals `amplitude`.
    pub fn eval(&self, t: f64) -> f64 {
        let f = self.center_frequency;
        match self.kind {
            PulseKind::GaussianMonocycle => {
                // Spectrum peaks at 1 / (2 pi tau); |x exp(-x^2/2)| peaks at x = 1.
                let x = t * 2.0 * PI * f;
                self.amplitude * std::f64::consts::E.sqrt() * x * (-0.5 * x * x).exp()
            }
            PulseKind::Ricker => {
                let u = PI * f * t;
                let u2 = u * u;
                self.amplitude * (1.0 - 2.0 * u2) * (-u2).exp()
            }
            PulseKind::GaussianModulatedSine => {
                let sigma = self.sine_sigma();
                let env = (-0.5 * (t / sigma).powi(2)).exp();
                self.amplitude * (2.0 * PI * f * t).sin() * env / SINE_PEAK
            }
        }
    }

    fn sine_sigma(&self) -> f64 {
        0.5 / self.center_frequency
    }

    /// Half-width of the interval outside which |pulse| stays below about
    /// 1e-3 of its peak.
    pub fn half_support(&self) -> f64 {
        let f = self.center_frequency;
        match self.kind {
            PulseKind::GaussianMonocycle => 4.5 / (2.0 * PI * f),
            PulseKind::Ricker => 3.5 / (PI * f),
            PulseKind::GaussianModulatedSine => 4.0 * self.sine_sigma(),
        }
    }

    /// Nominal pulse duration: the full width of the significant support.
    pub fn duration(&self) -> f64 {
        2.0 * self.half_support()
    }
}

/// Peak of |sin(2 pi u) exp(-2 u^2)| over u (sigma = 0.5 / f), computed once
/// so the modulated sine also peaks at `amplitude`.
const SINE_PEAK: f64 = 0.892_671_942_178_889_1;
