//! Per-trace time gating around the expected target reflection.
//!
//! For each measuring point the target echo can only arrive between the
//! delays of the nearest and farthest points of a declared bounding box.
//! Samples outside that interval are zeroed.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{two_way_delay, Point, ScanGeometry};
use crate::synth::{BScan, Trace};

/// Bounding box of the expected target plus symmetric time padding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateRegion {
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Padding added on both sides of the window (s).
    pub guard_time: f64,
    /// Width of the raised-cosine taper at each window edge (s); 0 is a hard gate.
    #[serde(default)]
    pub taper: f64,
}

impl GateRegion {
    pub fn new(y_min: f64, y_max: f64, z_min: f64, z_max: f64, guard_time: f64) -> Result<Self> {
        let r = GateRegion {
            y_min,
            y_max,
            z_min,
            z_max,
            guard_time,
            taper: 0.0,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.y_min, self.y_max, self.z_min, self.z_max, self.guard_time, self.taper]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Validation("gate region values must be finite".into()));
        }
        if self.y_min > self.y_max {
            return Err(Error::Validation(format!(
                "gate region y_min {} exceeds y_max {}",
                self.y_min, self.y_max
            )));
        }
        if !(self.z_min > 0.0 && self.z_min <= self.z_max) {
            return Err(Error::Validation(format!(
                "gate region needs 0 < z_min <= z_max, got {} and {}",
                self.z_min, self.z_max
            )));
        }
        if self.guard_time < 0.0 || self.taper < 0.0 {
            return Err(Error::Validation("guard time and taper width must be >= 0".into()));
        }
        Ok(())
    }
}

/// Arrival window `(t_min, t_max)` of the target echo at measuring point `k`.
pub fn gate_window(region: &GateRegion, k: usize, g: &ScanGeometry) -> Result<(f64, f64)> {
    region.validate()?;
    let y_k = g.antenna_y(k);
    let nearest = Point::new(y_k.clamp(region.y_min, region.y_max), region.z_min);
    let t_near = two_way_delay(nearest, k, g)?;
    let mut t_far = f64::MIN;
    for y in [region.y_min, region.y_max] {
        for z in [region.z_min, region.z_max] {
            t_far = t_far.max(two_way_delay(Point::new(y, z), k, g)?);
        }
    }
    let t_min = (t_near - region.guard_time).max(0.0);
    Ok((t_min, t_far + region.guard_time))
}

/// A trace whose window missed the acquisition window entirely.
#[derive(Debug, Clone, PartialEq)]
pub struct GateWarning {
    pub k: usize,
    pub t_min: f64,
    pub t_max: f64,
}

impl std::fmt::Display for GateWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "trace {}: gate window [{:.4} ns, {:.4} ns] lies outside the acquisition window; trace zeroed",
            self.k,
            self.t_min * 1e9,
            self.t_max * 1e9
        )
    }
}

#[derive(Debug, Clone)]
pub struct Gated {
    pub bscan: BScan,
    pub warnings: Vec<GateWarning>,
}

/// Inclusive sample index range kept for a window, or `None` if the window
/// misses the acquisition window.
fn kept_range(t_min: f64, t_max: f64, g: &ScanGeometry) -> Option<(usize, usize)> {
    if t_max < g.t0 || t_min > g.t_end() {
        return None;
    }
    let last = (g.n_samples - 1) as f64;
    let lo = ((t_min - g.t0) / g.dt).ceil().clamp(0.0, last);
    let hi = ((t_max - g.t0) / g.dt).floor().clamp(0.0, last);
    if lo <= hi {
        Some((lo as usize, hi as usize))
    } else {
        // Window narrower than one sample: keep the nearest sample.
        let m = ((0.5 * (t_min + t_max) - g.t0) / g.dt).round().clamp(0.0, last) as usize;
        Some((m, m))
    }
}

/// Raised-cosine weight for a sample `d` seconds inside the window edge.
#[inline]
fn taper_weight(d: f64, width: f64) -> f64 {
    if width <= 0.0 || d >= width {
        1.0
    } else {
        0.5 * (1.0 - (PI * d.max(0.0) / width).cos())
    }
}

/// Zero each trace outside its arrival window.
///
/// With no taper, samples inside the window are copied unchanged, so the
/// operation is idempotent.
pub fn apply_gate(b: &BScan, region: &GateRegion) -> Result<Gated> {
    region.validate()?;
    b.validate()?;
    let g = &b.geometry;
    let mut warnings = Vec::new();
    let mut traces = Vec::with_capacity(b.traces.len());
    for tr in &b.traces {
        let (t_min, t_max) = gate_window(region, tr.k, g)?;
        let mut samples = vec![0.0; tr.samples.len()];
        match kept_range(t_min, t_max, g) {
            Some((lo, hi)) => {
                #[allow(clippy::needless_range_loop)]
                for m in lo..=hi {
                    let w = if region.taper > 0.0 {
                        let t = g.sample_time(m);
                        taper_weight((t - t_min).min(t_max - t), region.taper)
                    } else {
                        1.0
                    };
                    samples[m] = if w == 1.0 { tr.samples[m] } else { w * tr.samples[m] };
                }
            }
            None => warnings.push(GateWarning { k: tr.k, t_min, t_max }),
        }
        traces.push(Trace { k: tr.k, samples });
    }
    Ok(Gated {
        bscan: BScan {
            geometry: *g,
            traces,
        },
        warnings,
    })
}
