//! Scan geometry, image grid layout and the two-way delay model.
//!
//! The antenna moves along the Y axis (the winding axis); Z is range, measured
//! perpendicular to the measuring line. Measuring point `k` sits at
//! `(k * d_m, 0)`. All quantities are SI.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum speed of light (m/s).
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// A point in the Y-Z plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub y: f64,
    pub z: f64,
}

impl Point {
    pub fn new(y: f64, z: f64) -> Self {
        Point { y, z }
    }
}

/// Measuring-line layout and trace sampling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGeometry {
    /// Spacing between adjacent measuring points (m).
    pub d_m: f64,
    /// Number of measuring points.
    pub k: usize,
    /// Propagation speed (m/s).
    pub c: f64,
    /// Sampling interval (s).
    pub dt: f64,
    pub n_samples: usize,
    /// Time of sample 0 (s).
    pub t0: f64,
}

impl ScanGeometry {
    pub fn new(d_m: f64, k: usize, c: f64, dt: f64, n_samples: usize, t0: f64) -> Result<Self> {
        let g = ScanGeometry {
            d_m,
            k,
            c,
            dt,
            n_samples,
            t0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.d_m) {
            return Err(Error::Validation(format!("measuring step must be > 0, got {}", self.d_m)));
        }
        if self.k < 2 {
            return Err(Error::Validation(format!("need at least 2 measuring points, got {}", self.k)));
        }
        if !positive(self.c) {
            return Err(Error::Validation(format!("wave speed must be > 0, got {}", self.c)));
        }
        if !positive(self.dt) {
            return Err(Error::Validation(format!("sampling interval must be > 0, got {}", self.dt)));
        }
        if self.n_samples < 2 {
            return Err(Error::Validation(format!("need at least 2 samples per trace, got {}", self.n_samples)));
        }
        if !self.t0.is_finite() {
            return Err(Error::Validation("acquisition start time must be finite".into()));
        }
        if !(self.t_end() > self.t0) {
            return Err(Error::Validation("acquisition window has zero length".into()));
        }
        Ok(())
    }

    /// Y coordinate of measuring point `k` (unchecked).
    #[inline]
    pub fn antenna_y(&self, k: usize) -> f64 {
        k as f64 * self.d_m
    }

    /// Time of sample `m`.
    #[inline]
    pub fn sample_time(&self, m: usize) -> f64 {
        self.t0 + m as f64 * self.dt
    }

    /// Time of the last sample.
    pub fn t_end(&self) -> f64 {
        self.sample_time(self.n_samples.saturating_sub(1))
    }

    /// Total extent of the measuring line, `(K - 1) * d_m`.
    pub fn aperture(&self) -> f64 {
        (self.k as f64 - 1.0) * self.d_m
    }

    pub(crate) fn check_index(&self, k: usize) -> Result<()> {
        if k >= self.k {
            return Err(Error::Parameter(format!(
                "measuring point index {k} out of range (K = {})",
                self.k
            )));
        }
        Ok(())
    }
}

/// Layout of the M x N pixel grid over the Y-Z plane.
///
/// Pixel `(i, j)` sits at `(y_origin + i * d0, z_origin + j * d0)`; `i` runs
/// along Y and `j` along Z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Pixel size (m).
    pub d0: f64,
    /// Pixels along Y.
    pub m: usize,
    /// Pixels along Z.
    pub n: usize,
    pub y_origin: f64,
    pub z_origin: f64,
}

impl GridSpec {
    pub fn new(d0: f64, m: usize, n: usize, y_origin: f64, z_origin: f64) -> Result<Self> {
        let grid = GridSpec {
            d0,
            m,
            n,
            y_origin,
            z_origin,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d0.is_finite() && self.d0 > 0.0) {
            return Err(Error::Validation(format!("pixel size must be > 0, got {}", self.d0)));
        }
        if self.m == 0 || self.n == 0 {
            return Err(Error::Validation(format!(
                "grid must have at least one pixel per axis, got {} x {}",
                self.m, self.n
            )));
        }
        if !self.y_origin.is_finite() || !self.z_origin.is_finite() {
            return Err(Error::Validation("grid origin must be finite".into()));
        }
        // The smallest z is at j = 0.
        if !(self.z_origin > 0.0) {
            return Err(Error::Validation(format!(
                "image plane must lie strictly in front of the measuring line (z_origin = {})",
                self.z_origin
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn y_of(&self, i: usize) -> f64 {
        self.y_origin + i as f64 * self.d0
    }

    #[inline]
    pub fn z_of(&self, j: usize) -> f64 {
        self.z_origin + j as f64 * self.d0
    }

    /// World coordinates of pixel `(i, j)`.
    #[inline]
    pub fn pixel_center(&self, i: usize, j: usize) -> Point {
        Point::new(self.y_of(i), self.z_of(j))
    }

    /// Nearest pixel to a world point, if it falls inside the grid.
    pub fn pixel_of(&self, p: Point) -> Option<(usize, usize)> {
        let fi = ((p.y - self.y_origin) / self.d0).round();
        let fj = ((p.z - self.z_origin) / self.d0).round();
        if fi < 0.0 || fj < 0.0 || fi >= self.m as f64 || fj >= self.n as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }
}

/// Two-way travel time from measuring point `k` to `p` and back.
pub fn two_way_delay(p: Point, k: usize, g: &ScanGeometry) -> Result<f64> {
    g.check_index(k)?;
    if !(p.z >= 0.0) {
        return Err(Error::Parameter(format!("point must have z >= 0, got {}", p.z)));
    }
    Ok(delay_unchecked(p.y - g.antenna_y(k), p.z, g.c))
}

/// Delay for a Y offset and range. Shared by every kernel so that all routes
/// perform the same floating-point operations.
#[inline]
pub(crate) fn delay_unchecked(dy: f64, z: f64, c: f64) -> f64 {
    2.0 * (dy * dy + z * z).sqrt() / c
}

/// Two-way delay from measuring point `k` to the center of pixel `(i, j)`.
pub fn pixel_delay(i: usize, j: usize, k: usize, g: &ScanGeometry, grid: &GridSpec) -> Result<f64> {
    if i >= grid.m || j >= grid.n {
        return Err(Error::Parameter(format!(
            "pixel ({i}, {j}) out of range for {} x {} grid",
            grid.m, grid.n
        )));
    }
    two_way_delay(grid.pixel_center(i, j), k, g)
}
