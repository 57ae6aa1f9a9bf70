//! Time-arrival (delay-and-sum) migration.
//!
//! Every pixel value is the sum over measuring points of the trace sampled at
//! the predicted two-way delay to that pixel. Echoes from a real reflector
//! line up and add coherently; elsewhere they do not.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{delay_unchecked, pixel_delay, two_way_delay, GridSpec, Point};
use crate::synth::{BScan, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Interpolation {
    Nearest,
    #[default]
    Linear,
}

/// The image function over an M x N grid, stored row-major (`i` along Y).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl ImageGrid {
    pub fn zeros(grid: GridSpec) -> Self {
        ImageGrid {
            grid,
            values: vec![0.0; grid.m * grid.n],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.m * grid.n {
            return Err(Error::Validation(format!(
                "image has {} values, grid needs {}",
                values.len(),
                grid.m * grid.n
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("image values must be finite".into()));
        }
        Ok(ImageGrid { grid, values })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.grid.n..(i + 1) * self.grid.n]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pixel with the largest |I|; ties resolve to the first in row-major order.
    pub fn argmax_abs(&self) -> (usize, usize) {
        let mut best = 0;
        for (idx, v) in self.values.iter().enumerate() {
            if v.abs() > self.values[best].abs() {
                best = idx;
            }
        }
        (best / self.grid.n, best % self.grid.n)
    }
}

/// Trace value at continuous time `t`; zero outside the acquisition window.
pub fn sample_trace(trace: &Trace, t0: f64, dt: f64, t: f64, interp: Interpolation) -> f64 {
    let n = trace.samples.len();
    if n == 0 {
        return 0.0;
    }
    let last = (n - 1) as f64;
    let mut pos = (t - t0) / dt;
    // Times that land on a sample up to rounding in (t - t0) / dt read it exactly.
    let nearest = pos.round();
    if (pos - nearest).abs() < 1e-9 {
        pos = nearest;
    }
    if !(pos >= 0.0 && pos <= last) {
        return 0.0;
    }
    match interp {
        Interpolation::Nearest => trace.samples[pos.round() as usize],
        Interpolation::Linear => {
            let m = pos.floor() as usize;
            let frac = pos - m as f64;
            if frac == 0.0 {
                trace.samples[m]
            } else {
                (1.0 - frac) * trace.samples[m] + frac * trace.samples[m + 1]
            }
        }
    }
}

fn check_inputs(b: &BScan, grid: &GridSpec) -> Result<()> {
    b.validate()?;
    grid.validate()
}

/// Delay-and-sum image of a B-scan over `grid`.
///
/// Rows are processed in parallel; each pixel sums its traces in ascending
/// `k`, so the result does not depend on the thread schedule.
pub fn migrate(b: &BScan, grid: &GridSpec, interp: Interpolation) -> Result<ImageGrid> {
    check_inputs(b, grid)?;
    let g = &b.geometry;
    let mut values = vec![0.0; grid.m * grid.n];
    values.par_chunks_mut(grid.n).enumerate().for_each(|(i, row)| {
        let y = grid.y_of(i);
        let offsets: Vec<f64> = (0..g.k).map(|k| y - g.antenna_y(k)).collect();
        for (j, out) in row.iter_mut().enumerate() {
            let z = grid.z_of(j);
            let mut acc = 0.0;
            for (trace, &dy) in b.traces.iter().zip(&offsets) {
                acc += sample_trace(trace, g.t0, g.dt, delay_unchecked(dy, z, g.c), interp);
            }
            *out = acc;
        }
    });
    Ok(ImageGrid {
        grid: *grid,
        values,
    })
}

/// Plain triple loop over (i, j, k), used as the reference for [`migrate`].
pub fn migrate_reference(b: &BScan, grid: &GridSpec, interp: Interpolation) -> Result<ImageGrid> {
    check_inputs(b, grid)?;
    let g = &b.geometry;
    let mut img = ImageGrid::zeros(*grid);
    for i in 0..grid.m {
        for j in 0..grid.n {
            let mut acc = 0.0;
            for k in 0..g.k {
                let t = pixel_delay(i, j, k, g, grid)?;
                acc += sample_trace(&b.traces[k], g.t0, g.dt, t, interp);
            }
            img.values[i * grid.n + j] = acc;
        }
    }
    Ok(img)
}

/// Shifted-sum signal `J(t) = sum_k b_k(t + T_k(p))` at a single point.
///
/// A reflector at `p` produces a pulse centered on `t = 0`.
pub fn shifted_sum(b: &BScan, p: Point, times: &[f64], interp: Interpolation) -> Result<Vec<f64>> {
    b.validate()?;
    let g = &b.geometry;
    let delays = (0..g.k)
        .map(|k| two_way_delay(p, k, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(times
        .iter()
        .map(|&t| {
            b.traces
                .iter()
                .zip(&delays)
                .map(|(trace, &d)| sample_trace(trace, g.t0, g.dt, t + d, interp))
                .fold(0.0, |acc, v| acc + v)
        })
        .collect())
}

/// [`shifted_sum`] at the center of pixel `(i, j)`.
pub fn pixel_shifted_sum(
    b: &BScan,
    grid: &GridSpec,
    i: usize,
    j: usize,
    times: &[f64],
    interp: Interpolation,
) -> Result<Vec<f64>> {
    if i >= grid.m || j >= grid.n {
        return Err(Error::Parameter(format!("pixel ({i}, {j}) out of range")));
    }
    shifted_sum(b, grid.pixel_center(i, j), times, interp)
}
