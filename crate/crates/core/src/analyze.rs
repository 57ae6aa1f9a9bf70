//! Winding edge readout and axial displacement estimation.
//!
//! The winding's front face images as a line along Y. Collapsing |I| across
//! a narrow Z band gives a per-row intensity profile; the lower and upper
//! edges are where that profile crosses a fraction of its peak.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::migrate::ImageGrid;

/// Width, in columns, of the default band around the brightest column.
pub const DEFAULT_BAND_COLUMNS: usize = 5;

/// Default edge threshold as a fraction of the profile peak.
pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Max,
    Sum,
}

/// Per-row aggregated |I| with the world Y coordinate of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeProfile {
    pub row_intensity: Vec<f64>,
    pub y_axis: Vec<f64>,
    /// Columns `[first, last]` that were aggregated.
    pub columns: (usize, usize),
}

impl EdgeProfile {
    pub fn peak(&self) -> f64 {
        self.row_intensity.iter().fold(0.0, |m, &v| m.max(v))
    }
}

/// Columns whose Z lies inside `[z_lo, z_hi]`.
fn band_columns(img: &ImageGrid, band: Option<(f64, f64)>) -> Result<(usize, usize)> {
    let grid = &img.grid;
    match band {
        Some((z_lo, z_hi)) => {
            let (z_lo, z_hi) = (z_lo.min(z_hi), z_lo.max(z_hi));
            let cols: Vec<usize> = (0..grid.n)
                .filter(|&j| {
                    let z = grid.z_of(j);
                    z >= z_lo && z <= z_hi
                })
                .collect();
            match (cols.first(), cols.last()) {
                (Some(&a), Some(&b)) => Ok((a, b)),
                _ => Err(Error::Validation(format!(
                    "column band [{z_lo}, {z_hi}] m contains no image columns"
                ))),
            }
        }
        None => {
            let (_, j) = img.argmax_abs();
            let half = DEFAULT_BAND_COLUMNS / 2;
            Ok((j.saturating_sub(half), (j + half).min(grid.n - 1)))
        }
    }
}

/// Collapse |I| over a Z band into a per-row profile.
///
/// Without an explicit band, the band is [`DEFAULT_BAND_COLUMNS`] wide and
/// centered on the brightest column.
pub fn edge_profile(img: &ImageGrid, aggregation: Aggregation, band: Option<(f64, f64)>) -> Result<EdgeProfile> {
    if !(img.max_abs() > 0.0) {
        return Err(Error::NoTarget("image is identically zero".into()));
    }
    let (lo, hi) = band_columns(img, band)?;
    let row_intensity = (0..img.grid.m)
        .map(|i| {
            let cells = img.row(i)[lo..=hi].iter().map(|v| v.abs());
            match aggregation {
                Aggregation::Max => cells.fold(0.0, f64::max),
                Aggregation::Sum => cells.sum(),
            }
        })
        .collect();
    let y_axis = (0..img.grid.m).map(|i| img.grid.y_of(i)).collect();
    Ok(EdgeProfile {
        row_intensity,
        y_axis,
        columns: (lo, hi),
    })
}

/// Lower and upper edge ordinates of the target footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edges {
    pub y1: f64,
    pub y2: f64,
}

impl Edges {
    pub fn new(y1: f64, y2: f64) -> Result<Self> {
        if !(y1 < y2) {
            return Err(Error::Validation(format!("edge pair must satisfy Y1 < Y2, got {y1} and {y2}")));
        }
        Ok(Edges { y1, y2 })
    }

    pub fn center(&self) -> f64 {
        center_ordinate(self.y1, self.y2)
    }
}

/// Find where the profile crosses `alpha * peak`, with linear interpolation
/// between the bracketing rows.
///
/// Both crossings must be bracketed by the grid: a footprint that touches
/// the first or last row has no measurable edge there.
pub fn extract_edges(profile: &EdgeProfile, alpha: f64) -> Result<Edges> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let r = &profile.row_intensity;
    let y = &profile.y_axis;
    if r.len() != y.len() || r.is_empty() {
        return Err(Error::Validation("profile and Y axis lengths differ".into()));
    }
    let peak = profile.peak();
    if !(peak > 0.0) {
        return Err(Error::NoTarget("edge profile is identically zero".into()));
    }
    let threshold = alpha * peak;
    let first = r.iter().position(|&v| v >= threshold);
    let last = r.iter().rposition(|&v| v >= threshold);
    let (first, last) = match (first, last) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::DegenerateProfile("no row reaches the threshold".into())),
    };
    if first == 0 || last == r.len() - 1 {
        return Err(Error::DegenerateProfile(
            "target footprint touches the image boundary; edge not bracketed".into(),
        ));
    }
    let cross = |lo: usize, hi: usize| {
        let frac = (threshold - r[lo]) / (r[hi] - r[lo]);
        y[lo] + frac * (y[hi] - y[lo])
    };
    let y1 = cross(first - 1, first);
    let y2 = cross(last + 1, last);
    if !(y1 < y2) {
        return Err(Error::DegenerateProfile(format!("edges do not separate: {y1} >= {y2}")));
    }
    Ok(Edges { y1, y2 })
}

/// Center ordinate, the midpoint of the two edges.
#[inline]
pub fn center_ordinate(y1: f64, y2: f64) -> f64 {
    (y1 + y2) / 2.0
}

/// Edge readout of one image, as reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSummary {
    pub y1: f64,
    pub y2: f64,
    pub y_c: f64,
}

impl From<Edges> for EdgeSummary {
    fn from(e: Edges) -> Self {
        EdgeSummary {
            y1: e.y1,
            y2: e.y2,
            y_c: e.center(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementReport {
    pub baseline: EdgeSummary,
    pub test: EdgeSummary,
    /// Baseline center minus test center.
    pub estimated_displacement: f64,
    pub actual_displacement: Option<f64>,
    /// `|estimated - actual| / |actual|`.
    pub relative_error: Option<f64>,
}

/// Axial displacement between a baseline and a test readout.
///
/// The sign follows baseline minus test, so a winding that moved down
/// (toward smaller Y) gives a positive displacement.
pub fn estimate_displacement(baseline: Edges, test: Edges, actual: Option<f64>) -> Result<DisplacementReport> {
    let baseline = EdgeSummary::from(Edges::new(baseline.y1, baseline.y2)?);
    let test = EdgeSummary::from(Edges::new(test.y1, test.y2)?);
    let estimated = baseline.y_c - test.y_c;
    let relative_error = match actual {
        Some(a) if a == 0.0 || !a.is_finite() => {
            return Err(Error::Validation(format!(
                "actual displacement must be finite and non-zero to compute an error, got {a}"
            )))
        }
        Some(a) => Some((estimated - a).abs() / a.abs()),
        None => None,
    };
    Ok(DisplacementReport {
        baseline,
        test,
        estimated_displacement: estimated,
        actual_displacement: actual,
        relative_error,
    })
}

/// Profile and edges of an image with the given options.
pub fn read_edges(img: &ImageGrid, aggregation: Aggregation, band: Option<(f64, f64)>, alpha: f64) -> Result<Edges> {
    let profile = edge_profile(img, aggregation, band)?;
    extract_edges(&profile, alpha)
}
