//! Forward model: B-scans from parametric scenes.
//!
//! Each echo is a delayed, scaled copy of the probe pulse. Scatterers are
//! isotropic and non-interacting, so a trace is the superposition of one
//! echo per scatterer plus optional white Gaussian noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{delay_unchecked, Point, ScanGeometry};
use crate::pulse::Pulse;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    pub position: Point,
    pub reflectivity: f64,
}

impl Scatterer {
    pub fn new(y: f64, z: f64, reflectivity: f64) -> Self {
        Scatterer {
            position: Point::new(y, z),
            reflectivity,
        }
    }
}

/// Front face of the winding, seen side-on as a segment at constant range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Winding {
    /// Lower edge ordinate (m).
    pub y_low: f64,
    /// Upper edge ordinate (m).
    pub y_high: f64,
    /// Range of the front face (m).
    pub z_front: f64,
    /// Spacing of the point scatterers rendered along the face (m).
    pub facet_spacing: f64,
}

impl Winding {
    pub fn validate(&self) -> Result<()> {
        if !(self.y_low < self.y_high) {
            return Err(Error::Validation(format!(
                "winding edges must satisfy y_low < y_high, got {} and {}",
                self.y_low, self.y_high
            )));
        }
        if !(self.z_front > 0.0) {
            return Err(Error::Validation(format!(
                "winding must lie in front of the measuring line, z = {}",
                self.z_front
            )));
        }
        if !(self.facet_spacing.is_finite() && self.facet_spacing > 0.0) {
            return Err(Error::Validation(format!(
                "facet spacing must be > 0, got {}",
                self.facet_spacing
            )));
        }
        Ok(())
    }

    /// The same face moved by `dy` along the winding axis.
    pub fn shifted(&self, dy: f64) -> Winding {
        Winding {
            y_low: self.y_low + dy,
            y_high: self.y_high + dy,
            ..*self
        }
    }
}

/// Point scatterers along the winding's front face, unit reflectivity.
///
/// Points are laid at `y_low + n * spacing`; the last point is pinned to
/// `y_high` when the lattice does not land on it.
pub fn render_winding(w: &Winding) -> Result<Vec<Scatterer>> {
    w.validate()?;
    let height = w.y_high - w.y_low;
    let steps = (height / w.facet_spacing).floor() as usize;
    let mut out: Vec<Scatterer> = (0..=steps)
        .map(|n| Scatterer::new(w.y_low + n as f64 * w.facet_spacing, w.z_front, 1.0))
        .collect();
    // Lattice points within a hair of y_high are snapped rather than duplicated.
    let tol = 1e-9 * w.facet_spacing;
    match out.last_mut() {
        Some(last) if (w.y_high - last.position.y).abs() <= tol => last.position.y = w.y_high,
        _ => out.push(Scatterer::new(w.y_high, w.z_front, 1.0)),
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    #[serde(default)]
    pub scatterers: Vec<Scatterer>,
    #[serde(default)]
    pub winding: Option<Winding>,
}

impl Scene {
    pub fn point(y: f64, z: f64) -> Self {
        Scene {
            scatterers: vec![Scatterer::new(y, z, 1.0)],
            winding: None,
        }
    }

    pub fn with_winding(w: Winding) -> Self {
        Scene {
            scatterers: Vec::new(),
            winding: Some(w),
        }
    }

    /// All point scatterers, including those rendered from the winding.
    pub fn flatten(&self) -> Result<Vec<Scatterer>> {
        let mut all = self.scatterers.clone();
        if let Some(w) = &self.winding {
            all.extend(render_winding(w)?);
        }
        for s in &all {
            if !(s.position.z > 0.0) || !s.position.y.is_finite() {
                return Err(Error::Validation(format!(
                    "scatterer at ({}, {}) is not in front of the measuring line",
                    s.position.y, s.position.z
                )));
            }
            if !s.reflectivity.is_finite() {
                return Err(Error::Validation("scatterer reflectivity must be finite".into()));
            }
        }
        Ok(all)
    }

    /// The scene translated by `dy` along Y.
    pub fn shifted(&self, dy: f64) -> Scene {
        Scene {
            scatterers: self
                .scatterers
                .iter()
                .map(|s| Scatterer::new(s.position.y + dy, s.position.z, s.reflectivity))
                .collect(),
            winding: self.winding.map(|w| w.shifted(dy)),
        }
    }
}

/// Geometric spreading applied to each echo amplitude; `R` is the one-way range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Spreading {
    None,
    InverseR,
    #[default]
    InverseR2,
}

impl Spreading {
    #[inline]
    fn factor(self, r: f64) -> f64 {
        match self {
            Spreading::None => 1.0,
            Spreading::InverseR => 1.0 / r,
            Spreading::InverseR2 => 1.0 / (r * r),
        }
    }
}

/// One A-scan, recorded at measuring point `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub k: usize,
    pub samples: Vec<f64>,
}

/// All traces along the measuring line, ordered by `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BScan {
    pub geometry: ScanGeometry,
    pub traces: Vec<Trace>,
}

impl BScan {
    pub fn new(geometry: ScanGeometry, traces: Vec<Trace>) -> Result<Self> {
        let b = BScan { geometry, traces };
        b.validate()?;
        Ok(b)
    }

    pub fn zeros(geometry: ScanGeometry) -> Self {
        let traces = (0..geometry.k)
            .map(|k| Trace {
                k,
                samples: vec![0.0; geometry.n_samples],
            })
            .collect();
        BScan { geometry, traces }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.traces.len() != self.geometry.k {
            return Err(Error::Validation(format!(
                "expected {} traces, found {}",
                self.geometry.k,
                self.traces.len()
            )));
        }
        for (idx, tr) in self.traces.iter().enumerate() {
            if tr.k != idx {
                return Err(Error::Validation(format!("trace {idx} is labelled k = {}", tr.k)));
            }
            if tr.samples.len() != self.geometry.n_samples {
                return Err(Error::Validation(format!(
                    "trace {idx} has {} samples, expected {}",
                    tr.samples.len(),
                    self.geometry.n_samples
                )));
            }
        }
        Ok(())
    }

    /// Elementwise map over every sample.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> BScan {
        BScan {
            geometry: self.geometry,
            traces: self
                .traces
                .iter()
                .map(|t| Trace {
                    k: t.k,
                    samples: t.samples.iter().map(|&v| f(v)).collect(),
                })
                .collect(),
        }
    }

    /// Elementwise sum of two scans with identical geometry.
    pub fn add(&self, other: &BScan) -> Result<BScan> {
        if self.geometry != other.geometry || self.traces.len() != other.traces.len() {
            return Err(Error::Validation("cannot add B-scans with different geometry".into()));
        }
        let traces = self
            .traces
            .iter()
            .zip(&other.traces)
            .map(|(a, b)| Trace {
                k: a.k,
                samples: a.samples.iter().zip(&b.samples).map(|(x, y)| x + y).collect(),
            })
            .collect();
        Ok(BScan {
            geometry: self.geometry,
            traces,
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.traces
            .iter()
            .flat_map(|t| t.samples.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Options for [`synthesize`] besides the scene and geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthOptions {
    pub pulse: Pulse,
    pub spreading: Spreading,
    /// RMS of additive white Gaussian noise; 0 disables noise.
    pub noise_rms: f64,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            pulse: Pulse::default(),
            spreading: Spreading::default(),
            noise_rms: 0.0,
            seed: 0,
        }
    }
}

impl SynthOptions {
    pub fn clean(pulse: Pulse) -> Self {
        SynthOptions {
            pulse,
            spreading: Spreading::None,
            noise_rms: 0.0,
            seed: 0,
        }
    }
}

/// Synthesize the B-scan a scene produces along the measuring line.
///
/// Noise for trace `k` is drawn from ChaCha8 stream `k` of `seed`, so the
/// output is independent of how traces are scheduled.
pub fn synthesize(scene: &Scene, g: &ScanGeometry, opts: &SynthOptions) -> Result<BScan> {
    g.validate()?;
    opts.pulse.validate()?;
    if !(opts.noise_rms >= 0.0 && opts.noise_rms.is_finite()) {
        return Err(Error::Validation(format!("noise RMS must be >= 0, got {}", opts.noise_rms)));
    }
    let scatterers = scene.flatten()?;
    let noise = if opts.noise_rms > 0.0 {
        Some(Normal::new(0.0, opts.noise_rms).map_err(|e| Error::Validation(e.to_string()))?)
    } else {
        None
    };

    let traces = (0..g.k)
        .into_par_iter()
        .map(|k| {
            let y_k = g.antenna_y(k);
            let echoes: Vec<(f64, f64)> = scatterers
                .iter()
                .map(|s| {
                    let dy = s.position.y - y_k;
                    let r = (dy * dy + s.position.z * s.position.z).sqrt();
                    let delay = delay_unchecked(dy, s.position.z, g.c);
                    (delay, s.reflectivity * opts.spreading.factor(r))
                })
                .collect();
            let mut samples: Vec<f64> = (0..g.n_samples)
                .map(|m| {
                    let t = g.sample_time(m);
                    echoes
                        .iter()
                        .map(|&(delay, weight)| weight * opts.pulse.eval(t - delay))
                        .sum()
                })
                .collect();
            if let Some(dist) = &noise {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(k as u64);
                for v in samples.iter_mut() {
                    *v += dist.sample(&mut rng);
                }
            }
            Trace { k, samples }
        })
        .collect();

    Ok(BScan {
        geometry: *g,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::two_way_delay;
    use crate::pulse::PulseKind;

    fn geom() -> ScanGeometry {
        ScanGeometry::new(0.03, 21, 3e8, 1e-11, 512, 0.0).unwrap()
    }

    fn ricker() -> Pulse {
        Pulse::new(PulseKind::Ricker, 3e9, 1.0).unwrap()
    }

    fn argmax_abs(v: &[f64]) -> usize {
        v.iter()
            .enumerate()
            .fold((0, f64::MIN), |(bi, bv), (i, x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) })
            .0
    }

    #[test]
    fn render_two_endpoints() {
        let w = Winding {
            y_low: 0.23,
            y_high: 0.38,
            z_front: 0.45,
            facet_spacing: 0.15,
        };
        let s = render_winding(&w).unwrap();
        let ys: Vec<f64> = s.iter().map(|s| s.position.y).collect();
        assert_eq!(ys, vec![0.23, 0.38]);
    }

    #[test]
    fn render_cap_rule() {
        let w = Winding {
            y_low: 0.1,
            y_high: 0.2,
            z_front: 0.45,
            facet_spacing: 0.5,
        };
        let ys: Vec<f64> = render_winding(&w).unwrap().iter().map(|s| s.position.y).collect();
        assert_eq!(ys, vec![0.1, 0.2]);

        let w = Winding {
            facet_spacing: 0.03,
            ..w
        };
        let ys: Vec<f64> = render_winding(&w).unwrap().iter().map(|s| s.position.y).collect();
        assert_eq!(ys.len(), 5);
        assert_eq!(*ys.last().unwrap(), 0.2);
        assert!((ys[3] - 0.19).abs() < 1e-15);
    }

    #[test]
    fn render_reference_face() {
        let w = Winding {
            y_low: 0.23,
            y_high: 0.38,
            z_front: 0.45,
            facet_spacing: 0.005,
        };
        let s = render_winding(&w).unwrap();
        assert_eq!(s.len(), 31);
        let span = s.last().unwrap().position.y - s[0].position.y;
        assert!((span - 0.150).abs() < 1e-12);
        assert!(s.iter().all(|s| s.position.z == 0.45 && s.reflectivity == 1.0));
        assert!(s.windows(2).all(|p| p[1].position.y > p[0].position.y));
    }

    #[test]
    fn render_rejects_bad_inputs() {
        let w = Winding {
            y_low: 0.3,
            y_high: 0.2,
            z_front: 0.45,
            facet_spacing: 0.01,
        };
        assert!(matches!(render_winding(&w), Err(Error::Validation(_))));
        let w = Winding {
            y_low: 0.1,
            facet_spacing: 0.0,
            ..w
        };
        assert!(matches!(render_winding(&w), Err(Error::Validation(_))));
    }

    #[test]
    fn boresight_peak_at_two_z_over_c() {
        let g = geom();
        let k = 7;
        let z = 0.45;
        let b = synthesize(&Scene::point(g.antenna_y(k), z), &g, &SynthOptions::clean(ricker())).unwrap();
        let expected = ((2.0 * z / g.c - g.t0) / g.dt).round() as usize;
        assert_eq!(argmax_abs(&b.traces[k].samples), expected);
    }

    #[test]
    fn empty_scene_gives_zeros() {
        let g = geom();
        let b = synthesize(&Scene::default(), &g, &SynthOptions::default()).unwrap();
        assert_eq!(b, BScan::zeros(g));
    }

    #[test]
    fn superposition_of_two_scatterers() {
        let g = geom();
        let opts = SynthOptions {
            spreading: Spreading::InverseR2,
            ..SynthOptions::default()
        };
        let a = Scene::point(0.21, 0.44);
        let b = Scene {
            scatterers: vec![Scatterer::new(0.35, 0.52, -0.7)],
            winding: None,
        };
        let both = Scene {
            scatterers: vec![a.scatterers[0], b.scatterers[0]],
            winding: None,
        };
        let sum = synthesize(&a, &g, &opts).unwrap().add(&synthesize(&b, &g, &opts).unwrap()).unwrap();
        let joint = synthesize(&both, &g, &opts).unwrap();
        let scale = joint.max_abs();
        for (x, y) in joint.traces.iter().zip(&sum.traces) {
            for (u, v) in x.samples.iter().zip(&y.samples) {
                assert!((u - v).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn isolated_peak_within_one_sample() {
        let g = ScanGeometry::new(0.03, 21, 3e8, 7e-12, 800, 1e-9).unwrap();
        let p = Point::new(0.173, 0.467);
        let b = synthesize(&Scene::point(p.y, p.z), &g, &SynthOptions::clean(ricker())).unwrap();
        for k in 0..g.k {
            let expected = (two_way_delay(p, k, &g).unwrap() - g.t0) / g.dt;
            let got = argmax_abs(&b.traces[k].samples) as f64;
            assert!((got - expected).abs() <= 1.0, "k={k}: {got} vs {expected}");
        }
    }

    #[test]
    fn seeded_noise_is_deterministic() {
        let g = geom();
        let opts = SynthOptions {
            noise_rms: 0.05,
            seed: 42,
            ..SynthOptions::default()
        };
        let scene = Scene::point(0.3, 0.45);
        let a = synthesize(&scene, &g, &opts).unwrap();
        let b = synthesize(&scene, &g, &opts).unwrap();
        assert_eq!(a, b);
        let c = synthesize(&scene, &g, &SynthOptions { seed: 43, ..opts }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noise_rms_matches_request() {
        let g = ScanGeometry::new(0.03, 8, 3e8, 1e-11, 4096, 0.0).unwrap();
        let opts = SynthOptions {
            noise_rms: 0.2,
            seed: 7,
            ..SynthOptions::default()
        };
        let b = synthesize(&Scene::default(), &g, &opts).unwrap();
        let n = (g.k * g.n_samples) as f64;
        let ms: f64 = b.traces.iter().flat_map(|t| &t.samples).map(|v| v * v).sum::<f64>() / n;
        assert!((ms.sqrt() - 0.2).abs() < 0.01, "{}", ms.sqrt());
    }

    #[test]
    fn rejects_scatterer_behind_line() {
        let g = geom();
        let err = synthesize(&Scene::point(0.1, 0.0), &g, &SynthOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let err = synthesize(&Scene::point(0.1, -0.2), &g, &SynthOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let neg = SynthOptions {
            noise_rms: -1.0,
            ..SynthOptions::default()
        };
        assert!(synthesize(&Scene::point(0.1, 0.3), &g, &neg).is_err());
    }

    #[test]
    fn bscan_validation() {
        let g = geom();
        let mut b = BScan::zeros(g);
        assert!(b.validate().is_ok());
        b.traces[3].samples.pop();
        assert!(b.validate().is_err());
        let mut b = BScan::zeros(g);
        b.traces.pop();
        assert!(b.validate().is_err());
    }
}
