//! Run configuration.
//!
//! Two encodings map onto one [`RunConfig`]:
//!
//! * TOML with unit-suffixed keys (`_mm`, `_ns`, `_ghz`) for hand editing;
//! * JSON in plain SI units, which is what the CLI echoes next to its
//!   outputs. Feeding the echo back in reproduces the run bit for bit.
//!
//! Files ending in `.json` are read as the SI form, anything else as TOML.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analyze::{Aggregation, DEFAULT_ALPHA};
use crate::error::{Error, Result};
use crate::gate::GateRegion;
use crate::geometry::{GridSpec, Point, ScanGeometry, SPEED_OF_LIGHT};
use crate::migrate::Interpolation;
use crate::pulse::{Pulse, PulseKind};
use crate::synth::{Scatterer, Scene, Spreading, SynthOptions, Winding};

const MM_PER_M: f64 = 1e3;
const NS_PER_S: f64 = 1e9;
const GHZ: f64 = 1e9;

/// Where a B-scan comes from: synthesized from a scene, or read from a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Scene(Scene),
    Input(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub alpha: f64,
    pub aggregation: Aggregation,
    /// Z range `(z_lo, z_hi)` to aggregate over; `None` picks a band around
    /// the brightest column.
    pub band: Option<(f64, f64)>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            alpha: DEFAULT_ALPHA,
            aggregation: Aggregation::Max,
            band: None,
        }
    }
}

/// Fully resolved configuration, SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub geometry: ScanGeometry,
    pub grid: GridSpec,
    pub synthesis: SynthOptions,
    pub source: Source,
    /// Second acquisition for `pipeline`, compared against `source`.
    #[serde(default)]
    pub test: Option<Source>,
    #[serde(default)]
    pub gate: Option<GateRegion>,
    pub interpolation: Interpolation,
    pub analysis: AnalysisOptions,
    /// Known displacement (m), same sign convention as the estimate.
    #[serde(default)]
    pub actual_displacement: Option<f64>,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// The measurement setup of the reference simulation: 21 measuring points
    /// 30 mm apart and a 150 mm winding face 450 mm from the measuring line.
    pub fn reference() -> Self {
        let geometry = ScanGeometry {
            d_m: 0.03,
            k: 21,
            c: SPEED_OF_LIGHT,
            dt: 1e-11,
            n_samples: 512,
            t0: 0.0,
        };
        let grid = GridSpec {
            d0: 0.005,
            m: 121,
            n: 41,
            y_origin: 0.0,
            z_origin: 0.35,
        };
        let synthesis = SynthOptions::default();
        let winding = Winding {
            y_low: 0.23,
            y_high: 0.38,
            z_front: 0.45,
            facet_spacing: 0.005,
        };
        let gate = GateRegion {
            y_min: 0.15,
            y_max: 0.45,
            z_min: 0.40,
            z_max: 0.50,
            guard_time: 2.0 * synthesis.pulse.duration(),
            taper: 0.0,
        };
        RunConfig {
            geometry,
            grid,
            synthesis,
            source: Source::Scene(Scene::with_winding(winding)),
            test: None,
            gate: Some(gate),
            interpolation: Interpolation::Linear,
            analysis: AnalysisOptions::default(),
            actual_displacement: None,
            output_dir: PathBuf::from("out"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.grid.validate()?;
        self.synthesis.pulse.validate()?;
        if !(self.synthesis.noise_rms >= 0.0) {
            return Err(Error::Validation("noise_rms must be >= 0".into()));
        }
        if let Some(g) = &self.gate {
            g.validate()?;
        }
        let a = &self.analysis;
        if !(a.alpha > 0.0 && a.alpha < 1.0) {
            return Err(Error::Validation(format!("alpha must lie in (0, 1), got {}", a.alpha)));
        }
        for src in std::iter::once(&self.source).chain(self.test.as_ref()) {
            match src {
                Source::Scene(scene) => {
                    scene.flatten()?;
                }
                Source::Input(path) => {
                    if !path.is_file() {
                        return Err(Error::io(
                            path,
                            std::io::Error::new(std::io::ErrorKind::NotFound, "input B-scan not found"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Load a config file; see the module docs for the accepted encodings.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cfg = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str::<RunConfig>(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))?
        } else {
            let file: ConfigFile = toml::from_str(&text).map_err(|e| {
                let line = e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(1);
                Error::parse(path, line, e.message().to_string())
            })?;
            file.resolve()?
        };
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |src: &mut Source| {
            if let Source::Input(p) = src {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        fix(&mut self.source);
        if let Some(t) = self.test.as_mut() {
            fix(t);
        }
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

// ---------------------------------------------------------------------------
// TOML form
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    geometry: GeometryFile,
    grid: GridFile,
    #[serde(default)]
    pulse: Option<PulseFile>,
    #[serde(default)]
    synthesis: SynthesisFile,
    #[serde(default)]
    scene: Option<SceneFile>,
    #[serde(default)]
    input: Option<PathBuf>,
    #[serde(default)]
    test_scene: Option<SceneFile>,
    #[serde(default)]
    test_input: Option<PathBuf>,
    #[serde(default)]
    gate: Option<GateFile>,
    #[serde(default)]
    migration: MigrationFile,
    #[serde(default)]
    analysis: AnalysisFile,
    #[serde(default)]
    actual_displacement_mm: Option<f64>,
    #[serde(default = "default_output_dir")]
    output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryFile {
    d_m_mm: f64,
    k: usize,
    c_m_per_s: f64,
    dt_ns: f64,
    n_samples: usize,
    #[serde(default)]
    t0_ns: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    d0_mm: f64,
    m: usize,
    n: usize,
    #[serde(default)]
    y_origin_mm: f64,
    z_origin_mm: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PulseFile {
    kind: PulseKind,
    center_frequency_ghz: f64,
    #[serde(default = "one")]
    amplitude: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthesisFile {
    #[serde(default)]
    spreading: Spreading,
    #[serde(default)]
    noise_rms: f64,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScattererFile {
    y_mm: f64,
    z_mm: f64,
    #[serde(default = "one")]
    reflectivity: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WindingFile {
    y_low_mm: f64,
    y_high_mm: f64,
    z_front_mm: f64,
    #[serde(default = "default_facet_mm")]
    facet_spacing_mm: f64,
}

fn default_facet_mm() -> f64 {
    5.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    #[serde(default)]
    scatterers: Vec<ScattererFile>,
    #[serde(default)]
    winding: Option<WindingFile>,
}

impl SceneFile {
    fn resolve(&self) -> Scene {
        Scene {
            scatterers: self
                .scatterers
                .iter()
                .map(|s| Scatterer {
                    position: Point::new(s.y_mm / MM_PER_M, s.z_mm / MM_PER_M),
                    reflectivity: s.reflectivity,
                })
                .collect(),
            winding: self.winding.as_ref().map(|w| Winding {
                y_low: w.y_low_mm / MM_PER_M,
                y_high: w.y_high_mm / MM_PER_M,
                z_front: w.z_front_mm / MM_PER_M,
                facet_spacing: w.facet_spacing_mm / MM_PER_M,
            }),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateFile {
    y_min_mm: f64,
    y_max_mm: f64,
    z_min_mm: f64,
    z_max_mm: f64,
    /// Defaults to two pulse durations.
    #[serde(default)]
    guard_ns: Option<f64>,
    #[serde(default)]
    taper_ns: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MigrationFile {
    #[serde(default)]
    interpolation: Interpolation,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnalysisFile {
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default)]
    aggregation: Aggregation,
    #[serde(default)]
    band_z_min_mm: Option<f64>,
    #[serde(default)]
    band_z_max_mm: Option<f64>,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

impl Default for AnalysisFile {
    fn default() -> Self {
        AnalysisFile {
            alpha: DEFAULT_ALPHA,
            aggregation: Aggregation::Max,
            band_z_min_mm: None,
            band_z_max_mm: None,
        }
    }
}

fn pick_source(scene: Option<&SceneFile>, input: Option<&PathBuf>, what: &str) -> Result<Option<Source>> {
    match (scene, input) {
        (Some(_), Some(_)) => Err(Error::Validation(format!(
            "{what}: give either a scene or an input B-scan, not both"
        ))),
        (Some(s), None) => Ok(Some(Source::Scene(s.resolve()))),
        (None, Some(p)) => Ok(Some(Source::Input(p.clone()))),
        (None, None) => Ok(None),
    }
}

impl ConfigFile {
    fn resolve(self) -> Result<RunConfig> {
        let g = &self.geometry;
        let geometry = ScanGeometry {
            d_m: g.d_m_mm / MM_PER_M,
            k: g.k,
            c: g.c_m_per_s,
            dt: g.dt_ns / NS_PER_S,
            n_samples: g.n_samples,
            t0: g.t0_ns / NS_PER_S,
        };
        let grid = GridSpec {
            d0: self.grid.d0_mm / MM_PER_M,
            m: self.grid.m,
            n: self.grid.n,
            y_origin: self.grid.y_origin_mm / MM_PER_M,
            z_origin: self.grid.z_origin_mm / MM_PER_M,
        };
        let pulse = match &self.pulse {
            Some(p) => Pulse {
                kind: p.kind,
                center_frequency: p.center_frequency_ghz * GHZ,
                amplitude: p.amplitude,
            },
            None => Pulse::default(),
        };
        let synthesis = SynthOptions {
            pulse,
            spreading: self.synthesis.spreading,
            noise_rms: self.synthesis.noise_rms,
            seed: self.synthesis.seed,
        };
        let source = pick_source(self.scene.as_ref(), self.input.as_ref(), "source")?
            .ok_or_else(|| Error::Validation("config needs a [scene] table or an input path".into()))?;
        let test = pick_source(self.test_scene.as_ref(), self.test_input.as_ref(), "test")?;
        let gate = self.gate.as_ref().map(|r| GateRegion {
            y_min: r.y_min_mm / MM_PER_M,
            y_max: r.y_max_mm / MM_PER_M,
            z_min: r.z_min_mm / MM_PER_M,
            z_max: r.z_max_mm / MM_PER_M,
            guard_time: r.guard_ns.map_or(2.0 * pulse.duration(), |v| v / NS_PER_S),
            taper: r.taper_ns / NS_PER_S,
        });
        let a = &self.analysis;
        let band = match (a.band_z_min_mm, a.band_z_max_mm) {
            (Some(lo), Some(hi)) => Some((lo / MM_PER_M, hi / MM_PER_M)),
            (None, None) => None,
            _ => {
                return Err(Error::Validation(
                    "analysis band needs both band_z_min_mm and band_z_max_mm".into(),
                ))
            }
        };
        Ok(RunConfig {
            geometry,
            grid,
            synthesis,
            source,
            test,
            gate,
            interpolation: self.migration.interpolation,
            analysis: AnalysisOptions {
                alpha: a.alpha,
                aggregation: a.aggregation,
                band,
            },
            actual_displacement: self.actual_displacement_mm.map(|v| v / MM_PER_M),
            output_dir: self.output_dir,
        })
    }
}
