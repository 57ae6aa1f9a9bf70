//! Command-line front end: `synthesize`, `image`, `compare`, `pipeline`.
//!
//! Lengths on the command line are millimeters; everything else flows
//! through [`RunConfig`].

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analyze::{estimate_displacement, read_edges, DisplacementReport, Edges};
use crate::bscan_file::{read_bscan, write_bscan};
use crate::config::{AnalysisOptions, RunConfig, Source};
use crate::error::{Error, Result};
use crate::gate::{apply_gate, GateWarning};
use crate::image_file::{read_csv, write_csv, write_pgm};
use crate::migrate::{migrate, ImageGrid, Interpolation};
use crate::synth::{synthesize, BScan, SynthOptions};

pub const BSCAN_FILE: &str = "bscan.jsonl";
pub const BSCAN_SIDECAR: &str = "bscan.config.json";
pub const IMAGE_CSV: &str = "image.csv";
pub const IMAGE_PGM: &str = "image.pgm";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Parser)]
#[command(name = "winding-radar", version, about = "UWB radar imaging of transformer windings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a B-scan from the configured scene.
    Synthesize(RunArgs),
    /// Gate and migrate a B-scan into an image (CSV + PGM).
    Image(RunArgs),
    /// Compare a baseline and a test image and report the axial displacement.
    Compare(CompareArgs),
    /// Synthesize, image and compare the configured baseline and test scenes.
    Pipeline(RunArgs),
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// Noise seed for synthesis.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub interp: Option<Interpolation>,
    /// Edge threshold as a fraction of the profile peak.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Known displacement in mm (baseline minus test).
    #[arg(long = "actual-mm")]
    pub actual_mm: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run configuration (.toml in mm/ns, or an echoed .json in SI units).
    #[arg(long)]
    pub config: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Baseline image (.csv) or run configuration.
    pub baseline: PathBuf,
    /// Test image (.csv) or run configuration.
    pub test: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(seed) = self.seed {
            cfg.synthesis.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(interp) = self.interp {
            cfg.interpolation = interp;
        }
        if let Some(alpha) = self.alpha {
            check_alpha(alpha)?;
            cfg.analysis.alpha = alpha;
        }
        if let Some(mm) = self.actual_mm {
            cfg.actual_displacement = Some(mm / 1e3);
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!("--alpha must lie in (0, 1), got {alpha}")))
    }
}

fn load_config(path: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path)?;
    overrides.apply(&mut cfg)?;
    Ok(cfg)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Produce the B-scan for a source, with synthesis provenance when synthesized.
pub fn acquire(cfg: &RunConfig, source: &Source) -> Result<(BScan, Option<SynthOptions>)> {
    match source {
        Source::Scene(scene) => Ok((synthesize(scene, &cfg.geometry, &cfg.synthesis)?, Some(cfg.synthesis))),
        Source::Input(path) => Ok((read_bscan(path)?.0, None)),
    }
}

/// Gate (when configured) and migrate.
pub fn form_image(cfg: &RunConfig, b: &BScan) -> Result<(ImageGrid, Vec<GateWarning>)> {
    let (gated, warnings) = match &cfg.gate {
        Some(region) => {
            let g = apply_gate(b, region)?;
            (g.bscan, g.warnings)
        }
        None => (b.clone(), Vec::new()),
    };
    Ok((migrate(&gated, &cfg.grid, cfg.interpolation)?, warnings))
}

fn report_warnings(warnings: &[GateWarning]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

/// Write the B-scan and the resolved-config echo into `cfg.output_dir`.
pub fn cmd_synthesize(cfg: &RunConfig) -> Result<PathBuf> {
    if let Source::Input(_) = cfg.source {
        return Err(Error::Validation("synthesize needs a [scene] in the config".into()));
    }
    let (b, provenance) = acquire(cfg, &cfg.source)?;
    write_outputs_bscan(cfg, &cfg.output_dir, &b, provenance.as_ref())
}

fn write_outputs_bscan(cfg: &RunConfig, dir: &Path, b: &BScan, provenance: Option<&SynthOptions>) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let path = dir.join(BSCAN_FILE);
    write_bscan(&path, b, provenance)?;
    let sidecar = dir.join(BSCAN_SIDECAR);
    fs::write(&sidecar, cfg.to_json()).map_err(|e| Error::io(&sidecar, e))?;
    Ok(path)
}

fn write_outputs_image(dir: &Path, img: &ImageGrid) -> Result<()> {
    ensure_dir(dir)?;
    write_csv(&dir.join(IMAGE_CSV), img)?;
    write_pgm(&dir.join(IMAGE_PGM), img)
}

/// Acquire, gate and migrate; write the image CSV and PGM.
pub fn cmd_image(cfg: &RunConfig) -> Result<ImageGrid> {
    let (b, _) = acquire(cfg, &cfg.source)?;
    let (img, warnings) = form_image(cfg, &b)?;
    report_warnings(&warnings);
    write_outputs_image(&cfg.output_dir, &img)?;
    Ok(img)
}

/// An image to compare, with the analysis options that go with it.
fn image_for_compare(path: &Path, overrides: &Overrides) -> Result<(ImageGrid, AnalysisOptions, Option<f64>)> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let mut opts = AnalysisOptions::default();
        if let Some(alpha) = overrides.alpha {
            check_alpha(alpha)?;
            opts.alpha = alpha;
        }
        Ok((read_csv(path)?, opts, None))
    } else {
        let cfg = load_config(path, overrides)?;
        let (b, _) = acquire(&cfg, &cfg.source)?;
        let (img, warnings) = form_image(&cfg, &b)?;
        report_warnings(&warnings);
        Ok((img, cfg.analysis, cfg.actual_displacement))
    }
}

fn edges_of(img: &ImageGrid, opts: &AnalysisOptions) -> Result<Edges> {
    read_edges(img, opts.aggregation, opts.band, opts.alpha)
}

/// Compare two images; both must share a grid.
pub fn compare_images(
    baseline: &ImageGrid,
    test: &ImageGrid,
    opts: &AnalysisOptions,
    actual: Option<f64>,
) -> Result<DisplacementReport> {
    if baseline.grid != test.grid {
        return Err(Error::Validation(format!(
            "baseline and test images use different grids: {:?} vs {:?}",
            baseline.grid, test.grid
        )));
    }
    estimate_displacement(edges_of(baseline, opts)?, edges_of(test, opts)?, actual)
}

pub fn cmd_compare(args: &CompareArgs) -> Result<DisplacementReport> {
    let (base_img, opts, cfg_actual) = image_for_compare(&args.baseline, &args.overrides)?;
    let (test_img, _, _) = image_for_compare(&args.test, &args.overrides)?;
    let actual = args.overrides.actual_mm.map(|mm| mm / 1e3).or(cfg_actual);
    let report = compare_images(&base_img, &test_img, &opts, actual)?;
    emit_report(&report, args.overrides.out.as_deref())?;
    Ok(report)
}

/// Baseline and test through synthesis, imaging and comparison.
pub fn cmd_pipeline(cfg: &RunConfig) -> Result<DisplacementReport> {
    let test_source = cfg
        .test
        .as_ref()
        .ok_or_else(|| Error::Validation("pipeline needs a [test_scene] table or test_input path".into()))?;
    let mut images = Vec::with_capacity(2);
    for (name, source) in [("baseline", &cfg.source), ("test", test_source)] {
        let dir = cfg.output_dir.join(name);
        let (b, provenance) = acquire(cfg, source)?;
        if provenance.is_some() {
            write_outputs_bscan(cfg, &dir, &b, provenance.as_ref())?;
        }
        let (img, warnings) = form_image(cfg, &b)?;
        report_warnings(&warnings);
        write_outputs_image(&dir, &img)?;
        images.push(img);
    }
    let report = compare_images(&images[0], &images[1], &cfg.analysis, cfg.actual_displacement)?;
    emit_report(&report, Some(&cfg.output_dir))?;
    Ok(report)
}

pub fn report_json(report: &DisplacementReport) -> String {
    let value = serde_json::json!({
        "units": "m",
        "baseline": report.baseline,
        "test": report.test,
        "estimated_displacement": report.estimated_displacement,
        "actual_displacement": report.actual_displacement,
        "relative_error": report.relative_error,
    });
    serde_json::to_string_pretty(&value).expect("report serializes")
}

/// Human-readable table laid out like the usual experiment summary, in mm.
pub fn report_table(report: &DisplacementReport) -> String {
    let mm = |v: f64| format!("{:.3}", v * 1e3);
    let dash = || "-".to_string();
    let rows: Vec<[String; 5]> = vec![
        row("Lower edge ordinate (mm)", "Y_1", "measured", mm(report.baseline.y1), mm(report.test.y1)),
        row("Upper edge ordinate (mm)", "Y_2", "measured", mm(report.baseline.y2), mm(report.test.y2)),
        row("Center ordinate (mm)", "Y_C", "estimated", mm(report.baseline.y_c), mm(report.test.y_c)),
        row("Axial displacement (mm)", "AD", "estimated", dash(), mm(report.estimated_displacement)),
        row(
            "Axial displacement (mm)",
            "AD",
            "actual value",
            dash(),
            report.actual_displacement.map_or_else(dash, mm),
        ),
        row(
            "Estimation error",
            "-",
            "-",
            dash(),
            report
                .relative_error
                .map_or_else(dash, |e| format!("{:.2}%", e * 100.0)),
        ),
    ];
    let mut out = format!(
        "{:<26} {:<5} {:<13} {:>12} {:>12}\n",
        "Parameter", "Sym.", "Descript.", "Baseline", "Test"
    );
    for r in rows {
        out.push_str(&format!("{:<26} {:<5} {:<13} {:>12} {:>12}\n", r[0], r[1], r[2], r[3], r[4]));
    }
    out
}

fn row(a: &str, b: &str, c: &str, d: String, e: String) -> [String; 5] {
    [a.into(), b.into(), c.into(), d, e]
}

fn emit_report(report: &DisplacementReport, out: Option<&Path>) -> Result<()> {
    print!("{}", report_table(report));
    let json = report_json(report);
    match out {
        Some(dir) => {
            ensure_dir(dir)?;
            let path = dir.join(REPORT_FILE);
            fs::write(&path, json).map_err(|e| Error::io(&path, e))
        }
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synthesize(args) => {
            let cfg = load_config(&args.config, &args.overrides)?;
            let path = cmd_synthesize(&cfg)?;
            println!("wrote {}", path.display());
        }
        Command::Image(args) => {
            let cfg = load_config(&args.config, &args.overrides)?;
            cmd_image(&cfg)?;
            println!("wrote {}", cfg.output_dir.join(IMAGE_CSV).display());
        }
        Command::Compare(args) => {
            cmd_compare(&args)?;
        }
        Command::Pipeline(args) => {
            let cfg = load_config(&args.config, &args.overrides)?;
            cmd_pipeline(&cfg)?;
        }
    }
    Ok(())
}
