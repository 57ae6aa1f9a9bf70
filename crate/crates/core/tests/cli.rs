use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_winding-radar");

const GEOMETRY: &str = r#"
[geometry]
d_m_mm = 30
k = 21
c_m_per_s = 299792458
dt_ns = 0.01
n_samples = 512

[grid]
d0_mm = 5
m = 121
n = 41
y_origin_mm = 0
z_origin_mm = 350
"#;

const WINDING: &str = r#"
[scene.winding]
y_low_mm = 230
y_high_mm = 380
z_front_mm = 450
"#;

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn count_traces(bscan: &Path) -> usize {
    fs::read_to_string(bscan).unwrap().lines().filter(|l| !l.trim().is_empty()).count() - 1
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn synthesize_writes_one_record_per_measuring_point() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "a.toml", &format!("output_dir = \"a\"\n{GEOMETRY}{WINDING}"));
    let o = run(&["synthesize", "--config", p(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(count_traces(&tmp.path().join("a/bscan.jsonl")), 21);
    assert!(tmp.path().join("a/bscan.config.json").exists());

    let two = GEOMETRY.replace("k = 21", "k = 2");
    let cfg = write_config(tmp.path(), "b.toml", &format!("output_dir = \"b\"\n{two}{WINDING}"));
    let o = run(&["synthesize", "--config", p(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(count_traces(&tmp.path().join("b/bscan.jsonl")), 2);
}

#[test]
fn seeded_noise_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let body = format!("{GEOMETRY}{WINDING}\n[synthesis]\nnoise_rms = 0.01\nseed = 7\n");
    let cfg = write_config(tmp.path(), "n.toml", &body);
    let mut outputs = Vec::new();
    for name in ["r1", "r2"] {
        let out = tmp.path().join(name);
        let o = run(&["synthesize", "--config", p(&cfg), "--out", p(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(fs::read(out.join("bscan.jsonl")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);

    let out = tmp.path().join("r3");
    let o = run(&["synthesize", "--config", p(&cfg), "--out", p(&out), "--seed", "8"]);
    assert!(o.status.success());
    assert_ne!(fs::read(out.join("bscan.jsonl")).unwrap(), outputs[0]);
}

#[test]
fn zero_bscan_gives_zero_image() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "z.toml", &format!("output_dir = \"z\"\n{GEOMETRY}\n[scene]\n"));
    assert!(run(&["synthesize", "--config", p(&cfg)]).status.success());

    let img_cfg = write_config(
        tmp.path(),
        "zi.toml",
        &format!("output_dir = \"zi\"\ninput = \"z/bscan.jsonl\"\n{GEOMETRY}"),
    );
    let o = run(&["image", "--config", p(&img_cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("zi/image.csv")).unwrap();
    assert!(csv.lines().skip(1).flat_map(|l| l.split(',')).all(|v| v.parse::<f64>().unwrap() == 0.0));
    let pgm = fs::read(tmp.path().join("zi/image.pgm")).unwrap();
    let header = b"P5\n41 121\n255\n";
    assert_eq!(&pgm[..header.len()], header);
    assert!(pgm[header.len()..].iter().all(|&b| b == 0));
}

#[test]
fn point_scatterer_is_brightest_pixel() {
    let tmp = TempDir::new().unwrap();
    let body = format!(
        "output_dir = \"pt\"\n{GEOMETRY}\n[pulse]\nkind = \"ricker\"\ncenter_frequency_ghz = 3\n\n[synthesis]\nspreading = \"none\"\n\n\
         [[scene.scatterers]]\ny_mm = 300\nz_mm = 450\nreflectivity = 1\n"
    );
    let cfg = write_config(tmp.path(), "pt.toml", &body);
    let o = run(&["image", "--config", p(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let pgm = fs::read(tmp.path().join("pt/image.pgm")).unwrap();
    let px = &pgm[b"P5\n41 121\n255\n".len()..];
    let brightest = px.iter().enumerate().max_by_key(|(idx, v)| (**v, std::cmp::Reverse(*idx))).unwrap().0;
    assert_eq!((brightest / 41, brightest % 41), (60, 20));
    assert_eq!(px[brightest], 255);
}

#[test]
fn missing_input_is_an_io_error_naming_the_path() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "m.toml", &format!("input = \"nowhere.jsonl\"\n{GEOMETRY}"));
    let o = run(&["image", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("nowhere.jsonl"), "{}", stderr(&o));

    let o = run(&["image", "--config", p(&tmp.path().join("absent.toml"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("absent.toml"));
}

#[test]
fn malformed_bscan_reports_the_record() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "s.toml", &format!("output_dir = \"s\"\n{GEOMETRY}{WINDING}"));
    assert!(run(&["synthesize", "--config", p(&cfg)]).status.success());
    let path = tmp.path().join("s/bscan.jsonl");
    let mut lines: Vec<String> = fs::read_to_string(&path).unwrap().lines().map(String::from).collect();
    lines[3] = "{\"k\": 2, \"data\": \"not base64!\"}".into();
    fs::write(&path, lines.join("\n")).unwrap();

    let img_cfg = write_config(tmp.path(), "si.toml", &format!("input = \"s/bscan.jsonl\"\n{GEOMETRY}"));
    let o = run(&["image", "--config", p(&img_cfg)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("bscan.jsonl"));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn bad_parameters_exit_with_validation_code() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "v.toml",
        &format!("{}{WINDING}", GEOMETRY.replace("d_m_mm = 30", "d_m_mm = -30")),
    );
    assert_eq!(run(&["synthesize", "--config", p(&cfg)]).status.code(), Some(2));
    let cfg = write_config(tmp.path(), "u.toml", &format!("{GEOMETRY}{WINDING}\n[extra]\nx = 1\n"));
    assert_eq!(run(&["synthesize", "--config", p(&cfg)]).status.code(), Some(2));
}

fn image_csv(tmp: &Path, name: &str, body: &str) -> PathBuf {
    let cfg = write_config(tmp, &format!("{name}.toml"), &format!("output_dir = \"{name}\"\n{body}"));
    let o = run(&["image", "--config", p(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    tmp.join(name).join("image.csv")
}

#[test]
fn compare_exit_codes() {
    let tmp = TempDir::new().unwrap();
    let base = image_csv(tmp.path(), "base", &format!("{GEOMETRY}{WINDING}"));

    let o = run(&["compare", p(&base), p(&base)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_slice(
        &o.stdout[String::from_utf8_lossy(&o.stdout).find('{').unwrap()..],
    )
    .unwrap();
    assert_eq!(json["estimated_displacement"].as_f64(), Some(0.0));

    let coarse = image_csv(tmp.path(), "coarse", &format!("{}{WINDING}", GEOMETRY.replace("m = 121", "m = 61")));
    assert_eq!(run(&["compare", p(&base), p(&coarse)]).status.code(), Some(2));

    let empty = image_csv(tmp.path(), "empty", &format!("{GEOMETRY}\n[scene]\n"));
    assert_eq!(run(&["compare", p(&base), p(&empty)]).status.code(), Some(4));
}

#[test]
fn pipeline_report_holds_center_and_displacement() {
    let tmp = TempDir::new().unwrap();
    let body = format!(
        "output_dir = \"out\"\nactual_displacement_mm = 20\n{GEOMETRY}{WINDING}\n\
         [test_scene.winding]\ny_low_mm = 210\ny_high_mm = 360\nz_front_mm = 450\n\n\
         [gate]\ny_min_mm = 150\ny_max_mm = 450\nz_min_mm = 400\nz_max_mm = 500\n"
    );
    let cfg = write_config(tmp.path(), "pl.toml", &body);
    let o = run(&["pipeline", "--config", p(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("Center ordinate"));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/report.json")).unwrap()).unwrap();
    for side in ["baseline", "test"] {
        let e = &report[side];
        let (y1, y2, yc) = (e["y1"].as_f64().unwrap(), e["y2"].as_f64().unwrap(), e["y_c"].as_f64().unwrap());
        assert_eq!(yc, (y1 + y2) / 2.0);
    }
    let est = report["estimated_displacement"].as_f64().unwrap();
    assert!((est - 0.020).abs() <= 0.005, "estimate {est}");
    for side in ["baseline", "test"] {
        for f in ["bscan.jsonl", "bscan.config.json", "image.csv", "image.pgm"] {
            assert!(tmp.path().join("out").join(side).join(f).exists(), "{side}/{f}");
        }
    }
}

#[test]
fn sidecar_reruns_bit_identically() {
    let tmp = TempDir::new().unwrap();
    let body = format!("output_dir = \"one\"\n{GEOMETRY}{WINDING}\n[synthesis]\nnoise_rms = 0.002\nseed = 3\n");
    let cfg = write_config(tmp.path(), "e.toml", &body);
    assert!(run(&["synthesize", "--config", p(&cfg)]).status.success());
    let sidecar = tmp.path().join("one/bscan.config.json");
    let again = tmp.path().join("two");
    let o = run(&["synthesize", "--config", p(&sidecar), "--out", p(&again)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(tmp.path().join("one/bscan.jsonl")).unwrap(),
        fs::read(again.join("bscan.jsonl")).unwrap()
    );
}
