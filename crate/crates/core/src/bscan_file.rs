//! B-scan file format.
//!
//! Line-oriented JSON: line 1 is a self-describing header, followed by one
//! record per measuring point in `k` order. Samples are little-endian f64
//! encoded as base64 (`"data"`), or a plain JSON number array (`"samples"`)
//! for hand-written files. Both forms round-trip exactly.
//!
//! ```text
//! {"format":"winding-radar/bscan","version":1,"units":{"length":"m","time":"s"},"geometry":{...},...}
//! {"k":0,"data":"AAAAAAAA..."}
//! {"k":1,"data":"..."}
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ScanGeometry;
use crate::pulse::Pulse;
use crate::synth::{BScan, Spreading, SynthOptions, Trace};

pub const FORMAT_TAG: &str = "winding-radar/bscan";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub length: String,
    pub time: String,
}

impl Default for Units {
    fn default() -> Self {
        Units {
            length: "m".into(),
            time: "s".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BScanHeader {
    pub format: String,
    pub version: u32,
    pub units: Units,
    pub geometry: ScanGeometry,
    /// Synthesis provenance; absent for measured data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse: Option<Pulse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spreading: Option<Spreading>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_rms: Option<f64>,
}

impl BScanHeader {
    pub fn new(geometry: ScanGeometry, provenance: Option<&SynthOptions>) -> Self {
        BScanHeader {
            format: FORMAT_TAG.into(),
            version: FORMAT_VERSION,
            units: Units::default(),
            geometry,
            seed: provenance.map(|o| o.seed),
            pulse: provenance.map(|o| o.pulse),
            spreading: provenance.map(|o| o.spreading),
            noise_rms: provenance.map(|o| o.noise_rms),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceRecord {
    k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    data: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    samples: Option<Vec<f64>>,
}

fn encode_samples(samples: &[f64]) -> String {
    let mut bytes = Vec::with_capacity(samples.len() * 8);
    for v in samples {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    BASE64.encode(bytes)
}

fn decode_samples(data: &str) -> std::result::Result<Vec<f64>, String> {
    let bytes = BASE64.decode(data.trim()).map_err(|e| format!("invalid base64: {e}"))?;
    if bytes.len() % 8 != 0 {
        return Err(format!("sample payload of {} bytes is not a whole number of f64", bytes.len()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// Serialize a B-scan to the file format.
pub fn encode(b: &BScan, provenance: Option<&SynthOptions>) -> Result<String> {
    b.validate()?;
    let header = BScanHeader::new(b.geometry, provenance);
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for tr in &b.traces {
        let rec = TraceRecord {
            k: tr.k,
            data: Some(encode_samples(&tr.samples)),
            samples: None,
        };
        out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        out.push('\n');
    }
    Ok(out)
}

/// Parse the file format. `origin` names the source in error messages.
pub fn decode(text: &str, origin: &Path) -> Result<(BScan, BScanHeader)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::parse(origin, 1, "empty file, expected a B-scan header"))?;
    let header: BScanHeader =
        serde_json::from_str(first).map_err(|e| Error::parse(origin, 1, format!("bad header: {e}")))?;
    if header.format != FORMAT_TAG {
        return Err(Error::parse(origin, 1, format!("unknown format tag {:?}", header.format)));
    }
    if header.version != FORMAT_VERSION {
        return Err(Error::parse(origin, 1, format!("unsupported version {}", header.version)));
    }
    if header.units != Units::default() {
        return Err(Error::parse(origin, 1, "header units must be meters and seconds"));
    }
    header
        .geometry
        .validate()
        .map_err(|e| Error::parse(origin, 1, e.to_string()))?;
    let g = header.geometry;

    let mut traces = Vec::with_capacity(g.k);
    for (idx, line) in lines {
        let lineno = idx + 1;
        let rec: TraceRecord =
            serde_json::from_str(line).map_err(|e| Error::parse(origin, lineno, format!("bad trace record: {e}")))?;
        if rec.k != traces.len() {
            return Err(Error::parse(
                origin,
                lineno,
                format!("expected trace k = {}, found k = {}", traces.len(), rec.k),
            ));
        }
        let samples = match (rec.data, rec.samples) {
            (Some(data), None) => decode_samples(&data).map_err(|m| Error::parse(origin, lineno, m))?,
            (None, Some(samples)) => samples,
            _ => {
                return Err(Error::parse(
                    origin,
                    lineno,
                    "trace record needs exactly one of \"data\" or \"samples\"",
                ))
            }
        };
        if samples.len() != g.n_samples {
            return Err(Error::parse(
                origin,
                lineno,
                format!("trace has {} samples, header declares {}", samples.len(), g.n_samples),
            ));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(origin, lineno, "non-finite sample"));
        }
        traces.push(Trace { k: rec.k, samples });
    }
    if traces.len() != g.k {
        return Err(Error::parse(
            origin,
            text.lines().count() + 1,
            format!("file ends after {} traces, header declares {}", traces.len(), g.k),
        ));
    }
    Ok((BScan { geometry: g, traces }, header))
}

pub fn write_bscan(path: &Path, b: &BScan, provenance: Option<&SynthOptions>) -> Result<()> {
    let text = encode(b, provenance)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_bscan(path: &Path) -> Result<(BScan, BScanHeader)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synthesize, Scene};

    fn scan() -> BScan {
        let g = ScanGeometry::new(0.03, 3, 3e8, 1e-11, 64, 2e-9).unwrap();
        let opts = SynthOptions {
            noise_rms: 0.1,
            seed: 11,
            ..Default::default()
        };
        synthesize(&Scene::point(0.03, 0.4), &g, &opts).unwrap()
    }

    fn origin() -> &'static Path {
        Path::new("mem.jsonl")
    }

    #[test]
    fn round_trip_with_provenance() {
        let b = scan();
        let opts = SynthOptions {
            seed: 11,
            ..Default::default()
        };
        let text = encode(&b, Some(&opts)).unwrap();
        let (back, header) = decode(&text, origin()).unwrap();
        assert_eq!(back, b);
        assert_eq!(header.seed, Some(11));
        assert_eq!(header.pulse, Some(opts.pulse));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn plain_text_samples_accepted() {
        let text = concat!(
            r#"{"format":"winding-radar/bscan","version":1,"units":{"length":"m","time":"s"},"#,
            r#""geometry":{"d_m":0.03,"k":2,"c":3e8,"dt":1e-11,"n_samples":3,"t0":0.0}}"#,
            "\n",
            r#"{"k":0,"samples":[0.1,-2.5,3e-7]}"#,
            "\n",
            r#"{"k":1,"samples":[0,0,1]}"#,
            "\n"
        );
        let (b, header) = decode(text, origin()).unwrap();
        assert_eq!(b.traces[0].samples, vec![0.1, -2.5, 3e-7]);
        assert_eq!(header.seed, None);
    }

    fn err_line(text: &str) -> usize {
        match decode(text, origin()) {
            Err(Error::Parse { record, .. }) => record,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_files_report_position() {
        let good = encode(&scan(), None).unwrap();
        let lines: Vec<&str> = good.lines().collect();

        assert_eq!(err_line(""), 1);
        assert_eq!(err_line("not json\n"), 1);

        let mut bad = lines.clone();
        bad[2] = r#"{"k":1,"data":"@@@"}"#;
        assert_eq!(err_line(&bad.join("\n")), 3);

        let mut bad = lines.clone();
        bad.swap(1, 2);
        assert_eq!(err_line(&bad.join("\n")), 2);

        let truncated = lines[..3].join("\n");
        assert_eq!(err_line(&truncated), 4);

        let mut bad = lines.clone();
        bad[3] = r#"{"k":2,"samples":[1.0]}"#;
        assert_eq!(err_line(&bad.join("\n")), 4);
    }

    #[test]
    fn missing_file_names_path() {
        let err = read_bscan(Path::new("/nonexistent/scan.jsonl")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/scan.jsonl"));
    }
}
