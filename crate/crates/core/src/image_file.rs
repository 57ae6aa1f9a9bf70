//! Image artifacts: CSV values and an 8-bit binary graymap.
//!
//! The CSV starts with one `#` line carrying the grid metadata, then M rows
//! (one per Y pixel) of N comma-separated values. Values are written in
//! shortest round-trip form, so reading the CSV back is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::GridSpec;
use crate::migrate::ImageGrid;

const CSV_TAG: &str = "# winding-radar image";

pub fn encode_csv(img: &ImageGrid) -> String {
    let g = &img.grid;
    let mut out = format!(
        "{CSV_TAG} d0_m={} m={} n={} y_origin_m={} z_origin_m={}\n",
        g.d0, g.m, g.n, g.y_origin, g.z_origin
    );
    for i in 0..g.m {
        for (j, v) in img.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write!(out, "{v}").expect("write to string");
        }
        out.push('\n');
    }
    out
}

fn parse_grid_header(line: &str, origin: &Path) -> Result<GridSpec> {
    let rest = line
        .strip_prefix(CSV_TAG)
        .ok_or_else(|| Error::parse(origin, 1, "missing image header line"))?;
    let mut d0 = None;
    let mut m = None;
    let mut n = None;
    let mut y0 = None;
    let mut z0 = None;
    for field in rest.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::parse(origin, 1, format!("malformed header field {field:?}")))?;
        let bad = || Error::parse(origin, 1, format!("bad value for {key}: {value:?}"));
        match key {
            "d0_m" => d0 = Some(value.parse::<f64>().map_err(|_| bad())?),
            "m" => m = Some(value.parse::<usize>().map_err(|_| bad())?),
            "n" => n = Some(value.parse::<usize>().map_err(|_| bad())?),
            "y_origin_m" => y0 = Some(value.parse::<f64>().map_err(|_| bad())?),
            "z_origin_m" => z0 = Some(value.parse::<f64>().map_err(|_| bad())?),
            _ => return Err(Error::parse(origin, 1, format!("unknown header field {key:?}"))),
        }
    }
    match (d0, m, n, y0, z0) {
        (Some(d0), Some(m), Some(n), Some(y0), Some(z0)) => {
            GridSpec::new(d0, m, n, y0, z0).map_err(|e| Error::parse(origin, 1, e.to_string()))
        }
        _ => Err(Error::parse(origin, 1, "image header is missing grid fields")),
    }
}

pub fn decode_csv(text: &str, origin: &Path) -> Result<ImageGrid> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(origin, 1, "empty image file"))?;
    let grid = parse_grid_header(header, origin)?;
    let mut values = Vec::with_capacity(grid.m * grid.n);
    let mut rows = 0;
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let before = values.len();
        for cell in line.split(',') {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| Error::parse(origin, lineno, format!("bad value {cell:?}")))?;
            values.push(v);
        }
        if values.len() - before != grid.n {
            return Err(Error::parse(
                origin,
                lineno,
                format!("row has {} values, expected {}", values.len() - before, grid.n),
            ));
        }
        rows += 1;
        if rows > grid.m {
            return Err(Error::parse(origin, lineno, format!("more than {} rows", grid.m)));
        }
    }
    if rows != grid.m {
        return Err(Error::parse(
            origin,
            text.lines().count() + 1,
            format!("found {rows} rows, expected {}", grid.m),
        ));
    }
    ImageGrid::from_values(grid, values).map_err(|e| Error::parse(origin, 1, e.to_string()))
}

/// Gray level per pixel: `round(255 * |I| / max |I|)`, all zero for a zero image.
pub fn gray_levels(img: &ImageGrid) -> Vec<u8> {
    let peak = img.max_abs();
    img.values
        .iter()
        .map(|v| {
            if peak > 0.0 {
                (255.0 * v.abs() / peak).round() as u8
            } else {
                0
            }
        })
        .collect()
}

/// Binary graymap (P5) with one raster row per Y pixel.
pub fn encode_pgm(img: &ImageGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.grid.n, img.grid.m).into_bytes();
    out.extend(gray_levels(img));
    out
}

pub fn write_csv(path: &Path, img: &ImageGrid) -> Result<()> {
    fs::write(path, encode_csv(img)).map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<ImageGrid> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_csv(&text, path)
}

pub fn write_pgm(path: &Path, img: &ImageGrid) -> Result<()> {
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img() -> ImageGrid {
        let grid = GridSpec::new(0.005, 3, 4, -0.01, 0.35).unwrap();
        let values = vec![0.1, -0.2, 1e-300, 3.0, 0.0, -4.0, 2.0 / 3.0, 5.5, 1.25e10, -1e-9, 0.3, 7.0];
        ImageGrid::from_values(grid, values).unwrap()
    }

    #[test]
    fn csv_round_trip_exact() {
        let text = encode_csv(&img());
        assert!(text.starts_with("# winding-radar image d0_m=0.005 m=3 n=4 y_origin_m=-0.01 z_origin_m=0.35\n"));
        let back = decode_csv(&text, Path::new("x.csv")).unwrap();
        assert_eq!(back, img());
    }

    #[test]
    fn csv_errors_carry_line() {
        let text = encode_csv(&img()).replace("-4", "oops");
        match decode_csv(&text, Path::new("x.csv")) {
            Err(Error::Parse { record, .. }) => assert_eq!(record, 3),
            other => panic!("{other:?}"),
        }
        assert!(decode_csv("1,2\n", Path::new("x.csv")).is_err());
    }

    #[test]
    fn graymap_layout() {
        let img = img();
        let pgm = encode_pgm(&img);
        let header = b"P5\n4 3\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        let px = &pgm[header.len()..];
        assert_eq!(px.len(), 12);
        assert_eq!(px[8], 255);
        assert_eq!(px[5], (255.0f64 * 4.0 / 1.25e10).round() as u8);
    }

    #[test]
    fn zero_image_uniform_graymap() {
        let grid = GridSpec::new(0.005, 2, 2, 0.0, 0.1).unwrap();
        assert_eq!(gray_levels(&ImageGrid::zeros(grid)), vec![0; 4]);
    }
}
