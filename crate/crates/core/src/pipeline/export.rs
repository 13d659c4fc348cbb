//! Text and image exports of pipeline artifacts.
//!
//! Floats are written with the shortest representation that parses back to
//! the same value, so re-reading an export reproduces downstream results
//! exactly.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::channel::FrequencyGrid;
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::imaging::{DbImage, ImagingWindow, ReflectivityMap};
use crate::vision::EdgeMap;
use crate::wpt::WptReport;

/// Everything besides the pixel values needed to rebuild a map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMeta {
    pub window: ImagingWindow,
    pub freqs: Vec<f64>,
}

impl MapMeta {
    pub fn of(map: &ReflectivityMap) -> Self {
        MapMeta {
            window: map.window.clone(),
            freqs: map.grid.freqs().to_vec(),
        }
    }
}

/// `row,col,re,im` per pixel, row-major.
pub fn map_csv(map: &ReflectivityMap) -> String {
    let mut s = String::with_capacity(map.values.len() * 48);
    s.push_str("row,col,re,im\n");
    let cols = map.window.nu;
    for (i, v) in map.values.iter().enumerate() {
        let _ = writeln!(s, "{},{},{},{}", i / cols, i % cols, v.re, v.im);
    }
    s
}

pub fn parse_map_csv(text: &str, meta: &MapMeta) -> Result<ReflectivityMap> {
    let bad = |line: usize, what: &str| Error::Container(format!("map csv line {line}: {what}"));
    let (rows, cols) = (meta.window.nv, meta.window.nu);
    let mut values = vec![None; rows * cols];
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "row,col,re,im")) => {}
        _ => return Err(bad(1, "expected header row,col,re,im")),
    }
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad(no + 1, "expected 4 fields"));
        }
        let r: usize = f[0].parse().map_err(|_| bad(no + 1, "row"))?;
        let c: usize = f[1].parse().map_err(|_| bad(no + 1, "col"))?;
        let re: f64 = f[2].parse().map_err(|_| bad(no + 1, "re"))?;
        let im: f64 = f[3].parse().map_err(|_| bad(no + 1, "im"))?;
        if r >= rows || c >= cols {
            return Err(bad(no + 1, "pixel outside window"));
        }
        values[r * cols + c] = Some(Complex64::new(re, im));
    }
    let values = values
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::Container("map csv does not cover every pixel".into()))?;
    Ok(ReflectivityMap {
        values,
        window: meta.window.clone(),
        grid: FrequencyGrid::from_freqs(meta.freqs.clone())?,
    })
}

/// 16-bit binary graymap; the floor maps to 0 and 0 dB to 65535.
pub fn db_pgm(img: &DbImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n65535\n", img.cols, img.rows);
    let mut out = Vec::with_capacity(header.len() + 2 * img.values.len());
    out.extend_from_slice(header.as_bytes());
    let range = -img.floor_db;
    for v in &img.values {
        let level = ((v - img.floor_db) / range * 65535.0)
            .round()
            .clamp(0.0, 65535.0) as u16;
        out.extend_from_slice(&level.to_be_bytes());
    }
    out
}

/// 8-bit binary graymap with edge pixels white.
pub fn edges_pgm(edges: &EdgeMap) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", edges.cols, edges.rows);
    let mut out = header.into_bytes();
    out.extend(edges.edges.iter().map(|&e| if e { 255u8 } else { 0 }));
    out
}

/// One `metric,value` row per scalar of the report.
pub fn report_csv(report: &WptReport) -> String {
    let mut s = String::from("metric,value\n");
    let _ = writeln!(s, "pg_predicted_db,{}", report.pg_predicted);
    let _ = writeln!(s, "pg_optimized_db,{}", report.pg_optimized);
    let _ = writeln!(s, "pg_perfect_db,{}", report.pg_perfect);
    let _ = writeln!(s, "loss_db,{}", report.loss_db());
    for (k, phi) in report.phases.full().iter().enumerate() {
        let _ = writeln!(s, "phi_{}_rad,{}", k + 1, phi);
    }
    for (k, a) in report.alpha_hat.iter().enumerate() {
        let _ = writeln!(s, "alpha_hat_{}_re,{}", k + 1, a.0.re);
        let _ = writeln!(s, "alpha_hat_{}_im,{}", k + 1, a.0.im);
    }
    s
}

/// Path gain over a set of points for the optimized and unoptimized beams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<Point3>,
    pub pg_optimized: Vec<Option<f64>>,
    pub pg_predicted: Vec<Option<f64>>,
}

/// `x,y,z,pg_optimized_db,pg_predicted_db`, with `NA` at degenerate points.
pub fn sweep_csv(sweep: &SweepResult) -> String {
    let cell = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
    let mut s = String::from("x,y,z,pg_optimized_db,pg_predicted_db\n");
    for ((p, a), b) in sweep
        .points
        .iter()
        .zip(&sweep.pg_optimized)
        .zip(&sweep.pg_predicted)
    {
        let _ = writeln!(s, "{},{},{},{},{}", p.x, p.y, p.z, cell(*a), cell(*b));
    }
    s
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifacts serialize to JSON");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}
