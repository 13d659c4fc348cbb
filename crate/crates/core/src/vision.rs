//! Edge detection and line extraction on radar images.
//!
//! Pixel coordinates use `x = column`, `y = row`. Lines are in Hesse normal
//! form `ρ = x·cosθ + y·sinθ` with θ in `[0, π)` measured from the column axis,
//! so a horizontal line at row `c` has `θ = π/2, ρ = c`.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, WallSegment};
use crate::imaging::ImagingWindow;

/// Real-valued row-major image.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl GrayImage {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image"));
        }
        Ok(GrayImage { rows, cols, values })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        GrayImage {
            rows,
            cols,
            values: vec![value; rows * cols],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }
}

/// Binary edge image with the shape of its source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    pub rows: usize,
    pub cols: usize,
    pub edges: Vec<bool>,
}

impl EdgeMap {
    pub fn empty(rows: usize, cols: usize) -> Self {
        EdgeMap {
            rows,
            cols,
            edges: vec![false; rows * cols],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.edges[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: bool) {
        self.edges[r * self.cols + c] = v;
    }

    pub fn count(&self) -> usize {
        self.edges.iter().filter(|e| **e).count()
    }

    /// `(row, col)` of every edge pixel in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| **e)
            .map(|(i, _)| (i / self.cols, i % self.cols))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CannyParams {
    /// Gaussian smoothing width in pixels.
    pub sigma: f64,
    /// Hysteresis thresholds as fractions of the maximum gradient magnitude.
    pub low: f64,
    pub high: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        CannyParams {
            sigma: 2.0,
            low: 0.10,
            high: 0.25,
        }
    }
}

/// Normalized Gaussian taps, truncated at 4σ.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (4.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

fn convolve_rows(img: &[f64], rows: usize, cols: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; img.len()];
    for y in 0..rows {
        let line = &img[y * cols..(y + 1) * cols];
        for x in 0..cols {
            let mut acc = 0.0;
            for (k, &t) in kernel.iter().enumerate() {
                let xx = x as isize + k as isize - r;
                if xx >= 0 && (xx as usize) < cols {
                    acc += t * line[xx as usize];
                }
            }
            out[y * cols + x] = acc;
        }
    }
    out
}

fn convolve_cols(img: &[f64], rows: usize, cols: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as isize;
    let mut out = vec![0.0; img.len()];
    for y in 0..rows {
        for (k, &t) in kernel.iter().enumerate() {
            let yy = y as isize + k as isize - r;
            if yy < 0 || yy as usize >= rows {
                continue;
            }
            let src = &img[yy as usize * cols..(yy as usize + 1) * cols];
            let dst = &mut out[y * cols..(y + 1) * cols];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += t * s;
            }
        }
    }
    out
}

/// Zero-padded separable Gaussian smoothing.
pub fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    let k = gaussian_kernel(sigma);
    let tmp = convolve_rows(&img.values, img.rows, img.cols, &k);
    GrayImage {
        rows: img.rows,
        cols: img.cols,
        values: convolve_cols(&tmp, img.rows, img.cols, &k),
    }
}

/// 3×3 Sobel derivatives `(d/dx, d/dy)` with zero padding.
pub fn sobel(img: &GrayImage) -> (Vec<f64>, Vec<f64>) {
    let (rows, cols) = (img.rows as isize, img.cols as isize);
    let at = |r: isize, c: isize| {
        if r < 0 || c < 0 || r >= rows || c >= cols {
            0.0
        } else {
            img.values[(r * cols + c) as usize]
        }
    };
    let mut gx = vec![0.0; img.values.len()];
    let mut gy = vec![0.0; img.values.len()];
    for r in 0..rows {
        for c in 0..cols {
            let i = (r * cols + c) as usize;
            gx[i] = (at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + 2.0 * at(r, c - 1) + at(r + 1, c - 1));
            gy[i] = (at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1))
                - (at(r - 1, c - 1) + 2.0 * at(r - 1, c) + at(r - 1, c + 1));
        }
    }
    (gx, gy)
}

/// Neighbor offsets `(dr, dc)` across the edge for the quantized gradient direction.
fn across(gx: f64, gy: f64) -> (isize, isize) {
    let mut deg = gy.atan2(gx).to_degrees();
    if deg < 0.0 {
        deg += 180.0;
    }
    if !(22.5..157.5).contains(&deg) {
        (0, 1)
    } else if deg < 67.5 {
        (1, 1)
    } else if deg < 112.5 {
        (1, 0)
    } else {
        (1, -1)
    }
}

/// Canny edge detector: Gaussian smoothing, Sobel gradients, non-maximum
/// suppression over four directions and 8-connected hysteresis.
///
/// Thresholds are fractions of the largest interior gradient magnitude. A
/// border one pixel wider than the Gaussian radius never holds edges, so
/// zero padding cannot leak into the result.
pub fn canny_edges(img: &GrayImage, sigma: f64, low: f64, high: f64) -> Result<EdgeMap> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParameter("sigma must be non-negative"));
    }
    if !(low > 0.0 && low < high && high <= 1.0) {
        return Err(Error::InvalidParameter(
            "thresholds must satisfy 0 < low < high <= 1",
        ));
    }
    let kernel = gaussian_kernel(sigma).len();
    // Gaussian radius plus the Sobel support
    let border = kernel / 2 + 1;
    if img.rows < 2 * border + 1 || img.cols < 2 * border + 1 {
        return Err(Error::ImageTooSmall {
            rows: img.rows,
            cols: img.cols,
            kernel,
        });
    }
    let (rows, cols) = (img.rows, img.cols);
    let smooth = gaussian_blur(img, sigma);
    let (gx, gy) = sobel(&smooth);
    let mag: Vec<f64> = gx.iter().zip(&gy).map(|(x, y)| x.hypot(*y)).collect();

    let interior =
        |r: usize, c: usize| r >= border && r < rows - border && c >= border && c < cols - border;
    let mut max_mag = 0.0f64;
    for r in border..rows - border {
        for c in border..cols - border {
            max_mag = max_mag.max(mag[r * cols + c]);
        }
    }
    let mut out = EdgeMap::empty(rows, cols);
    if !(max_mag > 0.0) {
        return Ok(out);
    }
    let (lo, hi) = (low * max_mag, high * max_mag);

    // 0 = suppressed, 1 = weak, 2 = strong
    let mut class = vec![0u8; rows * cols];
    for r in border..rows - border {
        for c in border..cols - border {
            let i = r * cols + c;
            let m = mag[i];
            if m < lo {
                continue;
            }
            let (dr, dc) = across(gx[i], gy[i]);
            let before = mag[((r as isize - dr) as usize) * cols + (c as isize - dc) as usize];
            let after = mag[((r as isize + dr) as usize) * cols + (c as isize + dc) as usize];
            // strict on one side so two-pixel plateaus yield a single edge pixel
            if m > before && m >= after {
                class[i] = if m >= hi { 2 } else { 1 };
            }
        }
    }

    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    for r in 0..rows {
        for c in 0..cols {
            if class[r * cols + c] == 2 {
                out.set(r, c, true);
                queue.push_back((r, c));
            }
        }
    }
    while let Some((r, c)) = queue.pop_front() {
        for dr in -1isize..=1 {
            for dc in -1isize..=1 {
                let (rr, cc) = (r as isize + dr, c as isize + dc);
                if rr < 0 || cc < 0 || rr as usize >= rows || cc as usize >= cols {
                    continue;
                }
                let (rr, cc) = (rr as usize, cc as usize);
                if interior(rr, cc) && class[rr * cols + cc] == 1 && !out.get(rr, cc) {
                    out.set(rr, cc, true);
                    queue.push_back((rr, cc));
                }
            }
        }
    }
    Ok(out)
}

/// Pixel position; fractional values are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pixel {
    pub row: f64,
    pub col: f64,
}

/// A detected line segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineEstimate {
    /// Signed distance from the pixel origin, pixels.
    pub rho: f64,
    /// Normal angle from the column axis, radians in `[0, π)`.
    pub theta: f64,
    pub start: Pixel,
    pub end: Pixel,
    /// Accumulator votes of the peak.
    pub score: u32,
}

impl LineEstimate {
    pub fn length(&self) -> f64 {
        (self.end.row - self.start.row).hypot(self.end.col - self.start.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoughParams {
    pub d_rho: f64,
    pub d_theta: f64,
    pub n_peaks: usize,
    /// Suppression window `(rho bins, theta bins)` around each accepted peak.
    pub nms: (usize, usize),
    pub min_len: f64,
    pub fill_gap: f64,
}

impl Default for HoughParams {
    fn default() -> Self {
        HoughParams {
            d_rho: 1.0,
            d_theta: 1f64.to_radians(),
            n_peaks: 4,
            nms: (9, 5),
            min_len: 15.0,
            fill_gap: 5.0,
        }
    }
}

/// Vote accumulator over `(θ, ρ)`, θ-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HoughSpace {
    pub thetas: Vec<f64>,
    pub d_rho: f64,
    /// Bin `i` covers `ρ = (i − half)·d_rho ± d_rho/2`.
    pub half: usize,
    pub votes: Vec<u32>,
}

impl HoughSpace {
    pub fn rho_bins(&self) -> usize {
        2 * self.half + 1
    }

    pub fn rho(&self, bin: usize) -> f64 {
        (bin as f64 - self.half as f64) * self.d_rho
    }

    pub fn bin(&self, rho: f64) -> usize {
        ((rho / self.d_rho).round() as i64 + self.half as i64) as usize
    }

    pub fn at(&self, theta: usize, rho: usize) -> u32 {
        self.votes[theta * self.rho_bins() + rho]
    }

    pub fn total(&self) -> u64 {
        self.votes.iter().map(|&v| v as u64).sum()
    }
}

/// Every edge pixel votes once for each θ bin.
pub fn hough_accumulator(edges: &EdgeMap, d_rho: f64, d_theta: f64) -> Result<HoughSpace> {
    if !(d_rho > 0.0) || !(d_theta > 0.0) {
        return Err(Error::InvalidParameter("Hough bin sizes must be positive"));
    }
    let n_theta = ((PI / d_theta).round() as usize).max(1);
    let thetas: Vec<f64> = (0..n_theta)
        .map(|j| j as f64 * PI / n_theta as f64)
        .collect();
    let diag = ((edges.rows.saturating_sub(1)).pow(2) as f64
        + (edges.cols.saturating_sub(1)).pow(2) as f64)
        .sqrt();
    let half = (diag / d_rho).ceil() as usize;
    let mut space = HoughSpace {
        thetas,
        d_rho,
        half,
        votes: vec![0; n_theta * (2 * half + 1)],
    };
    let trig: Vec<(f64, f64)> = space.thetas.iter().map(|t| t.sin_cos()).collect();
    let nr = space.rho_bins();
    for (r, c) in edges.pixels() {
        let (x, y) = (c as f64, r as f64);
        for (j, (s, co)) in trig.iter().enumerate() {
            let bin = space.bin(x * co + y * s);
            space.votes[j * nr + bin] += 1;
        }
    }
    Ok(space)
}

/// Peak bins `(theta, rho)` by descending votes with rectangular suppression.
/// The θ axis wraps onto itself with ρ negated.
pub fn hough_peaks(space: &HoughSpace, n_peaks: usize, nms: (usize, usize)) -> Vec<(usize, usize)> {
    let nt = space.thetas.len() as isize;
    let nr = space.rho_bins() as isize;
    let mut votes = space.votes.clone();
    let (hr, ht) = ((nms.0 / 2) as isize, (nms.1 / 2) as isize);
    let mut peaks = Vec::new();
    while peaks.len() < n_peaks {
        let mut best = 0usize;
        for (i, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = i;
            }
        }
        if votes[best] == 0 {
            break;
        }
        let (j, i) = (best as isize / nr, best as isize % nr);
        peaks.push((j as usize, i as usize));
        for dt in -ht..=ht {
            let mut t = j + dt;
            let mut mirror = false;
            if t < 0 {
                t += nt;
                mirror = true;
            } else if t >= nt {
                t -= nt;
                mirror = true;
            }
            for dr in -hr..=hr {
                let mut r = i + dr;
                if mirror {
                    r = nr - 1 - r;
                }
                if (0..nr).contains(&r) && (0..nt).contains(&t) {
                    votes[(t * nr + r) as usize] = 0;
                }
            }
        }
    }
    peaks
}

/// Hough-transform line extraction.
///
/// For each peak the edge pixels in its ρ bin are ordered along the line and
/// chained, bridging gaps up to `fill_gap`; the longest chain of at least
/// `min_len` pixels is reported. Results are sorted by descending score with
/// ties broken by ascending `(θ, ρ)`.
pub fn hough_lines(edges: &EdgeMap, params: &HoughParams) -> Result<Vec<LineEstimate>> {
    if params.n_peaks == 0 {
        return Err(Error::InvalidParameter("n_peaks must be >= 1"));
    }
    let space = hough_accumulator(edges, params.d_rho, params.d_theta)?;
    let pixels: Vec<(usize, usize)> = edges.pixels().collect();
    let mut lines = Vec::new();
    for (j, i) in hough_peaks(&space, params.n_peaks, params.nms) {
        let theta = space.thetas[j];
        let (s, c) = theta.sin_cos();
        let mut on_line: Vec<(f64, usize, usize)> = pixels
            .iter()
            .filter(|(r, cc)| space.bin(*cc as f64 * c + *r as f64 * s) == i)
            .map(|&(r, cc)| (-(cc as f64) * s + r as f64 * c, r, cc))
            .collect();
        on_line.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some((a, b)) = longest_chain(&on_line, params.fill_gap) {
            let (a, b) = if (on_line[a].1, on_line[a].2) <= (on_line[b].1, on_line[b].2) {
                (a, b)
            } else {
                (b, a)
            };
            let start = Pixel {
                row: on_line[a].1 as f64,
                col: on_line[a].2 as f64,
            };
            let end = Pixel {
                row: on_line[b].1 as f64,
                col: on_line[b].2 as f64,
            };
            let line = LineEstimate {
                rho: space.rho(i),
                theta,
                start,
                end,
                score: space.at(j, i),
            };
            if line.length() >= params.min_len {
                lines.push(line);
            }
        }
    }
    lines.sort_by(|a, b| {
        b.score
            .cmp(&a.score)
            .then(a.theta.total_cmp(&b.theta))
            .then(a.rho.total_cmp(&b.rho))
    });
    Ok(lines)
}

/// Index range of the longest gap-bridged chain; first one wins on ties.
fn longest_chain(sorted: &[(f64, usize, usize)], fill_gap: f64) -> Option<(usize, usize)> {
    if sorted.is_empty() {
        return None;
    }
    let dist = |a: usize, b: usize| {
        let (_, r0, c0) = sorted[a];
        let (_, r1, c1) = sorted[b];
        (r1 as f64 - r0 as f64).hypot(c1 as f64 - c0 as f64)
    };
    let mut best = (0, 0);
    let mut start = 0;
    for k in 1..=sorted.len() {
        if k == sorted.len() || dist(k - 1, k) > fill_gap {
            if dist(start, k - 1) > dist(best.0, best.1) {
                best = (start, k - 1);
            }
            start = k;
        }
    }
    Some(best)
}

/// Maps pixel segments into world-frame walls on the floor (`z = 0`) with
/// the given vertical extent. Zero-length segments are skipped.
pub fn lines_to_walls(
    lines: &[LineEstimate],
    window: &ImagingWindow,
    height: f64,
) -> Vec<WallSegment> {
    let floor = |p: Pixel| {
        let q = window.point_at(p.row, p.col);
        Point3::new(q.x, q.y, 0.0)
    };
    lines
        .iter()
        .filter_map(|l| {
            let h = (height > 0.0).then_some(height);
            WallSegment::with_reflection(
                floor(l.start),
                floor(l.end),
                h,
                num_complex::Complex64::new(1.0, 0.0),
            )
            .ok()
        })
        .collect()
}
