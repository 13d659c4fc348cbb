//! Bistatic MIMO reflectivity imaging with position-based MRT focusing on
//! both arrays.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{channel_vector, wavelength, ChannelMatrix, ChannelModel, FrequencyGrid};
use crate::error::{Error, Result};
use crate::geometry::{ArrayLayout, MirrorSource, Point3};
use crate::vision::GrayImage;

/// Horizontal grid of candidate points. Pixel `(row, col)` sits at
/// `origin + u_axis·col·step + v_axis·row·step`, at height `z_plane`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagingWindow {
    pub origin: Point3,
    pub u_axis: Point3,
    pub v_axis: Point3,
    pub nu: usize,
    pub nv: usize,
    pub step: f64,
    pub z_plane: f64,
}

impl ImagingWindow {
    /// Axis-aligned window (`u = +x`, `v = +y`) starting at `(x0, y0)`.
    pub fn axis_aligned(
        x0: f64,
        y0: f64,
        nu: usize,
        nv: usize,
        step: f64,
        z_plane: f64,
    ) -> Result<Self> {
        let w = ImagingWindow {
            origin: Point3::new(x0, y0, z_plane),
            u_axis: Point3::X,
            v_axis: Point3::Y,
            nu,
            nv,
            step,
            z_plane,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu == 0 || self.nv == 0 {
            return Err(Error::InvalidParameter("window needs at least one pixel"));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::InvalidParameter("pixel step must be positive"));
        }
        let (u, v) = (self.u_axis, self.v_axis);
        let unit = |a: Point3| (a.norm() - 1.0).abs() < 1e-9;
        if !unit(u) || !unit(v) || u.dot(v).abs() > 1e-9 || u.z.abs() > 1e-12 || v.z.abs() > 1e-12 {
            return Err(Error::InvalidParameter(
                "window axes must be orthonormal and horizontal",
            ));
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.nv
    }

    pub fn cols(&self) -> usize {
        self.nu
    }

    /// World point at fractional pixel coordinates.
    pub fn point_at(&self, row: f64, col: f64) -> Point3 {
        let p = self.origin + self.u_axis * (col * self.step) + self.v_axis * (row * self.step);
        Point3::new(p.x, p.y, self.z_plane)
    }

    pub fn pixel(&self, row: usize, col: usize) -> Point3 {
        self.point_at(row as f64, col as f64)
    }

    /// Fractional `(row, col)` of the projection of `p` onto the window plane.
    pub fn to_pixel(&self, p: Point3) -> (f64, f64) {
        let d = p - self.origin;
        let d = Point3::new(d.x, d.y, 0.0);
        (
            d.dot(self.v_axis) / self.step,
            d.dot(self.u_axis) / self.step,
        )
    }
}

/// Complex reflectivity `I(p)` over a window, row-major (`rows = nv`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectivityMap {
    pub values: Vec<Complex64>,
    pub window: ImagingWindow,
    pub grid: FrequencyGrid,
}

impl ReflectivityMap {
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.window.nu + col]
    }

    /// `(row, col)` of the largest `|I|`, first in row-major order on ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if v.norm_sqr() > self.values[best].norm_sqr() {
                best = i;
            }
        }
        (best / self.window.nu, best % self.window.nu)
    }
}

/// Display-domain image: power normalized to a 0 dB maximum, clipped at `floor_db`.
#[derive(Debug, Clone, PartialEq)]
pub struct DbImage {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    pub floor_db: f64,
}

impl DbImage {
    pub fn to_gray(&self) -> GrayImage {
        GrayImage::new(self.rows, self.cols, self.values.clone())
            .expect("dB image dimensions are consistent")
    }
}

/// LoS-only, isotropic MRT weights focusing `layout` on `p` at frequency `f`.
pub fn mrt_weights(p: Point3, layout: &ArrayLayout, f: f64) -> Result<Vec<Complex64>> {
    let h = channel_vector(
        &[MirrorSource::line_of_sight(layout)],
        p,
        f,
        &ChannelModel::default(),
    )?;
    let norm = h.norm();
    if !(norm > 0.0) {
        return Err(Error::ZeroChannel);
    }
    Ok(h.entries.iter().map(|x| x.conj() / norm).collect())
}

/// Pixels per imaging work unit.
const BLOCK: usize = 128;
/// Weights are recomputed exactly at this frequency interval and advanced by
/// phase rotation in between.
const RESYNC: usize = 16;

/// Focusing weights of one array toward a block of points, `[point][element]`.
///
/// MRT magnitudes do not depend on frequency; only the phase `k·d` does, so
/// consecutive frequencies advance each weight by `e^{jΔk·d}`.
struct Focus {
    dist: Vec<f64>,
    mag: Vec<f64>,
    w: Vec<Complex64>,
    step: Vec<Complex64>,
    step_dk: f64,
    k: f64,
}

impl Focus {
    fn new(points: &[Point3], layout: &ArrayLayout) -> Result<Self> {
        let len = points.len() * layout.len();
        let mut dist = Vec::with_capacity(len);
        let mut mag = Vec::with_capacity(len);
        for p in points {
            let start = dist.len();
            for (m, e) in layout.elements.iter().enumerate() {
                let d = p.distance(*e);
                if !(d > 0.0) {
                    return Err(Error::DegenerateGeometry { element: m });
                }
                dist.push(d);
            }
            let row = &dist[start..];
            let norm = row.iter().map(|d| 1.0 / (d * d)).sum::<f64>().sqrt();
            mag.extend(row.iter().map(|d| 1.0 / (d * norm)));
        }
        let zero = Complex64::new(0.0, 0.0);
        Ok(Focus {
            dist,
            mag,
            w: vec![zero; len],
            step: vec![zero; len],
            step_dk: f64::NAN,
            k: f64::NAN,
        })
    }

    /// Sets the weights to their exact values at frequency `f`.
    fn exact(&mut self, f: f64) {
        let k = 2.0 * std::f64::consts::PI / wavelength(f);
        for ((w, &d), &a) in self.w.iter_mut().zip(&self.dist).zip(&self.mag) {
            let (s, c) = (k * d).sin_cos();
            *w = Complex64::new(a * c, a * s);
        }
        self.k = k;
    }

    /// Moves the weights to frequency `f`, exactly every `RESYNC` calls.
    fn advance(&mut self, i: usize, f: f64) {
        if i.is_multiple_of(RESYNC) || self.k.is_nan() {
            self.exact(f);
            return;
        }
        let k = 2.0 * std::f64::consts::PI / wavelength(f);
        let dk = k - self.k;
        if !((dk - self.step_dk).abs() <= 1e-12 * dk.abs()) {
            for (s, &d) in self.step.iter_mut().zip(&self.dist) {
                let (sn, cs) = (dk * d).sin_cos();
                *s = Complex64::new(cs, sn);
            }
            self.step_dk = dk;
        }
        for (w, s) in self.w.iter_mut().zip(&self.step) {
            *w *= s;
        }
        self.k = k;
    }
}

/// `V = A·B` for row-major `A` (`rows×inner`) and a column-major `B`
/// (`inner×cols`) into row-major `V`.
fn complex_matmul(
    a: &[Complex64],
    b: &[Complex64],
    v: &mut [Complex64],
    rows: usize,
    inner: usize,
    cols: usize,
) {
    assert!(a.len() == rows * inner && b.len() == inner * cols && v.len() == rows * cols);
    let one = [1.0, 0.0];
    let zero = [0.0, 0.0];
    // SAFETY: Complex64 is #[repr(C)] { re, im }, layout-identical to [f64; 2];
    // the asserted lengths cover every index reachable through the strides.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            rows,
            inner,
            cols,
            one,
            a.as_ptr().cast(),
            inner as isize,
            1,
            b.as_ptr().cast(),
            1,
            inner as isize,
            zero,
            v.as_mut_ptr().cast(),
            cols as isize,
            1,
        );
    }
}

fn block_values(
    h: &ChannelMatrix,
    points: &[Point3],
    m_layout: &ArrayLayout,
    n_layout: &ArrayLayout,
) -> Result<Vec<Complex64>> {
    let (p, m, n) = (points.len(), m_layout.len(), n_layout.len());
    let mut fm = Focus::new(points, m_layout)?;
    let mut fn_ = Focus::new(points, n_layout)?;
    let mut v = vec![Complex64::new(0.0, 0.0); p * n];
    let mut acc = vec![Complex64::new(0.0, 0.0); p];
    for (i, &f) in h.grid().freqs().iter().enumerate() {
        fm.advance(i, f);
        fn_.advance(i, f);
        // slice(i) holds H(f_i) with m fastest: column-major m×n
        complex_matmul(&fm.w, h.slice(i), &mut v, p, m, n);
        for ((a, vr), br) in acc
            .iter_mut()
            .zip(v.chunks_exact(n))
            .zip(fn_.w.chunks_exact(n))
        {
            *a += vr.iter().zip(br).map(|(x, y)| x * y).sum::<Complex64>();
        }
    }
    Ok(acc)
}

/// `I(p) = Σ_i w_mᵀ(p, f_i) H(f_i) w_n(p, f_i)` over every window pixel.
///
/// `m_layout` is the array indexing the first channel dimension and `n_layout`
/// the second. Pixels are processed in fixed blocks and the frequency sum runs
/// in ascending order, so the result does not depend on scheduling.
pub fn reflectivity_map(
    h: &ChannelMatrix,
    m_layout: &ArrayLayout,
    n_layout: &ArrayLayout,
    window: &ImagingWindow,
) -> Result<ReflectivityMap> {
    window.validate()?;
    if h.tx_len() != m_layout.len() {
        return Err(Error::DimensionMismatch {
            expected: m_layout.len(),
            got: h.tx_len(),
        });
    }
    if h.rx_len() != n_layout.len() {
        return Err(Error::DimensionMismatch {
            expected: n_layout.len(),
            got: h.rx_len(),
        });
    }
    let cols = window.nu;
    let pixels: Vec<Point3> = (0..window.nu * window.nv)
        .map(|idx| window.pixel(idx / cols, idx % cols))
        .collect();
    let eval = |chunk: &[Point3]| block_values(h, chunk, m_layout, n_layout);

    #[cfg(feature = "parallel")]
    let blocks: Result<Vec<Vec<Complex64>>> = {
        use rayon::prelude::*;
        pixels.par_chunks(BLOCK).map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let blocks: Result<Vec<Vec<Complex64>>> = pixels.chunks(BLOCK).map(eval).collect();

    Ok(ReflectivityMap {
        values: blocks?.concat(),
        window: window.clone(),
        grid: h.grid().clone(),
    })
}

/// `10·log10(|I|²)` shifted so the maximum is 0 dB and clipped at `-dynamic_range_db`.
pub fn to_db(map: &ReflectivityMap, dynamic_range_db: f64) -> Result<DbImage> {
    if !(dynamic_range_db > 0.0) {
        return Err(Error::InvalidParameter("dynamic range must be positive"));
    }
    let floor = -dynamic_range_db;
    let peak = map.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let values = map
        .values
        .iter()
        .map(|v| {
            let p = v.norm_sqr();
            if peak > 0.0 && p > 0.0 {
                (10.0 * (p / peak).log10()).max(floor)
            } else {
                floor
            }
        })
        .collect();
    Ok(DbImage {
        rows: map.window.nv,
        cols: map.window.nu,
        values,
        floor_db: floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{channel_matrix, FrequencyGrid};
    use crate::geometry::{ula_layout, ura_layout};

    const FC: f64 = 3.79e9;

    #[test]
    fn single_element_weight_is_unit_phase() {
        let l = ArrayLayout::new("1", vec![Point3::ORIGIN]).unwrap();
        let w = mrt_weights(Point3::new(0.3, 0.4, 0.0), &l, FC).unwrap();
        assert_eq!(w.len(), 1);
        assert!((w[0].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weight_magnitudes_follow_inverse_distance() {
        let l = ula_layout(5, 0.2, Point3::ORIGIN, Point3::X).unwrap();
        let p = Point3::new(0.3, 0.5, 0.0);
        let w = mrt_weights(p, &l, FC).unwrap();
        let norm: f64 = w.iter().map(|x| x.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        let ratio0 = w[0].norm() * p.distance(l.elements[0]);
        for (x, e) in w.iter().zip(&l.elements) {
            assert!((x.norm() * p.distance(*e) - ratio0).abs() < 1e-12);
        }
    }

    #[test]
    fn far_field_broadside_is_plane_wave() {
        let lambda = wavelength(FC);
        let l = ula_layout(11, lambda / 2.0, Point3::ORIGIN, Point3::X).unwrap();
        let aperture = 5.0 * lambda;
        let k0 = 2.0 * std::f64::consts::PI / lambda;
        // plane-wave steering towards broadside has equal phase and modulus;
        // the spherical residual at the edge is the Fresnel term π·L²/(4λR)
        for range in [100.0 * aperture, 1000.0 * aperture * aperture / lambda] {
            let p = Point3::new(0.0, range, 0.0);
            let w = mrt_weights(p, &l, FC).unwrap();
            let fresnel = std::f64::consts::PI * aperture * aperture / (4.0 * lambda * range);
            let mut worst = 0.0f64;
            for x in &w {
                assert!((x.norm() - 1.0 / 11f64.sqrt()).abs() < 1e-4);
                worst = worst.max((x * Complex64::from_polar(1.0, -k0 * range)).arg().abs());
            }
            assert!(worst <= fresnel * 1.001, "{worst} > {fresnel}");
            assert!(worst >= fresnel * 0.99);
        }
        let p = Point3::new(0.0, 1000.0 * aperture * aperture / lambda, 0.0);
        let w = mrt_weights(p, &l, FC).unwrap();
        let spread = w.iter().map(|x| x.arg()).fold(f64::MIN, f64::max)
            - w.iter().map(|x| x.arg()).fold(f64::MAX, f64::min);
        assert!(spread < 1e-3);
    }

    #[test]
    fn fast_focus_matches_mrt_weights() {
        let l = ura_layout(3, 4, 0.03, Point3::new(0.1, 1.0, 0.9), Point3::Z).unwrap();
        let pts = [Point3::new(-0.4, 0.3, 1.0), Point3::new(2.0, -1.0, 0.2)];
        let mut focus = Focus::new(&pts, &l).unwrap();
        // uniform run, a jump, and enough steps to pass a resync
        let mut freqs: Vec<f64> = (0..20).map(|i| 3e9 + 35e6 * i as f64).collect();
        freqs.extend((0..20).map(|i| 5.9e9 + 12.5e6 * i as f64));
        for (i, &f) in freqs.iter().enumerate() {
            focus.advance(i, f);
            for (j, p) in pts.iter().enumerate() {
                let reference = mrt_weights(*p, &l, f).unwrap();
                let row = &focus.w[j * l.len()..(j + 1) * l.len()];
                for (a, b) in row.iter().zip(&reference) {
                    assert!((a - b).norm() < 1e-12, "f = {f}");
                }
            }
        }
    }

    #[test]
    fn matmul_matches_loops() {
        let (rows, inner, cols) = (5, 3, 4);
        let c = |k: usize| Complex64::new((k as f64 * 0.7).sin(), (k as f64 * 1.3).cos());
        let a: Vec<_> = (0..rows * inner).map(c).collect();
        let b: Vec<_> = (0..inner * cols).map(|k| c(k + 100)).collect();
        let mut v = vec![Complex64::new(0.0, 0.0); rows * cols];
        complex_matmul(&a, &b, &mut v, rows, inner, cols);
        for r in 0..rows {
            for col in 0..cols {
                let e: Complex64 = (0..inner)
                    .map(|k| a[r * inner + k] * b[col * inner + k])
                    .sum();
                assert!((v[r * cols + col] - e).norm() < 1e-12);
            }
        }
    }

    fn small_scene() -> (ArrayLayout, ArrayLayout, FrequencyGrid) {
        let tx = ula_layout(6, 0.05, Point3::new(0.0, 0.0, 1.0), Point3::X).unwrap();
        let rx = ura_layout(2, 2, 0.03, Point3::new(0.2, 1.0, 0.95), Point3::Z).unwrap();
        (tx, rx, FrequencyGrid::linear(3e9, 10e9, 5).unwrap())
    }

    #[test]
    fn zero_channel_gives_zero_map() {
        let (tx, rx, grid) = small_scene();
        let h = ChannelMatrix::zeros(tx.len(), rx.len(), grid);
        let w = ImagingWindow::axis_aligned(-0.5, 0.2, 4, 3, 0.1, 1.0).unwrap();
        let map = reflectivity_map(&h, &tx, &rx, &w).unwrap();
        assert!(map.values.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn matched_pixel_has_zero_phase() {
        let tx = ArrayLayout::new("1", vec![Point3::new(0.0, 0.0, 1.0)]).unwrap();
        let rx = ArrayLayout::new("1", vec![Point3::new(0.4, 1.3, 1.0)]).unwrap();
        let grid = FrequencyGrid::single(FC).unwrap();
        let h = channel_matrix(&tx, &rx, &[], &grid, &ChannelModel::default()).unwrap();
        // any pixel on the tx-rx segment matches the path length exactly
        let w = ImagingWindow::axis_aligned(0.2, 0.65, 1, 1, 0.1, 1.0).unwrap();
        let map = reflectivity_map(&h, &tx, &rx, &w).unwrap();
        assert!(map.values[0].arg().abs() < 1e-6);
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn direct_sum_matches_fast_path() {
        let (tx, rx, grid) = small_scene();
        let h = channel_matrix(&tx, &rx, &[], &grid, &ChannelModel::default()).unwrap();
        let w = ImagingWindow::axis_aligned(-0.3, 0.3, 3, 2, 0.15, 1.0).unwrap();
        let map = reflectivity_map(&h, &tx, &rx, &w).unwrap();
        for r in 0..2 {
            for c in 0..3 {
                let p = w.pixel(r, c);
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, &f) in grid.freqs().iter().enumerate() {
                    let wm = mrt_weights(p, &tx, f).unwrap();
                    let wn = mrt_weights(p, &rx, f).unwrap();
                    for n in 0..rx.len() {
                        for m in 0..tx.len() {
                            acc += wm[m] * h.get(m, n, i) * wn[n];
                        }
                    }
                }
                assert!((acc - map.get(r, c)).norm() < 1e-12 * acc.norm().max(1e-12));
            }
        }
    }

    #[test]
    fn real_scaling_and_band_linearity() {
        let (tx, rx, _) = small_scene();
        let model = ChannelModel::default();
        let lo = FrequencyGrid::linear(3e9, 4e9, 3).unwrap();
        let hi = FrequencyGrid::linear(6e9, 7e9, 3).unwrap();
        let both = FrequencyGrid::from_freqs([lo.freqs(), hi.freqs()].concat()).unwrap();
        let w = ImagingWindow::axis_aligned(-0.2, 0.4, 3, 3, 0.1, 1.0).unwrap();
        let map = |g: &FrequencyGrid, s: f64| {
            let mut h = channel_matrix(&tx, &rx, &[], g, &model).unwrap();
            h.data_mut().iter_mut().for_each(|x| *x *= s);
            reflectivity_map(&h, &tx, &rx, &w).unwrap()
        };
        let a = map(&both, 1.0);
        let b = map(&both, 3.5);
        let (l, hh) = (map(&lo, 1.0), map(&hi, 1.0));
        for i in 0..a.values.len() {
            assert!((b.values[i] - a.values[i] * 3.5).norm() < 1e-12 * a.values[i].norm());
            assert!(
                (l.values[i] + hh.values[i] - a.values[i]).norm()
                    < 1e-12 * a.values[i].norm().max(1e-9)
            );
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (tx, rx, grid) = small_scene();
        let h = ChannelMatrix::zeros(tx.len() + 1, rx.len(), grid);
        let w = ImagingWindow::axis_aligned(0.0, 0.5, 2, 2, 0.1, 1.0).unwrap();
        assert!(matches!(
            reflectivity_map(&h, &tx, &rx, &w),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn map_of(values: Vec<Complex64>, nu: usize, nv: usize) -> ReflectivityMap {
        ReflectivityMap {
            values,
            window: ImagingWindow::axis_aligned(0.0, 0.0, nu, nv, 0.1, 0.0).unwrap(),
            grid: FrequencyGrid::single(FC).unwrap(),
        }
    }

    #[test]
    fn db_conversion() {
        let vals: Vec<_> = (0..6)
            .map(|i| Complex64::new(i as f64 * 0.1, 0.2))
            .collect();
        let a = to_db(&map_of(vals.clone(), 3, 2), 60.0).unwrap();
        let b = to_db(&map_of(vals.iter().map(|v| v * 10.0).collect(), 3, 2), 60.0).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
        let max = a.values.iter().cloned().fold(f64::MIN, f64::max);
        assert!(max.abs() < 1e-12);

        let mut one = vec![Complex64::new(0.0, 0.0); 6];
        one[4] = Complex64::new(0.0, 2.0);
        let d = to_db(&map_of(one, 3, 2), 60.0).unwrap();
        assert_eq!(d.values, vec![-60.0, -60.0, -60.0, -60.0, 0.0, -60.0]);

        let z = to_db(&map_of(vec![Complex64::new(0.0, 0.0); 6], 3, 2), 40.0).unwrap();
        assert!(z.values.iter().all(|v| *v == -40.0));
        assert!(to_db(&map_of(vec![Complex64::new(0.0, 0.0); 6], 3, 2), 0.0).is_err());
    }

    #[test]
    fn window_pixel_round_trip() {
        let w = ImagingWindow::axis_aligned(-1.0, 0.5, 10, 20, 0.05, 1.2).unwrap();
        let p = w.pixel(7, 3);
        assert!((p.x - (-0.85)).abs() < 1e-12 && (p.y - 0.85).abs() < 1e-12 && p.z == 1.2);
        let (r, c) = w.to_pixel(p);
        assert!((r - 7.0).abs() < 1e-9 && (c - 3.0).abs() < 1e-9);
        let mut bad = w.clone();
        bad.v_axis = Point3::new(0.0, 1.0, 0.1);
        assert!(bad.validate().is_err());
    }
}
