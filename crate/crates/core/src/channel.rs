//! Geometric MISO/MIMO channel synthesis from image sources (free-space Friis
//! amplitude with spherical phase), received phasors and path gain.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{mirror_sources, ArrayLayout, MirrorSource, Point3, WallSegment};

/// Vacuum speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reported in place of 10·log10(0).
pub const ZERO_GAIN_DB: f64 = -999.0;

pub fn wavelength(f: f64) -> f64 {
    SPEED_OF_LIGHT / f
}

/// Power ratio to dB, with [`ZERO_GAIN_DB`] for a zero ratio.
pub fn power_db(linear: f64) -> f64 {
    if linear > 0.0 {
        10.0 * linear.log10()
    } else {
        ZERO_GAIN_DB
    }
}

/// Linearly spaced band, both edges included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub f_lo: f64,
    pub f_hi: f64,
    pub count: usize,
}

impl Band {
    pub fn new(f_lo: f64, f_hi: f64, count: usize) -> Self {
        Band { f_lo, f_hi, count }
    }

    /// Band of the given width centered on `f_center`.
    pub fn centered(f_center: f64, width: f64, count: usize) -> Self {
        Band::new(f_center - width / 2.0, f_center + width / 2.0, count)
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.f_lo && f <= self.f_hi
    }

    fn frequencies(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![(self.f_lo + self.f_hi) / 2.0],
            n => {
                let step = (self.f_hi - self.f_lo) / (n - 1) as f64;
                (0..n).map(|i| self.f_lo + step * i as f64).collect()
            }
        }
    }
}

/// Strictly increasing list of positive frequencies in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    freqs: Vec<f64>,
}

impl FrequencyGrid {
    pub fn from_bands(bands: &[Band]) -> Result<Self> {
        let mut freqs = Vec::new();
        for b in bands {
            if !(b.f_lo > 0.0) || !(b.f_hi >= b.f_lo) || !b.f_hi.is_finite() {
                return Err(Error::InvalidGrid(
                    "band edges must satisfy 0 < f_lo <= f_hi",
                ));
            }
            freqs.extend(b.frequencies());
        }
        Self::from_freqs(freqs)
    }

    pub fn linear(f_lo: f64, f_hi: f64, count: usize) -> Result<Self> {
        Self::from_bands(&[Band::new(f_lo, f_hi, count)])
    }

    pub fn single(f: f64) -> Result<Self> {
        Self::from_bands(&[Band::new(f, f, 1)])
    }

    pub fn from_freqs(freqs: Vec<f64>) -> Result<Self> {
        if freqs.is_empty() {
            return Err(Error::InvalidGrid("no frequencies"));
        }
        if freqs.iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
            return Err(Error::InvalidGrid(
                "frequencies must be positive and finite",
            ));
        }
        if freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(
                "frequencies must be strictly increasing",
            ));
        }
        Ok(FrequencyGrid { freqs })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Keeps every `stride`-th frequency, starting with the first.
    pub fn decimate(&self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidParameter("frequency stride must be >= 1"));
        }
        Self::from_freqs(self.freqs.iter().copied().step_by(stride).collect())
    }

    /// Index of the grid frequency closest to `f`.
    pub fn nearest(&self, f: f64) -> usize {
        let mut best = 0;
        for (i, &x) in self.freqs.iter().enumerate() {
            if (x - f).abs() < (self.freqs[best] - f).abs() {
                best = i;
            }
        }
        best
    }
}

type GainFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// Antenna power gain pattern `G(θ, φ)`; θ is the polar angle from +z and φ
/// the azimuth from +x, both in the world frame.
#[derive(Clone, Default)]
pub struct AntennaModel {
    pattern: Option<Arc<GainFn>>,
}

impl AntennaModel {
    pub fn isotropic() -> Self {
        AntennaModel { pattern: None }
    }

    pub fn from_fn(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        AntennaModel {
            pattern: Some(Arc::new(f)),
        }
    }

    pub fn is_isotropic(&self) -> bool {
        self.pattern.is_none()
    }

    /// Power gain towards direction `d` (need not be normalized).
    pub fn gain(&self, d: Point3) -> f64 {
        match &self.pattern {
            None => 1.0,
            Some(f) => {
                let r = d.norm();
                let theta = (d.z / r).clamp(-1.0, 1.0).acos();
                let phi = d.y.atan2(d.x);
                f(theta, phi).max(0.0)
            }
        }
    }
}

impl fmt::Debug for AntennaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_isotropic() {
            f.write_str("AntennaModel::Isotropic")
        } else {
            f.write_str("AntennaModel::Pattern")
        }
    }
}

/// Antenna patterns and propagation options shared by all synthesis calls.
#[derive(Debug, Clone, Default)]
pub struct ChannelModel {
    pub tx_gain: AntennaModel,
    pub rx_gain: AntennaModel,
    /// Zero out image paths whose specular point misses the wall segment.
    pub specular_gating: bool,
}

/// Channel from each transmit element to one receive point at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub entries: Vec<Complex64>,
    pub f: f64,
    pub ue: Point3,
}

impl ChannelVector {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|h| h.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Plain (non-conjugating) inner product `hᵀw`.
    pub fn dot(&self, w: &[Complex64]) -> Result<Complex64> {
        if w.len() != self.entries.len() {
            return Err(Error::DimensionMismatch {
                expected: self.entries.len(),
                got: w.len(),
            });
        }
        Ok(self.entries.iter().zip(w).map(|(h, w)| h * w).sum())
    }
}

/// Complex baseband amplitude at the receiver, in √W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phasor(pub Complex64);

/// Received over transmitted power.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PathGain {
    pub linear: f64,
}

impl PathGain {
    pub fn db(self) -> f64 {
        power_db(self.linear)
    }
}

/// Channel of one image source: `Γ·√(Gt·Gr)·λ/(4π‖r‖)·exp(−j2π‖r‖/λ)` per element.
pub fn smc_channel_vector(
    src: &MirrorSource,
    ue: Point3,
    f: f64,
    model: &ChannelModel,
) -> Result<ChannelVector> {
    let mut entries = vec![Complex64::new(0.0, 0.0); src.layout.len()];
    accumulate_smc(&mut entries, src, ue, f, model)?;
    Ok(ChannelVector { entries, f, ue })
}

fn accumulate_smc(
    out: &mut [Complex64],
    src: &MirrorSource,
    ue: Point3,
    f: f64,
    model: &ChannelModel,
) -> Result<()> {
    let lambda = wavelength(f);
    let k0 = 2.0 * PI / lambda;
    let isotropic = model.tx_gain.is_isotropic() && model.rx_gain.is_isotropic();
    for (m, (&elem, acc)) in src.layout.elements.iter().zip(out.iter_mut()).enumerate() {
        let r = ue - elem;
        let dist = r.norm();
        if !(dist > 0.0) {
            return Err(Error::DegenerateGeometry { element: m });
        }
        let mut amp = lambda / (4.0 * PI * dist);
        if let Some(wall) = &src.wall {
            if model.specular_gating
                && !wall.specular_point_within(crate::geometry::mirror_point(elem, wall), ue)
            {
                continue;
            }
        }
        if !isotropic {
            // departure direction at the physical antenna
            let departure = match &src.wall {
                Some(w) => {
                    let n = w.normal();
                    r - n * (2.0 * r.dot(n))
                }
                None => r,
            };
            amp *= (model.tx_gain.gain(departure) * model.rx_gain.gain(-r)).sqrt();
        }
        let (s, c) = (-k0 * dist).sin_cos();
        *acc += src.reflection_coeff * Complex64::new(amp * c, amp * s);
    }
    Ok(())
}

/// Superposition over image sources, accumulated in ascending `k`.
pub fn channel_vector(
    sources: &[MirrorSource],
    ue: Point3,
    f: f64,
    model: &ChannelModel,
) -> Result<ChannelVector> {
    let first = sources
        .first()
        .ok_or(Error::InvalidParameter("at least one source is required"))?;
    let m = first.layout.len();
    let mut entries = vec![Complex64::new(0.0, 0.0); m];
    for src in sources {
        if src.layout.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: src.layout.len(),
            });
        }
        accumulate_smc(&mut entries, src, ue, f, model)?;
    }
    Ok(ChannelVector { entries, f, ue })
}

/// Complex channel tensor over (tx element m, rx element n, frequency i).
///
/// Storage is frequency-major, then `n`, with `m` contiguous, which matches the
/// channel container layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    m: usize,
    n: usize,
    grid: FrequencyGrid,
    data: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn from_data(
        m: usize,
        n: usize,
        grid: FrequencyGrid,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        let expected = m * n * grid.len();
        if m == 0 || n == 0 {
            return Err(Error::EmptyArray);
        }
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: data.len(),
            });
        }
        Ok(ChannelMatrix { m, n, grid, data })
    }

    pub fn zeros(m: usize, n: usize, grid: FrequencyGrid) -> Self {
        let len = m * n * grid.len();
        ChannelMatrix {
            m,
            n,
            grid,
            data: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn tx_len(&self) -> usize {
        self.m
    }

    pub fn rx_len(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, m: usize, n: usize, i: usize) -> Complex64 {
        self.data[(i * self.n + n) * self.m + m]
    }

    /// Column of the MISO channel to rx element `n` at frequency index `i`.
    pub fn column(&self, n: usize, i: usize) -> &[Complex64] {
        let start = (i * self.n + n) * self.m;
        &self.data[start..start + self.m]
    }

    /// All `M×N` entries at frequency index `i`, `m` fastest.
    pub fn slice(&self, i: usize) -> &[Complex64] {
        let len = self.m * self.n;
        &self.data[i * len..(i + 1) * len]
    }

    /// Keeps the frequencies of `grid`, which must be a subset of this grid.
    pub fn select_frequencies(&self, grid: &FrequencyGrid) -> Result<Self> {
        let mut data = Vec::with_capacity(self.m * self.n * grid.len());
        let mut j = 0;
        for &f in grid.freqs() {
            while j < self.grid.len() && self.grid.freqs()[j] < f {
                j += 1;
            }
            if j == self.grid.len() || self.grid.freqs()[j] != f {
                return Err(Error::InvalidGrid("frequency not present in channel grid"));
            }
            data.extend_from_slice(self.slice(j));
        }
        ChannelMatrix::from_data(self.m, self.n, grid.clone(), data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|h| h.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Stacks the MISO channels from `tx` (through all walls) to every `rx` element
/// at every grid frequency.
pub fn channel_matrix(
    tx: &ArrayLayout,
    rx: &ArrayLayout,
    walls: &[WallSegment],
    grid: &FrequencyGrid,
    model: &ChannelModel,
) -> Result<ChannelMatrix> {
    let sources = mirror_sources(tx, walls);
    let (m, n) = (tx.len(), rx.len());
    let mut out = ChannelMatrix::zeros(m, n, grid.clone());

    let fill = |cell: usize, chunk: &mut [Complex64]| -> Result<()> {
        let (i, nn) = (cell / n, cell % n);
        let f = grid.freqs()[i];
        for src in &sources {
            accumulate_smc(chunk, src, rx.elements[nn], f, model)?;
        }
        Ok(())
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.data
            .par_chunks_mut(m)
            .enumerate()
            .try_for_each(|(cell, chunk)| fill(cell, chunk))?;
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (cell, chunk) in out.data.chunks_mut(m).enumerate() {
            fill(cell, chunk)?;
        }
    }
    Ok(out)
}

fn check_unit(w: &[Complex64]) -> Result<()> {
    let norm = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnitWeights(norm));
    }
    Ok(())
}

/// `α = hᵀw·√Pt` for unit-norm `w`.
pub fn received_phasor(h: &ChannelVector, w: &[Complex64], pt: f64) -> Result<Phasor> {
    if w.len() != h.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            got: w.len(),
        });
    }
    check_unit(w)?;
    if !(pt > 0.0) {
        return Err(Error::InvalidParameter("transmit power must be positive"));
    }
    Ok(Phasor(h.dot(w)? * pt.sqrt()))
}

/// `|α|²/Pt`.
pub fn path_gain(alpha: Phasor, pt: f64) -> Result<PathGain> {
    if !(pt > 0.0) {
        return Err(Error::InvalidParameter("transmit power must be positive"));
    }
    Ok(PathGain {
        linear: alpha.0.norm_sqr() / pt,
    })
}

/// Adds circularly-symmetric complex Gaussian noise at the given per-entry SNR,
/// relative to the mean entry power of `h`.
pub fn add_awgn(h: &ChannelMatrix, snr_db: f64, seed: u64) -> Result<ChannelMatrix> {
    if !snr_db.is_finite() {
        return Err(Error::InvalidParameter("snr_db must be finite"));
    }
    let mean_power = h.data.iter().map(|x| x.norm_sqr()).sum::<f64>() / h.data.len() as f64;
    let variance = mean_power / 10f64.powf(snr_db / 10.0);
    let mut out = h.clone();
    if variance == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, (variance / 2.0).sqrt())
        .map_err(|_| Error::InvalidParameter("noise variance"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for x in out.data.iter_mut() {
        let re = normal.sample(&mut rng);
        let im = normal.sample(&mut rng);
        *x += Complex64::new(re, im);
    }
    Ok(out)
}
