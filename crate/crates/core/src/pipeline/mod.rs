//! End-to-end orchestration: synthesize (or load) a channel, image it,
//! extract walls, build image sources and evaluate geometry-based WPT.

mod container;
mod export;
mod scene;

use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use container::{
    container_len, decode_channel, encode_channel, load_channel, quantize, save_channel,
    CONTAINER_VERSION, HEADER_LEN, MAGIC,
};
pub use export::{
    db_pgm, edges_pgm, map_csv, parse_map_csv, read_json, read_text, report_csv, sweep_csv,
    to_json, write_file, MapMeta, SweepResult,
};
pub use scene::{load_scene, save_scene, ArraySpec, NoiseSpec, Scene, WindowSpec, SCENE_VERSION};

use crate::channel::{
    add_awgn, channel_matrix, channel_vector, ChannelMatrix, ChannelModel, ChannelVector,
    FrequencyGrid,
};
use crate::error::{Error, Result, StageExt};
use crate::geometry::{mirror_sources, MirrorSource, Point3, WallSegment};
use crate::imaging::{reflectivity_map, to_db, DbImage, ImagingWindow, ReflectivityMap};
use crate::vision::{
    canny_edges, hough_lines, lines_to_walls, CannyParams, EdgeMap, HoughParams, LineEstimate,
};
use crate::wpt::{
    beamform, geometry_weights, pg_sweep, predicted_channel, PhaseFeedback, WptReport,
};

/// Closed frequency interval used to restrict a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqRange {
    pub f_lo: f64,
    pub f_hi: f64,
}

impl FreqRange {
    pub fn new(f_lo: f64, f_hi: f64) -> Self {
        FreqRange { f_lo, f_hi }
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.f_lo && f <= self.f_hi
    }
}

impl FromStr for FreqRange {
    type Err = Error;

    /// Parses `lo:hi` in Hz, e.g. `3.74e9:3.84e9`.
    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or(Error::InvalidParameter("band must be written lo:hi"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter("band edge is not a number"))
        };
        let r = FreqRange::new(parse(lo)?, parse(hi)?);
        if !(r.f_lo > 0.0 && r.f_hi >= r.f_lo && r.f_hi.is_finite()) {
            return Err(Error::InvalidParameter(
                "band edges must satisfy 0 < lo <= hi",
            ));
        }
        Ok(r)
    }
}

/// Parses a comma-separated list of `lo:hi` ranges.
pub fn parse_bands(s: &str) -> Result<Vec<FreqRange>> {
    s.split(',').map(str::parse).collect()
}

/// Keeps the frequencies of `grid` that fall inside any of `bands`.
pub fn restrict_bands(grid: &FrequencyGrid, bands: &[FreqRange]) -> Result<FrequencyGrid> {
    let freqs = grid.freqs();
    let (lo, hi) = (freqs[0], freqs[freqs.len() - 1]);
    let slack = 1e-9 * hi;
    for b in bands {
        if b.f_lo < lo - slack || b.f_hi > hi + slack || b.f_hi < b.f_lo {
            return Err(Error::InvalidGrid(
                "requested band lies outside the measured span",
            ));
        }
    }
    let kept: Vec<f64> = freqs
        .iter()
        .copied()
        .filter(|&f| bands.iter().any(|b| b.contains(f)))
        .collect();
    if kept.is_empty() {
        return Err(Error::InvalidGrid(
            "no frequencies inside the requested bands",
        ));
    }
    FrequencyGrid::from_freqs(kept)
}

/// Square grid of evaluation points around the device, in its horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub half_width: f64,
    pub points: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            half_width: 0.25,
            points: 51,
        }
    }
}

impl SweepSpec {
    /// Row-major points, `y` outer and `x` inner.
    pub fn points_around(&self, center: Point3) -> Result<Vec<Point3>> {
        if self.points < 2 || !(self.half_width > 0.0) {
            return Err(Error::InvalidParameter(
                "sweep needs >= 2 points and positive width",
            ));
        }
        let step = 2.0 * self.half_width / (self.points - 1) as f64;
        let mut out = Vec::with_capacity(self.points * self.points);
        for r in 0..self.points {
            for c in 0..self.points {
                out.push(Point3::new(
                    center.x - self.half_width + step * c as f64,
                    center.y - self.half_width + step * r as f64,
                    center.z,
                ));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Pixels along the longer side of the imaging window.
    pub grid_px: usize,
    /// Use every n-th frequency for imaging.
    pub freq_stride: usize,
    /// Restrict imaging to these ranges.
    pub bands: Option<Vec<FreqRange>>,
    pub dynamic_range_db: f64,
    /// Edge settings; the defaults suit thin wall ridges at centimeter pitch.
    pub canny: CannyParams,
    pub hough: HoughParams,
    /// Vertical extent given to detected walls; unbounded when absent.
    pub wall_height: Option<f64>,
    /// Skip imaging and vision and use the scene walls.
    pub true_geometry: bool,
    pub feedback: PhaseFeedback,
    pub sweep: Option<SweepSpec>,
    /// Overrides the scene noise seed.
    pub seed: Option<u64>,
    /// Overrides the scene SNR.
    pub snr_db: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            grid_px: 200,
            freq_stride: 1,
            bands: None,
            dynamic_range_db: 60.0,
            canny: CannyParams {
                sigma: 0.75,
                low: 0.2,
                high: 0.4,
            },
            hough: HoughParams {
                nms: (15, 9),
                min_len: 55.0,
                ..HoughParams::default()
            },
            wall_height: None,
            true_geometry: false,
            feedback: PhaseFeedback::default(),
            sweep: None,
            seed: None,
            snr_db: None,
        }
    }
}

impl PipelineConfig {
    /// Noise level and seed after applying overrides to the scene settings.
    pub fn noise(&self, scene: &Scene) -> Option<(f64, u64)> {
        let snr = self.snr_db.or(scene.noise.map(|n| n.snr_db))?;
        let seed = self.seed.or(scene.noise.map(|n| n.seed)).unwrap_or(0);
        Some((snr, seed))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageTiming {
    pub stage: &'static str,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Imaging {
    pub map: ReflectivityMap,
    pub db: DbImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vision {
    pub edges: EdgeMap,
    pub lines: Vec<LineEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub window: ImagingWindow,
    /// Absent when the true geometry bypasses sensing.
    pub imaging: Option<Imaging>,
    pub vision: Option<Vision>,
    pub walls: Vec<WallSegment>,
    pub mirrors: Vec<MirrorSource>,
    pub report: WptReport,
    pub sweep: Option<SweepResult>,
    pub timings: Vec<StageTiming>,
}

/// Imaging grid: the channel grid restricted to the configured bands, then decimated.
pub fn imaging_grid(base: &FrequencyGrid, config: &PipelineConfig) -> Result<FrequencyGrid> {
    let g = match &config.bands {
        Some(b) => restrict_bands(base, b)?,
        None => base.clone(),
    };
    g.decimate(config.freq_stride)
}

/// Synthesizes the scene channel on `grid`, with noise when configured.
pub fn synthesize(
    scene: &Scene,
    grid: &FrequencyGrid,
    config: &PipelineConfig,
) -> Result<ChannelMatrix> {
    let h = channel_matrix(
        &scene.tx_layout()?,
        &scene.rx_layout()?,
        &scene.walls,
        grid,
        &ChannelModel::default(),
    )?;
    match config.noise(scene) {
        Some((snr, seed)) => add_awgn(&h, snr, seed),
        None => Ok(h),
    }
}

pub fn image(scene: &Scene, h: &ChannelMatrix, config: &PipelineConfig) -> Result<Imaging> {
    let window = scene.imaging_window(config.grid_px)?;
    let grid = imaging_grid(h.grid(), config)?;
    let h = if grid.len() == h.grid().len() {
        std::borrow::Cow::Borrowed(h)
    } else {
        std::borrow::Cow::Owned(h.select_frequencies(&grid)?)
    };
    let map = reflectivity_map(&h, &scene.tx_layout()?, &scene.rx_layout()?, &window)?;
    let db = to_db(&map, config.dynamic_range_db)?;
    Ok(Imaging { map, db })
}

pub fn extract_walls(
    db: &DbImage,
    window: &ImagingWindow,
    config: &PipelineConfig,
) -> Result<(Vision, Vec<WallSegment>)> {
    let c = &config.canny;
    let edges = canny_edges(&db.to_gray(), c.sigma, c.low, c.high)?;
    let lines = hough_lines(&edges, &config.hough)?;
    let walls = lines_to_walls(&lines, window, config.wall_height.unwrap_or(0.0));
    Ok((Vision { edges, lines }, walls))
}

pub fn estimate_mirrors(scene: &Scene, walls: &[WallSegment]) -> Result<Vec<MirrorSource>> {
    Ok(mirror_sources(&scene.tx_layout()?, walls))
}

/// Channel to the device: from the geometric model, or from the rx element
/// closest to the device at the grid frequency closest to the carrier.
pub fn true_channel(scene: &Scene, measured: Option<&ChannelMatrix>) -> Result<ChannelVector> {
    match measured {
        None => {
            let sources = mirror_sources(&scene.tx_layout()?, &scene.walls);
            channel_vector(&sources, scene.ue, scene.f_c, &ChannelModel::default())
        }
        Some(h) => {
            let rx = scene.rx_layout()?;
            check_dims(scene, h)?;
            let mut n_best = 0;
            for (n, p) in rx.elements.iter().enumerate() {
                if p.distance(scene.ue) < rx.elements[n_best].distance(scene.ue) {
                    n_best = n;
                }
            }
            let i = h.grid().nearest(scene.f_c);
            Ok(ChannelVector {
                entries: h.column(n_best, i).to_vec(),
                f: h.grid().freqs()[i],
                ue: rx.elements[n_best],
            })
        }
    }
}

fn check_dims(scene: &Scene, h: &ChannelMatrix) -> Result<()> {
    let (m, n) = (scene.tx_layout()?.len(), scene.rx_layout()?.len());
    if h.tx_len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: h.tx_len(),
        });
    }
    if h.rx_len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: h.rx_len(),
        });
    }
    Ok(())
}

pub fn evaluate_wpt(
    scene: &Scene,
    mirrors: &[MirrorSource],
    h_true: &ChannelVector,
    config: &PipelineConfig,
) -> Result<WptReport> {
    let predicted = predicted_channel(mirrors, scene.ue, scene.f_c, &ChannelModel::default())?;
    beamform(h_true, &predicted, scene.pt, config.feedback)
}

/// Path gain of the optimized and unoptimized composite beams around the
/// device. With a measured channel the rx elements are the evaluation points.
pub fn sweep(
    scene: &Scene,
    mirrors: &[MirrorSource],
    report: &WptReport,
    spec: &SweepSpec,
    measured: Option<&ChannelMatrix>,
) -> Result<SweepResult> {
    let model = ChannelModel::default();
    let predicted = predicted_channel(mirrors, scene.ue, scene.f_c, &model)?;
    let w_pred = geometry_weights(&predicted)?.w;
    let w_opt = &report.weights.w;
    match measured {
        None => {
            let points = spec.points_around(scene.ue)?;
            let sources = mirror_sources(&scene.tx_layout()?, &scene.walls);
            Ok(SweepResult {
                pg_optimized: pg_sweep(w_opt, &points, &sources, scene.f_c, scene.pt, &model)?,
                pg_predicted: pg_sweep(&w_pred, &points, &sources, scene.f_c, scene.pt, &model)?,
                points,
            })
        }
        Some(h) => {
            check_dims(scene, h)?;
            let i = h.grid().nearest(scene.f_c);
            let points = scene.rx_layout()?.elements;
            let pg = |w: &[num_complex::Complex64]| -> Vec<Option<f64>> {
                (0..points.len())
                    .map(|n| {
                        let a: num_complex::Complex64 =
                            h.column(n, i).iter().zip(w).map(|(x, y)| x * y).sum();
                        Some(crate::channel::power_db(a.norm_sqr()))
                    })
                    .collect()
            };
            Ok(SweepResult {
                pg_optimized: pg(w_opt),
                pg_predicted: pg(&w_pred),
                points,
            })
        }
    }
}

fn timed<T>(
    timings: &mut Vec<StageTiming>,
    stage: &'static str,
    f: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let t0 = Instant::now();
    let out = f().stage(stage)?;
    timings.push(StageTiming {
        stage,
        seconds: t0.elapsed().as_secs_f64(),
    });
    Ok(out)
}

/// Runs every stage on a synthesized channel.
pub fn run_pipeline(scene: &Scene, config: &PipelineConfig) -> Result<PipelineResult> {
    run(scene, config, None)
}

/// Runs every stage on a measured channel; the scene supplies array
/// geometry, device position and carrier.
pub fn run_pipeline_measured(
    scene: &Scene,
    config: &PipelineConfig,
    measured: &ChannelMatrix,
) -> Result<PipelineResult> {
    run(scene, config, Some(measured))
}

fn run(
    scene: &Scene,
    config: &PipelineConfig,
    measured: Option<&ChannelMatrix>,
) -> Result<PipelineResult> {
    let mut timings = Vec::new();
    scene.validate().stage("scene")?;
    let window = scene.imaging_window(config.grid_px).stage("scene")?;

    let (imaging, vision, walls) = if config.true_geometry {
        (None, None, scene.walls.clone())
    } else {
        let synthesized;
        let h = match measured {
            Some(h) => {
                check_dims(scene, h).stage("load")?;
                h
            }
            None => {
                synthesized = timed(&mut timings, "synth", || {
                    synthesize(scene, &scene.grid()?, config)
                })?;
                &synthesized
            }
        };
        let imaging = timed(&mut timings, "image", || image(scene, h, config))?;
        let (vision, walls) = timed(&mut timings, "walls", || {
            extract_walls(&imaging.db, &window, config)
        })?;
        (Some(imaging), Some(vision), walls)
    };

    let mirrors = timed(&mut timings, "mirrors", || estimate_mirrors(scene, &walls))?;
    let report = timed(&mut timings, "beamform", || {
        let h_true = true_channel(scene, measured)?;
        evaluate_wpt(scene, &mirrors, &h_true, config)
    })?;
    let sweep = match &config.sweep {
        Some(spec) => Some(timed(&mut timings, "sweep", || {
            sweep(scene, &mirrors, &report, spec, measured)
        })?),
        None => None,
    };
    Ok(PipelineResult {
        window,
        imaging,
        vision,
        walls,
        mirrors,
        report,
        sweep,
        timings,
    })
}

/// Writes every artifact of `result` into `dir`. Timings are not written so
/// identical runs produce identical files.
pub fn write_outputs(result: &PipelineResult, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: &str, bytes: Vec<u8>| -> Result<()> {
        let p = dir.join(name);
        write_file(&p, bytes)?;
        written.push(p);
        Ok(())
    };
    if let Some(im) = &result.imaging {
        put("map.csv", map_csv(&im.map).into_bytes())?;
        put("map.json", to_json(&MapMeta::of(&im.map)).into_bytes())?;
        put("map.pgm", db_pgm(&im.db))?;
    }
    if let Some(v) = &result.vision {
        put("edges.pgm", edges_pgm(&v.edges))?;
        put("lines.json", to_json(&v.lines).into_bytes())?;
    }
    put("walls.json", to_json(&result.walls).into_bytes())?;
    put("mirrors.json", to_json(&result.mirrors).into_bytes())?;
    put("report.json", to_json(&result.report).into_bytes())?;
    put("report.csv", report_csv(&result.report).into_bytes())?;
    if let Some(s) = &result.sweep {
        put("sweep.csv", sweep_csv(s).into_bytes())?;
    }
    Ok(written)
}
