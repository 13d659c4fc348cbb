//! Browser bindings: wall sensing and beam sweeps on a small adjustable room.

use wasm_bindgen::prelude::*;

use num_complex::Complex64;
use wallsense::channel::Band;
use wallsense::error::Result;
use wallsense::geometry::{Point3, WallSegment};
use wallsense::pipeline::{self, to_json, ArraySpec, PipelineConfig, Scene, SweepSpec, WindowSpec};

/// Room layout controlled from the page.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Room {
    /// Depth of the back wall, m.
    pub back_y: f64,
    /// Position of the side wall, m.
    pub side_x: f64,
    pub ue_x: f64,
    pub ue_y: f64,
}

impl Room {
    /// The desk scene with walls, device and frequency count replaced.
    pub fn scene(&self, freqs: usize) -> Result<Scene> {
        let metal = |a: Point3, b: Point3| {
            WallSegment::with_reflection(a, b, None, Complex64::new(-1.0, 0.0))
        };
        let ue = Point3::new(self.ue_x, self.ue_y, 1.4);
        let mut scene = Scene::desk();
        if let ArraySpec::Ura { center, .. } = &mut scene.rx_array {
            *center = ue;
        }
        scene.ue = ue;
        scene.walls = vec![
            metal(
                Point3::new(-1.5, self.back_y, 0.0),
                Point3::new(1.5, self.back_y, 0.0),
            )?,
            metal(
                Point3::new(self.side_x, 0.3, 0.0),
                Point3::new(self.side_x, self.back_y + 0.4, 0.0),
            )?,
        ];
        scene.bands = vec![Band::new(3e9, 10e9, freqs)];
        scene.window = Some(WindowSpec {
            x_min: -1.5,
            x_max: self.side_x + 0.5,
            y_min: 0.2,
            y_max: self.back_y + 0.4,
            z: None,
        });
        scene.validate()?;
        Ok(scene)
    }
}

/// Pixels along the longer side of the demo map.
pub const GRID_PX: usize = 100;

/// Pipeline settings for the coarser demo map.
pub fn demo_config() -> PipelineConfig {
    let mut c = PipelineConfig {
        grid_px: GRID_PX,
        ..PipelineConfig::default()
    };
    c.canny.sigma = 1.0;
    c.hough.nms = (8, 9);
    c.hough.min_len = 30.0;
    c
}

/// dB image, detected lines and path gains of one sensing run.
#[wasm_bindgen]
pub struct SenseView {
    rows: usize,
    cols: usize,
    db: Vec<f32>,
    lines: String,
    walls: String,
    report: [f64; 3],
}

#[wasm_bindgen]
impl SenseView {
    #[wasm_bindgen(getter)]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[wasm_bindgen(getter)]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major dB values, row 0 at the smallest `y`.
    pub fn db(&self) -> Vec<f32> {
        self.db.clone()
    }

    /// Detected lines as JSON, in pixel coordinates.
    pub fn lines(&self) -> String {
        self.lines.clone()
    }

    /// Estimated walls as JSON, in meters.
    pub fn walls(&self) -> String {
        self.walls.clone()
    }

    /// `[predicted, optimized, perfect]` path gain, dB.
    pub fn report(&self) -> Vec<f64> {
        self.report.to_vec()
    }
}

pub fn sense_room(room: Room, freqs: usize) -> Result<SenseView> {
    let scene = room.scene(freqs)?;
    let r = pipeline::run_pipeline(&scene, &demo_config())?;
    let imaging = r.imaging.expect("sensing runs when geometry is estimated");
    let vision = r.vision.expect("sensing runs when geometry is estimated");
    Ok(SenseView {
        rows: imaging.db.rows,
        cols: imaging.db.cols,
        db: imaging.db.values.iter().map(|&v| v as f32).collect(),
        lines: to_json(&vision.lines),
        walls: to_json(&r.walls),
        report: [
            r.report.pg_predicted,
            r.report.pg_optimized,
            r.report.pg_perfect,
        ],
    })
}

/// Images the room and extracts its walls.
#[wasm_bindgen]
pub fn sense(
    back_y: f64,
    side_x: f64,
    ue_x: f64,
    ue_y: f64,
    freqs: usize,
) -> std::result::Result<SenseView, JsError> {
    let room = Room {
        back_y,
        side_x,
        ue_x,
        ue_y,
    };
    sense_room(room, freqs).map_err(|e| JsError::new(&e.to_string()))
}

/// Path gain maps around the device for the optimized and unoptimized beams.
#[wasm_bindgen]
pub struct SweepView {
    points: usize,
    optimized: Vec<f32>,
    predicted: Vec<f32>,
    report: [f64; 3],
}

#[wasm_bindgen]
impl SweepView {
    /// Samples per side; maps are row-major with `y` outer.
    #[wasm_bindgen(getter)]
    pub fn points(&self) -> usize {
        self.points
    }

    /// Path gain with optimized beam phases, dB; NaN where undefined.
    pub fn optimized(&self) -> Vec<f32> {
        self.optimized.clone()
    }

    /// Path gain with the geometry beams as predicted, dB; NaN where undefined.
    pub fn predicted(&self) -> Vec<f32> {
        self.predicted.clone()
    }

    /// `[predicted, optimized, perfect]` path gain at the device, dB.
    pub fn report(&self) -> Vec<f64> {
        self.report.to_vec()
    }
}

/// Beamforms from walls displaced by `error_m` along their normals and sweeps
/// path gain over a square of half-width `half_width` around the device.
pub fn sweep_room(room: Room, error_m: f64, half_width: f64, points: usize) -> Result<SweepView> {
    let scene = room.scene(2)?;
    let walls = scene
        .walls
        .iter()
        .map(|w| {
            let d = w.normal() * error_m;
            WallSegment::new(w.a + d, w.b + d)
        })
        .collect::<Result<Vec<_>>>()?;
    let config = PipelineConfig::default();
    let mirrors = pipeline::estimate_mirrors(&scene, &walls)?;
    let h = pipeline::true_channel(&scene, None)?;
    let report = pipeline::evaluate_wpt(&scene, &mirrors, &h, &config)?;
    let spec = SweepSpec { half_width, points };
    let s = pipeline::sweep(&scene, &mirrors, &report, &spec, None)?;
    let f32s = |v: &[Option<f64>]| v.iter().map(|x| x.map_or(f32::NAN, |d| d as f32)).collect();
    Ok(SweepView {
        points,
        optimized: f32s(&s.pg_optimized),
        predicted: f32s(&s.pg_predicted),
        report: [report.pg_predicted, report.pg_optimized, report.pg_perfect],
    })
}

#[wasm_bindgen]
pub fn sweep(
    back_y: f64,
    side_x: f64,
    ue_x: f64,
    ue_y: f64,
    error_m: f64,
    half_width: f64,
    points: usize,
) -> std::result::Result<SweepView, JsError> {
    let room = Room {
        back_y,
        side_x,
        ue_x,
        ue_y,
    };
    sweep_room(room, error_m, half_width, points).map_err(|e| JsError::new(&e.to_string()))
}
