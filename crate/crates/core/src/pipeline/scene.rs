//! Scene description: arrays, walls, device position and frequency plan.
//!
//! Stored as versioned TOML. Lengths are meters, frequencies Hz, angles radians.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{wavelength, Band, FrequencyGrid};
use crate::error::{Error, Result};
use crate::geometry::{ula_layout, ura_layout, ArrayLayout, Point3, WallSegment};
use crate::imaging::ImagingWindow;

pub const SCENE_VERSION: u32 = 1;

/// How an antenna array is laid out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ArraySpec {
    Ula {
        n: usize,
        spacing: f64,
        center: Point3,
        axis: Point3,
    },
    Ura {
        rows: usize,
        cols: usize,
        spacing: f64,
        center: Point3,
        normal: Point3,
    },
    Elements {
        elements: Vec<Point3>,
    },
}

impl ArraySpec {
    pub fn layout(&self) -> Result<ArrayLayout> {
        match self {
            ArraySpec::Ula {
                n,
                spacing,
                center,
                axis,
            } => ula_layout(*n, *spacing, *center, *axis),
            ArraySpec::Ura {
                rows,
                cols,
                spacing,
                center,
                normal,
            } => ura_layout(*rows, *cols, *spacing, *center, *normal),
            ArraySpec::Elements { elements } => ArrayLayout::new("custom", elements.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

/// Rectangular imaging region in the horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// Defaults to the height of the first (tx) array.
    #[serde(default)]
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub version: u32,
    /// Array indexing the first channel dimension (the wall-mounted ULA).
    pub tx_array: ArraySpec,
    /// Array indexing the second channel dimension (the device-side URA).
    pub rx_array: ArraySpec,
    #[serde(default)]
    pub walls: Vec<WallSegment>,
    pub ue: Point3,
    pub bands: Vec<Band>,
    pub f_c: f64,
    pub pt: f64,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub window: Option<WindowSpec>,
}

impl Scene {
    /// Reference setup: a λ/2-spaced 51-element ULA and a λ/4-spaced 13×13
    /// URA 10 cm lower, in a corner formed by two metal walls, at
    /// f_c = 3.79 GHz over 3–10 GHz.
    pub fn reference() -> Self {
        let f_c = 3.79e9;
        let lambda = wavelength(f_c);
        let ura_center = Point3::new(0.3, 1.8, 1.4);
        Scene {
            version: SCENE_VERSION,
            tx_array: ArraySpec::Ula {
                n: 51,
                spacing: lambda / 2.0,
                center: Point3::new(0.0, 0.0, 1.5),
                axis: Point3::X,
            },
            rx_array: ArraySpec::Ura {
                rows: 13,
                cols: 13,
                spacing: lambda / 4.0,
                center: ura_center,
                normal: Point3::Z,
            },
            walls: vec![
                metal_wall(Point3::new(-1.5, 2.6, 0.0), Point3::new(1.5, 2.6, 0.0)),
                metal_wall(Point3::new(1.3, 0.3, 0.0), Point3::new(1.3, 3.0, 0.0)),
            ],
            ue: ura_center,
            bands: vec![Band::new(3e9, 10e9, 1000)],
            f_c,
            pt: 1.0,
            noise: None,
            window: Some(WindowSpec {
                x_min: -1.5,
                x_max: 1.8,
                y_min: 0.2,
                y_max: 3.0,
                z: None,
            }),
        }
    }

    /// The reference scene with a coarser frequency plan for quick runs.
    pub fn desk() -> Self {
        Scene {
            bands: vec![Band::new(3e9, 10e9, 200)],
            ..Scene::reference()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCENE_VERSION {
            return Err(Error::Scene(format!(
                "version: unsupported scene version {} (expected {SCENE_VERSION})",
                self.version
            )));
        }
        self.tx_array
            .layout()
            .map_err(|e| Error::Scene(format!("tx_array: {e}")))?;
        self.rx_array
            .layout()
            .map_err(|e| Error::Scene(format!("rx_array: {e}")))?;
        for (i, w) in self.walls.iter().enumerate() {
            WallSegment::with_reflection(w.a, w.b, w.height_m, w.reflection_coeff)
                .map_err(|e| Error::Scene(format!("walls[{i}]: {e}")))?;
        }
        if !self.ue.is_finite() {
            return Err(Error::Scene("ue: non-finite position".into()));
        }
        if !(self.pt > 0.0) {
            return Err(Error::Scene("pt: transmit power must be positive".into()));
        }
        self.grid()
            .map_err(|e| Error::Scene(format!("bands: {e}")))?;
        if !self.bands.iter().any(|b| b.contains(self.f_c)) {
            return Err(Error::Scene("f_c: carrier lies outside every band".into()));
        }
        if let Some(w) = &self.window {
            if !(w.x_max > w.x_min && w.y_max > w.y_min) {
                return Err(Error::Scene("window: empty extent".into()));
            }
        }
        Ok(())
    }

    pub fn tx_layout(&self) -> Result<ArrayLayout> {
        self.tx_array.layout()
    }

    pub fn rx_layout(&self) -> Result<ArrayLayout> {
        self.rx_array.layout()
    }

    pub fn grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::from_bands(&self.bands)
    }

    /// Imaging window with `grid_px` pixels along the longer side.
    ///
    /// Without an explicit window the bounding box of both arrays plus 0.5 m
    /// is used.
    pub fn imaging_window(&self, grid_px: usize) -> Result<ImagingWindow> {
        if grid_px < 2 {
            return Err(Error::InvalidParameter("grid_px must be >= 2"));
        }
        let tx = self.tx_layout()?;
        let rx = self.rx_layout()?;
        let spec = match self.window {
            Some(w) => w,
            None => {
                let pts = tx.elements.iter().chain(&rx.elements);
                let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
                for p in pts {
                    x0 = x0.min(p.x);
                    x1 = x1.max(p.x);
                    y0 = y0.min(p.y);
                    y1 = y1.max(p.y);
                }
                WindowSpec {
                    x_min: x0 - 0.5,
                    x_max: x1 + 0.5,
                    y_min: y0 - 0.5,
                    y_max: y1 + 0.5,
                    z: None,
                }
            }
        };
        let (w, h) = (spec.x_max - spec.x_min, spec.y_max - spec.y_min);
        let step = w.max(h) / (grid_px - 1) as f64;
        let nu = (w / step).round() as usize + 1;
        let nv = (h / step).round() as usize + 1;
        let z = spec.z.unwrap_or_else(|| tx.centroid().z);
        ImagingWindow::axis_aligned(spec.x_min, spec.y_min, nu, nv, step, z)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Scene(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::Scene(e.to_string()))?;
        let scene: Scene = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                Error::Scene(inner.message().to_string())
            } else {
                Error::Scene(format!("{path}: {}", inner.message()))
            }
        })?;
        scene.validate()?;
        Ok(scene)
    }
}

fn metal_wall(a: Point3, b: Point3) -> WallSegment {
    WallSegment::with_reflection(a, b, None, Complex64::new(-1.0, 0.0)).expect("valid wall")
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Scene::from_toml(&text)
}

pub fn save_scene(scene: &Scene, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scene.to_toml()?).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_geometry() {
        let s = Scene::reference();
        s.validate().unwrap();
        let tx = s.tx_layout().unwrap();
        let rx = s.rx_layout().unwrap();
        assert_eq!(tx.len(), 51);
        assert_eq!(rx.len(), 169);
        assert!((tx.elements[1].x - tx.elements[0].x - 0.039551).abs() < 1e-6);
        assert!((rx.elements[1].x - rx.elements[0].x - 0.019775).abs() < 1e-6);
        assert_eq!(s.f_c, 3.79e9);
        assert_eq!(s.grid().unwrap().len(), 1000);
        assert!(rx.centroid().distance(s.ue) < 1e-12);
    }

    #[test]
    fn toml_round_trip() {
        let mut s = Scene::reference();
        s.noise = Some(NoiseSpec {
            snr_db: 17.5,
            seed: 99,
        });
        s.walls[1].reflection_coeff = Complex64::new(-0.7, 0.1);
        s.walls[0].height_m = Some(2.5);
        let text = s.to_toml().unwrap();
        assert_eq!(Scene::from_toml(&text).unwrap(), s);
    }

    #[test]
    fn missing_ue_is_named() {
        let mut table: toml::Table = Scene::reference().to_toml().unwrap().parse().unwrap();
        table.remove("ue");
        let err = Scene::from_toml(&table.to_string())
            .unwrap_err()
            .to_string();
        assert!(err.contains("ue"), "{err}");
        assert!(err.contains("missing"), "{err}");
    }

    #[test]
    fn schema_errors_carry_path() {
        let text = Scene::reference()
            .to_toml()
            .unwrap()
            .replace("count = 1000", "count = \"many\"");
        let err = Scene::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("bands[0].count"), "{err}");

        let mut s = Scene::reference();
        s.f_c = 20e9;
        let err = Scene::from_toml(&s.to_toml().unwrap())
            .unwrap_err()
            .to_string();
        assert!(err.contains("f_c"), "{err}");
    }

    #[test]
    fn window_from_grid_px() {
        let s = Scene::reference();
        let w = s.imaging_window(200).unwrap();
        assert_eq!((w.nu, w.nv), (200, 170));
        assert!((w.step - 3.3 / 199.0).abs() < 1e-15);
        assert_eq!(w.z_plane, 1.5);

        let mut auto = s.clone();
        auto.window = None;
        let w = auto.imaging_window(50).unwrap();
        assert!(w.nu >= 2 && w.nv >= 2);
    }
}
