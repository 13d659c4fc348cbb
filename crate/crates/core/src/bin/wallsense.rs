use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wallsense::error::{Error, Result, StageExt};
use wallsense::geometry::{MirrorSource, WallSegment};
use wallsense::imaging::to_db;
use wallsense::pipeline::{
    self, db_pgm, edges_pgm, load_channel, load_scene, map_csv, parse_bands, parse_map_csv,
    read_json, read_text, report_csv, save_channel, save_scene, sweep_csv, to_json, write_file,
    MapMeta, PipelineConfig, Scene, SweepSpec,
};

#[derive(Parser)]
#[command(
    name = "wallsense",
    version,
    about = "Wall sensing and geometry-based beamforming"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the reference scene file.
    Init {
        #[arg(long, default_value = "scene.toml")]
        out: PathBuf,
        /// Use the full 1000-point frequency plan instead of the 200-point one.
        #[arg(long)]
        full: bool,
    },
    /// Synthesize the scene channel into a container.
    Synth(Common),
    /// Form the reflectivity map from a channel container.
    Image {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        channel: Option<PathBuf>,
    },
    /// Extract lines and walls from an exported map.
    Walls {
        #[command(flatten)]
        common: Common,
        /// Map CSV; defaults to map.csv in the output directory.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Build image sources from a wall file.
    Mirrors {
        #[command(flatten)]
        common: Common,
        /// Wall JSON; defaults to walls.json in the output directory.
        #[arg(long)]
        walls: Option<PathBuf>,
    },
    /// Evaluate geometry-based beamforming at the device.
    Beamform {
        #[command(flatten)]
        common: Common,
        /// Image-source JSON; defaults to mirrors.json in the output directory.
        #[arg(long)]
        mirrors: Option<PathBuf>,
        /// Measured channel container providing the true channel.
        #[arg(long)]
        channel: Option<PathBuf>,
    },
    /// Run every stage end to end.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        channel: Option<PathBuf>,
        /// Also export a path-gain sweep around the device.
        #[arg(long)]
        sweep: bool,
    },
    /// Export path gain around the device for the optimized and unoptimized beams.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mirrors: Option<PathBuf>,
        #[arg(long)]
        channel: Option<PathBuf>,
        #[arg(long, default_value_t = SweepSpec::default().half_width)]
        half_width: f64,
        #[arg(long, default_value_t = SweepSpec::default().points)]
        points: usize,
    },
}

#[derive(Args)]
struct Common {
    /// Scene file; the built-in desk scene when omitted.
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Restrict imaging to bands, e.g. 3.74e9:3.84e9,5.9e9:7.1e9 (Hz).
    #[arg(long)]
    bands: Option<String>,
    #[arg(long)]
    grid_px: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    snr_db: Option<f64>,
    /// Use the scene walls instead of the estimated ones.
    #[arg(long)]
    true_geometry: bool,
    #[arg(long)]
    freq_stride: Option<usize>,
    /// Pipeline configuration (JSON); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn scene(&self) -> Result<Scene> {
        match &self.scene {
            Some(p) => load_scene(p),
            None => Ok(Scene::desk()),
        }
        .stage("scene")
    }

    fn config(&self) -> Result<PipelineConfig> {
        let mut c: PipelineConfig = match &self.config {
            Some(p) => read_json(p).stage("config")?,
            None => PipelineConfig::default(),
        };
        if let Some(b) = &self.bands {
            c.bands = Some(parse_bands(b).stage("config")?);
        }
        if let Some(v) = self.grid_px {
            c.grid_px = v;
        }
        if let Some(v) = self.freq_stride {
            c.freq_stride = v;
        }
        c.seed = self.seed.or(c.seed);
        c.snr_db = self.snr_db.or(c.snr_db);
        c.true_geometry |= self.true_geometry;
        Ok(c)
    }

    fn out(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| Error::io(&self.out_dir, e))?;
        Ok(self.out_dir.join(name))
    }

    fn input(&self, given: &Option<PathBuf>, name: &str) -> PathBuf {
        given.clone().unwrap_or_else(|| self.out_dir.join(name))
    }
}

fn channel_or_synth(
    scene: &Scene,
    config: &PipelineConfig,
    path: &Option<PathBuf>,
) -> Result<wallsense::channel::ChannelMatrix> {
    match path {
        Some(p) => load_channel(p).stage("load"),
        None => scene
            .grid()
            .and_then(|g| pipeline::synthesize(scene, &g, config))
            .stage("synth"),
    }
}

fn mirrors_for(
    common: &Common,
    scene: &Scene,
    config: &PipelineConfig,
    given: &Option<PathBuf>,
) -> Result<Vec<MirrorSource>> {
    if config.true_geometry {
        return pipeline::estimate_mirrors(scene, &scene.walls).stage("mirrors");
    }
    read_json(&common.input(given, "mirrors.json")).stage("mirrors")
}

fn put(path: PathBuf, bytes: impl AsRef<[u8]>) -> Result<()> {
    write_file(&path, bytes)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Init { out, full } => {
            let scene = if full {
                Scene::reference()
            } else {
                Scene::desk()
            };
            save_scene(&scene, &out).stage("scene")?;
            println!("wrote {}", out.display());
        }
        Command::Synth(common) => {
            let scene = common.scene()?;
            let config = common.config()?;
            let h = pipeline::synthesize(&scene, &scene.grid().stage("synth")?, &config)
                .stage("synth")?;
            let path = common.out("channel.bchx")?;
            save_channel(&h, &path).stage("synth")?;
            println!("wrote {}", path.display());
        }
        Command::Image { common, channel } => {
            let scene = common.scene()?;
            let config = common.config()?;
            let h = channel_or_synth(&scene, &config, &channel)?;
            let im = pipeline::image(&scene, &h, &config).stage("image")?;
            put(common.out("map.csv")?, map_csv(&im.map))?;
            put(common.out("map.json")?, to_json(&MapMeta::of(&im.map)))?;
            put(common.out("map.pgm")?, db_pgm(&im.db))?;
        }
        Command::Walls { common, map } => {
            let config = common.config()?;
            let map_path = common.input(&map, "map.csv");
            let meta: MapMeta = read_json(&map_path.with_extension("json")).stage("walls")?;
            let map = parse_map_csv(&read_text(&map_path).stage("walls")?, &meta).stage("walls")?;
            let db = to_db(&map, config.dynamic_range_db).stage("walls")?;
            let (vision, walls) =
                pipeline::extract_walls(&db, &meta.window, &config).stage("walls")?;
            put(common.out("edges.pgm")?, edges_pgm(&vision.edges))?;
            put(common.out("lines.json")?, to_json(&vision.lines))?;
            put(common.out("walls.json")?, to_json(&walls))?;
        }
        Command::Mirrors { common, walls } => {
            let scene = common.scene()?;
            let config = common.config()?;
            let walls: Vec<WallSegment> = if config.true_geometry {
                scene.walls.clone()
            } else {
                read_json(&common.input(&walls, "walls.json")).stage("mirrors")?
            };
            let mirrors = pipeline::estimate_mirrors(&scene, &walls).stage("mirrors")?;
            put(common.out("mirrors.json")?, to_json(&mirrors))?;
        }
        Command::Beamform {
            common,
            mirrors,
            channel,
        } => {
            let scene = common.scene()?;
            let config = common.config()?;
            let mirrors = mirrors_for(&common, &scene, &config, &mirrors)?;
            let measured = channel
                .as_ref()
                .map(load_channel)
                .transpose()
                .stage("load")?;
            let report = pipeline::true_channel(&scene, measured.as_ref())
                .and_then(|h| pipeline::evaluate_wpt(&scene, &mirrors, &h, &config))
                .stage("beamform")?;
            put(common.out("report.json")?, to_json(&report))?;
            put(common.out("report.csv")?, report_csv(&report))?;
            print_summary(&report);
        }
        Command::Pipeline {
            common,
            channel,
            sweep,
        } => {
            let scene = common.scene()?;
            let mut config = common.config()?;
            if sweep {
                config.sweep.get_or_insert_with(SweepSpec::default);
            }
            let result = match &channel {
                Some(p) => {
                    let h = load_channel(p).stage("load")?;
                    pipeline::run_pipeline_measured(&scene, &config, &h)?
                }
                None => pipeline::run_pipeline(&scene, &config)?,
            };
            for p in pipeline::write_outputs(&result, &common.out_dir).stage("export")? {
                println!("wrote {}", p.display());
            }
            for t in &result.timings {
                eprintln!("{:>9} {:8.3} s", t.stage, t.seconds);
            }
            print_summary(&result.report);
        }
        Command::Sweep {
            common,
            mirrors,
            channel,
            half_width,
            points,
        } => {
            let scene = common.scene()?;
            let config = common.config()?;
            let mirrors = mirrors_for(&common, &scene, &config, &mirrors)?;
            let measured = channel
                .as_ref()
                .map(load_channel)
                .transpose()
                .stage("load")?;
            let spec = SweepSpec { half_width, points };
            let sweep = pipeline::true_channel(&scene, measured.as_ref())
                .and_then(|h| pipeline::evaluate_wpt(&scene, &mirrors, &h, &config))
                .and_then(|r| pipeline::sweep(&scene, &mirrors, &r, &spec, measured.as_ref()))
                .stage("sweep")?;
            put(common.out("sweep.csv")?, sweep_csv(&sweep))?;
        }
    }
    Ok(())
}

fn print_summary(r: &wallsense::wpt::WptReport) {
    println!("pg_predicted {:9.3} dB", r.pg_predicted);
    println!("pg_optimized {:9.3} dB", r.pg_optimized);
    println!("pg_perfect   {:9.3} dB", r.pg_perfect);
    println!("loss         {:9.3} dB", r.loss_db());
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let e = e.at("export");
            let stage = e.stage().unwrap_or("export");
            eprintln!("error: {e}");
            ExitCode::from(match stage {
                "scene" | "config" => 2,
                "load" => 3,
                _ => 1,
            })
        }
    }
}
