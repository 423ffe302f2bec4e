//! Command-line front end: each subcommand reads a surface file, runs one
//! computation and writes CSV tables plus `meta.toml` into the output
//! directory.

use clap::{Args, Parser, Subcommand};
use flatflow_core::cover::develop_patch;
use flatflow_core::entropy::{estimate_entropy, orbit_counts, radius_grid, shadow_ratio_survey, PsModel, DEFAULT_STEPS, DEFAULT_SURVEY_CELLS};
use flatflow_core::flow::{frequency_report, scaling_regression, FlowSampler, MIN_ARCS};
use flatflow_core::geodesic::GeodesicPath;
use flatflow_core::io::config::ExperimentConfig;
use flatflow_core::io::format::parse_surface_file;
use flatflow_core::io::report::{counts_table, cylinders_table, fmt_real, freq_table, regression_table, saddles_table, shadows_table, Table};
use flatflow_core::saddle::{diameter_bound, enumerate_cylinders, enumerate_saddle_connections};
use flatflow_core::surface::build_surface_with;
use flatflow_core::{gauss_bonnet_check, FlatSurface, SurfacePoint};
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "flatflow", version, about = "Geodesics, orbit growth and flow statistics on flat cone surfaces")]
struct Cli {
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Experiment configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct SurfaceArg {
    /// Surface file.
    surface: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a surface and print its cone points.
    Validate(SurfaceArg),
    /// Saddle connections up to a length.
    Saddles {
        #[command(flatten)]
        surface: SurfaceArg,
        #[arg(long)]
        max_length: f64,
    },
    /// Cylinders with circumference up to a length.
    Cylinders {
        #[command(flatten)]
        surface: SurfaceArg,
        #[arg(long)]
        max_length: f64,
    },
    /// Orbit growth and the entropy estimate.
    Entropy {
        #[command(flatten)]
        surface: SurfaceArg,
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Shadow-ratio survey.
    Shadows {
        #[command(flatten)]
        surface: SurfaceArg,
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Passage frequencies of the shortest saddle connections.
    Flow {
        #[command(flatten)]
        surface: SurfaceArg,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        arcs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Summarize the tables of an earlier run.
    Report { rundir: PathBuf },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Domain { name: &'static str, message: String },
}

impl CliError {
    fn domain(name: &'static str, e: impl Display) -> Self {
        CliError::Domain { name, message: e.to_string() }
    }
}

fn io_err(e: impl Display) -> CliError {
    CliError::domain("IoError", e)
}

macro_rules! domain {
    ($e:expr) => {
        $e.map_err(|e| CliError::domain(e.name(), &e))
    };
}

struct Run {
    config: ExperimentConfig,
    out: PathBuf,
    command: &'static str,
    inputs: Vec<(String, String)>,
}

impl Run {
    fn write(&self, file: &str, table: &Table) -> Result<(), CliError> {
        table.write(&self.out.join(file)).map_err(io_err)
    }

    fn finish(&self) -> Result<(), CliError> {
        let mut meta = format!("command = \"{}\"\nversion = \"{}\"\n", self.command, env!("CARGO_PKG_VERSION"));
        for (k, v) in &self.inputs {
            meta.push_str(&format!("{k} = \"{v}\"\n"));
        }
        meta.push_str("\n[config]\n");
        meta.push_str(&self.config.to_toml());
        std::fs::write(self.out.join("meta.toml"), meta).map_err(io_err)
    }
}

fn load_surface(run: &mut Run, path: &Path) -> Result<FlatSurface, CliError> {
    let bytes = std::fs::read(path).map_err(io_err)?;
    let digest = Sha256::digest(&bytes);
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    run.inputs.push(("surface".into(), name));
    run.inputs.push(("surface_sha256".into(), hex));
    let spec = domain!(parse_surface_file(&bytes))?;
    domain!(build_surface_with(&spec, run.config.tolerances()))
}

/// The patch base: the first singularity.
fn base_point(s: &FlatSurface) -> SurfacePoint {
    let c = &s.cone_points[s.singularities[0]];
    let corner = &c.corners[0];
    let v = s.polygons[corner.polygon].vertex(corner.vertex);
    SurfacePoint::new(corner.polygon, v.x, v.y)
}

fn positive(name: &'static str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Usage(format!("--{name} must be positive")))
    }
}

fn execute(cli: Cli) -> Result<String, CliError> {
    let mut config = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(io_err)?;
            domain!(ExperimentConfig::from_toml(&text))?
        }
        None => ExperimentConfig::default(),
    };
    let command = match &cli.command {
        Command::Validate(_) => "validate",
        Command::Saddles { .. } => "saddles",
        Command::Cylinders { .. } => "cylinders",
        Command::Entropy { .. } => "entropy",
        Command::Shadows { .. } => "shadows",
        Command::Flow { .. } => "flow",
        Command::Report { .. } => "report",
    };
    match &cli.command {
        Command::Entropy { radius: Some(r), .. } | Command::Shadows { radius: Some(r), .. } => config.radius = positive("radius", *r)?,
        Command::Flow { samples, radius, arcs, seed, .. } => {
            if let Some(r) = radius {
                config.radius = positive("radius", *r)?;
            }
            if let Some(n) = samples {
                config.samples = *n;
            }
            if let Some(k) = arcs {
                config.arcs = *k;
            }
            if let Some(s) = seed {
                config.seed = *s;
            }
            if config.samples == 0 || config.arcs == 0 {
                return Err(CliError::Usage("--samples and --arcs must be positive".into()));
            }
        }
        _ => {}
    }
    let out = match (&cli.out, &cli.command) {
        (Some(o), _) => o.clone(),
        (None, Command::Report { rundir }) => rundir.clone(),
        (None, _) => PathBuf::from(&config.output),
    };
    std::fs::create_dir_all(&out).map_err(io_err)?;
    let seed = config.seed;
    let mut run = Run { config, out, command, inputs: vec![] };
    let summary = match &cli.command {
        Command::Validate(a) => {
            let s = load_surface(&mut run, &a.surface)?;
            let mut t = Table::new(&["cone_id", "angle", "k", "corners"]);
            println!("cone  angle/pi  corners");
            for c in &s.cone_points {
                println!("{:>4}  {:>8}  {}", c.id, c.k, c.corners.len());
                t.push(seed, vec![c.id.to_string(), fmt_real(c.angle), c.k.to_string(), c.corners.len().to_string()]);
            }
            run.write("cones.csv", &t)?;
            format!(
                "valid: {} cone points, {} singular, chi = {}, Gauss-Bonnet residual {}",
                s.cone_points.len(),
                s.singularities.len(),
                s.euler_characteristic,
                fmt_real(gauss_bonnet_check(&s))
            )
        }
        Command::Saddles { surface, max_length } => {
            let s = load_surface(&mut run, &surface.surface)?;
            let l = positive("max-length", *max_length)?;
            let list = domain!(enumerate_saddle_connections(&s, l))?;
            run.write("saddles.csv", &saddles_table(&list, seed))?;
            format!("{} saddle connections up to length {}", list.len(), fmt_real(l))
        }
        Command::Cylinders { surface, max_length } => {
            let s = load_surface(&mut run, &surface.surface)?;
            let l = positive("max-length", *max_length)?;
            let list = domain!(enumerate_cylinders(&s, l))?;
            run.write("cylinders.csv", &cylinders_table(&list, seed))?;
            format!("{} cylinders up to circumference {}", list.len(), fmt_real(l))
        }
        Command::Entropy { surface, .. } => {
            let s = load_surface(&mut run, &surface.surface)?;
            let r = run.config.radius;
            let patch = domain!(develop_patch(&s, &base_point(&s), r))?;
            let counts = domain!(orbit_counts(&patch, &radius_grid(r, 24), DEFAULT_STEPS))?;
            run.write("counts.csv", &counts_table(&counts, seed))?;
            let e = domain!(estimate_entropy(&counts))?;
            format!("entropy estimate {} at R = {} (slope over [3R/4, R]: {})", fmt_real(e.e_hat), fmt_real(r), fmt_real(e.slope_quarter))
        }
        Command::Shadows { surface, .. } => {
            let s = load_surface(&mut run, &surface.surface)?;
            let r = run.config.radius;
            let patch = domain!(develop_patch(&s, &base_point(&s), r))?;
            let counts = domain!(orbit_counts(&patch, &radius_grid(r, 24), DEFAULT_STEPS))?;
            let e = domain!(estimate_entropy(&counts))?.e_hat;
            let model = domain!(PsModel::new(&patch, e, run.config.exponent_multiplier * e, r, DEFAULT_STEPS))?;
            let survey = domain!(shadow_ratio_survey(&model, DEFAULT_SURVEY_CELLS))?;
            run.write("shadows.csv", &shadows_table(&survey.extremes, seed))?;
            format!(
                "shadow spread {} over about {} singularities in [{}, {}]; conformal median error {}",
                fmt_real(survey.spread),
                fmt_real(survey.population.round()),
                fmt_real(survey.annulus.0),
                fmt_real(survey.annulus.1),
                fmt_real(survey.conformal.median_error)
            )
        }
        Command::Flow { surface, .. } => {
            let s = load_surface(&mut run, &surface.surface)?;
            let cfg = run.config.clone();
            let patch = domain!(develop_patch(&s, &base_point(&s), cfg.radius))?;
            let counts = domain!(orbit_counts(&patch, &radius_grid(cfg.radius, 24), DEFAULT_STEPS))?;
            run.write("counts.csv", &counts_table(&counts, seed))?;
            let e = domain!(estimate_entropy(&counts))?.e_hat;
            let mut l = cfg.arc_max_length;
            let mut list = domain!(enumerate_saddle_connections(&s, l))?;
            while list.len() < cfg.arcs && l < 64.0 * cfg.arc_max_length {
                l *= 2.0;
                list = domain!(enumerate_saddle_connections(&s, l))?;
            }
            let arcs: Vec<GeodesicPath> = list.iter().take(cfg.arcs).map(GeodesicPath::from_saddle).collect();
            let sampler = domain!(FlowSampler::new(&patch, e, cfg.exponent_multiplier * e, cfg.radius, DEFAULT_STEPS))?;
            let samples = domain!(sampler.sample_many(seed, cfg.samples))?;
            let report = domain!(frequency_report(&s, &arcs, &samples, 10.0 * diameter_bound(&s)))?;
            run.write("freq.csv", &freq_table(&report, seed))?;
            match scaling_regression(&report, MIN_ARCS) {
                Ok(g) => {
                    run.write("regression.csv", &regression_table(&g, seed))?;
                    format!(
                        "{} samples, {} arcs: slope {} (entropy estimate {}), r2 {}",
                        cfg.samples,
                        arcs.len(),
                        fmt_real(g.slope),
                        fmt_real(e),
                        fmt_real(g.r2)
                    )
                }
                Err(err) => format!("{} samples, {} arcs; regression skipped: {}", cfg.samples, arcs.len(), err),
            }
        }
        Command::Report { rundir } => {
            let mut t = Table::new(&["table", "rows"]);
            let mut parts = Vec::new();
            let mut names: Vec<String> = std::fs::read_dir(rundir)
                .map_err(io_err)?
                .filter_map(|e| e.ok())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .filter(|n| n.ends_with(".csv") && n != "summary.csv")
                .collect();
            names.sort();
            for n in &names {
                let mut r = csv::Reader::from_path(rundir.join(n)).map_err(io_err)?;
                let rows = r.records().count();
                t.push(seed, vec![n.clone(), rows.to_string()]);
                parts.push(format!("{n}: {rows} rows"));
            }
            run.write("summary.csv", &t)?;
            if parts.is_empty() {
                "no tables found".into()
            } else {
                parts.join(", ")
            }
        }
    };
    if command != "report" {
        run.finish()?;
    }
    Ok(summary)
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("FLATFLOW_THREADS") {
        let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Usage(format!("FLATFLOW_THREADS must be a positive integer, got `{v}`")))?;
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Run with the given arguments (program name first) and return the exit
/// code: 0 on success, 1 on a domain error, 2 on a usage error.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = configure_threads().and_then(|_| execute(cli));
    match result {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(CliError::Usage(m)) => {
            eprintln!("UsageError: {m}");
            2
        }
        Err(CliError::Domain { name, message }) => {
            eprintln!("{name}: {message}");
            1
        }
    }
}
