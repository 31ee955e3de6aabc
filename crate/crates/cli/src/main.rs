use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use radviz3d::io::{
    build_scene, export_html, load_csv, write_atomic, write_csv, write_matrix_csv, CsvOptions, Scene, SceneOptions,
    Template,
};
use radviz3d::overlap::{fit_components, heatmap_export, overlap_matrix, GaussianComponent};
use radviz3d::{
    circle_anchors, default_anchors, normalize, AnchorMode, DataSet, Normalization, ProjectionMethod, SimSpec,
};
use serde::Serialize;

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "radviz3d", version, about = "3D radial visualization of multivariate data")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every random choice (palette shuffle, Monte Carlo, simulation).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long = "normalize", global = true, value_enum, default_value_t = NormalizeArg::Minmax)]
    normalize: NormalizeArg,
    #[arg(long, global = true, value_enum, default_value_t = MethodArg::Radviz3d)]
    method: MethodArg,
    /// Use the Fibonacci spiral even when a Platonic anchor set exists.
    #[arg(long, global = true)]
    fibonacci: bool,
    /// Comma-separated feature columns to ignore.
    #[arg(long, global = true, value_delimiter = ',')]
    drop_columns: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeArg {
    Minmax,
    Compositional,
    None,
}

impl From<NormalizeArg> for Normalization {
    fn from(n: NormalizeArg) -> Self {
        match n {
            NormalizeArg::Minmax => Normalization::MinMax,
            NormalizeArg::Compositional => Normalization::Compositional,
            NormalizeArg::None => Normalization::None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Radviz3d,
    Radviz2d,
    Viz3d,
}

impl From<MethodArg> for ProjectionMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Radviz3d => ProjectionMethod::RadViz3D,
            MethodArg::Radviz2d => ProjectionMethod::RadViz2D,
            MethodArg::Viz3d => ProjectionMethod::Viz3D,
        }
    }
}

#[derive(Args)]
struct Input {
    /// CSV file with a header row.
    input: PathBuf,
    /// Column holding class labels.
    #[arg(long)]
    label: Option<String>,
    /// Column holding row identifiers.
    #[arg(long)]
    id: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the anchor set for a number of features.
    Anchors {
        #[arg(short, long)]
        p: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Project a CSV file and write one point per row.
    Project {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit one Gaussian per class and estimate pairwise overlaps.
    Overlap {
        #[command(flatten)]
        input: Input,
        /// Monte-Carlo draws per class pair and direction.
        #[arg(long, default_value_t = 1_000_000)]
        draws: usize,
        /// Fit the classes after applying --normalize instead of on raw values.
        #[arg(long)]
        normalized: bool,
        /// Overlap matrix output (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Heatmap table output as JSON.
        #[arg(long)]
        heatmap: Option<PathBuf>,
    },
    /// Generate a Gaussian mixture calibrated to a generalized overlap.
    Simulate {
        #[arg(long, default_value_t = 5)]
        classes: usize,
        #[arg(long, default_value_t = 5)]
        dims: usize,
        #[arg(long, default_value_t = 500)]
        rows: usize,
        /// Target generalized overlap.
        #[arg(long)]
        omega: f64,
        #[arg(long)]
        spherical: bool,
        #[arg(long)]
        homogeneous: bool,
        /// Monte-Carlo draws per pair and direction used while calibrating.
        #[arg(long, default_value_t = radviz3d::simulate::DEFAULT_CALIBRATION_DRAWS)]
        draws: usize,
        /// Labeled CSV output; the components go to a JSON file beside it.
        #[arg(long)]
        out: PathBuf,
        /// Override the JSON sidecar location.
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Build the scene JSON consumed by the viewer.
    Scene {
        #[command(flatten)]
        input: Input,
        /// Attach the pairwise overlap heatmap (needs --label).
        #[arg(long)]
        overlap: bool,
        #[arg(long, default_value_t = 1_000_000)]
        draws: usize,
        /// Fit the classes after applying --normalize instead of on raw values.
        #[arg(long)]
        normalized: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wrap a scene JSON file into a standalone HTML page.
    ExportHtml {
        scene: PathBuf,
        /// HTML template containing {{SCENE_JSON}}; the built-in viewer otherwise.
        #[arg(long)]
        template: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let numeric =
                e.chain().any(|c| c.downcast_ref::<radviz3d::Error>().is_some_and(radviz3d::Error::is_numeric));
            ExitCode::from(if numeric { EXIT_NUMERIC } else { EXIT_INPUT })
        }
    }
}

/// Writes atomically to `path`, or to stdout when there is no path.
fn emit(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => write_atomic(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            Ok(out.flush()?)
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn load(input: &Input, global: &Global) -> anyhow::Result<DataSet> {
    let options = CsvOptions { label_column: input.label.clone(), id_column: input.id.clone() };
    let data = load_csv(&input.input, &options).with_context(|| format!("reading {}", input.input.display()))?;
    if global.drop_columns.is_empty() {
        Ok(data)
    } else {
        Ok(data.drop_columns(&global.drop_columns)?)
    }
}

/// Provenance timestamp: `SOURCE_DATE_EPOCH` when set, otherwise now.
fn timestamp() -> anyhow::Result<String> {
    let time = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(s) => {
            let secs: i64 = s.trim().parse().context("SOURCE_DATE_EPOCH is not an integer")?;
            chrono::DateTime::from_timestamp(secs, 0).context("SOURCE_DATE_EPOCH out of range")?
        }
        Err(_) => chrono::Utc::now(),
    };
    Ok(time.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
}

fn invocation() -> String {
    std::iter::once("radviz3d".to_string()).chain(std::env::args().skip(1)).collect::<Vec<_>>().join(" ")
}

fn scene_for(data: &DataSet, global: &Global, overlap: Option<radviz3d::Heatmap>) -> anyhow::Result<Scene> {
    let options = SceneOptions {
        method: global.method.into(),
        anchors: None,
        anchor_mode: if global.fibonacci { AnchorMode::ForceFibonacci } else { AnchorMode::Auto },
        normalization: global.normalize.into(),
        palette_seed: global.seed,
        overlap,
        command: invocation(),
        timestamp: timestamp()?,
    };
    Ok(build_scene(data, &options)?)
}

fn heatmap_for(
    data: &DataSet,
    draws: usize,
    global: &Global,
    normalized: bool,
) -> anyhow::Result<(radviz3d::OverlapMatrix, radviz3d::Heatmap)> {
    let components =
        if normalized { fit_components(&normalize(data, global.normalize.into())?.0)? } else { fit_components(data)? };
    let seed = global.seed;
    let omega = overlap_matrix(&components, draws, seed)?;
    let heatmap = heatmap_export(&omega, &data.classes())?;
    Ok((omega, heatmap))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Anchors { p, out } => {
            let set = match g.method {
                MethodArg::Radviz3d if g.fibonacci => default_anchors(*p, AnchorMode::ForceFibonacci)?,
                MethodArg::Radviz3d => default_anchors(*p, AnchorMode::Auto)?,
                MethodArg::Radviz2d | MethodArg::Viz3d => circle_anchors(*p)?,
            };
            let bytes = match g.format {
                Format::Json => to_json(&set)?,
                Format::Csv => {
                    let mut buf = Vec::new();
                    writeln!(buf, "index,x,y,z")?;
                    for (j, a) in set.iter().enumerate() {
                        let c = a.coords();
                        writeln!(buf, "{},{},{},{}", j + 1, c[0], c[1], c.get(2).copied().unwrap_or(0.0))?;
                    }
                    buf
                }
            };
            emit(out.as_deref(), &bytes)
        }
        Command::Project { input, out } => {
            let data = load(input, g)?;
            let scene = scene_for(&data, g, None)?;
            let bytes = match g.format {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Points<'a> {
                        method: ProjectionMethod,
                        feature_names: &'a [String],
                        anchors: &'a [[f64; 3]],
                        row_ids: &'a [String],
                        labels: &'a [String],
                        points: &'a [[f64; 3]],
                    }
                    to_json(&Points {
                        method: scene.method,
                        feature_names: &scene.feature_names,
                        anchors: &scene.anchors,
                        row_ids: &scene.row_ids,
                        labels: &scene.labels,
                        points: &scene.points,
                    })?
                }
                Format::Csv => {
                    let points = scene.points_matrix();
                    let mut buf = Vec::new();
                    let header = ["x", "y", "z"].map(String::from);
                    write_matrix_csv(&mut buf, &[("id", &scene.row_ids), ("label", &scene.labels)], &header, &points)?;
                    buf
                }
            };
            emit(out.as_deref(), &bytes)
        }
        Command::Overlap { input, draws, normalized, out, heatmap } => {
            let data = load(input, g)?;
            let (omega, table) = heatmap_for(&data, *draws, g, *normalized)?;
            let classes = data.classes();
            let bytes = match g.format {
                Format::Json => {
                    #[derive(Serialize)]
                    struct Report<'a> {
                        classes: &'a [String],
                        #[serde(flatten)]
                        omega: &'a radviz3d::OverlapMatrix,
                        generalized: f64,
                    }
                    to_json(&Report { classes: &classes, omega: &omega, generalized: omega.generalized()? })?
                }
                Format::Csv => {
                    let mut buf = Vec::new();
                    write_matrix_csv(&mut buf, &[("class", &classes)], &classes, &omega.omega)?;
                    buf
                }
            };
            emit(out.as_deref(), &bytes)?;
            if let Some(path) = heatmap {
                emit(Some(path), &to_json(&table)?)?;
            }
            Ok(())
        }
        Command::Simulate { classes, dims, rows, omega, spherical, homogeneous, draws, out, sidecar } => {
            let spec = SimSpec {
                spherical: *spherical,
                homogeneous: *homogeneous,
                calibration_draws: *draws,
                ..SimSpec::new(*classes, *dims, *rows, *omega, g.seed)
            };
            let sim = radviz3d::simulate_mixture(&spec)?;
            let mut csv = Vec::new();
            write_csv(&sim.data, &mut csv, &CsvOptions::labeled("class"))?;
            emit(Some(out), &csv)?;
            let sidecar = sidecar.clone().unwrap_or_else(|| out.with_extension("json"));
            emit(Some(&sidecar), &to_json(&SimulationReport::new(&spec, &sim))?)
        }
        Command::Scene { input, overlap, draws, normalized, out } => {
            let data = load(input, g)?;
            let table = if *overlap {
                if input.label.is_none() {
                    bail!("--overlap needs class labels; pass --label");
                }
                Some(heatmap_for(&data, *draws, g, *normalized)?.1)
            } else {
                None
            };
            let scene = scene_for(&data, g, table)?;
            let mut bytes = scene.to_json()?.into_bytes();
            bytes.push(b'\n');
            emit(out.as_deref(), &bytes)
        }
        Command::ExportHtml { scene, template, out } => {
            let text = std::fs::read_to_string(scene).with_context(|| format!("reading {}", scene.display()))?;
            let scene = Scene::from_json(&text)?;
            let template = template.as_deref().map_or(Template::Builtin, Template::File);
            emit(out.as_deref(), export_html(&scene, template)?.as_bytes())
        }
    }
}

#[derive(Serialize)]
struct ComponentReport {
    class: String,
    weight: f64,
    mean: Vec<f64>,
    covariance: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct SimulationReport<'a> {
    spec: &'a SimSpec,
    achieved_omega: f64,
    scale: f64,
    components: Vec<ComponentReport>,
}

impl<'a> SimulationReport<'a> {
    fn new(spec: &'a SimSpec, sim: &radviz3d::Simulation) -> Self {
        let components = sim
            .data
            .classes()
            .into_iter()
            .zip(&sim.components)
            .map(|(class, c): (String, &GaussianComponent)| ComponentReport {
                class,
                weight: c.weight(),
                mean: c.mean().iter().copied().collect(),
                covariance: c.covariance().row_iter().map(|r| r.iter().copied().collect()).collect(),
            })
            .collect();
        SimulationReport { spec, achieved_omega: sim.achieved_omega, scale: sim.scale, components }
    }
}
