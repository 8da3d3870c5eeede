//! `drapestack` command-line pipeline.
//!
//! Exit codes: 0 success, 2 configuration or usage error, 3 I/O error,
//! 4 solver divergence, 5 validation failure (failed gradient check,
//! malformed report, invalid geometry).

// Validation uses `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod pipeline;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use drapestack::body::{generate_toy_body, save_body, ToyBodyConfig};
use drapestack::garments::{crossing_layers, TubeSpec};
use drapestack::geometry::write_obj;
use drapestack::gradcheck::{check_term, Term, DEFAULT_STEP, GRADCHECK_TOLERANCE};
use drapestack::EnergyReport;

pub use config::{GarmentEntry, Pipeline, PipelineConfig};
pub use error::{exit, CliError, CliResult};
pub use pipeline::{run_drape, run_untangle, RunOutput, REPORT_FILE};

#[derive(Debug, Parser)]
#[command(
    name = "drapestack",
    version,
    about = "Layered garment draping by direct energy minimization"
)]
pub struct Cli {
    /// Pipeline config (drape, untangle) or toy-body config (gen-body).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the toy body to `<out>/body.json`.
    GenBody {
        /// Number of shape directions (2 to 4).
        #[arg(long)]
        scale_shapes: Option<usize>,
    },
    /// Write procedural garment meshes and a matching pipeline config.
    GenGarment {
        #[arg(long, value_enum, default_value_t = GarmentKind::Skirt)]
        kind: GarmentKind,
        /// Number of layers for `--kind layers`.
        #[arg(long, default_value_t = 2)]
        count: usize,
    },
    /// Drape every configured garment onto the body independently.
    Drape,
    /// Drape, then untangle the layer stack and repair penetrations.
    Untangle,
    /// Compare analytic and central-difference gradients per loss term.
    Gradcheck {
        /// Term name or `all`.
        #[arg(long, default_value = "all")]
        term: String,
        /// Approximate vertex count of the random sheet.
        #[arg(long, default_value_t = 100)]
        size: usize,
        /// Difference step relative to the bounding-box diagonal.
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
    },
    /// Print a report file as tables or as normalized JSON.
    Report {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GarmentKind {
    Skirt,
    Layers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Text,
    Structured,
}

/// Runs one command, writing human output to `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::GenBody { scale_shapes } => gen_body(cli, *scale_shapes, stdout),
        Command::GenGarment { kind, count } => gen_garment(cli, *kind, *count, stdout),
        Command::Drape => {
            let p = load_pipeline(cli)?;
            let out = run_drape(&p)?;
            out.write(&p.output)?;
            info!("cmd=drape done=1 output={}", p.output.display());
            Ok(())
        }
        Command::Untangle => {
            let p = load_pipeline(cli)?;
            let out = run_untangle(&p)?;
            out.write(&p.output)?;
            info!("cmd=untangle done=1 output={}", p.output.display());
            Ok(())
        }
        Command::Gradcheck { term, size, step } => gradcheck(term, *size, cli.seed.unwrap_or(1), *step, stdout),
        Command::Report { path, format } => report(path, *format, stdout),
    }
}

fn load_pipeline(cli: &Cli) -> CliResult<Pipeline> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("this command needs --config <path>".into()))?;
    let mut p = Pipeline::load(path, cli.out.as_deref())?;
    if let Some(seed) = cli.seed {
        p.config.seed = seed;
    }
    Ok(p)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}

fn print(stdout: &mut dyn Write, text: &str) -> CliResult<()> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| CliError::io("writing to standard output", e))
}

fn gen_body(cli: &Cli, scale_shapes: Option<usize>, stdout: &mut dyn Write) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<ToyBodyConfig>(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => ToyBodyConfig::default(),
    };
    if let Some(n) = scale_shapes {
        cfg.shape_count = n;
    }
    let body = generate_toy_body(&cfg).map_err(|e| CliError::Config(e.to_string()))?;
    let dir = out_dir(cli);
    create_dir(&dir)?;
    let path = dir.join("body.json");
    save_body(&body, &path)?;
    print(
        stdout,
        &format!(
            "vertices={} joints={} shapes={} path={}\n",
            body.template().vertex_count(),
            body.joint_count(),
            body.shape_count(),
            path.display()
        ),
    )
}

fn gen_garment(cli: &Cli, kind: GarmentKind, count: usize, stdout: &mut dyn Write) -> CliResult<()> {
    let (specs, stem): (Vec<(String, TubeSpec)>, &str) = match kind {
        GarmentKind::Skirt => (vec![("skirt".to_string(), TubeSpec::default())], "skirt"),
        GarmentKind::Layers => {
            if count == 0 {
                return Err(CliError::Config("--count must be at least 1".into()));
            }
            let specs = crossing_layers(count)
                .into_iter()
                .enumerate()
                .map(|(i, s)| (format!("layer{}", i + 1), s))
                .collect();
            (specs, "layers")
        }
    };
    let dir = out_dir(cli);
    let mut meshes = Vec::new();
    let mut garments = Vec::new();
    for (k, (name, spec)) in specs.iter().enumerate() {
        let mesh = spec.mesh()?;
        let file = format!("{name}.obj");
        meshes.push((file.clone(), write_obj(&mesh)));
        garments.push(GarmentEntry {
            name: name.clone(),
            mesh: Some(file.into()),
            layer: k + 1,
            ..Default::default()
        });
    }
    let config = PipelineConfig {
        garments,
        output: Some(format!("{stem}_out").into()),
        ..Default::default()
    };
    create_dir(&dir)?;
    for (file, text) in &meshes {
        write_file(&dir.join(file), text)?;
    }
    let config_path = dir.join(format!("{stem}.json"));
    write_file(&config_path, &config.to_json())?;
    print(stdout, &format!("config={}\n", config_path.display()))
}

fn gradcheck(term: &str, size: usize, seed: u64, step: f64, stdout: &mut dyn Write) -> CliResult<()> {
    let terms: Vec<Term> = if term == "all" {
        Term::ALL.to_vec()
    } else {
        vec![term
            .parse()
            .map_err(|e: drapestack::Error| CliError::Config(e.to_string()))?]
    };
    if !(step > 0.0) || !step.is_finite() {
        return Err(CliError::Config(format!("--step must be positive, got {step}")));
    }
    let mut text = format!(
        "{:<16} {:>8} {:>14} {:>14}  status\n",
        "term", "vertices", "max_abs_error", "max_rel_error"
    );
    let mut failed = Vec::new();
    for t in terms {
        let r = check_term(t, size, seed, step)?;
        let status = if r.passed() { "pass" } else { "FAIL" };
        if !r.passed() {
            failed.push(t.name());
        }
        text += &format!(
            "{:<16} {:>8} {:>14.6e} {:>14.6e}  {status}\n",
            t.name(),
            r.vertices,
            r.max_abs_error,
            r.max_rel_error
        );
    }
    print(stdout, &text)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "gradient check above {GRADCHECK_TOLERANCE:e} for: {}",
            failed.join(", ")
        )))
    }
}

fn report(path: &Path, format: ReportFormat, stdout: &mut dyn Write) -> CliResult<()> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let report =
        EnergyReport::from_json(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    match format {
        ReportFormat::Text => print(stdout, &report.render_text()),
        ReportFormat::Structured => print(stdout, &report.to_json()?),
    }
}

/// key=value log lines on standard error; `RUST_LOG` overrides the level.
pub fn init_logging() {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format(|buf, record| {
            writeln!(
                buf,
                "level={} target={} {}",
                record.level().as_str().to_ascii_lowercase(),
                record.target(),
                record.args()
            )
        })
        .try_init();
}

/// Configures the global worker pool once per process.
pub fn init_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}
