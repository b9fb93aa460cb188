//! Command-line interface: `generate`, `run`, `homology` and `report`.
//!
//! Exit codes: 0 success, 1 I/O or internal error, 2 invalid input,
//! 3 a mandatory check failed, 4 a resource cap was exceeded.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::homology::{betti, FieldSpec};
use crate::io::{read_space, to_json_string, write_space_binary, write_space_text, SpaceMetadata};
use crate::nerve::{SimplicialComplex, DEFAULT_MULTIPLICITY_CAP};
use crate::pipeline::{run_pipeline, BetaPolicy, PipelineConfig, R0Policy, StageError, ThetaPolicy};
use crate::space::{circle_space, disjoint_union, flat_torus_space, sphere2_space, MetricMeasureSpace};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_CHECK_FAILED: u8 = 3;
pub const EXIT_RESOURCE: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "embolic", version, about = "Good-ball covers, nerves and Betti-number bounds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a sampled manifold to a space file plus a metadata sidecar.
    Generate(GenerateArgs),
    /// Run the full pipeline and write the report and the nerve complex.
    Run(RunArgs),
    /// Betti numbers of a complex file.
    Homology(HomologyArgs),
    /// Pretty-print a run report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(subcommand)]
    pub generator: Generator,
    /// Output space file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Metadata sidecar path (default: `<out>.meta`).
    #[arg(long, global = true)]
    pub meta: Option<PathBuf>,
    /// Write the binary EMB1 format instead of text.
    #[arg(long, global = true)]
    pub binary: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Generator {
    Circle {
        #[arg(long)]
        m: usize,
    },
    Sphere2 {
        #[arg(long)]
        m: usize,
    },
    FlatTorus {
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long)]
        m1: usize,
        #[arg(long)]
        m2: usize,
    },
    Union {
        /// Component generator spec, e.g. `sphere2:500`; may be repeated.
        #[arg(long = "of", required = true)]
        of: Vec<String>,
        #[arg(long, default_value_t = 1)]
        copies: usize,
        #[arg(long, default_value_t = 100.0)]
        sep: f64,
    },
}

#[derive(Debug, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunArgs {
    /// Space file (text or EMB1 binary).
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Generator spec instead of a file: `circle:M`, `sphere2:M`,
    /// `flat-torus:A,B,M1,M2` or `union:CxSPEC@SEP`.
    #[arg(long)]
    pub gen: Option<String>,
    /// Metadata sidecar carrying ground-truth Betti numbers.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// `half-inj` (default), an explicit radius, or a fraction such as `0.24inj`.
    #[arg(long)]
    pub r0: Option<String>,
    /// `auto` (default) or an explicit value.
    #[arg(long)]
    pub theta: Option<String>,
    /// `empirical` (default) or an explicit value.
    #[arg(long)]
    pub beta: Option<String>,
    /// Field characteristic (default 2).
    #[arg(long)]
    pub field: Option<u32>,
    /// Largest nerve dimension (default n + 1).
    #[arg(long)]
    pub dmax: Option<usize>,
    /// Cover multiplicity cap (default 24).
    #[arg(long)]
    pub cap: Option<usize>,
    /// Worker threads (default: all available).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Report path (default: a fresh timestamped file in the working directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Complex path (default: the report path with extension `.complex`).
    #[arg(long)]
    pub complex_out: Option<PathBuf>,
    /// TOML file with any of the keys above; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HomologyArgs {
    #[arg(long)]
    pub complex: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub field: u32,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    pub file: PathBuf,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_INVALID;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    match cli.command {
        Command::Generate(args) => report_error(cmd_generate(&args, stdout), "generate", stderr),
        Command::Run(args) => cmd_run(args, stdout, stderr),
        Command::Homology(args) => report_error(cmd_homology(&args, stdout), "homology", stderr),
        Command::Report(args) => report_error(cmd_report(&args, stdout), "report", stderr),
    }
}

fn report_error(r: Result<()>, what: &str, stderr: &mut dyn Write) -> u8 {
    match r {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {what}: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_)
        | Error::IndexOutOfRange { .. }
        | Error::MalformedSpace(_)
        | Error::Validation(_)
        | Error::ResolutionInsufficient { .. }
        | Error::NotDownwardClosed { .. }
        | Error::Parse { .. } => EXIT_INVALID,
        Error::MultiplicityCap { .. } => EXIT_RESOURCE,
        Error::Internal(_) | Error::MissingStage(_) | Error::Io(_) => EXIT_ERROR,
    }
}

/// Builds a space from a generator spec string.
pub fn generate_from_spec(spec: &str) -> Result<MetricMeasureSpace> {
    let bad = || Error::param(format!("unrecognized generator spec {spec:?}"));
    let (name, rest) = spec.split_once(':').ok_or_else(bad)?;
    let num = |s: &str| -> Result<f64> { s.trim().parse().map_err(|_| bad()) };
    let count = |s: &str| -> Result<usize> { s.trim().parse().map_err(|_| bad()) };
    match name {
        "circle" => circle_space(count(rest)?),
        "sphere2" => sphere2_space(count(rest)?),
        "flat-torus" => {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 4 {
                return Err(bad());
            }
            flat_torus_space(num(parts[0])?, num(parts[1])?, count(parts[2])?, count(parts[3])?)
        }
        "union" => {
            let (copies, inner) = rest.split_once('x').ok_or_else(bad)?;
            let (inner, sep) = inner.rsplit_once('@').ok_or_else(bad)?;
            let component = generate_from_spec(inner)?;
            disjoint_union(&vec![component; count(copies)?], num(sep)?)
        }
        _ => Err(bad()),
    }
}

fn generator_name(g: &Generator) -> String {
    match g {
        Generator::Circle { m } => format!("circle:{m}"),
        Generator::Sphere2 { m } => format!("sphere2:{m}"),
        Generator::FlatTorus { a, b, m1, m2 } => format!("flat-torus:{a},{b},{m1},{m2}"),
        Generator::Union { of, copies, sep } => {
            format!("union:{}x[{}]@{sep}", copies, of.join(","))
        }
    }
}

pub fn cmd_generate(args: &GenerateArgs, stdout: &mut dyn Write) -> Result<()> {
    let space = match &args.generator {
        Generator::Circle { m } => circle_space(*m)?,
        Generator::Sphere2 { m } => sphere2_space(*m)?,
        Generator::FlatTorus { a, b, m1, m2 } => flat_torus_space(*a, *b, *m1, *m2)?,
        Generator::Union { of, copies, sep } => {
            let mut parts = Vec::new();
            for spec in of {
                let s = generate_from_spec(spec)?;
                parts.extend(std::iter::repeat_n(s, *copies));
            }
            disjoint_union(&parts, *sep)?
        }
    };
    let out = args
        .out
        .clone()
        .ok_or_else(|| Error::param("generate needs --out"))?;
    let file = std::io::BufWriter::new(fs::File::create(&out)?);
    if args.binary {
        write_space_binary(&space, file)?;
    } else {
        write_space_text(&space, file)?;
    }
    let meta = SpaceMetadata::describe(&generator_name(&args.generator), &space);
    let meta_path = args.meta.clone().unwrap_or_else(|| with_suffix(&out, ".meta"));
    let meta_json = to_json_string(&meta);
    fs::write(&meta_path, &meta_json)?;
    write!(stdout, "{meta_json}")?;
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Fully resolved settings for one `run`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub complex_out: Option<PathBuf>,
}

pub fn parse_r0(s: &str) -> Result<R0Policy> {
    let s = s.trim();
    if s == "half-inj" {
        return Ok(R0Policy::HalfInj);
    }
    if let Some(frac) = s.strip_suffix("inj") {
        let f: f64 = frac
            .trim_end_matches('*')
            .parse()
            .map_err(|_| Error::param(format!("bad R0 policy {s:?}")))?;
        return Ok(R0Policy::InjFraction(f));
    }
    s.parse()
        .map(R0Policy::Explicit)
        .map_err(|_| Error::param(format!("bad R0 policy {s:?}")))
}

fn parse_theta(s: &str) -> Result<ThetaPolicy> {
    if s.trim() == "auto" {
        return Ok(ThetaPolicy::Auto);
    }
    s.trim()
        .parse()
        .map(ThetaPolicy::Explicit)
        .map_err(|_| Error::param(format!("bad theta policy {s:?}")))
}

fn parse_beta(s: &str) -> Result<BetaPolicy> {
    if s.trim() == "empirical" {
        return Ok(BetaPolicy::Empirical);
    }
    s.trim()
        .parse()
        .map(BetaPolicy::User)
        .map_err(|_| Error::param(format!("bad beta policy {s:?}")))
}

impl RunArgs {
    /// Fills unset fields from a TOML config file.
    fn merged(self) -> Result<Self> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = fs::read_to_string(&path)?;
        let file: RunArgs = toml::from_str(&text).map_err(|e| {
            let line = e
                .span()
                .map(|sp| text[..sp.start].lines().count().max(1))
                .unwrap_or(0);
            Error::parse(line, format!("{}: {}", path.display(), e.message()))
        })?;
        Ok(RunArgs {
            input: self.input.or(file.input),
            gen: self.gen.or(file.gen),
            truth: self.truth.or(file.truth),
            r0: self.r0.or(file.r0),
            theta: self.theta.or(file.theta),
            beta: self.beta.or(file.beta),
            field: self.field.or(file.field),
            dmax: self.dmax.or(file.dmax),
            cap: self.cap.or(file.cap),
            threads: self.threads.or(file.threads),
            out: self.out.or(file.out),
            complex_out: self.complex_out.or(file.complex_out),
            config: self.config,
        })
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        let pipeline = PipelineConfig {
            r0: self.r0.as_deref().map(parse_r0).transpose()?.unwrap_or(R0Policy::HalfInj),
            theta: self
                .theta
                .as_deref()
                .map(parse_theta)
                .transpose()?
                .unwrap_or(ThetaPolicy::Auto),
            beta: self
                .beta
                .as_deref()
                .map(parse_beta)
                .transpose()?
                .unwrap_or(BetaPolicy::Empirical),
            field: FieldSpec::new(self.field.unwrap_or(2))?,
            dmax: match self.dmax {
                Some(0) => return Err(Error::param("dmax must be at least 1")),
                d => d,
            },
            multiplicity_cap: self.cap.unwrap_or(DEFAULT_MULTIPLICITY_CAP),
        };
        if self.threads == Some(0) {
            return Err(Error::param("threads must be at least 1"));
        }
        Ok(RunConfig {
            pipeline,
            threads: self.threads,
            out: self.out.clone(),
            complex_out: self.complex_out.clone(),
        })
    }
}

fn load_space(args: &RunArgs) -> Result<MetricMeasureSpace> {
    let space = match (&args.input, &args.gen) {
        (Some(path), None) => read_space(path)?,
        (None, Some(spec)) => generate_from_spec(spec)?,
        (Some(_), Some(_)) => return Err(Error::param("give either --in or --gen, not both")),
        (None, None) => return Err(Error::param("run needs --in or --gen")),
    };
    match &args.truth {
        Some(path) => {
            let meta = SpaceMetadata::read(path)?;
            Ok(match meta.betti {
                Some(b) => space.with_truth(b),
                None => space,
            })
        }
        None => Ok(space),
    }
}

fn timestamped_report_path() -> PathBuf {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .unwrap_or_default();
    PathBuf::from(format!(
        "report-{}-{:09}-{}.json",
        now.as_secs(),
        now.subsec_nanos(),
        std::process::id()
    ))
}

pub fn cmd_run(args: RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8 {
    let fail = |stderr: &mut dyn Write, stage: &str, e: &Error| {
        let _ = writeln!(stderr, "error: stage {stage}: {e}");
        exit_code_for(e)
    };
    let args = match args.merged() {
        Ok(a) => a,
        Err(e) => return fail(stderr, "config", &e),
    };
    let config = match args.resolve() {
        Ok(c) => c,
        Err(e) => return fail(stderr, "config", &e),
    };
    let space = match load_space(&args) {
        Ok(s) => s,
        Err(e) => return fail(stderr, "load", &e),
    };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => return fail(stderr, "config", &Error::Internal(e.to_string())),
    };
    let output = match pool.install(|| run_pipeline(&space, &config.pipeline)) {
        Ok(o) => o,
        Err(StageError { stage, source }) => return fail(stderr, stage, &source),
    };

    let out = config.out.clone().unwrap_or_else(timestamped_report_path);
    let complex_out = config
        .complex_out
        .clone()
        .unwrap_or_else(|| out.with_extension("complex"));
    let written = fs::write(&out, to_json_string(&output.report(&space)))
        .and_then(|()| fs::write(&complex_out, output.complex.to_text()));
    if let Err(e) = written {
        return fail(stderr, "write", &Error::Io(e));
    }

    let b = &output.bounds;
    let _ = writeln!(
        stdout,
        "N = {}  T = {}  t = {:?}  b = {:?}  bound_tk = {:.6e}",
        b.n_balls, b.t_pairs, b.t, b.b, b.bound_tk
    );
    let _ = writeln!(stdout, "report: {}", out.display());
    if output.checks.passed() {
        EXIT_OK
    } else {
        let _ = writeln!(
            stderr,
            "mandatory checks failed: {}",
            output.checks.failures().join(", ")
        );
        EXIT_CHECK_FAILED
    }
}

pub fn cmd_homology(args: &HomologyArgs, stdout: &mut dyn Write) -> Result<()> {
    let field = FieldSpec::new(args.field)?;
    let text = fs::read_to_string(&args.complex)?;
    let complex = SimplicialComplex::from_text(&text)?;
    let profile = betti(&complex, field);
    let line: Vec<String> = profile.b.iter().map(usize::to_string).collect();
    writeln!(stdout, "{}", line.join(" "))?;
    Ok(())
}

pub fn cmd_report(args: &ReportArgs, stdout: &mut dyn Write) -> Result<()> {
    let text = fs::read_to_string(&args.file)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::parse(e.line(), e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::parse(1, "report is not a JSON object"))?;
    let width = obj.keys().map(String::len).max().unwrap_or(0);
    for (key, v) in obj {
        let shown = match v {
            serde_json::Value::Array(items) if items.iter().any(|x| x.is_object()) => {
                format!("[{} entries]", items.len())
            }
            serde_json::Value::Object(_) => serde_json::to_string(v).unwrap_or_default(),
            serde_json::Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(scalar).collect();
                format!("[{}]", parts.join(", "))
            }
            other => scalar(other),
        };
        writeln!(stdout, "{key:<width$}  {shown}")?;
    }
    Ok(())
}

fn scalar(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => format!("{f}"),
            _ => n.to_string(),
        },
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Null => "n/a".into(),
        other => other.to_string(),
    }
}
