//! The `torus-eig` command line.
//!
//! Every flag may also come from a JSON object given by `--config`, keyed by
//! the flag's long name (`"a-min": 0.0`); flags on the command line win.
//! Exit codes follow [`ExitCode`]; a failed `verify` exits with
//! [`ExitCode::Numeric`].

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::bounds::{bound_breakdown, conjectured_sup, threshold_b, THRESHOLD_B_MAX};
use crate::energy::TorusGrid;
use crate::error::{Error, ExitCode, Result};
use crate::flat_spectrum::{enumerate_spectrum, mode_eigenvalue, Mode, Parity, MERGE_RTOL};
use crate::galerkin::{assemble, bound_certificate, solve_generalized, ConformalWeight};
use crate::moduli::TorusParams;
use crate::scan::{render_svg, scan, write_csv, Column, OutputFormat, Range, ScanConfig};
use crate::sphere::Cap;
use crate::trial::{build_context, search_orthogonal_cap, trial_report, F1Choice};
use crate::verify::{run_suite, Suite, VerifyOptions};

#[derive(Debug, Parser)]
#[command(
    name = "torus-eig",
    version,
    about = "Second-eigenvalue bounds on flat tori and their conformal classes"
)]
pub struct Cli {
    /// JSON file whose keys mirror the long flag names.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for randomized sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Every intermediate quantity of U(a, b), as JSON.
    #[command(allow_negative_numbers = true)]
    Bound(PointArgs),
    /// Flat spectrum, normalized by area.
    #[command(allow_negative_numbers = true)]
    Spectrum(SpectrumArgs),
    /// Grid scan of moduli space.
    #[command(allow_negative_numbers = true)]
    Scan(ScanArgs),
    /// Root in b of U(a, b) = target.
    #[command(allow_negative_numbers = true)]
    Threshold(ThresholdArgs),
    /// Run a self-check suite and print a JSON report.
    Verify(VerifyArgs),
    /// SVG heatmap of one scan column.
    #[command(allow_negative_numbers = true)]
    Heatmap(ScanArgs),
    /// Ritz eigenvalues for a conformal weight and the bound certificate.
    #[command(allow_negative_numbers = true)]
    Galerkin(GalerkinArgs),
    /// Search for a cap giving admissible trial functions.
    #[command(name = "trial-search", allow_negative_numbers = true)]
    TrialSearch(TrialArgs),
}

#[derive(Debug, Args)]
pub struct PointArgs {
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Number of normalized eigenvalues after λ₀.
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub a_min: Option<f64>,
    #[arg(long)]
    pub a_max: Option<f64>,
    #[arg(long)]
    pub a_steps: Option<usize>,
    #[arg(long)]
    pub b_min: Option<f64>,
    #[arg(long)]
    pub b_max: Option<f64>,
    #[arg(long)]
    pub b_steps: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Column shown by the heatmap.
    #[arg(long)]
    pub column: Option<String>,
    /// Written to stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Svg,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Svg => OutputFormat::Svg,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub a: Option<f64>,
    /// Defaults to 8π²/√3 + 8π.
    #[arg(long)]
    pub target: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum, default_value = "all")]
    pub suite: Suite,
}

#[derive(Debug, Args)]
pub struct GalerkinArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Weight expression in u = 2πs, v = 2πt, e.g. "1 + 0.3*cos(u)".
    #[arg(long)]
    pub weight: Option<String>,
    /// Basis cutoff on flat eigenvalues.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Number of normalized Ritz values after λ₀.
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrialArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[arg(long)]
    pub r: Option<f64>,
    /// Quadrature nodes per lattice direction.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Cap search density.
    #[arg(long)]
    pub density: Option<usize>,
    /// First-eigenfunction mode as "p,q"; defaults to the lowest λ₁ mode.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, value_enum)]
    pub parity: Option<ParityArg>,
    #[arg(long)]
    pub angle: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParityArg {
    Cos,
    Sin,
}

/// Flags merged with the optional config file.
struct Settings {
    config: Map<String, Value>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        let config = match path {
            None => Map::new(),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))?;
                match serde_json::from_str::<Value>(&text) {
                    Ok(Value::Object(m)) => m,
                    Ok(_) => return Err(Error::Config("config must be a JSON object".into())),
                    Err(e) => return Err(Error::Config(format!("{}: {e}", p.display()))),
                }
            }
        };
        Ok(Self { config })
    }

    fn opt<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.config.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| Error::Config(format!("config key '{key}': {e}"))),
        }
    }

    fn get<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<T> {
        self.opt(flag, key)?
            .ok_or_else(|| Error::Config(format!("missing --{key} (flag or config key)")))
    }

    fn or<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.opt(flag, key)?.unwrap_or(default))
    }

    fn params(&self, p: PointArgs) -> Result<TorusParams> {
        TorusParams::new(self.get(p.a, "a")?, self.get(p.b, "b")?)
    }
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                ExitCode::InvalidInput as i32
            } else {
                0
            };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(code) => code as i32,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code() as i32
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<ExitCode> {
    let settings = Settings::load(cli.config.as_deref())?;
    let seed = settings.or(cli.seed, "seed", 0u64)?;
    match cli.command {
        Command::Bound(p) => {
            let params = settings.params(p)?;
            emit_json(out, &bound_breakdown(&params))?;
        }
        Command::Spectrum(args) => {
            let params = settings.params(args.point)?;
            let count = settings.or(args.count, "count", 10usize)?;
            let spec = enumerate_spectrum(&params, count)?;
            let area = params.flat_area();
            let normalized: Vec<f64> = spec.flattened(count + 1).iter().map(|l| l * area).collect();
            emit_json(
                out,
                &json!({
                    "a": params.a(),
                    "b": params.b(),
                    "area": area,
                    "normalized_eigenvalues": normalized,
                    "entries": spec.entries,
                }),
            )?;
        }
        Command::Scan(args) => run_scan(&settings, args, out, false)?,
        Command::Heatmap(args) => run_scan(&settings, args, out, true)?,
        Command::Threshold(args) => {
            let a = settings.get(args.a, "a")?;
            let target = settings.or(args.target, "target", conjectured_sup())?;
            let root = threshold_b(a, target)?;
            let lo = (1.0 - a * a).sqrt();
            emit_json(
                out,
                &json!({ "a": a, "target": target, "root": root, "bracket": [lo, THRESHOLD_B_MAX], "tolerance": 1e-10 }),
            )?;
        }
        Command::Verify(args) => {
            let report = run_suite(args.suite, VerifyOptions { seed });
            emit_json(out, &report)?;
            if !report.all_passed() {
                return Ok(ExitCode::Numeric);
            }
        }
        Command::Galerkin(args) => {
            let params = settings.params(args.point)?;
            let weight = ConformalWeight::from_expr(&settings.get(args.weight, "weight")?)?;
            let cutoff = settings.or(args.cutoff, "cutoff", 800.0)?;
            let count = settings.or(args.count, "count", 4usize)?;
            let cert = bound_certificate(&params, &weight, cutoff)?;
            let problem = assemble(&params, &weight, cutoff)?;
            let ritz: Vec<f64> = solve_generalized(&problem, count.min(problem.len() - 1))?
                .iter()
                .map(|v| v * problem.area())
                .collect();
            emit_json(out, &json!({ "certificate": cert, "normalized_ritz": ritz }))?;
        }
        Command::TrialSearch(args) => {
            let params = settings.params(args.point)?;
            let r = settings.or(args.r, "r", 0.55)?;
            let n = settings.or(args.grid, "grid", 64usize)?;
            let density = settings.or(args.density, "density", 16usize)?;
            let mut f1 = F1Choice::default_for(&params)?;
            if let Some(m) = settings.opt(args.mode, "mode")? {
                f1.mode = parse_mode(&m)?;
            }
            if let Some(p) = settings.opt(args.parity, "parity")? {
                f1.parity = match p {
                    ParityArg::Cos => Parity::Cos,
                    ParityArg::Sin => Parity::Sin,
                };
            }
            f1.angle = settings.or(args.angle, "angle", f1.angle)?;
            let lambda1 = enumerate_spectrum(&params, 1)?
                .eigenvalue(1)
                .expect("index 1 enumerated");
            if (mode_eigenvalue(&params, f1.mode) - lambda1).abs() > MERGE_RTOL * lambda1 {
                return Err(Error::InvalidParams(format!(
                    "mode ({},{}) is not in the first eigenspace",
                    f1.mode.p(),
                    f1.mode.q()
                )));
            }
            let ctx = build_context(params, r, TorusGrid::square(params, n)?, f1)?;
            let search = search_orthogonal_cap(&ctx, density)?;
            let report = match &search.cap {
                Some(cap) => Some(trial_report(&ctx, cap)?),
                None => None,
            };
            let cap: Option<&Cap> = search.cap.as_ref();
            emit_json(
                out,
                &json!({
                    "a": params.a(),
                    "b": params.b(),
                    "r": r,
                    "grid": n,
                    "density": density,
                    "seed": seed,
                    "f1": f1,
                    "xi": ctx.xi().as_slice(),
                    "success": search.success,
                    "residual": search.residual,
                    "threshold": search.threshold,
                    "coarse_residual": search.coarse_residual,
                    "evaluations": search.evaluations,
                    "cap": cap.map(|c| json!({ "p": c.center().as_slice(), "t": c.t() })),
                    "report": report,
                }),
            )?;
        }
    }
    Ok(ExitCode::Success)
}

fn parse_mode(s: &str) -> Result<Mode> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Error::Config(format!("mode must be \"p,q\", got '{s}'"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let p = parts[0].parse().map_err(|_| bad())?;
    let q = parts[1].parse().map_err(|_| bad())?;
    let mode = Mode::new(p, q)?;
    if mode.is_zero() {
        return Err(Error::Config("the constant mode is not a first eigenfunction".into()));
    }
    Ok(mode)
}

fn run_scan(settings: &Settings, args: ScanArgs, out: &mut dyn Write, heatmap: bool) -> Result<()> {
    let config = ScanConfig {
        a_range: Range::new(
            settings.or(args.a_min, "a-min", 0.0)?,
            settings.or(args.a_max, "a-max", 0.5)?,
            settings.or(args.a_steps, "a-steps", 11)?,
        )?,
        b_range: Range::new(
            settings.or(args.b_min, "b-min", 0.8)?,
            settings.or(args.b_max, "b-max", 2.5)?,
            settings.or(args.b_steps, "b-steps", 18)?,
        )?,
    };
    let format: OutputFormat = if heatmap {
        OutputFormat::Svg
    } else {
        settings.or(args.format, "format", Format::Csv)?.into()
    };
    let column = Column::parse(&settings.or(args.column, "column", "conjecture_margin".to_string())?)?;
    let output = settings.opt(args.output, "output")?;
    let rows = scan(&config)?;
    let mut buf = Vec::new();
    match format {
        OutputFormat::Csv => write_csv(&rows, &mut buf)?,
        OutputFormat::Svg => buf.extend(render_svg(&rows, &config, column).into_bytes()),
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut buf, &rows).map_err(std::io::Error::from)?;
            buf.push(b'\n');
        }
    }
    match output {
        Some(path) => {
            fs::write(&path, buf).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?
        }
        None => out.write_all(&buf)?,
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(std::io::Error::from)?;
    writeln!(out)?;
    Ok(())
}
