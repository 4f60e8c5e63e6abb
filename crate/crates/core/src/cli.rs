//! Command-line front end. Every command prints a single JSON document that
//! echoes the resolved configuration next to the result.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on usage, input
//! or numerical errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds::{
    bound_implied_x, critical_dimension_report, lower_quantile_sq, qf_moments, subgaussian_upper_quantile_sq,
    upper_quantile_sq, SubGaussianSpec, TailSide,
};
use crate::error::{Error, Result};
use crate::linalg::{read_csv_matrix, read_csv_sym, spectral_summary, validate_psd, SymMatrix};
use crate::mc::{
    all_pass, verify_moment_constants, verify_quantile_bound, verify_taylor_remainder, verify_tensor_moments,
    verify_truncated_mgf, McReport, NoiseFamily, RngSpec,
};
use crate::statapps::{confset_radius, coverage_experiment, LinearModelSpec};
use crate::tensor::{
    certify_gamma, gamma_bounds, gaussian_moments_exact, operator_norm, read_tensor, taylor_truncation_bound,
    verify_gamma_tau, ColoredSpec, NormOptions, SymTensor3, TaylorVariant,
};

#[derive(Debug, Parser, Serialize)]
#[command(name = "quadconc", version, about = "Quadratic-form deviation bounds, tensor bounds and Monte Carlo checks")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads for sampling (0 = all cores); results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Also write the report to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print the tabular section of the report as CSV instead of JSON.
    #[arg(long, global = true)]
    pub csv: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Quantile bound z²(B, x) for each x.
    Bound(BoundArgs),
    /// Exponent x whose bound equals a given squared threshold.
    Invert(InvertArgs),
    /// Symmetric 3-tensor computations.
    #[command(subcommand)]
    Tensor(TensorCmd),
    /// Monte Carlo verification drivers.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Confidence-set radius for least squares.
    Confset(ConfsetArgs),
    /// Coverage experiment for the least-squares confidence set.
    Coverage(CoverageArgs),
}

fn nonneg_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a finite nonnegative number, got {s}"))
    }
}

fn pos_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a finite positive number, got {s}"))
    }
}

fn finite_f64(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be finite, got {s}"))
    }
}

fn pos_usize(s: &str) -> std::result::Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0 {
        Ok(v)
    } else {
        Err("must be positive".into())
    }
}

fn pos_u32(s: &str) -> std::result::Result<u32, String> {
    let v: u32 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0 {
        Ok(v)
    } else {
        Err("must be positive".into())
    }
}

fn parse_side(s: &str) -> std::result::Result<TailSide, String> {
    match s {
        "upper" => Ok(TailSide::Upper),
        "lower" => Ok(TailSide::Lower),
        _ => Err(format!("expected upper or lower, got {s}")),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct BoundArgs {
    /// PSD matrix B as CSV.
    #[arg(long)]
    pub matrix: PathBuf,
    /// Confidence exponents (repeatable or comma separated).
    #[arg(long, required = true, value_delimiter = ',', allow_negative_numbers = true, value_parser = nonneg_f64)]
    pub x: Vec<f64>,
    #[arg(long, default_value = "upper", value_parser = parse_side)]
    pub side: TailSide,
    /// Sub-gaussian variance proxy g²; scales the upper quantile.
    #[arg(long, value_parser = pos_f64)]
    pub gsq: Option<f64>,
    /// Sample size for the critical-dimension report.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct InvertArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// Squared threshold z².
    #[arg(long, allow_negative_numbers = true, value_parser = nonneg_f64)]
    pub zsq: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct TensorIn {
    /// Tensor file: `i j k value` per line, 1-based.
    #[arg(long)]
    pub tensor: PathBuf,
    /// Dimension, if larger than the largest index in the file.
    #[arg(long, value_parser = pos_usize)]
    pub dim: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct NormArgs {
    #[arg(long, default_value_t = 32, value_parser = pos_usize)]
    pub restarts: usize,
    #[arg(long, default_value_t = 500, value_parser = pos_usize)]
    pub iters: usize,
    #[arg(long, default_value_t = 1e-10, value_parser = pos_f64)]
    pub tol: f64,
    /// Seed for the random restarts.
    #[arg(long, default_value_t = NormOptions::default().seed)]
    pub seed: u64,
}

impl NormArgs {
    fn options(&self) -> NormOptions {
        NormOptions {
            restarts: self.restarts,
            iters: self.iters,
            tol: self.tol,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TensorCmd {
    /// T(u).
    Eval {
        #[command(flatten)]
        input: TensorIn,
        #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true, value_parser = finite_f64)]
        u: Vec<f64>,
    },
    /// ∇T(u).
    Grad {
        #[command(flatten)]
        input: TensorIn,
        #[arg(long, required = true, value_delimiter = ',', allow_hyphen_values = true, value_parser = finite_f64)]
        u: Vec<f64>,
    },
    /// Spectral norm by multi-start power iteration.
    Norm {
        #[command(flatten)]
        input: TensorIn,
        #[command(flatten)]
        norm: NormArgs,
    },
    /// Exact Gaussian moments.
    Moments {
        #[command(flatten)]
        input: TensorIn,
    },
    /// Smallest τ with |T(u)| <= τ‖Γu‖³ (Γ = I when --gamma is absent).
    Certify {
        #[command(flatten)]
        input: TensorIn,
        #[arg(long)]
        gamma: Option<PathBuf>,
        /// Verify a given τ on random directions instead of computing it.
        #[arg(long, allow_negative_numbers = true, value_parser = nonneg_f64)]
        tau: Option<f64>,
        #[arg(long, default_value_t = 10_000, value_parser = pos_usize)]
        points: usize,
        #[command(flatten)]
        norm: NormArgs,
    },
    /// Bound sheet implied by a certificate, white or colored (--dmat).
    Bounds {
        #[command(flatten)]
        input: TensorIn,
        #[arg(long)]
        gamma: Option<PathBuf>,
        #[arg(long)]
        dmat: Option<PathBuf>,
        #[command(flatten)]
        norm: NormArgs,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct Mc {
    #[arg(long, default_value_t = 1_000_000, value_parser = pos_usize)]
    pub n: usize,
    #[arg(long, required = true)]
    pub seed: u64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyCmd {
    /// P(‖ξ‖² beyond z²(B, x)) <= e^{-x}.
    Tail {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, default_value = "gaussian")]
        family: NoiseFamily,
        #[arg(long, required = true, value_delimiter = ',', allow_negative_numbers = true, value_parser = nonneg_f64)]
        x: Vec<f64>,
        #[arg(long, default_value = "upper", value_parser = parse_side)]
        side: TailSide,
        #[command(flatten)]
        mc: Mc,
    },
    /// Exact Gaussian moments of T(γ) and ∇T(γ)/3 against sampling.
    TensorMoments {
        #[command(flatten)]
        input: TensorIn,
        #[arg(long)]
        dmat: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<PathBuf>,
        #[command(flatten)]
        mc: Mc,
    },
    /// Truncated MGF and tail bounds on the Herbst truncation set.
    Mgf {
        #[command(flatten)]
        input: TensorIn,
        #[arg(long)]
        gamma: Option<PathBuf>,
        #[arg(long)]
        dmat: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true, value_parser = nonneg_f64)]
        x: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = finite_f64,
              default_value = "-2,-1,-0.5,0.5,1,2")]
        mu: Vec<f64>,
        #[command(flatten)]
        mc: Mc,
    },
    /// Taylor remainder bounds for X ~ N(0, ε²); k = 3 for e^X, k = 2 for X e^X.
    Taylor {
        #[arg(long, value_parser = pos_f64)]
        eps: f64,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(2..=3))]
        k: u32,
        #[command(flatten)]
        mc: Mc,
    },
    /// E|X|^{2k} <= C_k² ε^{2k} for X ~ N(0, ε²).
    Constants {
        #[arg(long, default_value_t = 1.0, value_parser = pos_f64)]
        eps: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4", value_parser = pos_u32)]
        k: Vec<u32>,
        #[command(flatten)]
        mc: Mc,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct ConfsetArgs {
    /// Design matrix Ψ as CSV, n rows and p columns.
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long, required = true, value_delimiter = ',', allow_negative_numbers = true, value_parser = nonneg_f64)]
    pub x: Vec<f64>,
    #[arg(long, default_value_t = 1.0, value_parser = pos_f64)]
    pub sigma: f64,
    /// Full n × n noise covariance as CSV; overrides --sigma.
    #[arg(long)]
    pub noise_cov: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CoverageArgs {
    #[arg(long)]
    pub design: PathBuf,
    #[arg(long, allow_negative_numbers = true, value_parser = nonneg_f64)]
    pub x: f64,
    #[arg(long, default_value_t = 50_000, value_parser = pos_usize)]
    pub reps: usize,
    #[arg(long, required = true)]
    pub seed: u64,
    #[arg(long, default_value = "gaussian")]
    pub family: NoiseFamily,
    #[arg(long, default_value_t = 1.0, value_parser = pos_f64)]
    pub sigma: f64,
    /// Ground truth υ*; zeros when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, value_parser = finite_f64)]
    pub truth: Option<Vec<f64>>,
}

/// What `run` produced: exit code and the two output streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliOutput {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

struct Outcome {
    result: Value,
    /// `None` for commands without a pass/fail verdict.
    pass: Option<bool>,
    table: Option<Vec<Value>>,
}

impl Outcome {
    fn plain(result: Value) -> Self {
        Self {
            result,
            pass: None,
            table: None,
        }
    }

    fn reports(result: Value, reports: &[McReport]) -> Self {
        Self {
            result,
            pass: Some(all_pass(reports)),
            table: Some(reports.iter().map(|r| serde_json::to_value(r).expect("serializable")).collect()),
        }
    }
}

/// Expands `--config PATH` into flags. The file holds `key = value` lines;
/// `#` starts a comment. Keys become `--key`; `true` makes a bare flag.
/// The expanded flags go right after the command words, so explicit flags
/// on the command line take precedence.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(pos) = argv.iter().position(|a| a == "--config") else {
        return Ok(argv);
    };
    let path = argv
        .get(pos + 1)
        .ok_or_else(|| Error::Parse {
            line: 0,
            msg: "--config needs a path".into(),
        })?
        .clone();
    let mut rest: Vec<OsString> = argv[..pos].to_vec();
    rest.extend_from_slice(&argv[pos + 2..]);
    let text = std::fs::read_to_string(Path::new(&path))?;
    let mut flags = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: lineno + 1,
            msg: format!("expected key = value, got {line:?}"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        match v {
            "true" => flags.push(OsString::from(format!("--{k}"))),
            "false" => {}
            _ => {
                flags.push(OsString::from(format!("--{k}")));
                flags.push(OsString::from(v));
            }
        }
    }
    let insert_at = 1 + rest.iter().skip(1).take_while(|a| !a.to_string_lossy().starts_with('-')).count();
    let tail = rest.split_off(insert_at.min(rest.len()));
    rest.extend(flags);
    rest.extend(tail);
    Ok(rest)
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Bound(_) => "bound",
        Command::Invert(_) => "invert",
        Command::Tensor(t) => match t {
            TensorCmd::Eval { .. } => "tensor eval",
            TensorCmd::Grad { .. } => "tensor grad",
            TensorCmd::Norm { .. } => "tensor norm",
            TensorCmd::Moments { .. } => "tensor moments",
            TensorCmd::Certify { .. } => "tensor certify",
            TensorCmd::Bounds { .. } => "tensor bounds",
        },
        Command::Verify(v) => match v {
            VerifyCmd::Tail { .. } => "verify tail",
            VerifyCmd::TensorMoments { .. } => "verify tensor-moments",
            VerifyCmd::Mgf { .. } => "verify mgf",
            VerifyCmd::Taylor { .. } => "verify taylor",
            VerifyCmd::Constants { .. } => "verify constants",
        },
        Command::Confset(_) => "confset",
        Command::Coverage(_) => "coverage",
    }
}

/// Parses `argv` (program name first), runs the command and renders output.
pub fn run<I, T>(argv: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let fail = |msg: String| CliOutput {
        code: 2,
        stdout: String::new(),
        stderr: format!("error: {}\n", msg.lines().next().unwrap_or("").trim_start_matches("error: ")),
    };
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => return fail(e.to_string()),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliOutput {
                    code: 0,
                    stdout: e.to_string(),
                    stderr: String::new(),
                },
                _ => fail(one_line(&e.render().to_string())),
            };
        }
    };
    let outcome = match execute(&cli) {
        Ok(o) => o,
        Err(e) => return fail(e.to_string()),
    };
    let mut doc = json!({
        "command": command_name(&cli.command),
        "config": cli,
        "result": outcome.result,
    });
    if let Some(p) = outcome.pass {
        doc["pass"] = json!(p);
    }
    let text = match (&outcome.table, cli.csv) {
        (Some(rows), true) => to_csv(rows),
        _ => serde_json::to_string_pretty(&doc).expect("serializable") + "\n",
    };
    if let Some(path) = &cli.out {
        if let Err(e) = std::fs::write(path, &text) {
            return fail(format!("cannot write {}: {e}", path.display()));
        }
    }
    CliOutput {
        code: if outcome.pass == Some(false) { 1 } else { 0 },
        stdout: text,
        stderr: String::new(),
    }
}

/// Joins the body of a multi-line clap diagnostic, dropping usage and hints.
fn one_line(msg: &str) -> String {
    msg.lines()
        .map(str::trim)
        .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Flat CSV of the scalar fields of each row; nested values are JSON-encoded.
fn to_csv(rows: &[Value]) -> String {
    let mut cols: Vec<String> = Vec::new();
    for r in rows {
        if let Some(obj) = r.as_object() {
            for k in obj.keys() {
                if !cols.contains(k) {
                    cols.push(k.clone());
                }
            }
        }
    }
    let cell = |v: Option<&Value>| -> String {
        match v {
            None | Some(Value::Null) => String::new(),
            Some(Value::String(s)) => s.clone(),
            Some(v @ (Value::Object(_) | Value::Array(_))) => {
                format!("\"{}\"", v.to_string().replace('"', "\"\""))
            }
            Some(v) => v.to_string(),
        }
    };
    let mut out = cols.join(",");
    out.push('\n');
    for r in rows {
        let line: Vec<String> = cols.iter().map(|c| cell(r.get(c))).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn load_tensor(input: &TensorIn) -> Result<SymTensor3> {
    read_tensor(&input.tensor, input.dim)
}

fn load_gamma(path: &Option<PathBuf>, dim: usize) -> Result<SymMatrix> {
    let g = match path {
        Some(p) => read_csv_sym(p)?,
        None => SymMatrix::identity(dim),
    };
    if g.dim() != dim {
        return Err(Error::DimMismatch { expected: dim, got: g.dim() });
    }
    Ok(g)
}

fn load_dmat(path: &Option<PathBuf>, dim: usize) -> Result<Option<SymMatrix>> {
    path.as_ref()
        .map(|p| {
            let d = read_csv_sym(p)?;
            if d.dim() != dim {
                return Err(Error::DimMismatch { expected: dim, got: d.dim() });
            }
            Ok(d)
        })
        .transpose()
}

fn execute(cli: &Cli) -> Result<Outcome> {
    let threads = cli.threads;
    match &cli.command {
        Command::Bound(a) => {
            let b = read_csv_sym(&a.matrix)?;
            let s = spectral_summary(&b)?;
            let sg = a.gsq.map(SubGaussianSpec::new).transpose()?;
            let rows = a
                .x
                .iter()
                .map(|&x| {
                    let z = match (a.side, &sg) {
                        (TailSide::Upper, None) => upper_quantile_sq(&s, x)?,
                        (TailSide::Upper, Some(sg)) => subgaussian_upper_quantile_sq(&s, sg, x)?,
                        (TailSide::Lower, None) => lower_quantile_sq(&s, x)?,
                        (TailSide::Lower, Some(_)) => {
                            return Err(Error::Unsupported("--gsq applies to the upper side only".into()))
                        }
                    };
                    Ok(json!({"x": x, "side": a.side, "z_sq": z, "level": (-x).exp()}))
                })
                .collect::<Result<Vec<Value>>>()?;
            let mut result = json!({
                "summary": s,
                "moments": qf_moments(&s),
                "psd": validate_psd(&b),
                "quantiles": rows,
            });
            if let Some(n) = a.n {
                result["critical_dimension"] = json!(critical_dimension_report(&s, n));
            }
            Ok(Outcome {
                result,
                pass: None,
                table: Some(rows),
            })
        }
        Command::Invert(a) => {
            let s = spectral_summary(&read_csv_sym(&a.matrix)?)?;
            let x = bound_implied_x(&s, a.zsq)?;
            Ok(Outcome::plain(json!({
                "summary": s,
                "z_sq": a.zsq,
                "x": x,
                "p_value_bound": (-x).exp().min(1.0),
            })))
        }
        Command::Tensor(t) => tensor(t),
        Command::Verify(v) => verify(v, threads),
        Command::Confset(a) => {
            let design = read_csv_matrix(&a.design)?;
            let n = design.nrows();
            let cov = match &a.noise_cov {
                Some(p) => read_csv_sym(p)?,
                None => SymMatrix::identity(n).scale(a.sigma * a.sigma),
            };
            let rows = a
                .x
                .iter()
                .map(|&x| confset_radius(&design, &cov, x).map(|c| serde_json::to_value(c).expect("serializable")))
                .collect::<Result<Vec<Value>>>()?;
            Ok(Outcome {
                result: json!({"n": n, "p": design.ncols(), "sets": rows}),
                pass: None,
                table: Some(rows),
            })
        }
        Command::Coverage(a) => {
            let design = read_csv_matrix(&a.design)?;
            let truth = a.truth.clone().unwrap_or_else(|| vec![0.0; design.ncols()]);
            let model = LinearModelSpec::new(design, a.family, a.sigma, truth)?;
            let rep = coverage_experiment(&model, a.x, a.reps, RngSpec::new(a.seed), threads)?;
            Ok(Outcome::reports(json!({"reports": [rep.clone()]}), &[rep]))
        }
    }
}

fn tensor(cmd: &TensorCmd) -> Result<Outcome> {
    match cmd {
        TensorCmd::Eval { input, u } => {
            let t = load_tensor(input)?;
            Ok(Outcome::plain(json!({"dim": t.dim(), "u": u, "value": t.evaluate(u)?})))
        }
        TensorCmd::Grad { input, u } => {
            let t = load_tensor(input)?;
            Ok(Outcome::plain(json!({"dim": t.dim(), "u": u, "gradient": t.gradient(u)?})))
        }
        TensorCmd::Norm { input, norm } => {
            let t = load_tensor(input)?;
            Ok(Outcome::plain(json!(operator_norm(&t, &norm.options()))))
        }
        TensorCmd::Moments { input } => {
            let t = load_tensor(input)?;
            let m = gaussian_moments_exact(&t);
            Ok(Outcome::plain(json!({
                "dim": t.dim(),
                "frobenius_sq": t.frobenius_sq(),
                "trace_vector": t.trace_vector(),
                "e_t2": m.e_t2,
                "e_centered2": m.e_centered2,
                "e_grad_norm2": m.e_grad_norm2,
            })))
        }
        TensorCmd::Certify {
            input,
            gamma,
            tau,
            points,
            norm,
        } => {
            let t = load_tensor(input)?;
            let g = load_gamma(gamma, t.dim())?;
            match tau {
                Some(tau) => {
                    let check = verify_gamma_tau(&t, &g, *tau, *points, norm.seed)?;
                    Ok(Outcome {
                        result: json!(check),
                        pass: Some(check.holds),
                        table: None,
                    })
                }
                None => {
                    let cert = certify_gamma(&t, &g, &norm.options())?;
                    Ok(Outcome::plain(json!({
                        "tau": cert.tau,
                        "certified": cert.certified,
                        "method": cert.method,
                        "gamma": cert.gamma.to_row_major(),
                    })))
                }
            }
        }
        TensorCmd::Bounds {
            input,
            gamma,
            dmat,
            norm,
        } => {
            let t = load_tensor(input)?;
            let Some(_) = gamma else {
                return Err(Error::MissingCertificate);
            };
            let g = load_gamma(gamma, t.dim())?;
            let cert = certify_gamma(&t, &g, &norm.options())?;
            let colored = load_dmat(dmat, t.dim())?
                .map(|d| ColoredSpec::with_gamma(d, &g))
                .transpose()?;
            let sheet = gamma_bounds(&cert, colored.as_ref())?;
            let m = gaussian_moments_exact(&t);
            Ok(Outcome::plain(json!({
                "tau": cert.tau,
                "certified": cert.certified,
                "sheet": sheet,
                "exact": {
                    "frobenius_sq": t.frobenius_sq(),
                    "trace_vector_norm": t.trace_vector().iter().map(|x| x * x).sum::<f64>().sqrt(),
                    "e_t2": m.e_t2,
                },
            })))
        }
    }
}

fn verify(cmd: &VerifyCmd, threads: usize) -> Result<Outcome> {
    match cmd {
        VerifyCmd::Tail { matrix, family, x, side, mc } => {
            let b = read_csv_sym(matrix)?;
            let reps = verify_quantile_bound(&b, *family, x, *side, mc.n, RngSpec::new(mc.seed), threads)?;
            Ok(Outcome::reports(json!({"reports": reps}), &reps))
        }
        VerifyCmd::TensorMoments { input, dmat, gamma, mc } => {
            let t = load_tensor(input)?;
            let rng = RngSpec::new(mc.seed);
            let reps = match load_dmat(dmat, t.dim())? {
                None => verify_tensor_moments(&t, None, mc.n, rng, threads)?,
                Some(d) => {
                    if gamma.is_none() {
                        return Err(Error::MissingGamma);
                    }
                    let g = load_gamma(gamma, t.dim())?;
                    let cert = certify_gamma(&t, &g, &NormOptions::default())?;
                    let spec = ColoredSpec::with_gamma(d, &g)?;
                    verify_tensor_moments(&t, Some((&spec, &cert)), mc.n, rng, threads)?
                }
            };
            Ok(Outcome::reports(json!({"reports": reps}), &reps))
        }
        VerifyCmd::Mgf {
            input,
            gamma,
            dmat,
            x,
            mu,
            mc,
        } => {
            let t = load_tensor(input)?;
            let g = load_gamma(gamma, t.dim())?;
            let d = load_dmat(dmat, t.dim())?.unwrap_or_else(|| SymMatrix::identity(t.dim()));
            let cert = certify_gamma(&t, &g, &NormOptions::default())?;
            let spec = ColoredSpec::with_gamma(d, &g)?;
            let v = verify_truncated_mgf(&t, &cert, &spec, *x, mu, mc.n, RngSpec::new(mc.seed), threads)?;
            Ok(Outcome::reports(
                json!({
                    "tau": cert.tau,
                    "certified": cert.certified,
                    "epsilon": v.epsilon,
                    "radius": v.radius,
                    "centering": v.centering,
                    "warnings": v.warnings,
                    "reports": v.reports,
                }),
                &v.reports,
            ))
        }
        VerifyCmd::Taylor { eps, k, mc } => {
            let rep = verify_taylor_remainder(*eps, *k, mc.n, RngSpec::new(mc.seed), threads)?;
            let mut result = json!({"reports": [rep.clone()]});
            if *k == 3 {
                result["truncation_bound_exact_constant"] = json!(taylor_truncation_bound(*eps, 3, TaylorVariant::BoundedXi)?);
                result["truncation_bound_rounded_constant"] =
                    json!(crate::tensor::ROUNDED_K3_CONSTANT * eps.powi(3) * (eps * eps).exp());
            }
            Ok(Outcome::reports(result, &[rep]))
        }
        VerifyCmd::Constants { eps, k, mc } => {
            let reps = verify_moment_constants(*eps, k, mc.n, RngSpec::new(mc.seed), threads)?;
            Ok(Outcome::reports(json!({"reports": reps}), &reps))
        }
    }
}
