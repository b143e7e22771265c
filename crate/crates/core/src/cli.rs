//! Command-line front end. Every subcommand prints one JSON document with a
//! top-level `"schema": 1`; exact rationals are strings like `"3/5"`.
//!
//! Exit codes: 0 success, 1 a validation check failed, 2 bad usage or
//! configuration (including sizes that no tree of the family can have).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Map, Value};

use crate::asymptotics::{constants_report, fundamental_constants, mu_sigma};
use crate::enumeration::{enumerate_trees, oracle_distribution, Distribution, MAX_ENUMERATION_SIZE};
use crate::error::{Error, Result};
use crate::sampler::{ks_normal_lattice, monte_carlo_with, SampleStats, SamplerMethod};
use crate::series::{exact_distribution, exact_moments};
use crate::tree::{removed_additive, removed_operational};
use crate::weights::{rational_to_f64, WeightFamily};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "leafcut", version, about = "Iterated leaf-cutting on simply generated trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fundamental and per-level asymptotic constants.
    Constants {
        /// plane, cayley, binary, dary:D or custom:FILE.json
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 10)]
        r_max: usize,
    },
    /// Exact law, mean and variance of a_r from generating functions.
    Exact {
        #[arg(long)]
        family: String,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        n: usize,
        /// Truncation order for the moment series (defaults to n).
        #[arg(long)]
        order: Option<usize>,
    },
    /// Law of a_r by exhaustive enumeration, compared with the series result.
    Enumerate {
        #[arg(long)]
        family: String,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        n: usize,
    },
    /// Monte Carlo sample of a_r.
    Sample {
        #[arg(long)]
        family: String,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        /// Write the sampled values as CSV to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// `csv` prints the values on stdout instead of the JSON summary.
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, value_enum, default_value_t = Method::Recursive)]
        method: Method,
    },
    /// Normal approximation check of a sample.
    Clt {
        #[arg(long)]
        family: String,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        /// Largest accepted Kolmogorov-Smirnov distance.
        #[arg(long, default_value_t = 0.02)]
        ks_threshold: f64,
        #[arg(long, value_enum, default_value_t = Method::Recursive)]
        method: Method,
    },
    /// Exact cross-validation grid.
    Check {
        /// Largest tree size enumerated.
        #[arg(long, default_value_t = 10)]
        max_n: usize,
        #[arg(long, default_value_t = 4)]
        max_r: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Recursive,
    GaltonWatson,
}

impl From<Method> for SamplerMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Recursive => SamplerMethod::Recursive,
            Method::GaltonWatson => SamplerMethod::GaltonWatson,
        }
    }
}

/// Run with process stdout and stderr; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

/// `plane`, `cayley`, `binary`, `dary:D` or `custom:FILE.json`.
pub fn parse_family(text: &str) -> Result<WeightFamily> {
    match text.strip_prefix("custom:") {
        Some(path) => WeightFamily::from_json_str(&fs::read_to_string(Path::new(path))?),
        None => WeightFamily::builtin(text),
    }
}

fn rat(q: &BigRational) -> Value {
    Value::String(q.to_string())
}

fn distribution_json(d: &Distribution) -> Value {
    Value::Object(
        d.probabilities()
            .iter()
            .map(|(m, p)| (m.to_string(), rat(p)))
            .collect::<Map<_, _>>(),
    )
}

fn emit(out: &mut dyn Write, command: &str, body: Value) -> Result<()> {
    let mut doc = Map::new();
    doc.insert("schema".into(), json!(SCHEMA_VERSION));
    doc.insert("command".into(), json!(command));
    match body {
        Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("result".into(), other);
        }
    }
    serde_json::to_writer_pretty(&mut *out, &Value::Object(doc))?;
    writeln!(out)?;
    Ok(())
}

fn require_r(r: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidArgument("r must be >= 1".into()));
    }
    Ok(())
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Constants { family, r_max } => {
            let f = parse_family(&family)?;
            let report = constants_report(&f, r_max)?;
            emit(out, "constants", serde_json::to_value(report)?)?;
            Ok(EXIT_OK)
        }
        Command::Exact { family, r, n, order } => {
            let f = parse_family(&family)?;
            require_r(r)?;
            let order = order.unwrap_or(n);
            let moments = exact_moments(&f, r, n, order)?;
            let dist = exact_distribution(&f, r, n)?;
            emit(
                out,
                "exact",
                json!({
                    "family": f.to_string(),
                    "r": r,
                    "n": n,
                    "order": order,
                    "distribution": distribution_json(&dist),
                    "mean": rat(&moments.mean),
                    "variance": rat(&moments.variance),
                    "mean_float": rational_to_f64(&moments.mean),
                    "variance_float": rational_to_f64(&moments.variance),
                }),
            )?;
            Ok(EXIT_OK)
        }
        Command::Enumerate { family, r, n } => {
            let f = parse_family(&family)?;
            require_r(r)?;
            let oracle = oracle_distribution(&f, r, n)?;
            let series = exact_distribution(&f, r, n)?;
            let agrees = oracle.same_law(&series);
            emit(
                out,
                "enumerate",
                json!({
                    "family": f.to_string(),
                    "r": r,
                    "n": n,
                    "distribution": distribution_json(&oracle),
                    "mean": rat(&oracle.mean()),
                    "variance": rat(&oracle.variance()),
                    "series_distribution": distribution_json(&series),
                    "series_agrees": agrees,
                }),
            )?;
            Ok(if agrees { EXIT_OK } else { EXIT_VALIDATION })
        }
        Command::Sample {
            family,
            r,
            n,
            count,
            seed,
            out: path,
            format,
            method,
        } => {
            let f = parse_family(&family)?;
            let stats = monte_carlo_with(&f, r, n, count, seed, method.into())?;
            if let Some(path) = path {
                let mut file = fs::File::create(path)?;
                write_csv(&mut file, &stats.values)?;
            }
            match format {
                Format::Csv => write_csv(out, &stats.values)?,
                Format::Json => emit(out, "sample", summary_json(&stats)?)?,
            }
            Ok(EXIT_OK)
        }
        Command::Clt {
            family,
            r,
            n,
            count,
            seed,
            ks_threshold,
            method,
        } => {
            let f = parse_family(&family)?;
            let stats = monte_carlo_with(&f, r, n, count, seed, method.into())?;
            let exact = exact_moments(&f, r, n, n)?;
            let exact_mean = rational_to_f64(&exact.mean);
            let exact_variance = rational_to_f64(&exact.variance);
            let level = mu_sigma(&f, r)?;
            let mean_tolerance = 4.0 * (level.sigma2 * n as f64 / count as f64).sqrt();
            let mean_ok = (stats.mean - exact_mean).abs() <= mean_tolerance;
            let ks_ok = stats.ks.is_some_and(|d| d <= ks_threshold);
            let ks_lattice = stats.residuals.as_ref().map(|_| {
                let center = level.mu * n as f64;
                let scale = (level.sigma2 * n as f64).sqrt();
                ks_normal_lattice(&stats.values, center, scale)
            });
            let pass = mean_ok && ks_ok;
            let mut body = summary_json(&stats)?;
            let extra = json!({
                "ks_threshold": ks_threshold,
                "ks_lattice": ks_lattice,
                "exact_mean": rat(&exact.mean),
                "exact_variance": rat(&exact.variance),
                "exact_mean_float": exact_mean,
                "exact_variance_float": exact_variance,
                "asymptotic_mean": level.mu * n as f64 + level.kappa,
                "asymptotic_variance": level.sigma2 * n as f64,
                "mean_tolerance": mean_tolerance,
                "mean_ok": mean_ok,
                "ks_ok": ks_ok,
                "pass": pass,
            });
            if let (Value::Object(b), Value::Object(e)) = (&mut body, extra) {
                b.extend(e);
            }
            emit(out, "clt", body)?;
            Ok(if pass { EXIT_OK } else { EXIT_VALIDATION })
        }
        Command::Check { max_n, max_r } => {
            let report = check_grid(max_n, max_r)?;
            let pass = report.failures.is_empty();
            emit(
                out,
                "check",
                json!({
                    "max_n": max_n,
                    "max_r": max_r,
                    "distribution_cases": report.distribution_cases,
                    "additive_cases": report.additive_cases,
                    "constant_cases": report.constant_cases,
                    "failures": report.failures,
                    "pass": pass,
                }),
            )?;
            Ok(if pass { EXIT_OK } else { EXIT_VALIDATION })
        }
    }
}

fn summary_json(stats: &SampleStats) -> Result<Value> {
    Ok(serde_json::to_value(stats)?)
}

/// Header `a_r`, then one value per line.
pub fn write_csv(out: &mut dyn Write, values: &[usize]) -> Result<()> {
    let mut buf = String::with_capacity(values.len() * 4 + 4);
    buf.push_str("a_r\n");
    for v in values {
        buf.push_str(&v.to_string());
        buf.push('\n');
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

/// Outcome of the exact cross-validation grid.
#[derive(Debug, Default)]
pub struct CheckReport {
    pub distribution_cases: usize,
    pub additive_cases: usize,
    pub constant_cases: usize,
    pub failures: Vec<String>,
}

/// Series law against the oracle for plane, binary and Cayley trees; the
/// toll sum against the cutting procedure on every plane tree up to
/// `max_n`; and the closed-form constants of the three families.
pub fn check_grid(max_n: usize, max_r: usize) -> Result<CheckReport> {
    if max_n == 0 || max_n > MAX_ENUMERATION_SIZE {
        return Err(Error::InvalidArgument(format!(
            "max-n must lie in 1..={MAX_ENUMERATION_SIZE}"
        )));
    }
    require_r(max_r)?;
    let mut report = CheckReport::default();
    let families = [WeightFamily::plane(), WeightFamily::binary(), WeightFamily::cayley()];
    for f in &families {
        for n in (1..=max_n).filter(|&n| f.size_matches_period(n)) {
            for r in 1..=max_r {
                report.distribution_cases += 1;
                let oracle = oracle_distribution(f, r, n)?;
                let series = exact_distribution(f, r, n)?;
                if !oracle.same_law(&series) {
                    report.failures.push(format!("series law differs from enumeration: {f} n={n} r={r}"));
                }
            }
        }
    }
    for n in 1..=max_n {
        for t in enumerate_trees(n)? {
            for r in 1..=max_r + 2 {
                report.additive_cases += 1;
                if removed_additive(&t, r) != removed_operational(&t, r) {
                    report.failures.push(format!("toll sum differs from cutting: {t} r={r}"));
                }
            }
        }
    }
    let e = std::f64::consts::E;
    let expected = [
        (WeightFamily::plane(), [0.5, 0.25, 0.5, 0.0]),
        (WeightFamily::cayley(), [1.0, 1.0 / e, 2f64.sqrt(), 2.0 / 3.0]),
        (WeightFamily::binary(), [1.0, 0.5, 2f64.sqrt(), 1.0]),
    ];
    for (f, want) in expected {
        let c = fundamental_constants(&f)?;
        let got = [c.tau, c.rho, c.alpha, c.beta];
        for (name, (g, w)) in ["tau", "rho", "alpha", "beta"].iter().zip(got.iter().zip(want)) {
            report.constant_cases += 1;
            if (g - w).abs() > 1e-10 {
                report.failures.push(format!("{f} {name} = {g}, expected {w}"));
            }
        }
    }
    report.constant_cases += 1;
    let s = mu_sigma(&WeightFamily::binary(), 1)?.sigma2;
    if s.abs() > 1e-12 {
        report.failures.push(format!("binary sigma_1^2 = {s}, expected 0"));
    }
    Ok(report)
}
