//! `qbf`: zeros, evaluation, q-Fourier-Bessel coefficients and identity checks for the
//! Hahn-Exton q-Bessel function from the command line.
//!
//! Exit codes: 0 success, 1 usage or parameter error, 2 a zero could not be located,
//! 3 unreadable `--values` file, 4 a verification family failed, 5 other numerical failure.

mod cache;
mod output;
mod values;
mod verify;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qbf_core::expansions::ClosedFormExpansion;
use qbf_core::qpoly::poly_p_by_recurrence;
use qbf_core::series::{convergence_report, fourier_coefficients, partial_sum_grid};
use qbf_core::{bessel_j, bessel_j_prime, GridFunction, QContext, QbfError, ZeroCache};
use serde_json::json;

use crate::cache::ZeroRow;
use crate::output::{Cell, Format, Report, Table};
use crate::verify::{Family, VerifyParams};

#[derive(Parser, Debug)]
#[command(name = "qbf", version, about = "Hahn-Exton q-Bessel zeros and q-Fourier-Bessel series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Base q, strictly between 0 and 1.
    #[arg(long, global = true, default_value_t = 0.5)]
    q: f64,
    /// Order nu.
    #[arg(long, global = true, default_value_t = 1.0)]
    nu: f64,
    /// Second order mu of the g-nu-mu target.
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Number of coefficients or zeros.
    #[arg(long, global = true)]
    kmax: Option<usize>,
    /// Largest grid index n of q^n in error tables.
    #[arg(long, global = true, default_value_t = 32)]
    ngrid: usize,
    /// Grid depth for Jackson integrals.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Relative truncation tolerance for series and integrals.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Minimum working precision in bits; raise it to resolve far-tail coefficients.
    #[arg(long, global = true)]
    prec: Option<u32>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Zero-cache directory (overrides QBF_CACHE_DIR).
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Seed for the random test sequences of `verify`.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Positive zeros j_k with eps_k, alpha_k and certification.
    Zeros {
        /// Index range `a..b` (inclusive), `a..=b`, or a single index.
        #[arg(long, default_value = "1..10")]
        k: KRange,
    },
    /// J_nu(x), J_nu'(x) and optionally P_n(x).
    Eval {
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        x: Vec<f64>,
        /// Degree of P_n to evaluate as well.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Numerical coefficients a_k and norms eta_k.
    Coeffs(TargetArgs),
    /// Coefficients against closed forms, and partial-sum errors on the grid.
    Expand(TargetArgs),
    /// Run identity suites; nonzero exit if any fails.
    Verify {
        #[arg(long = "family", value_enum)]
        families: Vec<Family>,
    },
    /// Convergence diagnostics of the partial sums.
    Converge(TargetArgs),
}

#[derive(Args, Debug)]
struct TargetArgs {
    /// Built-in target function.
    #[arg(long = "f", value_enum, conflicts_with = "values")]
    f: Option<Builtin>,
    /// CSV file with header `n,f` giving f(q^n).
    #[arg(long)]
    values: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Builtin {
    PowerNu,
    GNuMu,
}

#[derive(Clone, Copy, Debug)]
struct KRange {
    lo: usize,
    hi: usize,
}

impl FromStr for KRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not an index"));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.strip_prefix('=').unwrap_or(b))?),
            None => {
                let k = parse(s)?;
                (k, k)
            }
        };
        if lo == 0 || hi < lo {
            return Err(format!("need 1 <= a <= b, got `{s}`"));
        }
        Ok(Self { lo, hi })
    }
}

/// An error with its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Self { code: 1, error: anyhow::anyhow!(msg.into()) }
    }
}

impl From<QbfError> for Failure {
    fn from(e: QbfError) -> Self {
        let code = match e {
            QbfError::InvalidParameter(_) => 1,
            QbfError::OutOfRegime { .. } | QbfError::NoSignChange { .. } => 2,
            _ => 5,
        };
        Self { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self { code: 5, error }
    }
}

type CmdResult = Result<(Report, bool), Failure>;

fn context(c: &Common) -> Result<QContext, Failure> {
    let mut ctx = QContext::new(c.q, c.nu)?;
    if let Some(d) = c.depth {
        ctx = ctx.with_depth(d)?;
    }
    if let Some(t) = c.tol {
        ctx = ctx.with_term_tol(t)?;
    }
    if let Some(b) = c.prec {
        ctx = ctx.with_min_prec(b)?;
    }
    Ok(ctx)
}

fn cmd_zeros(c: &Common, range: KRange) -> CmdResult {
    let ctx = context(c)?;
    let path = cache::cache_dir(c.cache.as_deref()).map(|d| cache::file_path(&d, c.q, c.nu));
    let mut rows: BTreeMap<usize, ZeroRow> = path.as_deref().map(|p| cache::load(p, c.q, c.nu)).unwrap_or_default();
    let missing: Vec<usize> = (range.lo..=range.hi).filter(|k| !rows.contains_key(k)).collect();
    if !missing.is_empty() {
        for z in ZeroCache::shared(&ctx).many(&missing)? {
            rows.insert(
                z.k,
                ZeroRow { k: z.k, value: z.value, eps: z.eps_k, alpha: z.alpha_k, certified: z.certified },
            );
        }
        if let Some(p) = &path {
            if let Err(e) = cache::store(p, c.q, c.nu, &rows) {
                eprintln!("warning: zero cache not written: {e:#}");
            }
        }
    }
    let mut t = Table::new("zeros", &["k", "value", "eps", "alpha", "certified"]);
    for k in range.lo..=range.hi {
        let r = &rows[&k];
        t.push(vec![k.into(), r.value.into(), r.eps.into(), r.alpha.into(), r.certified.into()]);
    }
    Ok((Report::single(t), true))
}

fn cmd_eval(c: &Common, xs: &[f64], n: Option<usize>) -> CmdResult {
    let ctx = context(c)?;
    let poly = n.map(|n| poly_p_by_recurrence(&ctx, n));
    let mut headers = vec!["x", "j", "j_prime"];
    if poly.is_some() {
        headers.push("p_n");
    }
    let mut t = Table::new("values", &headers);
    for &x in xs {
        let mut row: Vec<Cell> =
            vec![x.into(), bessel_j(&ctx, x)?.value.into(), bessel_j_prime(&ctx, x)?.value.into()];
        if let Some(p) = &poly {
            row.push(p.eval(x).into());
        }
        t.push(row);
    }
    let mut report = Report::single(t);
    if let Some(n) = n {
        report = report.meta("n", n);
    }
    Ok((report, true))
}

/// The target grid function and, for built-ins, its closed-form expansion.
fn target(c: &Common, ctx: &QContext, args: &TargetArgs) -> Result<(GridFunction, Option<ClosedFormExpansion>), Failure> {
    if let Some(path) = &args.values {
        let samples = values::load(path).map_err(|error| Failure { code: 3, error })?;
        return Ok((samples.to_grid(ctx)?, None));
    }
    let exp = match args.f.unwrap_or(Builtin::PowerNu) {
        Builtin::PowerNu => ClosedFormExpansion::power_nu(ctx)?,
        Builtin::GNuMu => {
            let mu = c.mu.ok_or_else(|| Failure::usage("--f g-nu-mu needs --mu"))?;
            ClosedFormExpansion::g_nu_mu(ctx, mu)?
        }
    };
    Ok((exp.grid_function(ctx.depth(), ctx.min_prec() + 64)?, Some(exp)))
}

fn target_meta(report: Report, c: &Common, k_max: usize) -> Report {
    let mut r = report.meta("q", c.q).meta("nu", c.nu);
    if let Some(mu) = c.mu {
        r = r.meta("mu", mu);
    }
    r.meta("kmax", k_max)
}

fn cmd_coeffs(c: &Common, args: &TargetArgs) -> CmdResult {
    let ctx = context(c)?;
    let k_max = c.kmax.unwrap_or(10);
    let (f, _) = target(c, &ctx, args)?;
    let mut t = Table::new("coefficients", &["k", "a_k", "eta"]);
    for a in fourier_coefficients(&ctx, &f, k_max)? {
        t.push(vec![a.k.into(), a.value.into(), a.eta.into()]);
    }
    Ok((Report::single(t), true))
}

fn cmd_expand(c: &Common, args: &TargetArgs) -> CmdResult {
    let ctx = context(c)?;
    let k_max = c.kmax.unwrap_or(30);
    let (f, exp) = target(c, &ctx, args)?;
    let numeric = fourier_coefficients(&ctx, &f, k_max)?;
    let closed = exp.map(|e| e.coefficients(k_max)).transpose()?;
    let mut coeffs = Table::new("coefficients", &["k", "numeric", "closed_form", "relative_difference"]);
    for (i, a) in numeric.iter().enumerate() {
        let cf = closed.as_ref().map(|v| v[i].value);
        let rel = cf.map(|b| if b == 0.0 { (a.value - b).abs() } else { ((a.value - b) / b).abs() });
        coeffs.push(vec![a.k.into(), a.value.into(), cf.into(), rel.into()]);
    }
    let n_grid = c.ngrid.min(f.depth()).min(ctx.depth());
    let sums = partial_sum_grid(&ctx, &numeric, n_grid)?;
    let mut points = Table::new("points", &["n", "x", "f", "partial_sum", "error"]);
    let q = ctx.q();
    for (n, s) in sums.iter().enumerate() {
        let fv = f.values()[n].to_f64();
        let sv = s.to_f64();
        let err = qbf_core::Float::with_val(s.prec(), &f.values()[n] - s).abs().to_f64();
        points.push(vec![n.into(), q.powi(n as i32).into(), fv.into(), sv.into(), err.into()]);
    }
    let report = Report { meta: Default::default(), tables: vec![coeffs, points] };
    Ok((target_meta(report, c, k_max), true))
}

fn cmd_converge(c: &Common, args: &TargetArgs) -> CmdResult {
    let ctx = context(c)?;
    let k_max = c.kmax.unwrap_or(40);
    let (f, _) = target(c, &ctx, args)?;
    let r = convergence_report(&ctx, &f, k_max, c.ngrid)?;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    let mut t = Table::new("partial_sums", &["K", "sup_error", "term_sup"]);
    for (i, &k) in r.partial_sum_depths.iter().enumerate() {
        t.push(vec![k.into(), r.sup_errors[i].into(), r.term_sup[i].into()]);
    }
    let report = Report::single(t)
        .meta("ngrid", r.n_grid)
        .meta("sup_error_rate", json!(r.sup_error_rate))
        .meta("term_rate", json!(r.term_rate))
        .meta("holder", json!(r.holder))
        .meta("weighted_l2", r.weighted_l2)
        .meta("hypotheses", json!(r.hypotheses))
        .meta("uniform_hypotheses_hold", r.hypotheses.all_hold())
        .meta("dropped_terms", r.dropped_terms)
        .meta("dropped_tail_bound", r.dropped_tail_bound)
        .meta("warnings", json!(r.warnings));
    Ok((target_meta(report, c, k_max), true))
}

fn cmd_verify(c: &Common, families: &[Family]) -> CmdResult {
    let ctx = context(c)?;
    let params = VerifyParams { k_max: c.kmax.unwrap_or(10), seed: c.seed };
    Ok(verify::verify(&ctx, families, &params))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let c = &cli.common;
    let result = match &cli.command {
        Command::Zeros { k } => cmd_zeros(c, *k),
        Command::Eval { x, n } => cmd_eval(c, x, *n),
        Command::Coeffs(a) => cmd_coeffs(c, a),
        Command::Expand(a) => cmd_expand(c, a),
        Command::Verify { families } => cmd_verify(c, families),
        Command::Converge(a) => cmd_converge(c, a),
    };
    match result.and_then(|(report, ok)| Ok((report.render(c.format)?, ok))) {
        Ok((text, ok)) => {
            print!("{text}");
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(4)
            }
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
