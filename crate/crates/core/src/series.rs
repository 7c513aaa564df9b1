//! q-Fourier-Bessel analysis on the grid `{q^n}`: the norms `η_k`, coefficients
//! `a_k(f) = η_k^{-1} ∫_0^1 t f(t) J_nu(q j_k t; q^2) d_q t`, partial sums, and
//! convergence diagnostics.
//!
//! The grid columns `J_nu(q^{n+1} j_k; q^2)` are computed once per `(ctx, k)` and
//! shared process-wide. They are accurate to about `ctx.min_prec + 64` bits relative to
//! the column maximum; the value at `n = 0` that enters `η_k` is computed at the full
//! precision of the zero because `q j_k` sits next to `j_{k-1}`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use rayon::prelude::*;
use rug::Float;
use serde::Serialize;

use crate::error::{QbfError, Result};
use crate::hp::{self, log2_abs};
use crate::qbessel::{bessel_j_hp, bessel_j_hp_bits, bessel_j_prime_hp_bits};
use crate::qcore::{q_integral, GridFunction, QContext, TailModel};
use crate::zeros::{ctx_key, BesselZero, CtxKey, ZeroCache};

/// Relative agreement required between the three forms of `η_k`.
pub const ETA_TOL: f64 = 1e-9;
/// Terms below this fraction of the function scale are dropped from partial sums.
pub const DROP_TOL: f64 = 1e-15;
pub const DEFAULT_K_MAX: usize = 40;
pub const DEFAULT_N_GRID: usize = 32;

/// `J_nu(q^{n+1} j_k)` for `n = 0..=depth`, with the derived quantities at `j_k`.
#[derive(Debug)]
pub struct BesselColumn {
    pub k: usize,
    pub zero: Arc<BesselZero>,
    values: Vec<Float>,
    /// `J_nu(q j_k)` at the precision of the zero.
    pub at_qj: Float,
    /// `J_nu'(j_k)`.
    pub j_prime: Float,
    /// `J_{nu+1}(q j_k)`.
    pub j_next: Float,
    /// `η_k` from `-(1-q) q^{nu-2} / (2 j_k) J_nu(q j_k) J_nu'(j_k)`.
    pub eta: Float,
    /// `η_k` as the Jackson integral `∫_0^1 t J_nu(q j_k t)^2 d_q t`.
    pub eta_integral: Float,
    /// `η_k` from `-(1-q) q^{nu-1} / 2 J_{nu+1}(q j_k) J_nu'(j_k)`.
    pub eta_middle: Float,
}

impl BesselColumn {
    pub fn values(&self) -> &[Float] {
        &self.values
    }

    /// `max_n |J_nu(q^{n+1} j_k)|` over `n <= n_max`.
    pub fn max_abs(&self, n_max: usize) -> f64 {
        self.values.iter().take(n_max + 1).map(|v| v.to_f64().abs()).fold(0.0, f64::max)
    }
}

/// Per-context store of grid columns.
#[derive(Debug)]
pub struct FourierBessel {
    ctx: QContext,
    prec: u32,
    zeros: Arc<ZeroCache>,
    columns: RwLock<BTreeMap<usize, Arc<BesselColumn>>>,
}

impl FourierBessel {
    pub fn new(ctx: &QContext) -> Self {
        Self {
            ctx: *ctx,
            prec: ctx.min_prec() + 64,
            zeros: ZeroCache::shared(ctx),
            columns: RwLock::new(BTreeMap::new()),
        }
    }

    /// Process-wide store for `ctx`.
    pub fn shared(ctx: &QContext) -> Arc<Self> {
        static ALL: OnceLock<Mutex<HashMap<CtxKey, Arc<FourierBessel>>>> = OnceLock::new();
        let all = ALL.get_or_init(Default::default);
        let mut guard = all.lock().expect("series registry poisoned");
        Arc::clone(guard.entry(ctx_key(ctx)).or_insert_with(|| Arc::new(Self::new(ctx))))
    }

    pub fn ctx(&self) -> &QContext {
        &self.ctx
    }

    /// Working precision of columns and integrals.
    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn zeros(&self) -> &Arc<ZeroCache> {
        &self.zeros
    }

    pub fn column(&self, k: usize) -> Result<Arc<BesselColumn>> {
        if let Some(c) = self.columns.read().expect("series cache poisoned").get(&k) {
            return Ok(Arc::clone(c));
        }
        let c = Arc::new(self.build_column(k)?);
        let mut w = self.columns.write().expect("series cache poisoned");
        Ok(Arc::clone(w.entry(k).or_insert(c)))
    }

    /// Columns `1..=k_max`, building the missing ones in parallel.
    pub fn columns(&self, k_max: usize) -> Result<Vec<Arc<BesselColumn>>> {
        (1..=k_max).into_par_iter().map(|k| self.column(k)).collect()
    }

    fn build_column(&self, k: usize) -> Result<BesselColumn> {
        let ctx = &self.ctx;
        let zero = self.zeros.get(k)?;
        let bits = self.prec;
        let zp = zero.prec.max(bits);
        let q = ctx.q_hp(zp);
        let nu = ctx.nu();

        let mut z = Float::with_val(zp, &zero.exact * &q);
        let at_qj = bessel_j_hp(ctx, &z)?.value;
        let j_next = bessel_j_hp(&ctx.with_nu(nu + 1.0)?, &z)?.value;
        let j_prime = bessel_j_prime_hp_bits(ctx, &zero.exact, bits)?.value;
        let mut values = Vec::with_capacity(ctx.depth() + 1);
        values.push(hp::with_prec(&at_qj, bits));
        for _ in 1..=ctx.depth() {
            z *= &q;
            values.push(hp::with_prec(&bessel_j_hp_bits(ctx, &z, bits)?.value, bits));
        }

        let p = bits;
        let one_minus_q = Float::with_val(p, 1 - &ctx.q_hp(p));
        let q_nu = ctx.q_pow(p, nu);
        let qh = ctx.q_hp(p);
        let eta = -Float::with_val(p, &one_minus_q * &q_nu) / Float::with_val(p, qh.square_ref())
            / Float::with_val(p, &zero.exact * 2u32)
            * &at_qj
            * &j_prime;
        let eta_middle = -Float::with_val(p, &one_minus_q * &q_nu) / &qh / 2u32 * &j_next * &j_prime;
        let squares: Vec<Float> = values.iter().map(|v| Float::with_val(p, v.square_ref())).collect();
        let eta_integral = weighted_integral(ctx, p, squares, 2.0 * nu)?;

        let d1 = hp::rel_diff(&eta, &eta_integral);
        let d2 = hp::rel_diff(&eta, &eta_middle);
        if !(eta > 0) || d1 > ETA_TOL || d2 > ETA_TOL {
            return Err(QbfError::Inconsistent(format!(
                "norm of column {k}: closed form {}, integral {}, middle form {} (relative gaps {d1:.3e}, {d2:.3e})",
                hp::to_decimal(&eta, 12),
                hp::to_decimal(&eta_integral, 12),
                hp::to_decimal(&eta_middle, 12)
            )));
        }
        Ok(BesselColumn { k, zero, values, at_qj, j_prime, j_next, eta, eta_integral, eta_middle })
    }
}

/// `∫_0^1 t h(t) d_q t` for grid samples `h(q^n)`, assuming `h(t) ~ t^p` beyond the grid.
fn weighted_integral(ctx: &QContext, prec: u32, h: Vec<Float>, p: f64) -> Result<Float> {
    let q = ctx.q_hp(prec);
    let mut t = Float::with_val(prec, 1);
    let vals = h
        .into_iter()
        .map(|v| {
            let r = Float::with_val(prec, &v * &t);
            t *= &q;
            r
        })
        .collect();
    let g = GridFunction::from_hp_values(ctx, prec, vals)?.with_tail_model(TailModel::PowerLaw { exponent: 1.0 + p });
    Ok(q_integral(&g, 0)?.value)
}

/// Exponent `p` with `f(t) ~ t^p` near 0, if known.
fn tail_exponent(f: &GridFunction) -> Option<f64> {
    match f.tail_model() {
        Some(TailModel::PowerLaw { exponent }) => Some(exponent),
        None => match f.limit_value() {
            Some(l) if !l.is_zero() => Some(0.0),
            _ => None,
        },
    }
}

/// `∫_0^1 t f(t) J_nu(q j_k t) d_q t` on the common depth of `f` and the column.
fn projection(fb: &FourierBessel, f: &GridFunction, col: &BesselColumn) -> Result<Float> {
    let ctx = fb.ctx();
    let p = fb.prec();
    let depth = f.depth().min(col.values.len() - 1);
    let q = ctx.q_hp(p);
    let mut t = Float::with_val(p, 1);
    let mut vals = Vec::with_capacity(depth + 1);
    for n in 0..=depth {
        vals.push(Float::with_val(p, &f.values()[n] * &col.values[n]) * &t);
        t *= &q;
    }
    let mut g = GridFunction::from_hp_values(ctx, p, vals)?;
    if let Some(e) = tail_exponent(f) {
        g = g.with_tail_model(TailModel::PowerLaw { exponent: 1.0 + e + ctx.nu() });
    }
    Ok(q_integral(&g, 0)?.value)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientSource {
    NumericIntegral,
    ClosedForm,
}

/// `a_k(f)` with the norm `η_k` it was divided by.
#[derive(Clone, Debug, Serialize)]
pub struct FourierCoefficient {
    pub k: usize,
    pub value: f64,
    pub eta: f64,
    pub source: CoefficientSource,
    #[serde(skip)]
    pub value_hp: Float,
}

impl FourierCoefficient {
    pub fn new_hp(k: usize, value_hp: Float, eta: &Float, source: CoefficientSource) -> Self {
        Self { k, value: value_hp.to_f64(), eta: eta.to_f64(), source, value_hp }
    }
}

/// The three forms of `η_k` side by side.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EtaNorm {
    pub k: usize,
    pub closed_form: f64,
    pub integral: f64,
    pub middle_form: f64,
    pub max_relative_gap: f64,
}

pub fn eta_norm_report(ctx: &QContext, k: usize) -> Result<EtaNorm> {
    let col = FourierBessel::shared(ctx).column(k)?;
    Ok(EtaNorm {
        k,
        closed_form: col.eta.to_f64(),
        integral: col.eta_integral.to_f64(),
        middle_form: col.eta_middle.to_f64(),
        max_relative_gap: hp::rel_diff(&col.eta, &col.eta_integral).max(hp::rel_diff(&col.eta, &col.eta_middle)),
    })
}

/// `η_k` (closed form), after checking it against the integral and the middle form.
pub fn eta_norm(ctx: &QContext, k: usize) -> Result<f64> {
    Ok(FourierBessel::shared(ctx).column(k)?.eta.to_f64())
}

fn check_index(k: usize) -> Result<()> {
    if k == 0 {
        return Err(QbfError::InvalidParameter("coefficient index starts at 1".into()));
    }
    Ok(())
}

/// `a_k(f)` by Jackson integration.
pub fn fourier_coefficient(ctx: &QContext, f: &GridFunction, k: usize) -> Result<FourierCoefficient> {
    check_index(k)?;
    let fb = FourierBessel::shared(ctx);
    let col = fb.column(k)?;
    let integral = projection(&fb, f, &col)?;
    Ok(FourierCoefficient::new_hp(k, integral / &col.eta, &col.eta, CoefficientSource::NumericIntegral))
}

/// `a_1(f), ..., a_{k_max}(f)`, computed in parallel.
pub fn fourier_coefficients(ctx: &QContext, f: &GridFunction, k_max: usize) -> Result<Vec<FourierCoefficient>> {
    let fb = FourierBessel::shared(ctx);
    fb.columns(k_max)?;
    (1..=k_max).into_par_iter().map(|k| fourier_coefficient(ctx, f, k)).collect()
}

/// `Σ_k a_k J_nu(q j_k x)` at any `x` in `[0, 1]`.
pub fn partial_sum(ctx: &QContext, coeffs: &[FourierCoefficient], x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(QbfError::InvalidParameter(format!("partial sums are evaluated on [0, 1], got {x}")));
    }
    let fb = FourierBessel::shared(ctx);
    let p = fb.prec();
    let terms = coeffs
        .par_iter()
        .map(|c| -> Result<Float> {
            let zero = fb.zeros().get(c.k)?;
            let zp = zero.prec.max(p);
            let z = Float::with_val(zp, &zero.exact * ctx.q()) * x;
            let j = bessel_j_hp_bits(ctx, &z, p)?.value;
            Ok(Float::with_val(p, &c.value_hp * &j))
        })
        .collect::<Result<Vec<Float>>>()?;
    Ok(terms.into_iter().fold(Float::with_val(p, 0), |acc, t| acc + t).to_f64())
}

/// `S(q^n)` for `n = 0..=n_max` from the stored columns, in working precision.
pub fn partial_sum_grid(ctx: &QContext, coeffs: &[FourierCoefficient], n_max: usize) -> Result<Vec<Float>> {
    let fb = FourierBessel::shared(ctx);
    let p = fb.prec();
    let n_max = n_max.min(ctx.depth());
    let mut out = vec![Float::with_val(p, 0); n_max + 1];
    for c in coeffs {
        let col = fb.column(c.k)?;
        for (n, s) in out.iter_mut().enumerate() {
            *s += Float::with_val(p, &c.value_hp * &col.values[n]);
        }
    }
    Ok(out)
}

/// The partial sum as a grid function on the full column depth, usable as input for
/// re-extracting coefficients.
pub fn partial_sum_function(ctx: &QContext, coeffs: &[FourierCoefficient]) -> Result<GridFunction> {
    let fb = FourierBessel::shared(ctx);
    let values = partial_sum_grid(ctx, coeffs, ctx.depth())?;
    Ok(GridFunction::from_hp_values(ctx, fb.prec(), values)?
        .with_limit_value_hp(Float::with_val(fb.prec(), 0))?
        .with_tail_model(TailModel::PowerLaw { exponent: ctx.nu() }))
}

/// `∫_0^1 x J_nu(q j_n x) J_nu(q j_m x) d_q x`.
pub fn inner_product(ctx: &QContext, n: usize, m: usize) -> Result<f64> {
    check_index(n)?;
    check_index(m)?;
    let fb = FourierBessel::shared(ctx);
    let (a, b) = (fb.column(n)?, fb.column(m)?);
    let p = fb.prec();
    let prod = a.values.iter().zip(&b.values).map(|(x, y)| Float::with_val(p, x * y)).collect();
    Ok(weighted_integral(ctx, p, prod, 2.0 * ctx.nu())?.to_f64())
}

#[derive(Clone, Debug, Serialize)]
pub struct OrthogonalityReport {
    pub k_max: usize,
    /// `max |<J_n, J_m>| / sqrt(η_n η_m)` over `n != m`.
    pub max_off_diagonal: f64,
    /// `max |<J_n, J_n> - η_n| / η_n`.
    pub max_diagonal_gap: f64,
}

pub fn orthogonality_report(ctx: &QContext, k_max: usize) -> Result<OrthogonalityReport> {
    let fb = FourierBessel::shared(ctx);
    let cols = fb.columns(k_max)?;
    let p = fb.prec();
    let pairs: Vec<(usize, usize)> = (0..k_max).flat_map(|i| (i..k_max).map(move |j| (i, j))).collect();
    let gaps = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<(bool, f64)> {
            let prod = cols[i].values.iter().zip(&cols[j].values).map(|(x, y)| Float::with_val(p, x * y)).collect();
            let v = weighted_integral(ctx, p, prod, 2.0 * ctx.nu())?;
            if i == j {
                Ok((true, hp::rel_diff(&v, &cols[i].eta)))
            } else {
                let scale = Float::with_val(p, &cols[i].eta * &cols[j].eta).sqrt();
                Ok((false, (v / scale).abs().to_f64()))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let pick = |diag: bool| gaps.iter().filter(|g| g.0 == diag).map(|g| g.1).fold(0.0, f64::max);
    Ok(OrthogonalityReport { k_max, max_off_diagonal: pick(false), max_diagonal_gap: pick(true) })
}

/// Least-squares line `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms: f64,
    pub points: usize,
}

pub fn linear_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / nf).sqrt();
    Some(LinearFit { slope, intercept, rms, points: n })
}

/// Geometric fit `y_K ≈ C ρ^K` through the positive finite entries.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GeometricFit {
    pub ratio: f64,
    pub constant: f64,
    pub log_rms: f64,
    pub points: usize,
}

pub fn geometric_fit(ys: impl IntoIterator<Item = (usize, f64)>) -> Option<GeometricFit> {
    let pts: Vec<(f64, f64)> =
        ys.into_iter().filter(|(_, y)| *y > 0.0 && y.is_finite()).map(|(k, y)| (k as f64, y.ln())).collect();
    linear_fit(&pts).map(|f| GeometricFit {
        ratio: f.slope.exp(),
        constant: f.intercept.exp(),
        log_rms: f.rms,
        points: f.points,
    })
}

/// Fitted `λ, M` in `|f(q^{n-1}) - f(q^n)| ≈ M q^{λ n}`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HolderFit {
    pub order: f64,
    pub constant: f64,
    pub log_rms: f64,
    pub points: usize,
}

/// Hölder-order fit over `n ∈ [2, N-2]`, plus `n = 0` when `f(q^{-1})` is known.
/// Zero differences are skipped.
pub fn holder_fit(f: &GridFunction, n_grid: usize) -> Option<HolderFit> {
    let ln_q = f.ctx().q().ln();
    let n_top = n_grid.min(f.depth());
    let mut ns: Vec<i64> = Vec::new();
    if f.pre_value().is_some() {
        ns.push(0);
    }
    ns.extend(2..=(n_top as i64 - 2));
    let pts: Vec<(f64, f64)> = ns
        .into_iter()
        .filter_map(|n| {
            let a = f.at(n - 1).ok()?;
            let b = f.at(n).ok()?;
            let d = Float::with_val(f.prec(), a - b);
            (!d.is_zero()).then(|| (n as f64, log2_abs(&d) * std::f64::consts::LN_2))
        })
        .collect();
    linear_fit(&pts).map(|l| HolderFit {
        order: l.slope / ln_q,
        constant: l.intercept.exp(),
        log_rms: l.rms,
        points: l.points,
    })
}

/// Numerical reading of the uniform-convergence hypotheses.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Hypotheses {
    pub nu_positive: bool,
    pub holder_above_one: bool,
    pub finite_limit: bool,
    /// `Σ (f(q^n)/q^n)^2` settles within the grid.
    pub weighted_l2_finite: bool,
}

impl Hypotheses {
    pub fn all_hold(&self) -> bool {
        self.nu_positive && self.holder_above_one && self.finite_limit && self.weighted_l2_finite
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub q: f64,
    pub nu: f64,
    pub n_grid: usize,
    /// `K = 1..` up to the last retained term.
    pub partial_sum_depths: Vec<usize>,
    /// `max_{n <= N} |f(q^n) - S_K(q^n)|` for each `K`.
    pub sup_errors: Vec<f64>,
    /// `|f(q^n) - S_K(q^n)|`, indexed `[K-1][n]`.
    pub point_errors: Vec<Vec<f64>>,
    /// `max_{n <= N} |a_k J_nu(q^{n+1} j_k)|`.
    pub term_sup: Vec<f64>,
    pub sup_error_rate: Option<GeometricFit>,
    pub term_rate: Option<GeometricFit>,
    pub holder: Option<HolderFit>,
    pub weighted_l2: f64,
    pub hypotheses: Hypotheses,
    /// Terms beyond the retained ones, below `DROP_TOL` times the function scale.
    pub dropped_terms: usize,
    pub dropped_tail_bound: f64,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub coefficients: Vec<FourierCoefficient>,
}

impl ConvergenceReport {
    /// Whether the sup errors never increase by more than `10 eps` times the scale.
    pub fn sup_errors_nonincreasing(&self, scale: f64) -> bool {
        let slack = 10.0 * f64::EPSILON * scale;
        self.sup_errors.windows(2).all(|w| w[1] <= w[0] + slack)
    }
}

fn weighted_l2(f: &GridFunction, n_grid: usize) -> (f64, bool) {
    let p = f.prec().max(64);
    let q = f.ctx().q_hp(p);
    let mut t = Float::with_val(p, 1);
    let mut sum = Float::with_val(p, 0);
    let mut terms = Vec::new();
    for v in f.values().iter().take(n_grid.min(f.depth()) + 1) {
        let r = Float::with_val(p, v / &t);
        let sq = Float::with_val(p, r.square_ref());
        terms.push(sq.to_f64());
        sum += sq;
        t *= &q;
    }
    let total = sum.to_f64() * (1.0 - f.ctx().q());
    let n = terms.len();
    let settled = n >= 4 && {
        let last = &terms[n - 4..];
        last.windows(2).all(|w| w[1] <= w[0]) && last[3] <= 1e-6 * sum.to_f64().max(f64::MIN_POSITIVE)
    };
    let settled = settled || terms.iter().all(|t| *t == 0.0);
    (total, settled && total.is_finite())
}

fn has_finite_limit(f: &GridFunction) -> bool {
    if let Some(l) = f.limit_value() {
        return l.is_finite();
    }
    let v = f.to_f64();
    let n = v.len();
    n >= 2 && (v[n - 1] - v[n - 2]).abs() <= 1e-12 * v[n - 1].abs().max(1.0)
}

/// Partial-sum errors on `{q^n : n <= n_grid}` for `K = 1..=k_max`, with rate fits
/// and the hypothesis checks. Violated hypotheses produce warnings, not errors.
pub fn convergence_report(ctx: &QContext, f: &GridFunction, k_max: usize, n_grid: usize) -> Result<ConvergenceReport> {
    if k_max == 0 {
        return Err(QbfError::InvalidParameter("k_max must be at least 1".into()));
    }
    let n_grid = n_grid.min(f.depth()).min(ctx.depth());
    let coeffs = fourier_coefficients(ctx, f, k_max)?;
    let fb = FourierBessel::shared(ctx);
    let p = fb.prec();
    let cols = fb.columns(k_max)?;
    let target: Vec<Float> = f.values().iter().take(n_grid + 1).map(|v| Float::with_val(p, v)).collect();
    let scale = target.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);

    let term_sup: Vec<f64> = coeffs
        .iter()
        .zip(&cols)
        .map(|(c, col)| {
            col.values
                .iter()
                .take(n_grid + 1)
                .map(|v| Float::with_val(p, &c.value_hp * v).to_f64().abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let mut kept = term_sup.len();
    while kept > 1 && term_sup[kept - 1] < DROP_TOL * scale {
        kept -= 1;
    }
    let dropped_tail_bound: f64 = term_sup[kept..].iter().sum();

    let mut sums = vec![Float::with_val(p, 0); n_grid + 1];
    let mut sup_errors = Vec::with_capacity(kept);
    let mut point_errors = Vec::with_capacity(kept);
    for (c, col) in coeffs.iter().zip(&cols).take(kept) {
        for (n, s) in sums.iter_mut().enumerate() {
            *s += Float::with_val(p, &c.value_hp * &col.values[n]);
        }
        let errs: Vec<f64> =
            sums.iter().zip(&target).map(|(s, t)| Float::with_val(p, t - s).abs().to_f64()).collect();
        sup_errors.push(errs.iter().copied().fold(0.0, f64::max));
        point_errors.push(errs);
    }

    let sup_error_rate = geometric_fit(sup_errors.iter().enumerate().map(|(i, &e)| (i + 1, e)));
    let term_rate = geometric_fit(term_sup.iter().take(kept).enumerate().map(|(i, &e)| (i + 1, e)));
    let holder = holder_fit(f, n_grid);
    let (weighted_l2, weighted_l2_finite) = weighted_l2(f, n_grid);
    let hypotheses = Hypotheses {
        nu_positive: ctx.nu() > 0.0,
        holder_above_one: holder.is_some_and(|h| h.order > 1.0),
        finite_limit: has_finite_limit(f),
        weighted_l2_finite,
    };
    let mut warnings = Vec::new();
    if !hypotheses.nu_positive {
        warnings.push(format!("order nu = {} is not positive; uniform convergence is not guaranteed", ctx.nu()));
    }
    match holder {
        None => warnings.push("no Hölder order could be fitted (fewer than two nonzero differences)".into()),
        Some(h) if h.order <= 1.0 => warnings.push(format!(
            "fitted Hölder order {:.4} is not above 1; only pointwise convergence is expected",
            h.order
        )),
        _ => {}
    }
    if !hypotheses.finite_limit {
        warnings.push("f(0+) is not known to be finite".into());
    }
    if !hypotheses.weighted_l2_finite {
        warnings.push("Σ (f(q^n)/q^n)^2 does not settle on the grid; t^{-3/2} f may not be square integrable".into());
    }

    Ok(ConvergenceReport {
        q: ctx.q(),
        nu: ctx.nu(),
        n_grid,
        partial_sum_depths: (1..=kept).collect(),
        sup_errors,
        point_errors,
        term_sup,
        sup_error_rate,
        term_rate,
        holder,
        weighted_l2,
        hypotheses,
        dropped_terms: k_max - kept,
        dropped_tail_bound,
        warnings,
        coefficients: coeffs,
    })
}

/// Both sides of the integration-by-parts formula for `∫_0^1 t f(t) J_nu(q j_k t) d_q t`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CoefficientIdentity {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `residual / |lhs|`.
    pub relative: f64,
}

/// Evaluates
///
/// ```text
/// (1-q) q^{nu-2} f(1/q) J(q j)/j^2 + (1-q)^2 q^{nu-3} / ((q^{1/2}-q^{-1/2})^2 j^2) · [
///     (q^{nu/2} - q^{-nu/2}) (q^{nu/2} I[f(qt)] - q^{-nu/2} I[f])
///   - q^{nu/2} (q^{nu/2} I[f(qt) - f(t)] - q^{-nu/2} I[f(t) - f(t/q)]) ]
/// ```
///
/// with `I[h] = ∫_0^1 J_nu(q j t) h(t)/t d_q t`, and compares it with the direct integral.
///
/// The bracket equals `-I[f(qt)] + (q^nu + q^{-nu}) I[f] - I[f(t/q)]`, so this is summation
/// by parts against the three-term difference relation of `J_nu`; for `f = t^nu` the
/// bracket vanishes.
pub fn check_coefficient_integral_identity(ctx: &QContext, f: &GridFunction, k: usize) -> Result<CoefficientIdentity> {
    check_index(k)?;
    if ctx.nu() <= 0.0 {
        return Err(QbfError::InvalidParameter("the identity needs nu > 0".into()));
    }
    let pre = f.pre_value().ok_or_else(|| QbfError::MissingValue("f(1/q)".into()))?;
    if f.limit_value().is_none() {
        return Err(QbfError::MissingValue("f(0+)".into()));
    }
    let fb = FourierBessel::shared(ctx);
    let col = fb.column(k)?;
    let p = fb.prec();
    let lhs = projection(&fb, f, &col)?;

    // Samples used by the four integrals; the shifted one loses the last node.
    let depth = f.depth().min(col.values.len() - 1) - 1;
    let fv = |n: i64| Float::with_val(p, f.at(n).expect("index inside the grid"));
    let tail = tail_exponent(f).map(|e| TailModel::PowerLaw { exponent: e + ctx.nu() - 1.0 });
    let integral = |h: &dyn Fn(i64) -> Float| -> Result<Float> {
        let q_inv = Float::with_val(p, 1 / &ctx.q_hp(p));
        let mut t_inv = Float::with_val(p, 1);
        let vals = (0..=depth)
            .map(|n| {
                let v = Float::with_val(p, &col.values[n] * h(n as i64)) * &t_inv;
                t_inv *= &q_inv;
                v
            })
            .collect();
        let mut g = GridFunction::from_hp_values(ctx, p, vals)?;
        if let Some(t) = tail {
            g = g.with_tail_model(t);
        }
        Ok(q_integral(&g, 0)?.value)
    };
    let i_shift = integral(&|n| fv(n + 1))?;
    let i_plain = integral(&fv)?;
    let i_fwd = integral(&|n| fv(n + 1) - fv(n))?;
    let i_back = integral(&|n| fv(n) - fv(n - 1))?;

    let q = ctx.q_hp(p);
    let nu = ctx.nu();
    let one_minus_q = Float::with_val(p, 1 - &q);
    let h = ctx.q_pow(p, nu / 2.0);
    let h_inv = Float::with_val(p, 1 / &h);
    let s = Float::with_val(p, q.sqrt_ref()) - Float::with_val(p, 1 / Float::with_val(p, q.sqrt_ref()));
    let j = hp::with_prec(&col.zero.exact, p);
    let j2 = Float::with_val(p, j.square_ref());

    let boundary = Float::with_val(p, &one_minus_q * &ctx.q_pow(p, nu - 2.0)) * pre * &col.at_qj / &j2;
    let first = Float::with_val(p, &h - &h_inv)
        * (Float::with_val(p, &h * &i_shift) - Float::with_val(p, &h_inv * &i_plain));
    let second = Float::with_val(p, &h * (Float::with_val(p, &h * &i_fwd) - Float::with_val(p, &h_inv * &i_back)));
    let factor = Float::with_val(p, one_minus_q.square_ref()) * ctx.q_pow(p, nu - 3.0)
        / Float::with_val(p, s.square_ref())
        / &j2;
    let rhs = boundary + factor * (first - second);
    let residual = Float::with_val(p, &lhs - &rhs).abs();
    let relative = (log2_abs(&residual) - log2_abs(&lhs)).exp2();
    Ok(CoefficientIdentity {
        k,
        lhs: lhs.to_f64(),
        rhs: rhs.to_f64(),
        residual: residual.to_f64(),
        relative: if residual.is_zero() { 0.0 } else { relative },
    })
}

/// `∫_0^1 t f(t)^2 d_q t` against the partial sums of `Σ a_k^2 η_k`.
#[derive(Clone, Debug, Serialize)]
pub struct ParsevalReport {
    pub norm_sq: f64,
    pub partial: Vec<f64>,
    /// `norm_sq - partial[K-1]` at the largest `K`.
    pub defect: f64,
}

pub fn parseval_report(ctx: &QContext, f: &GridFunction, k_max: usize) -> Result<ParsevalReport> {
    let fb = FourierBessel::shared(ctx);
    let p = fb.prec();
    let squares: Vec<Float> = f.values().iter().map(|v| Float::with_val(p, v.square_ref())).collect();
    let exponent = tail_exponent(f).map(|e| 2.0 * e);
    let norm_sq = match exponent {
        Some(e) => weighted_integral(ctx, p, squares, e)?,
        None => {
            let q = ctx.q_hp(p);
            let mut t = Float::with_val(p, 1);
            let vals = squares
                .into_iter()
                .map(|v| {
                    let r = Float::with_val(p, &v * &t);
                    t *= &q;
                    r
                })
                .collect();
            q_integral(&GridFunction::from_hp_values(ctx, p, vals)?, 0)?.value
        }
    };
    let coeffs = fourier_coefficients(ctx, f, k_max)?;
    let cols = fb.columns(k_max)?;
    let mut acc = Float::with_val(p, 0);
    let mut partial = Vec::with_capacity(k_max);
    for (c, col) in coeffs.iter().zip(&cols) {
        acc += Float::with_val(p, c.value_hp.square_ref()) * &col.eta;
        partial.push(acc.to_f64());
    }
    let defect = Float::with_val(p, &norm_sq - &acc).to_f64();
    Ok(ParsevalReport { norm_sq: norm_sq.to_f64(), partial, defect })
}
