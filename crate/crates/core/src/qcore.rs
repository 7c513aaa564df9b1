//! q-calculus primitives on the q-linear grid: shifted factorials, the Jackson
//! integral, the symmetric q-derivative and q-integration by parts.

use rug::Float;
use serde::Serialize;

use crate::error::{QbfError, Result};
use crate::hp::{self, log2_abs};

/// Default relative truncation tolerance for infinite sums and products.
pub const DEFAULT_TERM_TOL: f64 = 1e-15;
/// Default cap on the number of summed terms.
pub const DEFAULT_MAX_TERMS: usize = 100_000;
/// Default grid depth `N`.
pub const DEFAULT_DEPTH: usize = 256;
/// Default minimum target precision, in bits, of high-precision results.
pub const DEFAULT_MIN_PREC: u32 = 128;

/// The pair `(q, nu)` together with the truncation and precision policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QContext {
    q: f64,
    nu: f64,
    term_tol: f64,
    max_terms: usize,
    depth: usize,
    min_prec: u32,
}

impl QContext {
    pub fn new(q: f64, nu: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(QbfError::InvalidParameter(format!("q must lie in (0, 1), got {q}")));
        }
        if !(nu > -1.0) || !nu.is_finite() {
            return Err(QbfError::InvalidParameter(format!("nu must exceed -1, got {nu}")));
        }
        Ok(Self {
            q,
            nu,
            term_tol: DEFAULT_TERM_TOL,
            max_terms: DEFAULT_MAX_TERMS,
            depth: DEFAULT_DEPTH,
            min_prec: DEFAULT_MIN_PREC,
        })
    }

    pub fn with_term_tol(mut self, term_tol: f64) -> Result<Self> {
        if !(term_tol > 0.0 && term_tol < 1.0) {
            return Err(QbfError::InvalidParameter(format!("term_tol must lie in (0, 1), got {term_tol}")));
        }
        self.term_tol = term_tol;
        Ok(self)
    }

    pub fn with_max_terms(mut self, max_terms: usize) -> Result<Self> {
        if max_terms == 0 {
            return Err(QbfError::InvalidParameter("max_terms must be positive".into()));
        }
        self.max_terms = max_terms;
        Ok(self)
    }

    pub fn with_depth(mut self, depth: usize) -> Result<Self> {
        if depth < 2 {
            return Err(QbfError::InvalidParameter(format!("grid depth must be at least 2, got {depth}")));
        }
        self.depth = depth;
        Ok(self)
    }

    pub fn with_min_prec(mut self, bits: u32) -> Result<Self> {
        if !(53..=hp::MAX_PREC).contains(&bits) {
            return Err(QbfError::InvalidParameter(format!("precision must lie in [53, {}], got {bits}", hp::MAX_PREC)));
        }
        self.min_prec = bits;
        Ok(self)
    }

    /// Same policy with a different order, used for `J_{nu+1}` and `J_mu`.
    pub fn with_nu(self, nu: f64) -> Result<Self> {
        let mut c = Self::new(self.q, nu)?;
        c.term_tol = self.term_tol;
        c.max_terms = self.max_terms;
        c.depth = self.depth;
        c.min_prec = self.min_prec;
        Ok(c)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn term_tol(&self) -> f64 {
        self.term_tol
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn min_prec(&self) -> u32 {
        self.min_prec
    }

    /// `q` as an exact high-precision value.
    pub fn q_hp(&self, prec: u32) -> Float {
        Float::with_val(prec, self.q)
    }

    /// `q^x` for a real exponent.
    pub fn q_pow(&self, prec: u32, x: f64) -> Float {
        let q = self.q_hp(prec);
        hp::powf(prec, &q, &Float::with_val(prec, x))
    }
}

/// Length of a shifted factorial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    Finite(i64),
    Infinite,
}

/// Absolute value of a residual together with the error budget it is judged against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Residual {
    pub residual: f64,
    pub bound: f64,
}

impl Residual {
    pub fn holds(&self) -> bool {
        self.residual <= self.bound
    }

    /// Residual divided by `scale`, for relative comparisons.
    pub fn relative_to(&self, scale: f64) -> f64 {
        if scale == 0.0 {
            if self.residual == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            self.residual / scale.abs()
        }
    }
}

/// `(a; q)_n` in double precision.
///
/// Negative `n` uses `(a;q)_{-m} = 1 / (a q^{-m}; q)_m`. The infinite product stops
/// once the factors are within rounding of one.
pub fn q_pochhammer(a: f64, q: f64, n: Order) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(QbfError::InvalidParameter(format!("q must lie in (0, 1), got {q}")));
    }
    match n {
        Order::Finite(n) if n >= 0 => {
            let mut p = 1.0;
            let mut aq = a;
            for _ in 0..n {
                p *= 1.0 - aq;
                aq *= q;
            }
            Ok(p)
        }
        Order::Finite(n) => {
            let m = n.unsigned_abs();
            let mut p = 1.0;
            let mut aq = a * q.powi(-(m as i32));
            for _ in 0..m {
                let f = 1.0 - aq;
                if f.abs() <= 4.0 * f64::EPSILON * aq.abs().max(1.0) {
                    return Err(QbfError::DivisionByZero(format!("({a}; {q})_{n} has a vanishing factor")));
                }
                p *= f;
                aq *= q;
            }
            Ok(1.0 / p)
        }
        Order::Infinite => {
            let tol = 0.25 * f64::EPSILON;
            let mut p = 1.0;
            let mut aq = a;
            for _ in 0..DEFAULT_MAX_TERMS {
                if aq.abs() < tol && aq.abs() * q / (1.0 - q) < tol {
                    return Ok(p);
                }
                p *= 1.0 - aq;
                aq *= q;
            }
            Err(QbfError::NonConvergence { what: "infinite q-Pochhammer product".into(), terms: DEFAULT_MAX_TERMS })
        }
    }
}

/// `(a; q)_n` at `prec` bits.
pub fn q_pochhammer_hp(a: &Float, q: &Float, n: Order, prec: u32) -> Result<Float> {
    match n {
        Order::Finite(n) if n >= 0 => {
            let mut p = Float::with_val(prec, 1);
            let mut aq = Float::with_val(prec, a);
            for _ in 0..n {
                p *= Float::with_val(prec, 1 - &aq);
                aq *= q;
            }
            Ok(p)
        }
        Order::Finite(n) => {
            let m = n.unsigned_abs() as i64;
            let mut aq = Float::with_val(prec, a) * hp::powi(prec, q, -m);
            let mut p = Float::with_val(prec, 1);
            for _ in 0..m {
                let f = Float::with_val(prec, 1 - &aq);
                if f.is_zero() || log2_abs(&f) < -(f64::from(prec) - 8.0) {
                    return Err(QbfError::DivisionByZero(format!("(a; q)_{n} has a vanishing factor")));
                }
                p *= f;
                aq *= q;
            }
            Ok(Float::with_val(prec, 1) / p)
        }
        Order::Infinite => {
            let one_minus_q = Float::with_val(prec, 1 - q);
            let cut = -(f64::from(prec) + 8.0) + log2_abs(&one_minus_q);
            let mut p = Float::with_val(prec, 1);
            let mut aq = Float::with_val(prec, a);
            let cap = 64 * DEFAULT_MAX_TERMS;
            for _ in 0..cap {
                if aq.is_zero() || log2_abs(&aq) < cut {
                    return Ok(p);
                }
                p *= Float::with_val(prec, 1 - &aq);
                aq *= q;
            }
            Err(QbfError::NonConvergence { what: "infinite q-Pochhammer product".into(), terms: cap })
        }
    }
}

/// Tail behaviour assumed beyond the last stored grid node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum TailModel {
    /// `f(t) ~ c t^p` as `t -> 0+`.
    PowerLaw { exponent: f64 },
}

/// A function sampled on `{q^n : 0 <= n <= N}`, optionally with `f(q^{-1})` and `f(0+)`.
#[derive(Clone, Debug)]
pub struct GridFunction {
    ctx: QContext,
    prec: u32,
    values: Vec<Float>,
    pre_value: Option<Float>,
    limit_value: Option<Float>,
    tail: Option<TailModel>,
}

impl GridFunction {
    /// Samples given as `f(q^n)` for `n = 0..values.len()`.
    pub fn from_values(ctx: &QContext, values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(QbfError::InvalidParameter("grid function needs at least one value".into()));
        }
        if let Some(n) = values.iter().position(|v| !v.is_finite()) {
            return Err(QbfError::InvalidParameter(format!("value at n = {n} is not finite")));
        }
        Ok(Self {
            ctx: *ctx,
            prec: 53,
            values: values.iter().map(|&v| Float::with_val(53, v)).collect(),
            pre_value: None,
            limit_value: None,
            tail: None,
        })
    }

    /// High-precision samples, all rounded to `prec` bits.
    pub fn from_hp_values(ctx: &QContext, prec: u32, values: Vec<Float>) -> Result<Self> {
        if values.is_empty() {
            return Err(QbfError::InvalidParameter("grid function needs at least one value".into()));
        }
        if let Some(n) = values.iter().position(|v| !v.is_finite()) {
            return Err(QbfError::InvalidParameter(format!("value at n = {n} is not finite")));
        }
        let values = values.into_iter().map(|v| hp::with_prec(&v, prec)).collect();
        Ok(Self { ctx: *ctx, prec, values, pre_value: None, limit_value: None, tail: None })
    }

    /// Samples `f(q^n)` for `n = 0..=depth`, with `f` evaluated at `prec` bits.
    pub fn from_fn(ctx: &QContext, depth: usize, prec: u32, f: impl Fn(&Float) -> Float) -> Result<Self> {
        let q = ctx.q_hp(prec);
        let mut t = Float::with_val(prec, 1);
        let mut values = Vec::with_capacity(depth + 1);
        for _ in 0..=depth {
            values.push(f(&t));
            t *= &q;
        }
        Self::from_hp_values(ctx, prec, values)
    }

    /// Samples of a double-precision function.
    pub fn from_fn_f64(ctx: &QContext, depth: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..=depth).map(|n| f(ctx.q.powi(n as i32))).collect();
        Self::from_values(ctx, &values)
    }

    /// `t^p` on the grid with `f(q^{-1})`, `f(0+)` and a power-law tail.
    pub fn power(ctx: &QContext, depth: usize, prec: u32, p: f64) -> Result<Self> {
        let q = ctx.q_hp(prec);
        let qp = hp::powf(prec, &q, &Float::with_val(prec, p));
        let mut values = Vec::with_capacity(depth + 1);
        let mut v = Float::with_val(prec, 1);
        for _ in 0..=depth {
            values.push(v.clone());
            v *= &qp;
        }
        let pre = Float::with_val(prec, 1) / qp;
        let limit = if p > 0.0 {
            Some(Float::with_val(prec, 0))
        } else if p == 0.0 {
            Some(Float::with_val(prec, 1))
        } else {
            None
        };
        let mut g = Self::from_hp_values(ctx, prec, values)?.with_pre_value_hp(pre)?;
        if let Some(l) = limit {
            g = g.with_limit_value_hp(l)?;
        }
        Ok(g.with_tail_model(TailModel::PowerLaw { exponent: p }))
    }

    pub fn with_pre_value(self, v: f64) -> Result<Self> {
        let prec = self.prec;
        self.with_pre_value_hp(Float::with_val(prec, v))
    }

    pub fn with_pre_value_hp(mut self, v: Float) -> Result<Self> {
        if !v.is_finite() {
            return Err(QbfError::InvalidParameter("f(1/q) must be finite".into()));
        }
        self.pre_value = Some(hp::with_prec(&v, self.prec));
        Ok(self)
    }

    pub fn with_limit_value(self, v: f64) -> Result<Self> {
        let prec = self.prec;
        self.with_limit_value_hp(Float::with_val(prec, v))
    }

    pub fn with_limit_value_hp(mut self, v: Float) -> Result<Self> {
        if !v.is_finite() {
            return Err(QbfError::InvalidParameter("f(0+) must be finite".into()));
        }
        self.limit_value = Some(hp::with_prec(&v, self.prec));
        Ok(self)
    }

    pub fn with_tail_model(mut self, tail: TailModel) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn ctx(&self) -> &QContext {
        &self.ctx
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    /// Largest stored grid index `N`.
    pub fn depth(&self) -> usize {
        self.values.len() - 1
    }

    pub fn value(&self, n: usize) -> Option<&Float> {
        self.values.get(n)
    }

    pub fn values(&self) -> &[Float] {
        &self.values
    }

    pub fn pre_value(&self) -> Option<&Float> {
        self.pre_value.as_ref()
    }

    pub fn limit_value(&self) -> Option<&Float> {
        self.limit_value.as_ref()
    }

    pub fn tail_model(&self) -> Option<TailModel> {
        self.tail
    }

    /// Value at `q^n` for `n >= -1`.
    pub fn at(&self, n: i64) -> Result<&Float> {
        if n == -1 {
            return self.pre_value.as_ref().ok_or_else(|| QbfError::MissingValue("f(1/q)".into()));
        }
        usize::try_from(n)
            .ok()
            .and_then(|i| self.values.get(i))
            .ok_or_else(|| QbfError::MissingValue(format!("f(q^{n})")))
    }

    /// Pointwise map `n -> h(n, f(q^n))`, keeping the optional values when `h` is
    /// applied to them as well.
    pub fn map(&self, prec: u32, h: impl Fn(i64, &Float) -> Float) -> Result<Self> {
        let values = self.values.iter().enumerate().map(|(n, v)| h(n as i64, v)).collect();
        let mut g = Self::from_hp_values(&self.ctx, prec, values)?;
        g.tail = None;
        Ok(g)
    }

    /// `alpha f + beta g` on the common depth.
    pub fn linear_combination(alpha: f64, f: &Self, beta: f64, g: &Self) -> Result<Self> {
        let prec = f.prec.max(g.prec);
        let n = f.values.len().min(g.values.len());
        let values = (0..n)
            .map(|i| Float::with_val(prec, &f.values[i] * alpha) + Float::with_val(prec, &g.values[i] * beta))
            .collect();
        let mut out = Self::from_hp_values(&f.ctx, prec, values)?;
        let comb = |a: Option<&Float>, b: Option<&Float>| match (a, b) {
            (Some(a), Some(b)) => Some(Float::with_val(prec, a * alpha) + Float::with_val(prec, b * beta)),
            _ => None,
        };
        out.pre_value = comb(f.pre_value(), g.pre_value());
        out.limit_value = comb(f.limit_value(), g.limit_value());
        // A shared power law survives the combination; distinct ones do not.
        if f.tail == g.tail {
            out.tail = f.tail;
        }
        Ok(out)
    }

    /// Double-precision copy of the stored values.
    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(Float::to_f64).collect()
    }
}

/// Result of a Jackson integral.
#[derive(Clone, Debug)]
pub struct QIntegral {
    pub value: Float,
    /// Estimate of the neglected tail (absolute).
    pub tail_bound: Float,
    /// Sum of absolute values of the included terms.
    pub abs_sum: Float,
    pub terms: usize,
}

/// Jackson integral `∫_0^{q^m} f(t) d_q t = (1-q) Σ_{n>=m} f(q^n) q^n` for `m >= -1`.
///
/// Truncation happens at the stored depth. The last term and a geometric bound on the
/// remaining tail, with ratio taken from the last two terms, must both be below
/// `term_tol` times the accumulated absolute sum, unless `f` carries a tail model, in
/// which case the modelled tail is added.
pub fn q_integral(f: &GridFunction, upper_exp: i64) -> Result<QIntegral> {
    if upper_exp < -1 {
        return Err(QbfError::InvalidParameter(format!("upper limit q^{upper_exp} lies outside the grid")));
    }
    let ctx = f.ctx();
    let prec = f.prec().max(64);
    let q = ctx.q_hp(prec);
    let depth = f.depth() as i64;
    if upper_exp > depth {
        return Err(QbfError::InvalidParameter(format!("upper limit q^{upper_exp} exceeds grid depth {depth}")));
    }
    let mut t = hp::powi(prec, &q, upper_exp);
    let mut sum = Float::with_val(prec, 0);
    let mut abs_sum = Float::with_val(prec, 0);
    let mut last = Float::with_val(prec, 0);
    let mut prev = Float::with_val(prec, 0);
    let mut terms = 0;
    for n in upper_exp..=depth {
        let term = Float::with_val(prec, f.at(n)? * &t);
        abs_sum += Float::with_val(prec, term.abs_ref());
        sum += &term;
        prev = std::mem::replace(&mut last, term);
        t *= &q;
        terms += 1;
    }
    let scale = Float::with_val(prec, 1 - &q);
    let last_abs = hp::abs(&last);
    let mut tail = if last.is_zero() {
        Float::with_val(prec, 0)
    } else if prev.is_zero() || terms < 2 {
        Float::with_val(prec, f64::INFINITY)
    } else {
        let r = Float::with_val(prec, &last_abs / hp::abs(&prev));
        if r < 1 {
            Float::with_val(prec, &last_abs * &r) / Float::with_val(prec, 1 - &r)
        } else {
            Float::with_val(prec, f64::INFINITY)
        }
    };
    let tol = Float::with_val(prec, &abs_sum * ctx.term_tol());
    let converged = last_abs <= tol && tail <= tol;
    if !converged {
        match f.tail_model() {
            Some(TailModel::PowerLaw { exponent }) if exponent + 1.0 > 0.0 => {
                // f(q^n) q^n ~ c q^{(p+1) n}: the remaining terms form a geometric series.
                let r = ctx.q_pow(prec, exponent + 1.0);
                let extra = Float::with_val(prec, &last * &r) / Float::with_val(prec, 1 - &r);
                tail = hp::abs(&extra);
                sum += extra;
            }
            _ => {
                return Err(QbfError::TailNotConverged {
                    depth: depth as usize,
                    last_term: last.to_f64(),
                    sum: sum.to_f64(),
                });
            }
        }
    }
    Ok(QIntegral {
        value: sum * &scale,
        tail_bound: tail * &scale,
        abs_sum: abs_sum * &scale,
        terms,
    })
}

/// Symmetric q-derivative `[f(q^{1/2}x) - f(q^{-1/2}x)] / [(q^{1/2} - q^{-1/2}) x]`.
///
/// At `x = 0` the supplied `f'(0)` is returned.
pub fn symmetric_q_derivative(q: f64, f: impl Fn(f64) -> f64, x: f64, f_prime0: Option<f64>) -> Result<f64> {
    if x == 0.0 {
        return f_prime0.ok_or_else(|| QbfError::Singular("q-derivative at 0 needs f'(0)".into()));
    }
    let s = q.sqrt();
    let num = f(s * x) - f(x / s);
    if num == 0.0 {
        return Ok(0.0);
    }
    Ok(num / ((s - 1.0 / s) * x))
}

fn q_sum_to_zero(ctx: &QContext, c: f64, g: &impl Fn(f64) -> f64, what: &str) -> Result<f64> {
    // (1-q) Σ_k c q^k g(c q^k), stopped when the terms stagnate.
    let q = ctx.q();
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    let mut t = c;
    let mut quiet = 0;
    for k in 0..ctx.max_terms() {
        let term = t * g(t);
        sum += term;
        abs_sum += term.abs();
        if term.abs() <= ctx.term_tol() * abs_sum {
            quiet += 1;
            if quiet >= 3 {
                return Ok((1.0 - q) * sum);
            }
        } else {
            quiet = 0;
        }
        if t == 0.0 || k >= ctx.depth() {
            break;
        }
        t *= q;
    }
    if abs_sum == 0.0 {
        return Ok(0.0);
    }
    Err(QbfError::NonConvergence { what: what.into(), terms: ctx.depth() })
}

fn limit_at_zero(ctx: &QContext, c: f64, h: &impl Fn(f64) -> f64) -> Result<f64> {
    // lim_n h(c q^{1/2 + n}), detected by stagnation of successive values.
    if c == 0.0 {
        return Ok(h(0.0));
    }
    let q = ctx.q();
    let mut x = c * q.sqrt();
    let mut prev = h(x);
    let mut scale = prev.abs();
    for _ in 0..ctx.depth() {
        x *= q;
        let v = h(x);
        scale = scale.max(v.abs());
        if (v - prev).abs() <= ctx.term_tol() * scale {
            return Ok(v);
        }
        prev = v;
    }
    Err(QbfError::NonConvergence { what: "boundary limit in q-integration by parts".into(), terms: ctx.depth() })
}

/// Residual of the q-integration by parts formula on `[a, b]`:
///
/// `∫_a^b g(q^{1/2}x) δ_q f(x)/δ_q x d_q x = -∫_a^b f(q^{-1/2}x) δ_q g(x)/δ_q x d_q x
///   + q^{1/2} {[(fg)(q^{-1/2}b) - (fg)(q^{-1/2}a)] - lim_n [(fg)(q^{1/2+n}b) - (fg)(q^{1/2+n}a)]}`.
///
/// Both sides need `f` and `g` at the half-shifted nodes, so they are taken as closures.
pub fn check_q_integration_by_parts(
    ctx: &QContext,
    f: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
) -> Result<Residual> {
    if !(a >= 0.0 && b >= a) {
        return Err(QbfError::InvalidParameter(format!("need 0 <= a <= b, got a = {a}, b = {b}")));
    }
    let q = ctx.q();
    let s = q.sqrt();
    let lhs_integrand = |x: f64| {
        if x == 0.0 {
            return 0.0;
        }
        g(s * x) * (f(s * x) - f(x / s)) / ((s - 1.0 / s) * x)
    };
    let rhs_integrand = |x: f64| {
        if x == 0.0 {
            return 0.0;
        }
        f(x / s) * (g(s * x) - g(x / s)) / ((s - 1.0 / s) * x)
    };
    let integral = |h: &dyn Fn(f64) -> f64, what: &str| -> Result<f64> {
        let hb = q_sum_to_zero(ctx, b, &h, what)?;
        let ha = if a == 0.0 { 0.0 } else { q_sum_to_zero(ctx, a, &h, what)? };
        Ok(hb - ha)
    };
    let lhs = integral(&lhs_integrand, "left side of q-integration by parts")?;
    let rhs_int = integral(&rhs_integrand, "right side of q-integration by parts")?;
    let fg = |x: f64| f(x) * g(x);
    let upper = fg(b / s) - fg(a / s);
    let lim = limit_at_zero(ctx, b, &fg)? - limit_at_zero(ctx, a, &fg)?;
    let rhs = -rhs_int + s * (upper - lim);
    let scale = lhs.abs().max(rhs_int.abs()).max(upper.abs()).max(lim.abs());
    Ok(Residual { residual: (lhs - rhs).abs(), bound: 64.0 * f64::EPSILON * scale.max(f64::MIN_POSITIVE) })
}
