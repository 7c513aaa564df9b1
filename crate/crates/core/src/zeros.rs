//! Positive zeros `j_k` of `J_nu(.; q^2)`.
//!
//! In the asymptotic regime `q^{2(k+nu)} <= (1-q^2)(1-q^{2k})` the k-th zero satisfies
//! `j_k = q^{-k+eps_k}` with `0 < eps_k < alpha_k`, which gives a bracket for free. Below
//! the regime the zeros are located by a geometric sign-change scan from the origin.
//! Brackets are validated by certified signs, shrunk by bisection and polished by a
//! safeguarded Newton iteration at a precision high enough to resolve `eps_k`, which
//! decays roughly like `q^{2k(k+nu)}` and leaves the binary64 range for moderate `k`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::ops::RangeInclusive;
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use rayon::prelude::*;
use rug::Float;
use serde::Serialize;

use crate::error::{QbfError, Result};
use crate::hp::{self, log2_abs, MAX_PREC};
use crate::qbessel::{self, eval_fixed, series_peak_log2, working_prec, Kind};
use crate::qcore::{q_pochhammer, Order, QContext};

/// A located zero. The `f64` fields are roundings of the high-precision ones; for
/// larger `k` the zero and both bracket ends round to the same double.
#[derive(Clone, Debug, Serialize)]
pub struct BesselZero {
    pub k: usize,
    pub value: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    /// `eps_k = k + log_q(value)`, so that `value = q^{-k+eps_k}`. Underflows to zero
    /// in `f64` for large `k`; see `eps_log10`.
    pub eps_k: f64,
    pub eps_log10: f64,
    pub alpha_k: Option<f64>,
    pub in_regime: bool,
    /// The regime held, the bracket `[q^{-k+alpha_k}, q^{-k}]` showed a certified sign
    /// change, and `0 < eps_k < alpha_k` was verified in high precision.
    pub certified: bool,
    /// Precision of `exact`, in bits.
    pub prec: u32,
    #[serde(skip)]
    pub exact: Float,
    #[serde(skip)]
    pub eps_exact: Float,
    #[serde(skip)]
    pub lo_exact: Float,
    #[serde(skip)]
    pub hi_exact: Float,
}

/// `q^{2(k+nu)} <= (1-q^2)(1-q^{2k})`.
pub fn in_regime(ctx: &QContext, k: usize) -> bool {
    let q2 = ctx.q() * ctx.q();
    let kf = k as f64;
    q2.powf(kf + ctx.nu()) <= (1.0 - q2) * (1.0 - q2.powf(kf))
}

/// `alpha_k = log(1 - q^{2(k+nu)} / (1 - q^{2k})) / (2 log q)`.
pub fn alpha_bound(ctx: &QContext, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(QbfError::InvalidParameter("zero index starts at 1".into()));
    }
    let q = ctx.q();
    let kf = k as f64;
    let x = q.powf(2.0 * (kf + ctx.nu())) / (1.0 - q.powf(2.0 * kf));
    if !(x < 1.0) {
        return Err(QbfError::OutOfRegime { k });
    }
    Ok((-x).ln_1p() / (2.0 * q.ln()))
}

/// Certified sign of `J_nu(z)`, raising the precision until the error bound excludes zero.
pub(crate) fn sign_at(ctx: &QContext, z: &Float, kind: Kind) -> Result<Ordering> {
    let mut prec = working_prec(ctx, z, ctx.min_prec().max(z.prec()).min(256));
    loop {
        let r = eval_fixed(ctx, z, prec, kind)?;
        if let Some(s) = r.certified_sign() {
            return Ok(s);
        }
        if prec >= MAX_PREC {
            return Err(QbfError::PrecisionExhausted(MAX_PREC));
        }
        prec = (prec.saturating_mul(2)).min(MAX_PREC);
    }
}

fn sign_at_f64(ctx: &QContext, z: f64) -> Result<Ordering> {
    sign_at(ctx, &Float::with_val(53, z), Kind::Value)
}

/// Step ratio and start point of the geometric scan used below the asymptotic regime.
fn scan_plan(ctx: &QContext, k: usize) -> (f64, f64) {
    let q2 = ctx.q() * ctx.q();
    // At z0 the first term ratio is at most 0.1, so J > 0 on (0, z0].
    let z0 = (0.1 * (1.0 - q2) * (1.0 - q2.powf(ctx.nu() + 1.0)) / q2).sqrt();
    let z0 = z0.min(ctx.q().powf(ctx.nu() / 2.0));
    let ratio = ctx.q().powf(-0.5).min(1.0 + 1.0 / (2.0 * (k as f64 + 2.0)));
    (z0, ratio)
}

/// Brackets of the sign changes of `J_nu` on `(0, upper]` found by a geometric scan,
/// stopping after `max_count` of them.
pub fn scan_sign_changes(ctx: &QContext, upper: f64, max_count: usize) -> Result<Vec<(f64, f64)>> {
    if !(upper.is_finite() && upper > 0.0) {
        return Err(QbfError::InvalidParameter(format!("scan limit must be positive and finite, got {upper}")));
    }
    // Zeros below q^{-m} number about m, which caps the step refinement.
    let expected = (upper.ln() / -ctx.q().ln()).ceil().max(0.0) as usize + 1;
    let (z0, ratio) = scan_plan(ctx, max_count.min(expected));
    let mut out = Vec::new();
    let mut z = z0;
    let mut s = sign_at_f64(ctx, z)?;
    while z < upper && out.len() < max_count {
        let next = (z * ratio).min(upper);
        let sn = sign_at_f64(ctx, next)?;
        if sn != s && sn != Ordering::Equal {
            out.push((z, next));
            s = sn;
        }
        z = next;
    }
    Ok(out)
}

/// Number of zeros in `(0, upper]`.
pub fn count_zeros_below(ctx: &QContext, upper: f64) -> Result<usize> {
    Ok(scan_sign_changes(ctx, upper, usize::MAX)?.len())
}

fn scan_bracket(ctx: &QContext, k: usize) -> Result<(Float, Float)> {
    let upper = ctx.q().powi(-(k as i32) - 3);
    let found = scan_sign_changes(ctx, upper, k)?;
    match found.get(k - 1) {
        Some(&(lo, hi)) => Ok((Float::with_val(53, lo), Float::with_val(53, hi))),
        None => Err(QbfError::NoSignChange { k, lo: 0.0, hi: upper }),
    }
}

/// Bracket `[q^{-k+alpha}, q^{-k}]`, widened outwards by a few ulps at `prec` bits.
fn theorem_bracket(ctx: &QContext, k: usize, alpha: f64, prec: u32) -> (Float, Float) {
    let mut hi = hp::powi(prec, &ctx.q_hp(prec), -(k as i64));
    let mut lo = Float::with_val(prec, &hi * &ctx.q_pow(prec, alpha));
    for _ in 0..8 {
        lo.next_down();
        hi.next_up();
    }
    (lo, hi)
}

/// `eps = log(j q^k) / log q` at the precision of `j`.
fn eps_of(ctx: &QContext, k: usize, j: &Float) -> Float {
    let p = j.prec() + 64;
    let u = Float::with_val(p, j * &hp::powi(p, &ctx.q_hp(p), k as i64));
    Float::with_val(p, u.ln_ref()) / Float::with_val(p, ctx.q_hp(p).ln_ref())
}

struct Refined {
    zero: Float,
    lo: Float,
    hi: Float,
}

/// Bisection followed by safeguarded Newton at `prec` bits; `lo`/`hi` must bracket
/// a single sign change with `sign(J(lo)) = s_lo`.
fn refine(ctx: &QContext, mut lo: Float, mut hi: Float, s_lo: Ordering, prec: u32) -> Result<Refined> {
    lo.set_prec(prec.max(lo.prec()));
    hi.set_prec(prec.max(hi.prec()));
    for _ in 0..60 {
        let width = Float::with_val(prec, &hi - &lo);
        if width <= Float::with_val(prec, &lo * 1e-14) {
            break;
        }
        let mid = Float::with_val(prec, &lo + &hi) / 2u32;
        let s = sign_at(ctx, &mid, Kind::Value)?;
        if s == Ordering::Equal {
            return Ok(Refined { zero: mid.clone(), lo: mid.clone(), hi: mid });
        }
        if s == s_lo { lo = mid } else { hi = mid }
    }
    // For large k the zero sits within eps_k of the upper end, and a Newton step from
    // the interior may overshoot it. Steps may leave the bracket by a few bracket widths:
    // the neighbouring zeros are a factor of about 1/q away.
    let width = Float::with_val(prec, &hi - &lo);
    let win_lo = Float::with_val(prec, &lo - Float::with_val(prec, &width * 4u32));
    let win_hi = Float::with_val(prec, &hi + Float::with_val(prec, &width * 4u32));
    let mut x = Float::with_val(prec, &lo + &hi) / 2u32;
    let tol_log2 = -(f64::from(prec) - 4.0);
    for _ in 0..200 {
        let eval_prec = working_prec(ctx, &x, prec);
        let f = eval_fixed(ctx, &x, eval_prec, Kind::Value)?;
        if let Some(s) = f.certified_sign() {
            if s == Ordering::Equal {
                return Ok(Refined { zero: x.clone(), lo: x.clone(), hi: x });
            }
            if x > lo && x < hi {
                if s == s_lo {
                    lo = x.clone();
                } else {
                    hi = x.clone();
                }
            }
        }
        let d = eval_fixed(ctx, &x, eval_prec, Kind::Derivative)?;
        if d.value.is_zero() {
            return Err(QbfError::Singular("vanishing derivative during zero refinement".into()));
        }
        let step = Float::with_val(prec, &f.value / &d.value);
        let mut next = Float::with_val(prec, &x - &step);
        if !(next > win_lo && next < win_hi) {
            next = Float::with_val(prec, &lo + &hi) / 2u32;
        }
        let moved = Float::with_val(prec, &next - &x);
        x = next;
        if moved.is_zero() || log2_abs(&moved) - log2_abs(&x) < tol_log2 {
            return Ok(Refined { zero: x, lo, hi });
        }
    }
    Err(QbfError::NonConvergence { what: "zero refinement".into(), terms: 200 })
}

/// Locates the `k`-th positive zero.
pub fn find_zero(ctx: &QContext, k: usize) -> Result<BesselZero> {
    if k == 0 {
        return Err(QbfError::InvalidParameter("zero index starts at 1".into()));
    }
    let regime = in_regime(ctx, k);
    let alpha = alpha_bound(ctx, k).ok();
    let q_k = ctx.q().powi(-(k as i32));
    let peak = series_peak_log2(ctx.q(), ctx.nu(), q_k.log2());
    let mut prec = (2.0 * peak.ceil() + 192.0).max(f64::from(ctx.min_prec())) as u32;

    let mut from_theorem = false;
    let mut bracket = None;
    if let (true, Some(a)) = (regime, alpha) {
        let (lo, hi) = theorem_bracket(ctx, k, a, prec);
        let s_lo = sign_at(ctx, &lo, Kind::Value)?;
        let s_hi = sign_at(ctx, &hi, Kind::Value)?;
        if s_lo != s_hi && s_lo != Ordering::Equal && s_hi != Ordering::Equal {
            bracket = Some((lo, hi, s_lo));
            from_theorem = true;
        }
    }
    let (lo, hi, s_lo) = match bracket {
        Some(b) => b,
        None => {
            let (lo, hi) = scan_bracket(ctx, k)?;
            let s_lo = sign_at(ctx, &lo, Kind::Value)?;
            (lo, hi, s_lo)
        }
    };

    let (lo0, hi0) = (lo.clone(), hi.clone());
    let mut refined = refine(ctx, lo, hi, s_lo, prec)?;
    // The deviation from q^{-k} has to be resolved with a margin of 192 bits.
    loop {
        let eps = eps_of(ctx, k, &refined.zero);
        let needed = if eps.is_zero() { f64::from(prec) * 2.0 } else { -log2_abs(&eps) + 192.0 };
        if needed <= f64::from(prec) {
            break;
        }
        let next = (needed.ceil() as u32 + 64).max(prec + 64);
        if next > MAX_PREC {
            return Err(QbfError::PrecisionExhausted(MAX_PREC));
        }
        prec = next;
        refined = refine(ctx, refined.lo, refined.hi, s_lo, prec)?;
    }
    let mut exact = refined.zero;
    exact.set_prec(prec);
    let eps_exact = eps_of(ctx, k, &exact);
    let certified = from_theorem
        && match alpha {
            Some(a) => eps_exact.is_sign_positive() && !eps_exact.is_zero() && eps_exact < a,
            None => false,
        };
    Ok(BesselZero {
        k,
        value: exact.to_f64(),
        bracket_lo: lo0.to_f64(),
        bracket_hi: hi0.to_f64(),
        eps_k: eps_exact.to_f64(),
        eps_log10: log2_abs(&eps_exact) * std::f64::consts::LOG10_2,
        alpha_k: alpha,
        in_regime: regime,
        certified,
        prec,
        exact,
        eps_exact,
        lo_exact: lo0,
        hi_exact: hi0,
    })
}

pub(crate) type CtxKey = (u64, u64, u64, usize, usize, u32);

pub(crate) fn ctx_key(ctx: &QContext) -> CtxKey {
    (
        ctx.q().to_bits(),
        ctx.nu().to_bits(),
        ctx.term_tol().to_bits(),
        ctx.max_terms(),
        ctx.depth(),
        ctx.min_prec(),
    )
}

/// Zeros of one `(q, nu)` pair, computed on demand. Many readers, one writer at a time.
#[derive(Debug)]
pub struct ZeroCache {
    ctx: QContext,
    zeros: RwLock<BTreeMap<usize, Arc<BesselZero>>>,
}

impl ZeroCache {
    pub fn new(ctx: &QContext) -> Self {
        Self { ctx: *ctx, zeros: RwLock::new(BTreeMap::new()) }
    }

    /// Process-wide cache for `ctx`.
    pub fn shared(ctx: &QContext) -> Arc<Self> {
        static ALL: OnceLock<Mutex<HashMap<CtxKey, Arc<ZeroCache>>>> = OnceLock::new();
        let all = ALL.get_or_init(Default::default);
        let mut guard = all.lock().expect("zero cache registry poisoned");
        Arc::clone(guard.entry(ctx_key(ctx)).or_insert_with(|| Arc::new(Self::new(ctx))))
    }

    pub fn ctx(&self) -> &QContext {
        &self.ctx
    }

    pub fn get(&self, k: usize) -> Result<Arc<BesselZero>> {
        if let Some(z) = self.zeros.read().expect("zero cache poisoned").get(&k) {
            return Ok(Arc::clone(z));
        }
        let z = Arc::new(find_zero(&self.ctx, k)?);
        let mut w = self.zeros.write().expect("zero cache poisoned");
        Ok(Arc::clone(w.entry(k).or_insert(z)))
    }

    /// Zeros `1..=k_max`, computing the missing ones in parallel.
    pub fn first(&self, k_max: usize) -> Result<Vec<Arc<BesselZero>>> {
        (1..=k_max).into_par_iter().map(|k| self.get(k)).collect()
    }

    /// The zeros with the given indices, computed in parallel, in input order.
    pub fn many(&self, ks: &[usize]) -> Result<Vec<Arc<BesselZero>>> {
        ks.par_iter().map(|&k| self.get(k)).collect()
    }

    pub fn cached(&self) -> Vec<Arc<BesselZero>> {
        self.zeros.read().expect("zero cache poisoned").values().cloned().collect()
    }
}

/// Both sides of `|J_nu(q j_k)| <= (-q^2, -q^{2nu+2}; q^2)_inf / (q^2; q^2)_inf * q^{(k+nu)(k-1)}`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ZeroValueBound {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_log2: f64,
    pub rhs_log2: f64,
}

impl ZeroValueBound {
    pub fn holds(&self) -> bool {
        self.lhs_log2 <= self.rhs_log2
    }
}

pub fn check_zero_value_bound(ctx: &QContext, k: usize) -> Result<ZeroValueBound> {
    let zero = ZeroCache::shared(ctx).get(k)?;
    let p = zero.prec;
    let qj = Float::with_val(p, &zero.exact * ctx.q());
    let lhs = qbessel::bessel_j_hp(ctx, &qj)?.value.abs();
    let q2 = ctx.q() * ctx.q();
    let c = q_pochhammer(-q2, q2, Order::Infinite)? * q_pochhammer(-q2.powf(ctx.nu() + 1.0), q2, Order::Infinite)?
        / q_pochhammer(q2, q2, Order::Infinite)?;
    let kf = k as f64;
    let rhs_log2 = c.log2() + (kf + ctx.nu()) * (kf - 1.0) * ctx.q().log2();
    let lhs_log2 = log2_abs(&lhs);
    Ok(ZeroValueBound { k, lhs: lhs.to_f64(), rhs: rhs_log2.exp2(), lhs_log2, rhs_log2 })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DerivativeEntry {
    pub k: usize,
    /// `J'(j_k) / (A q^{-(k + nu/2 - 1 - eps_k)^2})`.
    pub s_k: f64,
    /// `|J'(j_k)| q^{k(k+nu-2)}`.
    pub scaled: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeReport {
    pub entries: Vec<DerivativeEntry>,
    pub min_abs_s: f64,
    pub max_abs_s: f64,
    pub min_scaled: f64,
    pub max_scaled: f64,
}

/// Normalized derivatives at the zeros, computed in log space.
pub fn check_derivative_asymptotics(ctx: &QContext, ks: RangeInclusive<usize>) -> Result<DerivativeReport> {
    let cache = ZeroCache::shared(ctx);
    let q = ctx.q();
    let nu = ctx.nu();
    let ln_q = q.ln();
    let norm = qbessel::normalization(ctx, 128)?.to_f64();
    let ln_a = std::f64::consts::LN_2 + (nu - 1.0) * (nu - 3.0) / 4.0 * ln_q + norm.ln();
    let ks: Vec<usize> = ks.collect();
    let entries = ks
        .par_iter()
        .map(|&k| -> Result<DerivativeEntry> {
            let zero = cache.get(k)?;
            let d = qbessel::bessel_j_prime_hp(ctx, &zero.exact)?.value;
            let ln_d = log2_abs(&d) * std::f64::consts::LN_2;
            let sign = if d.is_sign_negative() { -1.0 } else { 1.0 };
            let e = k as f64 + nu / 2.0 - 1.0 - zero.eps_k;
            let s_k = sign * (ln_d - ln_a + e * e * ln_q).exp();
            let kf = k as f64;
            let scaled = (ln_d + kf * (kf + nu - 2.0) * ln_q).exp();
            Ok(DerivativeEntry { k, s_k, scaled })
        })
        .collect::<Result<Vec<_>>>()?;
    let fold = |f: fn(f64, f64) -> f64, init: f64, g: fn(&DerivativeEntry) -> f64| entries.iter().map(g).fold(init, f);
    Ok(DerivativeReport {
        min_abs_s: fold(f64::min, f64::INFINITY, |e| e.s_k.abs()),
        max_abs_s: fold(f64::max, 0.0, |e| e.s_k.abs()),
        min_scaled: fold(f64::min, f64::INFINITY, |e| e.scaled),
        max_scaled: fold(f64::max, 0.0, |e| e.scaled),
        entries,
    })
}

/// `|Σ_i (-1)^i (2i+1) q^{i(i+1)} - Π_{i>=1} (1 - q^{2i})^3|`.
pub fn jacobi_identity_residual(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(QbfError::InvalidParameter(format!("q must lie in (0, 1), got {q}")));
    }
    let mut lhs = 0.0;
    for i in 0.. {
        let fi = f64::from(i);
        let t = (2.0 * fi + 1.0) * q.powf(fi * (fi + 1.0));
        lhs += if i % 2 == 0 { t } else { -t };
        if t < 1e-18 * lhs.abs().max(1e-300) || t == 0.0 {
            break;
        }
    }
    let rhs = q_pochhammer(q * q, q * q, Order::Infinite)?.powi(3);
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ctx(q: f64, nu: f64) -> QContext {
        QContext::new(q, nu).unwrap()
    }

    #[test]
    fn alpha_examples() {
        let a = alpha_bound(&ctx(0.5, 1.0), 1).unwrap();
        assert_relative_eq!(a, (1.0f64 - 0.0625 / 0.75).ln() / (2.0 * 0.5f64.ln()), max_relative = 1e-15);
        assert!((a - 0.0628).abs() < 1e-4);
        let c = ctx(0.5, 1.0);
        let r = alpha_bound(&c, 21).unwrap() / alpha_bound(&c, 20).unwrap();
        assert!((r - 0.25).abs() < 1e-6);
        assert!(matches!(alpha_bound(&ctx(0.99, 0.1), 1), Err(QbfError::OutOfRegime { k: 1 })));
        assert!(alpha_bound(&c, 0).is_err());
    }

    #[test]
    fn first_zeros_match_reference() {
        // Reference zeros from an independent 180-digit bisection and Newton run.
        let c = ctx(0.5, 1.0);
        let z1 = find_zero(&c, 1).unwrap();
        assert_relative_eq!(z1.value, 1.916_728_395_850_936, max_relative = 1e-15);
        assert!(z1.certified);
        assert!((z1.eps_k - 0.061_354_081).abs() < 1e-8);
        let z3 = find_zero(&c, 3).unwrap();
        assert_relative_eq!(z3.value, 7.999_999_513_450_252, max_relative = 1e-15);
        assert!((z3.eps_k / 8.774_286_6e-8 - 1.0).abs() < 1e-7);
        let c = ctx(0.5, 2.0);
        let z5 = find_zero(&c, 5).unwrap();
        assert!((z5.eps_k / 1.286_584_1e-21 - 1.0).abs() < 1e-7);
        assert_relative_eq!(find_zero(&c, 1).unwrap().value, 1.979_173_051_681_687_7, max_relative = 1e-15);
    }

    #[test]
    fn bracket_contains_zero() {
        let c = ctx(0.5, 1.0);
        let z = find_zero(&c, 5).unwrap();
        assert!(z.lo_exact < z.exact && z.exact < z.hi_exact);
        assert_ne!(sign_at(&c, &z.lo_exact, Kind::Value).unwrap(), sign_at(&c, &z.hi_exact, Kind::Value).unwrap());
        let hi = z.hi_exact.to_f64();
        assert!(hi >= 32.0 && z.value / 32.0 > 0.5f64.powf(z.alpha_k.unwrap()));
    }

    #[test]
    fn value_is_a_zero_to_its_precision() {
        let c = ctx(0.5, 1.0);
        let z = find_zero(&c, 1).unwrap();
        let j = qbessel::bessel_j_hp(&c, &z.exact).unwrap();
        let d = qbessel::bessel_j_prime_hp(&c, &z.exact).unwrap();
        // |J(j*)| <= |J'| j 2^{6-p} + evaluation error: the refinement stops once the
        // Newton correction is below 2^{4-p} relative.
        let sens = Float::with_val(z.prec, &d.value * &z.exact).abs() * hp::pow2(z.prec, 6 - i64::from(z.prec));
        assert!(Float::with_val(z.prec, j.value.abs_ref()) <= sens + &j.error_bound);
    }

    #[test]
    fn scan_agrees_with_theorem_brackets() {
        let c = ctx(0.5, 1.0);
        let found = scan_sign_changes(&c, 40.0, 10).unwrap();
        assert_eq!(found.len(), 5);
        for (k, &(lo, hi)) in found.iter().enumerate() {
            let z = find_zero(&c, k + 1).unwrap();
            assert!(lo < z.value && z.value <= hi);
        }
    }

    #[test]
    fn out_of_regime_uses_scan() {
        let c = ctx(0.9, 0.5);
        assert!(!in_regime(&c, 1));
        let z1 = find_zero(&c, 1).unwrap();
        assert!(!z1.certified);
        let z2 = find_zero(&c, 2).unwrap();
        assert!(z1.value < z2.value);
        assert!(qbessel::bessel_j(&c, z1.value).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn jacobi_identity() {
        for q in [0.3, 0.5, 0.8] {
            assert!(jacobi_identity_residual(q).unwrap() < 1e-13);
        }
    }

    #[test]
    fn zero_value_bound_small_k() {
        let c = ctx(0.5, 1.0);
        let b = check_zero_value_bound(&c, 5).unwrap();
        assert!(b.holds(), "{b:?}");
    }

    #[test]
    fn shift_identity_holds_at_zeros() {
        let c = ctx(0.5, 1.0);
        let r = qbessel::check_shift_identity(&c, 1).unwrap();
        assert!(r.residual < 1e-10 && r.holds(), "{r:?}");
        let c = ctx(0.5, 2.0);
        let r = qbessel::check_shift_identity(&c, 3).unwrap();
        assert!(r.residual < 1e-10 && r.holds(), "{r:?}");
    }
}
