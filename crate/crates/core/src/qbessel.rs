//! Evaluation of `J_nu(z; q^2)` and its derivative, where
//!
//! ```text
//! J_nu(z; q^2) = z^nu (q^{2nu+2}; q^2)_inf / (q^2; q^2)_inf
//!                * Σ_k (-1)^k q^{k(k+1)} z^{2k} / ((q^{2nu+2}; q^2)_k (q^2; q^2)_k)
//! ```
//!
//! For `z > 1` the terms grow to a peak of roughly `q^{-(log_q z)^2}` before decaying,
//! and near the zeros the sum is many orders of magnitude smaller than that peak. The
//! series is therefore summed in MPFR arithmetic with the working precision chosen
//! from the predicted peak, and raised until the requested number of bits is certified
//! by the running error estimate.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use rug::Float;
use serde::Serialize;

use crate::error::{QbfError, Result};
use crate::hp::{self, log2_abs, MAX_PREC};
use crate::qcore::{q_pochhammer_hp, Order, QContext, Residual};

/// A double-precision evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BesselEval {
    pub value: f64,
    pub terms_used: usize,
    /// Absolute bound on truncation remainder, rounding error and the final rounding to `f64`.
    pub tail_bound: f64,
}

/// A high-precision evaluation.
#[derive(Clone, Debug)]
pub struct BesselEvalHp {
    pub value: Float,
    pub terms_used: usize,
    /// Absolute bound on the truncation remainder.
    pub tail_bound: Float,
    /// Absolute bound on the total error, truncation included.
    pub error_bound: Float,
    /// Working precision used for the summation.
    pub prec: u32,
    /// `log2` of the largest summand relative to the result, i.e. bits lost to cancellation.
    pub cancellation_bits: f64,
}

impl BesselEvalHp {
    /// Number of correct leading bits certified by the error bound.
    pub fn accurate_bits(&self) -> f64 {
        log2_abs(&self.value) - log2_abs(&self.error_bound)
    }

    /// Sign of the value when the error bound excludes zero.
    pub fn certified_sign(&self) -> Option<std::cmp::Ordering> {
        if self.error_bound.is_zero() && self.value.is_zero() {
            return Some(std::cmp::Ordering::Equal);
        }
        match self.value.cmp_abs(&self.error_bound) {
            Some(std::cmp::Ordering::Greater) => self.value.cmp0(),
            _ => None,
        }
    }

    fn to_f64_eval(&self) -> Result<BesselEval> {
        let value = self.value.to_f64();
        if !value.is_finite() {
            return Err(QbfError::Overflow(format!("J = {} does not fit a double", hp::to_decimal(&self.value, 6))));
        }
        let rounding = Float::with_val(self.prec, &self.value - value).abs();
        let bound = Float::with_val(self.prec, &self.error_bound + &rounding).to_f64();
        Ok(BesselEval { value, terms_used: self.terms_used, tail_bound: bound })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Kind {
    Value,
    Derivative,
}

struct SeriesConstants {
    /// `(Q^{nu+1}; Q)_inf / (Q; Q)_inf` with `Q = q^2`.
    prefactor: Float,
    /// `Q^nu`.
    q2_nu: Float,
    /// Number of factors in the products, for the rounding budget.
    factors: usize,
}

type ConstKey = (u64, u64, u32);

fn constants(q: f64, nu: f64, prec: u32) -> Result<Arc<SeriesConstants>> {
    static CACHE: OnceLock<RwLock<HashMap<ConstKey, Arc<SeriesConstants>>>> = OnceLock::new();
    let bucket = prec.div_ceil(512) * 512;
    let key = (q.to_bits(), nu.to_bits(), bucket);
    let cache = CACHE.get_or_init(Default::default);
    if let Some(c) = cache.read().expect("constants cache poisoned").get(&key) {
        return Ok(Arc::clone(c));
    }
    let p = bucket + 32;
    let qq = Float::with_val(p, q) * q;
    let q2_nu = hp::powf(p, &qq, &Float::with_val(p, nu));
    let a = Float::with_val(p, &q2_nu * &qq);
    let num = q_pochhammer_hp(&a, &qq, Order::Infinite, p)?;
    let den = q_pochhammer_hp(&qq, &qq, Order::Infinite, p)?;
    let factors = (f64::from(p) / -qq.to_f64().log2()).ceil() as usize + 1;
    let c = Arc::new(SeriesConstants { prefactor: num / den, q2_nu, factors });
    let mut w = cache.write().expect("constants cache poisoned");
    if w.len() > 4096 {
        w.clear();
    }
    Ok(Arc::clone(w.entry(key).or_insert(c)))
}

/// `(Q^{nu+1}; Q)_inf / (Q; Q)_inf` at `prec` bits.
pub fn normalization(ctx: &QContext, prec: u32) -> Result<Float> {
    let c = constants(ctx.q(), ctx.nu(), prec)?;
    Ok(Float::with_val(prec, &c.prefactor))
}

/// Predicted `log2` of the largest summand (relative to the first) at `|z| = 2^{log2_z}`.
pub fn series_peak_log2(q: f64, nu: f64, log2_z: f64) -> f64 {
    let qq = q * q;
    let l = qq.log2();
    let mut s = 0.0f64;
    let mut best = 0.0f64;
    for k in 1..100_000u32 {
        let kf = f64::from(k);
        let inc = kf * l + 2.0 * log2_z - (1.0 - qq.powf(nu + kf)).log2() - (1.0 - qq.powf(kf)).log2();
        if inc < 0.0 {
            break;
        }
        s += inc;
        best = best.max(s);
    }
    best
}

/// Sum the series at a fixed working precision without retrying.
pub(crate) fn eval_fixed(ctx: &QContext, z: &Float, prec: u32, kind: Kind) -> Result<BesselEvalHp> {
    let nu = ctx.nu();
    if z.is_sign_negative() && !z.is_zero() {
        return Err(QbfError::InvalidParameter("real evaluation needs z >= 0".into()));
    }
    if z.is_zero() {
        return eval_at_zero(ctx, prec, kind);
    }
    let c = constants(ctx.q(), nu, prec)?;
    let qq = Float::with_val(prec, ctx.q()) * ctx.q();
    let z2 = Float::with_val(prec, z.square_ref());
    let mut qk = Float::with_val(prec, 1);
    let mut qnuk = Float::with_val(prec, &c.q2_nu);
    let mut term = Float::with_val(prec, 1);
    let weight = |k: usize| match kind {
        Kind::Value => 1.0,
        Kind::Derivative => 2.0 * k as f64 + nu,
    };
    let mut sum = Float::with_val(prec, weight(0));
    let mut abs_sum = Float::with_val(prec, weight(0).abs());
    let mut peak = log2_abs(&sum);
    let mut terms = 1;
    let eps_log2 = -f64::from(prec);
    let mut k = 0usize;
    let tail_log2 = loop {
        k += 1;
        if k > ctx.max_terms() {
            return Err(QbfError::NonConvergence { what: "q-Bessel series".into(), terms: ctx.max_terms() });
        }
        qk *= &qq;
        qnuk *= &qq;
        let num = Float::with_val(prec, &qk * &z2);
        let den = Float::with_val(prec, 1 - &qnuk) * Float::with_val(prec, 1 - &qk);
        let ratio = num / den;
        term *= &ratio;
        term = -term;
        let wk = weight(k);
        let wt = Float::with_val(prec, &term * wk);
        let wt_log2 = log2_abs(&wt);
        sum += &wt;
        abs_sum += Float::with_val(prec, wt.abs_ref());
        peak = peak.max(wt_log2);
        terms += 1;
        // Ratios of consecutive summands decrease monotonically in k, so once the next
        // ratio is below one the omitted part is a geometric tail.
        let next_ratio_log2 = {
            let qk1 = Float::with_val(prec, &qk * &qq);
            let qnuk1 = Float::with_val(prec, &qnuk * &qq);
            let d = Float::with_val(prec, 1 - &qnuk1) * Float::with_val(prec, 1 - &qk1);
            log2_abs(&(Float::with_val(prec, &qk1 * &z2) / d))
        };
        let w_ratio = if wk == 0.0 { 1.0 } else { (weight(k + 1) / wk).abs() };
        let rho_log2 = next_ratio_log2 + w_ratio.log2();
        if rho_log2 < -1.0 {
            let rho = rho_log2.exp2();
            let t_log2 = wt_log2 + rho_log2 - (1.0 - rho).log2();
            if wt.is_zero() || t_log2 < peak + eps_log2 - 4.0 {
                break if wt.is_zero() { f64::NEG_INFINITY } else { t_log2 };
            }
        }
    };
    let z_pow = match kind {
        Kind::Value => hp::powf(prec, z, &Float::with_val(prec, nu)),
        Kind::Derivative => hp::powf(prec, z, &Float::with_val(prec, nu - 1.0)),
    };
    let scale = Float::with_val(prec, &c.prefactor * &z_pow);
    let value = Float::with_val(prec, &sum * &scale);
    let scale_abs = hp::abs(&scale);
    let tail = if tail_log2 == f64::NEG_INFINITY {
        Float::with_val(prec, 0)
    } else {
        hp::pow2(prec, tail_log2.ceil() as i64) * &scale_abs
    };
    // Each summand carries at most ~5k rounding errors from the recurrence, and the
    // final scaling adds a few more per factor of the normalization.
    let rounding_sum = Float::with_val(prec, &abs_sum * (5 * terms + 4) as f64) * hp::pow2(prec, -i64::from(prec));
    let rounding_scale = Float::with_val(prec, value.abs_ref()) * ((c.factors + 16) as f64) * hp::pow2(prec, -i64::from(prec));
    let error_bound = Float::with_val(prec, &tail + Float::with_val(prec, &rounding_sum * &scale_abs)) + rounding_scale;
    let cancellation_bits = (peak - log2_abs(&sum)).max(0.0);
    Ok(BesselEvalHp { value, terms_used: terms, tail_bound: tail, error_bound, prec, cancellation_bits })
}

fn eval_at_zero(ctx: &QContext, prec: u32, kind: Kind) -> Result<BesselEvalHp> {
    let nu = ctx.nu();
    let zero = || Float::with_val(prec, 0);
    let value = match kind {
        Kind::Value if nu == 0.0 => Float::with_val(prec, 1),
        Kind::Value if nu > 0.0 => zero(),
        Kind::Value => return Err(QbfError::Singular(format!("J_nu(0) is unbounded for nu = {nu} < 0"))),
        Kind::Derivative if nu == 0.0 || nu > 1.0 => zero(),
        Kind::Derivative if nu == 1.0 => normalization(ctx, prec)?,
        Kind::Derivative => return Err(QbfError::Singular(format!("J_nu'(0) is unbounded for nu = {nu}"))),
    };
    let error_bound = Float::with_val(prec, value.abs_ref()) * hp::pow2(prec, 8 - i64::from(prec));
    Ok(BesselEvalHp { value, terms_used: 1, tail_bound: zero(), error_bound, prec, cancellation_bits: 0.0 })
}

/// Working precision that leaves `target` bits after cancellation at `z`.
pub(crate) fn working_prec(ctx: &QContext, z: &Float, target: u32) -> u32 {
    let peak = if z.is_zero() { 0.0 } else { series_peak_log2(ctx.q(), ctx.nu(), log2_abs(z)) };
    (target as f64 + peak.ceil() + 64.0).min(MAX_PREC as f64) as u32
}

fn eval_adaptive(ctx: &QContext, z: &Float, target: u32, kind: Kind) -> Result<BesselEvalHp> {
    let mut prec = working_prec(ctx, z, target);
    loop {
        let r = eval_fixed(ctx, z, prec, kind)?;
        if r.error_bound.is_zero() || r.accurate_bits() >= f64::from(target) {
            return Ok(r);
        }
        let deficit = f64::from(target) - r.accurate_bits();
        let next = if deficit.is_finite() { prec as f64 + deficit.ceil() + 64.0 } else { 2.0 * prec as f64 };
        if prec >= MAX_PREC {
            return Err(QbfError::PrecisionExhausted(MAX_PREC));
        }
        prec = next.min(MAX_PREC as f64) as u32;
    }
}

/// `J_nu(z; q^2)` to at least `max(ctx.min_prec, z.prec())` certified bits.
pub fn bessel_j_hp(ctx: &QContext, z: &Float) -> Result<BesselEvalHp> {
    eval_adaptive(ctx, z, ctx.min_prec().max(z.prec()), Kind::Value)
}

/// `J_nu'(z; q^2)` to at least `max(ctx.min_prec, z.prec())` certified bits.
pub fn bessel_j_prime_hp(ctx: &QContext, z: &Float) -> Result<BesselEvalHp> {
    eval_adaptive(ctx, z, ctx.min_prec().max(z.prec()), Kind::Derivative)
}

/// `J_nu(z; q^2)` to `bits` certified bits, whatever the precision of `z`.
pub fn bessel_j_hp_bits(ctx: &QContext, z: &Float, bits: u32) -> Result<BesselEvalHp> {
    eval_adaptive(ctx, z, bits.max(16), Kind::Value)
}

/// `J_nu'(z; q^2)` to `bits` certified bits, whatever the precision of `z`.
pub fn bessel_j_prime_hp_bits(ctx: &QContext, z: &Float, bits: u32) -> Result<BesselEvalHp> {
    eval_adaptive(ctx, z, bits.max(16), Kind::Derivative)
}

/// `J_nu(z; q^2)` rounded to double precision.
pub fn bessel_j(ctx: &QContext, z: f64) -> Result<BesselEval> {
    if !z.is_finite() {
        return Err(QbfError::InvalidParameter(format!("z must be finite, got {z}")));
    }
    bessel_j_hp(ctx, &Float::with_val(53, z))?.to_f64_eval()
}

/// `J_nu'(z; q^2)` rounded to double precision.
pub fn bessel_j_prime(ctx: &QContext, z: f64) -> Result<BesselEval> {
    if !z.is_finite() {
        return Err(QbfError::InvalidParameter(format!("z must be finite, got {z}")));
    }
    bessel_j_prime_hp(ctx, &Float::with_val(53, z))?.to_f64_eval()
}

/// Residual of `J(q^2 x) + q^{-nu} (q^2 x^2 - 1 - q^{2nu}) J(q x) + J(x) = 0`.
pub fn check_difference_relation(ctx: &QContext, x: f64) -> Result<Residual> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(QbfError::InvalidParameter(format!("x must be finite and >= 0, got {x}")));
    }
    let target = ctx.min_prec();
    let p = target + 64;
    let q = ctx.q_hp(p);
    let x = Float::with_val(p, x);
    let qx = Float::with_val(p, &q * &x);
    let qqx = Float::with_val(p, &q * &qx);
    let j0 = bessel_j_hp(ctx, &x)?;
    let j1 = bessel_j_hp(ctx, &qx)?;
    let j2 = bessel_j_hp(ctx, &qqx)?;
    let q_nu = ctx.q_pow(p, ctx.nu());
    let coef = (Float::with_val(p, &qx * &qx) - 1u32 - Float::with_val(p, q_nu.square_ref())) / &q_nu;
    let lhs = Float::with_val(p, &j2.value + &j0.value) + Float::with_val(p, &coef * &j1.value);
    let mag = Float::with_val(p, j2.value.abs_ref())
        + Float::with_val(p, j0.value.abs_ref())
        + Float::with_val(p, &coef * &j1.value).abs();
    let bound = Float::with_val(p, &j0.error_bound + &j2.error_bound)
        + Float::with_val(p, &coef * &j1.error_bound).abs()
        + mag * hp::pow2(p, 4 - i64::from(target));
    Ok(Residual { residual: lhs.abs().to_f64(), bound: bound.to_f64() })
}

/// Residual of `J_nu(q j) = q j J_{nu+1}(q j)` at the `k`-th zero `j` of `J_nu`.
pub fn check_shift_identity(ctx: &QContext, k: usize) -> Result<Residual> {
    let zero = crate::zeros::ZeroCache::shared(ctx).get(k)?;
    shift_identity_at(ctx, &zero.exact)
}

/// Residual of the shift identity at a given zero.
pub fn shift_identity_at(ctx: &QContext, j: &Float) -> Result<Residual> {
    let p = j.prec();
    let qj = Float::with_val(p, j * ctx.q());
    let a = bessel_j_hp(ctx, &qj)?;
    let b = bessel_j_hp(&ctx.with_nu(ctx.nu() + 1.0)?, &qj)?;
    let rhs = Float::with_val(p, &qj * &b.value);
    let res = Float::with_val(p, &a.value - &rhs).abs();
    // The identity holds exactly at the zero and the stored zero is within 2^{6-p}
    // relative, so the residual may carry |h'(j)| j 2^{6-p} with
    // h(x) = J_nu(q x) - q x J_{nu+1}(q x).
    let d_nu = bessel_j_prime_hp(ctx, &qj)?.value.abs();
    let d_nu1 = bessel_j_prime_hp(&ctx.with_nu(ctx.nu() + 1.0)?, &qj)?.value.abs();
    let slope = Float::with_val(p, &d_nu + &hp::abs(&b.value)) + Float::with_val(p, &qj * &d_nu1);
    let sens = slope * ctx.q() * Float::with_val(p, j.abs_ref()) * hp::pow2(p, 6 - i64::from(p));
    let bound = Float::with_val(p, &a.error_bound + Float::with_val(p, &qj * &b.error_bound)) + sens;
    Ok(Residual { residual: res.to_f64(), bound: bound.to_f64() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ctx(q: f64, nu: f64) -> QContext {
        QContext::new(q, nu).unwrap()
    }

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_j(&ctx(0.5, 1.0), 0.0).unwrap().value, 0.0);
        assert_eq!(bessel_j(&ctx(0.7, 0.0), 0.0).unwrap().value, 1.0);
        assert!(bessel_j(&ctx(0.5, -0.5), 0.0).is_err());
        assert!(bessel_j(&ctx(0.5, 1.0), -1.0).is_err());
    }

    #[test]
    fn derivative_at_origin() {
        let c = ctx(0.5, 1.0);
        let d0 = bessel_j_prime(&c, 0.0).unwrap().value;
        let small = bessel_j_prime(&c, 1e-9).unwrap().value;
        assert_relative_eq!(d0, small, max_relative = 1e-15);
        assert_relative_eq!(d0, normalization(&c, 128).unwrap().to_f64(), max_relative = 1e-15);
        assert_eq!(bessel_j_prime(&ctx(0.5, 0.0), 0.0).unwrap().value, 0.0);
        assert_eq!(bessel_j_prime(&ctx(0.5, 2.0), 0.0).unwrap().value, 0.0);
        assert!(bessel_j_prime(&ctx(0.5, 0.5), 0.0).is_err());
    }

    #[test]
    fn matches_reference_values() {
        // Reference values from an independent 60-digit summation.
        let c = ctx(0.5, 1.0);
        assert_relative_eq!(bessel_j(&c, 1.0).unwrap().value, 0.890_856_242_418_962_9, max_relative = 1e-15);
        assert_relative_eq!(bessel_j_prime(&c, 1.0).unwrap().value, 0.068_080_794_145_052_14, max_relative = 1e-15);
        let c = ctx(0.8, 0.5);
        assert_relative_eq!(bessel_j(&c, 2.0).unwrap().value, -0.313_747_784_685_279_3, max_relative = 1e-15);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let c = ctx(0.5, 1.0);
        let h = 1e-5;
        let d = bessel_j_prime(&c, 1.0).unwrap().value;
        let fd = (bessel_j(&c, 1.0 + h).unwrap().value - bessel_j(&c, 1.0 - h).unwrap().value) / (2.0 * h);
        assert!((d - fd).abs() < 1e-9, "{d} vs {fd}");
    }

    #[test]
    fn tail_bound_covers_truncation() {
        let c = ctx(0.5, 1.0).with_min_prec(200).unwrap();
        let z = Float::with_val(53, 7.5);
        let short = eval_fixed(&c, &z, 120, Kind::Value).unwrap();
        let long = bessel_j_hp(&c, &z).unwrap();
        let diff = Float::with_val(200, &short.value - &long.value).abs();
        assert!(diff <= short.error_bound, "{diff} > {}", short.error_bound);
    }

    #[test]
    fn large_argument_needs_and_gets_extra_bits() {
        let c = ctx(0.5, 2.0);
        // q j_12 is close to 2^11, where the sum is far below its largest term.
        let z = Float::with_val(53, 2.0f64.powi(11));
        let r = bessel_j_hp(&c, &z).unwrap();
        assert!(r.cancellation_bits > 60.0);
        assert!(r.accurate_bits() >= 128.0);
    }

    #[test]
    fn difference_relation_examples() {
        assert_eq!(check_difference_relation(&ctx(0.5, 1.0), 0.0).unwrap().residual, 0.0);
        assert!(check_difference_relation(&ctx(0.5, 1.0), 1.0).unwrap().holds());
        assert!(check_difference_relation(&ctx(0.8, 0.5), 2.0).unwrap().holds());
        assert!(check_difference_relation(&ctx(0.3, 3.0), 40.0).unwrap().holds());
    }

    #[test]
    fn peak_estimate_grows_quadratically() {
        let a = series_peak_log2(0.5, 1.0, 10.0);
        let b = series_peak_log2(0.5, 1.0, 20.0);
        assert!(a > 60.0 && b > 3.0 * a);
        assert_eq!(series_peak_log2(0.5, 1.0, -3.0), 0.0);
    }
}
