//! Closed-form expansions used as references for the numerical coefficients.
//!
//! - `x^nu` with `a_k = -2 / (q^nu j_k J_nu'(j_k))`.
//! - `g(x) = x^nu (x^2 q^2; q^2)_inf / (x^2 q^{2mu-2nu}; q^2)_inf`, `mu > nu > -1/2`, with
//!   `a_k = -2 q^{1-mu} j_k^{nu-mu} (q^2;q^2)_inf / (q^{2mu-2nu};q^2)_inf
//!          · J_mu(q j_k) / (J_{nu+1}(q j_k) J_nu'(j_k))`.
//!
//! For `mu = nu + 1` the second reduces to the first.

use rayon::prelude::*;
use rug::Float;
use serde::Serialize;

use crate::error::{QbfError, Result};
use crate::hp;
use crate::qbessel::bessel_j_hp;
use crate::qcore::{q_pochhammer_hp, GridFunction, Order, QContext, TailModel};
use crate::series::{CoefficientSource, FourierBessel, FourierCoefficient};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExpansionKind {
    PowerNu,
    GNuMu { mu: f64 },
}

/// A target function with known coefficients.
#[derive(Clone, Copy, Debug)]
pub struct ClosedFormExpansion {
    pub ctx: QContext,
    pub kind: ExpansionKind,
}

impl ClosedFormExpansion {
    /// `x^nu`.
    pub fn power_nu(ctx: &QContext) -> Result<Self> {
        if ctx.nu() <= -0.5 {
            return Err(QbfError::InvalidParameter(format!("x^nu needs nu > -1/2, got {}", ctx.nu())));
        }
        Ok(Self { ctx: *ctx, kind: ExpansionKind::PowerNu })
    }

    /// `g_{nu,mu}`.
    pub fn g_nu_mu(ctx: &QContext, mu: f64) -> Result<Self> {
        check_orders(ctx.nu(), mu)?;
        Ok(Self { ctx: *ctx, kind: ExpansionKind::GNuMu { mu } })
    }

    /// Uniform convergence is asserted for `nu > 1`.
    pub fn uniform_claims_apply(&self) -> bool {
        self.ctx.nu() > 1.0
    }

    pub fn coefficient(&self, k: usize) -> Result<FourierCoefficient> {
        let fb = FourierBessel::shared(&self.ctx);
        let col = fb.column(k)?;
        let value = match self.kind {
            ExpansionKind::PowerNu => example1_coefficient_hp(&self.ctx, k)?,
            ExpansionKind::GNuMu { mu } => example2_coefficient_hp(&self.ctx, mu, k)?,
        };
        Ok(FourierCoefficient::new_hp(k, value, &col.eta, CoefficientSource::ClosedForm))
    }

    pub fn coefficients(&self, k_max: usize) -> Result<Vec<FourierCoefficient>> {
        FourierBessel::shared(&self.ctx).columns(k_max)?;
        (1..=k_max).into_par_iter().map(|k| self.coefficient(k)).collect()
    }

    /// `f(x)` for `0 <= x <= 1/q`.
    pub fn target_hp(&self, x: &Float) -> Result<Float> {
        let prec = x.prec().max(64);
        if x.is_sign_negative() && !x.is_zero() {
            return Err(QbfError::InvalidParameter("targets are evaluated at x >= 0".into()));
        }
        let nu = self.ctx.nu();
        let pow = if x.is_zero() {
            Float::with_val(prec, if nu == 0.0 { 1 } else { 0 })
        } else {
            hp::powf(prec, x, &Float::with_val(prec, nu))
        };
        match self.kind {
            ExpansionKind::PowerNu => Ok(pow),
            ExpansionKind::GNuMu { mu } => Ok(pow * product_ratio(&self.ctx, mu, x, prec)?),
        }
    }

    pub fn target(&self, x: f64) -> Result<f64> {
        Ok(self.target_hp(&Float::with_val(64, x))?.to_f64())
    }

    /// Samples on `q^n`, `n = 0..=depth`, with `f(1/q)`, `f(0+)` and the `x^nu` tail.
    pub fn grid_function(&self, depth: usize, prec: u32) -> Result<GridFunction> {
        let nu = self.ctx.nu();
        if let ExpansionKind::PowerNu = self.kind {
            return GridFunction::power(&self.ctx, depth, prec, nu);
        }
        let q = self.ctx.q_hp(prec);
        let mut x = Float::with_val(prec, 1);
        let mut values = Vec::with_capacity(depth + 1);
        for _ in 0..=depth {
            values.push(self.target_hp(&x)?);
            x *= &q;
        }
        let g = GridFunction::from_hp_values(&self.ctx, prec, values);
        let pre_x = Float::with_val(prec, 1 / &self.ctx.q_hp(prec));
        let limit = Float::with_val(prec, if nu == 0.0 { 1 } else { 0 });
        Ok(g?
            .with_pre_value_hp(self.target_hp(&pre_x)?)?
            .with_limit_value_hp(limit)?
            .with_tail_model(TailModel::PowerLaw { exponent: nu }))
    }
}

fn check_orders(nu: f64, mu: f64) -> Result<()> {
    if !(mu > nu && nu > -0.5) {
        return Err(QbfError::InvalidParameter(format!("need mu > nu > -1/2, got nu = {nu}, mu = {mu}")));
    }
    Ok(())
}

/// `(x^2 q^2; q^2)_inf / (x^2 q^{2mu-2nu}; q^2)_inf` with both products truncated at the
/// same index. When `mu - nu` is a positive integer `m` the ratio is the finite
/// product `(x^2 q^2; q^2)_{m-1}`.
fn product_ratio(ctx: &QContext, mu: f64, x: &Float, prec: u32) -> Result<Float> {
    let p = prec + 32;
    let qq = Float::with_val(p, ctx.q_hp(p).square_ref());
    let x2 = Float::with_val(p, x.square_ref());
    let d = mu - ctx.nu();
    let mut a = Float::with_val(p, &x2 * &qq);
    if d.fract() == 0.0 && d >= 1.0 {
        let m = d as i64 - 1;
        let mut r = Float::with_val(p, 1);
        for _ in 0..m {
            r *= Float::with_val(p, 1 - &a);
            a *= &qq;
        }
        return Ok(hp::with_prec(&r, prec));
    }
    let mut b = Float::with_val(p, &x2 * &ctx.q_pow(p, 2.0 * d));
    let mut num = Float::with_val(p, 1);
    let mut den = Float::with_val(p, 1);
    let eps = hp::pow2(p, -i64::from(p) - 8);
    for _ in 0..ctx.max_terms() {
        if hp::abs(&a) < eps && hp::abs(&b) < eps {
            if den.is_zero() {
                return Err(QbfError::Singular(format!("pole of the target at x = {}", hp::to_decimal(x, 17))));
            }
            return Ok(hp::with_prec(&(num / den), prec));
        }
        num *= Float::with_val(p, 1 - &a);
        den *= Float::with_val(p, 1 - &b);
        a *= &qq;
        b *= &qq;
    }
    Err(QbfError::NonConvergence { what: "product ratio".into(), terms: ctx.max_terms() })
}

pub(crate) fn example1_coefficient_hp(ctx: &QContext, k: usize) -> Result<Float> {
    let fb = FourierBessel::shared(ctx);
    let col = fb.column(k)?;
    let p = fb.prec();
    let den = Float::with_val(p, &ctx.q_pow(p, ctx.nu()) * &col.zero.exact) * &col.j_prime;
    Ok(Float::with_val(p, -2) / den)
}

/// `-2 / (q^nu j_k J_nu'(j_k))`.
pub fn example1_coefficient(ctx: &QContext, k: usize) -> Result<f64> {
    Ok(example1_coefficient_hp(ctx, k)?.to_f64())
}

/// `g_{nu,mu}(x)` for `0 <= x < 1`.
pub fn example2_target(ctx: &QContext, mu: f64, x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x.abs()) {
        return Err(QbfError::InvalidParameter(format!("the product form needs |x| < 1, got {x}")));
    }
    ClosedFormExpansion::g_nu_mu(ctx, mu)?.target(x.abs())
}

/// `x^nu (1 - x^2)^{mu - nu - 1}`, the `q -> 1` limit of `g_{nu,mu}`.
pub fn example2_classical_limit(nu: f64, mu: f64, x: f64) -> f64 {
    x.powf(nu) * (1.0 - x * x).powf(mu - nu - 1.0)
}

/// `(q^2;q^2)_inf / (q^{2mu-2nu};q^2)_inf` and `J_mu(q j_k)` at working precision.
fn example2_parts(ctx: &QContext, mu: f64, k: usize) -> Result<(Float, Float)> {
    check_orders(ctx.nu(), mu)?;
    let fb = FourierBessel::shared(ctx);
    let col = fb.column(k)?;
    let p = fb.prec();
    let qq = Float::with_val(p, ctx.q_hp(p).square_ref());
    let num = q_pochhammer_hp(&qq, &qq, Order::Infinite, p)?;
    let den = q_pochhammer_hp(&ctx.q_pow(p, 2.0 * (mu - ctx.nu())), &qq, Order::Infinite, p)?;
    let zp = col.zero.prec.max(p);
    let z = Float::with_val(zp, &col.zero.exact * &ctx.q_hp(zp));
    let j_mu = bessel_j_hp(&ctx.with_nu(mu)?, &z)?.value;
    Ok((num / den, hp::with_prec(&j_mu, p)))
}

pub(crate) fn example2_coefficient_hp(ctx: &QContext, mu: f64, k: usize) -> Result<Float> {
    let (ratio, j_mu) = example2_parts(ctx, mu, k)?;
    let fb = FourierBessel::shared(ctx);
    let col = fb.column(k)?;
    let p = fb.prec();
    let nu = ctx.nu();
    let den = Float::with_val(p, &col.j_next * &col.j_prime);
    if den.is_zero() {
        return Err(QbfError::DivisionByZero(format!("J_(nu+1)(q j_{k}) J_nu'(j_{k}) vanishes")));
    }
    let j = hp::with_prec(&col.zero.exact, p);
    let jp = hp::powf(p, &j, &Float::with_val(p, nu - mu));
    Ok(Float::with_val(p, -2) * ctx.q_pow(p, 1.0 - mu) * jp * ratio * j_mu / den)
}

/// The closed-form coefficient of `g_{nu,mu}`.
pub fn example2_coefficient(ctx: &QContext, mu: f64, k: usize) -> Result<f64> {
    Ok(example2_coefficient_hp(ctx, mu, k)?.to_f64())
}

/// `∫_0^1 t g(t) J_nu(q j_k t) d_q t = (1-q) (q j_k)^{nu-mu} (q^2;q^2)_inf / (q^{2mu-2nu};q^2)_inf J_mu(q j_k)`.
pub fn example2_integral(ctx: &QContext, mu: f64, k: usize) -> Result<f64> {
    let (ratio, j_mu) = example2_parts(ctx, mu, k)?;
    let fb = FourierBessel::shared(ctx);
    let col = fb.column(k)?;
    let p = fb.prec();
    let qh = ctx.q_hp(p);
    let qj = Float::with_val(p, &col.zero.exact * &qh);
    let pw = hp::powf(p, &qj, &Float::with_val(p, ctx.nu() - mu));
    Ok((Float::with_val(p, 1 - &qh) * pw * ratio * j_mu).to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::fourier_coefficient;

    fn ctx(q: f64, nu: f64) -> QContext {
        QContext::new(q, nu).unwrap()
    }

    #[test]
    fn example1_reference_value() {
        // mpmath, 600 bits
        let a = example1_coefficient(&ctx(0.5, 2.0), 1).unwrap();
        assert!((a / 1.033_768_159_212_035 - 1.0).abs() < 1e-14, "{a}");
    }

    #[test]
    fn example1_signs_follow_derivative() {
        let c = ctx(0.5, 2.0);
        let fb = FourierBessel::shared(&c);
        for k in 1..=8 {
            let a = example1_coefficient(&c, k).unwrap();
            let jp = fb.column(k).unwrap().j_prime.to_f64();
            assert!(a * jp < 0.0, "k={k}");
            if k > 1 {
                assert!(a * example1_coefficient(&c, k - 1).unwrap() < 0.0);
            }
        }
    }

    #[test]
    fn target_values() {
        let c = ctx(0.5, 2.0);
        assert_eq!(example2_target(&c, 3.0, 0.0).unwrap(), 0.0);
        assert!(example2_target(&c, 3.0, 1.0).is_err());
        assert!(example2_target(&c, 1.0, 0.5).is_err());
        // mu = nu + 1 leaves x^nu
        let g = example2_target(&c, 3.0, 0.7).unwrap();
        assert!((g - 0.49).abs() < 1e-15, "{g}");
    }

    #[test]
    fn non_integer_offset_target() {
        // mpmath, 600 bits: 0.3^1.5 (0.09*0.25; 0.25)_inf / (0.09*0.5^1.6; 0.25)_inf
        let c = ctx(0.5, 1.5);
        let g = example2_target(&c, 2.3, 0.3).unwrap();
        assert!((g / 0.165_933_407_062_008_76 - 1.0).abs() < 1e-14, "{g}");
    }

    #[test]
    fn example2_integral_matches_numeric() {
        let c = ctx(0.5, 2.0);
        let e = ClosedFormExpansion::g_nu_mu(&c, 3.5).unwrap();
        let f = e.grid_function(c.depth(), 192).unwrap();
        let fb = FourierBessel::shared(&c);
        for k in 1..=3 {
            let a = fourier_coefficient(&c, &f, k).unwrap();
            let eta = fb.column(k).unwrap().eta.to_f64();
            let closed = example2_integral(&c, 3.5, k).unwrap();
            assert!((a.value * eta / closed - 1.0).abs() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn reduction_to_example1() {
        let c = ctx(0.5, 2.0);
        for k in 1..=5 {
            let a1 = example1_coefficient(&c, k).unwrap();
            let a2 = example2_coefficient(&c, 3.0, k).unwrap();
            assert!((a2 / a1 - 1.0).abs() < 1e-10, "k={k}");
        }
    }
}
