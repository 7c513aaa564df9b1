//! The polynomials `P_n(x; q)` with `J_nu(q^{n+1} j; q^2) = J_nu(q j; q^2) P_n(j^2; q)` at
//! every zero `j` of `J_nu`, their coefficients `a_j^{(n)}`, and the finite q-sum
//! identities behind the explicit coefficient formula.
//!
//! Three independent constructions are provided: the three-term recurrence
//! `P_{n+1} = [(q^nu + q^{-nu}) - q^{-nu+2(n+1)} x] P_n - P_{n-1}`, the convolution
//! recurrence in `a_0^{(m)}`, and the explicit double-sum formula (in two forms).
//! Coefficients are built in MPFR arithmetic and also exposed rounded to `f64`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::Float;
use serde::Serialize;

use crate::error::{QbfError, Result};
use crate::hp::{self, log2_abs};
use crate::qbessel::{bessel_j_hp, bessel_j_prime_hp};
use crate::qcore::QContext;
use crate::zeros::ZeroCache;

/// Default working precision for coefficient construction, in bits.
pub const POLY_PREC: u32 = 192;

/// `P_n` as its coefficient vector `a_0..a_n` in powers of `x`.
#[derive(Clone, Debug)]
pub struct PolyP {
    pub n: usize,
    pub coeffs: Vec<f64>,
    pub ctx: QContext,
    coeffs_hp: Vec<Float>,
}

/// `P(x)` together with `Σ |a_j x^j|`, the scale of the rounding error.
#[derive(Clone, Debug)]
pub struct PolyValue {
    pub value: Float,
    pub abs_sum: Float,
}

impl PolyValue {
    /// `Σ |a_j x^j| / |P(x)|`.
    pub fn condition(&self) -> f64 {
        (log2_abs(&self.abs_sum) - log2_abs(&self.value)).exp2()
    }
}

impl PolyP {
    fn from_hp(ctx: &QContext, coeffs_hp: Vec<Float>) -> Self {
        Self { n: coeffs_hp.len() - 1, coeffs: coeffs_hp.iter().map(Float::to_f64).collect(), ctx: *ctx, coeffs_hp }
    }

    pub fn coeffs_hp(&self) -> &[Float] {
        &self.coeffs_hp
    }

    pub fn prec(&self) -> u32 {
        self.coeffs_hp[0].prec()
    }

    /// Horner evaluation in double precision.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
    }

    /// `P'(x)` by Horner's scheme.
    pub fn derivative_hp(&self, x: &Float) -> Float {
        let p = self.prec().max(x.prec());
        let mut d = Float::with_val(p, 0);
        for (i, a) in self.coeffs_hp.iter().enumerate().skip(1).rev() {
            d = d * x + Float::with_val(p, a * (i as u32));
        }
        d
    }

    /// Horner evaluation at the coefficient precision.
    pub fn eval_hp(&self, x: &Float) -> PolyValue {
        let p = self.prec().max(x.prec());
        let ax = Float::with_val(p, x.abs_ref());
        let mut value = Float::with_val(p, 0);
        let mut abs_sum = Float::with_val(p, 0);
        for a in self.coeffs_hp.iter().rev() {
            value = value * x + a;
            abs_sum = abs_sum * &ax + Float::with_val(p, a.abs_ref());
        }
        PolyValue { value, abs_sum }
    }
}

struct Powers {
    prec: u32,
    q: Float,
    q_nu: Float,
}

impl Powers {
    fn new(ctx: &QContext, prec: u32) -> Self {
        Self { prec, q: ctx.q_hp(prec), q_nu: ctx.q_pow(prec, ctx.nu()) }
    }

    fn q_int(&self, e: i64) -> Float {
        hp::powi(self.prec, &self.q, e)
    }

    /// `a_0^{(m)} = q^{-m nu} Σ_{i=0}^m q^{2 nu i}`.
    fn a0(&self, m: usize) -> Float {
        let p = self.prec;
        let r = Float::with_val(p, self.q_nu.square_ref());
        let mut s = Float::with_val(p, 0);
        let mut t = Float::with_val(p, 1);
        for _ in 0..=m {
            s += &t;
            t *= &r;
        }
        s / hp::powi(p, &self.q_nu, m as i64)
    }
}

/// `a_0^{(m)}` for `m = 0..=n`.
fn a0_table(pw: &Powers, n: usize) -> Vec<Float> {
    (0..=n).map(|m| pw.a0(m)).collect()
}

/// Builds `P_n` by the three-term recurrence.
pub fn poly_p_by_recurrence(ctx: &QContext, n: usize) -> PolyP {
    poly_p_by_recurrence_prec(ctx, n, POLY_PREC)
}

pub fn poly_p_by_recurrence_prec(ctx: &QContext, n: usize, prec: u32) -> PolyP {
    let pw = Powers::new(ctx, prec);
    let c = Float::with_val(prec, &pw.q_nu + Float::with_val(prec, 1 / &pw.q_nu));
    let mut prev: Vec<Float> = Vec::new();
    let mut cur = vec![Float::with_val(prec, 1)];
    for m in 0..n {
        let b = Float::with_val(prec, &pw.q_int(2 * (m as i64 + 1)) / &pw.q_nu);
        let mut next = vec![Float::with_val(prec, 0); m + 2];
        for (j, slot) in next.iter_mut().enumerate() {
            if j <= m {
                *slot += Float::with_val(prec, &c * &cur[j]);
            }
            if j >= 1 {
                *slot -= Float::with_val(prec, &b * &cur[j - 1]);
            }
            if j < prev.len() {
                *slot -= &prev[j];
            }
        }
        prev = std::mem::replace(&mut cur, next);
    }
    PolyP::from_hp(ctx, cur)
}

/// Builds `P_n` from `a_j^{(n)} = -q^{2-nu} Σ_{λ=0}^{n-j} q^{2(n-1-λ)} a_0^{(λ)} a_{j-1}^{(n-1-λ)}`.
pub fn poly_p_by_convolution(ctx: &QContext, n: usize) -> PolyP {
    let prec = POLY_PREC;
    let pw = Powers::new(ctx, prec);
    let a0 = a0_table(&pw, n);
    let lead = Float::with_val(prec, &pw.q_int(2) / &pw.q_nu);
    // table[m][j] = a_j^{(m)}
    let mut table: Vec<Vec<Float>> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let mut row = vec![a0[m].clone()];
        for j in 1..=m {
            let mut s = Float::with_val(prec, 0);
            for l in 0..=(m - j) {
                let w = pw.q_int(2 * (m as i64 - 1 - l as i64));
                s += w * &a0[l] * &table[m - 1 - l][j - 1];
            }
            row.push(-Float::with_val(prec, &lead * &s));
        }
        table.push(row);
    }
    PolyP::from_hp(ctx, table.pop().expect("n + 1 rows"))
}

/// Memoized `(Q^a; Q)_m` for integer `a >= 0` with `Q = q^2`.
struct PochTable {
    prec: u32,
    qq: Float,
    memo: HashMap<(i64, usize), Float>,
}

impl PochTable {
    fn new(q: &Float, prec: u32) -> Self {
        Self { prec, qq: Float::with_val(prec, q.square_ref()), memo: HashMap::new() }
    }

    fn get(&mut self, a: i64, m: usize) -> Float {
        if let Some(v) = self.memo.get(&(a, m)) {
            return v.clone();
        }
        let p = self.prec;
        let mut x = hp::powi(p, &self.qq, a);
        let mut prod = Float::with_val(p, 1);
        for _ in 0..m {
            prod *= Float::with_val(p, 1 - &x);
            x *= &self.qq;
        }
        self.memo.insert((a, m), prod.clone());
        prod
    }
}

#[derive(Clone, Copy)]
enum ExplicitForm {
    First,
    Second,
}

fn poly_p_explicit_form(ctx: &QContext, n: usize, form: ExplicitForm) -> PolyP {
    let prec = POLY_PREC;
    let pw = Powers::new(ctx, prec);
    let a0 = a0_table(&pw, n);
    let mut poch = PochTable::new(&pw.q, prec);
    let nu = ctx.nu();
    let mut coeffs = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let (ji, ni) = (j as i64, n as i64);
        let mut s = Float::with_val(prec, 0);
        for i in 0..=((n - j) / 2) {
            let ii = i as i64;
            let r = n - j - 2 * i;
            let mut t = Float::with_val(prec, &a0[r] * &pw.q_int(2 * ii));
            t *= poch.get(ji, i) / poch.get(1, i);
            match form {
                ExplicitForm::First => {
                    t *= poch.get(1 + ji, r) / poch.get(1, r);
                    t *= poch.get(1 + ni - 2 * ii, i) / poch.get(r as i64 + 2, i);
                }
                ExplicitForm::Second => {
                    let r1 = n - j - i;
                    t *= poch.get(1 + ji, r1) / poch.get(1, r1);
                    t *= poch.get(1 + ni - ji - 2 * ii, 1) / poch.get(1 + ni - ji - ii, 1);
                }
            }
            s += t;
        }
        // (-1)^j q^{j(j+1-nu)}
        let e = Float::with_val(prec, (j as f64) * (j as f64 + 1.0 - nu));
        let mut c = s * hp::powf(prec, &pw.q, &e);
        if j % 2 == 1 {
            c = -c;
        }
        coeffs.push(c);
    }
    PolyP::from_hp(ctx, coeffs)
}

/// Builds `P_n` from the explicit double-sum coefficient formula.
pub fn poly_p_explicit(ctx: &QContext, n: usize) -> PolyP {
    poly_p_explicit_form(ctx, n, ExplicitForm::First)
}

/// The second displayed form of the explicit coefficient formula.
pub fn poly_p_explicit_second_form(ctx: &QContext, n: usize) -> PolyP {
    poly_p_explicit_form(ctx, n, ExplicitForm::Second)
}

/// `a_0^{(n)} = q^{-n nu} Σ_{i=0}^n q^{2 nu i}`.
pub fn a0_closed_form(ctx: &QContext, n: usize) -> f64 {
    Powers::new(ctx, POLY_PREC).a0(n).to_f64()
}

/// `a_n^{(n)} = (-1)^n q^{n(n+1-nu)}`.
pub fn leading_closed_form(ctx: &QContext, n: usize) -> f64 {
    let nf = n as f64;
    let v = ctx.q().powf(nf * (nf + 1.0 - ctx.nu()));
    if n % 2 == 1 { -v } else { v }
}

/// Largest coefficient-wise relative difference between two polynomials.
pub fn max_relative_difference(a: &PolyP, b: &PolyP) -> f64 {
    if a.n != b.n {
        return f64::INFINITY;
    }
    a.coeffs_hp.iter().zip(&b.coeffs_hp).map(|(x, y)| hp::rel_diff(x, y)).fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FactorizationCheck {
    pub n: usize,
    pub k: usize,
    /// `|J(q^{n+1} j) - J(q j) P_n(j^2)|`.
    pub residual: f64,
    /// Propagated error estimate of the two sides.
    pub bound: f64,
    /// `|J(q j) P_n(j^2)|`.
    pub scale: f64,
    /// Horner condition number `Σ |a_i x^i| / |P_n(x)|` at `x = j^2`.
    pub condition: f64,
}

impl FactorizationCheck {
    pub fn holds(&self) -> bool {
        self.residual <= self.bound
    }

    /// Cancellation in Horner's scheme large enough to warrant a warning.
    pub fn ill_conditioned(&self) -> bool {
        self.condition > 1e12
    }
}

/// Compares `J(q^{n+1} j_k)` with `J(q j_k) P_n(j_k^2)`.
pub fn check_factorization(ctx: &QContext, n: usize, k: usize) -> Result<FactorizationCheck> {
    let zero = ZeroCache::shared(ctx).get(k)?;
    let p = zero.prec;
    let j = &zero.exact;
    let poly = poly_p_by_recurrence_prec(ctx, n, p);
    let x = Float::with_val(p, j.square_ref());
    let pv = poly.eval_hp(&x);
    let qj = Float::with_val(p, j * ctx.q());
    let base = bessel_j_hp(ctx, &qj)?;
    let shifted_arg = Float::with_val(p, j * &hp::powi(p, &ctx.q_hp(p), n as i64 + 1));
    let shifted = bessel_j_hp(ctx, &shifted_arg)?;
    let rhs = Float::with_val(p, &base.value * &pv.value);
    let residual = Float::with_val(p, &shifted.value - &rhs).abs();
    let abs_p = hp::abs(&pv.value);
    // `j` carries a few ulps of error; the residual moves by the slope times that.
    let qn1 = hp::powi(p, &ctx.q_hp(p), n as i64 + 1);
    let d_shifted = hp::abs(&bessel_j_prime_hp(ctx, &shifted_arg)?.value) * &qn1;
    let d_base = hp::abs(&bessel_j_prime_hp(ctx, &qj)?.value) * ctx.q() * &abs_p;
    let d_poly = hp::abs(&poly.derivative_hp(&x)) * hp::abs(&base.value) * Float::with_val(p, j * 2u32);
    let sensitivity = (d_shifted + d_base + d_poly) * hp::abs(j) * hp::pow2(p, 6 - i64::from(p));
    let abs_base = hp::abs(&base.value);
    let abs_rhs = hp::abs(&rhs);
    let rounding = Float::with_val(p, &pv.abs_sum * ((4 * n + 8) as f64)) * hp::pow2(p, -i64::from(p));
    let bound = Float::with_val(p, &shifted.error_bound + Float::with_val(p, &base.error_bound * &abs_p))
        + rounding * &abs_base
        + Float::with_val(p, &abs_rhs * hp::pow2(p, 8 - i64::from(p)))
        + sensitivity;
    Ok(FactorizationCheck {
        n,
        k,
        residual: residual.to_f64(),
        bound: bound.to_f64(),
        scale: abs_rhs.to_f64(),
        condition: pv.condition(),
    })
}

/// `max |J_nu(q^{1+n} j_k)|` over `n <= n_max`, `k <= k_max`.
pub fn uniform_bound(ctx: &QContext, n_max: usize, k_max: usize) -> Result<f64> {
    let cache = ZeroCache::shared(ctx);
    let per_k = (1..=k_max)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let zero = cache.get(k)?;
            let p = zero.prec;
            let q = ctx.q_hp(p);
            let mut x = Float::with_val(p, &zero.exact * &q);
            let mut m = 0.0f64;
            for _ in 0..=n_max {
                m = m.max(bessel_j_hp(ctx, &x)?.value.abs().to_f64());
                x *= &q;
            }
            Ok(m)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_k.into_iter().fold(0.0, f64::max))
}

/// Maximum relative residual of each finite q-sum identity over the index box.
#[derive(Clone, Debug, Serialize)]
pub struct FiniteSumReport {
    pub q: f64,
    pub nu: f64,
    pub max_index: usize,
    pub seeds: Vec<u64>,
    /// `Σ_{k<=i} q^k (q^j;q)_k/(q;q)_k = (q^{1+j};q)_i/(q;q)_i`.
    pub finite_sum: f64,
    /// `Σ_{k<=i} q^{2k} (q^{j-1};q)_k/(q;q)_k (q^{1+i+λ-k};q)_1
    ///   = (q;q)_1 (q^{j+1};q)_i/(q;q)_i + (q^λ;q)_1 q^{1+i} (q^j;q)_i/(q;q)_i`.
    pub lambda: f64,
    /// The double sum over `k <= i`, `λ <= n` collapsing to
    /// `(q^{1+j};q)_{n+i}/(q;q)_{n+i} (q^{1+n};q)_1/(q^{1+n+i};q)_1`.
    pub double_sum: f64,
    /// `Σ_λ a_0^{(λ)} a_0^{(m-λ)} γ_λ = Σ_θ a_0^{(m-2θ)} Σ_{λ=θ}^{m-θ} γ_λ`.
    pub product_coefficients: f64,
    /// `a_0^{(λ)} a_0^{(m-λ)} = Σ_{θ<=min(λ,m-λ)} a_0^{(m-2θ)}`.
    pub convolution: f64,
}

impl FiniteSumReport {
    pub fn max_residual(&self) -> f64 {
        [self.finite_sum, self.lambda, self.double_sum, self.product_coefficients, self.convolution]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// `(q^a; q)_m` for integer `a` (possibly negative), base `q`.
fn poch_base(q: &Float, a: i64, m: usize, prec: u32) -> Float {
    let mut x = hp::powi(prec, q, a);
    let mut p = Float::with_val(prec, 1);
    for _ in 0..m {
        p *= Float::with_val(prec, 1 - &x);
        x *= q;
    }
    p
}

fn rel(l: &Float, r: &Float) -> f64 {
    hp::rel_diff(l, r)
}

/// Seeded test sequence `γ_0..γ_m` uniform in `[-1, 1]`.
pub fn gamma_sequence(seed: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

/// Evaluates the finite-sum identities for all indices up to `max_index`.
pub fn check_finite_sum_identities(q: f64, nu: f64, max_index: usize, seeds: &[u64]) -> Result<FiniteSumReport> {
    let ctx = QContext::new(q, nu)?;
    let prec = POLY_PREC;
    let qh = Float::with_val(prec, q);
    let poch = |a: i64, m: usize| poch_base(&qh, a, m, prec);
    let qi = |e: i64| hp::powi(prec, &qh, e);
    let top = max_index as i64;
    let mut finite_sum = 0.0f64;
    let mut lambda = 0.0f64;
    let mut double_sum = 0.0f64;
    for i in 0..=max_index {
        let ii = i as i64;
        for j in 0..=top {
            let mut l = Float::with_val(prec, 0);
            for k in 0..=i {
                l += qi(k as i64) * poch(j, k) / poch(1, k);
            }
            let r = poch(1 + j, i) / poch(1, i);
            finite_sum = finite_sum.max(rel(&l, &r));

            for lam in 0..=top {
                let mut l = Float::with_val(prec, 0);
                for k in 0..=i {
                    let kk = k as i64;
                    l += qi(2 * kk) * poch(j - 1, k) / poch(1, k) * poch(1 + ii + lam - kk, 1);
                }
                let r = poch(1, 1) * poch(j + 1, i) / poch(1, i) + poch(lam, 1) * qi(1 + ii) * poch(j, i) / poch(1, i);
                lambda = lambda.max(rel(&l, &r));
            }

            for n in 0..=max_index {
                let nn = n as i64;
                let mut l = Float::with_val(prec, 0);
                for k in 0..=i {
                    let kk = k as i64;
                    let mut inner = Float::with_val(prec, 0);
                    for lam in 0..=nn {
                        inner += qi(lam) * poch(j + ii, lam as usize) / poch(1 + ii, lam as usize)
                            * poch(1 + ii + lam - kk, 1)
                            / poch(1 + ii + lam, 1);
                    }
                    l += qi(2 * kk) * poch(j - 1, k) / poch(1, k) * inner;
                }
                let r = poch(1 + j, n + i) / poch(1, n + i) * poch(1 + nn, 1) / poch(1 + nn + ii, 1);
                double_sum = double_sum.max(rel(&l, &r));
            }
        }
    }

    let pw = Powers::new(&ctx, prec);
    let a0 = a0_table(&pw, max_index);
    let mut product_coefficients = 0.0f64;
    let mut convolution = 0.0f64;
    for m in 0..=max_index {
        for &seed in seeds {
            let g = gamma_sequence(seed.wrapping_add(m as u64), m + 1);
            let mut l = Float::with_val(prec, 0);
            for lam in 0..=m {
                l += Float::with_val(prec, &a0[lam] * &a0[m - lam]) * g[lam];
            }
            let mut r = Float::with_val(prec, 0);
            for t in 0..=(m / 2) {
                let s: Float = g[t..=(m - t)].iter().fold(Float::with_val(prec, 0), |acc, &x| acc + x);
                r += Float::with_val(prec, &a0[m - 2 * t] * &s);
            }
            product_coefficients = product_coefficients.max(rel(&l, &r));
        }
        for lam in 0..=m {
            let l = Float::with_val(prec, &a0[lam] * &a0[m - lam]);
            let mut r = Float::with_val(prec, 0);
            for t in 0..=lam.min(m - lam) {
                r += &a0[m - 2 * t];
            }
            convolution = convolution.max(rel(&l, &r));
        }
    }
    Ok(FiniteSumReport {
        q,
        nu,
        max_index,
        seeds: seeds.to_vec(),
        finite_sum,
        lambda,
        double_sum,
        product_coefficients,
        convolution,
    })
}

/// Cross-method agreement over `n <= n_max`: the largest relative coefficient
/// difference between each pair of constructions and between the two explicit forms,
/// plus the error of the closed-form boundary coefficients.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PolyAgreement {
    pub recurrence_vs_explicit: f64,
    pub recurrence_vs_convolution: f64,
    pub explicit_vs_convolution: f64,
    pub explicit_forms: f64,
    pub boundary_values: f64,
}

impl PolyAgreement {
    pub fn max(&self) -> f64 {
        self.recurrence_vs_explicit
            .max(self.recurrence_vs_convolution)
            .max(self.explicit_vs_convolution)
            .max(self.explicit_forms)
    }
}

pub fn check_polynomial_agreement(ctx: &QContext, n_max: usize) -> PolyAgreement {
    let mut out = PolyAgreement {
        recurrence_vs_explicit: 0.0,
        recurrence_vs_convolution: 0.0,
        explicit_vs_convolution: 0.0,
        explicit_forms: 0.0,
        boundary_values: 0.0,
    };
    for n in 0..=n_max {
        let r = poly_p_by_recurrence(ctx, n);
        let e = poly_p_explicit(ctx, n);
        let e2 = poly_p_explicit_second_form(ctx, n);
        let c = poly_p_by_convolution(ctx, n);
        out.recurrence_vs_explicit = out.recurrence_vs_explicit.max(max_relative_difference(&r, &e));
        out.recurrence_vs_convolution = out.recurrence_vs_convolution.max(max_relative_difference(&r, &c));
        out.explicit_vs_convolution = out.explicit_vs_convolution.max(max_relative_difference(&e, &c));
        out.explicit_forms = out.explicit_forms.max(max_relative_difference(&e, &e2));
        let b0 = (r.coeffs[0] - a0_closed_form(ctx, n)).abs() / a0_closed_form(ctx, n).abs();
        let bn = (r.coeffs[n] - leading_closed_form(ctx, n)).abs() / leading_closed_form(ctx, n).abs();
        out.boundary_values = out.boundary_values.max(b0).max(bn);
    }
    out
}

/// Error for a degree outside the supported range.
pub fn check_degree(n: usize) -> Result<()> {
    if n > 4096 {
        return Err(QbfError::InvalidParameter(format!("degree {n} is too large")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ctx(q: f64, nu: f64) -> QContext {
        QContext::new(q, nu).unwrap()
    }

    #[test]
    fn low_degrees() {
        let c = ctx(0.5, 1.0);
        assert_eq!(poly_p_by_recurrence(&c, 0).coeffs, vec![1.0]);
        let p1 = poly_p_by_recurrence(&c, 1);
        assert_relative_eq!(p1.coeffs[0], 0.5 + 2.0, max_relative = 1e-15);
        assert_relative_eq!(p1.coeffs[1], -0.5, max_relative = 1e-15);
    }

    #[test]
    fn explicit_matches_recurrence_at_degree_four() {
        let c = ctx(0.5, 1.0);
        let d = max_relative_difference(&poly_p_by_recurrence(&c, 4), &poly_p_explicit(&c, 4));
        assert!(d < 1e-40, "{d}");
    }

    #[test]
    fn boundary_coefficients() {
        let c = ctx(0.3, 2.5);
        for n in 0..=12 {
            let p = poly_p_explicit(&c, n);
            assert_relative_eq!(p.coeffs[n], leading_closed_form(&c, n), max_relative = 1e-15);
            assert_relative_eq!(p.coeffs[0], a0_closed_form(&c, n), max_relative = 1e-15);
        }
    }

    #[test]
    fn coefficient_signs_alternate() {
        let c = ctx(0.8, 0.5);
        for n in 0..=12 {
            let p = poly_p_by_recurrence(&c, n);
            for (j, a) in p.coeffs.iter().enumerate() {
                assert_eq!(*a < 0.0, j % 2 == 1, "n={n} j={j}");
            }
        }
    }

    #[test]
    fn horner_matches_hp() {
        let c = ctx(0.5, 1.0);
        let p = poly_p_by_recurrence(&c, 5);
        let v = p.eval_hp(&Float::with_val(64, 3.0));
        assert_relative_eq!(p.eval(3.0), v.value.to_f64(), max_relative = 1e-13);
        assert!(v.condition() >= 1.0);
    }

    #[test]
    fn factorization_examples() {
        let c = ctx(0.5, 1.0);
        let r = check_factorization(&c, 0, 2).unwrap();
        assert!(r.holds() && r.residual < 1e-60, "{r:?}");
        let r = check_factorization(&c, 3, 2).unwrap();
        assert!(r.residual < 1e-9 * r.scale && r.holds(), "{r:?}");
        let r = check_factorization(&c, 6, 4).unwrap();
        assert!(r.holds(), "{r:?}");
    }

    #[test]
    fn finite_sums_small_box() {
        let r = check_finite_sum_identities(0.5, 1.0, 4, &[1, 2]).unwrap();
        assert!(r.max_residual() < 1e-40, "{r:?}");
    }

    #[test]
    fn finite_sum_first_index() {
        let q: f64 = 0.5;
        for j in 0..6 {
            let lhs = 1.0 + q * (1.0 - q.powi(j)) / (1.0 - q);
            let rhs = (1.0 - q.powi(1 + j)) / (1.0 - q);
            assert!((lhs - rhs).abs() < 1e-15);
        }
    }

    #[test]
    fn gamma_sequences_are_seeded() {
        assert_eq!(gamma_sequence(7, 5), gamma_sequence(7, 5));
        assert_ne!(gamma_sequence(7, 5), gamma_sequence(8, 5));
        assert!(gamma_sequence(3, 100).iter().all(|g| (-1.0..=1.0).contains(g)));
    }
}
