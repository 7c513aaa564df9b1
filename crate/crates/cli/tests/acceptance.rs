//! Acceptance suite: twelve end-to-end criteria at their stated tolerances. Prints one
//! `[PASS]`/`[FAIL]` line per criterion and exits nonzero if any fails.

use std::process::Command;
use std::time::Instant;

use qbf_core::expansions::{example1_coefficient, example2_coefficient, ClosedFormExpansion};
use qbf_core::qpoly::{check_factorization, check_finite_sum_identities, check_polynomial_agreement};
use qbf_core::series::{
    check_coefficient_integral_identity, convergence_report, fourier_coefficient, fourier_coefficients,
    orthogonality_report, partial_sum_function, partial_sum_grid,
};
use qbf_core::zeros::{check_derivative_asymptotics, check_zero_value_bound, jacobi_identity_residual};
use qbf_core::{hp, Float, QContext, ZeroCache};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ctx(q: f64, nu: f64) -> QContext {
    QContext::new(q, nu).expect("valid parameters")
}

fn fail<T>(msg: String) -> Result<T, String> {
    Err(msg)
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn orthogonality() -> Outcome {
    let r = orthogonality_report(&ctx(0.5, 1.0), 10).map_err(e)?;
    let detail = format!("max off-diagonal {:.3e} (< 1e-10), max diagonal gap {:.3e} (< 1e-9)", r.max_off_diagonal, r.max_diagonal_gap);
    if r.max_off_diagonal < 1e-10 && r.max_diagonal_gap < 1e-9 {
        Ok(detail)
    } else {
        fail(detail)
    }
}

fn zero_certification() -> Outcome {
    let c = ctx(0.5, 1.0);
    let ks: Vec<usize> = (1..=16).collect();
    let zeros = ZeroCache::shared(&c).many(&ks).map_err(e)?;
    let limit = 1.5 * 0.25;
    let mut worst_ratio = 0.0f64;
    for z in &zeros[..15] {
        let alpha = z.alpha_k.ok_or_else(|| format!("k={} outside the regime", z.k))?;
        if !z.certified || !(z.eps_exact > 0) || !(z.eps_exact < alpha) {
            return fail(format!("k={}: certified={}, eps={:e}, alpha={alpha:e}", z.k, z.certified, z.eps_k));
        }
    }
    for k in 5..=15 {
        let r = Float::with_val(zeros[k].prec, &zeros[k].eps_exact / &zeros[k - 1].eps_exact).to_f64();
        worst_ratio = worst_ratio.max(r);
        if !(r < limit) {
            return fail(format!("eps_{}/eps_{} = {r:e} (limit {limit})", k + 1, k));
        }
    }
    Ok(format!("k=1..15 certified with 0 < eps < alpha; max eps ratio for k>=5 is {worst_ratio:.3e} (< {limit})"))
}

fn polynomial_agreement() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_boundary = 0.0f64;
    for q in [0.3, 0.5, 0.8] {
        for nu in [0.5, 1.0, 2.5] {
            let a = check_polynomial_agreement(&ctx(q, nu), 12);
            worst = worst.max(a.max());
            worst_boundary = worst_boundary.max(a.boundary_values);
        }
    }
    let detail = format!("max pairwise relative difference {worst:.3e} (< 1e-12), boundary {worst_boundary:.3e} (< 1e-13)");
    if worst < 1e-12 && worst_boundary < 1e-13 {
        Ok(detail)
    } else {
        fail(detail)
    }
}

fn factorization() -> Outcome {
    let c = ctx(0.5, 1.0);
    let mut worst = 0.0f64;
    for n in 0..=6 {
        for k in 1..=5 {
            let r = check_factorization(&c, n, k).map_err(e)?;
            if !r.holds() {
                return fail(format!("n={n}, k={k}: residual {:e} above bound {:e}", r.residual, r.bound));
            }
            if r.bound > 0.0 {
                worst = worst.max(r.residual / r.bound);
            }
        }
    }
    Ok(format!("n<=6, k<=5: max residual/bound {worst:.3e}"))
}

fn finite_sums() -> Outcome {
    let r = check_finite_sum_identities(0.5, 1.0, 12, &[1, 2, 3, 4, 5]).map_err(e)?;
    let detail = format!(
        "finite-sum {:.1e}, lambda {:.1e}, double sum {:.1e}, product-coefficients {:.1e}, convolution {:.1e} (< 1e-12)",
        r.finite_sum, r.lambda, r.double_sum, r.product_coefficients, r.convolution
    );
    if r.max_residual() < 1e-12 {
        Ok(detail)
    } else {
        fail(detail)
    }
}

fn example1() -> Outcome {
    let c = ctx(0.5, 2.0);
    let f = ClosedFormExpansion::power_nu(&c).map_err(e)?.grid_function(c.depth(), 192).map_err(e)?;
    let mut worst = 0.0f64;
    for k in 1..=10 {
        let numeric = fourier_coefficient(&c, &f, k).map_err(e)?.value;
        let closed = example1_coefficient(&c, k).map_err(e)?;
        worst = worst.max((numeric / closed - 1.0).abs());
    }
    if worst >= 1e-9 {
        return fail(format!("coefficient mismatch {worst:.3e}"));
    }
    let coeffs = fourier_coefficients(&c, &f, 30).map_err(e)?;
    let mut sups = Vec::new();
    for k_cut in 1..=30 {
        let s = partial_sum_grid(&c, &coeffs[..k_cut], 20).map_err(e)?;
        let sup = s
            .iter()
            .enumerate()
            .map(|(n, v)| Float::with_val(192, &f.values()[n] - v).abs().to_f64())
            .fold(0.0, f64::max);
        sups.push(sup);
    }
    // Strictly decreasing until the 192-bit working floor, flat at most afterwards.
    let floor = 2f64.powi(-160);
    if let Some(i) = sups.windows(2).position(|w| w[1] > w[0] || (w[0] > floor && w[1] >= w[0])) {
        return fail(format!("sup error does not decrease from K={} ({:e}) to K={} ({:e})", i + 1, sups[i], i + 2, sups[i + 1]));
    }
    let last = sups[29];
    let detail = format!("coefficients agree to {worst:.1e}; sup error decreasing in K down to the working floor, {last:.3e} at K=30 (< 1e-8)");
    if last < 1e-8 {
        Ok(detail)
    } else {
        fail(detail)
    }
}

fn example2() -> Outcome {
    let c = ctx(0.5, 2.0);
    let f = ClosedFormExpansion::g_nu_mu(&c, 3.0).map_err(e)?.grid_function(c.depth(), 192).map_err(e)?;
    let mut worst = 0.0f64;
    let mut worst_red = 0.0f64;
    for k in 1..=8 {
        let numeric = fourier_coefficient(&c, &f, k).map_err(e)?.value;
        let closed = example2_coefficient(&c, 3.0, k).map_err(e)?;
        worst = worst.max((numeric / closed - 1.0).abs());
    }
    for k in 1..=10 {
        let a2 = example2_coefficient(&c, 3.0, k).map_err(e)?;
        let a1 = example1_coefficient(&c, k).map_err(e)?;
        worst_red = worst_red.max((a2 / a1 - 1.0).abs());
    }
    let detail = format!("formula vs numeric {worst:.3e} (< 1e-8); mu = nu+1 vs example 1 {worst_red:.3e} (< 1e-10)");
    if worst < 1e-8 && worst_red < 1e-10 {
        Ok(detail)
    } else {
        fail(detail)
    }
}

fn uniform_rate() -> Outcome {
    let c = ctx(0.5, 2.0);
    let f = ClosedFormExpansion::power_nu(&c).map_err(e)?.grid_function(c.depth(), 192).map_err(e)?;
    let r = convergence_report(&c, &f, 40, 32).map_err(e)?;
    let rate = r.term_rate.ok_or("no rate fit")?;
    let limit = 0.5f64.powf(0.8);
    let detail = format!("fitted term ratio {:.4} (<= {limit:.4})", rate.ratio);
    if rate.ratio <= limit {
        Ok(detail)
    } else {
        fail(detail)
    }
}

fn asymptotic_bounds() -> Outcome {
    let c = ctx(0.5, 1.0);
    let mut worst = f64::NEG_INFINITY;
    for k in 3..=12 {
        let b = check_zero_value_bound(&c, k).map_err(e)?;
        if !b.holds() {
            return fail(format!("k={k}: |J(q j)| = 2^{:.2} above bound 2^{:.2}", b.lhs_log2, b.rhs_log2));
        }
        worst = worst.max(b.lhs_log2 - b.rhs_log2);
    }
    let d = check_derivative_asymptotics(&c, 3..=12).map_err(e)?;
    let floor = d.min_abs_s / d.max_abs_s;
    if floor <= 0.1 {
        return fail(format!("normalized derivative min/max = {floor:.3}"));
    }
    let mut jac = 0.0f64;
    for q in [0.3, 0.5, 0.8] {
        jac = jac.max(jacobi_identity_residual(q).map_err(e)?);
    }
    let detail = format!(
        "zero-value bound margin 2^{worst:.2}; min|S|/max|S| = {floor:.3} (> 0.1); Jacobi residual {jac:.1e} (< 1e-13)"
    );
    if jac < 1e-13 {
        Ok(detail)
    } else {
        fail(detail)
    }
}

fn coefficient_identity() -> Outcome {
    let c = ctx(0.5, 2.0);
    let f = ClosedFormExpansion::power_nu(&c).map_err(e)?.grid_function(c.depth(), 192).map_err(e)?;
    let mut worst = 0.0f64;
    for k in [1, 4] {
        worst = worst.max(check_coefficient_integral_identity(&c, &f, k).map_err(e)?.relative);
    }
    let detail = format!("relative residual {worst:.3e} (< 1e-9)");
    if worst < 1e-9 {
        Ok(detail)
    } else {
        fail(detail)
    }
}

fn round_trip() -> Outcome {
    // Absolute agreement at the default precision, then relative agreement with enough
    // bits to resolve |a_20| ~ 1e-126.
    let mut detail = Vec::new();
    for (bits, relative) in [(None, false), (Some(576), true)] {
        let mut c = ctx(0.5, 2.0);
        if let Some(b) = bits {
            c = c.with_min_prec(b).map_err(e)?;
        }
        let prec = c.min_prec() + 64;
        let f = ClosedFormExpansion::power_nu(&c).map_err(e)?.grid_function(c.depth(), prec).map_err(e)?;
        let coeffs = fourier_coefficients(&c, &f, 40).map_err(e)?;
        let s = partial_sum_function(&c, &coeffs).map_err(e)?;
        let mut worst = 0.0f64;
        for k in 1..=20 {
            let again = fourier_coefficient(&c, &s, k).map_err(e)?;
            let d = if relative {
                hp::rel_diff(&again.value_hp, &coeffs[k - 1].value_hp)
            } else {
                Float::with_val(prec, &again.value_hp - &coeffs[k - 1].value_hp).abs().to_f64()
            };
            worst = worst.max(d);
        }
        let kind = if relative { "relative" } else { "absolute" };
        detail.push(format!("{kind} {worst:.3e} at {prec} bits"));
        if !(worst < 1e-9) {
            return fail(format!("k<=20: {} (< 1e-9)", detail.join(", ")));
        }
    }
    Ok(format!("k<=20 re-extracted from S_40: {} (< 1e-9)", detail.join(", ")))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(e)?;
    let run = || -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_qbf"))
            .args(["verify", "--q", "0.5", "--nu", "1", "--format", "json", "--seed", "7"])
            .env("QBF_CACHE_DIR", dir.path())
            .output()
            .map_err(e)?;
        if !out.status.success() {
            return fail(format!("verify exited with {}: {}", out.status, String::from_utf8_lossy(&out.stderr)));
        }
        Ok(out.stdout)
    };
    let a = run()?;
    let b = run()?;
    if a == b {
        Ok(format!("two runs produced identical JSON ({} bytes)", a.len()))
    } else {
        fail("outputs differ".into())
    }
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("orthogonality", orthogonality),
        ("zero certification", zero_certification),
        ("polynomial triple agreement", polynomial_agreement),
        ("factorization", factorization),
        ("finite-sum identities", finite_sums),
        ("power expansion", example1),
        ("product expansion", example2),
        ("uniform rate", uniform_rate),
        ("asymptotic bounds", asymptotic_bounds),
        ("coefficient-integral identity", coefficient_identity),
        ("round trip", round_trip),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("[PASS] {:>2} {name}: {d} [{secs:.2}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {d} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
