//! Randomized invariants of the core library.

use proptest::prelude::*;
use qbf_core::qbessel::{bessel_j_hp_bits, check_difference_relation};
use qbf_core::qcore::{symmetric_q_derivative, TailModel};
use qbf_core::qpoly::{
    a0_closed_form, leading_closed_form, max_relative_difference, poly_p_by_convolution, poly_p_by_recurrence,
    poly_p_explicit, poly_p_explicit_second_form,
};
use qbf_core::series::fourier_coefficient;
use qbf_core::{bessel_j, find_zero, q_integral, q_pochhammer, Float, GridFunction, Order, QContext};

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn pochhammer_splits(a in -0.95f64..0.95, q in 0.05f64..0.95, m in 0i64..=20, k in 0i64..=20) {
        let whole = q_pochhammer(a, q, Order::Finite(m + k)).unwrap();
        let head = q_pochhammer(a, q, Order::Finite(m)).unwrap();
        let tail = q_pochhammer(a * q.powi(m as i32), q, Order::Finite(k)).unwrap();
        prop_assert!(close(whole, head * tail, 1e-13), "{whole} vs {}", head * tail);
    }

    #[test]
    fn pochhammer_symmetry(a in -0.95f64..0.95, q in 0.05f64..0.95, m in 0i64..=20, k in 0i64..=20) {
        let p = |x: f64, n: i64| q_pochhammer(x, q, Order::Finite(n)).unwrap();
        let lhs = p(a * q.powi(m as i32), k) / p(a, k);
        let rhs = p(a * q.powi(k as i32), m) / p(a, m);
        prop_assert!(close(lhs, rhs, 1e-13), "{lhs} vs {rhs}");
    }

    #[test]
    fn infinite_product_extends_finite(a in -0.95f64..0.95, q in 0.05f64..0.9, m in 0i64..=10) {
        let inf = q_pochhammer(a, q, Order::Infinite).unwrap();
        let split = q_pochhammer(a, q, Order::Finite(m)).unwrap()
            * q_pochhammer(a * q.powi(m as i32), q, Order::Infinite).unwrap();
        prop_assert!(close(inf, split, 1e-13));
    }

    #[test]
    fn symmetric_derivative_of_constant_is_zero(c in -1e6f64..1e6, q in 0.05f64..0.95, x in 0.0f64..4.0) {
        prop_assert_eq!(symmetric_q_derivative(q, |_| c, x, Some(0.0)).unwrap(), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jackson_integral_is_linear(
        q in 0.1f64..0.9, alpha in -3.0f64..3.0, beta in -3.0f64..3.0, p1 in 0.0f64..4.0, p2 in 0.0f64..4.0,
    ) {
        // Deep enough that the stored nodes alone resolve the integral.
        let depth = (-40.0 / q.ln()).ceil() as usize;
        let ctx = QContext::new(q, 1.0).unwrap().with_depth(depth).unwrap();
        let f = GridFunction::power(&ctx, depth, 128, p1).unwrap();
        let g = GridFunction::power(&ctx, depth, 128, p2).unwrap();
        let h = GridFunction::linear_combination(alpha, &f, beta, &g).unwrap();
        let (i_f, i_g, i_h) = (q_integral(&f, 0).unwrap(), q_integral(&g, 0).unwrap(), q_integral(&h, 0).unwrap());
        let expect = alpha * i_f.value.to_f64() + beta * i_g.value.to_f64();
        let scale = alpha.abs() * i_f.abs_sum.to_f64() + beta.abs() * i_g.abs_sum.to_f64();
        prop_assert!((i_h.value.to_f64() - expect).abs() <= 1e-13 * scale.max(1e-300));
    }

    #[test]
    fn jackson_integral_of_nonnegative_is_nonnegative(q in 0.1f64..0.9, p in 0.0f64..3.0, w in 0.0f64..50.0) {
        let ctx = QContext::new(q, 1.0).unwrap();
        let f = GridFunction::from_fn_f64(&ctx, 256, |t| t.powf(p) * (1.0 + (w * t).sin()))
            .unwrap()
            .with_tail_model(TailModel::PowerLaw { exponent: p });
        prop_assert!(q_integral(&f, 0).unwrap().value >= 0);
    }

    #[test]
    fn double_precision_bessel_honours_its_bound(q in 0.1f64..0.95, nu in 0.0f64..5.0, z in 0.0f64..=1.0) {
        let ctx = QContext::new(q, nu).unwrap();
        let e = bessel_j(&ctx, z).unwrap();
        let exact = bessel_j_hp_bits(&ctx, &Float::with_val(53, z), 256).unwrap().value;
        let err = Float::with_val(256, &exact - e.value).abs().to_f64();
        prop_assert!(e.tail_bound >= 0.0);
        prop_assert!(e.terms_used <= ctx.max_terms());
        prop_assert!(err <= e.tail_bound, "error {err:e} above bound {:e}", e.tail_bound);
    }

    #[test]
    fn difference_relation_within_bound(q in 0.1f64..0.95, nu in 0.01f64..=5.0, s in 0.0f64..=1.0) {
        let ctx = QContext::new(q, nu).unwrap();
        let x = s * q.powi(-3);
        let r = check_difference_relation(&ctx, x).unwrap();
        prop_assert!(r.holds(), "x={x}: residual {:e} above {:e}", r.residual, r.bound);
    }

    #[test]
    fn polynomial_constructions_agree(q in 0.1f64..0.95, nu in 0.05f64..4.0, n in 0usize..=12) {
        let ctx = QContext::new(q, nu).unwrap();
        let rec = poly_p_by_recurrence(&ctx, n);
        prop_assert_eq!(rec.coeffs.len(), n + 1);
        for other in [poly_p_explicit(&ctx, n), poly_p_explicit_second_form(&ctx, n), poly_p_by_convolution(&ctx, n)] {
            prop_assert!(max_relative_difference(&rec, &other) < 1e-12);
        }
        prop_assert!(close(rec.coeffs[0], a0_closed_form(&ctx, n), 1e-13));
        prop_assert!(close(rec.coeffs[n], leading_closed_form(&ctx, n), 1e-13));
        for (j, c) in rec.coeffs.iter().enumerate() {
            prop_assert!(*c != 0.0 && (c.is_sign_negative() == (j % 2 == 1)), "a_{j} = {c}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zeros_are_bracketed_ordered_and_certified(q in 0.2f64..0.8, nu in 0.2f64..3.0, k in 1usize..=8) {
        let ctx = QContext::new(q, nu).unwrap();
        let z = find_zero(&ctx, k).unwrap();
        let next = find_zero(&ctx, k + 1).unwrap();
        // The bracket can be narrower than one binary64 ulp, so strictness is checked on
        // the stored high-precision values.
        prop_assert!(z.lo_exact < z.exact && z.exact < z.hi_exact);
        prop_assert!(z.bracket_lo <= z.value && z.value <= z.bracket_hi);
        prop_assert!(z.exact < next.exact);
        let sign = |x: &Float| bessel_j_hp_bits(&ctx, x, 128).unwrap().value.is_sign_negative();
        prop_assert!(sign(&z.lo_exact) != sign(&z.hi_exact));
        if z.certified {
            let alpha = z.alpha_k.unwrap();
            prop_assert!(z.eps_k > 0.0 && z.eps_k < alpha);
        }
        prop_assert!(z.certified || !z.in_regime);
    }

    #[test]
    fn coefficients_are_linear(alpha in -2.0f64..2.0, beta in -2.0f64..2.0, p1 in 0.5f64..4.0, p2 in 0.5f64..4.0, k in 1usize..=6) {
        let ctx = QContext::new(0.5, 1.5).unwrap();
        let f = GridFunction::power(&ctx, 256, 192, p1).unwrap();
        let g = GridFunction::power(&ctx, 256, 192, p2).unwrap();
        let h = GridFunction::linear_combination(alpha, &f, beta, &g).unwrap();
        let a = |u: &GridFunction| fourier_coefficient(&ctx, u, k).unwrap().value;
        let (af, ag) = (a(&f), a(&g));
        let expect = alpha * af + beta * ag;
        prop_assert!((a(&h) - expect).abs() <= 1e-12 * (alpha.abs() * af.abs() + beta.abs() * ag.abs()));
    }
}
