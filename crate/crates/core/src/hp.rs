//! Small helpers around [`rug::Float`].

use rug::ops::Pow;
use rug::Float;

/// Upper bound on working precision, in bits.
pub const MAX_PREC: u32 = 1 << 17;

pub fn hp(prec: u32, x: f64) -> Float {
    Float::with_val(prec, x)
}

/// `log2 |x|`, `-inf` for zero.
pub fn log2_abs(x: &Float) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (m, e) = x.to_f64_exp();
    m.abs().log2() + f64::from(e)
}

/// `2^e` at the given precision.
pub fn pow2(prec: u32, e: i64) -> Float {
    let one = Float::with_val(prec, 1);
    let e = e.clamp(i64::from(i32::MIN / 2), i64::from(i32::MAX / 2)) as i32;
    one << e
}

/// `base^n` for integer `n`.
pub fn powi(prec: u32, base: &Float, n: i64) -> Float {
    let b = Float::with_val(prec, base);
    b.pow(n)
}

/// `base^e` for real `e`, `base > 0`.
pub fn powf(prec: u32, base: &Float, e: &Float) -> Float {
    let b = Float::with_val(prec, base);
    b.pow(e)
}

pub fn abs(x: &Float) -> Float {
    x.clone().abs()
}

/// Relative difference `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn rel_diff(a: &Float, b: &Float) -> f64 {
    let prec = a.prec().max(b.prec());
    let d = Float::with_val(prec, a - b).abs();
    let s = if a.cmp_abs(b) == Some(std::cmp::Ordering::Less) { abs(b) } else { abs(a) };
    if s.is_zero() {
        return if d.is_zero() { 0.0 } else { f64::INFINITY };
    }
    (d / s).to_f64()
}

/// Round `x` to `prec` bits.
pub fn with_prec(x: &Float, prec: u32) -> Float {
    Float::with_val(prec, x)
}

/// Decimal rendering with `digits` significant digits.
pub fn to_decimal(x: &Float, digits: usize) -> String {
    x.to_string_radix(10, Some(digits))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log2_of_powers_of_two() {
        assert_eq!(log2_abs(&hp(64, 8.0)), 3.0);
        assert_eq!(log2_abs(&pow2(64, -5000)), -5000.0);
        assert_eq!(log2_abs(&hp(64, 0.0)), f64::NEG_INFINITY);
    }

    #[test]
    fn integer_powers() {
        let q = hp(200, 0.5);
        assert_eq!(powi(200, &q, -3).to_f64(), 8.0);
        assert_eq!(powi(200, &q, 4).to_f64(), 0.0625);
    }

    #[test]
    fn relative_difference() {
        assert_eq!(rel_diff(&hp(64, 2.0), &hp(64, 1.0)), 0.5);
        assert_eq!(rel_diff(&hp(64, 0.0), &hp(64, 0.0)), 0.0);
    }
}
