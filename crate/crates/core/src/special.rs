//! Overflow-safe hyperbolic helpers used by the free-energy code.

use crate::scalar::{lit, Real};

/// ln(2·cosh y), exact for arbitrarily large |y|.
pub fn ln_two_cosh<T: Real>(y: T) -> T {
    let a = y.abs();
    a + (-(a + a)).exp().ln_1p()
}

/// ln cosh(y) − ln cosh(y0) without cancellation when y ≈ y0.
pub fn ln_cosh_ratio<T: Real>(y: T, y0: T) -> T {
    let (y, y0) = (y.abs(), y0.abs());
    ln_cosh_shift(y0, y - y0)
}

/// ln cosh(y0 + dy) − ln cosh(y0) for y0 ≥ 0, y0 + dy ≥ 0, with `dy` supplied
/// directly so tiny shifts keep full relative accuracy.
pub fn ln_cosh_shift<T: Real>(y0: T, dy: T) -> T {
    let half = lit::<T>(0.5);
    let d = dy * half;
    if d.abs() > half {
        return ln_two_cosh(y0 + dy) - ln_two_cosh(y0);
    }
    let s = y0 + d;
    // sinh(s) / cosh(y0), computed without overflow
    let q = if y0 > lit(20.0) {
        (s - y0).exp() * (-(-(s + s)).exp_m1()) / (T::one() + (-(y0 + y0)).exp())
    } else {
        s.sinh() / y0.cosh()
    };
    (lit::<T>(2.0) * q * d.sinh()).ln_1p()
}

/// sech²(y).
pub fn sech2<T: Real>(y: T) -> T {
    let e = (-(y.abs() + y.abs())).exp();
    lit::<T>(4.0) * e / ((T::one() + e) * (T::one() + e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_two_cosh_matches_direct_and_asymptote() {
        for &y in &[0.0, 0.3, -2.0, 10.0] {
            let direct = (2.0 * f64::cosh(y)).ln();
            assert!((ln_two_cosh(y) - direct).abs() < 1e-14);
        }
        assert!((ln_two_cosh(800.0f64) - 800.0).abs() < 1e-12);
    }

    #[test]
    fn ratio_is_accurate_for_close_arguments() {
        let y0 = 1.3f64;
        let dy = 1e-9;
        // d/dy ln cosh = tanh
        let expect = y0.tanh() * dy + 0.5 * (1.0 - y0.tanh().powi(2)) * dy * dy;
        let got = ln_cosh_ratio(y0 + dy, y0);
        assert!(((got - expect) / expect).abs() < 1e-7, "{got} vs {expect}");
        let y1: f64 = 500.0 + 1e-6;
        let got_big = ln_cosh_ratio(y1, 500.0);
        assert!(((got_big - (y1 - 500.0)) / (y1 - 500.0)).abs() < 1e-12);
        let far = ln_cosh_ratio(3.0f64, 0.1);
        assert!((far - (3.0f64.cosh().ln() - 0.1f64.cosh().ln())).abs() < 1e-14);
    }

    #[test]
    fn shift_keeps_tiny_increments() {
        let dy = 1e-13f64;
        let got = ln_cosh_shift(700.0, dy);
        assert!(((got - dy) / dy).abs() < 1e-10);
        let got = ln_cosh_shift(0.0, 1e-8f64);
        assert!(((got - 5e-17) / 5e-17).abs() < 1e-7);
    }

    #[test]
    fn sech2_limits() {
        assert!((sech2(0.0f64) - 1.0).abs() < 1e-15);
        assert!(sech2(1000.0f64) == 0.0);
        assert!((sech2(0.7f64) - 1.0 / 0.7f64.cosh().powi(2)).abs() < 1e-15);
    }
}
