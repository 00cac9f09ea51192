//! Working precision and error-carrying values.
//!
//! Every analytic quantity in this crate is an [`Approx`]: a complex value
//! together with a nonnegative absolute error bound. Arithmetic propagates
//! the bounds by first-order interval rules plus a rounding allowance, so
//! the `err` field stays an upper bound rather than an estimate.

use rug::{ops::Pow, Complex, Float};

/// Precision settings shared by all analytic modules.
#[derive(Debug, Clone, Copy)]
pub struct Precision {
    /// Significand bits for the target result (>= 53).
    pub bits: u32,
    /// Relative series cutoff used by truncation heuristics.
    pub series_tol: f64,
}

impl Precision {
    pub fn new(bits: u32) -> Self {
        assert!(bits >= 53, "precision must be at least 53 bits");
        Precision {
            bits,
            series_tol: 2f64.powi(-(bits.min(900) as i32) - 16),
        }
    }

    /// Internal working precision: guard bits on top of the target.
    pub fn working(&self) -> u32 {
        self.bits + 64
    }

    /// One rounding unit at working precision.
    pub fn ulp(&self) -> f64 {
        2f64.powi(-(self.working().min(1000) as i32) + 2)
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::new(128)
    }
}

/// A complex value with an absolute error bound.
#[derive(Debug, Clone)]
pub struct Approx {
    pub value: Complex,
    pub err: f64,
}

impl Approx {
    pub fn exact(value: Complex) -> Self {
        Approx { value, err: 0.0 }
    }

    pub fn new(value: Complex, err: f64) -> Self {
        debug_assert!(err >= 0.0);
        Approx { value, err }
    }

    pub fn zero(prec: &Precision) -> Self {
        Approx::exact(Complex::new(prec.working()))
    }

    pub fn from_f64(prec: &Precision, re: f64) -> Self {
        Approx::exact(Complex::with_val(prec.working(), re))
    }

    /// |value| as f64 (an approximation, used only for error budgets).
    pub fn abs_f64(&self) -> f64 {
        let a = Float::with_val(64, self.value.abs_ref());
        a.to_f64()
    }

    pub fn conj(&self) -> Approx {
        Approx::new(self.value.clone().conj(), self.err)
    }

    pub fn neg(&self) -> Approx {
        Approx::new(-self.value.clone(), self.err)
    }

    pub fn add(&self, other: &Approx) -> Approx {
        let v = Complex::with_val(
            self.value.prec().0.max(other.value.prec().0),
            &self.value + &other.value,
        );
        let ulp = ulp_of(&v);
        Approx::new(v, self.err + other.err + ulp)
    }

    pub fn sub(&self, other: &Approx) -> Approx {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Approx) -> Approx {
        let v = Complex::with_val(
            self.value.prec().0.max(other.value.prec().0),
            &self.value * &other.value,
        );
        let (a, b) = (self.abs_f64(), other.abs_f64());
        let err = a * other.err + b * self.err + self.err * other.err + ulp_of(&v);
        Approx::new(v, err)
    }

    /// Multiply by an exactly-known complex factor.
    pub fn mul_exact(&self, factor: &Complex) -> Approx {
        let v = Complex::with_val(self.value.prec().0, &self.value * factor);
        let f = Float::with_val(64, factor.abs_ref()).to_f64();
        let e = self.err * f + ulp_of(&v);
        Approx::new(v, e)
    }

    pub fn div(&self, other: &Approx) -> Approx {
        let v = Complex::with_val(
            self.value.prec().0.max(other.value.prec().0),
            &self.value / &other.value,
        );
        let b = other.abs_f64();
        // first-order: |x/y| * (err_x/|x| + err_y/|y|); guard against err_y ~ |y|
        let denom_lo = (b - other.err).max(b * 0.5);
        let err = if denom_lo > 0.0 {
            (self.err + self.abs_f64() * other.err / denom_lo) / denom_lo + ulp_of(&v)
        } else {
            f64::INFINITY
        };
        Approx::new(v, err)
    }

    /// Fold an extra absolute error (e.g. a truncation tail) into the bound.
    pub fn widen(&self, extra: f64) -> Approx {
        Approx::new(self.value.clone(), self.err + extra)
    }

    pub fn re_f64(&self) -> f64 {
        self.value.real().to_f64()
    }

    pub fn im_f64(&self) -> f64 {
        self.value.imag().to_f64()
    }
}

/// One ulp at the magnitude of `v`, as an f64 error contribution.
pub fn ulp_of(v: &Complex) -> f64 {
    let bits = v.prec().0.min(1000);
    let mag = Float::with_val(64, v.abs_ref()).to_f64();
    if mag == 0.0 {
        0.0
    } else {
        mag * 2f64.powi(-(bits as i32) + 2)
    }
}

/// e^{2 pi i t} at working precision for a rational exponent t = num/den.
pub fn root_of_unity_value(prec: &Precision, num: i64, den: i64) -> Complex {
    let wb = prec.working();
    let two_pi = Float::with_val(wb, rug::float::Constant::Pi) * 2u32;
    let angle = two_pi * Float::with_val(wb, num) / Float::with_val(wb, den);
    let (s, c) = angle.sin_cos(Float::new(wb));
    Complex::with_val(wb, (c, s))
}

/// i^k exactly, as a small complex with entries in {-1, 0, 1}.
pub fn i_pow(prec: &Precision, k: u32) -> Complex {
    let wb = prec.working();
    match k % 4 {
        0 => Complex::with_val(wb, (1, 0)),
        1 => Complex::with_val(wb, (0, 1)),
        2 => Complex::with_val(wb, (-1, 0)),
        _ => Complex::with_val(wb, (0, -1)),
    }
}

pub fn pi_float(prec: &Precision) -> Float {
    Float::with_val(prec.working(), rug::float::Constant::Pi)
}

/// x^s for positive real x and complex s: exp(s ln x).
pub fn real_pow_complex(prec: &Precision, x: &Float, s: &Complex) -> Complex {
    debug_assert!(x.is_sign_positive() && !x.is_zero());
    let lnx = Float::with_val(prec.working(), x.ln_ref());
    let e = Complex::with_val(prec.working(), s * &lnx);
    e.exp()
}

/// n^s for a positive integer n.
pub fn int_pow_complex(prec: &Precision, n: u64, s: &Complex) -> Complex {
    let x = Float::with_val(prec.working(), n);
    real_pow_complex(prec, &x, s)
}

/// Factorial as a Float at working precision.
pub fn factorial_float(prec: &Precision, n: u32) -> Float {
    let mut f = Float::with_val(prec.working(), 1);
    for i in 2..=n {
        f *= i;
    }
    f
}

/// 2^k as a Float.
pub fn pow2_float(prec: &Precision, k: u32) -> Float {
    Float::with_val(prec.working(), 2).pow(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_of_unity_quarter() {
        let p = Precision::default();
        let v = root_of_unity_value(&p, 1, 4);
        assert!(v.real().to_f64().abs() < 1e-35);
        assert!((v.imag().to_f64() - 1.0).abs() < 1e-35);
    }

    #[test]
    fn approx_mul_err_is_upper_bound() {
        let p = Precision::default();
        let a = Approx::new(Complex::with_val(p.working(), (2.0, 0.0)), 1e-10);
        let b = Approx::new(Complex::with_val(p.working(), (3.0, 0.0)), 1e-12);
        let c = a.mul(&b);
        // worst case |(2±1e-10)(3±1e-12) - 6| <= 3e-10 + 2e-12 + tiny
        assert!(c.err >= 3e-10 + 2e-12);
        assert!(c.err < 4e-10);
    }

    #[test]
    fn i_pow_cycle() {
        let p = Precision::default();
        assert_eq!(i_pow(&p, 12).real().to_f64(), 1.0);
        assert_eq!(i_pow(&p, 10).real().to_f64(), -1.0);
        assert_eq!(i_pow(&p, 13).imag().to_f64(), 1.0);
    }
}
