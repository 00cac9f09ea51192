//! Extended-precision special functions: complex Gamma, Beta, the upper
//! incomplete Gamma, the regularized Kummer function, and real zeta.
//!
//! Everything returns an [`Approx`] whose `err` field folds in truncation
//! remainders alongside rounding, so callers can budget errors end to end.

use crate::prec::{real_pow_complex, ulp_of, Approx, Precision};
use crate::{Error, Result};
use once_cell::sync::Lazy;
use rug::ops::{CompleteRound, Pow};
use rug::{Complex, Float, Integer, Rational};
use std::sync::Mutex;

static BERNOULLI: Lazy<Mutex<Vec<Rational>>> =
    Lazy::new(|| Mutex::new(vec![Rational::from(1)]));

/// Bernoulli number B_n (B_1 = -1/2 convention), exact.
pub fn bernoulli(n: usize) -> Rational {
    let mut cache = BERNOULLI.lock().unwrap();
    while cache.len() <= n {
        let m = cache.len();
        // B_m = -1/(m+1) * sum_{j<m} C(m+1, j) B_j
        let mut acc = Rational::new();
        for (j, b) in cache.iter().enumerate() {
            let c = Integer::from(m as u32 + 1).binomial(j as u32);
            acc += Rational::from((c, Integer::from(1))) * b;
        }
        acc /= -Rational::from((m as u32 + 1, 1u32));
        cache.push(acc);
    }
    cache[n].clone()
}

fn is_nonpositive_integer(s: &Complex) -> bool {
    s.imag().is_zero() && s.real().is_integer() && !s.real().is_sign_positive()
        || (s.imag().is_zero() && s.real().is_zero())
}

/// Gamma(s) by Stirling's asymptotic series after shifting the argument
/// right until it is safely inside the region of rapid convergence.
pub fn cgamma(prec: &Precision, s: &Complex) -> Result<Approx> {
    if is_nonpositive_integer(s) {
        return Err(Error::domain(
            "cgamma",
            format!("pole at nonpositive integer s = {s}"),
        ));
    }
    let wb = prec.working();
    let re = s.real().to_f64();
    let im = s.imag().to_f64().abs();
    // keep |arg z| <= pi/4 and Re z large enough that the series bottoms
    // out below the target precision
    let threshold = (0.115 * wb as f64 + 12.0).max(im);
    let shifts = if re < threshold {
        (threshold - re).ceil() as u32
    } else {
        0
    };
    let z = Complex::with_val(wb, s + &Float::with_val(wb, shifts));

    // ln Gamma(z) = (z - 1/2) ln z - z + ln(2 pi)/2 + sum B_{2j}/(2j(2j-1) z^{2j-1})
    let ln_z = Complex::with_val(wb, z.ln_ref());
    let half = Float::with_val(wb, 0.5);
    let two_pi = Float::with_val(wb, rug::float::Constant::Pi) * 2u32;
    let zm = Complex::with_val(wb, &z - &half);
    let mut ln_gamma = Complex::with_val(wb, &zm * &ln_z);
    ln_gamma -= &z;
    ln_gamma += two_pi.ln() / 2u32;

    let z_inv_sq = Complex::with_val(wb, z.square_ref()).recip();
    let mut zpow = Complex::with_val(wb, z.recip_ref()); // z^{1-2j}, j=1
    let mut prev_mag = f64::INFINITY;
    let rem_rel;
    let mut j = 1usize;
    loop {
        let b = bernoulli(2 * j);
        let coeff =
            Rational::from((b.numer().clone(), b.denom() * Integer::from(2 * j * (2 * j - 1))));
        let term = Complex::with_val(wb, &zpow * &Float::with_val(wb, coeff));
        let mag = Float::with_val(64, term.abs_ref()).to_f64();
        if mag >= prev_mag {
            // divergent tail reached; remainder bounded by the last added term
            rem_rel = prev_mag * 1.1;
            break;
        }
        ln_gamma += &term;
        prev_mag = mag;
        // |arg z| <= pi/4 makes the next term an honest remainder bound up
        // to sec(pi/8)^{2j+2}
        let slack = 1.082f64.powi(2 * j as i32 + 2);
        if mag * slack < prec.ulp() * 0.25 {
            rem_rel = mag * slack;
            break;
        }
        zpow *= &z_inv_sq;
        j += 1;
        if j > 2000 {
            return Err(Error::InsufficientPrec {
                what: "cgamma Stirling series".into(),
                needed: wb as usize * 2,
            });
        }
    }

    let mut gamma = Complex::with_val(wb, ln_gamma.exp_ref());
    // undo the shift: Gamma(s) = Gamma(s + m) / (s (s+1) ... (s+m-1))
    for i in 0..shifts {
        gamma /= Complex::with_val(wb, s + &Float::with_val(wb, i));
    }
    let mag = Float::with_val(64, gamma.abs_ref()).to_f64();
    let rel = rem_rel + prec.ulp() * (shifts as f64 + j as f64 + 20.0);
    Ok(Approx::new(gamma, mag.abs() * rel))
}

/// Euler's Beta function B(x, y) = Gamma(x) Gamma(y) / Gamma(x + y).
pub fn beta(prec: &Precision, x: &Complex, y: &Complex) -> Result<Approx> {
    let sum = Complex::with_val(prec.working(), x + y);
    let gx = cgamma(prec, x)?;
    let gy = cgamma(prec, y)?;
    let gs = cgamma(prec, &sum)?;
    Ok(gx.mul(&gy).div(&gs))
}

/// Upper incomplete Gamma(s, x) for x > 0, complex s.
///
/// Small x: Gamma(s) minus the lower series; large x: continued fraction
/// (modified Lentz), which avoids the catastrophic subtraction.
pub fn upper_incomplete_gamma(prec: &Precision, s: &Complex, x: &Float) -> Result<Approx> {
    if !x.is_sign_positive() || x.is_zero() {
        return Err(Error::domain(
            "upper_incomplete_gamma",
            format!("x = {x} must be positive"),
        ));
    }
    let wb = prec.working();
    let x = Float::with_val(wb, x);
    let sigma = s.real().to_f64();
    let xf = x.to_f64();

    // common prefactor x^s e^{-x}
    let xs = real_pow_complex(prec, &x, s);
    let emx = Float::with_val(wb, (-x.clone()).exp());
    let pref = Complex::with_val(wb, &xs * &emx);

    if xf < sigma.max(0.0) + 1.0 {
        // gamma(s, x) = x^s e^{-x} sum_n x^n / (s (s+1) ... (s+n))
        if is_nonpositive_integer(s) {
            return Err(Error::domain(
                "upper_incomplete_gamma",
                "series route hits a Gamma pole".to_string(),
            ));
        }
        let mut denom = Complex::with_val(wb, s);
        let mut term = Complex::with_val(wb, denom.clone().recip());
        let mut sum = term.clone();
        let mut n = 0u32;
        loop {
            n += 1;
            denom = Complex::with_val(wb, s + &Float::with_val(wb, n));
            term = Complex::with_val(wb, &term * &x);
            term /= &denom;
            sum += &term;
            let tmag = Float::with_val(64, term.abs_ref()).to_f64();
            let smag = Float::with_val(64, sum.abs_ref()).to_f64().abs().max(1e-300);
            if tmag / smag < prec.ulp() * 0.25 || n > 100_000 {
                break;
            }
        }
        let lower = Complex::with_val(wb, &pref * &sum);
        let glob = cgamma(prec, s)?;
        let upper = Complex::with_val(wb, &glob.value - &lower);
        let lmag = Float::with_val(64, lower.abs_ref()).to_f64();
        let err = glob.err + (lmag.abs() + glob.abs_f64()) * prec.ulp() * (n as f64 + 20.0);
        Ok(Approx::new(upper, err))
    } else {
        // Gamma(s, x) = x^s e^{-x} / (x + 1 - s - 1(1-s)/(x + 3 - s - ...))
        let tiny = Float::with_val(wb, 1e-300);
        let xp1 = Float::with_val(wb, &x + 1u32);
        let mut b = Complex::with_val(wb, -s.clone() + &xp1);
        let mut c = Complex::with_val(wb, 1e300);
        let mut d = Complex::with_val(wb, b.clone().recip());
        let mut h = d.clone();
        let mut iters = 0u32;
        loop {
            iters += 1;
            let i = iters as f64;
            let mut an = Complex::with_val(wb, s - &Float::with_val(wb, i));
            an *= Float::with_val(wb, i);
            b += 2u32;
            d = Complex::with_val(wb, &an * &d + &b);
            if Float::with_val(64, d.abs_ref()).to_f64() < 1e-290 {
                d = Complex::with_val(wb, (&tiny, &tiny));
            }
            c = Complex::with_val(wb, &b + Complex::with_val(wb, &an / &c));
            if Float::with_val(64, c.abs_ref()).to_f64() < 1e-290 {
                c = Complex::with_val(wb, (&tiny, &tiny));
            }
            d = d.recip();
            let del = Complex::with_val(wb, &d * &c);
            h *= &del;
            let dev = Float::with_val(
                64,
                Complex::with_val(wb, &del - &Float::with_val(wb, 1)).abs_ref(),
            )
            .to_f64();
            if dev < prec.ulp() * 0.25 {
                break;
            }
            if iters > 100_000 {
                return Err(Error::InsufficientPrec {
                    what: "incomplete gamma continued fraction".into(),
                    needed: wb as usize * 2,
                });
            }
        }
        let val = Complex::with_val(wb, &pref * &h);
        let mag = Float::with_val(64, val.abs_ref()).to_f64();
        Ok(Approx::new(val, mag.abs() * prec.ulp() * (iters as f64 + 20.0)))
    }
}

/// Kummer-series route for the regularized confluent function:
/// B(s, k-s) * sum_j (s)_j / (k)_j * w^j / j!.
///
/// This is the hot path. Working precision is raised with |w| because the
/// series cancels down from terms of size ~e^{|w|}.
pub fn one_f_one_series(prec: &Precision, s: &Complex, k: u32, w: &Complex) -> Result<Approx> {
    let f = kummer_f1(prec, s, k, w)?;
    let wb = prec.working();
    let b = beta(
        prec,
        &Complex::with_val(wb, s),
        &Complex::with_val(wb, (k as i64) - s),
    )?;
    Ok(b.mul(&f))
}

/// The bare 1F1(s;k;w) sum, without the Beta prefactor; split out so bulk
/// callers can hoist Beta(s,k-s) from their inner loops.
pub(crate) fn kummer_f1(prec: &Precision, s: &Complex, k: u32, w: &Complex) -> Result<Approx> {
    check_kummer_domain(s, k)?;
    let wmag = Float::with_val(64, w.abs_ref()).to_f64();
    let boost = (1.5 * wmag).ceil() as u32 + 16;
    let hp = Precision::new(prec.bits + boost);
    let wb = hp.working();
    let s = Complex::with_val(wb, s);
    let w = Complex::with_val(wb, w);

    let mut term = Complex::with_val(wb, 1);
    let mut sum = term.clone();
    let mut max_mag = 1f64;
    let mut j = 0u64;
    let tail;
    loop {
        // term_{j+1} = term_j * (s + j) w / ((k + j)(j + 1))
        let num = Complex::with_val(wb, &s + &Float::with_val(wb, j));
        term = Complex::with_val(wb, &term * &num);
        term *= &w;
        term /= Float::with_val(wb, (k as u64 + j) * (j + 1));
        j += 1;
        sum += &term;
        let tmag = Float::with_val(64, term.abs_ref()).to_f64();
        max_mag = max_mag.max(tmag);
        // ratio bound for the next terms, valid once it is below 1/2
        let ratio = (wmag * (1.0 + s.real().to_f64().abs() / (k as f64 + j as f64)))
            / (j as f64 + 1.0);
        if ratio < 0.5 && tmag < max_mag * hp.ulp() * 0.25 {
            tail = tmag * ratio / (1.0 - ratio);
            break;
        }
        if j > 5_000_000 {
            return Err(Error::InsufficientPrec {
                what: "one_f_one Kummer series".into(),
                needed: wb as usize * 2,
            });
        }
    }
    let series_err = tail + max_mag * hp.ulp() * (j as f64 + 10.0);
    // settle back to the caller's working precision
    let v = Complex::with_val(prec.working(), &sum);
    let e = series_err + ulp_of(&v);
    Ok(Approx::new(v, e))
}

fn check_kummer_domain(s: &Complex, k: u32) -> Result<()> {
    let sigma = s.real().to_f64();
    if !(sigma > 0.0 && sigma < k as f64) {
        return Err(Error::domain(
            "one_f_one",
            format!("need 0 < Re(s) < k, got Re(s) = {sigma}, k = {k}"),
        ));
    }
    Ok(())
}

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton
/// iteration at working precision.
pub(crate) fn gauss_legendre(wb: u32, n: usize) -> Vec<(Float, Float)> {
    let pi = std::f64::consts::PI;
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = Float::with_val(wb, (pi * (i as f64 - 0.25) / (n as f64 + 0.5)).cos());
        let mut dp = Float::new(wb);
        for _ in 0..60 {
            // Legendre recurrence for P_n(x) and P_n'(x)
            let mut p0 = Float::with_val(wb, 1);
            let mut p1 = x.clone();
            for m in 2..=n {
                let p2 = (Float::with_val(wb, 2 * m as u32 - 1) * &x * &p1
                    - Float::with_val(wb, m as u32 - 1) * &p0)
                    / Float::with_val(wb, m as u32);
                p0 = p1;
                p1 = p2;
            }
            dp = Float::with_val(wb, n as u32) * (Float::with_val(wb, &x * &p1) - &p0)
                / (Float::with_val(wb, x.clone().square()) - 1u32);
            let step = Float::with_val(wb, &p1 / &dp);
            let small = step.clone().abs().to_f64() < 2f64.powi(-(wb as i32) + 4);
            x -= step;
            if small {
                break;
            }
        }
        let w = Float::with_val(wb, 2)
            / ((Float::with_val(wb, 1) - x.clone().square()) * dp.clone().square());
        out.push((x, w));
    }
    out
}

/// Integral route: composite Gauss-Legendre quadrature of
/// int_0^1 e^{wx} x^{s-1} (1-x)^{k-s-1} dx with geometric grading at both
/// endpoints. Used as an independent cross-check of the series.
pub fn one_f_one_quadrature(prec: &Precision, s: &Complex, k: u32, w: &Complex) -> Result<Approx> {
    check_kummer_domain(s, k)?;
    let wmag = Float::with_val(64, w.abs_ref()).to_f64();
    let base_panels = ((wmag / 2.0).ceil() as usize).max(4);
    let v1 = quad_once(prec, s, k, w, base_panels, 28);
    let v2 = quad_once(prec, s, k, w, base_panels * 2, 32);
    let diff = Float::with_val(64, Complex::with_val(prec.working(), &v1 - &v2).abs_ref())
        .to_f64();
    let mag = Float::with_val(64, v2.abs_ref()).to_f64();
    Ok(Approx::new(v2, 4.0 * diff + mag.abs() * prec.ulp() * 1e3))
}

fn quad_once(prec: &Precision, s: &Complex, k: u32, w: &Complex, panels: usize, nodes: usize) -> Complex {
    let wb = prec.working() + 32;
    let s = Complex::with_val(wb, s);
    let w = Complex::with_val(wb, w);
    let sm1 = Complex::with_val(wb, &s - &Float::with_val(wb, 1));
    let ksm1 = Complex::with_val(wb, Float::with_val(wb, k as i32 - 1) - &s);
    let gl = gauss_legendre(wb, nodes);

    // panel boundaries: geometric toward 0 and 1, uniform in the middle
    let grade = 34usize;
    let mut cuts: Vec<Float> = vec![Float::new(wb)];
    for g in (0..grade).rev() {
        let lo = Float::with_val(wb, 0.5) / Float::with_val(wb, Integer::from(1) << (g as u32));
        cuts.push(lo);
    }
    // mirror the graded cuts into (1/2, 1]
    let upper: Vec<Float> = cuts
        .iter()
        .rev()
        .map(|c| Float::with_val(wb, 1) - c)
        .collect();
    cuts.extend(upper.into_iter().skip(1));
    // subdivide every interval further so the oscillation e^{wx} is resolved
    let mut fine: Vec<Float> = Vec::new();
    for pair in cuts.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let len = Float::with_val(64, b - a).to_f64();
        let sub = ((len * wmag_of(&w) / 3.0).ceil() as usize).clamp(1, panels.max(1));
        for i in 0..sub {
            fine.push(
                Float::with_val(wb, a + (b - a).complete(wb) * Float::with_val(wb, i as u32)
                    / Float::with_val(wb, sub as u32)),
            );
        }
    }
    fine.push(Float::with_val(wb, 1));

    let mut total = Complex::new(wb);
    for pair in fine.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let half = Float::with_val(wb, (b - a).complete(wb) / 2u32);
        let midp = Float::with_val(wb, (a + b).complete(wb) / 2u32);
        let mut acc = Complex::new(wb);
        for (xi, wi) in &gl {
            let x = Float::with_val(wb, &midp + Float::with_val(wb, &half * xi));
            if x.is_zero() || x == 1u32 {
                continue;
            }
            let one_minus = Float::with_val(wb, 1u32 - &x);
            let f = Complex::with_val(
                wb,
                Complex::with_val(wb, &w * &x).exp()
                    * real_pow_complex_wb(wb, &x, &sm1)
                    * real_pow_complex_wb(wb, &one_minus, &ksm1),
            );
            acc += Complex::with_val(wb, f * wi);
        }
        total += Complex::with_val(wb, acc * &half);
    }
    Complex::with_val(prec.working(), total)
}

fn wmag_of(w: &Complex) -> f64 {
    Float::with_val(64, w.abs_ref()).to_f64()
}

fn real_pow_complex_wb(wb: u32, x: &Float, s: &Complex) -> Complex {
    let lnx = Float::with_val(wb, x.ln_ref());
    Complex::with_val(wb, s * &lnx).exp()
}

/// The regularized Kummer function, cross-checked two independent ways
/// (power series; Gauss-Legendre quadrature of the integral form). The
/// returned value is the series result.
pub fn one_f_one(prec: &Precision, s: &Complex, k: u32, w: &Complex) -> Result<Approx> {
    let series = one_f_one_series(prec, s, k, w)?;
    let quad = one_f_one_quadrature(prec, s, k, w)?;
    let diff = series.sub(&quad);
    let budget = (series.err + quad.err).max(1e-300) * 3.0 + series.abs_f64() * 1e-14;
    if diff.abs_f64() > budget {
        return Err(Error::ToleranceUnachievable {
            what: "one_f_one series/quadrature cross-check".into(),
            tol: budget,
            best: diff.abs_f64(),
        });
    }
    Ok(series)
}

/// Riemann zeta on the real axis, sigma > 1, by Euler-Maclaurin with an
/// explicit remainder folded into err.
pub fn zeta_real(prec: &Precision, sigma: f64) -> Result<Approx> {
    if !(sigma > 1.0) {
        return Err(Error::domain("zeta_real", format!("need sigma > 1, got {sigma}")));
    }
    let wb = prec.working();
    let s = Float::with_val(wb, sigma);
    let n = ((0.12 * wb as f64).ceil() as u32 + 12).max(16);

    let mut sum = Float::new(wb);
    for m in 1..n {
        sum += Float::with_val(wb, m).pow(-s.clone());
    }
    let nf = Float::with_val(wb, n);
    let n_pow = Float::with_val(wb, nf.clone().pow(-s.clone()));
    // integral tail + half correction
    sum += Float::with_val(wb, &n_pow * &nf) / Float::with_val(wb, &s - &Float::with_val(wb, 1));
    sum += Float::with_val(wb, &n_pow / &Float::with_val(wb, 2));

    // sum_j B_{2j}/(2j)! * (s)(s+1)...(s+2j-2) * N^{-s-2j+1}
    let mut rising = s.clone(); // (s)_{2j-1} built incrementally
    let mut npow = Float::with_val(wb, &n_pow / &nf); // N^{-s-2j+1} at j=1
    npow *= &nf;
    npow *= &nf; // now N^{-s+1}; divide by N^2 each j
    let mut fact = Float::with_val(wb, 1); // (2j)!
    let rem;
    let mut j = 0usize;
    loop {
        j += 1;
        fact *= Float::with_val(wb, (2 * j - 1) as u32 * 2 * j as u32);
        npow /= Float::with_val(wb, nf.clone().square());
        let b = Float::with_val(wb, bernoulli(2 * j));
        let term = Float::with_val(wb, &b / &fact) * &rising * &npow;
        let tmag = term.clone().abs().to_f64();
        // remainder of the Euler-Maclaurin series is bounded by the first
        // omitted term for real s > 0
        if tmag < prec.ulp() * 0.25 || j > 500 {
            rem = tmag;
            break;
        }
        sum += &term;
        rising *= Float::with_val(wb, &s + &Float::with_val(wb, (2 * j - 1) as u32));
        rising *= Float::with_val(wb, &s + &Float::with_val(wb, (2 * j) as u32));
    }
    let val = Complex::with_val(wb, (&sum, &Float::new(wb)));
    let mag = sum.to_f64();
    Ok(Approx::new(val, rem + mag * prec.ulp() * (n as f64 + j as f64 + 10.0)))
}

/// Tail bound for sum_{m > M} m^{-sigma}: M^{1-sigma}/(sigma-1).
pub fn zeta_tail_bound(sigma: f64, cutoff: u64) -> f64 {
    debug_assert!(sigma > 1.0 && cutoff >= 1);
    (cutoff as f64).powf(1.0 - sigma) / (sigma - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(prec: &Precision, re: f64, im: f64) -> Complex {
        Complex::with_val(prec.working(), (re, im))
    }

    #[test]
    fn bernoulli_values() {
        assert_eq!(bernoulli(2), Rational::from((1, 6)));
        assert_eq!(bernoulli(4), Rational::from((-1, 30)));
        assert_eq!(bernoulli(12), Rational::from((-691, 2730)));
        assert_eq!(bernoulli(3), Rational::new());
    }

    #[test]
    fn gamma_at_integers() {
        let p = Precision::default();
        let g1 = cgamma(&p, &c(&p, 1.0, 0.0)).unwrap();
        assert!((g1.re_f64() - 1.0).abs() < 1e-30);
        let g9 = cgamma(&p, &c(&p, 9.0, 0.0)).unwrap();
        assert!((g9.re_f64() - 40320.0).abs() < 1e-25);
        assert!(g9.err < 1e-25);
    }

    #[test]
    fn gamma_rejects_poles() {
        let p = Precision::default();
        assert!(cgamma(&p, &c(&p, 0.0, 0.0)).is_err());
        assert!(cgamma(&p, &c(&p, -3.0, 0.0)).is_err());
        assert!(cgamma(&p, &c(&p, -3.0, 0.1)).is_ok());
    }

    #[test]
    fn gamma_reflection_duplication_cross_check() {
        // at s = 0.5 + 3i: reflection Gamma(s)Gamma(1-s) = pi / sin(pi s)
        // and duplication Gamma(s)Gamma(s+1/2) = 2^{1-2s} sqrt(pi) Gamma(2s)
        let p = Precision::new(192);
        let wb = p.working();
        let s = c(&p, 0.5, 3.0);
        let g = cgamma(&p, &s).unwrap();

        let one_minus = Complex::with_val(wb, 1u32 - &s);
        let refl = g.mul(&cgamma(&p, &one_minus).unwrap());
        let pi = Float::with_val(wb, rug::float::Constant::Pi);
        let target = Complex::with_val(wb, Complex::with_val(wb, &s * &pi).sin());
        let target = Complex::with_val(wb, &pi / &target);
        let d = Float::with_val(64, Complex::with_val(wb, &refl.value - &target).abs_ref());
        assert!(d.to_f64() < 1e-40, "reflection residual {}", d.to_f64());

        let half_up = Complex::with_val(wb, &s + &Float::with_val(wb, 0.5));
        let dup_lhs = g.mul(&cgamma(&p, &half_up).unwrap());
        let two_s = Complex::with_val(wb, 2u32 * &s);
        let expo = Complex::with_val(wb, -two_s.clone() + &Float::with_val(wb, 1));
        let pow = Complex::with_val(wb, &expo * &Float::with_val(wb, 2).ln()).exp();
        let dup_rhs = Complex::with_val(
            wb,
            pow * pi.clone().sqrt() * &cgamma(&p, &two_s).unwrap().value,
        );
        let d2 = Float::with_val(64, Complex::with_val(wb, &dup_lhs.value - &dup_rhs).abs_ref());
        assert!(d2.to_f64() < 1e-40, "duplication residual {}", d2.to_f64());
    }

    #[test]
    fn gamma_recurrence_random_strip() {
        let p = Precision::default();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let re = rnd() * 30.0 - 10.0;
            let im = rnd() * 40.0 - 20.0;
            let s = c(&p, re, im);
            if is_nonpositive_integer(&s) {
                continue;
            }
            let g = cgamma(&p, &s).unwrap();
            let s1 = Complex::with_val(p.working(), &s + &Float::with_val(p.working(), 1));
            let g1 = cgamma(&p, &s1).unwrap();
            let lhs = g1;
            let rhs = g.mul_exact(&s);
            let diff = lhs.sub(&rhs);
            assert!(
                diff.abs_f64() <= (lhs.err + rhs.err).max(lhs.abs_f64() * 1e-30),
                "recurrence fails at {re}+{im}i: diff {} errs {} {}",
                diff.abs_f64(),
                lhs.err,
                rhs.err
            );
        }
    }

    #[test]
    fn beta_values() {
        let p = Precision::default();
        let b11 = beta(&p, &c(&p, 1.0, 0.0), &c(&p, 1.0, 0.0)).unwrap();
        assert!((b11.re_f64() - 1.0).abs() < 1e-30);
        let b93 = beta(&p, &c(&p, 9.0, 0.0), &c(&p, 3.0, 0.0)).unwrap();
        assert!((b93.re_f64() - 1.0 / 495.0).abs() < 1e-32);
        let bxy = beta(&p, &c(&p, 2.5, 0.0), &c(&p, 7.5, 0.0)).unwrap();
        let byx = beta(&p, &c(&p, 7.5, 0.0), &c(&p, 2.5, 0.0)).unwrap();
        assert!(bxy.sub(&byx).abs_f64() < 1e-35);
    }

    #[test]
    fn incomplete_gamma_closed_form_s1() {
        let p = Precision::default();
        for x in [0.3f64, 1.0, 2.5, 7.0, 25.0] {
            let xf = Float::with_val(p.working(), x);
            let g = upper_incomplete_gamma(&p, &c(&p, 1.0, 0.0), &xf).unwrap();
            let expect = (-x).exp();
            assert!((g.re_f64() - expect).abs() < 1e-25, "x={x}");
        }
    }

    #[test]
    fn incomplete_gamma_recurrence() {
        let p = Precision::default();
        let s = c(&p, 3.5, 1.0);
        let x = Float::with_val(p.working(), 2.0);
        let g = upper_incomplete_gamma(&p, &s, &x).unwrap();
        let s1 = Complex::with_val(p.working(), &s + &Float::with_val(p.working(), 1));
        let g1 = upper_incomplete_gamma(&p, &s1, &x).unwrap();
        // Gamma(s+1, x) = s Gamma(s, x) + x^s e^{-x}
        let xs = real_pow_complex(&p, &x, &s);
        let emx = Float::with_val(p.working(), (-x.clone()).exp());
        let boundary = Approx::exact(Complex::with_val(p.working(), &xs * &emx));
        let rhs = g.mul_exact(&s).add(&boundary);
        let diff = g1.sub(&rhs);
        assert!(
            diff.abs_f64() <= (g1.err + rhs.err).max(1e-30),
            "residual {} > {}",
            diff.abs_f64(),
            g1.err + rhs.err
        );
    }

    #[test]
    fn incomplete_gamma_vs_quadrature() {
        // Gamma(6, 12.57) against direct quadrature of the defining
        // integral, truncated where the integrand is negligible
        let p = Precision::default();
        let wb = p.working();
        let s = c(&p, 6.0, 0.0);
        let x = Float::with_val(wb, 12.57);
        let g = upper_incomplete_gamma(&p, &s, &x).unwrap();

        let gl = gauss_legendre(wb, 40);
        let mut total = Float::new(wb);
        let sm1 = Float::with_val(wb, 5);
        let mut a = Float::with_val(wb, 12.57);
        let step = Float::with_val(wb, 2);
        for _ in 0..60 {
            let b = Float::with_val(wb, &a + &step);
            let half = Float::with_val(wb, &step / &Float::with_val(wb, 2));
            let mid = Float::with_val(wb, &a + &half);
            for (xi, wi) in &gl {
                let t = Float::with_val(wb, &mid + Float::with_val(wb, &half * xi));
                let f = Float::with_val(wb, t.clone().pow(sm1.clone()))
                    * Float::with_val(wb, (-t).exp());
                total += Float::with_val(wb, f * wi) * &half;
            }
            a = b;
        }
        let diff = (total.to_f64() - g.re_f64()).abs();
        assert!(diff < 1e-20, "diff {diff}");
    }

    #[test]
    fn one_f_one_at_zero_is_beta() {
        let p = Precision::default();
        for (sv, k) in [(2.0, 12u32), (6.0, 12), (10.0, 16)] {
            let s = c(&p, sv, 0.0);
            let f = one_f_one_series(&p, &s, k, &c(&p, 0.0, 0.0)).unwrap();
            let b = beta(&p, &s, &c(&p, k as f64 - sv, 0.0)).unwrap();
            assert!(f.sub(&b).abs_f64() < 1e-35, "s={sv} k={k}");
        }
    }

    #[test]
    fn one_f_one_dual_route_spec_point() {
        let p = Precision::default();
        let s = c(&p, 9.0, 0.0);
        let w = c(&p, 0.0, -std::f64::consts::PI); // -2 pi i * 0.5
        let ser = one_f_one_series(&p, &s, 12, &w).unwrap();
        let quad = one_f_one_quadrature(&p, &s, 12, &w).unwrap();
        let rel = ser.sub(&quad).abs_f64() / ser.abs_f64();
        assert!(rel < 1e-10, "relative gap {rel}");
        assert!(one_f_one(&p, &s, 12, &w).is_ok());
    }

    #[test]
    fn one_f_one_dual_route_grid() {
        let p = Precision::default();
        for k in [12u32, 16, 20] {
            for sv in [2.0, k as f64 / 2.0, k as f64 - 2.0] {
                for wmag in [1.0f64, 10.0, 50.0] {
                    let s = c(&p, sv, 0.0);
                    let w = c(&p, 0.0, -wmag);
                    let a = one_f_one_series(&p, &s, k, &w).unwrap();
                    let b = one_f_one_quadrature(&p, &s, k, &w).unwrap();
                    let rel = a.sub(&b).abs_f64() / a.abs_f64();
                    assert!(rel < 1e-10, "k={k} s={sv} |w|={wmag} rel={rel}");
                }
            }
        }
    }

    #[test]
    fn one_f_one_bound_b1() {
        // |1f1(sigma + i tau, k, 2 pi i w)| <= B(sigma, k - sigma)
        let p = Precision::default();
        let k = 12u32;
        let sigma = 6.0;
        let bnd = beta(&p, &c(&p, sigma, 0.0), &c(&p, k as f64 - sigma, 0.0))
            .unwrap()
            .re_f64();
        for tau in [0.0f64, 1.5, -3.0] {
            for wv in [-8.0f64, -2.0, -0.5, 0.0, 0.5, 3.0, 9.0] {
                let s = c(&p, sigma, tau);
                let w = c(&p, 0.0, 2.0 * std::f64::consts::PI * wv);
                let f = one_f_one_series(&p, &s, k, &w).unwrap();
                assert!(
                    f.abs_f64() <= bnd * (1.0 + 1e-12),
                    "tau={tau} w={wv}: {} > {bnd}",
                    f.abs_f64()
                );
            }
        }
    }

    #[test]
    fn one_f_one_rejects_bad_domain() {
        let p = Precision::default();
        assert!(one_f_one_series(&p, &c(&p, 0.0, 1.0), 12, &c(&p, 1.0, 0.0)).is_err());
        assert!(one_f_one_series(&p, &c(&p, 12.0, 0.0), 12, &c(&p, 1.0, 0.0)).is_err());
    }

    #[test]
    fn zeta_values() {
        let p = Precision::default();
        let z2 = zeta_real(&p, 2.0).unwrap();
        let pi = std::f64::consts::PI;
        assert!((z2.re_f64() - pi * pi / 6.0).abs() < 1e-14);
        // against a high-precision reference for pi^2/6 instead of f64:
        let wb = p.working();
        let pi_hp = Float::with_val(wb, rug::float::Constant::Pi);
        let target = Float::with_val(wb, pi_hp.square_ref()) / 6u32;
        let d = (Float::with_val(wb, z2.value.real()) - target).abs().to_f64();
        assert!(d < 1e-35, "zeta(2) residual {d}");

        let z15 = zeta_real(&p, 1.5).unwrap();
        assert!(z15.re_f64() > 1.0 && z15.re_f64().is_finite());
        assert!(zeta_real(&p, 1.0).is_err());
        assert!(zeta_real(&p, 0.5).is_err());
    }

    #[test]
    fn zeta_9_vs_partial_sum() {
        let p = Precision::default();
        let z9 = zeta_real(&p, 9.0).unwrap();
        // brute-force partial sum with integral tail, f64 is plenty here
        let mut s = 0.0f64;
        for n in 1..=200_000u64 {
            s += (n as f64).powi(-9);
        }
        let tail = (200_000f64).powi(-8) / 8.0;
        assert!((z9.re_f64() - s).abs() < tail + 1e-15);
    }

    #[test]
    fn zeta_tail_bound_is_bound() {
        for sigma in [1.5f64, 3.0, 9.0] {
            for m in [10u64, 100, 1000] {
                let mut tail = 0.0;
                for n in (m + 1)..(m + 200_000) {
                    tail += (n as f64).powf(-sigma);
                }
                assert!(zeta_tail_bound(sigma, m) >= tail, "sigma={sigma} m={m}");
            }
        }
    }

    #[test]
    fn err_fields_shrink_with_precision() {
        // halving series_tol / raising bits never moves the value outside
        // the previous interval
        let lo = Precision::new(128);
        let hi = Precision::new(256);
        let s = c(&lo, 7.3, 2.0);
        let a = cgamma(&lo, &s).unwrap();
        let b = cgamma(&hi, &Complex::with_val(hi.working(), &s)).unwrap();
        assert!(a.sub(&b).abs_f64() <= a.err + b.err);
        let za = zeta_real(&lo, 3.3).unwrap();
        let zb = zeta_real(&hi, 3.3).unwrap();
        assert!(za.sub(&zb).abs_f64() <= za.err + zb.err);
    }
}
