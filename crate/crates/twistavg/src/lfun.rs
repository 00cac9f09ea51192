//! Completed twisted L-functions Lambda(s,h,chi) = (2пи)^{-s} Gamma(s) L(s,h,chi):
//! direct Dirichlet-series evaluation in the convergent half-plane, a
//! full-strip incomplete-gamma expansion, functional-equation residuals,
//! and the averaged spectral sum over an eigenbasis.

use crate::chars::{gcd_i, DirichletCharacter};
use crate::forms::{eigenforms, petersson_norm_sq, Eigenform};
use crate::prec::{i_pow, int_pow_complex, pi_float, Approx, Precision};
use crate::specfun::{cgamma, upper_incomplete_gamma, zeta_tail_bound};
use crate::{Error, Result};
use rug::{Complex, Float};

/// Inputs for a single L-value.
pub struct LParams<'a> {
    pub form: &'a Eigenform,
    pub chi: &'a DirichletCharacter,
    pub s: Complex,
}

impl<'a> LParams<'a> {
    pub fn new(form: &'a Eigenform, chi: &'a DirichletCharacter, s: Complex) -> Result<Self> {
        if form.weight <= 2 {
            return Err(Error::invalid("weight must exceed 2"));
        }
        if gcd_i(form.level as i64, chi.modulus) != 1 {
            return Err(Error::invalid("twist modulus must be prime to the level"));
        }
        Ok(LParams { form, chi, s })
    }
}

/// Partial sum of chi(m) a_m m^{-s} with a Deligne-bound tail, times
/// (2pi)^{-s} Gamma(s).  Only valid where the series converges with a
/// summable envelope: Re(s) >= k/2 + 1.
pub fn lambda_direct(prec: &Precision, p: &LParams, tol: f64) -> Result<Approx> {
    let wb = prec.working();
    let k = p.form.weight;
    let sigma = p.s.real().to_f64();
    let expo = sigma - k as f64 / 2.0;
    if expo < 1.0 + 1e-9 {
        return Err(Error::domain(
            "lambda_direct",
            "Re(s) below the convergence margin k/2 + 1; use lambda_strip",
        ));
    }

    let two_pi = Float::with_val(wb, pi_float(prec) * 2u32);
    let gam = cgamma(prec, &p.s)?;
    let front = {
        let lg = Complex::with_val(wb, two_pi.ln());
        let e = Complex::with_val(wb, &p.s * &lg);
        Complex::with_val(wb, (-e).exp())
    };
    let pref = gam.mul_exact(&front);
    let pref_mag = pref.abs_f64();

    // smallest cutoff with 2 * pref * sum_{m>M} m^{-expo} <= tol
    let needed = (2.0 * pref_mag / (tol * (expo - 1.0))).powf(1.0 / (expo - 1.0));
    let cutoff = (needed.ceil().max(8.0)) as usize;
    let avail = p.form.coeffs.len().saturating_sub(1);
    if cutoff > avail {
        return Err(Error::InsufficientPrec {
            what: "lambda_direct coefficient supply".into(),
            needed: cutoff,
        });
    }

    let mut sum = Approx::zero(prec);
    for m in 1..=cutoff {
        let chi_m = match p.chi.eval(m as i64) {
            Some(v) => v,
            None => continue,
        };
        let mpow = int_pow_complex(prec, m as u64, &Complex::with_val(wb, -&p.s));
        let c = Complex::with_val(wb, &p.form.coeffs[m] * &mpow);
        let term = Approx::new(c, p.form.coeff_err * (m as f64).powf(-expo + k as f64 / 2.0))
            .mul_exact(&chi_m.to_complex(prec));
        sum = sum.add(&term);
    }
    let tail = 2.0 * zeta_tail_bound(expo, cutoff as u64);
    Ok(pref.mul(&sum).widen(pref_mag * tail))
}

/// Incomplete-gamma expansion valid on the whole strip 0 < Re(s) < k,
/// level 1 only: split the Mellin integral of the twisted form at
/// y = 1/D and send the lower half through the reflection
/// Lambda(s,h,chi) = (i^k tau(chi)^2 / D^{2s-k+1}) Lambda(k-s,h,chibar).
pub fn lambda_strip(prec: &Precision, p: &LParams, tol: f64) -> Result<Approx> {
    let wb = prec.working();
    let k = p.form.weight;
    let d_mod = p.chi.modulus;
    if p.form.level != 1 {
        return Err(Error::domain("lambda_strip", "level must be 1"));
    }
    if !p.chi.is_primitive() {
        return Err(Error::domain("lambda_strip", "character must be primitive"));
    }
    let sigma = p.s.real().to_f64();
    if sigma <= 0.0 || sigma >= k as f64 {
        return Err(Error::domain("lambda_strip", "Re(s) must lie in (0, k)"));
    }

    let ks = {
        let kf = Complex::with_val(wb, k);
        Complex::with_val(wb, kf - &p.s)
    };
    let chibar = p.chi.conjugate();

    let direct = strip_sum(prec, p.form, p.chi, &p.s, tol / 2.0)?;
    let reflected = strip_sum(prec, p.form, &chibar, &ks, tol / 2.0)?;

    // i^k tau(chi)^2 / D^{2s-k+1}
    let tau = p.chi.gauss_sum(prec);
    let eps = {
        let e = {
            let two_s = Complex::with_val(wb, &p.s * 2u32);
            Complex::with_val(wb, two_s - (k as i64 - 1))
        };
        let df = Float::with_val(wb, d_mod);
        let lg = Complex::with_val(wb, df.ln());
        let dp = Complex::with_val(wb, (-Complex::with_val(wb, &e * &lg)).exp());
        tau.mul(&tau).mul_exact(&dp).mul_exact(&i_pow(prec, k))
    };
    Ok(direct.add(&eps.mul(&reflected)))
}

/// One side of the split: sum_m chi(m) a_m (2pi m)^{-z} Gamma(z, 2pi m / D).
fn strip_sum(
    prec: &Precision,
    form: &Eigenform,
    chi: &DirichletCharacter,
    z: &Complex,
    tol: f64,
) -> Result<Approx> {
    let wb = prec.working();
    let k = form.weight;
    let d_mod = chi.modulus as f64;
    let zr = z.real().to_f64();
    let step = 2.0 * std::f64::consts::PI / d_mod;
    // beyond here Gamma(z,x) <= 2 x^{zr-1} e^{-x} and the term envelope
    // C m^{k/2 - 1} e^{-2pi m / D} contracts by at least rho per step
    let safe_m = ((2.0 * (zr.abs() + 2.0) + z.imag().to_f64().abs()) / step).ceil() as usize + 4;
    let rho = (-step).exp() * (1.0 + 1.0 / safe_m as f64).powf((k as f64 / 2.0 - 1.0).max(0.0));

    let avail = form.coeffs.len().saturating_sub(1);
    let two_pi = Float::with_val(wb, pi_float(prec) * 2u32);
    let mut sum = Approx::zero(prec);
    let mut m = 1usize;
    let mut tail = f64::INFINITY;
    while m <= avail {
        let envelope = |mm: usize| -> f64 {
            let x = step * mm as f64;
            4.0 * (mm as f64).powf(k as f64 / 2.0)
                * (step * mm as f64).powf(zr - 1.0)
                * (-x).exp()
                * (2.0 * std::f64::consts::PI * mm as f64).powf(-zr)
        };
        if let Some(chi_m) = chi.eval(m as i64) {
            let x = Float::with_val(wb, &two_pi * m as u32) / chi.modulus as u32;
            let g = upper_incomplete_gamma(prec, z, &x)?;
            let pw = int_pow_complex(prec, 2 * m as u64, &Complex::with_val(wb, -z));
            // fold the pi^{-z} part of (2 pi m)^{-z}
            let pipow = {
                let lg = Complex::with_val(wb, pi_float(prec).ln());
                Complex::with_val(wb, (-Complex::with_val(wb, z * &lg)).exp())
            };
            let factor = Complex::with_val(wb, &pw * &pipow);
            let coeff = Approx::new(
                Complex::with_val(wb, &form.coeffs[m] * &factor),
                form.coeff_err * factor.abs().real().to_f64(),
            );
            sum = sum.add(&coeff.mul(&g).mul_exact(&chi_m.to_complex(prec)));
        }
        if m >= safe_m && rho < 1.0 {
            tail = envelope(m + 1) / (1.0 - rho);
            if tail <= tol {
                return Ok(sum.widen(tail));
            }
        }
        m += 1;
    }
    Err(Error::InsufficientPrec {
        what: format!("strip_sum coefficient supply (tail bound {tail:.3e})"),
        needed: avail + avail / 2 + 16,
    })
}

/// |Lambda(s,h,chi) - i^k D^{k-2s} (tau(chi)^2/D) Lambda(k-s,h,chibar)|,
/// both sides via the strip expansion, plus the propagated error budget.
pub fn fe_residual(prec: &Precision, p: &LParams) -> Result<(f64, f64)> {
    let wb = prec.working();
    let k = p.form.weight;
    let tol = prec.ulp().max(1e-40);
    let lhs = lambda_strip(prec, p, tol)?;
    let chibar = p.chi.conjugate();
    let ks = Complex::with_val(wb, Complex::with_val(wb, k) - &p.s);
    let rp = LParams {
        form: p.form,
        chi: &chibar,
        s: ks,
    };
    let rhs = lambda_strip(prec, &rp, tol)?;
    let tau = p.chi.gauss_sum(prec);
    let eps = {
        let e = {
            let two_s = Complex::with_val(wb, &p.s * 2u32);
            Complex::with_val(wb, two_s - (k as i64 - 1))
        };
        let df = Float::with_val(wb, p.chi.modulus);
        let lg = Complex::with_val(wb, df.ln());
        let dp = Complex::with_val(wb, (-Complex::with_val(wb, &e * &lg)).exp());
        tau.mul(&tau).mul_exact(&dp).mul_exact(&i_pow(prec, k))
    };
    let diff = lhs.sub(&eps.mul(&rhs));
    Ok((diff.abs_f64(), diff.err))
}

/// Averaged first moment over the eigenbasis of S_k(SL_2(Z)).
pub struct SpectralConfig {
    pub k: u32,
    pub level: u64,
    pub chi: DirichletCharacter,
    pub r: u64,
    pub n: u64,
    pub s: Complex,
}

impl SpectralConfig {
    pub fn new(k: u32, chi: DirichletCharacter, r: u64, n: u64, s: Complex) -> Result<Self> {
        if k <= 2 || k % 2 != 0 {
            return Err(Error::invalid("weight must be even and exceed 2"));
        }
        if r == 0 || n == 0 {
            return Err(Error::invalid("r and n must be positive"));
        }
        if gcd_i((r * n) as i64, chi.modulus) != 1 {
            return Err(Error::invalid("rn must be prime to the twist modulus"));
        }
        let sigma = s.real().to_f64();
        if sigma <= 1.0 || sigma >= k as f64 - 1.0 {
            return Err(Error::invalid("Re(s) must lie in (1, k-1)"));
        }
        Ok(SpectralConfig {
            k,
            level: 1,
            chi,
            r,
            n,
            s,
        })
    }

    /// Coefficient supply ample for the strip expansion at this precision.
    pub fn coeff_budget(&self, prec: &Precision) -> usize {
        let d = self.chi.modulus.max(1) as usize;
        let per = (0.12 * prec.working() as f64 + 40.0).ceil() as usize;
        (d * per).max(self.r.max(self.n) as usize + 2).max(64)
    }
}

/// sum_h lambda_n(h) conj(a_r(h)) Lambda(s,h,chi) / ||h||^2, over an
/// orthogonal eigenbasis normalized to a_1 = 1 (nu(1) = 1).
pub fn spectral_side(prec: &Precision, c: &SpectralConfig, tol: f64) -> Result<Approx> {
    let basis = eigenforms(prec, c.k, c.coeff_budget(prec))?;
    spectral_side_with(prec, c, &basis, tol)
}

/// Same, reusing a precomputed eigenbasis.
pub fn spectral_side_with(
    prec: &Precision,
    c: &SpectralConfig,
    basis: &[Eigenform],
    tol: f64,
) -> Result<Approx> {
    let mut total = Approx::zero(prec);
    if basis.is_empty() {
        return Ok(total);
    }
    let per_tol = tol / basis.len() as f64;
    for h in basis {
        let p = LParams::new(h, &c.chi, c.s.clone())?;
        let lam = lambda_strip(prec, &p, per_tol)?;
        let norm = petersson_norm_sq(prec, h, per_tol)?;
        let weight = {
            let wb = prec.working();
            let v = Complex::with_val(wb, h.lambda(c.n as usize) * h.lambda(c.r as usize));
            let e = 2.0 * h.coeff_err * (1.0 + v.clone().abs().real().to_f64());
            Approx::new(v, e)
        };
        total = total.add(&weight.mul(&lam).div(&norm));
    }
    Ok(total)
}
