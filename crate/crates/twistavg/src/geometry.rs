//! Geometric side of the average: identity and Weyl terms, their local
//! orbital factors, and the hypergeometric error series E with explicit
//! truncation tails and the closed-form envelope bound.

use crate::chars::{factor, gcd_i, inv_mod, valuation_i, DirichletCharacter};
use crate::prec::{
    factorial_float, i_pow, int_pow_complex, pi_float, real_pow_complex, Approx, Precision,
};
use crate::specfun::{beta, cgamma, kummer_f1, zeta_real, zeta_tail_bound};
use crate::{Error, Result};
use rayon::prelude::*;
use rug::{Complex, Float};
use std::collections::HashMap;

/// Inputs shared by every geometric-side quantity.
#[derive(Debug, Clone)]
pub struct GeomConfig {
    pub k: u32,
    pub level: u64,
    /// nebentypus mod level
    pub psi: DirichletCharacter,
    /// primitive twist character mod D
    pub chi: DirichletCharacter,
    pub r: u64,
    pub n: u64,
    pub s: Complex,
}

impl GeomConfig {
    pub fn new(
        k: u32,
        level: u64,
        psi: DirichletCharacter,
        chi: DirichletCharacter,
        r: u64,
        n: u64,
        s: Complex,
    ) -> Result<Self> {
        if k <= 2 {
            return Err(Error::invalid("weight must exceed 2"));
        }
        if level == 0 || r == 0 || n == 0 {
            return Err(Error::invalid("level, r, n must be positive"));
        }
        let d_mod = chi.modulus;
        if !chi.is_primitive() {
            return Err(Error::invalid("twist character must be primitive"));
        }
        if gcd_i((r * n) as i64, d_mod) != 1 {
            return Err(Error::invalid("rn must be prime to the twist modulus"));
        }
        if gcd_i(n as i64, level) != 1 {
            return Err(Error::invalid("n must be prime to the level"));
        }
        if gcd_i(d_mod as i64, level) != 1 {
            return Err(Error::invalid("twist modulus must be prime to the level"));
        }
        if psi.modulus != 1 && psi.modulus != level {
            return Err(Error::invalid("nebentypus modulus must match the level"));
        }
        let parity = psi.eval(-1).and_then(|v| v.as_sign()).unwrap_or(0);
        let want = if k % 2 == 0 { 1 } else { -1 };
        if parity != want {
            return Err(Error::invalid("nebentypus parity must equal (-1)^k"));
        }
        Ok(GeomConfig {
            k,
            level,
            psi,
            chi,
            r,
            n,
            s,
        })
    }

    fn sigma(&self) -> f64 {
        self.s.real().to_f64()
    }

    fn tau(&self) -> f64 {
        self.s.imag().to_f64()
    }

    /// [SL_2(Z) : Gamma_0(N)] = N prod_{p|N} (1 + 1/p)
    pub fn nu(&self) -> u64 {
        let mut v = self.level;
        for &(p, _) in &factor(self.level).factors {
            v = v / p * (p + 1);
        }
        v
    }
}

fn divisors_of_gcd(r: u64, n: u64) -> Vec<u64> {
    let g = gcd_i(r as i64, n);
    factor(g).divisors()
}

/// 2^{k-1} (2 pi r n)^{k-s-1} / (k-2)! * Gamma(s)
///   * sum_{d | (n,r)} d^{2s-k+1} psi(n/d) chi(rn/d^2)
pub fn identity_term(prec: &Precision, c: &GeomConfig) -> Result<Approx> {
    let sigma = c.sigma();
    if sigma <= 0.0 || sigma >= c.k as f64 - 1.0 {
        return Err(Error::domain("identity_term", "need 0 < Re(s) < k-1"));
    }
    let wb = prec.working();
    let k = c.k;
    let gam = cgamma(prec, &c.s)?;
    let front = {
        let two_pi_rn = Float::with_val(wb, pi_float(prec) * 2u32) * (c.r * c.n) as u64;
        let e = Complex::with_val(wb, Complex::with_val(wb, (k as i64) - 1) - &c.s);
        let base = real_pow_complex(prec, &two_pi_rn, &e);
        let scale = crate::prec::pow2_float(prec, k - 1) / factorial_float(prec, k - 2);
        Complex::with_val(wb, base * scale)
    };
    let mut dsum = Complex::new(wb);
    for d in divisors_of_gcd(c.r, c.n) {
        let psi_v = match c.psi.eval((c.n / d) as i64) {
            Some(v) => v,
            None => continue,
        };
        let chi_v = match c.chi.eval((c.r * c.n / (d * d)) as i64) {
            Some(v) => v,
            None => continue,
        };
        let e = Complex::with_val(wb, Complex::with_val(wb, &c.s * 2u32) - (k as i64 - 1));
        let dp = real_pow_complex(prec, &Float::with_val(wb, d), &e);
        let root = psi_v.mul(chi_v).to_complex(prec);
        dsum += Complex::with_val(wb, dp * root);
    }
    Ok(gam.mul_exact(&front).mul_exact(&dsum))
}

/// delta_{N,1} * 2^{k-1} (2 pi r n)^{s-1} / (k-2)! * Gamma(k-s)
///   * (i^k / D^{2s-k}) (tau(chi)^2 / D)
///   * sum_{d | (r,n)} d^{k-2s+1} conj(chi(rn/d^2))
pub fn weyl_term(prec: &Precision, c: &GeomConfig) -> Result<Approx> {
    let sigma = c.sigma();
    if sigma <= 1.0 || sigma >= c.k as f64 {
        return Err(Error::domain("weyl_term", "need 1 < Re(s) < k"));
    }
    if c.level != 1 {
        return Ok(Approx::zero(prec));
    }
    let wb = prec.working();
    let k = c.k;
    let d_mod = c.chi.modulus;
    let ks = Complex::with_val(wb, Complex::with_val(wb, k) - &c.s);
    let gam = cgamma(prec, &ks)?;
    let front = {
        let two_pi_rn = Float::with_val(wb, pi_float(prec) * 2u32) * (c.r * c.n) as u64;
        let e = Complex::with_val(wb, &c.s - 1u32);
        let base = real_pow_complex(prec, &two_pi_rn, &e);
        let scale = crate::prec::pow2_float(prec, k - 1) / factorial_float(prec, k - 2);
        Complex::with_val(wb, base * scale)
    };
    let tau = c.chi.gauss_sum(prec);
    let eps = {
        // i^k / D^{2s-k} / D
        let e = Complex::with_val(wb, Complex::with_val(wb, &c.s * 2u32) - (k as i64 - 1));
        let neg = Complex::with_val(wb, -e);
        let dp = real_pow_complex(prec, &Float::with_val(wb, d_mod), &neg);
        Complex::with_val(wb, dp * i_pow(prec, k))
    };
    let mut dsum = Complex::new(wb);
    for d in divisors_of_gcd(c.r, c.n) {
        if let Some(chi_v) = c.chi.eval((c.r * c.n / (d * d)) as i64) {
            let e = Complex::with_val(wb, Complex::with_val(wb, (k as i64) + 1) - Complex::with_val(wb, &c.s * 2u32));
            let dp = real_pow_complex(prec, &Float::with_val(wb, d), &e);
            dsum += Complex::with_val(wb, dp * chi_v.conj().to_complex(prec));
        }
    }
    Ok(tau
        .mul(&tau)
        .mul_exact(&front)
        .mul_exact(&eps)
        .mul_exact(&dsum)
        .mul(&gam.widen(0.0)))
}

/// Orbital-integral flavor selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitalKind {
    Identity,
    Weyl,
}

/// The per-prime value of the identity / Weyl orbital integral:
/// case split over p | D, p | N, p | n, and p inert in the data.
pub fn local_orbital_factor(
    prec: &Precision,
    p: u64,
    kind: OrbitalKind,
    c: &GeomConfig,
) -> Result<Approx> {
    if p < 2 || factor(p).factors.len() != 1 || factor(p).factors[0].1 != 1 {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    let wb = prec.working();
    let one = Approx::exact(Complex::with_val(wb, 1));
    let d_mod = c.chi.modulus;
    let np = valuation_i(c.n as i64, p);
    let rp = valuation_i(c.r as i64, p);
    match kind {
        OrbitalKind::Identity => {
            if d_mod % p == 0 {
                let comp = c.chi.components.iter().find(|x| x.prime == p).unwrap();
                let v = comp
                    .eval(c.r as i64)
                    .ok_or_else(|| Error::invalid("r not a unit at p | D"))?;
                return Ok(Approx::exact(v.to_complex(prec)));
            }
            if c.level % p == 0 {
                let e = valuation_i(c.level as i64, p);
                let nu_p = p.pow(e - 1) * (p + 1);
                return Ok(Approx::exact(Complex::with_val(wb, nu_p)));
            }
            if np > 0 {
                // (p^{n_p})^{k/2-s} sum_{d_p} (p^{d_p})^{2s-k+1}
                //   psi_p(p^{d_p-n_p}) chi_p(p^{2d_p-n_p})
                let outer = {
                    let e = Complex::with_val(
                        wb,
                        Complex::with_val(wb, (c.k as f64) / 2.0) - &c.s,
                    );
                    real_pow_complex(prec, &Float::with_val(wb, p.pow(np)), &e)
                };
                let mut sum = Complex::new(wb);
                for dp in 0..=np.min(rp) {
                    let psi_v = c
                        .psi
                        .hecke_local(p, dp as i32 - np as i32, 1, 1)
                        .ok_or_else(|| Error::invalid("psi undefined at p"))?;
                    let chi_v = c
                        .chi
                        .hecke_local(p, 2 * dp as i32 - np as i32, 1, 1)
                        .ok_or_else(|| Error::invalid("chi undefined at p"))?;
                    let e = Complex::with_val(
                        wb,
                        Complex::with_val(wb, &c.s * 2u32) - (c.k as i64 - 1),
                    );
                    let base = real_pow_complex(prec, &Float::with_val(wb, p.pow(dp)), &e);
                    sum += Complex::with_val(wb, base * psi_v.mul(chi_v).to_complex(prec));
                }
                return Ok(Approx::new(
                    Complex::with_val(wb, outer * sum),
                    (np as f64 + 2.0) * prec.ulp(),
                ));
            }
            Ok(one)
        }
        OrbitalKind::Weyl => {
            if c.level % p == 0 {
                return Ok(Approx::zero(prec));
            }
            if d_mod % p == 0 {
                let dp_exp = valuation_i(d_mod as i64, p);
                let q = p.pow(dp_exp);
                let outer = {
                    let e = Complex::with_val(
                        wb,
                        Complex::with_val(wb, c.k as i64) - Complex::with_val(wb, &c.s * 2u32),
                    );
                    real_pow_complex(prec, &Float::with_val(wb, q), &e)
                };
                let cof = (d_mod / q) as i64;
                let psi_d = c
                    .psi
                    .eval(d_mod as i64)
                    .ok_or_else(|| Error::invalid("psi(D) undefined"))?
                    .conj();
                // chi_p(D^2) with D^2 = p^{2 D_p} (D/p^{D_p})^2
                let chi_d2 = c
                    .chi
                    .hecke_local(p, 2 * dp_exp as i32, cof * cof, 1)
                    .ok_or_else(|| Error::invalid("chi_p(D^2) undefined"))?
                    .conj();
                let chi_mr = c
                    .chi
                    .components
                    .iter()
                    .find(|x| x.prime == p)
                    .unwrap()
                    .eval(-(c.r as i64))
                    .ok_or_else(|| Error::invalid("chi_p(-r) undefined"))?
                    .conj();
                let tau_p = c.chi.local_gauss_sum(p, prec)?;
                let tau_bar_p = c.chi.conjugate().local_gauss_sum(p, prec)?;
                let root = psi_d.mul(chi_d2).mul(chi_mr).to_complex(prec);
                return Ok(tau_p
                    .div(&tau_bar_p)
                    .mul_exact(&outer)
                    .mul_exact(&root));
            }
            if np > 0 {
                // (p^{n_p})^{s-k/2} sum_{d_p} (p^{d_p})^{k-2s+1}
                //   conj(psi_p(p^{d_p})) chi_p(p^{n_p - 2 d_p})
                let outer = {
                    let e = Complex::with_val(
                        wb,
                        &c.s - Complex::with_val(wb, (c.k as f64) / 2.0),
                    );
                    real_pow_complex(prec, &Float::with_val(wb, p.pow(np)), &e)
                };
                let mut sum = Complex::new(wb);
                for dp in 0..=np.min(rp) {
                    let psi_v = c
                        .psi
                        .hecke_local(p, dp as i32, 1, 1)
                        .ok_or_else(|| Error::invalid("psi undefined at p"))?
                        .conj();
                    let chi_v = c
                        .chi
                        .hecke_local(p, np as i32 - 2 * dp as i32, 1, 1)
                        .ok_or_else(|| Error::invalid("chi undefined at p"))?;
                    let e = Complex::with_val(
                        wb,
                        Complex::with_val(wb, (c.k as i64) + 1)
                            - Complex::with_val(wb, &c.s * 2u32),
                    );
                    let base = real_pow_complex(prec, &Float::with_val(wb, p.pow(dp)), &e);
                    sum += Complex::with_val(wb, base * psi_v.mul(chi_v).to_complex(prec));
                }
                return Ok(Approx::new(
                    Complex::with_val(wb, outer * sum),
                    (np as f64 + 2.0) * prec.ulp(),
                ));
            }
            Ok(one)
        }
    }
}

/// d split into its prime-to-D part and its D-part.
fn split_d(d: u64, d_mod: u64) -> (u64, u64) {
    let mut d_d = 1u64;
    let mut rest = d;
    for &(p, _) in &factor(d_mod).factors {
        while rest % p == 0 {
            rest /= p;
            d_d *= p;
        }
    }
    (rest, d_d)
}

/// Support condition at primes dividing D, plus the gcd divisibility
/// gcd(a, N d^{(D)}) | gcd(r, n).
pub fn conforming(a: i64, d: u64, c: &GeomConfig) -> bool {
    if a == 0 || d == 0 {
        return false;
    }
    let d_mod = c.chi.modulus;
    for &(p, big_dp) in &factor(d_mod).factors {
        let dp = valuation_i(d as i64, p);
        let ap = valuation_i(a, p);
        let ok = if dp > big_dp {
            ap == big_dp
        } else if dp == big_dp {
            ap >= big_dp
        } else {
            ap == dp
        };
        if !ok {
            return false;
        }
    }
    let (d_pd, _) = split_d(d, d_mod);
    let g = gcd_i(a, c.level * d_pd);
    gcd_i(c.r as i64, c.n) % g == 0
}

/// CRT solve of (a) c = Dn mod N d^{(D)}, c = 0 mod d_D, then
/// ell = (a c - n D) / (N d^{(D)}), which satisfies
/// N d^{(D)} ell = -nD mod a d_D.
pub fn solve_c_ell(a: i64, d: u64, c: &GeomConfig) -> Result<(i64, i64)> {
    if !conforming(a, d, c) {
        return Err(Error::UnsatisfiableCongruence { a, d });
    }
    let d_mod = c.chi.modulus;
    let (d_pd, d_d) = split_d(d, d_mod);
    let m1 = c.level * d_pd;
    let g = gcd_i(a, m1);
    let dn = (d_mod as i128) * c.n as i128;
    if dn % g as i128 != 0 {
        return Err(Error::UnsatisfiableCongruence { a, d });
    }
    let m1g = m1 / g;
    let c0: i128 = if m1g == 1 {
        0
    } else {
        let ag = ((a / g as i64).rem_euclid(m1g as i64)) as u64;
        let inv = inv_mod(ag, m1g) as i128;
        ((dn / g as i128).rem_euclid(m1g as i128) * inv).rem_euclid(m1g as i128)
    };
    let c_int: i128 = if d_d == 1 {
        c0
    } else {
        // c = c0 + m1g * t with t chosen so c = 0 mod d_D; m1g is prime to d_D
        let m1g_inv = inv_mod(m1g % d_d, d_d) as i128;
        let t = ((-c0).rem_euclid(d_d as i128) * m1g_inv).rem_euclid(d_d as i128);
        c0 + m1g as i128 * t
    };
    let num = a as i128 * c_int - dn;
    let den = (c.level * d_pd) as i128;
    if num % den != 0 {
        return Err(Error::UnsatisfiableCongruence { a, d });
    }
    let ell = num / den;
    // N d^{(D)} ell + nD must vanish mod a d_D
    debug_assert_eq!(
        (den * ell + dn).rem_euclid((a.unsigned_abs() * d_d) as i128),
        0
    );
    Ok((c_int as i64, ell as i64))
}

/// Exact p-principal-part phase: conj(theta_p(num/den)) as an exact root
/// of unity, i.e. e^{-2 pi i r_p(num/den)}.
fn theta_p_conj(num: i128, den: i128, p: u64) -> crate::chars::RootOfUnity {
    use crate::chars::RootOfUnity;
    let vp = |mut x: i128| -> u32 {
        let mut v = 0;
        while x != 0 && x % p as i128 == 0 {
            x /= p as i128;
            v += 1;
        }
        v
    };
    let vn = vp(num);
    let vd = vp(den);
    if vd <= vn {
        return RootOfUnity::one();
    }
    let v = vd - vn;
    let q = (p as i128).pow(v);
    let num_red = (num / (p as i128).pow(vn)).rem_euclid(q);
    let m = (den / (p as i128).pow(vd)).rem_euclid(q);
    let m_inv = inv_mod(m as u64, q as u64) as i128;
    let rp = (num_red * m_inv).rem_euclid(q);
    RootOfUnity::new(-(rp as i64), q as i64)
}

/// J_chi(a, d) = prod_{p | D} J_p(a, d): the explicit unit-average local
/// factor, |J_chi| <= 1.  For d_p = 0 the closed form chi_p(-Nd/a)/phi_p(D);
/// for d_p > 0 a finite average over unit residues mod p^M, refined in M
/// until two successive levels agree exactly.
pub fn j_chi(prec: &Precision, a: i64, d: u64, c: &GeomConfig) -> Result<Approx> {
    if !conforming(a, d, c) {
        return Err(Error::UnsatisfiableCongruence { a, d });
    }
    let mut out = Approx::exact(Complex::with_val(prec.working(), 1));
    for comp in &c.chi.components {
        out = out.mul(&j_p(prec, comp, a, d, c)?);
    }
    Ok(out)
}

fn j_p(
    prec: &Precision,
    comp: &crate::chars::LocalComponent,
    a: i64,
    d: u64,
    c: &GeomConfig,
) -> Result<Approx> {
    let wb = prec.working();
    let p = comp.prime;
    let big_dp = comp.exponent;
    let q = comp.modulus;
    let dp = valuation_i(d as i64, p);
    let phi_q = (q - q / p) as f64;
    if dp == 0 {
        // chi_p(-N d / a) / phi(p^{D_p})
        let nd = -((c.level as i128 * d as i128).rem_euclid(q as i128)) as i64;
        let a_inv = inv_mod(a.rem_euclid(q as i64) as u64, q) as i64;
        let v = comp
            .eval(nd * a_inv)
            .ok_or_else(|| Error::invalid("non-unit argument in J_p closed form"))?;
        return Ok(Approx::new(
            Complex::with_val(wb, v.to_complex(prec) / phi_q),
            2.0 * prec.ulp(),
        ));
    }
    // averaged branch: u runs over units mod p^M restricted to
    // v_p(u b + d^2) = d_p + D_p, with value chi_p(Nu) conj(theta_p(...))
    let b = a as i128 * d as i128;
    let d2 = d as i128 * d as i128;
    let target = dp + big_dp;
    let mut m_exp = target + 2;
    let cap = target + 11;
    let mut prev: Option<HashMap<(i64, i64), i64>> = None;
    while m_exp <= cap {
        let modulus: i128 = (p as i128).pow(m_exp);
        if modulus > (1i128 << 40) {
            return Err(Error::StabilizationFailure { p, cap: m_exp });
        }
        let mut counts: HashMap<(i64, i64), i64> = HashMap::new();
        let mut u = 1i128;
        while u < modulus {
            if u % p as i128 != 0 {
                let t = u * b + d2;
                if t != 0 {
                    let vt = {
                        let mut v = 0u32;
                        let mut x = t;
                        while x % p as i128 == 0 {
                            x /= p as i128;
                            v += 1;
                        }
                        v
                    };
                    if vt == target {
                        let chi_u = comp
                            .eval(((c.level as i128 * u).rem_euclid(q as i128)) as i64)
                            .expect("unit argument");
                        let th = theta_p_conj(
                            c.r as i128 * c.chi.modulus as i128 * c.n as i128 * u,
                            c.level as i128 * t,
                            p,
                        );
                        let root = chi_u.mul(th);
                        *counts.entry((root.num, root.den)).or_insert(0) += 1;
                    }
                }
            }
            u += 1;
        }
        if let Some(ref pv) = prev {
            // exact agreement of averages across one refinement level
            let scale = p as i64;
            let agree = pv.len() == counts.len()
                && pv
                    .iter()
                    .all(|(key, &cnt)| counts.get(key).copied() == Some(cnt * scale));
            if agree {
                let phi_m = (modulus - modulus / p as i128) as f64;
                let mut acc = Complex::new(wb);
                for (&(num, den), &cnt) in &counts {
                    let r = crate::chars::RootOfUnity::new(num, den).to_complex(prec);
                    acc += Complex::with_val(wb, r * Float::with_val(wb, cnt));
                }
                let v = Complex::with_val(wb, acc / Float::with_val(wb, phi_m));
                let e = (counts.len() as f64 + 4.0) * prec.ulp();
                return Ok(Approx::new(v, e));
            }
        }
        prev = Some(counts);
        m_exp += 1;
    }
    Err(Error::StabilizationFailure { p, cap })
}

/// An enumerated summand of the E series.
#[derive(Debug, Clone)]
pub struct ETermIndex {
    pub a: i64,
    pub d: u64,
    pub d_pd: u64,
    pub d_d: u64,
    pub c_int: i64,
    pub ell: i64,
}

impl ETermIndex {
    pub fn build(a: i64, d: u64, c: &GeomConfig) -> Result<Self> {
        let (c_int, ell) = solve_c_ell(a, d, c)?;
        let (d_pd, d_d) = split_d(d, c.chi.modulus);
        Ok(ETermIndex {
            a,
            d,
            d_pd,
            d_d,
            c_int,
            ell,
        })
    }
}

/// One unprefactored summand:
/// a^{s-k} gcd(a, N d^{(D)}) / (d^s psi(a) e^{2 pi i r ell / (a d_D)})
///   * J_chi(a,d) * B(s,k-s) 1F1(s;k; -2 pi i r n D / (N a d)),
/// with a^{s-k} = e^{-i pi (s-k)} |a|^{s-k} on the negative ray.
pub fn e_term(prec: &Precision, idx: &ETermIndex, c: &GeomConfig) -> Result<Approx> {
    let b = beta(
        prec,
        &c.s,
        &Complex::with_val(prec.working(), (c.k as i64) - &c.s),
    )?;
    let jv = j_chi(prec, idx.a, idx.d, c)?;
    let apow = signed_pow(prec, idx.a, c);
    let dpow = int_pow_complex(prec, idx.d, &Complex::with_val(prec.working(), -&c.s));
    e_term_inner(prec, idx, c, &b, &jv, &apow, &dpow)
}

/// a^{s-k}, taken along e^{-i pi (s-k)} |a|^{s-k} on the negative ray.
fn signed_pow(prec: &Precision, a: i64, c: &GeomConfig) -> Complex {
    let wb = prec.working();
    let s_minus_k = Complex::with_val(wb, &c.s - (c.k as i64));
    let apow = real_pow_complex(prec, &Float::with_val(wb, a.unsigned_abs()), &s_minus_k);
    if a < 0 {
        Complex::with_val(wb, apow * neg_ray_rotation(prec, c))
    } else {
        apow
    }
}

/// e^{-i pi (s-k)}
fn neg_ray_rotation(prec: &Precision, c: &GeomConfig) -> Complex {
    let wb = prec.working();
    let s_minus_k = Complex::with_val(wb, &c.s - (c.k as i64));
    let e = Complex::with_val(wb, s_minus_k * pi_float(prec));
    let rot = Complex::with_val(wb, (Float::new(wb), -Float::with_val(wb, 1)));
    Complex::with_val(wb, Complex::with_val(wb, e * rot).exp())
}

fn e_term_inner(
    prec: &Precision,
    idx: &ETermIndex,
    c: &GeomConfig,
    beta_sk: &Approx,
    jv: &Approx,
    apow: &Complex,
    dpow: &Complex,
) -> Result<Approx> {
    let wb = prec.working();
    let a = idx.a;
    let d = idx.d;
    let g = gcd_i(a, c.level * idx.d_pd);
    let psi_a = c
        .psi
        .eval(a)
        .ok_or_else(|| Error::invalid("psi(a) vanishes: a shares a factor with N"))?;
    // e^{-2 pi i r ell / (a d_D)}
    let den = a as i128 * idx.d_d as i128;
    let num = (-(c.r as i128) * idx.ell as i128).rem_euclid(den.abs());
    let (pn, pd) = if den < 0 { (-num, -den) } else { (num, den) };
    let phase = crate::prec::root_of_unity_value(prec, (pn % pd) as i64, pd as i64);
    let w = {
        // -2 pi r n D / (N a d)
        let top = Float::with_val(wb, pi_float(prec) * 2u32) * (c.r * c.n * c.chi.modulus) as u64;
        let bot = c.level as i128 * a as i128 * d as i128;
        let exact = Float::with_val(wb, top) / Float::with_val(wb, bot as i64);
        Complex::with_val(wb, (Float::new(wb), -exact))
    };
    let f1 = kummer_f1(prec, &c.s, c.k, &w)?;
    let scalar = Complex::with_val(
        wb,
        Complex::with_val(wb, apow * dpow) * Float::with_val(wb, g),
    );
    let root = psi_a.inv().to_complex(prec);
    let scalar = Complex::with_val(wb, Complex::with_val(wb, scalar * phase) * root);
    Ok(beta_sk.mul(&f1).mul(jv).mul_exact(&scalar))
}

/// Prefactor applied once to the whole E sum:
/// (4 pi r n)^{k-1} phi(D) psi(nD) e^{i pi s / 2}
///   / (N^s D^{s-k} (k-2)! tau(chibar))
pub fn e_prefactor(prec: &Precision, c: &GeomConfig) -> Result<Approx> {
    let wb = prec.working();
    let phi_d = factor(c.chi.modulus).euler_phi();
    let psi_nd = c
        .psi
        .eval((c.n * c.chi.modulus) as i64)
        .ok_or_else(|| Error::invalid("psi(nD) vanishes"))?;
    let four_pi_rn = Float::with_val(wb, pi_float(prec) * 4u32) * (c.r * c.n) as u64;
    let lead = Float::with_val(wb, four_pi_rn).pow_k(c.k as i64 - 1, wb);
    let rot = {
        // e^{i pi s / 2}
        let e = Complex::with_val(wb, &c.s * pi_float(prec)) / 2u32;
        let i = Complex::with_val(wb, (Float::new(wb), Float::with_val(wb, 1)));
        Complex::with_val(wb, Complex::with_val(wb, Complex::with_val(wb, e) * i).exp())
    };
    let npow = int_pow_complex(prec, c.level, &Complex::with_val(wb, -&c.s));
    let dpow = {
        let e = Complex::with_val(wb, Complex::with_val(wb, c.k as i64) - &c.s);
        real_pow_complex(prec, &Float::with_val(wb, c.chi.modulus), &e)
    };
    let tau_bar = c.chi.conjugate().gauss_sum(prec);
    let numer = Complex::with_val(
        wb,
        Complex::with_val(wb, Complex::with_val(wb, lead * rot) * npow) * dpow,
    );
    let numer = Complex::with_val(
        wb,
        Complex::with_val(wb, numer * Float::with_val(wb, phi_d)) / factorial_float(prec, c.k - 2),
    );
    let numer = Complex::with_val(wb, numer * psi_nd.to_complex(prec));
    Ok(Approx::new(numer, 0.0).div(&tau_bar))
}

trait PowK {
    fn pow_k(self, e: i64, wb: u32) -> Float;
}
impl PowK for Float {
    fn pow_k(self, e: i64, wb: u32) -> Float {
        use rug::ops::Pow;
        Float::with_val(wb, (&self).pow(e))
    }
}

/// Per-term envelope constant: gcd(r,n) B(sigma, k-sigma) (1 + e^{pi tau}),
/// to be multiplied by |a|^{sigma-k} d^{-sigma} and the prefactor magnitude.
fn term_envelope(c: &GeomConfig) -> f64 {
    let sigma = c.sigma();
    let g = gcd_i(c.r as i64, c.n) as f64;
    let b = beta_sigma(sigma, c.k);
    g * b * (1.0 + (std::f64::consts::PI * c.tau()).exp())
}

fn beta_sigma(sigma: f64, k: u32) -> f64 {
    // real Beta via ln-gamma, plenty for envelope work
    fn lg(x: f64) -> f64 {
        // Stirling with shift
        let mut x = x;
        let mut acc = 0.0;
        while x < 16.0 {
            acc -= x.ln();
            x += 1.0;
        }
        acc + 0.5 * ((2.0 * std::f64::consts::PI / x).ln()) + x * (x.ln() - 1.0)
            + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x * x * x)
    }
    (lg(sigma) + lg(k as f64 - sigma) - lg(k as f64)).exp()
}

/// The truncated, prefactored E series together with an explicit tail
/// bound for everything outside |a| <= cutoff_a, d <= cutoff_d.
pub fn e_sum(
    prec: &Precision,
    c: &GeomConfig,
    cutoff_a: u64,
    cutoff_d: u64,
) -> Result<(Approx, f64)> {
    let sigma = c.sigma();
    if sigma <= 1.0 || sigma >= c.k as f64 - 1.0 {
        return Err(Error::domain("e_sum", "need 1 < Re(s) < k-1"));
    }
    let pref = e_prefactor(prec, c)?;
    if cutoff_a == 0 || cutoff_d == 0 {
        return Ok((Approx::zero(prec), e_bound(c)?));
    }
    let beta_sk = beta(
        prec,
        &c.s,
        &Complex::with_val(prec.working(), (c.k as i64) - &c.s),
    )?;
    // |a|^{s-k} with the negative-ray rotation, hoisted out of the d loop
    let wb = prec.working();
    let rot = neg_ray_rotation(prec, c);
    let s_minus_k = Complex::with_val(wb, &c.s - (c.k as i64));
    let apows: Vec<(Complex, Complex)> = (1..=cutoff_a)
        .into_par_iter()
        .map(|a| {
            let p = real_pow_complex(prec, &Float::with_val(wb, a), &s_minus_k);
            let n = Complex::with_val(wb, &p * &rot);
            (p, n)
        })
        .collect();

    let partials: Vec<Result<Approx>> = (1..=cutoff_d)
        .into_par_iter()
        .map(|d| e_sum_fixed_d(prec, c, d, cutoff_a, &beta_sk, &apows))
        .collect();
    let mut tot = Approx::zero(prec);
    for p in partials {
        tot = tot.add(&p?);
    }
    let value = pref.mul(&tot);

    // excluded ranges, with the positive-a zeta envelopes
    let env = term_envelope(c) * pref.abs_f64();
    let za = zeta_real(prec, c.k as f64 - sigma)?.abs_f64();
    let zd = zeta_real(prec, sigma)?.abs_f64();
    let tail = env
        * (zd * zeta_tail_bound(c.k as f64 - sigma, cutoff_a)
            + za * zeta_tail_bound(sigma, cutoff_d));
    Ok((value.widen(tail), tail))
}

fn e_sum_fixed_d(
    prec: &Precision,
    c: &GeomConfig,
    d: u64,
    cutoff_a: u64,
    beta_sk: &Approx,
    apows: &[(Complex, Complex)],
) -> Result<Approx> {
    let dpow = int_pow_complex(prec, d, &Complex::with_val(prec.working(), -&c.s));
    let d_mod = c.chi.modulus;
    // J is periodic in a; cache per residue class
    let mut j_period: i128 = 1;
    for &(p, big_dp) in &factor(d_mod).factors {
        let dp = valuation_i(d as i64, p);
        j_period *= (p as i128).pow(2 * (big_dp + dp) + 2);
    }
    let mut cache: HashMap<i64, Approx> = HashMap::new();
    let mut sum = Approx::zero(prec);
    for aa in 1..=cutoff_a as i64 {
        for a in [aa, -aa] {
            if !conforming(a, d, c) {
                continue;
            }
            let idx = ETermIndex::build(a, d, c)?;
            let key = (a as i128).rem_euclid(j_period) as i64;
            let jv = match cache.get(&key) {
                Some(v) => v.clone(),
                None => {
                    let v = j_chi(prec, a, d, c)?;
                    cache.insert(key, v.clone());
                    v
                }
            };
            let apow = if a > 0 {
                &apows[(aa - 1) as usize].0
            } else {
                &apows[(aa - 1) as usize].1
            };
            sum = sum.add(&e_term_inner(prec, &idx, c, beta_sk, &jv, apow, &dpow)?);
        }
    }
    Ok(sum)
}

/// Closed-form envelope for |E|:
/// 2 gcd(r,n) (4 pi r n)^{k-1} D^{k-sigma-1/2} phi(D) B(sigma,k-sigma)
///   cosh(pi tau / 2) zeta(k-sigma) zeta(sigma) / (N^sigma (k-2)!)
pub fn e_bound(c: &GeomConfig) -> Result<f64> {
    let sigma = c.sigma();
    if sigma <= 1.0 || sigma >= c.k as f64 - 1.0 {
        return Err(Error::domain("e_bound", "need 1 < Re(s) < k-1"));
    }
    let k = c.k as f64;
    let g = gcd_i(c.r as i64, c.n) as f64;
    let phi_d = factor(c.chi.modulus).euler_phi() as f64;
    let pr = Precision::new(64);
    let zk = zeta_real(&pr, k - sigma)?.abs_f64();
    let zs = zeta_real(&pr, sigma)?.abs_f64();
    let mut fact = 1.0f64;
    for j in 2..=(c.k - 2) {
        fact *= j as f64;
    }
    let lead = (4.0 * std::f64::consts::PI * (c.r * c.n) as f64).powi(c.k as i32 - 1);
    let v = 2.0 * g * lead * (c.chi.modulus as f64).powf(k - sigma - 0.5) * phi_d
        * beta_sigma(sigma, c.k)
        * (std::f64::consts::PI * c.tau() / 2.0).cosh()
        * zk
        * zs
        / ((c.level as f64).powf(sigma) * fact);
    Ok(v)
}

/// |E_truncated| + tail over |identity term|: an upper proxy for the
/// relative size of the error series.
pub fn q_ratio(prec: &Precision, c: &GeomConfig, cutoff_a: u64, cutoff_d: u64) -> Result<f64> {
    let idt = identity_term(prec, c)?;
    let mag = idt.abs_f64();
    if mag == 0.0 {
        return Err(Error::domain("q_ratio", "identity term vanishes"));
    }
    let (e, tail) = e_sum(prec, c, cutoff_a, cutoff_d)?;
    Ok((e.abs_f64() + tail) / mag)
}
