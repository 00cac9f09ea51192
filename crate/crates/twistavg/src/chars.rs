//! Exact arithmetic of Dirichlet characters, their local components, and
//! Gauss sums.
//!
//! Character values are stored as exact roots of unity (rational exponents)
//! and realized as complex floats only at evaluation boundaries, so long
//! character sums accumulate no drift.

use crate::prec::{root_of_unity_value, Approx, Precision};
use crate::{Error, Result};
use num_integer::Integer;
use rug::Complex;

/// A positive integer with its prime factorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub value: u64,
    /// (prime, exponent) pairs, primes strictly increasing, exponents >= 1.
    pub factors: Vec<(u64, u32)>,
}

pub fn factor(n: u64) -> Factorization {
    assert!(n >= 1);
    let mut m = n;
    let mut factors = Vec::new();
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            factors.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        factors.push((m, 1));
    }
    Factorization { value: n, factors }
}

impl Factorization {
    /// All divisors, sorted ascending.
    pub fn divisors(&self) -> Vec<u64> {
        let mut divs = vec![1u64];
        for &(p, e) in &self.factors {
            let prev = divs.clone();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                divs.extend(prev.iter().map(|d| d * pk));
            }
        }
        divs.sort_unstable();
        divs
    }

    pub fn euler_phi(&self) -> u64 {
        let mut phi = self.value;
        for &(p, _) in &self.factors {
            phi = phi / p * (p - 1);
        }
        phi
    }

    /// The p-adic valuation of `value` at `p`.
    pub fn valuation(&self, p: u64) -> u32 {
        self.factors
            .iter()
            .find(|&&(q, _)| q == p)
            .map_or(0, |&(_, e)| e)
    }
}

pub fn euler_phi(n: u64) -> u64 {
    factor(n).euler_phi()
}

/// gcd for possibly-negative a.
pub fn gcd_i(a: i64, b: u64) -> u64 {
    (a.unsigned_abs()).gcd(&b)
}

/// a^e mod m.
pub fn pow_mod(a: u64, mut e: u64, m: u64) -> u64 {
    let mut base = a % m;
    let mut acc = 1u64 % m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, base, m);
        }
        base = mulmod(base, base, m);
        e >>= 1;
    }
    acc
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Modular inverse of a mod m (gcd(a, m) = 1).
pub fn inv_mod(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let e = num_integer::ExtendedGcd::from(
        (a as i128).extended_gcd(&(m as i128)),
    );
    debug_assert_eq!(e.gcd, 1, "inv_mod of non-unit {a} mod {m}");
    (e.x.rem_euclid(m as i128)) as u64
}

/// p-adic valuation of a nonzero integer.
pub fn valuation_i(mut x: i64, p: u64) -> u32 {
    assert!(x != 0);
    let mut v = 0;
    while x % (p as i64) == 0 {
        x /= p as i64;
        v += 1;
    }
    v
}

/// Generators and orders of the unit group (Z/q)^* for a prime power q.
#[derive(Debug, Clone)]
pub struct UnitGroup {
    pub modulus: u64,
    pub generators: Vec<u64>,
    pub orders: Vec<u64>,
}

/// Structure of (Z/p^e)^*: cyclic for odd p and for q in {2, 4}; for
/// q = 2^e with e >= 3, generated by -1 (order 2) and 5 (order 2^{e-2}).
pub fn unit_group(q: u64) -> Result<UnitGroup> {
    let f = factor(q);
    if f.factors.len() != 1 {
        return Err(Error::invalid(format!("{q} is not a prime power")));
    }
    let (p, e) = f.factors[0];
    if p == 2 {
        return Ok(match e {
            1 => UnitGroup {
                modulus: 2,
                generators: vec![],
                orders: vec![],
            },
            2 => UnitGroup {
                modulus: 4,
                generators: vec![3],
                orders: vec![2],
            },
            _ => UnitGroup {
                modulus: q,
                generators: vec![q - 1, 5],
                orders: vec![2, 1 << (e - 2)],
            },
        });
    }
    // odd p: lift the smallest primitive root mod p
    let phi_p = p - 1;
    let pf = factor(phi_p);
    let mut g = 0;
    for cand in 2..p {
        let ok = pf
            .factors
            .iter()
            .all(|&(ell, _)| pow_mod(cand, phi_p / ell, p) != 1);
        if ok {
            g = cand;
            break;
        }
    }
    debug_assert!(g > 0);
    let g = if e > 1 && pow_mod(g, p - 1, p * p) == 1 {
        g + p
    } else {
        g
    };
    Ok(UnitGroup {
        modulus: q,
        generators: vec![g % q],
        orders: vec![f.euler_phi()],
    })
}

/// An exact root of unity e^{2 pi i t} with t = num/den, 0 <= t < 1 reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RootOfUnity {
    pub num: i64,
    pub den: i64,
}

impl RootOfUnity {
    pub fn one() -> Self {
        RootOfUnity { num: 0, den: 1 }
    }

    pub fn new(num: i64, den: i64) -> Self {
        assert!(den > 0);
        let num = num.rem_euclid(den);
        let g = num.gcd(&den);
        RootOfUnity {
            num: num / g,
            den: den / g,
        }
    }

    pub fn mul(self, other: RootOfUnity) -> RootOfUnity {
        let den = self.den.lcm(&other.den);
        let num = self.num * (den / self.den) + other.num * (den / other.den);
        RootOfUnity::new(num, den)
    }

    pub fn inv(self) -> RootOfUnity {
        RootOfUnity::new(-self.num, self.den)
    }

    pub fn pow(self, k: i64) -> RootOfUnity {
        // exponent arithmetic stays exact: k * num mod den
        let num = (self.num as i128 * k as i128).rem_euclid(self.den as i128);
        RootOfUnity::new(num as i64, self.den)
    }

    pub fn conj(self) -> RootOfUnity {
        self.inv()
    }

    /// Order as an element of the unit circle group.
    pub fn order(self) -> i64 {
        self.den
    }

    pub fn is_one(self) -> bool {
        self.num == 0
    }

    /// Realize as a complex number at working precision.
    pub fn to_complex(self, prec: &Precision) -> Complex {
        root_of_unity_value(prec, self.num, self.den)
    }

    /// Exactly +1 or -1, if the root is real.
    pub fn as_sign(self) -> Option<i32> {
        if self.den == 1 {
            Some(1)
        } else if self.den == 2 {
            Some(-1)
        } else {
            None
        }
    }
}

/// One local component of a character: a character of (Z/p^e)^* stored as
/// a full value table indexed by residue.
#[derive(Debug, Clone)]
pub struct LocalComponent {
    pub prime: u64,
    pub exponent: u32,
    /// p^e
    pub modulus: u64,
    pub generators: Vec<u64>,
    pub gen_orders: Vec<u64>,
    /// Exponent label: value on generator j is e^{2 pi i label_j / order_j}.
    pub label: Vec<u64>,
    /// table[m] = chi_p(m) for m coprime to p, None otherwise.
    table: Vec<Option<RootOfUnity>>,
}

impl LocalComponent {
    fn build(prime: u64, exponent: u32, label: Vec<u64>) -> Result<Self> {
        let modulus = prime.pow(exponent);
        let ug = unit_group(modulus)?;
        if label.len() != ug.generators.len() {
            return Err(Error::invalid(format!(
                "label length {} != generator count {} for modulus {}",
                label.len(),
                ug.generators.len(),
                modulus
            )));
        }
        for (l, o) in label.iter().zip(&ug.orders) {
            if l >= o {
                return Err(Error::invalid(format!(
                    "label entry {l} out of range for generator order {o}"
                )));
            }
        }
        let mut table = vec![None; modulus as usize];
        // walk the full unit group as products of generator powers
        let mut exps = vec![0u64; ug.generators.len()];
        loop {
            let mut m = 1u64;
            let mut rou = RootOfUnity::one();
            for ((&g, &x), (&o, &l)) in ug
                .generators
                .iter()
                .zip(&exps)
                .zip(ug.orders.iter().zip(&label))
            {
                m = mulmod(m, pow_mod(g, x, modulus), modulus);
                rou = rou.mul(RootOfUnity::new((l as i64) * (x as i64), o as i64));
            }
            table[m as usize] = Some(rou);
            // increment multi-index
            let mut i = 0;
            loop {
                if i == exps.len() {
                    // finished
                    if modulus == 1 || modulus == 2 {
                        // trivial group edge cases
                    }
                    debug_assert!(table
                        .iter()
                        .enumerate()
                        .all(|(m, v)| v.is_some() == (gcd_i(m as i64, modulus) == 1)
                            || modulus == 1));
                    return Ok(LocalComponent {
                        prime,
                        exponent,
                        modulus,
                        generators: ug.generators,
                        gen_orders: ug.orders,
                        label,
                        table,
                    });
                }
                exps[i] += 1;
                if exps[i] == ug.orders[i] {
                    exps[i] = 0;
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }

    /// chi_p(m) for an integer m; None (i.e. zero) when p | m.
    pub fn eval(&self, m: i64) -> Option<RootOfUnity> {
        let r = m.rem_euclid(self.modulus as i64) as usize;
        self.table[r]
    }

    /// chi_p(u/v) for a rational with p-unit numerator and denominator.
    pub fn eval_rational(&self, u: i64, v: i64) -> Option<RootOfUnity> {
        let a = self.eval(u)?;
        let b = self.eval(v)?;
        Some(a.mul(b.inv()))
    }

    /// Gauss sum of this local character: sum over units mod p^e of
    /// chi_p(m) e^{2 pi i m / p^e}.
    pub fn gauss_sum(&self, prec: &Precision) -> Approx {
        let mut acc = Complex::new(prec.working());
        let mut terms = 0u64;
        for m in 0..self.modulus {
            if let Some(rou) = self.table[m as usize] {
                let phase = RootOfUnity::new(m as i64, self.modulus as i64);
                acc += rou.mul(phase).to_complex(prec);
                terms += 1;
            }
        }
        Approx::new(acc, (terms as f64 + 1.0) * prec.ulp())
    }
}

/// A Dirichlet character mod D as a product of local prime-power
/// components, with exact root-of-unity values.
#[derive(Debug, Clone)]
pub struct DirichletCharacter {
    pub modulus: u64,
    pub components: Vec<LocalComponent>,
    pub order: i64,
    /// chi(-1) as +1 or -1.
    pub parity: i32,
}

impl DirichletCharacter {
    /// The trivial character mod 1.
    pub fn trivial() -> Self {
        DirichletCharacter {
            modulus: 1,
            components: vec![],
            order: 1,
            parity: 1,
        }
    }

    /// The trivial (principal) character of any modulus.
    pub fn principal(modulus: u64) -> Self {
        let f = factor(modulus);
        let components = f
            .factors
            .iter()
            .map(|&(p, e)| {
                let n_gens = unit_group(p.pow(e)).unwrap().generators.len();
                LocalComponent::build(p, e, vec![0; n_gens]).unwrap()
            })
            .collect();
        DirichletCharacter {
            modulus,
            components,
            order: 1,
            parity: 1,
        }
    }

    /// Build a character mod D from an exponent vector on the fixed CRT
    /// generators (smallest primitive root per odd prime power; {-1, 5}
    /// for 2^e with e >= 3).
    pub fn from_label(modulus: u64, label: &[u64]) -> Result<Self> {
        let f = factor(modulus);
        let mut components = Vec::new();
        let mut idx = 0;
        for &(p, e) in &f.factors {
            let n_gens = unit_group(p.pow(e))?.generators.len();
            if idx + n_gens > label.len() {
                return Err(Error::invalid(format!(
                    "label too short for modulus {modulus}"
                )));
            }
            components.push(LocalComponent::build(
                p,
                e,
                label[idx..idx + n_gens].to_vec(),
            )?);
            idx += n_gens;
        }
        if idx != label.len() {
            return Err(Error::invalid(format!(
                "label too long for modulus {modulus}: expected {idx} entries"
            )));
        }
        let mut chi = DirichletCharacter {
            modulus,
            components,
            order: 1,
            parity: 1,
        };
        chi.order = chi
            .components
            .iter()
            .flat_map(|c| {
                c.label
                    .iter()
                    .zip(&c.gen_orders)
                    .map(|(&l, &o)| RootOfUnity::new(l as i64, o as i64).order())
            })
            .fold(1i64, |a, b| a.lcm(&b));
        chi.parity = chi
            .eval(-1)
            .and_then(|r| r.as_sign())
            .expect("chi(-1) must be a sign");
        Ok(chi)
    }

    /// Total number of label slots for a modulus.
    pub fn label_len(modulus: u64) -> usize {
        factor(modulus)
            .factors
            .iter()
            .map(|&(p, e)| unit_group(p.pow(e)).unwrap().generators.len())
            .sum()
    }

    /// Serialize as "D:e1,e2,...".
    pub fn label_string(&self) -> String {
        let entries: Vec<String> = self
            .components
            .iter()
            .flat_map(|c| c.label.iter().map(|l| l.to_string()))
            .collect();
        format!("{}:{}", self.modulus, entries.join(","))
    }

    /// Parse "D:e1,e2,..." (a bare "D" or "D:" means the all-zero label).
    pub fn parse_label(s: &str) -> Result<Self> {
        let (d_str, rest) = match s.split_once(':') {
            Some((d, r)) => (d, r),
            None => (s, ""),
        };
        let modulus: u64 = d_str
            .parse()
            .map_err(|_| Error::invalid(format!("bad modulus in label '{s}'")))?;
        let label: Vec<u64> = if rest.is_empty() {
            vec![0; Self::label_len(modulus)]
        } else {
            rest.split(',')
                .map(|e| {
                    e.trim()
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad label entry '{e}'")))
                })
                .collect::<Result<_>>()?
        };
        Self::from_label(modulus, &label)
    }

    /// chi(m) as an exact root of unity, or None when gcd(m, D) > 1.
    pub fn eval(&self, m: i64) -> Option<RootOfUnity> {
        let mut acc = RootOfUnity::one();
        for c in &self.components {
            acc = acc.mul(c.eval(m)?);
        }
        Some(acc)
    }

    /// chi(u/v) for a rational with denominator coprime to D.
    pub fn eval_rational(&self, u: i64, v: i64) -> Option<RootOfUnity> {
        let a = self.eval(u)?;
        let b = self.eval(v)?;
        Some(a.mul(b.inv()))
    }

    /// chi(m) realized as a complex number (0 when not coprime).
    pub fn eval_complex(&self, m: i64, prec: &Precision) -> Complex {
        match self.eval(m) {
            Some(r) => r.to_complex(prec),
            None => Complex::new(prec.working()),
        }
    }

    pub fn conjugate(&self) -> DirichletCharacter {
        let label: Vec<u64> = self
            .components
            .iter()
            .flat_map(|c| {
                c.label
                    .iter()
                    .zip(&c.gen_orders)
                    .map(|(&l, &o)| if l == 0 { 0 } else { o - l })
            })
            .collect();
        DirichletCharacter::from_label(self.modulus, &label).unwrap()
    }

    pub fn is_real(&self) -> bool {
        self.order <= 2
    }

    /// Smallest f | D such that chi factors through (Z/f)^*.
    pub fn conductor(&self) -> u64 {
        let f = factor(self.modulus);
        'outer: for d in f.divisors() {
            // chi has period d iff chi(m) = 1 whenever m = 1 mod d, (m, D) = 1
            for m in (1..=self.modulus).step_by(d as usize) {
                if let Some(v) = self.eval(m as i64) {
                    if !v.is_one() {
                        continue 'outer;
                    }
                }
            }
            return d;
        }
        self.modulus
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor() == self.modulus
    }

    /// All primitive characters mod D (conductor exactly D).
    pub fn enumerate_primitive(modulus: u64) -> Vec<DirichletCharacter> {
        let f = factor(modulus);
        let slot_orders: Vec<u64> = f
            .factors
            .iter()
            .flat_map(|&(p, e)| unit_group(p.pow(e)).unwrap().orders)
            .collect();
        let mut out = Vec::new();
        let mut label = vec![0u64; slot_orders.len()];
        loop {
            let chi = DirichletCharacter::from_label(modulus, &label).unwrap();
            if chi.is_primitive() {
                out.push(chi);
            }
            let mut i = 0;
            loop {
                if i == label.len() {
                    if modulus == 1 {
                        // the single trivial character was already pushed
                    }
                    return out;
                }
                label[i] += 1;
                if label[i] == slot_orders[i] {
                    label[i] = 0;
                    i += 1;
                } else {
                    break;
                }
            }
        }
    }

    /// Gauss sum tau(chi) = sum over units m mod D of chi(m) e^{2 pi i m/D}.
    /// For D = 1 the empty-modulus convention gives 1.
    pub fn gauss_sum(&self, prec: &Precision) -> Approx {
        if self.modulus == 1 {
            return Approx::exact(Complex::with_val(prec.working(), (1, 0)));
        }
        let mut acc = Complex::new(prec.working());
        let mut terms = 0u64;
        for m in 1..self.modulus {
            if let Some(rou) = self.eval(m as i64) {
                let phase = RootOfUnity::new(m as i64, self.modulus as i64);
                acc += rou.mul(phase).to_complex(prec);
                terms += 1;
            }
        }
        Approx::new(acc, (terms as f64 + 1.0) * prec.ulp())
    }

    /// Local Gauss sum tau(chi)_p = chi_p(D/p^{D_p}) tau(chi_p) for p | D.
    pub fn local_gauss_sum(&self, p: u64, prec: &Precision) -> Result<Approx> {
        let comp = self
            .components
            .iter()
            .find(|c| c.prime == p)
            .ok_or_else(|| Error::invalid(format!("{p} does not divide modulus")))?;
        let cofactor = (self.modulus / comp.modulus) as i64;
        let unit = comp
            .eval(cofactor)
            .expect("cofactor is a p-unit");
        Ok(comp.gauss_sum(prec).mul_exact(&unit.to_complex(prec)))
    }

    /// Local component value in the Hecke-character normalization, for
    /// x = p^v u in Q_p^* given as v and a p-unit rational u = num/den:
    /// the table value at p times prod_{q | D, q != p} chi_q(p)^{-v}.
    /// For p not dividing D the table part is trivial.
    pub fn hecke_local(&self, p: u64, v: i32, num: i64, den: i64) -> Option<RootOfUnity> {
        let mut acc = RootOfUnity::one();
        for c in &self.components {
            if c.prime == p {
                acc = acc.mul(c.eval_rational(num, den)?);
            } else {
                let at_p = c.eval(p as i64)?;
                acc = acc.mul(at_p.pow(-(v as i64)));
            }
        }
        Some(acc)
    }
}

/// Factorization, divisors and Euler phi in one call.
pub fn int_utils(n: u64) -> (Factorization, Vec<u64>, u64) {
    let f = factor(n);
    let divs = f.divisors();
    let phi = f.euler_phi();
    (f, divs, phi)
}
