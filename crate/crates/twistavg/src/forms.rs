//! Level-1 holomorphic cusp forms as exact q-expansions: generators,
//! echelon bases, Hecke action, eigenforms, twisting, pointwise
//! evaluation, and Petersson norms by quadrature.

use crate::chars::{factor, DirichletCharacter};
use crate::prec::{pi_float, Approx, Precision};
use crate::specfun::upper_incomplete_gamma;
use crate::{Error, Result};
use rug::ops::Pow;
use rug::{Complete, Complex, Float, Integer, Rational};

/// A truncated q-expansion with exact rational coefficients.
/// `coeffs[n]` is a_n; the constant term sits at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct QExpansion {
    pub weight: u32,
    pub level: u64,
    pub coeffs: Vec<Rational>,
}

impl QExpansion {
    pub fn prec(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> &Rational {
        &self.coeffs[n]
    }

    pub fn is_cuspidal(&self) -> bool {
        self.coeffs[0] == 0
    }

    /// Product of two expansions of the same level, truncated to the
    /// shorter precision.
    pub fn mul(&self, other: &QExpansion) -> QExpansion {
        let n = self.prec().min(other.prec());
        let mut coeffs = vec![Rational::new(); n + 1];
        for i in 0..=n {
            if self.coeffs[i] == 0 {
                continue;
            }
            for j in 0..=(n - i) {
                if other.coeffs[j] != 0 {
                    coeffs[i + j] += (&self.coeffs[i] * &other.coeffs[j]).complete();
                }
            }
        }
        QExpansion {
            weight: self.weight + other.weight,
            level: self.level,
            coeffs,
        }
    }

    pub fn scale(&self, c: &Rational) -> QExpansion {
        QExpansion {
            weight: self.weight,
            level: self.level,
            coeffs: self.coeffs.iter().map(|a| (a * c).complete()).collect(),
        }
    }

    pub fn sub(&self, other: &QExpansion) -> QExpansion {
        let n = self.prec().min(other.prec());
        QExpansion {
            weight: self.weight,
            level: self.level,
            coeffs: (0..=n)
                .map(|i| (&self.coeffs[i] - &other.coeffs[i]).complete())
                .collect(),
        }
    }

    /// Sum of the series at a point in the upper half-plane, with the
    /// truncation tail bounded and folded into err.
    pub fn eval(&self, prec: &Precision, z: &Complex, tol: f64) -> Result<Approx> {
        let coeffs: Vec<Float> = self
            .coeffs
            .iter()
            .map(|a| Float::with_val(prec.working(), a))
            .collect();
        eval_series(prec, self.weight, &coeffs, 0.0, z, tol)
    }
}


/// Shared series evaluator with the divisor-bound tail estimate
/// |a_n| <= d(n) n^{(k-1)/2} <= 2 n^{k/2} and geometric decay of |q|.
fn eval_series(
    prec: &Precision,
    weight: u32,
    coeffs: &[Float],
    coeff_err: f64,
    z: &Complex,
    tol: f64,
) -> Result<Approx> {
    let wb = prec.working();
    if !z.imag().is_sign_positive() || z.imag().is_zero() {
        return Err(Error::domain("eval_form", format!("Im z must be > 0, got {z}")));
    }
    let y = z.imag().to_f64();
    let t = (-2.0 * std::f64::consts::PI * y).exp();
    let m = coeffs.len() - 1;
    // tail: sum_{n>m} 2 n^{k/2} t^n, bounded once the terms decay by a
    // fixed ratio rho < 1
    let half_k = weight as f64 / 2.0;
    let rho = t * (1.0 + 1.0 / m as f64).powf(half_k);
    if rho >= 0.9 {
        let needed = (((half_k / -t.ln()) * 2.0) as usize + 64).max(2 * m);
        return Err(Error::InsufficientPrec {
            what: "eval_form tail".into(),
            needed,
        });
    }
    let tail = 2.0 * ((m + 1) as f64).powf(half_k) * t.powi(m as i32 + 1) / (1.0 - rho);
    if tail > tol {
        let needed = (m as f64 * (tol.ln() / tail.ln()).max(2.0)) as usize + 64;
        return Err(Error::InsufficientPrec {
            what: "eval_form tail above tolerance".into(),
            needed,
        });
    }

    let two_pi_i_z = Complex::with_val(wb, z * &pi_float(prec)) * 2u32;
    let q = Complex::with_val(wb, Complex::with_val(wb, (0, 1)) * &two_pi_i_z).exp();
    let mut qn = Complex::with_val(wb, 1);
    let mut sum = Complex::with_val(wb, &coeffs[0]);
    let mut err_amp = 1.0; // sum of |q|^n, amplifies per-coefficient error
    for c in coeffs.iter().skip(1) {
        qn *= &q;
        if !c.is_zero() {
            sum += Complex::with_val(wb, &qn * c);
        }
        err_amp += Float::with_val(64, qn.abs_ref()).to_f64();
    }
    let mag = Float::with_val(64, sum.abs_ref()).to_f64().abs();
    let err = tail + coeff_err * err_amp + (mag + 1.0) * prec.ulp() * (m as f64 + 8.0);
    Ok(Approx::new(sum, err))
}

/// sigma_e(n) divisor sums for 1 <= n <= prec, by sieve.
fn divisor_power_sums(e: u32, prec: usize) -> Vec<Integer> {
    let mut out = vec![Integer::new(); prec + 1];
    for d in 1..=prec {
        let de = Integer::from(d as u64).pow(e);
        let mut m = d;
        while m <= prec {
            out[m] += &de;
            m += d;
        }
    }
    out
}

/// Normalized Eisenstein series E_4 or E_6 (constant term 1), exact.
pub fn eisenstein(weight: u32, prec: usize) -> Result<QExpansion> {
    let (e, c) = match weight {
        4 => (3u32, Integer::from(240)),
        6 => (5u32, Integer::from(-504)),
        _ => {
            return Err(Error::invalid(format!(
                "eisenstein generator weight must be 4 or 6, got {weight}"
            )))
        }
    };
    let sums = divisor_power_sums(e, prec);
    let mut coeffs = vec![Rational::from(1)];
    coeffs.extend((1..=prec).map(|n| Rational::from((&c * &sums[n]).complete())));
    Ok(QExpansion {
        weight,
        level: 1,
        coeffs,
    })
}


/// The discriminant cusp form Delta = q prod (1-q^n)^24, exact, via the
/// cube of Euler's product: prod (1-q^n)^3 = sum (-1)^j (2j+1) q^{j(j+1)/2}
/// (sparse), squared once and then multiplied in six more sparse passes.
pub fn delta(prec: usize) -> QExpansion {
    let n = prec.saturating_sub(1); // coefficients of prod(1-q^m)^24 up to q^n
    let mut sparse: Vec<(usize, i64)> = Vec::new();
    let mut j = 0usize;
    loop {
        let e = j * (j + 1) / 2;
        if e > n {
            break;
        }
        let c = (2 * j as i64 + 1) * if j % 2 == 0 { 1 } else { -1 };
        sparse.push((e, c));
        j += 1;
    }
    // dense = P^2
    let mut dense = vec![Integer::new(); n + 1];
    for &(e1, c1) in &sparse {
        for &(e2, c2) in &sparse {
            if e1 + e2 > n {
                break;
            }
            dense[e1 + e2] += c1 * c2;
        }
    }
    // dense = P^8 after six sparse multiplications
    for _ in 0..6 {
        let mut next = vec![Integer::new(); n + 1];
        for &(e2, c2) in &sparse {
            for e1 in 0..=(n - e2) {
                if dense[e1] != 0 {
                    next[e1 + e2] += (&dense[e1] * c2).complete();
                }
            }
        }
        dense = next;
    }
    let mut coeffs = vec![Rational::new()];
    coeffs.extend((1..=prec).map(|m| Rational::from(dense[m - 1].clone())));
    QExpansion {
        weight: 12,
        level: 1,
        coeffs,
    }
}

/// dim S_k(SL_2(Z)) for even k >= 4.
pub fn cusp_dim(k: u32) -> usize {
    assert!(k % 2 == 0 && k >= 4);
    if k % 12 == 2 {
        (k / 12) as usize - 1
    } else {
        (k / 12) as usize
    }
}

/// Echelonized integral basis of S_k(1): form i has a_j = delta_{ij} for
/// j = 1..dim (Miller basis), built from Delta^j E4^a E6^b monomials with
/// exact arithmetic.
pub fn cusp_basis(k: u32, prec: usize) -> Result<Vec<QExpansion>> {
    if k % 2 != 0 {
        return Err(Error::invalid(format!("weight must be even, got {k}")));
    }
    if k < 12 {
        return Ok(vec![]);
    }
    let dim = cusp_dim(k);
    if dim == 0 {
        return Ok(vec![]);
    }
    if prec < dim {
        return Err(Error::InsufficientPrec {
            what: "cusp_basis prec below dimension".into(),
            needed: dim,
        });
    }
    let e4 = eisenstein(4, prec)?;
    let e6 = eisenstein(6, prec)?;
    let dlt = delta(prec);

    let mut raw: Vec<QExpansion> = Vec::with_capacity(dim);
    for j in 1..=dim as u32 {
        let w = k - 12 * j;
        // express the leftover weight as 4a + 6b with b in {0, 1}
        let (a, b) = if w % 4 == 0 {
            (w / 4, 0)
        } else {
            debug_assert!(w >= 6 && (w - 6) % 4 == 0);
            ((w - 6) / 4, 1)
        };
        let mut f = dlt.clone();
        for _ in 1..j {
            f = f.mul(&dlt);
        }
        for _ in 0..a {
            f = f.mul(&e4);
        }
        for _ in 0..b {
            f = f.mul(&e6);
        }
        debug_assert_eq!(f.weight, k);
        raw.push(f);
    }

    // exact Gauss elimination on the leading dim coefficients; pivots are
    // nonzero because Delta^j starts at q^j
    for i in 0..dim {
        let piv = raw[i].coeffs[i + 1].clone();
        debug_assert!(piv != 0);
        raw[i] = raw[i].scale(&piv.recip());
        for l in 0..dim {
            if l != i && raw[l].coeffs[i + 1] != 0 {
                let c = raw[l].coeffs[i + 1].clone();
                raw[l] = raw[l].sub(&raw[i].scale(&c));
            }
        }
    }
    Ok(raw)
}

/// Coefficient-form Hecke operator at level 1:
/// a_m(T_n f) = sum_{d | (m,n)} d^{k-1} a_{mn/d^2}.
pub fn hecke_apply(n: u64, f: &QExpansion) -> Result<QExpansion> {
    if n == 0 {
        return Err(Error::invalid("Hecke index must be positive".to_string()));
    }
    let out_prec = f.prec() / n as usize;
    if out_prec < 1 {
        return Err(Error::InsufficientPrec {
            what: format!("hecke_apply T_{n} needs source prec >= {n}"),
            needed: n as usize,
        });
    }
    let n_divs = factor(n).divisors();
    let mut coeffs = vec![Rational::new(); out_prec + 1];
    for (m, cm) in coeffs.iter_mut().enumerate().skip(1) {
        let mut acc = Rational::new();
        for &d in &n_divs {
            if m as u64 % d == 0 {
                let idx = (m as u64 / d) * (n / d);
                let dk = Integer::from(d).pow(f.weight - 1);
                acc += Rational::from((dk, Integer::from(1))) * &f.coeffs[idx as usize];
            }
        }
        *cm = acc;
    }
    Ok(QExpansion {
        weight: f.weight,
        level: f.level,
        coeffs,
    })
}

/// Slash-sum form of the Hecke operator, evaluated pointwise:
/// T_n f(z) = n^{k-1} sum_{ad=n, a>0} sum_{b=0}^{d-1} d^{-k} f((az+b)/d).
pub fn hecke_slash_eval(
    prec: &Precision,
    f: &QExpansion,
    n: u64,
    z: &Complex,
    tol: f64,
) -> Result<Approx> {
    if !z.imag().is_sign_positive() || z.imag().is_zero() {
        return Err(Error::domain("hecke_slash_eval", format!("Im z must be > 0, got {z}")));
    }
    let wb = prec.working();
    let k = f.weight;
    let mut total = Approx::zero(prec);
    for a in factor(n).divisors() {
        let d = n / a;
        let dk = Float::with_val(wb, d).pow(k as i64);
        for b in 0..d {
            let w = Complex::with_val(
                wb,
                (Complex::with_val(wb, z * &Float::with_val(wb, a))
                    + &Float::with_val(wb, b))
                    / &Float::with_val(wb, d),
            );
            let val = f.eval(prec, &w, tol / (n as f64 * dk.to_f64()))?;
            total = total.add(&val.mul_exact(&Complex::with_val(wb, dk.clone().recip())));
        }
    }
    let nk = Float::with_val(wb, n).pow(k as i64 - 1);
    Ok(total.mul_exact(&Complex::with_val(wb, nk)))
}

/// A normalized Hecke eigenform with floating coefficients (exact when
/// the eigenspace is one-dimensional and rational).
#[derive(Debug, Clone)]
pub struct Eigenform {
    pub weight: u32,
    pub level: u64,
    /// a_0 = 0, a_1 = 1; a_n = lambda_n at level 1.
    pub coeffs: Vec<Float>,
    /// absolute error bound on each coefficient, relative to n^{(k-1)/2}
    /// scale (0 for exact constructions)
    pub coeff_err: f64,
    /// exact expansion when available (dimension-1 spaces)
    pub exact: Option<QExpansion>,
}

impl Eigenform {
    pub fn prec(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Hecke eigenvalue lambda_n = a_n (a_1 = 1 normalization).
    pub fn lambda(&self, n: usize) -> &Float {
        &self.coeffs[n]
    }

    pub fn eval(&self, prec: &Precision, z: &Complex, tol: f64) -> Result<Approx> {
        let scale = ((self.prec() as f64).powf((self.weight as f64 - 1.0) / 2.0)).max(1.0);
        eval_series(prec, self.weight, &self.coeffs, self.coeff_err * scale, z, tol)
    }
}

/// The discriminant form as an eigenform, bypassing the echelon-basis
/// machinery; cheap enough for six-figure coefficient counts.
pub fn delta_eigenform(prec: &Precision, n_coeffs: usize) -> Eigenform {
    let wb = prec.working();
    let d = delta(n_coeffs);
    let coeffs: Vec<Float> = d.coeffs.iter().map(|c| Float::with_val(wb, c)).collect();
    Eigenform {
        weight: 12,
        level: 1,
        coeffs,
        coeff_err: 0.0,
        exact: Some(d),
    }
}

/// Real roots of a monic polynomial with rational coefficients, all of
/// whose roots are real and simple (characteristic polynomials of Hecke
/// operators on S_k(1)). Bracketing + bisection at working precision.
fn real_roots(prec: &Precision, poly: &[Rational], bound: f64) -> Vec<Float> {
    let wb = prec.working();
    let deg = poly.len() - 1;
    let eval = |x: &Float| -> Float {
        let mut acc = Float::new(wb);
        for c in poly.iter().rev() {
            acc = acc * x + Float::with_val(wb, c);
        }
        acc
    };
    // scan for sign changes on a fine grid
    let steps = 20_000usize;
    let mut brackets = Vec::new();
    let mut x_prev = Float::with_val(wb, -bound);
    let mut f_prev = eval(&x_prev);
    for i in 1..=steps {
        let x = Float::with_val(wb, -bound + 2.0 * bound * i as f64 / steps as f64);
        let fx = eval(&x);
        if (f_prev.is_sign_negative() && fx.is_sign_positive())
            || (f_prev.is_sign_positive() && fx.is_sign_negative())
        {
            brackets.push((x_prev.clone(), x.clone()));
        }
        x_prev = x;
        f_prev = fx;
    }
    debug_assert_eq!(brackets.len(), deg, "expected {deg} simple real roots");
    brackets
        .into_iter()
        .map(|(mut lo, mut hi)| {
            let neg_at_lo = eval(&lo).is_sign_negative();
            for _ in 0..(wb + 8) {
                let mid = Float::with_val(wb, &lo + &hi) / 2u32;
                if eval(&mid).is_sign_negative() == neg_at_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        })
        .collect()
}

/// Normalized simultaneous eigenforms of S_k(1). Dimension-1 spaces are
/// exact; larger spaces diagonalize T_2 in floating arithmetic with a
/// residual certificate on the eigenvector.
pub fn eigenforms(prec: &Precision, k: u32, n_coeffs: usize) -> Result<Vec<Eigenform>> {
    if k % 2 != 0 {
        return Err(Error::invalid(format!("weight must be even, got {k}")));
    }
    let dim = if k < 12 { 0 } else { cusp_dim(k) };
    if dim == 0 {
        return Ok(vec![]);
    }
    let need = n_coeffs.max(4 * dim + 8);
    let basis = cusp_basis(k, need)?;
    if dim == 1 {
        let f = &basis[0];
        let wb = prec.working();
        let coeffs: Vec<Float> = f.coeffs.iter().map(|c| Float::with_val(wb, c)).collect();
        return Ok(vec![Eigenform {
            weight: k,
            level: 1,
            coeffs,
            coeff_err: 0.0,
            exact: Some(f.clone()),
        }]);
    }

    // T_2 matrix in the Miller basis: column j is read off the first dim
    // coefficients of T_2(basis_j)
    let mut t2 = vec![vec![Rational::new(); dim]; dim];
    for (j, b) in basis.iter().enumerate() {
        let tb = hecke_apply(2, b)?;
        for i in 0..dim {
            t2[i][j] = tb.coeffs[i + 1].clone();
        }
    }
    // characteristic polynomial by exact expansion of det(xI - M)
    let poly = charpoly(&t2);
    let bound = 3.0 * (dim as f64 + 1.0) * 2f64.powf((k as f64 - 1.0) / 2.0) * 2.0;
    let roots = real_roots(prec, &poly, bound);
    let wb = prec.working();

    let mut out = Vec::with_capacity(dim);
    for lam in roots {
        // null vector of (T2 - lam I) by floating elimination
        let mut m: Vec<Vec<Float>> = t2
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, c)| {
                        let mut v = Float::with_val(wb, c);
                        if i == j {
                            v -= &lam;
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        let v = null_vector(wb, &mut m);
        // residual certificate ||T2 v - lam v|| <= 1e-20 ||v||
        let mut res_sq = Float::new(wb);
        let mut norm_sq = Float::new(wb);
        for i in 0..dim {
            let mut acc = Float::new(wb);
            for j in 0..dim {
                acc += Float::with_val(wb, &t2[i][j]) * &v[j];
            }
            acc -= Float::with_val(wb, &lam * &v[i]);
            res_sq += acc.square();
            norm_sq += v[i].clone().square();
        }
        let res = (res_sq.to_f64() / norm_sq.to_f64()).sqrt();
        if res > 1e-20 {
            return Err(Error::ToleranceUnachievable {
                what: format!("T_2 eigenvector residual at weight {k}"),
                tol: 1e-20,
                best: res,
            });
        }
        // combine: coefficients a_n = sum_i v_i b_i[n], normalized to a_1 = 1
        let v1 = v[0].clone();
        let mut coeffs = vec![Float::new(wb)];
        for n in 1..=need {
            let mut acc = Float::new(wb);
            for (i, b) in basis.iter().enumerate() {
                acc += Float::with_val(wb, &b.coeffs[n]) * &v[i];
            }
            acc /= &v1;
            coeffs.push(acc);
        }
        out.push(Eigenform {
            weight: k,
            level: 1,
            coeffs,
            coeff_err: res * 1e6 + 2f64.powi(-(wb as i32) + 8),
            exact: None,
        });
    }
    Ok(out)
}

/// det(xI - M) for a small rational matrix, by cofactor expansion on the
/// symbolic polynomial entries (dim <= ~5 in practice).
fn charpoly(m: &[Vec<Rational>]) -> Vec<Rational> {
    let dim = m.len();
    // polynomial entries p[i][j](x) = delta_ij x - m[i][j]
    type Poly = Vec<Rational>;
    fn p_mul(a: &Poly, b: &Poly) -> Poly {
        let mut out = vec![Rational::new(); a.len() + b.len() - 1];
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                out[i + j] += Rational::from(ai * bj);
            }
        }
        out
    }
    fn p_add_scaled(acc: &mut Poly, term: &Poly, sign: i32) {
        if acc.len() < term.len() {
            acc.resize(term.len(), Rational::new());
        }
        for (a, t) in acc.iter_mut().zip(term) {
            if sign > 0 {
                *a += t;
            } else {
                *a -= t;
            }
        }
    }
    fn det(entries: &[Vec<Poly>]) -> Poly {
        let n = entries.len();
        if n == 1 {
            return entries[0][0].clone();
        }
        let mut acc: Poly = vec![Rational::new()];
        for col in 0..n {
            let minor: Vec<Vec<Poly>> = entries[1..]
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|&(j, _)| j != col)
                        .map(|(_, p)| p.clone())
                        .collect()
                })
                .collect();
            let term = p_mul(&entries[0][col], &det(&minor));
            p_add_scaled(&mut acc, &term, if col % 2 == 0 { 1 } else { -1 });
        }
        acc
    }
    let entries: Vec<Vec<Poly>> = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| {
                    if i == j {
                        vec![-m[i][j].clone(), Rational::from(1)]
                    } else {
                        vec![-m[i][j].clone()]
                    }
                })
                .collect()
        })
        .collect();
    det(&entries)
}

/// A nonzero vector in the kernel of a (numerically singular) matrix.
fn null_vector(wb: u32, m: &mut [Vec<Float>]) -> Vec<Float> {
    let n = m.len();
    let mut pivot_col_of_row = vec![usize::MAX; n];
    let mut used_cols = vec![false; n];
    for row in 0..n {
        // largest available pivot in this row
        let mut best = (usize::MAX, 0.0f64);
        for col in 0..n {
            if !used_cols[col] {
                let mag = m[row][col].to_f64().abs();
                if mag > best.1 {
                    best = (col, mag);
                }
            }
        }
        let (col, mag) = best;
        if mag < 1e-18 {
            continue; // (near-)zero row: this is the rank deficiency
        }
        pivot_col_of_row[row] = col;
        used_cols[col] = true;
        let piv = m[row][col].clone();
        for r2 in 0..n {
            if r2 != row {
                let fac = Float::with_val(wb, &m[r2][col] / &piv);
                for c2 in 0..n {
                    let d = Float::with_val(wb, &m[row][c2] * &fac);
                    m[r2][c2] -= d;
                }
            }
        }
    }
    let free_col = (0..n).find(|&c| !used_cols[c]).expect("kernel is nonzero");
    let mut v = vec![Float::new(wb); n];
    v[free_col] = Float::with_val(wb, 1);
    for row in 0..n {
        let pc = pivot_col_of_row[row];
        if pc != usize::MAX {
            let val = -Float::with_val(wb, &m[row][free_col] / &m[row][pc]);
            v[pc] = val;
        }
    }
    v
}

/// A q-expansion with complex coefficients chi(n) a_n.
#[derive(Debug, Clone)]
pub struct TwistedQExpansion {
    pub weight: u32,
    pub coeffs: Vec<Complex>,
    pub coeff_err: f64,
}

/// Twist the coefficients: a_n -> chi(n) a_n.
pub fn twist_coeffs(
    prec: &Precision,
    f: &QExpansion,
    chi: &DirichletCharacter,
) -> TwistedQExpansion {
    let wb = prec.working();
    let coeffs = f
        .coeffs
        .iter()
        .enumerate()
        .map(|(n, a)| match chi.eval(n as i64) {
            Some(r) => Complex::with_val(wb, r.to_complex(prec) * Float::with_val(wb, a)),
            None => Complex::new(wb),
        })
        .collect();
    TwistedQExpansion {
        weight: f.weight,
        coeffs,
        coeff_err: 0.0,
    }
}

impl TwistedQExpansion {
    pub fn eval(&self, prec: &Precision, z: &Complex, tol: f64) -> Result<Approx> {
        let wb = prec.working();
        if !z.imag().is_sign_positive() || z.imag().is_zero() {
            return Err(Error::domain("eval_form", format!("Im z must be > 0, got {z}")));
        }
        // reuse the real-series machinery by splitting into magnitude data:
        // simplest is to inline the same loop with complex coefficients
        let m = self.coeffs.len() - 1;
        let y = z.imag().to_f64();
        let t = (-2.0 * std::f64::consts::PI * y).exp();
        let half_k = self.weight as f64 / 2.0;
        let rho = t * (1.0 + 1.0 / m as f64).powf(half_k);
        if rho >= 0.9 {
            return Err(Error::InsufficientPrec {
                what: "twisted eval tail".into(),
                needed: 2 * m,
            });
        }
        let tail = 2.0 * ((m + 1) as f64).powf(half_k) * t.powi(m as i32 + 1) / (1.0 - rho);
        if tail > tol {
            return Err(Error::InsufficientPrec {
                what: "twisted eval tail above tolerance".into(),
                needed: 2 * m,
            });
        }
        let two_pi = pi_float(prec) * 2u32;
        let q = Complex::with_val(wb, Complex::with_val(wb, (0, 1)) * z * &two_pi).exp();
        let mut qn = Complex::with_val(wb, 1);
        let mut sum = Complex::new(wb);
        for c in self.coeffs.iter().skip(1) {
            qn *= &q;
            sum += Complex::with_val(wb, &qn * c);
        }
        let mag = Float::with_val(64, sum.abs_ref()).to_f64().abs();
        let err = tail
            + self.coeff_err / (1.0 - t).max(0.1)
            + (mag + 1.0) * prec.ulp() * (m as f64 + 8.0);
        Ok(Approx::new(sum, err))
    }
}

/// Petersson norm squared of a level-1 eigenform over the standard
/// fundamental domain: the part above y = 1 by Fourier unfolding (the
/// x-integral is exact), the arc region below by 2D quadrature.
pub fn petersson_norm_sq(prec: &Precision, f: &Eigenform, tol: f64) -> Result<Approx> {
    if f.level != 1 {
        return Err(Error::invalid("Petersson quadrature requires level 1".to_string()));
    }
    let wb = prec.working();
    let k = f.weight;
    let four_pi = pi_float(prec) * 4u32;

    // Part 1: int_1^inf int_{-1/2}^{1/2} |h|^2 y^{k-2} dx dy
    //       = sum_n |a_n|^2 Gamma(k-1, 4 pi n) / (4 pi n)^{k-1}
    let mut part1 = Approx::zero(prec);
    let mut n = 1usize;
    loop {
        let x = Float::with_val(wb, &four_pi * &Float::with_val(wb, n as u64));
        let g = upper_incomplete_gamma(
            prec,
            &Complex::with_val(wb, k as i64 - 1),
            &x,
        )?;
        let denom = Float::with_val(wb, x.pow((k - 1) as i64));
        let an_sq = Float::with_val(wb, f.coeffs[n].square_ref());
        let term = g.mul_exact(&Complex::with_val(wb, an_sq / denom));
        let tmag = term.abs_f64().abs();
        part1 = part1.add(&term);
        // terms decay like e^{-4 pi n}; stop when negligible at target tol
        if tmag < 1e-30 * tol.min(1.0) && n >= 4 {
            // remaining tail below the last term by the e^{-4 pi} ratio
            part1 = part1.widen(tmag);
            break;
        }
        n += 1;
        if n > f.prec() {
            return Err(Error::InsufficientPrec {
                what: "petersson unfolding needs more coefficients".into(),
                needed: 2 * f.prec(),
            });
        }
    }
    // coefficient error contribution to part1 (only for floating forms)
    if f.coeff_err > 0.0 {
        part1 = part1.widen(f.coeff_err * 10.0);
    }

    // Part 2: arc region |x| <= 1/2, sqrt(1-x^2) <= y <= 1
    let arc = arc_integral(prec, f, 10, 16, tol)?;
    let arc_fine = arc_integral(prec, f, 20, 20, tol)?;
    let q_err = arc.sub(&arc_fine).abs_f64() * 2.0;
    let total = part1.add(&arc_fine).widen(q_err);
    if total.err > tol * total.abs_f64().max(1e-300) {
        return Err(Error::ToleranceUnachievable {
            what: "petersson_norm_sq quadrature".into(),
            tol,
            best: total.err / total.abs_f64().max(1e-300),
        });
    }
    Ok(total)
}

fn arc_integral(
    prec: &Precision,
    f: &Eigenform,
    panels: usize,
    nodes: usize,
    tol: f64,
) -> Result<Approx> {
    let wb = prec.working();
    let k = f.weight;
    let gl = crate::specfun::gauss_legendre(wb, nodes);
    let mut total = Float::new(wb);
    let mut err = 0.0f64;
    let half = Float::with_val(wb, 0.5);
    for px in 0..panels {
        // x in [-1/2, 1/2] split into `panels` pieces
        let xa = Float::with_val(wb, px as u32) / Float::with_val(wb, panels as u32) - &half;
        let xw = Float::with_val(wb, 1) / Float::with_val(wb, panels as u32);
        let xh = Float::with_val(wb, &xw / &Float::with_val(wb, 2));
        let xm = Float::with_val(wb, &xa + &xh);
        for (xi, wi) in &gl {
            let x = Float::with_val(wb, &xm + Float::with_val(wb, &xh * xi));
            let ylow = Float::with_val(wb, 1u32 - Float::with_val(wb, x.square_ref())).sqrt();
            let yh = Float::with_val(wb, Float::with_val(wb, 1u32 - &ylow) / 2u32);
            if yh.is_zero() || yh.is_sign_negative() {
                continue;
            }
            let ym = Float::with_val(wb, &ylow + &yh);
            let mut inner = Float::new(wb);
            for (yi, wyi) in &gl {
                let y = Float::with_val(wb, &ym + Float::with_val(wb, &yh * yi));
                let z = Complex::with_val(wb, (&x, &y));
                let hv = f.eval(prec, &z, tol * 1e-6)?;
                let habs2 = Float::with_val(wb, hv.value.abs_ref()).square();
                let weight = Float::with_val(wb, y.pow(k as i64 - 2));
                inner += habs2 * weight * Float::with_val(wb, wyi);
                err += 2.0 * hv.abs_f64() * hv.err;
            }
            total += inner * yh * Float::with_val(wb, &xh * wi);
        }
    }
    Ok(Approx::new(
        Complex::with_val(wb, (&total, &Float::new(wb))),
        err / (panels * nodes) as f64 + total.to_f64().abs() * prec.ulp() * 100.0,
    ))
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eisenstein_coefficients() {
        let e4 = eisenstein(4, 10).unwrap();
        assert_eq!(e4.coeffs[0], 1);
        assert_eq!(e4.coeffs[1], 240);
        assert_eq!(e4.coeffs[2], 240 * 9); // sigma_3(2) = 9
        let e6 = eisenstein(6, 10).unwrap();
        assert_eq!(e6.coeffs[0], 1);
        assert_eq!(e6.coeffs[1], -504);
        assert_eq!(e6.coeffs[2], -504 * 33); // sigma_5(2) = 33
        assert!(eisenstein(8, 10).is_err());
    }

    #[test]
    fn delta_matches_e4_e6_product() {
        // Delta = (E4^3 - E6^2) / 1728
        let n = 60;
        let e4 = eisenstein(4, n).unwrap();
        let e6 = eisenstein(6, n).unwrap();
        let alt = e4
            .mul(&e4)
            .mul(&e4)
            .sub(&e6.mul(&e6))
            .scale(&Rational::from((1, 1728)));
        let d = delta(n);
        assert_eq!(d.coeffs, alt.coeffs);
        assert_eq!(d.coeffs[1], 1);
        assert_eq!(d.coeffs[2], -24);
        assert_eq!(d.coeffs[3], 252);
        assert_eq!(d.coeffs[4], -1472);
    }

    #[test]
    fn delta_large_prec_spot_checks() {
        let d = delta(5000);
        // tau is multiplicative: tau(6) = tau(2) tau(3)
        assert_eq!(
            d.coeffs[6],
            Rational::from(&d.coeffs[2] * &d.coeffs[3])
        );
        // tau(4) = tau(2)^2 - 2^11
        assert_eq!(
            d.coeffs[4],
            Rational::from(&d.coeffs[2] * &d.coeffs[2]) - Rational::from(2048)
        );
        assert_eq!(
            d.coeffs[4999],
            Rational::from(&d.coeffs[4999 / 1] * &Rational::from(1))
        );
    }

    #[test]
    fn basis_dimensions() {
        assert_eq!(cusp_basis(10, 30).unwrap().len(), 0);
        assert_eq!(cusp_basis(14, 30).unwrap().len(), 0);
        assert_eq!(cusp_basis(12, 30).unwrap().len(), 1);
        assert_eq!(cusp_basis(24, 30).unwrap().len(), 2);
        assert_eq!(cusp_basis(26, 30).unwrap().len(), 1);
        assert!(cusp_basis(13, 30).is_err());
    }

    #[test]
    fn basis_echelon_shape() {
        let b = cusp_basis(24, 30).unwrap();
        assert_eq!(b[0].coeffs[1], 1);
        assert_eq!(b[0].coeffs[2], 0);
        assert_eq!(b[1].coeffs[1], 0);
        assert_eq!(b[1].coeffs[2], 1);
        let d = cusp_basis(12, 30).unwrap();
        assert_eq!(d[0].coeffs[1], 1);
        assert_eq!(d[0].coeffs[2], -24);
        assert_eq!(d[0].coeffs[3], 252);
    }

    #[test]
    fn hecke_t2_on_delta() {
        let d = delta(40);
        let td = hecke_apply(2, &d).unwrap();
        for m in 1..=td.prec() {
            assert_eq!(
                td.coeffs[m],
                Rational::from(&d.coeffs[m] * &Rational::from(-24)),
                "m={m}"
            );
        }
        let t1 = hecke_apply(1, &d).unwrap();
        assert_eq!(t1.coeffs, d.coeffs);
    }

    #[test]
    fn hecke_composition_coprime() {
        let d = delta(60);
        let t6 = hecke_apply(6, &d).unwrap();
        let t2t3 = hecke_apply(2, &hecke_apply(3, &d).unwrap()).unwrap();
        for m in 1..=t6.prec().min(t2t3.prec()) {
            assert_eq!(t6.coeffs[m], t2t3.coeffs[m], "m={m}");
        }
        assert!(hecke_apply(100, &delta(50)).is_err());
    }

    #[test]
    fn hecke_multiplicativity_small_primes() {
        let prec = Precision::default();
        let eig = &eigenforms(&prec, 16, 200).unwrap()[0];
        let ex = eig.exact.as_ref().unwrap();
        for (p, q) in [(2u64, 3u64), (3, 5), (5, 7), (7, 11), (11, 13)] {
            let lpq = &ex.coeffs[(p * q) as usize];
            let lp = &ex.coeffs[p as usize];
            let lq = &ex.coeffs[q as usize];
            assert_eq!(*lpq, Rational::from(lp * lq), "p={p} q={q}");
        }
        for p in [2u64, 3, 5, 7, 11, 13] {
            let lp2 = &ex.coeffs[(p * p) as usize];
            let lp = &ex.coeffs[p as usize];
            let expect =
                Rational::from(lp * lp) - Rational::from(Integer::from(p).pow(15));
            assert_eq!(*lp2, expect, "p={p}");
        }
    }

    #[test]
    fn eigenforms_dim_one() {
        let prec = Precision::default();
        let e12 = eigenforms(&prec, 12, 60).unwrap();
        assert_eq!(e12.len(), 1);
        assert_eq!(e12[0].lambda(2).to_f64(), -24.0);
        assert_eq!(e12[0].lambda(3).to_f64(), 252.0);
        assert_eq!(e12[0].lambda(4).to_f64(), -1472.0);
        let e16 = eigenforms(&prec, 16, 60).unwrap();
        assert_eq!(e16.len(), 1);
        assert_eq!(e16[0].lambda(2).to_f64(), 216.0);
        assert!(eigenforms(&prec, 10, 60).unwrap().is_empty());
    }

    #[test]
    fn eigenforms_dim_two_trace() {
        let prec = Precision::default();
        let e24 = eigenforms(&prec, 24, 60).unwrap();
        assert_eq!(e24.len(), 2);
        // trace of T_2 on S_24(1) equals the sum of the two lambda_2
        let basis = cusp_basis(24, 30).unwrap();
        let mut trace = Rational::new();
        for (j, b) in basis.iter().enumerate() {
            let tb = hecke_apply(2, b).unwrap();
            trace += &tb.coeffs[j + 1];
        }
        let wb = prec.working();
        let sum_lam = Float::with_val(wb, e24[0].lambda(2) + e24[1].lambda(2));
        let gap = Float::with_val(wb, &sum_lam - &Float::with_val(wb, &trace))
            .abs()
            .to_f64();
        assert!(gap < 1e-30, "trace gap {gap}");
        // a_1 = 1 and Hecke relation lambda_4 = lambda_2^2 - 2^23
        for e in &e24 {
            assert_eq!(e.lambda(1).to_f64(), 1.0);
            let resid =
                e.lambda(4).to_f64() - (e.lambda(2).to_f64().powi(2) - 2f64.powi(23));
            assert!(resid.abs() < 1e-6 * 2f64.powi(23));
        }
    }

    #[test]
    fn slash_vs_coefficient_hecke() {
        let prec = Precision::default();
        let d = delta(200);
        let pts = [
            (0.1, 0.9),
            (0.0, 0.8),
            (0.31, 1.2),
            (-0.27, 0.95),
            (0.45, 1.7),
        ];
        for n in [2u64, 3, 4] {
            let td = hecke_apply(n, &d).unwrap();
            for &(x, y) in &pts {
                let z = Complex::with_val(prec.working(), (x, y));
                let direct = hecke_slash_eval(&prec, &d, n, &z, 1e-30).unwrap();
                let coeffw = td.eval(&prec, &z, 1e-30).unwrap();
                let rel = direct.sub(&coeffw).abs_f64() / coeffw.abs_f64().max(1e-30);
                assert!(rel < 1e-12, "n={n} z=({x},{y}) rel={rel}");
            }
        }
        let bad = Complex::with_val(prec.working(), (0.3, -1.0));
        assert!(hecke_slash_eval(&prec, &d, 2, &bad, 1e-20).is_err());
    }

    #[test]
    fn eval_form_basics() {
        let prec = Precision::default();
        let d = delta(120);
        // Delta(iy) real and positive at y = 1
        let zi = Complex::with_val(prec.working(), (0.0, 1.0));
        let v = d.eval(&prec, &zi, 1e-30).unwrap();
        assert!(v.im_f64().abs() < 1e-35);
        assert!(v.re_f64() > 0.0);
        // dominated by the first term e^{-2 pi}
        assert!((v.re_f64() - (-2.0 * std::f64::consts::PI).exp()).abs() < 0.001);
        // period 1 in x
        let z1 = Complex::with_val(prec.working(), (0.2, 0.9));
        let z2 = Complex::with_val(prec.working(), &z1 + &Float::with_val(prec.working(), 1));
        let a = d.eval(&prec, &z1, 1e-30).unwrap();
        let b = d.eval(&prec, &z2, 1e-30).unwrap();
        assert!(a.sub(&b).abs_f64() < 1e-30);
        // rejection below the real axis and for unreachable tolerance
        assert!(d
            .eval(&prec, &Complex::with_val(prec.working(), (0.0, -1.0)), 1e-10)
            .is_err());
        let tiny = delta(5);
        assert!(tiny
            .eval(&prec, &Complex::with_val(prec.working(), (0.0, 0.05)), 1e-10)
            .is_err());
    }

    #[test]
    fn twist_basics() {
        let prec = Precision::default();
        let d = delta(80);
        let trivial = DirichletCharacter::trivial();
        let t = twist_coeffs(&prec, &d, &trivial);
        for n in 1..=10 {
            let expect = Float::with_val(prec.working(), &d.coeffs[n]);
            let diff = Complex::with_val(prec.working(), &t.coeffs[n] - &expect);
            assert!(Float::with_val(64, diff.abs_ref()).to_f64() < 1e-38);
        }
        let chi4 = &DirichletCharacter::enumerate_primitive(4)[0];
        let t4 = twist_coeffs(&prec, &d, chi4);
        assert!(Float::with_val(64, t4.coeffs[2].abs_ref()).to_f64() == 0.0);
        assert!(Float::with_val(64, t4.coeffs[6].abs_ref()).to_f64() == 0.0);
    }

    #[test]
    fn twist_two_route_identity() {
        // h_chi(z) = (1/tau(chibar)) sum_{m mod D} chibar(m) h(z + m/D)
        let prec = Precision::default();
        let d = delta(150);
        for dd in 1..=12u64 {
            for chi in DirichletCharacter::enumerate_primitive(dd) {
                let z = Complex::with_val(prec.working(), (0.13, 0.77));
                let twisted = twist_coeffs(&prec, &d, &chi);
                let lhs = twisted.eval(&prec, &z, 1e-25).unwrap();
                let chibar = chi.conjugate();
                let tau_bar = chibar.gauss_sum(&prec);
                let mut acc = Approx::zero(&prec);
                for m in 0..dd {
                    if let Some(v) = chibar.eval(m as i64) {
                        let zm = Complex::with_val(
                            prec.working(),
                            &z + &Float::with_val(
                                prec.working(),
                                Rational::from((m, dd)),
                            ),
                        );
                        let hv = d.eval(&prec, &zm, 1e-25).unwrap();
                        acc = acc.add(&hv.mul_exact(&v.to_complex(&prec)));
                    }
                }
                let rhs = acc.div(&tau_bar);
                let diff = lhs.sub(&rhs).abs_f64();
                assert!(
                    diff < 1e-15,
                    "D={dd} chi={} diff={diff}",
                    chi.label_string()
                );
            }
        }
    }

    #[test]
    fn petersson_delta() {
        let prec = Precision::default();
        let eig = &eigenforms(&prec, 12, 120).unwrap()[0];
        let norm = petersson_norm_sq(&prec, eig, 1e-8).unwrap();
        // frozen from an independent higher-precision quadrature
        let reference = 1.0353620568043209e-6;
        assert!(
            (norm.re_f64() - reference).abs() < 1e-13,
            "got {} want {reference}",
            norm.re_f64()
        );
        assert!(norm.re_f64() > 0.0);
        assert!(norm.im_f64().abs() < 1e-30);
    }

    #[test]
    fn petersson_scaling_and_k16() {
        let prec = Precision::default();
        let eig = &eigenforms(&prec, 12, 120).unwrap()[0];
        let norm = petersson_norm_sq(&prec, eig, 1e-8).unwrap();
        // ||2 Delta||^2 = 4 ||Delta||^2
        let mut doubled = eig.clone();
        for c in doubled.coeffs.iter_mut() {
            *c *= 2u32;
        }
        let norm2 = petersson_norm_sq(&prec, &doubled, 1e-8).unwrap();
        let ratio = norm2.re_f64() / norm.re_f64();
        assert!((ratio - 4.0).abs() < 1e-10);

        let e16 = &eigenforms(&prec, 16, 120).unwrap()[0];
        let n16 = petersson_norm_sq(&prec, e16, 1e-8).unwrap();
        assert!(n16.re_f64() > 0.0);
    }
}
