//! Acceptance gate: one test per criterion, one printed pass/fail line each.
//! Every tolerance is pinned here, not computed.

use rug::{Complex, Float};
use twistavg::chars::{factor, DirichletCharacter, RootOfUnity};
use twistavg::geometry::{
    e_bound, e_sum, identity_term, local_orbital_factor, q_ratio, weyl_term, GeomConfig,
    OrbitalKind,
};
use twistavg::harness::{verify_identity, RunConfig};
use twistavg::lfun::{fe_residual, LParams};
use twistavg::prec::{i_pow, real_pow_complex, Approx, Precision};
use twistavg::specfun::{beta, one_f_one_quadrature, one_f_one_series};

fn report(tag: &str, pass: bool, detail: &str) {
    println!("{tag} {}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{tag}: {detail}");
}

fn run_cfg(k: u32, chi: &str, r: u64, n: u64, s: &str, ca: u64, cd: u64, tol: f64) -> RunConfig {
    RunConfig {
        k,
        level: 1,
        chi: chi.into(),
        psi: None,
        r,
        n,
        s: s.into(),
        cutoff_a: ca,
        cutoff_d: cd,
        prec: 128,
        tol,
    }
}

fn residual_rel(cfg: &RunConfig) -> (f64, f64) {
    let rep = verify_identity(cfg).unwrap();
    let res: f64 = rep.residual.as_deref().unwrap().parse().unwrap();
    let idt: f64 = rep.identity.re.parse::<f64>().unwrap().hypot(rep.identity.im.parse().unwrap());
    (res / idt, res)
}

#[test]
fn ac01_theorem_real_s() {
    let t0 = std::time::Instant::now();
    let cfg = run_cfg(12, "4:1", 1, 1, "9", 10_000, 1_000, 1e-6);
    let (rel, res) = residual_rel(&cfg);
    let secs = t0.elapsed().as_secs();
    report(
        "AC1",
        rel <= 1e-6 && secs <= 300,
        &format!("k=12 D=4 s=9: residual {res:.3e} (rel {rel:.3e} <= 1e-6), {secs}s <= 300s"),
    );
}

#[test]
fn ac02_theorem_central_point() {
    let cfg = run_cfg(12, "4:1", 1, 1, "6", 10_000, 1_000, 1e-6);
    let (rel, res) = residual_rel(&cfg);
    report(
        "AC2",
        rel <= 1e-6,
        &format!("k=12 D=4 s=k/2=6: residual {res:.3e} (rel {rel:.3e} <= 1e-6)"),
    );
}

#[test]
fn ac03_theorem_complex_s() {
    let cfg = run_cfg(16, "5:1", 2, 3, "8.5+2i", 1_500, 300, 1e-5);
    let (rel, res) = residual_rel(&cfg);
    report(
        "AC3",
        rel <= 1e-5,
        &format!("k=16 D=5 r=2 n=3 s=8.5+2i: residual {res:.3e} (rel {rel:.3e} <= 1e-5)"),
    );
}

#[test]
fn ac04_gcd_structure() {
    let cfg = run_cfg(12, "3:1", 2, 2, "9", 30_000, 100, 1e-5);
    let two_terms = factor(2).divisors().len() == 2;
    let (rel, res) = residual_rel(&cfg);
    report(
        "AC4",
        rel <= 1e-5 && two_terms,
        &format!("k=12 D=3 r=n=2 s=9: residual {res:.3e} (rel {rel:.3e} <= 1e-5), two divisor terms"),
    );
}

#[test]
fn ac05_null_weight_ten() {
    let prec = Precision::new(128);
    let wb = prec.working();
    // reference magnitude: identity term of the AC1 configuration
    let chi = DirichletCharacter::parse_label("4:1").unwrap();
    let mk = |k: u32, s: i32| {
        GeomConfig::new(
            k,
            1,
            DirichletCharacter::trivial(),
            chi.clone(),
            1,
            1,
            Complex::with_val(wb, s),
        )
        .unwrap()
    };
    let refmag = identity_term(&prec, &mk(12, 9)).unwrap().abs_f64();
    let g = mk(10, 7);
    let idt = identity_term(&prec, &g).unwrap();
    let wey = weyl_term(&prec, &g).unwrap();
    let (ev, _tail) = e_sum(&prec, &g, 4_000, 400).unwrap();
    let rhs = idt.add(&wey).add(&ev).abs_f64();
    // spectral side: no cusp forms of weight 10
    let sc = twistavg::lfun::SpectralConfig::new(10, chi.clone(), 1, 1, Complex::with_val(wb, 7))
        .unwrap();
    let spec = twistavg::lfun::spectral_side(&prec, &sc, 1e-12).unwrap();
    let limit = 1e-6 * refmag;
    report(
        "AC5",
        spec.abs_f64() == 0.0 && rhs <= limit,
        &format!("k=10: spectral exactly 0, |I+W+E| = {rhs:.3e} <= {limit:.3e}"),
    );
}

#[test]
fn ac06_functional_equation() {
    let prec = Precision::new(128);
    let wb = prec.working();
    let form = twistavg::forms::delta_eigenform(&prec, 40_000);
    let chi = DirichletCharacter::parse_label("4:1").unwrap();
    let mut worst = 0.0f64;
    for sv in [6.0, 7.3, 9.0] {
        let s = Complex::with_val(wb, Float::with_val(wb, sv));
        let p = LParams::new(&form, &chi, s).unwrap();
        let (res, _err) = fe_residual(&prec, &p).unwrap();
        worst = worst.max(res);
    }
    report(
        "AC6",
        worst <= 1e-8,
        &format!("fe residual for Delta, chi mod 4, s in {{6, 7.3, 9}}: worst {worst:.3e} <= 1e-8"),
    );
}

#[test]
fn ac07_error_bound_envelope() {
    let prec = Precision::new(128);
    let wb = prec.working();
    let configs: [(u32, &str, u64, u64, (f64, f64)); 4] = [
        (12, "4:1", 1, 1, (9.0, 0.0)),
        (12, "4:1", 1, 1, (6.0, 0.0)),
        (16, "5:1", 2, 3, (8.5, 2.0)),
        (12, "3:1", 2, 2, (9.0, 0.0)),
    ];
    let mut ok = true;
    let mut detail = String::new();
    for (k, label, r, n, (re, im)) in configs {
        let chi = DirichletCharacter::parse_label(label).unwrap();
        let s = Complex::with_val(wb, (Float::with_val(wb, re), Float::with_val(wb, im)));
        let g = GeomConfig::new(k, 1, DirichletCharacter::trivial(), chi, r, n, s).unwrap();
        let (ev, tail) = e_sum(&prec, &g, 200, 50).unwrap();
        let envelope = e_bound(&g).unwrap();
        let lhs = ev.abs_f64() + tail;
        ok &= lhs <= envelope;
        detail.push_str(&format!(" [k={k} D={label}: {lhs:.2e} <= {envelope:.2e}]"));
    }
    report("AC7", ok, &format!("|E|+tail within closed-form bound:{detail}"));
}

struct Rng(u64);
impl Rng {
    fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }
    fn pick(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

#[test]
fn ac08_local_global() {
    let prec = Precision::new(128);
    let wb = prec.working();
    let labels = ["1:", "3:1", "4:1", "5:1", "5:2"];
    let mut rng = Rng(0x9e3779b97f4a7c15);
    let mut done = 0;
    let mut worst = 0.0f64;
    while done < 10 {
        let label = labels[rng.pick(labels.len() as u64) as usize];
        let chi = DirichletCharacter::parse_label(label).unwrap();
        let k = 12 + 4 * rng.pick(3) as u32;
        let level = [1u64, 2, 7][rng.pick(3) as usize];
        let r = 1 + rng.pick(6);
        let n = 1 + rng.pick(6);
        let sr = 4.0 + rng.pick(50) as f64 / 10.0;
        let si = rng.pick(30) as f64 / 10.0 - 1.5;
        let s = Complex::with_val(wb, (Float::with_val(wb, sr), Float::with_val(wb, si)));
        let g = match GeomConfig::new(k, level, DirichletCharacter::trivial(), chi, r, n, s) {
            Ok(g) => g,
            Err(_) => continue,
        };
        if sr >= k as f64 - 1.0 {
            continue;
        }
        // identity: global closed form vs product of local factors
        let global_i = {
            let mut dsum = Approx::zero(&prec);
            for d in factor(twistavg::chars::gcd_i(g.r as i64, g.n)).divisors() {
                if let Some(v) = g.chi.eval((g.r * g.n / (d * d)) as i64) {
                    let e = Complex::with_val(wb, Complex::with_val(wb, &g.s * 2u32) - (k as i64 - 1));
                    let dp = real_pow_complex(&prec, &Float::with_val(wb, d), &e);
                    dsum = dsum.add(&Approx::new(
                        Complex::with_val(wb, dp * v.to_complex(&prec)),
                        1e-35,
                    ));
                }
            }
            let e = Complex::with_val(wb, Complex::with_val(wb, (k as f64) / 2.0) - &g.s);
            let npow = real_pow_complex(&prec, &Float::with_val(wb, g.n), &e);
            dsum.mul_exact(&npow).mul_exact(&Complex::with_val(wb, g.nu()))
        };
        let mut local_i = Approx::exact(Complex::with_val(wb, 1));
        let mut ps: Vec<u64> = vec![];
        for m in [g.r, g.n, g.level, g.chi.modulus] {
            for &(p, _) in &factor(m).factors {
                if !ps.contains(&p) {
                    ps.push(p);
                }
            }
        }
        for &p in &ps {
            local_i = local_i.mul(&local_orbital_factor(&prec, p, OrbitalKind::Identity, &g).unwrap());
        }
        let gap_i = global_i.sub(&local_i).abs_f64() / global_i.abs_f64().max(1e-30);
        worst = worst.max(gap_i);
        // weyl: only meaningful at level 1
        if g.level == 1 {
            let global_w = {
                let mut dsum = Approx::zero(&prec);
                for d in factor(twistavg::chars::gcd_i(g.r as i64, g.n)).divisors() {
                    if let Some(v) = g.chi.eval((g.r * g.n / (d * d)) as i64) {
                        let e = Complex::with_val(
                            wb,
                            Complex::with_val(wb, (k as i64) + 1) - Complex::with_val(wb, &g.s * 2u32),
                        );
                        let dp = real_pow_complex(&prec, &Float::with_val(wb, d), &e);
                        dsum = dsum.add(&Approx::new(
                            Complex::with_val(wb, dp * v.conj().to_complex(&prec)),
                            1e-35,
                        ));
                    }
                }
                let en = Complex::with_val(wb, &g.s - Complex::with_val(wb, (k as f64) / 2.0));
                let npow = real_pow_complex(&prec, &Float::with_val(wb, g.n), &en);
                let ed = Complex::with_val(
                    wb,
                    Complex::with_val(wb, k as i64) - Complex::with_val(wb, &g.s * 2u32),
                );
                let dpow = real_pow_complex(&prec, &Float::with_val(wb, g.chi.modulus), &ed);
                let tau = g.chi.gauss_sum(&prec);
                let tau_bar = g.chi.conjugate().gauss_sum(&prec);
                let sign = g.chi.eval(-1).unwrap().to_complex(&prec);
                dsum.mul_exact(&npow)
                    .mul_exact(&dpow)
                    .mul(&tau)
                    .div(&tau_bar.mul_exact(&sign))
            };
            let mut local_w = Approx::exact(Complex::with_val(wb, 1));
            for &p in &ps {
                local_w = local_w.mul(&local_orbital_factor(&prec, p, OrbitalKind::Weyl, &g).unwrap());
            }
            let gap_w = global_w.sub(&local_w).abs_f64() / global_w.abs_f64().max(1e-30);
            worst = worst.max(gap_w);
        }
        done += 1;
    }
    report(
        "AC8",
        worst <= 1e-12,
        &format!("10 randomized configs: worst local-global gap {worst:.3e} <= 1e-12"),
    );
}

#[test]
fn ac09_mirror_identity() {
    let prec = Precision::new(128);
    let wb = prec.working();
    let mut rng = Rng(0x243f6a8885a308d3);
    let labels = [("3:1", 2, 2), ("4:1", 3, 3), ("5:1", 2, 2), ("7:2", 3, 3), ("8:0,1", 3, 3)];
    let mut worst = 0.0f64;
    for i in 0..5 {
        let (label, r, n) = labels[i];
        let chi = DirichletCharacter::parse_label(label).unwrap();
        let k = 12u32;
        let sr = 3.0 + rng.pick(60) as f64 / 10.0;
        let si = rng.pick(40) as f64 / 10.0 - 2.0;
        let s = Complex::with_val(wb, (Float::with_val(wb, sr), Float::with_val(wb, si)));
        let g = GeomConfig::new(k, 1, DirichletCharacter::trivial(), chi, r, n, s).unwrap();
        let w = weyl_term(&prec, &g).unwrap();
        let ks = Complex::with_val(wb, Complex::with_val(wb, k) - &g.s);
        let gm = GeomConfig::new(
            k,
            1,
            DirichletCharacter::trivial(),
            g.chi.conjugate(),
            g.r,
            g.n,
            ks,
        )
        .unwrap();
        let idm = identity_term(&prec, &gm).unwrap();
        let tau = g.chi.gauss_sum(&prec);
        let eps = {
            let e = Complex::with_val(
                wb,
                Complex::with_val(wb, &g.s * 2u32) - (k as i64 - 1),
            );
            let dp = real_pow_complex(
                &prec,
                &Float::with_val(wb, g.chi.modulus),
                &Complex::with_val(wb, -e),
            );
            Complex::with_val(wb, dp * i_pow(&prec, k))
        };
        let want = tau.mul(&tau).mul_exact(&eps).mul(&idm);
        let gap = w.sub(&want).abs_f64() / w.abs_f64().max(1e-30);
        worst = worst.max(gap);
    }
    report(
        "AC9",
        worst <= 1e-10,
        &format!("Weyl term mirrors identity term at (k-s, conj chi): worst gap {worst:.3e} <= 1e-10"),
    );
}

#[test]
fn ac10_one_f_one() {
    let prec = Precision::new(128);
    let wb = prec.working();
    let mut worst = 0.0f64;
    for k in [12u32, 16, 20] {
        for sv in [2.0, k as f64 / 2.0, k as f64 - 2.0] {
            for x in [-7.5f64, -1.0, -0.1, 0.3, 2.0, 7.9] {
                let s = Complex::with_val(wb, Float::with_val(wb, sv));
                let w = Complex::with_val(
                    wb,
                    (Float::new(wb), Float::with_val(wb, 2.0 * std::f64::consts::PI * x)),
                );
                let a = one_f_one_series(&prec, &s, k, &w).unwrap();
                let b = one_f_one_quadrature(&prec, &s, k, &w).unwrap();
                let gap = a.sub(&b).abs_f64() / a.abs_f64().max(1e-30);
                worst = worst.max(gap);
            }
        }
    }
    // bound check: |1f1 * B| never exceeds B(sigma, k - sigma) for real w
    let mut bound_ok = true;
    for k in [12u32, 16] {
        for sv in [1.0, 3.5, k as f64 / 2.0, k as f64 - 1.0] {
            let s = Complex::with_val(wb, Float::with_val(wb, sv));
            let bv = beta(&prec, &s, &Complex::with_val(wb, (k as i64) - &s))
                .unwrap()
                .abs_f64();
            for x in [-20.0f64, -3.0, -0.5, 0.0, 0.5, 3.0, 20.0] {
                let w = Complex::with_val(
                    wb,
                    (Float::new(wb), Float::with_val(wb, 2.0 * std::f64::consts::PI * x)),
                );
                let v = one_f_one_series(&prec, &s, k, &w).unwrap().abs_f64();
                bound_ok &= v <= bv * (1.0 + 1e-25);
            }
        }
    }
    report(
        "AC10",
        worst <= 1e-10 && bound_ok,
        &format!("series/quadrature worst gap {worst:.3e} <= 1e-10; envelope bound held"),
    );
}

#[test]
fn ac11_decay_in_level() {
    let prec = Precision::new(128);
    let wb = prec.working();
    let mut last = f64::INFINITY;
    let mut vals = Vec::new();
    let mut ok = true;
    for level in [2u64, 4, 8, 16] {
        let chi = DirichletCharacter::parse_label("1:").unwrap();
        let g = GeomConfig::new(
            12,
            level,
            DirichletCharacter::trivial(),
            chi,
            1,
            1,
            Complex::with_val(wb, 9),
        )
        .unwrap();
        let q = q_ratio(&prec, &g, 60, 16).unwrap();
        ok &= q < last;
        last = q;
        vals.push(format!("N={level}: {q:.3e}"));
    }
    report(
        "AC11",
        ok,
        &format!("q_ratio strictly decreasing [{}]", vals.join(", ")),
    );
}

#[test]
fn ac12_untwisted_regression() {
    let chi = DirichletCharacter::parse_label("1:").unwrap();
    let prec = Precision::new(128);
    let tau = chi.gauss_sum(&prec);
    let exact_one = tau.err == 0.0
        && tau.value == Complex::with_val(prec.working(), 1)
        && chi.eval(5) == Some(RootOfUnity::one());
    let cfg = run_cfg(12, "1:", 1, 1, "9", 10_000, 1_000, 1e-6);
    let (rel, res) = residual_rel(&cfg);
    report(
        "AC12",
        rel <= 1e-6 && exact_one,
        &format!("D=1 trivial chi: residual {res:.3e} (rel {rel:.3e} <= 1e-6), Gauss sum exactly 1"),
    );
}
