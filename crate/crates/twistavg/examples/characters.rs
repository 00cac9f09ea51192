//! Dirichlet characters as exact roots of unity: enumeration of primitive
//! characters, conductors, parity, and Gauss sums checked against |tau|^2 = D.

use twistavg::chars::DirichletCharacter;
use twistavg::prec::Precision;

fn main() {
    let prec = Precision::new(96);
    for modulus in [3u64, 4, 5, 7, 8, 12] {
        let prims = DirichletCharacter::enumerate_primitive(modulus);
        println!("modulus {modulus}: {} primitive character(s)", prims.len());
        for chi in prims {
            let parity = match chi.eval(-1).and_then(|v| v.as_sign()) {
                Some(1) => "even",
                Some(-1) => "odd",
                _ => "?",
            };
            let tau = chi.gauss_sum(&prec);
            let tau_abs2 = tau.abs_f64().powi(2);
            println!(
                "  {}  {parity:4}  order {}  tau = {:+.6} {:+.6}i  |tau|^2 = {:.6} (D = {modulus})",
                chi.label_string(),
                (1..=2 * modulus)
                    .find(|&o| (0..modulus).all(|m| chi
                        .eval(m as i64)
                        .map_or(true, |v| v.pow(o as i64).is_one())))
                    .unwrap_or(0),
                tau.re_f64(),
                tau.im_f64(),
                tau_abs2,
            );
        }
    }
}
