//! Local-global structure of the identity and Weyl terms: the product of
//! per-prime orbital factors reproduces the global divisor-sum closed form.

use rug::{Complex, Float};
use twistavg::chars::{factor, DirichletCharacter};
use twistavg::geometry::{identity_term, local_orbital_factor, GeomConfig, OrbitalKind};
use twistavg::prec::{Approx, Precision};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let prec = Precision::new(96);
    let wb = prec.working();
    let chi = DirichletCharacter::parse_label("5:1")?;
    let s = Complex::with_val(wb, (Float::with_val(wb, 8), Float::with_val(wb, 1)));
    let g = GeomConfig::new(12, 1, DirichletCharacter::trivial(), chi, 6, 6, s)?;

    let mut primes: Vec<u64> = vec![];
    for m in [g.r, g.n, g.level, g.chi.modulus] {
        for &(p, _) in &factor(m).factors {
            if !primes.contains(&p) {
                primes.push(p);
            }
        }
    }
    primes.sort();

    for kind in [OrbitalKind::Identity, OrbitalKind::Weyl] {
        println!("{kind:?} orbital factors (k=12, D=5, r=n=6, s=8+i):");
        let mut product = Approx::exact(Complex::with_val(wb, 1));
        for &p in &primes {
            let v = local_orbital_factor(&prec, p, kind, &g)?;
            println!("  p = {p}: {:+.10e} {:+.10e}i", v.re_f64(), v.im_f64());
            product = product.mul(&v);
        }
        println!("  product: {:+.10e} {:+.10e}i", product.re_f64(), product.im_f64());
    }

    let idt = identity_term(&prec, &g)?;
    println!(
        "global identity term (with archimedean front factor): {:+.10e} {:+.10e}i",
        idt.re_f64(),
        idt.im_f64()
    );
    Ok(())
}
