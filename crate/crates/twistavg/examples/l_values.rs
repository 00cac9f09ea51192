//! Completed twisted L-values two ways: the absolutely convergent Dirichlet
//! series for large Re(s), and the incomplete-gamma expansion valid on the
//! whole strip, plus the functional-equation residual.

use rug::{Complex, Float};
use twistavg::chars::DirichletCharacter;
use twistavg::forms::delta_eigenform;
use twistavg::lfun::{fe_residual, lambda_direct, lambda_strip, LParams};
use twistavg::prec::Precision;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let prec = Precision::new(128);
    let wb = prec.working();
    let form = delta_eigenform(&prec, 60_000);
    let chi = DirichletCharacter::parse_label("4:1")?;

    // overlap region: both routes apply
    let s = Complex::with_val(wb, Float::with_val(wb, 9.5));
    let p = LParams::new(&form, &chi, s)?;
    let a = lambda_direct(&prec, &p, 1e-12)?;
    let b = lambda_strip(&prec, &p, 1e-12)?;
    println!("Lambda(9.5) direct = {:+.15e} {:+.15e}i", a.re_f64(), a.im_f64());
    println!("Lambda(9.5) strip  = {:+.15e} {:+.15e}i", b.re_f64(), b.im_f64());
    println!("route gap = {:.3e}", a.sub(&b).abs_f64());

    // central point: only the strip route converges
    let sc = Complex::with_val(wb, Float::with_val(wb, 6));
    let pc = LParams::new(&form, &chi, sc)?;
    let c = lambda_strip(&prec, &pc, 1e-12)?;
    println!("Lambda(6) strip    = {:+.15e} {:+.15e}i", c.re_f64(), c.im_f64());

    for sv in [6.0, 7.3, 9.0] {
        let s = Complex::with_val(wb, Float::with_val(wb, sv));
        let p = LParams::new(&form, &chi, s)?;
        let (res, err) = fe_residual(&prec, &p)?;
        println!("functional equation residual at s = {sv}: {res:.3e} (budget {err:.3e})");
    }
    Ok(())
}
