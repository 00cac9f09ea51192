//! Compute both sides of the first-moment identity independently: the
//! spectral average of completed twisted L-values against the closed-form
//! identity term, Weyl term, and truncated error series.

use rug::{Complex, Float};
use twistavg::chars::DirichletCharacter;
use twistavg::geometry::{e_sum, identity_term, weyl_term, GeomConfig};
use twistavg::lfun::{spectral_side, SpectralConfig};
use twistavg::prec::Precision;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let prec = Precision::new(128);
    let wb = prec.working();
    let chi = DirichletCharacter::parse_label("4:1")?;
    let s = Complex::with_val(wb, (Float::with_val(wb, 7), Float::with_val(wb, 0.5)));

    let sc = SpectralConfig::new(12, chi.clone(), 1, 1, s.clone())?;
    let spectral = spectral_side(&prec, &sc, 1e-10)?;
    println!("spectral side  = {:+.10e} {:+.10e}i", spectral.re_f64(), spectral.im_f64());

    let g = GeomConfig::new(12, 1, DirichletCharacter::trivial(), chi, 1, 1, s)?;
    let idt = identity_term(&prec, &g)?;
    let wey = weyl_term(&prec, &g)?;
    let (ev, tail) = e_sum(&prec, &g, 400, 60)?;
    let rhs = idt.add(&wey).add(&ev);
    println!("identity term  = {:+.10e} {:+.10e}i", idt.re_f64(), idt.im_f64());
    println!("Weyl term      = {:+.10e} {:+.10e}i", wey.re_f64(), wey.im_f64());
    println!("E (truncated)  = {:+.10e} {:+.10e}i  (tail <= {tail:.2e})", ev.re_f64(), ev.im_f64());
    println!("geometric side = {:+.10e} {:+.10e}i", rhs.re_f64(), rhs.im_f64());

    let gap = spectral.sub(&rhs).abs_f64();
    println!("|difference|   = {gap:.3e}  (budget {:.3e})", spectral.err + rhs.err);
    Ok(())
}
