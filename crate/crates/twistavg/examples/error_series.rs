//! Evaluate the hypergeometric error series E with certified truncation
//! tails, and compare the truncated value against the closed-form envelope.

use rug::{Complex, Float};
use twistavg::chars::DirichletCharacter;
use twistavg::geometry::{e_bound, e_sum, GeomConfig};
use twistavg::prec::Precision;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let prec = Precision::new(128);
    let wb = prec.working();
    let chi = DirichletCharacter::parse_label("4:1")?;
    let s = Complex::with_val(wb, Float::with_val(wb, 9));
    let cfg = GeomConfig::new(12, 1, DirichletCharacter::trivial(), chi, 1, 1, s)?;

    for (ca, cd) in [(100u64, 40u64), (1000, 200), (10000, 1000)] {
        let t0 = std::time::Instant::now();
        let (value, tail) = e_sum(&prec, &cfg, ca, cd)?;
        println!(
            "cutoffs a<={ca:5} d<={cd:4}: E = {:+.12e} {:+.12e}i  tail <= {tail:.3e}  ({:.2?})",
            value.re_f64(),
            value.im_f64(),
            t0.elapsed()
        );
    }
    println!("closed-form envelope |E| <= {:.6e}", e_bound(&cfg)?);
    Ok(())
}
