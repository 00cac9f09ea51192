//! The confluent-hypergeometric kernel of the error series, evaluated by
//! power series and by quadrature, with its uniform Beta-function envelope.

use rug::{Complex, Float};
use twistavg::prec::Precision;
use twistavg::specfun::{beta, one_f_one_quadrature, one_f_one_series};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let prec = Precision::new(128);
    let wb = prec.working();
    let k = 12u32;
    let s = Complex::with_val(wb, Float::with_val(wb, 9));
    let envelope = beta(&prec, &s, &Complex::with_val(wb, (k as i64) - &s))?;
    println!("B(9, 3) = {:.15e}  (the uniform envelope)", envelope.re_f64());

    for x in [0.0f64, 0.1, -0.5, 2.0, -7.5, 20.0] {
        let w = Complex::with_val(
            wb,
            (Float::new(wb), Float::with_val(wb, 2.0 * std::f64::consts::PI * x)),
        );
        let a = one_f_one_series(&prec, &s, k, &w)?;
        let b = one_f_one_quadrature(&prec, &s, k, &w)?;
        println!(
            "w = 2 pi i * {x:>5}: series {:+.12e} {:+.12e}i   |value| / B = {:.6}   route gap {:.2e}",
            a.re_f64(),
            a.im_f64(),
            a.abs_f64() / envelope.re_f64(),
            a.sub(&b).abs_f64(),
        );
    }
    Ok(())
}
