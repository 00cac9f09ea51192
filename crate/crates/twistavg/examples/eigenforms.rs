//! Level-1 eigenforms from exact q-expansions: dimensions, Hecke
//! eigenvalues, and Petersson norms by fundamental-domain quadrature.

use twistavg::forms::{cusp_dim, eigenforms, petersson_norm_sq};
use twistavg::prec::Precision;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let prec = Precision::new(96);
    for k in [12u32, 16, 18, 20, 24] {
        let dim = cusp_dim(k);
        println!("weight {k}: dim S_{k} = {dim}");
        for (i, f) in eigenforms(&prec, k, 64)?.iter().enumerate() {
            let lams: Vec<String> = [2usize, 3, 5, 7]
                .iter()
                .map(|&n| format!("a_{n} = {:.6e}", f.lambda(n).to_f64()))
                .collect();
            let norm = petersson_norm_sq(&prec, f, 1e-8)?;
            println!("  form {i}: {}   ||f||^2 = {:.6e}", lams.join("  "), norm.re_f64());
        }
    }
    Ok(())
}
