//! Inspect the built-in kernel families: Taylor coefficients, reciprocal
//! coefficients, radius estimates, reciprocal convolution residuals, and the
//! one-sign-tail check on the reciprocal series.

use kcontract::series::{nevanlinna_sign_check, Family, KernelSpec};

fn main() -> kcontract::Result<()> {
    let families = [
        ("Drury-Arveson", Family::DruryArveson),
        ("power nu=2", Family::Power(2.0)),
        ("power nu=1/2", Family::Power(0.5)),
        ("Dirichlet-type", Family::Dirichlet),
    ];
    for (label, family) in families {
        let k = KernelSpec::builtin(family, 24)?;
        println!("{label} ({})", k.name);
        print!("  a_n:");
        for n in 0..6 {
            print!(" {:.4}", k.a_f64(n));
        }
        println!();
        print!("  c_n:");
        for n in 0..6 {
            print!(" {:+.4}", k.c_f64(n));
        }
        println!();
        println!("  radius estimate      {:.6}", k.r_estimate);
        println!("  reciprocal residual  {:.2e}", k.reciprocal_residual());
        let sign = nevanlinna_sign_check(&k);
        println!(
            "  reciprocal tail one-signed (nonpos): {} pivot {:?}",
            sign.eventually_nonpos, sign.pivot_nonpos
        );
        println!();
    }
    Ok(())
}
