//! Build the transfer-function realization W(z) = D + C F(ZT*) Z B from the
//! canonical dilation, check the structure conditions on the quadruple, and
//! verify that the multiplication operator with symbol W is isometric with
//! range orthogonal to the shifted copies of itself.

use kcontract::corpus::{corpus_entry, corpus_kernel};
use kcontract::dilation::{build_wt, canonical_dilation, DilationOptions};
use kcontract::realization::{build_w_from_quadruple, check_conditions, verify_kinner};
use kcontract::series::Family;

fn main() -> kcontract::Result<()> {
    let entry = corpus_entry("scalar_0.5").expect("corpus entry exists");
    let kernel = corpus_kernel(&Family::Power(2.0), entry.n)?;
    let pack = canonical_dilation(&entry.tuple, &kernel, entry.n, &DilationOptions::strict())?;
    let (poly, quad) = build_wt(&pack)?;
    println!(
        "W(z): {} -> C^{} valued polynomial of degree {} for {}",
        quad.source_dim,
        quad.target_dim,
        poly.max_nonzero_degree(1e-12),
        entry.name
    );

    let cond = check_conditions(&quad, &kernel, pack.n, 1e-8, 1e-8)?;
    println!(
        "quadruple conditions: k1 {:.2e}  k2 {:.2e}  k3 {:.2e}  k4 {:.2e}  pass {}",
        cond.k1, cond.k2, cond.k3, cond.k4, cond.pass
    );

    let (rebuilt, eval_residual) = build_w_from_quadruple(&quad, &kernel, pack.n)?;
    let coeff_diff: f64 = rebuilt
        .coeffs
        .iter()
        .zip(&poly.coeffs)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("rebuild from quadruple: coeff diff {coeff_diff:.2e}, eval residual {eval_residual:.2e}");

    let kin = verify_kinner(&poly, &kernel, pack.n, 1e-8)?;
    println!(
        "inner verification: isometry {:.2e}  orthogonality {:.2e}  verdict {}",
        kin.isometry_residual, kin.orthogonality_residual, kin.verdict
    );
    Ok(())
}
