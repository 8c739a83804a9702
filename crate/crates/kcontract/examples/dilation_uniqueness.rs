//! Minimal dilations of the same tuple are unique up to a unitary change of
//! the defect coordinates: rotate the defect factor by a random unitary,
//! rebuild the dilation, and recover the rotation by matching the two.

use kcontract::corpus::{corpus_entry, corpus_kernel};
use kcontract::dilation::{build_wt, canonical_dilation, compare_dilations, DilationOptions};
use kcontract::metric::{op_norm, svd_accurate, CMat};
use kcontract::realization::dilation_from_factor;
use kcontract::series::Family;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_unitary(r: usize, seed: u64) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = CMat::from_fn(r, r, |_, _| {
        kcontract::metric::C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let svd = svd_accurate(&m);
    &svd.u * svd.v.adjoint()
}

fn main() -> kcontract::Result<()> {
    let entry = corpus_entry("diag_pair_b").expect("corpus entry exists");
    let kernel = corpus_kernel(&Family::DruryArveson, entry.n)?;
    let pack = canonical_dilation(&entry.tuple, &kernel, entry.n, &DilationOptions::strict())?;
    let (_, quad) = build_wt(&pack)?;
    let r = pack.defect.defect_dim;
    println!("tuple {}: defect rank {}", entry.name, r);

    let u = random_unitary(r, 42);
    let rotated = dilation_from_factor(&(&u * &quad.c), &quad, &pack.space)?;
    let cmp = compare_dilations(&pack.j, &pack.space, &rotated, &pack.space, 1e-6)?;
    println!("match residual     {:.3e}", cmp.residual);
    println!("unitarity defect   {:.3e}", cmp.unitarity_defect);
    println!("recovered rotation {:.3e}", op_norm(&(&cmp.u - &u)));
    let id = CMat::identity(r, r);
    println!(
        "U* U - I           {:.3e}",
        op_norm(&(cmp.u.adjoint() * &cmp.u - id))
    );
    Ok(())
}
