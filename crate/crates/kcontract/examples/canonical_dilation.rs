//! Build the canonical dilation of a pure tuple into the vector-valued kernel
//! space and verify every structural identity of the pack.

use kcontract::corpus::{corpus_entry, corpus_kernel};
use kcontract::dilation::{canonical_dilation, verify_pack, DilationOptions};
use kcontract::series::Family;

fn main() -> kcontract::Result<()> {
    let entry = corpus_entry("scalar_pair_d2").expect("corpus entry exists");
    let kernel = corpus_kernel(&Family::DruryArveson, entry.n)?;
    let pack = canonical_dilation(&entry.tuple, &kernel, entry.n, &DilationOptions::strict())?;
    println!(
        "dilation of {} into degree-{} {} space, dim {} x coeff {}",
        entry.name,
        pack.n,
        kernel.name,
        pack.space.basis.len(),
        pack.space.coeff_dim
    );
    println!("isometry residual     {:.3e}", pack.iso_residual);
    println!(
        "intertwining max      {:.3e}",
        pack.intertwining_residuals
            .iter()
            .cloned()
            .fold(0.0f64, f64::max)
    );

    let report = verify_pack(&pack, 7)?;
    println!("validated band        {}", report.validated_band);
    println!("pureness residual     {:.3e}", report.pureness_final);
    println!("Delta_T min eig       {:.3e}", report.delta_t_min_eig);
    println!("sigma identity        {:.3e}", report.ttilde_sigma_identity);
    println!("range identity        {:.3e}", report.ttilde_range_identity);
    println!("block unitary         {:.3e}", report.block_unitary_residual);
    println!("defect intertwine     {:.3e}", report.defect_intertwine);
    println!("norm identity (rel)   {:.3e}", report.norm_identity_rel_error);
    Ok(())
}
