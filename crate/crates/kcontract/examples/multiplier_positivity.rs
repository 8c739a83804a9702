//! Sampled positivity check: evidence that the realized symbol W multiplies
//! contractively from the unweighted ball space into the kernel space, via
//! the minimal eigenvalue of the block kernel test matrix over random points.
//!
//! The positivity statement requires the shift on the kernel space to be a
//! row contraction. That holds for the unweighted ball kernel, but not for
//! the Dirichlet-type kernel (its shift is expansive), and the check reports
//! the genuine eigenvalue violation in that case.

use kcontract::corpus::{corpus_entry, corpus_kernel};
use kcontract::dilation::{build_wt, canonical_dilation, DilationOptions};
use kcontract::metric::C64;
use kcontract::realization::da_multiplier_check;
use kcontract::series::Family;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sample_points(d: usize, count: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..d)
                .map(|_| {
                    C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * C64::new(0.6, 0.0)
                })
                .collect()
        })
        .collect()
}

fn main() -> kcontract::Result<()> {
    for family in [Family::DruryArveson, Family::Dirichlet] {
        let entry = corpus_entry("scalar_pair_d2").expect("corpus entry exists");
        let kernel = corpus_kernel(&family, entry.n + 40)?;
        let pack =
            canonical_dilation(&entry.tuple, &kernel, entry.n, &DilationOptions::strict())?;
        let (poly, _) = build_wt(&pack)?;
        let points = sample_points(entry.tuple.d, 10, 2026);
        let report = da_multiplier_check(&poly, &kernel, &points, 1e-8)?;
        println!(
            "{}: min eig {:+.3e} over {} points, row op norm {:.3} (row contraction: {}), verdict {}",
            kernel.name,
            report.min_eig,
            report.points,
            report.row_op_norm,
            report.row_contraction,
            report.verdict
        );
    }
    Ok(())
}
