//! Compute the wandering subspace of the complement of the dilation range:
//! the vectors in M orthogonal to every shifted copy z_i M.

use kcontract::corpus::{corpus_entry, corpus_kernel};
use kcontract::dilation::{canonical_dilation, wandering_subspace, DilationOptions};
use kcontract::series::Family;

fn main() -> kcontract::Result<()> {
    let entry = corpus_entry("nilpotent_pair_a").expect("corpus entry exists");
    let kernel = corpus_kernel(&Family::Dirichlet, entry.n)?;
    let pack = canonical_dilation(&entry.tuple, &kernel, entry.n, &DilationOptions::strict())?;
    let w = wandering_subspace(&pack)?;
    println!(
        "tuple {} in {} space: defect rank {}, complement dim {}, wandering dim {}",
        entry.name, kernel.name, pack.defect.defect_dim, w.m_dim, w.dim
    );
    let inside = w.m_dim - w.dim;
    let from = inside.saturating_sub(3);
    print!("separation spectrum around the cut:");
    for (i, s) in w.sep_svals.iter().enumerate().skip(from).take(3 + w.dim) {
        let marker = if i < inside { "" } else { "*" };
        print!(" {s:.2e}{marker}");
    }
    println!("  (* = below the wandering threshold)");

    // wandering vectors are unit vectors orthogonal to all shifts of M
    let g = pack.metric.clone();
    for j in 0..w.dim {
        let col = w.basis.column(j).clone_owned();
        println!("  basis vector {j}: norm {:.6}", g.norm(&col));
    }
    Ok(())
}
