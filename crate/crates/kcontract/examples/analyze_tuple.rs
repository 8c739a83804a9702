//! Analyze a commuting tuple against a kernel: spectral safety margin, defect
//! operator positivity and rank, and pureness of the contraction.

use kcontract::contraction::{
    defect_operator, pureness_residuals, spectral_safety, DEFAULT_SERIES_TOL,
};
use kcontract::corpus::corpus_entry;
use kcontract::series::{Family, KernelSpec};

fn main() -> kcontract::Result<()> {
    let entry = corpus_entry("jordan_0.4").expect("corpus entry exists");
    let kernel = KernelSpec::builtin(Family::Power(2.0), 48)?;
    println!(
        "tuple {} (d={}, p={}) against {}",
        entry.name, entry.tuple.d, entry.tuple.p, kernel.name
    );

    let safety = spectral_safety(&entry.tuple, &kernel, 64, 7);
    println!(
        "safety: max rho(ZT*) {:.4} vs radius estimate {:.4} (ok: {})",
        safety.max_rho, safety.r_estimate, safety.ok
    );

    let defect = defect_operator(&entry.tuple, &kernel, DEFAULT_SERIES_TOL)?;
    println!(
        "defect: min eig {:.3e}, rank {}, series terms {}, tail {:.2e}",
        defect.min_eig, defect.defect_dim, defect.series_terms_used, defect.tail_estimate
    );

    let pureness = pureness_residuals(&entry.tuple, &kernel, &defect, 48)?;
    println!(
        "pureness: final residual {:.3e} after {} terms, pure at 1e-6: {}",
        pureness.final_residual,
        pureness.horizon,
        pureness.is_pure(1e-6)
    );
    Ok(())
}
