//! Work inside the truncated weighted function space: graded monomial basis,
//! weighted inner products, point evaluation, shifts and their adjoints.

use kcontract::metric::{cplx, op_norm, C64, CVec};
use kcontract::series::{Family, KernelSpec};
use kcontract::space::{IndexBasis, SpaceSpec};

fn main() -> kcontract::Result<()> {
    let kernel = KernelSpec::builtin(Family::Power(2.0), 8)?;
    let basis = IndexBasis::new(2, 4);
    let space = SpaceSpec::new(kernel, basis, 1)?;
    println!(
        "space over {} with d=2, degree <= 4: {} monomials",
        space.kernel.name,
        space.basis.len()
    );

    // f(z) = 1 + 2 z_1 z_2
    let mut f = CVec::zeros(space.dim());
    f[space.basis.position(&[0, 0]).unwrap()] = cplx(1.0);
    f[space.basis.position(&[1, 1]).unwrap()] = cplx(2.0);
    let z = [C64::new(0.3, 0.1), C64::new(-0.2, 0.0)];
    println!("f(0.3+0.1i, -0.2) = {:.6}", space.eval(&f, &z)[0]);
    println!("||f||              = {:.6}", space.norm(&f));

    // shifts commute; adjoints are taken in the weighted inner product
    let (shifts, adjoints) = space.shift_matrices();
    let comm = &shifts[0] * &shifts[1] - &shifts[1] * &shifts[0];
    println!("||[M_1, M_2]||     = {:.2e}", op_norm(&comm));
    let g = space.metric();
    let adj_check = op_norm(&(&g.mat * &shifts[0] - (&g.mat * &adjoints[0]).adjoint()));
    println!("adjoint residual   = {:.2e}", adj_check);

    // delta operators of the kernel acting on the space
    let (delta_small, delta_big) = space.delta_ops()?;
    println!(
        "delta ranks: small {} big {}",
        delta_small.rank(1e-10),
        delta_big.rank(1e-10)
    );
    Ok(())
}
