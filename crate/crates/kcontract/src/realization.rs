//! Transfer-function realizations: the four quadruple conditions, rebuilding
//! the inner polynomial `W(z) = D + C F(ZT^*) Z B` from its quadruple, the
//! inner-function verifier, and a point-sampled positivity certificate for
//! multipliers into the unweighted ball space.

use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::contraction::{defect_operator, DEFAULT_SERIES_TOL};
use crate::dilation::{f_eval, oplus_j, restrict_band, InnerFunctionPoly};
use crate::error::{Error, Result};
use crate::metric::{
    cplx, hermitian_part, op_norm, orthonormalize, C64, CMat,
};
use crate::series::KernelSpec;
use crate::space::{IndexBasis, SpaceSpec};

pub use crate::dilation::RealizationQuadruple;

pub const DEFAULT_COND_TOL: f64 = 1e-8;
pub const DEFAULT_MEM_TOL: f64 = 1e-8;
pub const DEFAULT_KIN_TOL: f64 = 1e-8;
pub const DEFAULT_PSD_TOL: f64 = 1e-8;

/// Dilation matrix built from a defect square-root factor `c` (`r x p`):
/// block row at a multi-index `alpha` is `w_alpha c T^{*alpha}`.
pub fn dilation_from_factor(
    c: &CMat,
    q: &RealizationQuadruple,
    space: &SpaceSpec,
) -> Result<CMat> {
    let p = q.tuple.p;
    let r = c.nrows();
    if c.ncols() != p || space.coeff_dim != r {
        return Err(Error::DimensionMismatch(
            "factor shape does not match tuple / space".into(),
        ));
    }
    let mut j = CMat::zeros(space.dim(), p);
    for (idx, alpha) in space.basis.indices.iter().enumerate() {
        let block = c * q.tuple.adjoint_power(alpha) * cplx(space.weight[idx]);
        j.rows_mut(idx * r, r).copy_from(&block);
    }
    Ok(j)
}

/// Residuals of the four quadruple conditions, each paired with the tolerance
/// it was judged against.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    /// `|| C^* C - (1/K)(T) ||`.
    pub k1: f64,
    /// `|| D^* C + B^* (+) Delta_T) T^*_col ||`.
    pub k2: f64,
    /// `|| D^* D + B^* ((+) Delta_T) B - I ||`.
    pub k3: f64,
    /// Largest relative projection residual of a column of `((+) j_C) B`
    /// against the column space of the stacked adjoint shifts, on the
    /// validated band.
    pub k4: f64,
    pub tol: f64,
    pub mem_tol: f64,
    /// Degrees on which the range condition was asserted.
    pub validated_band: usize,
    pub pass: bool,
}

/// Check the four conditions a realization quadruple must satisfy, at
/// truncation degree `n`. The internal dilation for the range condition is
/// rebuilt from `q.c`, not taken from any prior pack.
pub fn check_conditions(
    q: &RealizationQuadruple,
    kernel: &KernelSpec,
    n: usize,
    tol: f64,
    mem_tol: f64,
) -> Result<ConditionReport> {
    let d = q.tuple.d;
    let p = q.tuple.p;
    let r = q.target_dim;
    let s = q.source_dim;
    if q.b.nrows() != d * p
        || q.b.ncols() != s
        || q.c.nrows() != r
        || q.c.ncols() != p
        || q.d0.nrows() != r
        || q.d0.ncols() != s
        || q.delta_t.nrows() != p
        || q.delta_t.ncols() != p
    {
        return Err(Error::DimensionMismatch(
            "quadruple block shapes are inconsistent".into(),
        ));
    }

    let defect = defect_operator(&q.tuple, kernel, DEFAULT_SERIES_TOL)?;
    let k1 = op_norm(&(q.c.adjoint() * &q.c - &defect.defect_op));

    let mut gd_mat = CMat::zeros(d * p, d * p);
    let mut tcol = CMat::zeros(d * p, p);
    for i in 0..d {
        gd_mat
            .view_mut((i * p, i * p), (p, p))
            .copy_from(&q.delta_t);
        tcol.rows_mut(i * p, p)
            .copy_from(&q.tuple.mats()[i].adjoint());
    }
    let k2 = op_norm(&(q.d0.adjoint() * &q.c + q.b.adjoint() * &gd_mat * &tcol));
    let k3 = op_norm(
        &(q.d0.adjoint() * &q.d0 + q.b.adjoint() * &gd_mat * &q.b - CMat::identity(s, s)),
    );

    let space = SpaceSpec::new(kernel.clone(), IndexBasis::new(d, n), r)?;
    let g = space.metric();
    let g_big = g.direct_sum(d);
    let (_, adjoint_shifts) = space.shift_matrices();
    let dim = space.dim();
    let mut mcol = CMat::zeros(d * dim, dim);
    for i in 0..d {
        mcol.rows_mut(i * dim, dim).copy_from(&adjoint_shifts[i]);
    }
    let range_basis = {
        let full = orthonormalize(&mcol, &g_big, 0.0);
        let max_sv = full.singular_values.first().copied().unwrap_or(0.0);
        orthonormalize(&mcol, &g_big, 1e-8 * max_sv.max(1.0))
    };
    let k4 = if s == 0 {
        0.0
    } else {
        let j_c = dilation_from_factor(&q.c, q, &space)?;
        let mut x = oplus_j(&j_c, d, p, &q.b);
        restrict_band(&space, d, &mut x, n - 1);
        let xo = &g_big.sqrt * &x;
        let qo = &g_big.sqrt * &range_basis.basis;
        let res = &xo - &qo * (qo.adjoint() * &xo);
        let mut worst = 0.0f64;
        for k in 0..s {
            let norm = xo.column(k).norm();
            if norm > 1e-12 {
                worst = worst.max(res.column(k).norm() / norm);
            }
        }
        worst
    };

    let pass = k1 <= tol && k2 <= tol && k3 <= tol && k4 <= mem_tol;
    Ok(ConditionReport {
        k1,
        k2,
        k3,
        k4,
        tol,
        mem_tol,
        validated_band: n - 1,
        pass,
    })
}

/// Expand `W(z) = D + C F(ZT^*) Z B` into polynomial coefficients at
/// truncation degree `n`: the coefficient at a multi-index `beta` with
/// `|beta| >= 1` is `sum_i a_{|beta|} gamma_{beta - e_i} C T^{*(beta - e_i)}
/// B_i` over the variables with `beta_i > 0`.
///
/// Also returns the largest deviation from pointwise evaluation through the
/// series form at 20 seeded sample points.
pub fn build_w_from_quadruple(
    q: &RealizationQuadruple,
    kernel: &KernelSpec,
    n: usize,
) -> Result<(InnerFunctionPoly, f64)> {
    let d = q.tuple.d;
    let p = q.tuple.p;
    let r = q.target_dim;
    let s = q.source_dim;
    let basis = IndexBasis::new(d, n);
    let mut coeffs: Vec<CMat> = Vec::with_capacity(basis.len());
    for (idx, beta) in basis.indices.iter().enumerate() {
        if basis.degree(idx) == 0 {
            coeffs.push(q.d0.clone());
            continue;
        }
        let deg = basis.degree(idx);
        let mut w = CMat::zeros(r, s);
        for i in 0..d {
            if beta[i] == 0 {
                continue;
            }
            let mut parent = beta.clone();
            parent[i] -= 1;
            let parent_pos = basis.position(&parent).unwrap();
            let scale = kernel.a_f64(deg) * basis.gamma[parent_pos] as f64;
            let bi = q.b.rows(i * p, p);
            w += &q.c * q.tuple.adjoint_power(&parent) * bi * cplx(scale);
        }
        coeffs.push(w);
    }
    let poly = InnerFunctionPoly {
        d,
        source_dim: s,
        target_dim: r,
        degree: n,
        basis,
        coeffs,
    };

    // cross-check against the series form at seeded interior points
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let scale = 0.3 / (d as f64).sqrt();
    let mut eval_residual = 0.0f64;
    for _ in 0..20 {
        let z: Vec<C64> = (0..d)
            .map(|_| {
                C64::new(
                    (rng.gen::<f64>() * 2.0 - 1.0) * scale,
                    (rng.gen::<f64>() * 2.0 - 1.0) * scale,
                )
            })
            .collect();
        let f = f_eval(&q.tuple, kernel, &z)?;
        let mut zb = CMat::zeros(p, s);
        for i in 0..d {
            zb += q.b.rows(i * p, p) * z[i];
        }
        let direct = &q.d0 + &q.c * &f * zb;
        eval_residual = eval_residual.max(op_norm(&(poly.eval(&z) - direct)));
    }
    Ok((poly, eval_residual))
}

/// Inner-function verdict for a matrix polynomial mapping `C^s` into the
/// function space with coefficient dimension `target_dim`.
#[derive(Debug, Clone, Serialize)]
pub struct KinnerReport {
    /// `|| Gram(W x_e) - I ||` over the standard basis of the source.
    pub isometry_residual: f64,
    /// Largest `|| Gram(W E, z^alpha W E) ||` over `1 <= |alpha| <= band`.
    pub orthogonality_residual: f64,
    /// Shift degrees tested; `n - deg W`.
    pub band: usize,
    pub degree: usize,
    pub tol: f64,
    pub verdict: bool,
}

/// Verify the two defining properties of an inner function at truncation
/// degree `n`: the map `x -> W x` is isometric, and the image of the source
/// is orthogonal to all of its shifted copies within the tested band.
pub fn verify_kinner(
    w: &InnerFunctionPoly,
    kernel: &KernelSpec,
    n: usize,
    tol: f64,
) -> Result<KinnerReport> {
    let degree = w.max_nonzero_degree(1e-10);
    if degree > n {
        return Err(Error::DegreeOverflow { degree, max: n });
    }
    let space = SpaceSpec::new(kernel.clone(), IndexBasis::new(w.d, n), w.target_dim)?;
    let g = space.metric();
    let cols = w.to_space_vectors(&space)?;
    let s = w.source_dim;
    let gram = cols.adjoint() * &g.mat * &cols;
    let isometry_residual = op_norm(&(gram - CMat::identity(s, s)));

    let band = n - degree;
    let mut orthogonality_residual = 0.0f64;
    if band >= 1 && s > 0 {
        let (shifts, _) = space.shift_matrices();
        let small = IndexBasis::new(w.d, band);
        let mut shifted: Vec<CMat> = Vec::with_capacity(small.len());
        for (idx, alpha) in small.indices.iter().enumerate() {
            if small.degree(idx) == 0 {
                shifted.push(cols.clone());
                continue;
            }
            let k = alpha.iter().position(|&x| x > 0).unwrap();
            let mut parent = alpha.clone();
            parent[k] -= 1;
            let parent_pos = small.position(&parent).unwrap();
            shifted.push(&shifts[k] * &shifted[parent_pos]);
            let cross = cols.adjoint() * &g.mat * &shifted[idx];
            orthogonality_residual = orthogonality_residual.max(op_norm(&cross));
        }
    }
    let verdict = isometry_residual <= tol && orthogonality_residual <= tol;
    Ok(KinnerReport {
        isometry_residual,
        orthogonality_residual,
        band,
        degree,
        tol,
        verdict,
    })
}

/// Point-sampled positivity certificate for the contractive-multiplier claim
/// into the unweighted ball space.
#[derive(Debug, Clone, Serialize)]
pub struct MultiplierReport {
    /// Minimal eigenvalue of the assembled block test matrix.
    pub min_eig: f64,
    /// `|| M_z M_z^* ||` on a small truncated model: 1 for the unweighted
    /// ball kernel, larger for kernels whose shift is not a row contraction.
    /// Reported as a diagnostic; the test matrix is evaluated either way.
    pub row_op_norm: f64,
    pub row_contraction: bool,
    pub points: usize,
    pub psd_tol: f64,
    pub verdict: bool,
}

/// Assemble the block matrix with `(i, j)` entry
/// `K(z_i, z_j) I - W(z_i) W(z_j)^* / (1 - <z_i, z_j>)` over the sample
/// points and return its minimal eigenvalue; nonnegativity (up to `psd_tol`)
/// is the sampled evidence that `W` multiplies contractively into the
/// unweighted ball space.
pub fn da_multiplier_check(
    w: &InnerFunctionPoly,
    kernel: &KernelSpec,
    points: &[Vec<C64>],
    psd_tol: f64,
) -> Result<MultiplierReport> {
    let d = w.d;
    for z in points {
        if z.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "sample point has {} coordinates, polynomial has d = {}",
                z.len(),
                d
            )));
        }
    }
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let dist: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            if dist.sqrt() < 1e-12 {
                return Err(Error::BadParameter(format!(
                    "sample points {i} and {j} coincide"
                )));
            }
        }
    }

    let n_diag = 6.min(kernel.max_degree);
    let space = SpaceSpec::new(kernel.clone(), IndexBasis::new(d, n_diag), 1)?;
    let g = space.metric();
    let (shifts, adjoint_shifts) = space.shift_matrices();
    let mut row = CMat::zeros(space.dim(), space.dim());
    for i in 0..d {
        row += &shifts[i] * &adjoint_shifts[i];
    }
    let row_op_norm = op_norm(&(&g.sqrt * row * &g.inv_sqrt));
    let row_contraction = row_op_norm <= 1.0 + 1e-8;

    let r = w.target_dim;
    let m = points.len();
    let mut test = CMat::zeros(m * r, m * r);
    let evals: Vec<CMat> = points.iter().map(|z| w.eval(z)).collect();
    for i in 0..m {
        for j in 0..m {
            let t: C64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| a * b.conj())
                .sum();
            if t.norm() >= 1.0 {
                return Err(Error::KernelSingularity { value: t.norm() });
            }
            let kij = kernel.eval_k(t);
            let mut block = CMat::identity(r, r) * kij;
            block -= &evals[i] * evals[j].adjoint() / (C64::new(1.0, 0.0) - t);
            test.view_mut((i * r, j * r), (r, r)).copy_from(&block);
        }
    }
    let eig = SymmetricEigen::new(hermitian_part(&test));
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(MultiplierReport {
        min_eig,
        row_op_norm,
        row_contraction,
        points: m,
        psd_tol,
        verdict: min_eig >= -psd_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::OperatorTuple;
    use crate::dilation::{build_wt, canonical_dilation, DilationOptions};
    use crate::metric::{svd_accurate, CVec, Metric};
    use crate::series::Family;

    fn scalar_tuple(lambda: C64) -> OperatorTuple {
        OperatorTuple::new(vec![CMat::from_element(1, 1, lambda)], 1e-10).unwrap()
    }

    fn zero_tuple(d: usize, p: usize) -> OperatorTuple {
        OperatorTuple::new(vec![CMat::zeros(p, p); d], 1e-10).unwrap()
    }

    fn pack_quad(
        t: &OperatorTuple,
        fam: Family,
        n: usize,
    ) -> (KernelSpec, InnerFunctionPoly, RealizationQuadruple) {
        let kernel = KernelSpec::builtin(fam, n + 4).unwrap();
        let pack = canonical_dilation(t, &kernel, n, &DilationOptions::default()).unwrap();
        let (poly, quad) = build_wt(&pack).unwrap();
        (kernel, poly, quad)
    }

    #[test]
    fn conditions_round_trip_scalar() {
        let (kernel, _, quad) = pack_quad(&scalar_tuple(cplx(0.5)), Family::DruryArveson, 12);
        let rep =
            check_conditions(&quad, &kernel, 12, DEFAULT_COND_TOL, DEFAULT_MEM_TOL).unwrap();
        assert!(rep.pass, "residuals {} {} {} {}", rep.k1, rep.k2, rep.k3, rep.k4);
        assert!(rep.k1 <= 1e-8 && rep.k2 <= 1e-8 && rep.k3 <= 1e-8 && rep.k4 <= 1e-8);
    }

    #[test]
    fn perturbed_d_breaks_k3() {
        let (kernel, _, quad) = pack_quad(&scalar_tuple(cplx(0.5)), Family::DruryArveson, 12);
        let mut bad = quad.clone();
        bad.d0[(0, 0)] += cplx(0.1);
        let rep = check_conditions(&bad, &kernel, 12, DEFAULT_COND_TOL, DEFAULT_MEM_TOL).unwrap();
        assert!(!rep.pass);
        assert!(rep.k3 >= 0.01, "k3 = {}", rep.k3);
    }

    #[test]
    fn zero_b_degenerate_cases() {
        // T = 0, B = 0: the second summand of every condition drops out, so
        // the conditions reduce to C*C = I (from the defect of 0), D*C = 0,
        // and D*D = I; with C = I these force D = 0 and are then
        // incompatible with the isometry condition on D
        let kernel = KernelSpec::builtin(Family::DruryArveson, 10).unwrap();
        let base = RealizationQuadruple {
            tuple: zero_tuple(1, 1),
            b: CMat::zeros(1, 1),
            c: CMat::identity(1, 1),
            d0: CMat::zeros(1, 1),
            delta_t: CMat::identity(1, 1),
            source_dim: 1,
            target_dim: 1,
        };
        let rep = check_conditions(&base, &kernel, 6, 1e-10, 1e-10).unwrap();
        assert!(rep.k1 < 1e-14 && rep.k2 < 1e-14 && rep.k4 < 1e-14);
        assert!((rep.k3 - 1.0).abs() < 1e-14 && !rep.pass);

        // unimodular D restores (K3) but breaks (K2)
        let mut unitary_d = base.clone();
        unitary_d.d0[(0, 0)] = C64::new(0.0, 1.0);
        let rep = check_conditions(&unitary_d, &kernel, 6, 1e-10, 1e-10).unwrap();
        assert!(rep.k1 < 1e-14 && rep.k3 < 1e-14 && rep.k4 < 1e-14);
        assert!((rep.k2 - 1.0).abs() < 1e-14 && !rep.pass);

        let mut non_isometry = base.clone();
        non_isometry.d0[(0, 0)] = cplx(0.5);
        let rep = check_conditions(&non_isometry, &kernel, 6, 1e-10, 1e-10).unwrap();
        assert!(!rep.pass);
        assert!((rep.k3 - 0.75).abs() < 1e-14);
    }

    #[test]
    fn build_w_examples() {
        // T = 0, C = 1, D = 0, B = 1 gives W(z) = z for the unweighted kernel
        let kernel = KernelSpec::builtin(Family::DruryArveson, 10).unwrap();
        let q = RealizationQuadruple {
            tuple: zero_tuple(1, 1),
            b: CMat::identity(1, 1),
            c: CMat::identity(1, 1),
            d0: CMat::zeros(1, 1),
            delta_t: CMat::identity(1, 1),
            source_dim: 1,
            target_dim: 1,
        };
        let (w, eval_res) = build_w_from_quadruple(&q, &kernel, 6).unwrap();
        assert!(eval_res < 1e-14);
        assert!((w.coeffs[1][(0, 0)].re - 1.0).abs() < 1e-14);
        for (idx, c) in w.coeffs.iter().enumerate() {
            if idx != 1 {
                assert!(op_norm(c) < 1e-14);
            }
        }

        // B = 0 gives the constant polynomial D
        let q0 = RealizationQuadruple {
            b: CMat::zeros(1, 1),
            d0: CMat::from_element(1, 1, cplx(0.7)),
            ..q
        };
        let (w, eval_res) = build_w_from_quadruple(&q0, &kernel, 6).unwrap();
        assert!(eval_res < 1e-14);
        assert!((w.coeffs[0][(0, 0)].re - 0.7).abs() < 1e-14);
        assert_eq!(w.max_nonzero_degree(1e-12), 0);
    }

    #[test]
    fn build_w_matches_wt_coefficients() {
        for (fam, lam) in [
            (Family::Power(2.0), cplx(0.5)),
            (Family::DruryArveson, cplx(0.5)),
            (Family::Dirichlet, C64::new(0.0, 0.3)),
        ] {
            let n = 20;
            let (kernel, poly, quad) = pack_quad(&scalar_tuple(lam), fam, n);
            let (rebuilt, eval_res) = build_w_from_quadruple(&quad, &kernel, n).unwrap();
            assert!(eval_res < 1e-8);
            assert_eq!(rebuilt.basis.len(), poly.basis.len());
            for idx in 0..poly.basis.len() {
                assert!(
                    op_norm(&(&rebuilt.coeffs[idx] - &poly.coeffs[idx])) < 1e-10,
                    "coefficient {idx} differs"
                );
            }
        }
    }

    #[test]
    fn kinner_examples() {
        // W(z) = z in the unweighted space: both residuals vanish
        let kernel = KernelSpec::builtin(Family::DruryArveson, 12).unwrap();
        let basis = IndexBasis::new(1, 8);
        let mut coeffs = vec![CMat::zeros(1, 1); basis.len()];
        coeffs[1] = CMat::identity(1, 1);
        let w = InnerFunctionPoly {
            d: 1,
            source_dim: 1,
            target_dim: 1,
            degree: 8,
            basis: basis.clone(),
            coeffs,
        };
        let rep = verify_kinner(&w, &kernel, 8, DEFAULT_KIN_TOL).unwrap();
        assert!(rep.verdict);
        assert!(rep.isometry_residual < 1e-14 && rep.orthogonality_residual < 1e-14);
        assert_eq!(rep.band, 7);

        // constant unitary: inner with zero residuals
        let mut coeffs = vec![CMat::zeros(1, 1); basis.len()];
        coeffs[0] = CMat::from_element(1, 1, C64::new(0.0, 1.0));
        let w0 = InnerFunctionPoly {
            d: 1,
            source_dim: 1,
            target_dim: 1,
            degree: 8,
            basis: basis.clone(),
            coeffs,
        };
        let rep = verify_kinner(&w0, &kernel, 8, DEFAULT_KIN_TOL).unwrap();
        assert!(rep.verdict);
        assert!(rep.isometry_residual < 1e-14 && rep.orthogonality_residual < 1e-14);

        // W(z) = z fails in the weighted space: ||z||^2 = 1/2 there
        let k2 = KernelSpec::builtin(Family::Power(2.0), 12).unwrap();
        let rep = verify_kinner(&w, &k2, 8, DEFAULT_KIN_TOL).unwrap();
        assert!(!rep.verdict);
        assert!((rep.isometry_residual - 0.5).abs() < 1e-12);

        // degree overflow is rejected
        let err = verify_kinner(&w, &kernel, 1, DEFAULT_KIN_TOL).unwrap_err();
        assert!(matches!(err, Error::DegreeOverflow { .. }));
    }

    #[test]
    fn multiplier_check_examples() {
        // generous horizon: the kernel values enter through the truncated
        // series, and the geometric tail must sit below the PSD tolerance
        let kernel = KernelSpec::builtin(Family::DruryArveson, 64).unwrap();
        let basis = IndexBasis::new(1, 4);
        let zero = InnerFunctionPoly {
            d: 1,
            source_dim: 1,
            target_dim: 1,
            degree: 4,
            basis: basis.clone(),
            coeffs: vec![CMat::zeros(1, 1); basis.len()],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let points: Vec<Vec<C64>> = (0..10)
            .map(|_| {
                vec![C64::new(
                    (rng.gen::<f64>() * 2.0 - 1.0) * 0.5,
                    (rng.gen::<f64>() * 2.0 - 1.0) * 0.5,
                )]
            })
            .collect();
        let rep = da_multiplier_check(&zero, &kernel, &points, DEFAULT_PSD_TOL).unwrap();
        assert!(rep.verdict);
        assert!(rep.min_eig >= -1e-12);
        assert!(rep.row_contraction);

        // W(z) = z: exactly the flat kernel in one variable
        let mut coeffs = vec![CMat::zeros(1, 1); basis.len()];
        coeffs[1] = CMat::identity(1, 1);
        let wz = InnerFunctionPoly {
            d: 1,
            source_dim: 1,
            target_dim: 1,
            degree: 4,
            basis: basis.clone(),
            coeffs: coeffs.clone(),
        };
        let rep = da_multiplier_check(&wz, &kernel, &points, DEFAULT_PSD_TOL).unwrap();
        assert!(rep.min_eig >= -1e-10, "min eig {}", rep.min_eig);

        // scaling by 2 breaks positivity
        let mut coeffs2 = coeffs;
        coeffs2[1] *= cplx(2.0);
        let w2 = InnerFunctionPoly {
            d: 1,
            source_dim: 1,
            target_dim: 1,
            degree: 4,
            basis: basis.clone(),
            coeffs: coeffs2,
        };
        let rep = da_multiplier_check(&w2, &kernel, &points, DEFAULT_PSD_TOL).unwrap();
        assert!(rep.min_eig < -1e-3);
        assert!(!rep.verdict);

        // coincident points and boundary points are rejected
        let twice = vec![points[0].clone(), points[0].clone()];
        assert!(matches!(
            da_multiplier_check(&wz, &kernel, &twice, DEFAULT_PSD_TOL),
            Err(Error::BadParameter(_))
        ));
        let boundary = vec![vec![cplx(1.0)], vec![cplx(0.2)]];
        assert!(matches!(
            da_multiplier_check(&wz, &kernel, &boundary, DEFAULT_PSD_TOL),
            Err(Error::KernelSingularity { .. })
        ));
    }

    #[test]
    fn delta_t_independent_of_factor_choice() {
        // Delta_T rebuilt from U C for a random unitary U agrees with the
        // one from C: the dilation changes by a block rotation that the
        // weighted metric does not see.
        let (kernel, _, quad) = pack_quad(&scalar_tuple(cplx(0.6)), Family::Power(2.0), 16);
        let n = 16;
        let space =
            SpaceSpec::new(kernel.clone(), IndexBasis::new(1, n), quad.target_dim).unwrap();
        let g = space.metric();
        let (delta_small, delta_big) = space.delta_ops().unwrap();
        let _ = delta_small;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = quad.target_dim;
        let m = CMat::from_fn(r, r, |_, _| {
            C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let svd = svd_accurate(&m);
        let u = &svd.u * svd.v.adjoint();

        let j1 = dilation_from_factor(&quad.c, &quad, &space).unwrap();
        let c2 = &u * &quad.c;
        let j2 = dilation_from_factor(&c2, &quad, &space).unwrap();
        let d1 = j1.adjoint() * &g.mat * &delta_big * &j1;
        let d2 = j2.adjoint() * &g.mat * &delta_big * &j2;
        assert!(op_norm(&(&d1 - &d2)) < 1e-10);
        assert!(op_norm(&(&d1 - &quad.delta_t)) < 1e-8);
    }

    #[test]
    fn isometry_norm_identity() {
        // || W x ||^2 - || D x ||^2 = <(I - D^* D) x, x> for built W
        let n = 16;
        let (kernel, poly, quad) = pack_quad(&scalar_tuple(cplx(0.5)), Family::DruryArveson, n);
        let space =
            SpaceSpec::new(kernel.clone(), IndexBasis::new(1, n), quad.target_dim).unwrap();
        let cols = poly.to_space_vectors(&space).unwrap();
        let defect = CMat::identity(quad.source_dim, quad.source_dim)
            - quad.d0.adjoint() * &quad.d0;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let x = CVec::from_fn(quad.source_dim, |_, _| {
                C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            let wx = &cols * &x;
            let lhs = space.norm(&wx).powi(2) - (quad.d0.clone() * &x).norm_squared();
            let rhs = (x.adjoint() * &defect * &x)[(0, 0)].re;
            assert!((lhs - rhs).abs() < 1e-8, "identity off by {}", (lhs - rhs).abs());
        }
    }

    #[test]
    fn serde_report_shapes() {
        let (kernel, poly, quad) = pack_quad(&scalar_tuple(cplx(0.3)), Family::DruryArveson, 10);
        let rep =
            check_conditions(&quad, &kernel, 10, DEFAULT_COND_TOL, DEFAULT_MEM_TOL).unwrap();
        let v = serde_json::to_value(&rep).unwrap();
        assert!(v.get("k1").is_some() && v.get("tol").is_some());
        let kin = verify_kinner(&poly, &kernel, 10, DEFAULT_KIN_TOL).unwrap();
        let v = serde_json::to_value(&kin).unwrap();
        assert!(v.get("isometry_residual").is_some());
        let _ = Metric::identity(2);
    }
}
