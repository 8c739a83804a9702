//! The canonical dilation `j` of a pure contractive tuple into the weighted
//! function space, the operators built from it (`Delta_T`, the row contraction
//! `Ttilde` and its defects), the wandering subspace of the complement of
//! `Im j`, and the inner-function polynomial `W_T` that parametrizes it.
//!
//! Truncation policy: identities involving the shift adjoints are asserted on
//! the validated band (degrees `<= N - 1`); residuals at the top degree are
//! truncation artifacts and are excluded from membership and intertwining
//! tests, never silently absorbed elsewhere.

use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::contraction::{
    defect_operator, pureness_residuals, DefectResult, OperatorTuple, DEFAULT_SERIES_TOL,
};
use crate::error::{Error, Result};
use crate::metric::{
    cplx, hermitian_part, hermitian_sqrt, op_norm, orthonormalize, principal_angles, svd_accurate,
    spectral_radius, C64, CMat, CVec, Metric,
};
use crate::series::KernelSpec;
use crate::space::{IndexBasis, SpaceSpec};

/// Tunable tolerances for dilation construction.
#[derive(Debug, Clone)]
pub struct DilationOptions {
    /// Pureness verdict threshold on the final reconstruction residual.
    pub pure_tol: f64,
    /// Maximum acceptable isometry residual of `J` (signals N too small).
    pub iso_tol: f64,
    /// Membership threshold for the admissible-subspace test.
    pub mem_tol: f64,
    pub series_tol: f64,
    /// Rank threshold (absolute, orthonormal frame) for basis extraction.
    pub sep_tol: f64,
}

impl Default for DilationOptions {
    fn default() -> DilationOptions {
        DilationOptions {
            pure_tol: 1e-2,
            iso_tol: 1e-2,
            mem_tol: 1e-8,
            series_tol: DEFAULT_SERIES_TOL,
            sep_tol: 1e-6,
        }
    }
}

impl DilationOptions {
    /// Tight tolerances for corpus entries whose truncation order has been
    /// chosen so the series tails are negligible.
    pub fn strict() -> DilationOptions {
        DilationOptions {
            pure_tol: 1e-6,
            iso_tol: 1e-6,
            ..DilationOptions::default()
        }
    }
}

/// The canonical dilation and every operator derived from it.
#[derive(Debug, Clone)]
pub struct DilationPack {
    pub tuple: OperatorTuple,
    pub kernel: KernelSpec,
    /// Function space with coefficient dimension = defect dimension.
    pub space: SpaceSpec,
    pub defect: DefectResult,
    /// `J`: `dim x p`, block row at a multi-index `alpha` is
    /// `a_{|alpha|} gamma_alpha C T^{*alpha}`.
    pub j: CMat,
    /// `Delta_T = J^[*] Delta J`, `p x p` Hermitian positive.
    pub delta_t: CMat,
    /// Row operator `[T_1 Delta_T, ..., T_d Delta_T]`, `p x dp`.
    pub ttilde: CMat,
    /// Its metric adjoint, the stacked column `[T_i^*]`, `dp x p`.
    pub ttilde_adj: CMat,
    /// Defect factor of `Ttilde`, `dp x dp`, self-adjoint in the domain metric.
    pub d_ttilde: CMat,
    /// `(1 - Ttilde Ttilde^[*])^{1/2}`, `p x p`.
    pub d_ttilde_star: CMat,
    /// Domain-metric-orthonormal basis of the admissible subspace, `dp x s`.
    pub tilde_d_basis: CMat,
    /// Weight metric of the function space.
    pub metric: Metric,
    /// Domain metric of `Ttilde`: direct sum of `d` copies of `Delta_T`.
    pub gd: Metric,
    pub n: usize,
    pub iso_residual: f64,
    pub intertwining_residuals: Vec<f64>,
    /// Membership singular values from the admissible-subspace split.
    pub membership_svals: Vec<f64>,
    pub pureness_final: f64,
    pub delta_t_min_eig: f64,
    /// Lower bound `1 / max_n(a_n / a_{n+1})` over the band.
    pub delta_t_bound: f64,
    pub options: DilationOptions,
}

/// `T^{*alpha}` for every multi-index, by the parent recurrence in graded
/// order.
fn adjoint_powers(basis: &IndexBasis, tuple: &OperatorTuple) -> Vec<CMat> {
    let p = tuple.p;
    let adjoints: Vec<CMat> = tuple.mats().iter().map(|m| m.adjoint()).collect();
    let mut out: Vec<CMat> = Vec::with_capacity(basis.len());
    for (i, alpha) in basis.indices.iter().enumerate() {
        if basis.degree(i) == 0 {
            out.push(CMat::identity(p, p));
            continue;
        }
        let k = alpha.iter().position(|&x| x > 0).unwrap();
        let mut parent = alpha.clone();
        parent[k] -= 1;
        let parent_pos = basis.position(&parent).unwrap();
        out.push(&adjoints[k] * &out[parent_pos]);
    }
    out
}

/// Block-diagonal application of `J` to a stacked vector family:
/// input `dp x m`, output `(d * dim) x m`.
pub(crate) fn oplus_j(j: &CMat, d: usize, p: usize, x: &CMat) -> CMat {
    let dim = j.nrows();
    let mut out = CMat::zeros(d * dim, x.ncols());
    for i in 0..d {
        let block = j * x.rows(i * p, p);
        out.rows_mut(i * dim, dim).copy_from(&block);
    }
    out
}

/// Zero out the rows of a stacked `(d * dim)`-vector family at degrees above
/// the validated band.
pub(crate) fn restrict_band(space: &SpaceSpec, d: usize, x: &mut CMat, max_band_degree: usize) {
    let dim = space.dim();
    let cd = space.coeff_dim;
    for blk in 0..d {
        for idx in 0..space.basis.len() {
            if space.basis.degree(idx) > max_band_degree {
                for j in 0..cd {
                    x.row_mut(blk * dim + idx * cd + j).fill(C64::new(0.0, 0.0));
                }
            }
        }
    }
}

/// Construct the canonical dilation of a pure contractive tuple at truncation
/// degree `N`. The kernel horizon must reach `N + 1`.
pub fn canonical_dilation(
    tuple: &OperatorTuple,
    kernel: &KernelSpec,
    n: usize,
    options: &DilationOptions,
) -> Result<DilationPack> {
    if kernel.max_degree < n + 1 {
        return Err(Error::HorizonTooShort {
            needed: n + 1,
            have: kernel.max_degree,
        });
    }
    let defect = defect_operator(tuple, kernel, options.series_tol)?;
    let pureness = pureness_residuals(tuple, kernel, &defect, n)?;
    if !pureness.is_pure(options.pure_tol) {
        return Err(Error::NotPure {
            residual: pureness.final_residual,
            tol: options.pure_tol,
        });
    }
    let r = defect.defect_dim;
    let p = tuple.p;
    let d = tuple.d;
    let space = SpaceSpec::new(kernel.clone(), IndexBasis::new(d, n), r)?;
    let dim = space.dim();
    let powers = adjoint_powers(&space.basis, tuple);

    let mut j = CMat::zeros(dim, p);
    for idx in 0..space.basis.len() {
        let block = &defect.c * &powers[idx] * cplx(space.weight[idx]);
        j.rows_mut(idx * r, r).copy_from(&block);
    }
    let metric = space.metric();
    let jstar = j.adjoint() * &metric.mat; // J^[*] = J^H G
    let iso_residual = op_norm(&(&jstar * &j - CMat::identity(p, p)));
    if iso_residual > options.iso_tol {
        return Err(Error::IsometryDegraded {
            residual: iso_residual,
            tol: options.iso_tol,
        });
    }

    let (_, adjoint_shifts) = space.shift_matrices();
    let mut intertwining_residuals = Vec::with_capacity(d);
    for i in 0..d {
        let mut diff = &j * tuple.mats()[i].adjoint() - &adjoint_shifts[i] * &j;
        // top-degree rows carry only the truncation artifact
        for idx in 0..space.basis.len() {
            if space.basis.degree(idx) == n {
                for jj in 0..r {
                    diff.row_mut(idx * r + jj).fill(C64::new(0.0, 0.0));
                }
            }
        }
        intertwining_residuals.push(op_norm(&(&metric.sqrt * diff)));
    }

    let (_, delta_big) = space.delta_ops()?;
    let delta_t = hermitian_part(&(&jstar * &delta_big * &j));
    let eig = SymmetricEigen::new(delta_t.clone());
    let delta_t_min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let delta_t_bound = 1.0
        / (0..=n)
            .map(|k| kernel.a_f64(k) / kernel.a_f64(k + 1))
            .fold(0.0f64, f64::max);
    if delta_t_min_eig <= 0.0 {
        return Err(Error::NotPositive {
            min_eig: delta_t_min_eig,
            tol: 0.0,
        });
    }

    let mut ttilde = CMat::zeros(p, d * p);
    let mut ttilde_adj = CMat::zeros(d * p, p);
    for i in 0..d {
        ttilde
            .columns_mut(i * p, p)
            .copy_from(&(tuple.mats()[i].clone() * &delta_t));
        ttilde_adj
            .rows_mut(i * p, p)
            .copy_from(&tuple.mats()[i].adjoint());
    }
    let gd = Metric::from_hermitian(&{
        let mut m = CMat::zeros(d * p, d * p);
        for i in 0..d {
            m.view_mut((i * p, i * p), (p, p)).copy_from(&delta_t);
        }
        m
    });

    // D_Ttilde = (1 - Ttilde^[*] Ttilde)^{1/2}, square root taken in the
    // orthonormal frame of the domain metric
    let a = CMat::identity(d * p, d * p) - &ttilde_adj * &ttilde;
    let a_ortho = &gd.sqrt * &a * &gd.inv_sqrt;
    let d_ttilde = &gd.inv_sqrt * hermitian_sqrt(&a_ortho, 1e-8) * &gd.sqrt;
    let mut sigma_delta = CMat::zeros(p, p);
    for i in 0..d {
        sigma_delta += tuple.mats()[i].clone() * &delta_t * tuple.mats()[i].adjoint();
    }
    let d_ttilde_star = hermitian_sqrt(&(CMat::identity(p, p) - sigma_delta), 1e-8);

    // admissible subspace: y in range(D_Ttilde) whose image under
    // (+) J . D_Ttilde lies in the column space of the stacked adjoint shifts,
    // tested on the validated band
    let y_hat = orthonormalize(&d_ttilde, &gd, 1e-8);
    let g_big = metric.direct_sum(d);
    let mut mcol = CMat::zeros(d * dim, dim);
    for i in 0..d {
        mcol.rows_mut(i * dim, dim).copy_from(&adjoint_shifts[i]);
    }
    let range_basis = {
        let full = orthonormalize(&mcol, &g_big, 0.0);
        let max_sv = full.singular_values.first().copied().unwrap_or(0.0);
        orthonormalize(&mcol, &g_big, 1e-8 * max_sv.max(1.0))
    };
    let (tilde_d_basis, membership_svals) = if y_hat.rank == 0 {
        (CMat::zeros(d * p, 0), vec![])
    } else {
        let mut x = oplus_j(&j, d, p, &(&d_ttilde * &y_hat.basis));
        restrict_band(&space, d, &mut x, n - 1);
        let x_ortho = &g_big.sqrt * &x;
        let q_ortho = &g_big.sqrt * &range_basis.basis;
        let res = &x_ortho - &q_ortho * (q_ortho.adjoint() * &x_ortho);
        let svd = svd_accurate(&res);
        let svals = svd.svals.clone();
        for &s in &svals {
            if s >= options.mem_tol && s < 10.0 * options.mem_tol {
                return Err(Error::MembershipAmbiguous {
                    residual: s,
                    lo: options.mem_tol,
                    hi: 10.0 * options.mem_tol,
                });
            }
        }
        let keep: Vec<usize> = (0..svals.len())
            .filter(|&k| svals[k] < options.mem_tol)
            .collect();
        let mut sel = CMat::zeros(y_hat.rank, keep.len());
        for (col, &k) in keep.iter().enumerate() {
            sel.column_mut(col).copy_from(&svd.v.column(k));
        }
        (&y_hat.basis * sel, svals)
    };

    Ok(DilationPack {
        tuple: tuple.clone(),
        kernel: kernel.clone(),
        space,
        defect,
        j,
        delta_t,
        ttilde,
        ttilde_adj,
        d_ttilde,
        d_ttilde_star,
        tilde_d_basis,
        metric,
        gd,
        n,
        iso_residual,
        intertwining_residuals,
        membership_svals,
        pureness_final: pureness.final_residual,
        delta_t_min_eig,
        delta_t_bound,
        options: options.clone(),
    })
}

/// `j^* f = sum_alpha T^alpha C^* f_alpha`, computed from the defining series
/// rather than from the matrix adjoint of `J`.
pub fn adjoint_dilation_apply(pack: &DilationPack, f: &CVec) -> Result<CVec> {
    if f.len() != pack.space.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} != space dimension {}",
            f.len(),
            pack.space.dim()
        )));
    }
    let r = pack.defect.defect_dim;
    let cstar = pack.defect.c.adjoint();
    let mut out = CVec::zeros(pack.tuple.p);
    for idx in 0..pack.space.basis.len() {
        let coeff = f.rows(idx * r, r).clone_owned();
        let alpha = &pack.space.basis.indices[idx];
        out += pack.tuple.power(alpha) * (&cstar * coeff);
    }
    Ok(out)
}

/// Orthonormal basis (weight metric) of the wandering subspace of the shift
/// restricted to the complement of `Im J`.
#[derive(Debug, Clone)]
pub struct WanderingSubspace {
    pub basis: CMat,
    pub dim: usize,
    /// Dimension of the complement `M` itself.
    pub m_dim: usize,
    /// Singular values of the shifted-subspace coordinates (gap diagnostics).
    pub sep_svals: Vec<f64>,
}

pub fn wandering_subspace(pack: &DilationPack) -> Result<WanderingSubspace> {
    let space = &pack.space;
    let g = &pack.metric;
    let dim = space.dim();
    let jstar = pack.j.adjoint() * &g.mat;
    let k = (&jstar * &pack.j)
        .try_inverse()
        .ok_or_else(|| Error::NotPositive {
            min_eig: 0.0,
            tol: 0.0,
        })?;
    let p_im = &pack.j * k * &jstar;
    let complement = CMat::identity(dim, dim) - p_im;
    // feed the projector through G^{-1/2} so its singular values in the
    // orthonormal frame are exactly 0 or 1
    let m_basis = orthonormalize(&(&complement * &g.inv_sqrt), g, 0.5);
    let m_dim = m_basis.rank;
    if m_dim == 0 {
        return Ok(WanderingSubspace {
            basis: CMat::zeros(dim, 0),
            dim: 0,
            m_dim: 0,
            sep_svals: vec![],
        });
    }
    // a vector f = Mb c of M is wandering iff <f, z_i g> = 0 for every i and
    // g in M; the constraint rows (z_i Mb)^* G Mb are exact in the truncated
    // model (shifted components beyond the top degree are orthogonal to the
    // space anyway), so spurious constraints from the truncation of Im J stay
    // at the scale of the isometry residual and a scale-aware cut separates
    // them from the genuine ones
    let (shifts, _) = space.shift_matrices();
    let d = shifts.len();
    let mut cons = CMat::zeros(d * m_dim, m_dim);
    for (i, m) in shifts.iter().enumerate() {
        let block = (m * &m_basis.basis).adjoint() * &g.mat * &m_basis.basis;
        cons.rows_mut(i * m_dim, m_dim).copy_from(&block);
    }
    let svd = svd_accurate(&cons);
    let svals = svd.svals.clone();
    let thresh = pack
        .options
        .sep_tol
        .max(20.0 * pack.iso_residual.max(0.0).sqrt());
    let inside = svals.iter().filter(|&&s| s > thresh).count();
    // the trailing right singular vectors span the null space of the
    // constraints; Mb is G-orthonormal, so the product needs no rescaling
    let basis = &m_basis.basis * svd.v.columns(inside, m_dim - inside).clone_owned();
    Ok(WanderingSubspace {
        dim: basis.ncols(),
        basis,
        m_dim,
        sep_svals: svals,
    })
}

/// Pointwise evaluation of `F(Z T^*) = sum a_{n+1} (Z T^*)^n` at a point of
/// the ball, with the spectral safety gate and the series stop rule.
pub fn f_eval(tuple: &OperatorTuple, kernel: &KernelSpec, z: &[C64]) -> Result<CMat> {
    if z.len() != tuple.d {
        return Err(Error::DimensionMismatch(format!(
            "point has {} coordinates, tuple has d = {}",
            z.len(),
            tuple.d
        )));
    }
    let m = tuple.zt_star(z);
    let rho = spectral_radius(&m);
    let limit = kernel.r_estimate * (1.0 - crate::contraction::DEFAULT_SAFETY_MARGIN);
    if rho >= limit {
        return Err(Error::SpectralUnsafe {
            max_rho: rho,
            r_estimate: kernel.r_estimate,
            limit,
        });
    }
    let p = tuple.p;
    let mut sum = CMat::zeros(p, p);
    let mut power = CMat::identity(p, p);
    let mut run = 0usize;
    let mut last = f64::INFINITY;
    for n in 0..kernel.max_degree {
        if n > 0 {
            power = &m * &power;
        }
        let an = kernel.f_coeff(n);
        let term = an * op_norm(&power);
        sum += &power * cplx(an);
        last = term;
        if term < DEFAULT_SERIES_TOL {
            run += 1;
            if run >= 5 {
                return Ok(sum);
            }
        } else {
            run = 0;
        }
    }
    if last < DEFAULT_SERIES_TOL {
        Ok(sum)
    } else {
        Err(Error::SeriesNotConverged {
            terms: kernel.max_degree,
            last_term: last,
            tol: DEFAULT_SERIES_TOL,
        })
    }
}

/// A matrix polynomial `W(z) = sum_alpha W_alpha z^alpha` mapping a source
/// space into the coefficient space of `H_K`.
#[derive(Debug, Clone)]
pub struct InnerFunctionPoly {
    pub d: usize,
    pub source_dim: usize,
    pub target_dim: usize,
    pub degree: usize,
    pub basis: IndexBasis,
    /// One `target_dim x source_dim` coefficient per basis index.
    pub coeffs: Vec<CMat>,
}

impl InnerFunctionPoly {
    pub fn eval(&self, z: &[C64]) -> CMat {
        assert_eq!(z.len(), self.d);
        let mut out = CMat::zeros(self.target_dim, self.source_dim);
        for (idx, alpha) in self.basis.indices.iter().enumerate() {
            let mut mono = C64::new(1.0, 0.0);
            for (v, &k) in alpha.iter().enumerate() {
                for _ in 0..k {
                    mono *= z[v];
                }
            }
            out += &self.coeffs[idx] * mono;
        }
        out
    }

    /// Columns `W x_e` as coefficient vectors of the given space (which must
    /// share the index basis dimensionality and coefficient dimension).
    pub fn to_space_vectors(&self, space: &SpaceSpec) -> Result<CMat> {
        if space.coeff_dim != self.target_dim || space.basis.d != self.d {
            return Err(Error::DimensionMismatch(
                "space does not match polynomial shape".into(),
            ));
        }
        if space.basis.max_degree < self.degree {
            return Err(Error::DegreeOverflow {
                degree: self.degree,
                max: space.basis.max_degree,
            });
        }
        let mut out = CMat::zeros(space.dim(), self.source_dim);
        let r = self.target_dim;
        for (idx, alpha) in self.basis.indices.iter().enumerate() {
            if let Some(tgt) = space.basis.position(alpha) {
                let mut view = out.rows_mut(tgt * r, r);
                view += &self.coeffs[idx];
            }
        }
        Ok(out)
    }

    pub fn max_nonzero_degree(&self, drop_tol: f64) -> usize {
        let mut deg = 0;
        for idx in 0..self.basis.len() {
            if op_norm(&self.coeffs[idx]) > drop_tol {
                deg = deg.max(self.basis.degree(idx));
            }
        }
        deg
    }
}

/// The transfer-function data `(T, B, C, D)` extracted from a dilation pack.
/// The source space is the admissible subspace, re-expressed so that the
/// standard inner product on `C^s` is the inherited one.
#[derive(Debug, Clone)]
pub struct RealizationQuadruple {
    pub tuple: OperatorTuple,
    /// `dp x s`.
    pub b: CMat,
    /// `r x p` defect square root.
    pub c: CMat,
    /// `r x s` constant coefficient.
    pub d0: CMat,
    pub delta_t: CMat,
    pub source_dim: usize,
    pub target_dim: usize,
}

/// Build `W_T` and its realization quadruple from the pack, by applying the
/// actual space operators (shifts, `delta`, `J`) column by column.
pub fn build_wt(pack: &DilationPack) -> Result<(InnerFunctionPoly, RealizationQuadruple)> {
    let space = &pack.space;
    let r = pack.defect.defect_dim;
    let p = pack.tuple.p;
    let d = pack.tuple.d;
    let y = &pack.tilde_d_basis;
    let s = y.ncols();
    let b = &pack.d_ttilde * y;
    let d0 = -(pack.defect.embed.adjoint() * &pack.ttilde * y);

    let (shifts, _) = space.shift_matrices();
    let (delta_small, _) = space.delta_ops()?;
    let mut cols = CMat::zeros(space.dim(), s);
    for k in 0..s {
        let mut f = CVec::zeros(space.dim());
        for jj in 0..r {
            f[jj] = d0[(jj, k)];
        }
        for i in 0..d {
            let xi = b.view((i * p, k), (p, 1)).clone_owned();
            let jxi = &pack.j * xi;
            f += &delta_small * (&shifts[i] * jxi);
        }
        cols.column_mut(k).copy_from(&f);
    }
    let mut coeffs = Vec::with_capacity(space.basis.len());
    for idx in 0..space.basis.len() {
        coeffs.push(cols.rows(idx * r, r).clone_owned());
    }
    let poly = InnerFunctionPoly {
        d,
        source_dim: s,
        target_dim: r,
        degree: space.basis.max_degree,
        basis: space.basis.clone(),
        coeffs,
    };
    let quad = RealizationQuadruple {
        tuple: pack.tuple.clone(),
        b,
        c: pack.defect.c.clone(),
        d0,
        delta_t: pack.delta_t.clone(),
        source_dim: s,
        target_dim: r,
    };
    Ok((poly, quad))
}

/// Smallest coefficient subspace supporting the image of a dilation matrix:
/// the span of all coefficient blocks of its columns.
pub struct SupportBasis {
    pub basis: CMat,
    pub dim: usize,
    pub singular_values: Vec<f64>,
}

pub fn minimal_support(j_any: &CMat, space: &SpaceSpec) -> SupportBasis {
    let r = space.coeff_dim;
    let p = j_any.ncols();
    let mut blocks = CMat::zeros(r, space.basis.len() * p);
    for idx in 0..space.basis.len() {
        blocks
            .columns_mut(idx * p, p)
            .copy_from(&j_any.rows(idx * r, r));
    }
    let ob = {
        let id = Metric::identity(r);
        let full = orthonormalize(&blocks, &id, 0.0);
        let max_sv = full.singular_values.first().copied().unwrap_or(0.0);
        orthonormalize(&blocks, &id, 1e-8 * max_sv.max(1.0))
    };
    SupportBasis {
        dim: ob.rank,
        basis: ob.basis,
        singular_values: ob.singular_values,
    }
}

/// Result of matching two minimal dilations of the same tuple.
#[derive(Debug, Clone)]
pub struct DilationComparison {
    /// Unitary `E_1 -> E_2` with `(1 (x) U) J_1 = J_2`.
    pub u: CMat,
    /// Distance of the raw least-squares solution from the unitary group.
    pub unitarity_defect: f64,
    /// `||(1 (x) U) J_1 - J_2||` in the weighted norm.
    pub residual: f64,
}

pub const DEFAULT_REC_TOL: f64 = 1e-6;

pub fn compare_dilations(
    j1: &CMat,
    space1: &SpaceSpec,
    j2: &CMat,
    space2: &SpaceSpec,
    rec_tol: f64,
) -> Result<DilationComparison> {
    let s1 = minimal_support(j1, space1);
    if s1.dim < space1.coeff_dim {
        return Err(Error::NotMinimal {
            support: s1.dim,
            full: space1.coeff_dim,
        });
    }
    let s2 = minimal_support(j2, space2);
    if s2.dim < space2.coeff_dim {
        return Err(Error::NotMinimal {
            support: s2.dim,
            full: space2.coeff_dim,
        });
    }
    let r1 = space1.coeff_dim;
    let r2 = space2.coeff_dim;
    if r1 != r2 || space1.basis.len() != space2.basis.len() || j1.ncols() != j2.ncols() {
        return Err(Error::IrreconcilableDilations {
            residual: f64::INFINITY,
            tol: rec_tol,
        });
    }
    let p = j1.ncols();
    let len = space1.basis.len();
    let mut a = CMat::zeros(r1, len * p);
    let mut bb = CMat::zeros(r2, len * p);
    for idx in 0..len {
        a.columns_mut(idx * p, p).copy_from(&j1.rows(idx * r1, r1));
        bb.columns_mut(idx * p, p).copy_from(&j2.rows(idx * r2, r2));
    }
    // least squares U A = B, then polar projection to the unitary group
    let pinv = crate::metric::pseudo_inverse(&a, 1e-12);
    let u_ls = &bb * pinv;
    let svd = svd_accurate(&u_ls);
    let u = &svd.u * svd.v.adjoint();
    let unitarity_defect = op_norm(&(u_ls.adjoint() * &u_ls - CMat::identity(r1, r1)));
    let mut lifted = CMat::zeros(j1.nrows(), p);
    for idx in 0..len {
        lifted
            .rows_mut(idx * r1, r1)
            .copy_from(&(&u * j1.rows(idx * r1, r1)));
    }
    let g2 = space2.metric();
    let residual = op_norm(&(&g2.sqrt * (&lifted - j2)));
    if residual > rec_tol {
        return Err(Error::IrreconcilableDilations {
            residual,
            tol: rec_tol,
        });
    }
    Ok(DilationComparison {
        u,
        unitarity_defect,
        residual,
    })
}

/// All dilation-level invariant residuals for one pack, used by the
/// verification commands and the acceptance suite.
#[derive(Debug, Clone, Serialize)]
pub struct DilationReport {
    pub n: usize,
    pub validated_band: usize,
    pub iso_residual: f64,
    pub intertwining_residuals: Vec<f64>,
    pub pureness_final: f64,
    pub delta_t_min_eig: f64,
    pub delta_t_bound: f64,
    pub delta_t_eigs: Vec<f64>,
    pub ttilde_contraction_min_eig: f64,
    pub ttilde_sigma_identity: f64,
    pub ttilde_range_identity: f64,
    pub block_unitary_residual: f64,
    pub d_ttilde_star_eq_c: f64,
    pub defect_intertwine: f64,
    pub wandering_dim: usize,
    pub admissible_dim: usize,
    pub wandering_param_residual: f64,
    pub wandering_adjoint_residual: f64,
    pub norm_identity_rel_error: f64,
    pub wt_gram_residual: f64,
    pub wt_principal_angle_max: f64,
    pub cf_lemma_residual: f64,
    pub seed: u64,
}

/// Compute every invariant residual of the pack. `seed` drives the sampled
/// checks (evaluation points, random arguments).
pub fn verify_pack(pack: &DilationPack, seed: u64) -> Result<DilationReport> {
    let p = pack.tuple.p;
    let d = pack.tuple.d;
    let r = pack.defect.defect_dim;
    let space = &pack.space;
    let g = &pack.metric;
    let gd = &pack.gd;
    let dim = space.dim();

    let eig = SymmetricEigen::new(pack.delta_t.clone());
    let delta_t_eigs: Vec<f64> = eig.eigenvalues.iter().cloned().collect();

    // Ttilde is a contraction in its metrics
    let a_ortho = CMat::identity(d * p, d * p)
        - &gd.sqrt * &pack.ttilde_adj * &pack.ttilde * &gd.inv_sqrt;
    let eig = SymmetricEigen::new(hermitian_part(&a_ortho));
    let ttilde_contraction_min_eig =
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);

    // Ttilde Ttilde^[*] = sigma_T(Delta_T) = j^* P_{range} j
    let tt = &pack.ttilde * &pack.ttilde_adj;
    let mut sigma_delta = CMat::zeros(p, p);
    for i in 0..d {
        sigma_delta += pack.tuple.mats()[i].clone() * &pack.delta_t * pack.tuple.mats()[i].adjoint();
    }
    let ttilde_sigma_identity = op_norm(&(&tt - &sigma_delta));
    let jstar = pack.j.adjoint() * &g.mat;
    let range_proj = space.range_projection()?;
    let ttilde_range_identity = op_norm(&(&tt - &jstar * range_proj * &pack.j));

    // block unitary [[Ttilde, D_Ttilde*],[D_Ttilde, -Ttilde^[*]]]
    let nn = p + d * p;
    let mut u = CMat::zeros(nn, nn);
    u.view_mut((0, 0), (p, d * p)).copy_from(&pack.ttilde);
    u.view_mut((0, d * p), (p, p)).copy_from(&pack.d_ttilde_star);
    u.view_mut((p, 0), (d * p, d * p)).copy_from(&pack.d_ttilde);
    u.view_mut((p, d * p), (d * p, p))
        .copy_from(&(-pack.ttilde_adj.clone()));
    let dom = {
        let mut m = gd.mat.clone_owned();
        m = m.insert_rows(d * p, p, C64::new(0.0, 0.0));
        m = m.insert_columns(d * p, p, C64::new(0.0, 0.0));
        for i in 0..p {
            m[(d * p + i, d * p + i)] = cplx(1.0);
        }
        Metric::from_hermitian(&m)
    };
    let cod = {
        let mut m = CMat::identity(nn, nn);
        m.view_mut((p, p), (d * p, d * p)).copy_from(&gd.mat);
        Metric::from_hermitian(&m)
    };
    let u_ortho = &cod.sqrt * &u * &dom.inv_sqrt;
    let id = CMat::identity(nn, nn);
    let block_unitary_residual = op_norm(&(u_ortho.adjoint() * &u_ortho - &id))
        .max(op_norm(&(&u_ortho * u_ortho.adjoint() - &id)));

    // D_Ttilde* equals the positive square root of the defect operator
    let q_sqrt = hermitian_sqrt(&pack.defect.defect_op, 1e-8);
    let d_ttilde_star_eq_c = op_norm(&(&pack.d_ttilde_star - q_sqrt.clone()));
    let defect_intertwine = op_norm(&(
        &pack.ttilde * &pack.d_ttilde - &pack.d_ttilde_star * &pack.ttilde
    ));

    // wandering parametrization and norm identity
    let wandering = wandering_subspace(pack)?;
    let (_, adjoint_shifts) = space.shift_matrices();
    let mut wandering_param_residual = 0.0f64;
    let mut wandering_adjoint_residual = 0.0f64;
    let mut norm_identity_rel_error = 0.0f64;
    for f in wandering.basis.column_iter() {
        let f = f.clone_owned();
        let mut xs = Vec::with_capacity(d);
        for i in 0..d {
            let mif = &adjoint_shifts[i] * &f;
            let xi = adjoint_dilation_apply(pack, &mif)?;
            // consistency: J x_i reproduces the shifted adjoint
            let diff = &pack.j * &xi - &mif;
            wandering_adjoint_residual =
                wandering_adjoint_residual.max((&g.sqrt * diff).norm());
            xs.push(xi);
        }
        let f0 = f.rows(0, r).clone_owned();
        let mut resid = &q_sqrt * (&pack.defect.embed * &f0);
        for i in 0..d {
            resid += pack.tuple.mats()[i].clone() * &pack.delta_t * &xs[i];
        }
        wandering_param_residual = wandering_param_residual.max(resid.norm());
        let mut rhs = f0.norm_squared();
        for xi in &xs {
            rhs += (xi.adjoint() * &pack.delta_t * xi)[(0, 0)].re;
        }
        let lhs = space.inner(&f, &f).re;
        norm_identity_rel_error =
            norm_identity_rel_error.max((lhs - rhs).abs() / lhs.max(1e-30));
    }

    // W_T spans the wandering subspace and is isometric on the admissible space
    let (poly, _quad) = build_wt(pack)?;
    let wcols = poly.to_space_vectors(space)?;
    let s = poly.source_dim;
    let gram = wcols.adjoint() * &g.mat * &wcols;
    let wt_gram_residual = op_norm(&(gram - CMat::identity(s, s)));
    let wt_principal_angle_max = if s == 0 && wandering.dim == 0 {
        0.0
    } else if s != wandering.dim {
        std::f64::consts::FRAC_PI_2
    } else {
        let wb = orthonormalize(&wcols, g, 0.5);
        principal_angles(&wb.basis, &wandering.basis, g)
            .into_iter()
            .fold(0.0f64, f64::max)
    };

    // sampled identity: C F(ZT^*) Z x equals the evaluation of
    // delta M_z (J x_i) at the same point
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (shifts, _) = space.shift_matrices();
    let (delta_small, _) = space.delta_ops()?;
    let mut cf_lemma_residual = 0.0f64;
    for _ in 0..5 {
        let scale = 0.3 / (d as f64).sqrt();
        let z: Vec<C64> = (0..d)
            .map(|_| {
                C64::new(
                    (rng.gen::<f64>() * 2.0 - 1.0) * scale,
                    (rng.gen::<f64>() * 2.0 - 1.0) * scale,
                )
            })
            .collect();
        let x: Vec<CVec> = (0..d)
            .map(|_| {
                CVec::from_fn(p, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            })
            .collect();
        let f = f_eval(&pack.tuple, &pack.kernel, &z)?;
        let mut zx = CVec::zeros(p);
        for i in 0..d {
            zx += &x[i] * z[i];
        }
        let lhs = &pack.defect.c * (&f * zx);
        let mut gvec = CVec::zeros(dim);
        for i in 0..d {
            gvec += &delta_small * (&shifts[i] * (&pack.j * &x[i]));
        }
        let rhs = space.eval(&gvec, &z);
        cf_lemma_residual = cf_lemma_residual.max((lhs - rhs).norm());
    }

    Ok(DilationReport {
        n: pack.n,
        validated_band: pack.n - 1,
        iso_residual: pack.iso_residual,
        intertwining_residuals: pack.intertwining_residuals.clone(),
        pureness_final: pack.pureness_final,
        delta_t_min_eig: pack.delta_t_min_eig,
        delta_t_bound: pack.delta_t_bound,
        delta_t_eigs,
        ttilde_contraction_min_eig,
        ttilde_sigma_identity,
        ttilde_range_identity,
        block_unitary_residual,
        d_ttilde_star_eq_c,
        defect_intertwine,
        wandering_dim: wandering.dim,
        admissible_dim: pack.tilde_d_basis.ncols(),
        wandering_param_residual,
        wandering_adjoint_residual,
        norm_identity_rel_error,
        wt_gram_residual,
        wt_principal_angle_max,
        cf_lemma_residual,
        seed,
    })
}
