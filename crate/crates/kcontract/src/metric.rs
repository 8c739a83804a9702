//! Linear algebra relative to a positive definite metric.
//!
//! All metric-aware operations (adjoints, orthonormalization, principal
//! angles, operator norms) are reduced to the standard inner product by
//! conjugating with the Hermitian square root of the Gram matrix. One
//! canonical reduction keeps the adjoint conventions in a single place.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub fn cplx(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Hermitian part of a square matrix.
pub fn hermitian_part(a: &CMat) -> CMat {
    (a + a.adjoint()) * cplx(0.5)
}

/// Operator (spectral) norm, via the top eigenvalue of the smaller Gram
/// matrix (the bundled SVD is not accurate enough to be trusted here).
pub fn op_norm(a: &CMat) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    let gram = if a.ncols() <= a.nrows() {
        a.adjoint() * a
    } else {
        a * a.adjoint()
    };
    let eig = nalgebra::SymmetricEigen::new(gram);
    eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max).sqrt()
}

/// Singular value decomposition with reliable singular vectors: Householder
/// QR reduction followed by a Hermitian eigensolve of the Jordan-Wielandt
/// embedding of the triangular factor. The eigenvectors of the near-null
/// cluster can mix left and right types, so degenerate pairs are replaced by
/// an orthonormal completion of the right-vector family with directly
/// measured residual norms.
pub struct AccurateSvd {
    /// Singular values, descending; length `min(m, n)`.
    pub svals: Vec<f64>,
    /// Left singular vectors, `m x min(m, n)`, column-aligned with `svals`;
    /// columns for values in the near-null cluster may be zero.
    pub u: CMat,
    /// Right singular vectors, `n x min(m, n)`, column-aligned with `svals`;
    /// for `m >= n` this is a complete orthonormal family.
    pub v: CMat,
}

pub fn svd_accurate(a: &CMat) -> AccurateSvd {
    let (m, n) = (a.nrows(), a.ncols());
    if n == 0 || m == 0 {
        return AccurateSvd {
            svals: vec![],
            u: CMat::zeros(m, 0),
            v: CMat::zeros(n, 0),
        };
    }
    if m < n {
        let t = svd_accurate(&a.adjoint());
        return AccurateSvd {
            svals: t.svals,
            u: t.v,
            v: t.u,
        };
    }
    let qr = a.clone().qr();
    let q = qr.q();
    let r = qr.r();
    let mut h = CMat::zeros(2 * n, 2 * n);
    h.view_mut((0, n), (n, n)).copy_from(&r);
    h.view_mut((n, 0), (n, n)).copy_from(&r.adjoint());
    let eig = nalgebra::SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].partial_cmp(&eig.eigenvalues[x]).unwrap());
    // right-vector halves; eigenvectors of the near-null cluster can
    // degenerate into pure left or right type, detected by the norms of the
    // two halves (1/sqrt(2) each in the regular case)
    let mut entries: Vec<(f64, CVec)> = Vec::new();
    let mut deferred = 0usize;
    for &i in order.iter().take(n) {
        let sigma = eig.eigenvalues[i].max(0.0);
        let w = eig.eigenvectors.column(i);
        let bot = w.rows(n, n).clone_owned();
        let bn = bot.norm();
        if w.rows(0, n).norm() > 0.3 && bn > 0.3 {
            entries.push((sigma, bot / cplx(bn)));
        } else {
            deferred += 1;
        }
    }
    if deferred > 0 {
        // orthonormal completion of the right family
        let mut proj = CMat::identity(n, n);
        for e in &entries {
            proj -= &e.1 * e.1.adjoint();
        }
        let peig = nalgebra::SymmetricEigen::new(proj);
        let mut comp: Vec<(f64, usize)> = (0..n).map(|i| (peig.eigenvalues[i], i)).collect();
        comp.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
        for &(val, i) in comp.iter().take(deferred) {
            debug_assert!(val > 0.5, "orthonormal completion defect {val}");
            let v = peig.eigenvectors.column(i).clone_owned();
            let sigma = (&r * &v).norm();
            entries.push((sigma, v));
        }
    }
    entries.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    // within a degenerate cluster the extracted halves need not be mutually
    // orthogonal; re-orthonormalize the (near-unitary) family by QR, then
    // measure every residual directly on the triangular factor
    let mut v = CMat::zeros(n, n);
    for (col, e) in entries.iter().enumerate() {
        v.column_mut(col).copy_from(&e.1);
    }
    let v = v.qr().q();
    let mut order: Vec<(f64, CVec, CVec)> = Vec::with_capacity(n);
    for col in v.column_iter() {
        let vc = col.clone_owned();
        let rv = &r * &vc;
        let sigma = rv.norm();
        let uc = if sigma > 0.0 {
            rv / cplx(sigma)
        } else {
            CVec::zeros(n)
        };
        order.push((sigma, vc, uc));
    }
    order.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    let svals: Vec<f64> = order.iter().map(|e| e.0).collect();
    let mut v = CMat::zeros(n, n);
    let mut u = CMat::zeros(m, n);
    for (col, e) in order.iter().enumerate() {
        v.column_mut(col).copy_from(&e.1);
        if e.0 > 0.0 {
            u.column_mut(col).copy_from(&(&q * &e.2));
        }
    }
    AccurateSvd { svals, u, v }
}

/// Moore-Penrose pseudo-inverse with threshold `tol` on the singular values.
pub fn pseudo_inverse(a: &CMat, tol: f64) -> CMat {
    let svd = svd_accurate(a);
    let mut out = CMat::zeros(a.ncols(), a.nrows());
    for (i, &s) in svd.svals.iter().enumerate() {
        if s > tol {
            let v = svd.v.column(i);
            let u = svd.u.column(i);
            out += v * u.adjoint() / cplx(s);
        }
    }
    out
}

/// Eigendecomposition-based Hermitian square root. Eigenvalues below
/// `-clip_tol` are an error in the caller's reasoning; small negatives from
/// rounding are clipped to zero.
pub fn hermitian_sqrt(a: &CMat, clip_tol: f64) -> CMat {
    let h = hermitian_part(a);
    let eig = nalgebra::SymmetricEigen::new(h);
    let n = a.nrows();
    let mut d = CMat::zeros(n, n);
    for i in 0..n {
        let lam = eig.eigenvalues[i];
        debug_assert!(lam > -clip_tol.max(1e-8), "hermitian_sqrt: eigenvalue {lam}");
        d[(i, i)] = cplx(lam.max(0.0).sqrt());
    }
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Spectral radius of a general complex matrix, via complex Schur form with a
/// norm-power fallback for the rare non-converged case.
pub fn spectral_radius(a: &CMat) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    if let Some(schur) = a.clone().try_schur(1e-12, 20000) {
        let (_, t) = schur.unpack();
        return (0..n).map(|i| t[(i, i)].norm()).fold(0.0, f64::max);
    }
    // fallback: ||A^k||^{1/k} over-estimates rho and converges from above
    let mut p = a.clone();
    let mut k = 1u32;
    while k < 64 {
        p = &p * &p;
        k *= 2;
    }
    op_norm(&p).powf(1.0 / k as f64)
}

/// A positive definite metric with cached Hermitian square root and inverse.
#[derive(Debug, Clone)]
pub struct Metric {
    pub mat: CMat,
    pub sqrt: CMat,
    pub inv_sqrt: CMat,
}

impl Metric {
    pub fn identity(n: usize) -> Metric {
        Metric {
            mat: CMat::identity(n, n),
            sqrt: CMat::identity(n, n),
            inv_sqrt: CMat::identity(n, n),
        }
    }

    pub fn from_diag(d: &[f64]) -> Metric {
        let n = d.len();
        let mut mat = CMat::zeros(n, n);
        let mut sqrt = CMat::zeros(n, n);
        let mut inv_sqrt = CMat::zeros(n, n);
        for i in 0..n {
            assert!(d[i] > 0.0, "metric diagonal must be positive, got {}", d[i]);
            mat[(i, i)] = cplx(d[i]);
            sqrt[(i, i)] = cplx(d[i].sqrt());
            inv_sqrt[(i, i)] = cplx(1.0 / d[i].sqrt());
        }
        Metric { mat, sqrt, inv_sqrt }
    }

    /// Build from a Hermitian positive definite Gram matrix.
    pub fn from_hermitian(g: &CMat) -> Metric {
        let h = hermitian_part(g);
        let eig = nalgebra::SymmetricEigen::new(h.clone());
        let n = g.nrows();
        let mut s = CMat::zeros(n, n);
        let mut si = CMat::zeros(n, n);
        for i in 0..n {
            let lam = eig.eigenvalues[i];
            assert!(lam > 0.0, "metric must be positive definite, eigenvalue {lam}");
            s[(i, i)] = cplx(lam.sqrt());
            si[(i, i)] = cplx(1.0 / lam.sqrt());
        }
        let sqrt = &eig.eigenvectors * s * eig.eigenvectors.adjoint();
        let inv_sqrt = &eig.eigenvectors * si * eig.eigenvectors.adjoint();
        Metric { mat: h, sqrt, inv_sqrt }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Direct sum of `k` copies of this metric (block diagonal).
    pub fn direct_sum(&self, k: usize) -> Metric {
        let n = self.dim();
        let mut mat = CMat::zeros(n * k, n * k);
        let mut sqrt = CMat::zeros(n * k, n * k);
        let mut inv_sqrt = CMat::zeros(n * k, n * k);
        for b in 0..k {
            mat.view_mut((b * n, b * n), (n, n)).copy_from(&self.mat);
            sqrt.view_mut((b * n, b * n), (n, n)).copy_from(&self.sqrt);
            inv_sqrt
                .view_mut((b * n, b * n), (n, n))
                .copy_from(&self.inv_sqrt);
        }
        Metric { mat, sqrt, inv_sqrt }
    }

    pub fn inner(&self, x: &CVec, y: &CVec) -> C64 {
        (y.adjoint() * &self.mat * x)[(0, 0)]
    }

    pub fn norm(&self, x: &CVec) -> f64 {
        self.inner(x, x).re.max(0.0).sqrt()
    }
}

/// Metric adjoint of `a : (dom, G_dom) -> (cod, G_cod)`, i.e.
/// `G_dom^{-1} a^H G_cod`.
pub fn adjoint(a: &CMat, dom: &Metric, cod: &Metric) -> CMat {
    &dom.inv_sqrt * &dom.inv_sqrt * a.adjoint() * &cod.mat
}

/// Representation of `a` between orthonormal frames:
/// `S_cod a S_dom^{-1}` with `S = G^{1/2}`.
pub fn to_ortho(a: &CMat, dom: &Metric, cod: &Metric) -> CMat {
    &cod.sqrt * a * &dom.inv_sqrt
}

/// Operator norm of `a` with respect to the given metrics.
pub fn weighted_op_norm(a: &CMat, dom: &Metric, cod: &Metric) -> f64 {
    op_norm(&to_ortho(a, dom, cod))
}

/// Result of a rank-revealing orthonormalization.
pub struct OrthoBasis {
    /// Metric-orthonormal basis columns of the column span.
    pub basis: CMat,
    /// All singular values seen, descending; `basis` keeps those `> rank_tol`.
    pub singular_values: Vec<f64>,
    pub rank: usize,
}

/// Metric-orthonormal basis of the column span of `cols`, via SVD in the
/// orthonormal frame. `rank_tol` is absolute on the singular values.
pub fn orthonormalize(cols: &CMat, metric: &Metric, rank_tol: f64) -> OrthoBasis {
    if cols.ncols() == 0 {
        return OrthoBasis {
            basis: CMat::zeros(cols.nrows(), 0),
            singular_values: vec![],
            rank: 0,
        };
    }
    let ortho = &metric.sqrt * cols;
    let svd = svd_accurate(&ortho);
    let sv = svd.svals.clone();
    let rank = sv.iter().filter(|&&s| s > rank_tol).count();
    let basis = &metric.inv_sqrt * svd.u.columns(0, rank).clone_owned();
    OrthoBasis {
        basis,
        singular_values: sv,
        rank,
    }
}

/// Principal angles (radians, ascending cosines descending) between the spans
/// of two column families, both orthonormal with respect to `metric`.
pub fn principal_angles(q1: &CMat, q2: &CMat, metric: &Metric) -> Vec<f64> {
    let m = q1.adjoint() * &metric.mat * q2;
    svd_accurate(&m)
        .svals
        .iter()
        .map(|&c| c.clamp(-1.0, 1.0).acos())
        .collect()
}
