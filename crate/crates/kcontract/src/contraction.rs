//! Analysis of a commuting matrix tuple against a kernel: the completely
//! positive map `sigma_T`, the defect operator `(1/K)(T)` as a stopped
//! operator series, pureness residuals, and the spectral safety check that
//! gates every series evaluation.

use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{cplx, hermitian_part, op_norm, spectral_radius, C64, CMat};
use crate::series::KernelSpec;

/// A commuting tuple of `d` complex `p x p` matrices.
#[derive(Debug, Clone)]
pub struct OperatorTuple {
    pub d: usize,
    pub p: usize,
    mats: Vec<CMat>,
    pub comm_tol: f64,
}

pub const DEFAULT_COMM_TOL: f64 = 1e-10;

impl OperatorTuple {
    /// Validates square shapes and pairwise commutativity up to
    /// `comm_tol * max(1, ||T_i|| ||T_j||)`.
    pub fn new(mats: Vec<CMat>, comm_tol: f64) -> Result<OperatorTuple> {
        if mats.is_empty() {
            return Err(Error::DimensionMismatch("empty tuple".into()));
        }
        let p = mats[0].nrows();
        for m in &mats {
            if m.nrows() != p || m.ncols() != p {
                return Err(Error::DimensionMismatch(format!(
                    "expected {p}x{p} matrices, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let norms: Vec<f64> = mats.iter().map(op_norm).collect();
        for i in 0..mats.len() {
            for j in i + 1..mats.len() {
                let comm = &mats[i] * &mats[j] - &mats[j] * &mats[i];
                let norm = op_norm(&comm);
                let tol = comm_tol * (norms[i] * norms[j]).max(1.0);
                if norm > tol {
                    return Err(Error::NotCommuting { i, j, norm, tol });
                }
            }
        }
        Ok(OperatorTuple {
            d: mats.len(),
            p,
            mats,
            comm_tol,
        })
    }

    pub fn mats(&self) -> &[CMat] {
        &self.mats
    }

    /// `T^{*alpha} = prod T_i^{* alpha_i}` (adjoints commute along with T).
    pub fn adjoint_power(&self, alpha: &[u32]) -> CMat {
        let mut out = CMat::identity(self.p, self.p);
        for (i, &k) in alpha.iter().enumerate() {
            let a = self.mats[i].adjoint();
            for _ in 0..k {
                out = &a * out;
            }
        }
        out
    }

    /// `T^{alpha}`.
    pub fn power(&self, alpha: &[u32]) -> CMat {
        let mut out = CMat::identity(self.p, self.p);
        for (i, &k) in alpha.iter().enumerate() {
            for _ in 0..k {
                out = &self.mats[i] * out;
            }
        }
        out
    }

    /// The row operator `Z T^* = sum_i z_i T_i^*` at a point `z`.
    pub fn zt_star(&self, z: &[C64]) -> CMat {
        let mut out = CMat::zeros(self.p, self.p);
        for i in 0..self.d {
            out += self.mats[i].adjoint() * z[i];
        }
        out
    }
}

/// `sigma_T(X) = sum_i T_i X T_i^*`. Hermitian- and positivity-preserving.
pub fn apply_sigma(tuple: &OperatorTuple, x: &CMat) -> Result<CMat> {
    if x.nrows() != tuple.p || x.ncols() != tuple.p {
        return Err(Error::DimensionMismatch(format!(
            "sigma_T argument must be {0}x{0}",
            tuple.p
        )));
    }
    let mut out = CMat::zeros(tuple.p, tuple.p);
    for t in &tuple.mats {
        out += t * x * t.adjoint();
    }
    Ok(out)
}

/// Outcome of the joint spectral safety check for series evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct SafetyReport {
    pub max_rho: f64,
    pub r_estimate: f64,
    pub margin: f64,
    pub samples: usize,
    pub seed: u64,
    pub ok: bool,
}

pub const DEFAULT_SAFETY_MARGIN: f64 = 0.05;

/// Estimate `max ||z|| = 1: rho(Z T^*)` by sampling the unit sphere (plus the
/// coordinate directions) and compare against the kernel's radius estimate.
/// Finite sampling: evidence, not a proof; the report carries the sample count.
pub fn spectral_safety(
    tuple: &OperatorTuple,
    kernel: &KernelSpec,
    samples: usize,
    seed: u64,
) -> SafetyReport {
    assert!(samples >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rho: f64 = 0.0;
    let probe = |z: &[C64]| {
        let m = tuple.zt_star(z);
        spectral_radius(&m)
    };
    for i in 0..tuple.d {
        let mut z = vec![C64::new(0.0, 0.0); tuple.d];
        z[i] = C64::new(1.0, 0.0);
        max_rho = max_rho.max(probe(&z));
    }
    for _ in 0..samples {
        let mut z: Vec<C64> = (0..tuple.d)
            .map(|_| C64::new(rng.gen::<f64>() * 2.0 - 1.0, rng.gen::<f64>() * 2.0 - 1.0))
            .collect();
        let norm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        for c in z.iter_mut() {
            *c /= cplx(norm);
        }
        max_rho = max_rho.max(probe(&z));
    }
    let margin = DEFAULT_SAFETY_MARGIN;
    SafetyReport {
        max_rho,
        r_estimate: kernel.r_estimate,
        margin,
        samples,
        seed,
        ok: max_rho < kernel.r_estimate * (1.0 - margin),
    }
}

/// The defect operator `(1/K)(T)` with its square-root factor restricted to
/// the defect space.
#[derive(Debug, Clone)]
pub struct DefectResult {
    /// Hermitian truncated series value of `sum c_n sigma_T^n(1)`.
    pub defect_op: CMat,
    pub series_terms_used: usize,
    pub tail_estimate: f64,
    pub min_eig: f64,
    pub is_contraction: bool,
    /// `C = Lambda^{1/2} V^*`: defect-space coordinates of the square root,
    /// `r x p` with `r = defect_dim`.
    pub c: CMat,
    /// Isometric embedding `V: C^r -> C^p` of the defect space (eigenvectors).
    pub embed: CMat,
    pub defect_dim: usize,
    pub pos_tol: f64,
    pub rank_tol: f64,
}

pub const DEFAULT_SERIES_TOL: f64 = 1e-14;
const STOP_RUN: usize = 5;

/// Index of the last nonzero reciprocal coefficient, if the stored tail is
/// identically zero (rational kernels like Drury-Arveson or integer powers).
fn finite_c_support(kernel: &KernelSpec) -> Option<usize> {
    let mut last = 0;
    for n in 0..=kernel.max_degree {
        if kernel.c_f64(n) != 0.0 {
            last = n;
        }
    }
    if last < kernel.max_degree {
        Some(last)
    } else {
        None
    }
}

/// Evaluate `(1/K)(T) = sum_n c_n sigma_T^n(1)` with the magnitude stop rule:
/// stop once `|c_n| ||sigma_T^n(1)||` stays below `series_tol` for 5
/// consecutive terms, or at the kernel horizon.
///
/// The spectral safety gate is skipped when the reciprocal series terminates
/// within the horizon (the sum is then a finite, exact expression).
pub fn defect_operator(
    tuple: &OperatorTuple,
    kernel: &KernelSpec,
    series_tol: f64,
) -> Result<DefectResult> {
    let finite = finite_c_support(kernel);
    if finite.is_none() {
        let safety = spectral_safety(tuple, kernel, 32, 0);
        if !safety.ok {
            return Err(Error::SpectralUnsafe {
                max_rho: safety.max_rho,
                r_estimate: safety.r_estimate,
                limit: safety.r_estimate * (1.0 - safety.margin),
            });
        }
    }
    let p = tuple.p;
    let mut sum = CMat::zeros(p, p);
    let mut power = CMat::identity(p, p); // sigma_T^n(1)
    let mut run = 0usize;
    let mut terms_used = 0usize;
    let mut last_term = f64::INFINITY;
    let mut prev_term = f64::INFINITY;
    let mut ratio: f64 = 0.0;
    let mut converged = false;
    for n in 0..=kernel.max_degree {
        if n > 0 {
            power = apply_sigma(tuple, &power)?;
        }
        let cn = kernel.c_f64(n);
        let term_norm = cn.abs() * op_norm(&power);
        sum += &power * cplx(cn);
        terms_used = n + 1;
        if term_norm < series_tol {
            run += 1;
        } else {
            run = 0;
        }
        if term_norm > 0.0 && prev_term.is_finite() && prev_term > 0.0 {
            ratio = ratio.max(term_norm / prev_term);
        }
        prev_term = term_norm;
        last_term = term_norm;
        if run >= STOP_RUN || finite.map_or(false, |l| n >= l + STOP_RUN) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SeriesNotConverged {
            terms: terms_used,
            last_term,
            tol: series_tol,
        });
    }
    // conservative geometric tail from the observed term ratio
    let tail_estimate = if ratio > 0.0 && ratio < 1.0 {
        last_term * ratio / (1.0 - ratio)
    } else {
        last_term
    };
    let defect_op = hermitian_part(&sum);
    let eig = SymmetricEigen::new(defect_op.clone());
    let max_eig = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let pos_tol = 1e-10 * op_norm(&defect_op).max(1.0);
    if min_eig < -pos_tol {
        return Err(Error::NotPositive { min_eig, tol: pos_tol });
    }
    let rank_tol = 1e-10 * max_eig.max(f64::MIN_POSITIVE);
    let mut keep: Vec<usize> = (0..p).filter(|&i| eig.eigenvalues[i] > rank_tol).collect();
    // deterministic order: descending eigenvalue
    keep.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let r = keep.len();
    let mut c = CMat::zeros(r, p);
    let mut embed = CMat::zeros(p, r);
    for (row, &i) in keep.iter().enumerate() {
        let lam = eig.eigenvalues[i].max(0.0).sqrt();
        let mut v = eig.eigenvectors.column(i).clone_owned();
        // phase convention: first nonzero entry positive real
        if let Some(k) = (0..p).find(|&k| v[k].norm() > 1e-12) {
            let phase = v[k] / cplx(v[k].norm());
            v /= phase;
        }
        for col in 0..p {
            c[(row, col)] = v[col].conj() * cplx(lam);
            embed[(col, row)] = v[col];
        }
    }
    Ok(DefectResult {
        defect_op,
        series_terms_used: terms_used,
        tail_estimate,
        min_eig,
        is_contraction: true,
        c,
        embed,
        defect_dim: r,
        pos_tol,
        rank_tol,
    })
}

/// Pureness diagnostics: the reconstruction residuals
/// `residual_N = || 1 - sum_{n<=N} a_n sigma_T^n((1/K)(T)) ||`.
#[derive(Debug, Clone, Serialize)]
pub struct PurenessReport {
    pub residuals: Vec<f64>,
    /// Norms of the individual terms `a_n sigma_T^n(Q)`, same indexing.
    pub term_norms: Vec<f64>,
    pub final_residual: f64,
    pub horizon: usize,
}

pub fn pureness_residuals(
    tuple: &OperatorTuple,
    kernel: &KernelSpec,
    defect: &DefectResult,
    max_terms: usize,
) -> Result<PurenessReport> {
    let p = tuple.p;
    let horizon = max_terms.min(kernel.max_degree);
    let id = CMat::identity(p, p);
    let mut partial = CMat::zeros(p, p);
    let mut power = defect.defect_op.clone(); // sigma_T^n(Q)
    let mut residuals = Vec::with_capacity(horizon + 1);
    let mut term_norms = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        if n > 0 {
            power = apply_sigma(tuple, &power)?;
        }
        let an = kernel.a_f64(n);
        partial += &power * cplx(an);
        term_norms.push(an * op_norm(&power));
        residuals.push(op_norm(&(&id - &partial)));
    }
    let final_residual = *residuals.last().unwrap();
    Ok(PurenessReport {
        residuals,
        term_norms,
        final_residual,
        horizon,
    })
}

impl PurenessReport {
    /// Verdict "pure at tolerance tau": final residual below tau and
    /// non-increasing over the last five terms (tiny rounding slack).
    pub fn is_pure(&self, tau: f64) -> bool {
        if self.final_residual >= tau {
            return false;
        }
        let n = self.residuals.len();
        let start = n.saturating_sub(STOP_RUN);
        for i in start + 1..n {
            if self.residuals[i] > self.residuals[i - 1] * (1.0 + 1e-9) + 1e-15 {
                return false;
            }
        }
        true
    }
}

// --- serialization -----------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TupleWire {
    pub d: usize,
    pub p: usize,
    /// `matrices[i][row][col] = [re, im]`
    pub matrices: Vec<Vec<Vec<[f64; 2]>>>,
    #[serde(default = "default_comm_tol")]
    pub comm_tol: f64,
}

fn default_comm_tol() -> f64 {
    DEFAULT_COMM_TOL
}

impl OperatorTuple {
    pub fn to_wire(&self) -> TupleWire {
        TupleWire {
            d: self.d,
            p: self.p,
            matrices: self
                .mats
                .iter()
                .map(|m| {
                    (0..m.nrows())
                        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                        .collect()
                })
                .collect(),
            comm_tol: self.comm_tol,
        }
    }

    pub fn from_wire(wire: &TupleWire) -> Result<OperatorTuple> {
        if wire.matrices.len() != wire.d {
            return Err(Error::DimensionMismatch(format!(
                "declared d = {} but {} matrices given",
                wire.d,
                wire.matrices.len()
            )));
        }
        let mut mats = Vec::with_capacity(wire.d);
        for m in &wire.matrices {
            if m.len() != wire.p || m.iter().any(|row| row.len() != wire.p) {
                return Err(Error::DimensionMismatch(format!(
                    "matrix is not {0}x{0}",
                    wire.p
                )));
            }
            mats.push(CMat::from_fn(wire.p, wire.p, |i, j| {
                C64::new(m[i][j][0], m[i][j][1])
            }));
        }
        OperatorTuple::new(mats, wire.comm_tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::Family;

    pub fn scalar(lambda: C64) -> OperatorTuple {
        OperatorTuple::new(vec![CMat::from_element(1, 1, lambda)], DEFAULT_COMM_TOL).unwrap()
    }

    #[test]
    fn sigma_examples() {
        let p = 2;
        let zero = OperatorTuple::new(vec![CMat::zeros(p, p), CMat::zeros(p, p)], 1e-10).unwrap();
        let x = CMat::identity(p, p);
        assert_eq!(apply_sigma(&zero, &x).unwrap(), CMat::zeros(p, p));

        let t = scalar(cplx(0.5));
        let out = apply_sigma(&t, &CMat::from_element(1, 1, cplx(1.0))).unwrap();
        assert!((out[(0, 0)].re - 0.25).abs() < 1e-15);

        let half = CMat::identity(2, 2) * cplx(0.5);
        let t2 = OperatorTuple::new(vec![half.clone(), half], 1e-10).unwrap();
        let out = apply_sigma(&t2, &CMat::identity(2, 2)).unwrap();
        assert!(op_norm(&(out - CMat::identity(2, 2) * cplx(0.5))) < 1e-15);

        assert!(apply_sigma(&t2, &CMat::zeros(3, 3)).is_err());
    }

    #[test]
    fn sigma_monotone_on_random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = OperatorTuple::new(
            vec![CMat::from_fn(3, 3, |i, j| {
                if i == j {
                    cplx(0.2 + 0.1 * i as f64)
                } else {
                    C64::new(0.0, 0.0)
                }
            })],
            1e-10,
        )
        .unwrap();
        for _ in 0..10 {
            let a = CMat::from_fn(3, 3, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            let b = CMat::from_fn(3, 3, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            let y = &a * a.adjoint();
            let x = &y + &b * b.adjoint();
            let diff = apply_sigma(&t, &x).unwrap() - apply_sigma(&t, &y).unwrap();
            let eig = SymmetricEigen::new(hermitian_part(&diff));
            assert!(eig.eigenvalues.iter().all(|&l| l > -1e-10));
        }
    }

    #[test]
    fn commutativity_enforced() {
        let mut a = CMat::zeros(2, 2);
        a[(0, 1)] = cplx(1.0);
        let mut b = CMat::zeros(2, 2);
        b[(1, 0)] = cplx(1.0);
        assert!(matches!(
            OperatorTuple::new(vec![a, b], 1e-10),
            Err(Error::NotCommuting { .. })
        ));
    }

    #[test]
    fn defect_examples() {
        let da = KernelSpec::builtin(Family::DruryArveson, 16).unwrap();
        let t = scalar(C64::new(0.3, 0.4));
        let d = defect_operator(&t, &da, DEFAULT_SERIES_TOL).unwrap();
        assert!((d.defect_op[(0, 0)].re - 0.75).abs() < 1e-14);
        assert_eq!(d.defect_dim, 1);

        let k2 = KernelSpec::builtin(Family::Power(2.0), 16).unwrap();
        let lam: f64 = 0.6;
        let d = defect_operator(&scalar(cplx(lam)), &k2, DEFAULT_SERIES_TOL).unwrap();
        let expect = (1.0 - lam * lam) * (1.0 - lam * lam);
        assert!((d.defect_op[(0, 0)].re - expect).abs() < 1e-14);

        // T = 0: defect is the identity, full rank
        let zero = OperatorTuple::new(vec![CMat::zeros(3, 3), CMat::zeros(3, 3)], 1e-10).unwrap();
        let d = defect_operator(&zero, &da, DEFAULT_SERIES_TOL).unwrap();
        assert!(op_norm(&(&d.defect_op - CMat::identity(3, 3))) < 1e-14);
        assert_eq!(d.defect_dim, 3);
        // C^* C = defect
        assert!(op_norm(&(d.c.adjoint() * &d.c - &d.defect_op)) < 1e-10);
    }

    #[test]
    fn pureness_examples() {
        let da = KernelSpec::builtin(Family::DruryArveson, 24).unwrap();
        // T = 0: residual_0 = 0
        let zero = OperatorTuple::new(vec![CMat::zeros(2, 2)], 1e-10).unwrap();
        let d = defect_operator(&zero, &da, DEFAULT_SERIES_TOL).unwrap();
        let r = pureness_residuals(&zero, &da, &d, 8).unwrap();
        assert!(r.residuals[0] < 1e-15);
        assert!(r.is_pure(1e-10));

        // scalar lambda: residual_N = |lambda|^{2(N+1)}
        let lam = 0.7f64;
        let t = scalar(cplx(lam));
        let d = defect_operator(&t, &da, DEFAULT_SERIES_TOL).unwrap();
        let r = pureness_residuals(&t, &da, &d, 10).unwrap();
        for (n, &res) in r.residuals.iter().enumerate() {
            assert!((res - lam.powi(2 * (n as i32 + 1))).abs() < 1e-12, "n={n}");
        }

        // T = [[1]] under DA: defect 0 is PSD, residual stuck at 1 -> not pure
        let t1 = scalar(cplx(1.0));
        let d = defect_operator(&t1, &da, DEFAULT_SERIES_TOL).unwrap();
        assert!(d.is_contraction);
        assert!(d.defect_op[(0, 0)].norm() < 1e-14);
        let r = pureness_residuals(&t1, &da, &d, 12).unwrap();
        assert!(r.residuals.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        assert!(!r.is_pure(1e-6));
    }

    #[test]
    fn spectral_safety_examples() {
        let da = KernelSpec::builtin(Family::DruryArveson, 8).unwrap();
        let zero = OperatorTuple::new(vec![CMat::zeros(2, 2)], 1e-10).unwrap();
        let s = spectral_safety(&zero, &da, 8, 0);
        assert!(s.ok && s.max_rho == 0.0);

        let t = scalar(cplx(0.6));
        let s = spectral_safety(&t, &da, 8, 0);
        assert!((s.max_rho - 0.6).abs() < 1e-10);

        // commuting nilpotent pair: spectra are {0}, always safe
        let mut n1 = CMat::zeros(3, 3);
        n1[(0, 1)] = cplx(1.0);
        let mut n2 = CMat::zeros(3, 3);
        n2[(0, 2)] = cplx(1.0);
        let t = OperatorTuple::new(vec![n1, n2], 1e-10).unwrap();
        let s = spectral_safety(&t, &da, 16, 1);
        assert!(s.ok);
        assert!(s.max_rho < 1e-8);

        // Dirichlet has an infinite reciprocal tail; at rho = 1 the stop rule
        // cannot fire within the horizon
        let dir = KernelSpec::builtin(Family::Dirichlet, 8).unwrap();
        let t1 = scalar(cplx(1.0));
        assert!(matches!(
            defect_operator(&t1, &dir, DEFAULT_SERIES_TOL),
            Err(Error::SeriesNotConverged { .. })
        ));
        // and a tuple clearly outside the radius estimate is gated up front
        let t12 = scalar(cplx(1.2));
        assert!(matches!(
            defect_operator(&t12, &dir, DEFAULT_SERIES_TOL),
            Err(Error::SpectralUnsafe { .. })
        ));
    }

    #[test]
    fn defect_of_truncated_shift_is_projection_onto_constants() {
        use crate::space::{IndexBasis, SpaceSpec};
        for (fam, deg_c) in [(Family::DruryArveson, 1usize), (Family::Power(2.0), 2)] {
            let n = 5;
            let kernel = KernelSpec::builtin(fam, n + 2).unwrap();
            let space = SpaceSpec::new(kernel.clone(), IndexBasis::new(2, n), 1).unwrap();
            let g = space.metric();
            let (shifts, _) = space.shift_matrices();
            // conjugate into the orthonormal frame so standard adjoints apply
            let mats: Vec<CMat> = shifts
                .iter()
                .map(|m| &g.sqrt * m * &g.inv_sqrt)
                .collect();
            let tuple = OperatorTuple::new(mats, 1e-10).unwrap();
            let d = defect_operator(&tuple, &kernel, DEFAULT_SERIES_TOL).unwrap();
            // on the validated band (degrees <= N - deg c) the defect matches
            // the projection onto constants
            for i in 0..space.dim() {
                for j in 0..space.dim() {
                    if space.basis.degree(i) > n - deg_c || space.basis.degree(j) > n - deg_c {
                        continue;
                    }
                    let expect = if i == j && space.basis.degree(i) == 0 { 1.0 } else { 0.0 };
                    assert!(
                        (d.defect_op[(i, j)] - cplx(expect)).norm() < 1e-8,
                        "entry ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn tuple_wire_round_trip() {
        let t = OperatorTuple::new(
            vec![CMat::from_fn(2, 2, |i, j| C64::new(0.1 * i as f64, 0.2 * j as f64))],
            1e-10,
        )
        .unwrap();
        let js = serde_json::to_string(&t.to_wire()).unwrap();
        let wire: TupleWire = serde_json::from_str(&js).unwrap();
        let back = OperatorTuple::from_wire(&wire).unwrap();
        assert_eq!(back.mats()[0], t.mats()[0]);
    }
}
