//! The degree-truncated functional Hilbert space `H_K(E)` on the unit ball:
//! graded monomial basis, diagonal weight metric, the shift tuple `M_z` with
//! its metric adjoints, and the diagonal operators `delta` and `Delta`.
//!
//! Truncation convention: `M_{z_i}` annihilates top-degree monomials, so
//! identities involving `M_z` on the left are asserted on inputs of degree
//! `<= N - 1` only (the "validated band").

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{cplx, C64, CMat, CVec, Metric};
use crate::series::KernelSpec;

/// Graded enumeration of the multi-indices `|alpha| <= N` in `d` variables,
/// ordered by total degree, then lexicographically within a degree.
#[derive(Debug, Clone)]
pub struct IndexBasis {
    pub d: usize,
    pub max_degree: usize,
    pub indices: Vec<Vec<u32>>,
    /// Multinomial weights `gamma_alpha = |alpha|! / alpha!`.
    pub gamma: Vec<u128>,
    pos: HashMap<Vec<u32>, usize>,
}

fn enumerate_degree(d: usize, degree: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() == d - 1 {
        prefix.push(degree);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for k in 0..=degree {
        prefix.push(k);
        enumerate_degree(d, degree - k, prefix, out);
        prefix.pop();
    }
}

impl IndexBasis {
    pub fn new(d: usize, max_degree: usize) -> IndexBasis {
        assert!(d >= 1 && max_degree >= 1);
        let mut indices = Vec::new();
        for n in 0..=max_degree as u32 {
            let mut level = Vec::new();
            enumerate_degree(d, n, &mut Vec::new(), &mut level);
            level.sort();
            indices.extend(level);
        }
        let pos: HashMap<_, _> = indices
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        // gamma by the multinomial recurrence gamma_{a+e_i} = gamma_a (|a|+1)/(a_i+1),
        // evaluated as exact integer division
        let mut gamma = vec![0u128; indices.len()];
        for (i, alpha) in indices.iter().enumerate() {
            let total: u32 = alpha.iter().sum();
            if total == 0 {
                gamma[i] = 1;
                continue;
            }
            let k = alpha.iter().position(|&x| x > 0).unwrap();
            let mut parent = alpha.clone();
            parent[k] -= 1;
            let parent_gamma = gamma[pos[&parent]];
            let num = parent_gamma * total as u128;
            debug_assert_eq!(num % alpha[k] as u128, 0);
            gamma[i] = num / alpha[k] as u128;
        }
        IndexBasis {
            d,
            max_degree,
            indices,
            gamma,
            pos,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn position(&self, alpha: &[u32]) -> Option<usize> {
        self.pos.get(alpha).copied()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.indices[i].iter().sum::<u32>() as usize
    }

    pub fn id(&self) -> String {
        format!("d{}N{}", self.d, self.max_degree)
    }
}

/// The truncated space `H_K(E)` with `E = C^{coeff_dim}`: kernel, basis and
/// the diagonal weight table `w_alpha = a_{|alpha|} gamma_alpha` with
/// `||z^alpha e||^2 = 1 / w_alpha`.
#[derive(Debug, Clone)]
pub struct SpaceSpec {
    pub kernel: KernelSpec,
    pub basis: IndexBasis,
    pub coeff_dim: usize,
    /// Per multi-index weight `a_{|alpha|} gamma_alpha` (strictly positive).
    pub weight: Vec<f64>,
}

impl SpaceSpec {
    pub fn new(kernel: KernelSpec, basis: IndexBasis, coeff_dim: usize) -> Result<SpaceSpec> {
        if kernel.max_degree < basis.max_degree {
            return Err(Error::HorizonTooShort {
                needed: basis.max_degree,
                have: kernel.max_degree,
            });
        }
        assert!(coeff_dim >= 1);
        let weight = (0..basis.len())
            .map(|i| kernel.a_f64(basis.degree(i)) * basis.gamma[i] as f64)
            .collect();
        Ok(SpaceSpec {
            kernel,
            basis,
            coeff_dim,
            weight,
        })
    }

    /// Total coordinate dimension `#indices * coeff_dim`. Coordinates are laid
    /// out blockwise: entry `i * coeff_dim + j` is the j-th component of the
    /// coefficient at the i-th multi-index.
    pub fn dim(&self) -> usize {
        self.basis.len() * self.coeff_dim
    }

    /// The diagonal Gram metric: `G = diag(1 / w_alpha)` repeated over `E`.
    pub fn metric(&self) -> Metric {
        let mut g = Vec::with_capacity(self.dim());
        for i in 0..self.basis.len() {
            for _ in 0..self.coeff_dim {
                g.push(1.0 / self.weight[i]);
            }
        }
        Metric::from_diag(&g)
    }

    pub fn inner(&self, f: &CVec, g: &CVec) -> C64 {
        let cd = self.coeff_dim;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.basis.len() {
            for j in 0..cd {
                let k = i * cd + j;
                acc += f[k] * g[k].conj() / self.weight[i];
            }
        }
        acc
    }

    pub fn norm(&self, f: &CVec) -> f64 {
        self.inner(f, f).re.max(0.0).sqrt()
    }

    /// Point evaluation `f(z) = sum_alpha f_alpha z^alpha` in `E`.
    pub fn eval(&self, f: &CVec, z: &[C64]) -> CVec {
        assert_eq!(z.len(), self.basis.d);
        let cd = self.coeff_dim;
        let mut out = CVec::zeros(cd);
        for (i, alpha) in self.basis.indices.iter().enumerate() {
            let mut mono = C64::new(1.0, 0.0);
            for (v, &p) in alpha.iter().enumerate() {
                for _ in 0..p {
                    mono *= z[v];
                }
            }
            for j in 0..cd {
                out[j] += f[i * cd + j] * mono;
            }
        }
        out
    }

    /// The shift matrices `M_{z_1}, ..., M_{z_d}` and their adjoints with
    /// respect to the weighted inner product.
    pub fn shift_matrices(&self) -> (Vec<CMat>, Vec<CMat>) {
        let n = self.dim();
        let cd = self.coeff_dim;
        let mut shifts = Vec::with_capacity(self.basis.d);
        let mut adjoints = Vec::with_capacity(self.basis.d);
        for i in 0..self.basis.d {
            let mut m = CMat::zeros(n, n);
            for (idx, alpha) in self.basis.indices.iter().enumerate() {
                if self.basis.degree(idx) == self.basis.max_degree {
                    continue; // truncation: top degree is annihilated
                }
                let mut target = alpha.clone();
                target[i] += 1;
                let t = self.basis.position(&target).unwrap();
                for j in 0..cd {
                    m[(t * cd + j, idx * cd + j)] = cplx(1.0);
                }
            }
            // adjoint against the diagonal metric: entries scale by w_target / w_source
            let mut ma = CMat::zeros(n, n);
            for (idx, alpha) in self.basis.indices.iter().enumerate() {
                if self.basis.degree(idx) == self.basis.max_degree {
                    continue;
                }
                let mut target = alpha.clone();
                target[i] += 1;
                let t = self.basis.position(&target).unwrap();
                let scale = self.weight[idx] / self.weight[t];
                for j in 0..cd {
                    ma[(idx * cd + j, t * cd + j)] = cplx(scale);
                }
            }
            shifts.push(m);
            adjoints.push(ma);
        }
        (shifts, adjoints)
    }

    /// The positive diagonal operators `delta` (degree n scaled by
    /// `a_n / a_{n-1}`, degree 0 fixed) and `Delta` (degree n scaled by
    /// `a_{n+1} / a_n`). `Delta` at top degree needs `a_{N+1}`, hence the
    /// horizon precondition.
    pub fn delta_ops(&self) -> Result<(CMat, CMat)> {
        let nmax = self.basis.max_degree;
        if self.kernel.max_degree < nmax + 1 {
            return Err(Error::HorizonTooShort {
                needed: nmax + 1,
                have: self.kernel.max_degree,
            });
        }
        let n = self.dim();
        let cd = self.coeff_dim;
        let mut small = CMat::zeros(n, n);
        let mut big = CMat::zeros(n, n);
        for idx in 0..self.basis.len() {
            let deg = self.basis.degree(idx);
            let s = if deg == 0 {
                1.0
            } else {
                self.kernel.a_f64(deg) / self.kernel.a_f64(deg - 1)
            };
            let b = self.kernel.a_f64(deg + 1) / self.kernel.a_f64(deg);
            for j in 0..cd {
                small[(idx * cd + j, idx * cd + j)] = cplx(s);
                big[(idx * cd + j, idx * cd + j)] = cplx(b);
            }
        }
        Ok((small, big))
    }

    /// The Cauchy dual `M_z' = delta M_z` componentwise.
    pub fn cauchy_dual(&self) -> Result<Vec<CMat>> {
        let (shifts, _) = self.shift_matrices();
        let (delta, _) = self.delta_ops()?;
        Ok(shifts.into_iter().map(|m| &delta * m).collect())
    }

    /// The orthogonal projection onto `Im M_z`, i.e. `delta (M_z M_z^*)`,
    /// which kills exactly the degree-0 component of the truncated space.
    pub fn range_projection(&self) -> Result<CMat> {
        let (shifts, adjoints) = self.shift_matrices();
        let (delta, _) = self.delta_ops()?;
        let n = self.dim();
        let mut mm = CMat::zeros(n, n);
        for i in 0..shifts.len() {
            mm += &shifts[i] * &adjoints[i];
        }
        Ok(&delta * mm)
    }
}

// --- serialization -----------------------------------------------------------

/// Wire form of a coefficient vector in `H_K(E)`: complex entries grouped by
/// multi-index in basis order.
#[derive(Debug, Serialize, Deserialize)]
pub struct SpaceVectorWire {
    pub basis_id: String,
    pub coeff_dim: usize,
    pub coeffs: Vec<[f64; 2]>,
}

pub fn vector_to_wire(space: &SpaceSpec, f: &CVec) -> SpaceVectorWire {
    SpaceVectorWire {
        basis_id: space.basis.id(),
        coeff_dim: space.coeff_dim,
        coeffs: f.iter().map(|c| [c.re, c.im]).collect(),
    }
}

pub fn vector_from_wire(space: &SpaceSpec, wire: &SpaceVectorWire) -> Result<CVec> {
    if wire.basis_id != space.basis.id() || wire.coeff_dim != space.coeff_dim {
        return Err(Error::DimensionMismatch(format!(
            "vector basis {}/{} does not match space {}/{}",
            wire.basis_id,
            wire.coeff_dim,
            space.basis.id(),
            space.coeff_dim
        )));
    }
    if wire.coeffs.len() != space.dim() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient count {} != space dimension {}",
            wire.coeffs.len(),
            space.dim()
        )));
    }
    Ok(CVec::from_iterator(
        wire.coeffs.len(),
        wire.coeffs.iter().map(|&[re, im]| C64::new(re, im)),
    ))
}

/// Coordinate-triplet export of a sparse operator matrix, for cross-checking
/// against other implementations.
pub fn matrix_to_triplets(m: &CMat, drop_tol: f64) -> Vec<(usize, usize, f64, f64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v.norm() > drop_tol {
                out.push((i, j, v.re, v.im));
            }
        }
    }
    out
}
