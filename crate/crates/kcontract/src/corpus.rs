//! A fixed desk-scale corpus of pure contractive tuples with per-entry
//! truncation orders, plus seeded generators for the random tuple classes
//! (commuting nilpotent pairs, simultaneously diagonalizable tuples with
//! spectrum in a shrunken ball, single Jordan-type blocks).
//!
//! Truncation orders are chosen so that the geometric series tails of every
//! entry sit well below 1e-9, which lets the integration suite assert the
//! tight residual bounds directly.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::contraction::OperatorTuple;
use crate::error::Result;
use crate::metric::{cplx, svd_accurate, C64, CMat};
use crate::series::{Family, KernelSpec};

/// One corpus tuple with its truncation order.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub tuple: OperatorTuple,
    /// Truncation degree used for dilation runs of this entry.
    pub n: usize,
}

/// Kernel families every corpus entry is exercised against.
pub fn corpus_families() -> Vec<(&'static str, Family)> {
    vec![
        ("da", Family::DruryArveson),
        ("pow2", Family::Power(2.0)),
        ("pow_half", Family::Power(0.5)),
        ("dirichlet", Family::Dirichlet),
    ]
}

/// Kernel for a corpus run at truncation degree `n`, with enough horizon for
/// the delta operators, the evaluation checks, and the reciprocal series stop
/// rule of the slowest-decaying entries.
pub fn corpus_kernel(family: &Family, n: usize) -> Result<KernelSpec> {
    KernelSpec::builtin(family.clone(), n + 24)
}

fn tuple(mats: Vec<CMat>) -> OperatorTuple {
    OperatorTuple::new(mats, 1e-10).unwrap()
}

fn scalar(lambda: C64) -> OperatorTuple {
    tuple(vec![CMat::from_element(1, 1, lambda)])
}

/// The fixed corpus: zero tuples, scalars, a Jordan-type block, nilpotent
/// singles and pairs, diagonalizable pairs, and a commuting scalar pair.
pub fn corpus_entries() -> Vec<CorpusEntry> {
    let mut out = Vec::new();
    let mut push = |name: &str, t: OperatorTuple, n: usize| {
        out.push(CorpusEntry {
            name: name.to_string(),
            tuple: t,
            n,
        });
    };

    push("zero_d1", tuple(vec![CMat::zeros(1, 1)]), 6);
    push("zero_d2", tuple(vec![CMat::zeros(1, 1); 2]), 6);
    push("scalar_0.3", scalar(cplx(0.3)), 12);
    push("scalar_0.5", scalar(cplx(0.5)), 20);
    push("scalar_0.8i", scalar(C64::new(0.0, 0.8)), 48);

    // Jordan-type block: eigenvalue 0.4, scaled nilpotent part keeps the
    // norm safely inside the unit ball
    let jordan = CMat::from_row_slice(2, 2, &[cplx(0.4), cplx(0.3), cplx(0.0), cplx(0.4)]);
    push("jordan_0.4", tuple(vec![jordan]), 20);

    // single nilpotent shift block; scaled so the defect stays positive for
    // every corpus kernel (the reciprocal coefficient c_1 can reach -2)
    let e12 = CMat::from_row_slice(2, 2, &[cplx(0.0), cplx(0.6), cplx(0.0), cplx(0.0)]);
    push("nilpotent_e12", tuple(vec![e12]), 6);

    push("nilpotent_pair_a", random_nilpotent_pair(101, 3), 8);
    push("nilpotent_pair_b", random_nilpotent_pair(202, 4), 10);
    push(
        "diag_pair_a",
        random_diagonalizable(303, 2, 3, 0.4),
        14,
    );
    push(
        "diag_pair_b",
        random_diagonalizable(404, 2, 2, 0.4),
        14,
    );

    let pair = tuple(vec![
        CMat::from_element(1, 1, cplx(0.3)),
        CMat::from_element(1, 1, C64::new(0.0, 0.2)),
    ]);
    push("scalar_pair_d2", pair, 12);

    out
}

pub fn corpus_entry(name: &str) -> Option<CorpusEntry> {
    corpus_entries().into_iter().find(|e| e.name == name)
}

fn random_c64(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
}

/// A commuting pair of strictly upper triangular `p x p` matrices: a random
/// nilpotent `A` together with a random polynomial in `A` without constant
/// term, rescaled to operator norm at most 1/2 each.
pub fn random_nilpotent_pair(seed: u64, p: usize) -> OperatorTuple {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = CMat::zeros(p, p);
    for i in 0..p {
        for j in (i + 1)..p {
            a[(i, j)] = random_c64(&mut rng);
        }
    }
    let mut b = CMat::zeros(p, p);
    let mut pw = CMat::identity(p, p);
    for _ in 1..p {
        pw = &pw * &a;
        b += &pw * random_c64(&mut rng);
    }
    let norm = |m: &CMat| svd_accurate(m).svals.first().copied().unwrap_or(0.0);
    let sa = norm(&a);
    let sb = norm(&b);
    let a = a / cplx(2.0 * sa.max(1e-3));
    let b = b / cplx(2.0 * sb.max(1e-3));
    tuple(vec![a, b])
}

/// A simultaneously diagonalizable commuting `d`-tuple on `C^p`: joint
/// eigenvalue rows sampled from `radius` times the unit ball of `C^d`,
/// conjugated by a mild similarity `I + 0.1 R`.
pub fn random_diagonalizable(seed: u64, d: usize, p: usize, radius: f64) -> OperatorTuple {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<C64>> = Vec::with_capacity(p);
    for _ in 0..p {
        loop {
            let row: Vec<C64> = (0..d).map(|_| random_c64(&mut rng) * cplx(2.0)).collect();
            let n2: f64 = row.iter().map(|z| z.norm_sqr()).sum();
            if n2 <= 1.0 {
                rows.push(row.iter().map(|z| z * cplx(radius)).collect());
                break;
            }
        }
    }
    let r = CMat::from_fn(p, p, |_, _| random_c64(&mut rng));
    let s = CMat::identity(p, p) + r * cplx(0.1);
    let s_inv = s.clone().try_inverse().expect("similarity is invertible");
    let mats = (0..d)
        .map(|i| {
            let diag = CMat::from_fn(p, p, |a, b| {
                if a == b {
                    rows[a][i]
                } else {
                    C64::new(0.0, 0.0)
                }
            });
            &s * diag * &s_inv
        })
        .collect();
    tuple(mats)
}

/// A single Jordan-type block: eigenvalue sampled inside `radius` times the
/// unit disc, nilpotent part scaled so the norm stays below 1.
pub fn random_jordan_single(seed: u64, p: usize, radius: f64) -> OperatorTuple {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lam = loop {
        let z = random_c64(&mut rng) * cplx(2.0);
        if z.norm() <= 1.0 {
            break z * cplx(radius);
        }
    };
    let off = 0.9 * (1.0 - lam.norm()) / 2.0;
    let mut m = CMat::identity(p, p) * lam;
    for i in 0..p - 1 {
        m[(i, i + 1)] = cplx(off);
    }
    tuple(vec![m])
}

/// Conservative bound on the dropped tail of the reconstruction series at
/// truncation degree `n`: `sum_{k > n} a_k s^k` with `s = sum_i ||T_i||^2`,
/// closed off by a geometric remainder from the last observed ratio.
pub fn truncation_tail(kernel: &KernelSpec, tuple: &OperatorTuple, n: usize) -> f64 {
    let s: f64 = tuple
        .mats()
        .iter()
        .map(|m| {
            let top = svd_accurate(m).svals.first().copied().unwrap_or(0.0);
            top * top
        })
        .sum();
    let mut sum = 0.0;
    let mut term = 0.0;
    let mut prev = 0.0;
    let mut ratio: f64 = 0.0;
    for k in (n + 1)..=kernel.max_degree {
        term = kernel.a_f64(k) * s.powi(k as i32);
        sum += term;
        if prev > 0.0 {
            ratio = ratio.max(term / prev);
        }
        prev = term;
    }
    if ratio > 0.0 && ratio < 1.0 {
        sum + term * ratio / (1.0 - ratio)
    } else {
        sum + term
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::op_norm;

    #[test]
    fn corpus_shape() {
        let entries = corpus_entries();
        assert!(entries.len() >= 12);
        let names: std::collections::HashSet<_> =
            entries.iter().map(|e| e.name.clone()).collect();
        assert_eq!(names.len(), entries.len());
        assert!(corpus_entry("scalar_0.5").is_some());
        assert!(corpus_entry("nope").is_none());
    }

    #[test]
    fn random_classes_are_commuting_and_bounded() {
        for seed in [1u64, 2, 3] {
            let t = random_nilpotent_pair(seed, 4);
            assert_eq!(t.d, 2);
            let m = &t.mats()[0];
            assert!(op_norm(&(m * m * m * m)) < 1e-12);

            let t = random_diagonalizable(seed, 2, 3, 0.4);
            assert_eq!(t.d, 2);
            for m in t.mats() {
                assert!(op_norm(m) < 0.75);
            }

            let t = random_jordan_single(seed, 3, 0.5);
            assert!(op_norm(&t.mats()[0]) < 1.0);
        }
    }

    #[test]
    fn tail_bound_decreases_in_n() {
        let k = KernelSpec::builtin(Family::DruryArveson, 40).unwrap();
        let t = scalar(cplx(0.5));
        let t10 = truncation_tail(&k, &t, 10);
        let t20 = truncation_tail(&k, &t, 20);
        assert!(t20 < t10);
        // scalar 0.5, flat weights: tail = sum_{k>n} 0.25^k
        let expect = 0.25f64.powi(11) / 0.75;
        assert!((t10 - expect).abs() < 1e-12);
    }
}
