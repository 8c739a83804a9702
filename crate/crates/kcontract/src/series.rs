//! Scalar coefficient calculus for unitarily invariant kernels
//! `K(z, w) = k(<z, w>)` with `k(t) = sum a_n t^n`.
//!
//! Owns the coefficient sequence `a_n`, the reciprocal sequence `c_n` of
//! `1/k`, and the finite-horizon admissibility diagnostics. Coefficients are
//! kept as exact rationals whenever the generating rule is rational, so the
//! convolution identity `sum_k a_k c_{n-k} = delta_{n0}` is testable exactly.

use num::{BigRational, FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A coefficient sequence, exact or floating point.
#[derive(Debug, Clone, PartialEq)]
pub enum Coeffs {
    Rational(Vec<BigRational>),
    Float(Vec<f64>),
}

impl Coeffs {
    pub fn len(&self) -> usize {
        match self {
            Coeffs::Rational(v) => v.len(),
            Coeffs::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, Coeffs::Rational(_))
    }

    pub fn get_f64(&self, n: usize) -> f64 {
        match self {
            Coeffs::Rational(v) => v[n].to_f64().unwrap(),
            Coeffs::Float(v) => v[n],
        }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        (0..self.len()).map(|n| self.get_f64(n)).collect()
    }

    pub fn from_ints(v: &[i64]) -> Coeffs {
        Coeffs::Rational(v.iter().map(|&x| BigRational::from_i64(x).unwrap()).collect())
    }
}

/// Kernel family shorthand for the built-in constructors.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `a_n = 1`, the Drury-Arveson kernel `1/(1 - t)`.
    DruryArveson,
    /// `a_n = (nu)_n / n!`, the kernel `1/(1 - t)^nu` for `nu > 0`.
    Power(f64),
    /// `a_n = 1/(n + 1)`, the Dirichlet kernel `-log(1 - t)/t`.
    Dirichlet,
    /// Explicit coefficient list.
    Explicit(Coeffs),
}

/// Coefficient data of a kernel together with its reciprocal sequence and
/// finite-horizon ratio diagnostics.
///
/// Every `inf`/`sup`/`lim` style quantity here is observed over the stored
/// prefix `n <= max_degree` only; reports that consume them carry the horizon.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub name: String,
    a: Coeffs,
    pub max_degree: usize,
    c: Coeffs,
    /// Observed `inf` of `a_n / a_{n+1}` over `0 <= n < max_degree`.
    pub ratio_inf: f64,
    /// Observed `sup` of `a_n / a_{n+1}` over `0 <= n < max_degree`.
    pub ratio_sup: f64,
    /// `a_{N-1} / a_N` at the horizon; estimates the convergence radius r.
    pub r_estimate: f64,
}

fn reciprocal_rational(a: &[BigRational]) -> Vec<BigRational> {
    let mut c = vec![BigRational::one(); a.len()];
    for n in 1..a.len() {
        let mut s = BigRational::zero();
        for k in 1..=n {
            s += &a[k] * &c[n - k];
        }
        c[n] = -s;
    }
    c
}

fn reciprocal_float(a: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0; a.len()];
    for n in 1..a.len() {
        let mut s = 0.0;
        for k in 1..=n {
            s += a[k] * c[n - k];
        }
        c[n] = -s;
    }
    c
}

impl KernelSpec {
    /// Build a kernel from explicit coefficients. The reciprocal sequence is
    /// computed by the recurrence `c_n = -sum_{k=1..n} a_k c_{n-k}`, `c_0 = 1`.
    pub fn from_coeffs(name: &str, a: Coeffs) -> Result<KernelSpec> {
        if a.len() < 2 {
            return Err(Error::BadParameter(format!(
                "need max_degree >= 1, got {} coefficients",
                a.len()
            )));
        }
        let a0 = a.get_f64(0);
        if a0 != 1.0 {
            return Err(Error::BadNormalization(a0));
        }
        if let Coeffs::Rational(v) = &a {
            if !v[0].is_one() {
                return Err(Error::BadNormalization(a0));
            }
        }
        for n in 0..a.len() {
            let an = a.get_f64(n);
            let positive = match &a {
                Coeffs::Rational(v) => v[n].is_positive(),
                Coeffs::Float(v) => v[n] > 0.0,
            };
            if !positive {
                return Err(Error::NonpositiveCoefficient { index: n, value: an });
            }
        }
        let c = match &a {
            Coeffs::Rational(v) => Coeffs::Rational(reciprocal_rational(v)),
            Coeffs::Float(v) => Coeffs::Float(reciprocal_float(v)),
        };
        let max_degree = a.len() - 1;
        let mut ratio_inf = f64::INFINITY;
        let mut ratio_sup = 0.0f64;
        for n in 0..max_degree {
            let r = a.get_f64(n) / a.get_f64(n + 1);
            ratio_inf = ratio_inf.min(r);
            ratio_sup = ratio_sup.max(r);
        }
        let r_estimate = a.get_f64(max_degree - 1) / a.get_f64(max_degree);
        Ok(KernelSpec {
            name: name.to_string(),
            a,
            max_degree,
            c,
            ratio_inf,
            ratio_sup,
            r_estimate,
        })
    }

    /// Build one of the built-in kernel families up to `max_degree`.
    ///
    /// `Power(1)` coincides with `DruryArveson`. The power family is computed
    /// in exact rational arithmetic for the (dyadic) value the float exponent
    /// represents.
    pub fn builtin(family: Family, max_degree: usize) -> Result<KernelSpec> {
        match family {
            Family::DruryArveson => {
                let a = Coeffs::Rational(vec![BigRational::one(); max_degree + 1]);
                KernelSpec::from_coeffs("drury-arveson", a)
            }
            Family::Power(nu) => {
                if !(nu > 0.0) || !nu.is_finite() {
                    return Err(Error::BadParameter(format!("power exponent nu = {nu} must be > 0")));
                }
                let nu_r = BigRational::from_f64(nu)
                    .ok_or_else(|| Error::BadParameter(format!("cannot represent nu = {nu}")))?;
                // a_{n+1} = a_n (nu + n) / (n + 1)
                let mut a = Vec::with_capacity(max_degree + 1);
                a.push(BigRational::one());
                for n in 0..max_degree {
                    let num = &nu_r + BigRational::from_usize(n).unwrap();
                    let den = BigRational::from_usize(n + 1).unwrap();
                    let next = &a[n] * num / den;
                    a.push(next);
                }
                KernelSpec::from_coeffs(&format!("power({nu})"), Coeffs::Rational(a))
            }
            Family::Dirichlet => {
                let a = (0..=max_degree)
                    .map(|n| BigRational::new(1.into(), ((n + 1) as i64).into()))
                    .collect();
                KernelSpec::from_coeffs("dirichlet", Coeffs::Rational(a))
            }
            Family::Explicit(coeffs) => KernelSpec::from_coeffs("explicit", coeffs),
        }
    }

    pub fn a(&self) -> &Coeffs {
        &self.a
    }

    pub fn c(&self) -> &Coeffs {
        &self.c
    }

    pub fn a_f64(&self, n: usize) -> f64 {
        self.a.get_f64(n)
    }

    pub fn c_f64(&self, n: usize) -> f64 {
        self.c.get_f64(n)
    }

    /// Coefficients of `F(t) = (k(t) - 1)/t`: a shifted view of `a`, the n-th
    /// coefficient being `a_{n+1}`. Valid for `n < max_degree`.
    pub fn f_coeff(&self, n: usize) -> f64 {
        self.a.get_f64(n + 1)
    }

    /// Evaluate the truncated series `k(t) = sum_{n<=max_degree} a_n t^n` at a
    /// complex argument.
    pub fn eval_k(&self, t: num_complex::Complex64) -> num_complex::Complex64 {
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for n in (0..=self.max_degree).rev() {
            acc = acc * t + self.a_f64(n);
        }
        acc
    }

    /// Max residual of the Cauchy product of `a` and `c` against the delta
    /// sequence, in floating point. Zero-cost sanity hook for reports; the
    /// exact rational identity is checked in the test suite.
    pub fn reciprocal_residual(&self) -> f64 {
        let a = self.a.to_f64_vec();
        let c = self.c.to_f64_vec();
        let mut worst = 0.0f64;
        for n in 1..=self.max_degree {
            let mut s = 0.0;
            let mut scale = 0.0f64;
            for k in 0..=n {
                s += a[k] * c[n - k];
                scale = scale.max((a[k] * c[n - k]).abs());
            }
            worst = worst.max(s.abs() / scale.max(1.0));
        }
        worst
    }

    /// Exact convolution identity check for rational kernels: `Some(true)`
    /// iff `sum_k a_k c_{n-k}` is exactly zero for all `1 <= n <= max_degree`.
    /// Returns `None` when the coefficients are stored in floating point.
    pub fn reciprocal_exact(&self) -> Option<bool> {
        let (a, c) = match (&self.a, &self.c) {
            (Coeffs::Rational(a), Coeffs::Rational(c)) => (a, c),
            _ => return None,
        };
        for n in 1..=self.max_degree {
            let mut s = BigRational::zero();
            for k in 0..=n {
                s += &a[k] * &c[n - k];
            }
            if !s.is_zero() {
                return Some(false);
            }
        }
        Some(true)
    }
}

/// Report of the one-sign-tail criterion on the reciprocal coefficients.
/// Finite-horizon diagnostic: a one-signed stored tail is evidence, not proof.
#[derive(Debug, Clone, Serialize)]
pub struct SignReport {
    pub eventually_nonneg: bool,
    pub eventually_nonpos: bool,
    /// Smallest p such that the stored tail `c_n`, `n >= p`, is one-signed.
    pub pivot_index: Option<usize>,
    pub pivot_nonneg: Option<usize>,
    pub pivot_nonpos: Option<usize>,
    pub horizon: usize,
}

fn sign_of(c: &Coeffs, n: usize, zero_tol: f64) -> i8 {
    match c {
        Coeffs::Rational(v) => {
            if v[n].is_zero() {
                0
            } else if v[n].is_positive() {
                1
            } else {
                -1
            }
        }
        Coeffs::Float(v) => {
            if v[n].abs() <= zero_tol {
                0
            } else if v[n] > 0.0 {
                1
            } else {
                -1
            }
        }
    }
}

/// Check whether the stored `c_n` have a one-sign tail, as in the sufficient
/// criterion for `M_z` being a K-contraction.
pub fn nevanlinna_sign_check(spec: &KernelSpec) -> SignReport {
    let horizon = spec.max_degree;
    let zero_tol = (0..=horizon)
        .map(|n| spec.c_f64(n).abs())
        .fold(0.0f64, f64::max)
        * 1e-14;
    let mut pivot_nonneg = None;
    let mut pivot_nonpos = None;
    // smallest p with one-signed tail, scanning from the end
    let mut ok_nonneg = true;
    let mut ok_nonpos = true;
    let mut p_nonneg = horizon + 1;
    let mut p_nonpos = horizon + 1;
    for n in (0..=horizon).rev() {
        let s = sign_of(spec.c(), n, zero_tol);
        if ok_nonneg {
            if s >= 0 {
                p_nonneg = n;
            } else {
                ok_nonneg = false;
            }
        }
        if ok_nonpos {
            if s <= 0 {
                p_nonpos = n;
            } else {
                ok_nonpos = false;
            }
        }
    }
    if p_nonneg <= horizon {
        pivot_nonneg = Some(p_nonneg.max(1));
    }
    if p_nonpos <= horizon {
        pivot_nonpos = Some(p_nonpos.max(1));
    }
    SignReport {
        eventually_nonneg: pivot_nonneg.is_some(),
        eventually_nonpos: pivot_nonpos.is_some(),
        pivot_index: match (pivot_nonneg, pivot_nonpos) {
            (Some(p), Some(q)) => Some(p.min(q)),
            (Some(p), None) => Some(p),
            (None, Some(q)) => Some(q),
            (None, None) => None,
        },
        pivot_nonneg,
        pivot_nonpos,
        horizon,
    }
}

/// The essential-normality diagnostic sequence
/// `d_n = a_n/a_{n+1} - a_{n-1}/a_n` for `1 <= n < max_degree`.
/// The caller judges decay; nothing is asserted here.
pub fn essential_normality_diagnostic(spec: &KernelSpec) -> Vec<f64> {
    assert!(spec.max_degree >= 2, "need max_degree >= 2");
    (1..spec.max_degree)
        .map(|n| spec.a_f64(n) / spec.a_f64(n + 1) - spec.a_f64(n - 1) / spec.a_f64(n))
        .collect()
}

// --- serialization -----------------------------------------------------------
//
// Wire format: {name, a: [string-rationals or floats], max_degree}. The
// reciprocal sequence and diagnostics are recomputed on load, never trusted.

#[derive(Serialize, Deserialize)]
struct KernelWire {
    name: String,
    a: Vec<serde_json::Value>,
    max_degree: usize,
}

impl Serialize for KernelSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let a = match &self.a {
            Coeffs::Rational(v) => v
                .iter()
                .map(|r| serde_json::Value::String(r.to_string()))
                .collect(),
            Coeffs::Float(v) => v
                .iter()
                .map(|&x| serde_json::json!(x))
                .collect::<Vec<_>>(),
        };
        KernelWire {
            name: self.name.clone(),
            a,
            max_degree: self.max_degree,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for KernelSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = KernelWire::deserialize(deserializer)?;
        if wire.a.len() != wire.max_degree + 1 {
            return Err(D::Error::custom(format!(
                "coefficient count {} does not match max_degree {}",
                wire.a.len(),
                wire.max_degree
            )));
        }
        let coeffs = parse_coeff_values(&wire.a).map_err(D::Error::custom)?;
        let mut spec = KernelSpec::from_coeffs(&wire.name, coeffs).map_err(D::Error::custom)?;
        spec.name = wire.name;
        Ok(spec)
    }
}

/// Parse a JSON coefficient list: strings are exact rationals ("3/8" or "2"),
/// numbers are floats. Mixing strings and numbers falls back to float mode.
pub fn parse_coeff_values(values: &[serde_json::Value]) -> std::result::Result<Coeffs, String> {
    let all_strings = values.iter().all(|v| v.is_string());
    if all_strings {
        let mut out = Vec::with_capacity(values.len());
        for v in values {
            let s = v.as_str().unwrap();
            let r: BigRational = s
                .parse()
                .map_err(|e| format!("bad rational {s:?}: {e}"))?;
            out.push(r);
        }
        Ok(Coeffs::Rational(out))
    } else {
        let mut out = Vec::with_capacity(values.len());
        for v in values {
            let x = v
                .as_f64()
                .ok_or_else(|| format!("bad coefficient {v}"))?;
            out.push(x);
        }
        Ok(Coeffs::Float(out))
    }
}
