//! Hessian quadratic forms at critical points, finite-difference Hessians,
//! inertia signatures and the closed-form signature tables.
//!
//! Along `t ↦ √S e^{iAt} √S` the second derivative of `Re Tr(W†·)` is
//! `−Re Tr(W† √S A² √S)`; at a critical point of `𝒥` conjugated to
//! `Ω̃ = diag(ω̃)` this is the diagonal form
//! `−Σ_{i<j} (ω̃_i + ω̃_j) Ã_ij² − Σ_i ω̃_i Ã_ii²` (one monomial per real
//! component of `Ã_ij`). Chart coordinates scale off-diagonal entries by
//! `1/√2`, which is what [`Monomial::chart_scale`] accounts for.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domains::{
    standard_tangent_chart, DomainKind, DomainPoint, LandscapeDomain, Monomial, TangentChart,
};
use crate::error::{Error, Result};
use crate::landscape::{omega_signs, CriticalPointSpec};
use crate::linalg::{exp_i_generator_minus_identity, principal_sqrt, trace_of_product, CMatrix, RMatrix};

/// Inertia triple `(D₊, D₋, D₀)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HessianSignature {
    pub d_plus: usize,
    pub d_minus: usize,
    pub d_zero: usize,
}

impl HessianSignature {
    pub fn new(d_plus: usize, d_minus: usize, d_zero: usize) -> Self {
        Self {
            d_plus,
            d_minus,
            d_zero,
        }
    }

    pub fn total(&self) -> usize {
        self.d_plus + self.d_minus + self.d_zero
    }

    /// Both curvature signs present: the point cannot be a local extremum.
    pub fn is_saddle(&self) -> bool {
        self.d_plus > 0 && self.d_minus > 0
    }
}

impl std::fmt::Display for HessianSignature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.d_plus, self.d_minus, self.d_zero)
    }
}

/// A signature triple as written in a formula, which may be inconsistent
/// (entries are allowed to disagree with the domain dimension).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureClaim {
    pub d_plus: i64,
    pub d_minus: i64,
    pub d_zero: i64,
}

impl SignatureClaim {
    pub fn total(&self) -> i64 {
        self.d_plus + self.d_minus + self.d_zero
    }

    pub fn matches(&self, sig: &HessianSignature) -> bool {
        self.d_plus == sig.d_plus as i64
            && self.d_minus == sig.d_minus as i64
            && self.d_zero == sig.d_zero as i64
    }
}

impl From<HessianSignature> for SignatureClaim {
    fn from(s: HessianSignature) -> Self {
        Self {
            d_plus: s.d_plus as i64,
            d_minus: s.d_minus as i64,
            d_zero: s.d_zero as i64,
        }
    }
}

impl std::fmt::Display for SignatureClaim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.d_plus, self.d_minus, self.d_zero)
    }
}

/// Diagonal Hessian quadratic form `Σ Q̂_i Γ̂_i²` with one labelled
/// coefficient per monomial, in the un-normalized monomial convention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFormDiagonal {
    pub coefficients: Vec<(Monomial, f64)>,
}

impl QuadraticFormDiagonal {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.1).collect()
    }

    /// Coefficients converted to orthonormal-chart Hessian eigenvalues.
    pub fn chart_values(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .map(|(m, q)| q * m.chart_scale())
            .collect()
    }

    pub fn signature(&self) -> HessianSignature {
        let mut sig = HessianSignature::new(0, 0, 0);
        for (_, q) in &self.coefficients {
            if *q > 0.0 {
                sig.d_plus += 1;
            } else if *q < 0.0 {
                sig.d_minus += 1;
            } else {
                sig.d_zero += 1;
            }
        }
        sig
    }
}

/// Analytic quadratic form at the critical point described by `spec`,
/// labelled in the same order as the canonical [`TangentChart`].
pub fn hqf_at_critical(spec: &CriticalPointSpec) -> Result<QuadraticFormDiagonal> {
    spec.validate()?;
    let omega = omega_signs(spec.domain.n, spec.n);
    let chart = TangentChart::for_domain(spec.domain);
    let coefficients = chart
        .labels()
        .iter()
        .map(|label| {
            let (i, j) = label.indices();
            let q = match label {
                Monomial::Diagonal { .. } => -omega[i],
                _ => -(omega[i] + omega[j]),
            };
            (*label, q)
        })
        .collect();
    Ok(QuadraticFormDiagonal { coefficients })
}

/// Accepted range for finite-difference steps.
pub const H_RANGE: (f64, f64) = (1e-6, 1e-2);

/// Default finite-difference step and relative zero threshold.
pub const DEFAULT_H: f64 = 1e-3;
pub const DEFAULT_ZERO_TOL: f64 = 1e-4;

/// Finite-difference Hessian of `𝒥` in `chart` coordinates at `point`.
///
/// Entry `(a, b)` is the mixed central difference of
/// `(s, t) ↦ 𝒥[√S e^{i(sA_a + tA_b)} √S]` at the origin. Increments are
/// evaluated as `Re Tr(S (e^{iM} − I))` to keep cancellation out of the
/// differences.
pub fn numerical_hessian(point: &DomainPoint, chart: &TangentChart, h: f64) -> Result<RMatrix> {
    numerical_hessian_weighted(point, None, chart, h)
}

/// Same as [`numerical_hessian`] for the target landscape `Re Tr(W†S)`.
pub fn numerical_hessian_metric(
    point: &DomainPoint,
    target: &CMatrix,
    chart: &TangentChart,
    h: f64,
) -> Result<RMatrix> {
    if target.shape() != point.matrix().shape() {
        return Err(Error::Dimension("target and point differ in size".into()));
    }
    numerical_hessian_weighted(point, Some(&target.adjoint()), chart, h)
}

fn numerical_hessian_weighted(
    point: &DomainPoint,
    weight: Option<&CMatrix>,
    chart: &TangentChart,
    h: f64,
) -> Result<RMatrix> {
    if !(H_RANGE.0..=H_RANGE.1).contains(&h) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step {h:e} outside [{:e}, {:e}]",
            H_RANGE.0, H_RANGE.1
        )));
    }
    standard_tangent_chart(point)?;
    if chart.domain() != point.domain() {
        return Err(Error::Dimension("chart belongs to a different domain".into()));
    }
    let kind = point.domain().kind;
    let root = principal_sqrt(point)?;
    // Re Tr(W† √S Δ √S) = Re Tr((√S W† √S) Δ)
    let sandwich = match weight {
        Some(w) => root.matrix() * w * root.matrix(),
        None => root.matrix() * root.matrix(),
    };
    let increment = |a: &CMatrix| -> Result<f64> {
        let delta = exp_i_generator_minus_identity(a, 1.0, kind)?;
        Ok(trace_of_product(&sandwich, &delta).re)
    };

    let basis = chart.basis();
    let d = basis.len();
    let mut hess = RMatrix::zeros(d, d);
    let hc = Complex64::new(h, 0.0);
    for a in 0..d {
        for b in a..d {
            let pa = &basis[a] * hc;
            let pb = &basis[b] * hc;
            let pp = increment(&(&pa + &pb))?;
            let pm = increment(&(&pa - &pb))?;
            let mp = increment(&(&pb - &pa))?;
            let mm = increment(&(-(&pa + &pb)))?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    Ok(hess)
}

/// Inertia of a symmetric matrix; eigenvalues below
/// `zero_tol · max(1, |λ|_max)` in magnitude count as zero.
pub fn signature(h: &RMatrix, zero_tol: f64) -> HessianSignature {
    if h.nrows() == 0 {
        return HessianSignature::new(0, 0, 0);
    }
    let sym = (h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.iter().fold(1.0_f64, |m, l| m.max(l.abs()));
    let cut = zero_tol * scale;
    let mut sig = HessianSignature::new(0, 0, 0);
    for &l in eig.eigenvalues.iter() {
        if l.abs() < cut {
            sig.d_zero += 1;
        } else if l > 0.0 {
            sig.d_plus += 1;
        } else {
            sig.d_minus += 1;
        }
    }
    sig
}

fn check_n(domain: LandscapeDomain, n: usize) -> Result<()> {
    if n > domain.n {
        return Err(Error::InvalidArgument(format!(
            "n = {n} outside [0, {}]",
            domain.n
        )));
    }
    Ok(())
}

/// Signature of the critical orbit with `n` eigenvalues `+1` (Kramers blocks
/// on the self-dual domain).
///
/// * symmetric: `(((N−n)² + N−n)/2, (n² + n)/2, n(N−n))`
/// * self-dual: `((N−n)(2(N−n)−1), n(2n−1), 4n(N−n))`
/// * full unitary: `((N−n)², n², 2n(N−n))`
pub fn closed_form_signature(domain: LandscapeDomain, n: usize) -> Result<HessianSignature> {
    check_n(domain, n)?;
    let big = domain.n;
    let m = big - n;
    Ok(match domain.kind {
        DomainKind::SymmetricUnitary => HessianSignature::new((m * m + m) / 2, (n * n + n) / 2, n * m),
        DomainKind::SelfDualUnitary => {
            let tri = |k: usize| if k == 0 { 0 } else { k * (2 * k - 1) };
            HessianSignature::new(tri(m), tri(n), 4 * n * m)
        }
        DomainKind::FullUnitary => HessianSignature::new(m * m, n * n, 2 * n * m),
    })
}

/// The self-dual signature triple as originally published:
/// `(2(N−n)² + 2(N−n), 2n² + 2n, 4N(N−n))`. It does not satisfy the sum
/// rule and is kept only so reports can show the disagreement.
pub fn published_symplectic_signature(big_n: usize, n: usize) -> Result<SignatureClaim> {
    if n > big_n {
        return Err(Error::InvalidArgument(format!("n = {n} outside [0, {big_n}]")));
    }
    let (bn, n) = (big_n as i64, n as i64);
    let m = bn - n;
    Ok(SignatureClaim {
        d_plus: 2 * m * m + 2 * m,
        d_minus: 2 * n * n + 2 * n,
        d_zero: 4 * bn * m,
    })
}

/// Published degrees-of-freedom count for the self-dual domain, `2N(N−1)`.
pub fn published_symplectic_dim(big_n: usize) -> usize {
    2 * big_n * big_n.saturating_sub(1)
}

/// Dimension of the critical orbit (a real or quaternionic Grassmannian).
pub fn grassmannian_dim(domain: LandscapeDomain, n: usize) -> Result<usize> {
    check_n(domain, n)?;
    let big = domain.n;
    Ok(match domain.kind {
        DomainKind::SymmetricUnitary => n * (big - n),
        // N(2N−1) − (N−n)[2(N−n)−1] − n[2n−1], expanded.
        DomainKind::SelfDualUnitary => 4 * n * (big - n),
        DomainKind::FullUnitary => 2 * n * (big - n),
    })
}
