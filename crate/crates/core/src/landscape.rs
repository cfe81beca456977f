//! Landscape functions, the target reduction, analytic gradients, and the
//! construction / classification of critical points.
//!
//! The canonical landscape is `𝒥[S] = Re Tr S`. For a target `W` the metric
//! landscape `J[S] = Re Tr(W†S)` is carried onto `𝒥` by the homeomorphism
//! `S ↦ √(W†) S √(W†)`, so the critical structure of `𝒥` is the whole story.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domains::{DomainKind, DomainPoint, LandscapeDomain, TangentChart, POINT_TOL};
use crate::error::{Error, Result};
use crate::linalg::{
    self, complexify, factor_point, imaginary_residual, max_abs, principal_sqrt, symplectic_dual,
    trace_of_product, unitarity_residual, CMatrix,
};

/// The desired transformation `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetTransformation {
    pub matrix: DomainPoint,
}

impl TargetTransformation {
    pub fn new(matrix: DomainPoint) -> Self {
        Self { matrix }
    }
}

fn check_same_size(a: &CMatrix, b: &CMatrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!(
            "size mismatch: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// `‖S − W‖² = 2·size − 2 Re Tr(W†S)` for unitary arguments.
pub fn metric_distance(s: &DomainPoint, w: &TargetTransformation) -> Result<f64> {
    let jm = j_metric(s, w)?;
    Ok(2.0 * s.matrix().nrows() as f64 - 2.0 * jm)
}

/// `J[S] = Re Tr(W†S)`.
pub fn j_metric(s: &DomainPoint, w: &TargetTransformation) -> Result<f64> {
    check_same_size(s.matrix(), w.matrix.matrix())?;
    Ok(trace_of_product(&w.matrix.matrix().adjoint(), s.matrix()).re)
}

/// `𝒥[S] = Re Tr S`.
pub fn j_canonical(s: &CMatrix) -> f64 {
    s.diagonal().iter().map(|z| z.re).sum()
}

/// `√(W†) S √(W†)`; `J(S, W) = 𝒥(result)`.
pub fn reduce_to_canonical(s: &DomainPoint, w: &TargetTransformation) -> Result<DomainPoint> {
    check_same_size(s.matrix(), w.matrix.matrix())?;
    if s.domain() != w.matrix.domain() {
        return Err(Error::Domain(format!(
            "point on {} but target on {}",
            s.domain(),
            w.matrix.domain()
        )));
    }
    let w_dag = DomainPoint::new(w.matrix.domain(), w.matrix.matrix().adjoint())?;
    let root = principal_sqrt(&w_dag)?;
    DomainPoint::new(s.domain(), root.matrix() * s.matrix() * root.matrix())
}

/// Sorted critical values of `𝒥`: `2n − N`, doubled for the self-dual domain.
pub fn critical_values(domain: LandscapeDomain) -> Vec<f64> {
    (0..=domain.n)
        .map(|n| critical_value(domain, n))
        .collect()
}

pub fn critical_value(domain: LandscapeDomain, n: usize) -> f64 {
    let base = 2.0 * n as f64 - domain.n as f64;
    match domain.kind {
        DomainKind::SelfDualUnitary => 2.0 * base,
        _ => base,
    }
}

/// Orbit representative `X⁻¹ Ω̃⁽ⁿ⁾ X`, where `Ω̃⁽ⁿ⁾ = diag(I_n, −I_{N−n})`
/// (each entry doubled on the self-dual domain) and `X` is in `SO(N)`,
/// `USp(2N)` or `U(N)` depending on the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPointSpec {
    pub domain: LandscapeDomain,
    pub n: usize,
    pub rotation: CMatrix,
}

impl CriticalPointSpec {
    /// Spec with the identity rotation.
    pub fn canonical(domain: LandscapeDomain, n: usize) -> Result<Self> {
        let spec = Self {
            domain,
            n,
            rotation: linalg::identity(domain.matrix_size()),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n > self.domain.n {
            return Err(Error::InvalidArgument(format!(
                "n = {} exceeds N = {}",
                self.n, self.domain.n
            )));
        }
        let size = self.domain.matrix_size();
        let x = &self.rotation;
        if x.nrows() != size || x.ncols() != size {
            return Err(Error::Dimension(format!(
                "rotation is {}x{}, expected {size}x{size}",
                x.nrows(),
                x.ncols()
            )));
        }
        let unitary = unitarity_residual(x);
        let structural = match self.domain.kind {
            DomainKind::SymmetricUnitary => {
                let det = x.map(|z| z.re).determinant();
                imaginary_residual(x).max((det - 1.0).abs())
            }
            DomainKind::SelfDualUnitary => {
                max_abs(&(symplectic_dual(x)? * x - linalg::identity(size)))
            }
            DomainKind::FullUnitary => 0.0,
        };
        let res = unitary.max(structural);
        if res > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "rotation is not in the {} conjugating group (residual {res:.3e})",
                self.domain.kind
            )));
        }
        Ok(())
    }

    /// Diagonal of `Ω̃⁽ⁿ⁾` as laid out in the matrix.
    pub fn omega_diagonal(&self) -> Vec<f64> {
        canonical_signs(self.domain, self.n)
    }
}

/// `ω̃` per quaternion/matrix index `0..N`: `+1` for the first `n`, `−1` after.
pub fn omega_signs(n_param: usize, n: usize) -> Vec<f64> {
    (0..n_param).map(|k| if k < n { 1.0 } else { -1.0 }).collect()
}

fn canonical_signs(domain: LandscapeDomain, n: usize) -> Vec<f64> {
    let base = omega_signs(domain.n, n);
    match domain.kind {
        DomainKind::SelfDualUnitary => base.iter().chain(base.iter()).copied().collect(),
        _ => base,
    }
}

pub fn make_critical_point(spec: &CriticalPointSpec) -> Result<DomainPoint> {
    spec.validate()?;
    let omega = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        spec.domain.matrix_size(),
        spec.omega_diagonal().into_iter().map(|w| Complex64::new(w, 0.0)),
    ));
    let x = &spec.rotation;
    let left = match spec.domain.kind {
        DomainKind::SymmetricUnitary => x.transpose(),
        DomainKind::SelfDualUnitary => symplectic_dual(x)?,
        DomainKind::FullUnitary => x.adjoint(),
    };
    let mut m = left * omega * x;
    if spec.domain.kind == DomainKind::SymmetricUnitary {
        // Real inputs give a real symmetric result; drop the rounding asymmetry.
        m = complexify(&((m.map(|z| z.re) + m.map(|z| z.re).transpose()) * 0.5));
    }
    DomainPoint::new(spec.domain, m)
}

/// Chart coordinates of the gradient of `𝒥` at `point`:
/// `g_k = d/dt 𝒥[curve(point, A_k, t)]|₀ = −Im Tr(A_k S)`.
pub fn gradient_canonical(point: &DomainPoint) -> Result<Vec<f64>> {
    let chart = crate::domains::standard_tangent_chart(point)?;
    Ok(directional_gradient(&chart, point.matrix()))
}

/// `−Im Tr(A_k M)` for every chart direction.
pub(crate) fn directional_gradient(chart: &TangentChart, m: &CMatrix) -> Vec<f64> {
    chart
        .basis()
        .iter()
        .map(|a| -trace_of_product(a, m).im)
        .collect()
}

/// Gradient of `J(·, W)` along the same curves: `−Im Tr(A_k √S W† √S)`.
pub fn gradient_metric(point: &DomainPoint, w: &TargetTransformation) -> Result<Vec<f64>> {
    check_same_size(point.matrix(), w.matrix.matrix())?;
    let chart = crate::domains::standard_tangent_chart(point)?;
    let root = principal_sqrt(point)?;
    let sandwiched = root.matrix() * w.matrix.matrix().adjoint() * root.matrix();
    Ok(directional_gradient(&chart, &sandwiched))
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Result of [`classify_critical_point`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "class", content = "n")]
pub enum CriticalClass {
    /// On the critical orbit of `Ω̃⁽ⁿ⁾`.
    Critical(usize),
    NotCritical,
}

/// Phases farther than this from a multiple of π make a small-gradient point inconsistent.
pub const PHASE_BAND: f64 = 0.1;

pub fn classify_critical_point(point: &DomainPoint, tol: f64) -> Result<CriticalClass> {
    let g = norm(&gradient_canonical(point)?);
    if g > tol {
        return Ok(CriticalClass::NotCritical);
    }
    let fact = factor_point(point)?;
    let mut count = 0;
    for phi in &fact.phases {
        let m = (phi / PI).round();
        let off = (phi - m * PI).abs();
        if off > PHASE_BAND {
            return Err(Error::Inconsistent(format!(
                "gradient {g:.3e} <= {tol:.1e} but phase {phi:.6} is {off:.3e} rad from any multiple of pi"
            )));
        }
        if (m as i64).rem_euclid(2) == 0 {
            count += 1;
        }
    }
    Ok(CriticalClass::Critical(count))
}

/// `√W C √W`: the image of a canonical point under the inverse target reduction.
pub fn transport_from_canonical(c: &DomainPoint, w: &TargetTransformation) -> Result<DomainPoint> {
    let root = principal_sqrt(&w.matrix)?;
    let m = root.matrix() * c.matrix() * root.matrix();
    let res = crate::domains::membership_residual(c.domain(), &m);
    if res > POINT_TOL {
        return Err(Error::numerical("transported point left the domain", res));
    }
    DomainPoint::new(c.domain(), m)
}
