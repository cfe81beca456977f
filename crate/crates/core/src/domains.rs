//! Landscape domains, tangent charts and the on-manifold curve
//! `t ↦ √S e^{iAt} √S` used for every derivative and every optimizer step.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::SVD;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, exp_i_generator, frobenius_inner, generator_residual, max_abs, self_duality_residual,
    symmetry_residual, unitarity_residual, CMatrix, RMatrix, IMAG,
};

/// Membership tolerance carried by every [`DomainPoint`].
pub const POINT_TOL: f64 = 1e-9;

/// Residual target of [`renormalize`].
pub const RENORMALIZE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    /// `S = Sᵀ`, unitary: propagators of real-symmetric Hamiltonians, `U(N)/O(N)`.
    SymmetricUnitary,
    /// `S = S^R`, unitary, size `2N`: propagators of self-dual Hamiltonians, `U(2N)/Sp(2N)`.
    SelfDualUnitary,
    /// Unconstrained `U(N)` baseline.
    FullUnitary,
}

impl DomainKind {
    pub fn short_name(self) -> &'static str {
        match self {
            DomainKind::SymmetricUnitary => "sym",
            DomainKind::SelfDualUnitary => "sympl",
            DomainKind::FullUnitary => "full",
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sym" | "symmetric" => Ok(DomainKind::SymmetricUnitary),
            "sympl" | "self-dual" | "symplectic" => Ok(DomainKind::SelfDualUnitary),
            "full" | "unitary" => Ok(DomainKind::FullUnitary),
            other => Err(Error::InvalidArgument(format!(
                "unknown domain '{other}' (expected sym, sympl or full)"
            ))),
        }
    }
}

/// A domain kind together with its size parameter `N`.
///
/// The matrix size is `N`, except for the self-dual domain where it is `2N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LandscapeDomain {
    pub kind: DomainKind,
    pub n: usize,
}

impl LandscapeDomain {
    pub fn new(kind: DomainKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        Ok(Self { kind, n })
    }

    pub fn symmetric(n: usize) -> Self {
        Self::new(DomainKind::SymmetricUnitary, n).expect("N >= 1")
    }

    pub fn self_dual(n: usize) -> Self {
        Self::new(DomainKind::SelfDualUnitary, n).expect("N >= 1")
    }

    pub fn full(n: usize) -> Self {
        Self::new(DomainKind::FullUnitary, n).expect("N >= 1")
    }

    pub fn matrix_size(&self) -> usize {
        match self.kind {
            DomainKind::SelfDualUnitary => 2 * self.n,
            _ => self.n,
        }
    }

    pub fn dim(&self) -> usize {
        domain_dim(*self)
    }
}

impl fmt::Display for LandscapeDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(N={})", self.kind, self.n)
    }
}

/// Real dimension of the domain manifold.
pub fn domain_dim(domain: LandscapeDomain) -> usize {
    let n = domain.n;
    match domain.kind {
        DomainKind::SymmetricUnitary => (n * n + n) / 2,
        DomainKind::SelfDualUnitary => n * (2 * n - 1),
        DomainKind::FullUnitary => n * n,
    }
}

/// Largest violated membership residual (unitarity or structure).
pub fn membership_residual(domain: LandscapeDomain, m: &CMatrix) -> f64 {
    let size = domain.matrix_size();
    if m.nrows() != size || m.ncols() != size {
        return f64::INFINITY;
    }
    let unitary = unitarity_residual(m);
    let structure = match domain.kind {
        DomainKind::SymmetricUnitary => symmetry_residual(m),
        DomainKind::SelfDualUnitary => self_duality_residual(m),
        DomainKind::FullUnitary => 0.0,
    };
    unitary.max(structure)
}

pub fn contains(domain: LandscapeDomain, m: &CMatrix, tol: f64) -> bool {
    membership_residual(domain, m) <= tol
}

/// A matrix known to lie on its domain to [`POINT_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct DomainPoint {
    domain: LandscapeDomain,
    matrix: CMatrix,
}

impl DomainPoint {
    pub fn new(domain: LandscapeDomain, matrix: CMatrix) -> Result<Self> {
        let res = membership_residual(domain, &matrix);
        if res > POINT_TOL {
            return Err(Error::Domain(format!(
                "matrix is not on {domain} (residual {res:.3e})"
            )));
        }
        Ok(Self { domain, matrix })
    }

    pub fn identity(domain: LandscapeDomain) -> Self {
        Self {
            domain,
            matrix: linalg::identity(domain.matrix_size()),
        }
    }

    pub fn domain(&self) -> LandscapeDomain {
        self.domain
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }
}

/// Unit quaternions used for off-diagonal self-dual directions: `1, −iσx, −iσy, −iσz`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuaternionUnit {
    One,
    I,
    J,
    K,
}

impl QuaternionUnit {
    pub const ALL: [QuaternionUnit; 4] = [Self::One, Self::I, Self::J, Self::K];

    fn coefficients(self) -> [f64; 4] {
        match self {
            Self::One => [1.0, 0.0, 0.0, 0.0],
            Self::I => [0.0, 1.0, 0.0, 0.0],
            Self::J => [0.0, 0.0, 1.0, 0.0],
            Self::K => [0.0, 0.0, 0.0, 1.0],
        }
    }
}

/// Label of a chart coordinate: which generator entry it moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Monomial {
    /// `A_ii` (symmetric, full) or `λ_i` on the diagonal quaternion block (self-dual).
    Diagonal { i: usize },
    /// Real part of `A_ij`, `i < j`.
    OffDiagonal { i: usize, j: usize },
    /// Imaginary part of `A_ij`, `i < j` (full unitary only).
    OffDiagonalImag { i: usize, j: usize },
    /// One quaternion component of the block `A_ij`, `i < j` (self-dual only).
    Quaternion { i: usize, j: usize, unit: QuaternionUnit },
}

impl Monomial {
    pub fn indices(&self) -> (usize, usize) {
        match *self {
            Monomial::Diagonal { i } => (i, i),
            Monomial::OffDiagonal { i, j }
            | Monomial::OffDiagonalImag { i, j }
            | Monomial::Quaternion { i, j, .. } => (i, j),
        }
    }

    /// Factor converting a per-monomial quadratic-form coefficient into the
    /// orthonormal-chart Hessian entry.
    pub fn chart_scale(&self) -> f64 {
        match self {
            Monomial::Diagonal { .. } => 1.0,
            _ => 0.5,
        }
    }
}

/// Orthonormal basis of admissible generators under `⟨A, B⟩ = Re Tr(A†B)`.
///
/// The basis does not depend on the base point: directions are pulled onto
/// the manifold by [`curve`].
#[derive(Debug, Clone)]
pub struct TangentChart {
    domain: LandscapeDomain,
    basis: Vec<CMatrix>,
    labels: Vec<Monomial>,
}

impl TangentChart {
    /// Canonical chart: diagonal units first, then off-diagonal units in
    /// lexicographic `(i, j)` order.
    pub fn for_domain(domain: LandscapeDomain) -> Self {
        let n = domain.n;
        let size = domain.matrix_size();
        let mut basis = Vec::with_capacity(domain.dim());
        let mut labels = Vec::with_capacity(domain.dim());
        let c = |x: f64| Complex64::new(x, 0.0);

        match domain.kind {
            DomainKind::SymmetricUnitary | DomainKind::FullUnitary => {
                for i in 0..n {
                    let mut a = CMatrix::zeros(size, size);
                    a[(i, i)] = c(1.0);
                    basis.push(a);
                    labels.push(Monomial::Diagonal { i });
                }
                for i in 0..n {
                    for j in (i + 1)..n {
                        let mut a = CMatrix::zeros(size, size);
                        a[(i, j)] = c(FRAC_1_SQRT_2);
                        a[(j, i)] = c(FRAC_1_SQRT_2);
                        basis.push(a);
                        labels.push(Monomial::OffDiagonal { i, j });
                        if domain.kind == DomainKind::FullUnitary {
                            let mut a = CMatrix::zeros(size, size);
                            a[(i, j)] = -IMAG * FRAC_1_SQRT_2;
                            a[(j, i)] = IMAG * FRAC_1_SQRT_2;
                            basis.push(a);
                            labels.push(Monomial::OffDiagonalImag { i, j });
                        }
                    }
                }
            }
            DomainKind::SelfDualUnitary => {
                for i in 0..n {
                    let mut a = CMatrix::zeros(size, size);
                    a[(i, i)] = c(FRAC_1_SQRT_2);
                    a[(n + i, n + i)] = c(FRAC_1_SQRT_2);
                    basis.push(a);
                    labels.push(Monomial::Diagonal { i });
                }
                for i in 0..n {
                    for j in (i + 1)..n {
                        for unit in QuaternionUnit::ALL {
                            let q = unit.coefficients();
                            let block = linalg::QuaternionBlockMatrix::from_quaternions(
                                n,
                                |r, s| if (r, s) == (i, j) { q } else { [0.0; 4] },
                            )
                            .into_realization();
                            // Hermitian completion puts the conjugate quaternion at (j, i).
                            let a = (&block + block.adjoint()) * c(0.5);
                            basis.push(a);
                            labels.push(Monomial::Quaternion { i, j, unit });
                        }
                    }
                }
            }
        }
        Self {
            domain,
            basis,
            labels,
        }
    }

    pub fn domain(&self) -> LandscapeDomain {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn labels(&self) -> &[Monomial] {
        &self.labels
    }

    /// `Σ c_k A_k`.
    pub fn direction(&self, coords: &[f64]) -> Result<CMatrix> {
        if coords.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "expected {} chart coordinates, got {}",
                self.dim(),
                coords.len()
            )));
        }
        let size = self.domain.matrix_size();
        let mut a = CMatrix::zeros(size, size);
        for (ck, ak) in coords.iter().zip(&self.basis) {
            if *ck != 0.0 {
                a += ak * Complex64::new(*ck, 0.0);
            }
        }
        Ok(a)
    }

    /// Orthogonal projection coordinates `Re Tr(A_k† A)`.
    pub fn coordinates(&self, a: &CMatrix) -> Vec<f64> {
        self.basis.iter().map(|ak| frobenius_inner(ak, a)).collect()
    }

    pub fn gram(&self) -> RMatrix {
        let d = self.dim();
        RMatrix::from_fn(d, d, |r, c| frobenius_inner(&self.basis[r], &self.basis[c]))
    }
}

/// The canonical chart at `point`; fails if the point is off its domain.
pub fn standard_tangent_chart(point: &DomainPoint) -> Result<TangentChart> {
    let res = membership_residual(point.domain, &point.matrix);
    if res > POINT_TOL {
        return Err(Error::Domain(format!(
            "chart requested at off-domain point (residual {res:.3e})"
        )));
    }
    Ok(TangentChart::for_domain(point.domain))
}

fn check_generator(domain: LandscapeDomain, a: &CMatrix) -> Result<()> {
    let size = domain.matrix_size();
    if a.nrows() != size || a.ncols() != size {
        return Err(Error::Dimension(format!(
            "generator is {}x{}, domain needs {size}x{size}",
            a.nrows(),
            a.ncols()
        )));
    }
    let res = generator_residual(a, domain.kind);
    if res > 1e-10 {
        return Err(Error::Domain(format!(
            "generator lacks the {} structure (residual {res:.3e})",
            domain.kind
        )));
    }
    Ok(())
}

/// `√S e^{iAt} √S`.
pub fn curve(point: &DomainPoint, a: &CMatrix, t: f64) -> Result<DomainPoint> {
    check_generator(point.domain, a)?;
    if t == 0.0 {
        return Ok(point.clone());
    }
    let root = linalg::principal_sqrt(point)?;
    curve_from_root(&root, a, t)
}

/// [`curve`] with a precomputed principal square root of the base point.
pub fn curve_from_root(root: &DomainPoint, a: &CMatrix, t: f64) -> Result<DomainPoint> {
    let domain = root.domain;
    let e = exp_i_generator(a, t, domain.kind)?;
    let m = root.matrix() * e * root.matrix();
    let res = membership_residual(domain, &m);
    if res > POINT_TOL {
        return Err(Error::numerical("curve left the domain", res));
    }
    Ok(DomainPoint { domain, matrix: m })
}

fn project_structure(domain: LandscapeDomain, m: &CMatrix) -> CMatrix {
    let half = Complex64::new(0.5, 0.0);
    match domain.kind {
        DomainKind::SymmetricUnitary => (m + m.transpose()) * half,
        DomainKind::SelfDualUnitary => (m + linalg::symplectic_dual_unchecked(m)) * half,
        DomainKind::FullUnitary => m.clone(),
    }
}

fn polar_unitary(m: &CMatrix) -> Result<CMatrix> {
    let svd = SVD::new(m.clone(), true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => Ok(u * v_t),
        _ => Err(Error::numerical("SVD failed during polar projection", f64::NAN)),
    }
}

/// Pulls a slightly drifted matrix back onto its domain.
///
/// Alternates the structure projection with the polar (nearest unitary)
/// projection for at most five rounds. Inputs already within
/// [`RENORMALIZE_TOL`] are returned untouched.
pub fn renormalize(domain: LandscapeDomain, m: &CMatrix) -> Result<DomainPoint> {
    let initial = membership_residual(domain, m);
    if initial > 1e-6 {
        return Err(Error::Domain(format!(
            "matrix too far from {domain} to renormalize (residual {initial:.3e})"
        )));
    }
    if initial < RENORMALIZE_TOL {
        return Ok(DomainPoint {
            domain,
            matrix: m.clone(),
        });
    }
    let mut current = m.clone();
    let mut res = initial;
    for _ in 0..5 {
        current = polar_unitary(&project_structure(domain, &current))?;
        res = membership_residual(domain, &current);
        if res < RENORMALIZE_TOL {
            return Ok(DomainPoint {
                domain,
                matrix: current,
            });
        }
    }
    Err(Error::numerical("renormalization did not converge", res))
}

/// Max-entry distance between two points' matrices.
pub fn distance_max(a: &DomainPoint, b: &DomainPoint) -> f64 {
    max_abs(&(a.matrix() - b.matrix()))
}
