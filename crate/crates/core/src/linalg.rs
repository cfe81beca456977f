//! Dense complex matrix helpers and the structure-aware spectral factorizations.
//!
//! Three factorizations are provided, one per landscape domain:
//!
//! * symmetric unitary `S = Xᵀ Ω X` with `X ∈ SO(N)` real,
//! * self-dual unitary `S = X^R Ω X` with `X` unitary-symplectic and every
//!   eigenphase doubled (Kramers pairs),
//! * generic unitary `S = X† Ω X`.
//!
//! All of them go through the same kernel: the Hermitian Cayley transform
//! `i(I − U)(I + U)⁻¹` of `U = e^{−iα}S` has eigenvalues `tan((φ − α)/2)`,
//! strictly monotone in the eigenphase. `α` is chosen so that the pole lands
//! in the widest gap of the spectrum, which keeps eigenvalue gaps comparable
//! to phase gaps (the Hermitian part alone, with eigenvalues `cos φ`, loses
//! half the digits for nearly degenerate phases). For a symmetric unitary the
//! transform is real symmetric and the basis comes out real.
//!
//! The symplectic form is `J = [[0, I_N], [-I_N, 0]]`, so the quaternion
//! element `(i, j)` of a `2N × 2N` matrix lives at rows `{i, N+i}` and columns
//! `{j, N+j}`.

use std::f64::consts::PI;

use nalgebra::{ComplexField, DMatrix, DVector, Matrix2, SymmetricEigen};
use num_complex::Complex64;

use crate::domains::{DomainKind, DomainPoint};
use crate::error::{Error, Result};

/// Dense square complex matrix; the carrier for every propagator and generator.
pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;
pub type CVector = DVector<Complex64>;

pub const IMAG: Complex64 = Complex64::new(0.0, 1.0);

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Phases within this distance of `-π` are stored as `+π`.
const BRANCH_SNAP: f64 = 1e-12;

/// Tolerances used by the factorizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorOptions {
    /// Allowed unitarity / symmetry / self-duality residual of the input.
    pub structure_tol: f64,
    /// Eigenvalues closer than this are treated as one cluster.
    pub cluster_gap: f64,
    /// Kramers partners must agree to this distance on the unit circle.
    pub pairing_tol: f64,
    /// Maximum reconstruction residual before reporting a numerical error.
    pub residual_tol: f64,
}

impl Default for FactorOptions {
    fn default() -> Self {
        Self {
            structure_tol: 1e-8,
            cluster_gap: 1e-8,
            pairing_tol: 1e-8,
            residual_tol: 1e-8,
        }
    }
}

/// Which group the rotation factor belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationGroup {
    /// Real special orthogonal, `S = Xᵀ Ω X`.
    SpecialOrthogonal,
    /// Unitary symplectic, `S = X^R Ω X` with `Ω` carrying each phase twice.
    UnitarySymplectic,
    /// Full unitary group, `S = X† Ω X`.
    Unitary,
}

/// Rotation plus eigenphases in `(-π, π]`.
///
/// For [`RotationGroup::UnitarySymplectic`] there are `N` phases for a
/// `2N × 2N` matrix; phase `k` sits at diagonal positions `k` and `N + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFactorization {
    pub rotation: CMatrix,
    pub phases: Vec<f64>,
    pub group: RotationGroup,
}

impl SpectralFactorization {
    /// Diagonal of `Ω` as laid out in the matrix (phases doubled for the symplectic case).
    pub fn diagonal_phases(&self) -> Vec<f64> {
        match self.group {
            RotationGroup::UnitarySymplectic => {
                self.phases.iter().chain(self.phases.iter()).copied().collect()
            }
            _ => self.phases.clone(),
        }
    }

    /// `X⁻¹ diag(f(φ)) X`, where `X⁻¹` is `Xᵀ`, `X^R` or `X†` as appropriate.
    pub fn apply(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let diag: Vec<Complex64> = self.diagonal_phases().into_iter().map(f).collect();
        let left = match self.group {
            RotationGroup::SpecialOrthogonal => self.rotation.transpose(),
            RotationGroup::UnitarySymplectic => symplectic_dual_unchecked(&self.rotation),
            RotationGroup::Unitary => self.rotation.adjoint(),
        };
        let mut scaled = self.rotation.clone();
        for (r, d) in diag.iter().enumerate() {
            for c in 0..scaled.ncols() {
                scaled[(r, c)] *= *d;
            }
        }
        left * scaled
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply(|phi| Complex64::from_polar(1.0, phi))
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Lifts a real matrix into the complex carrier.
pub fn complexify(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_real(m: &RMatrix) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `max(‖M†M − I‖_max, ‖MM† − I‖_max)`; infinite for non-square input.
pub fn unitarity_residual(m: &CMatrix) -> f64 {
    if !m.is_square() || !is_finite(m) {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let id = identity(n);
    let left = m.adjoint() * m - &id;
    let right = m * m.adjoint() - &id;
    max_abs(&left).max(max_abs(&right))
}

pub fn is_unitary(m: &CMatrix, tol: f64) -> bool {
    unitarity_residual(m) <= tol
}

pub fn symmetry_residual(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(m - m.transpose()))
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(m - m.adjoint()))
}

/// Largest imaginary part of any entry.
pub fn imaginary_residual(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.im.abs()))
}

/// The antisymmetric form `[[0, I_N], [-I_N, 0]]` of size `2N`.
pub fn symplectic_form(block_dim: usize) -> CMatrix {
    let n = block_dim;
    let mut j = CMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = ONE;
        j[(n + i, i)] = -ONE;
    }
    j
}

fn even_half(m: &CMatrix) -> Result<usize> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !m.nrows().is_multiple_of(2) || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "symplectic dual needs an even positive size, got {}",
            m.nrows()
        )));
    }
    Ok(m.nrows() / 2)
}

/// Symplectic dual `M^R = -J Mᵀ J`.
///
/// With `M = [[a, b], [c, d]]` in `N × N` blocks this is
/// `[[dᵀ, -bᵀ], [-cᵀ, aᵀ]]`, evaluated entrywise so the involution is exact.
pub fn symplectic_dual(m: &CMatrix) -> Result<CMatrix> {
    even_half(m)?;
    Ok(symplectic_dual_unchecked(m))
}

pub(crate) fn symplectic_dual_unchecked(m: &CMatrix) -> CMatrix {
    let n = m.nrows() / 2;
    CMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let (rb, ri) = (r / n, r % n);
        let (cb, ci) = (c / n, c % n);
        // Entry (r, c) of the dual reads the transposed entry from the
        // diagonally opposite block.
        let src = m[((1 - cb) * n + ci, (1 - rb) * n + ri)];
        if rb == cb {
            src
        } else {
            -src
        }
    })
}

pub fn self_duality_residual(m: &CMatrix) -> f64 {
    match symplectic_dual(m) {
        Ok(dual) => max_abs(&(m - dual)),
        Err(_) => f64::INFINITY,
    }
}

/// Antiunitary time reversal `v ↦ J v̄`. Commutes with every self-dual matrix
/// that is Hermitian or unitary, and squares to `-1`.
pub fn time_reversal(v: &CVector) -> CVector {
    let n = v.len() / 2;
    CVector::from_fn(2 * n, |r, _| {
        if r < n {
            v[n + r].conj()
        } else {
            -v[r - n].conj()
        }
    })
}

/// A `2N × 2N` complex matrix viewed as an `N × N` array of 2×2 quaternion blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct QuaternionBlockMatrix {
    block_dim: usize,
    realization: CMatrix,
}

impl QuaternionBlockMatrix {
    pub fn new(realization: CMatrix) -> Result<Self> {
        let block_dim = even_half(&realization)?;
        Ok(Self {
            block_dim,
            realization,
        })
    }

    /// Builds a matrix from real quaternion coefficients `(q0, q1, q2, q3)` per
    /// block, using `q0 σ0 − i(q1 σx + q2 σy + q3 σz)`.
    pub fn from_quaternions(block_dim: usize, coeffs: impl Fn(usize, usize) -> [f64; 4]) -> Self {
        let n = block_dim;
        let mut m = CMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let block = quaternion_block(coeffs(i, j));
                for a in 0..2 {
                    for b in 0..2 {
                        m[(i + a * n, j + b * n)] = block[(a, b)];
                    }
                }
            }
        }
        Self {
            block_dim,
            realization: m,
        }
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn realization(&self) -> &CMatrix {
        &self.realization
    }

    pub fn into_realization(self) -> CMatrix {
        self.realization
    }

    pub fn block(&self, i: usize, j: usize) -> Matrix2<Complex64> {
        let n = self.block_dim;
        let m = &self.realization;
        Matrix2::new(m[(i, j)], m[(i, n + j)], m[(n + i, j)], m[(n + i, n + j)])
    }

    /// Coefficients `c` with `block = c0 σ0 + c1 σx + c2 σy + c3 σz`.
    pub fn pauli_coefficients(&self, i: usize, j: usize) -> [Complex64; 4] {
        let q = self.block(i, j);
        let half = 0.5;
        [
            (q[(0, 0)] + q[(1, 1)]) * half,
            (q[(0, 1)] + q[(1, 0)]) * half,
            (q[(0, 1)] - q[(1, 0)]) * IMAG * half,
            (q[(0, 0)] - q[(1, 1)]) * half,
        ]
    }

    /// Quaternion coefficients `(q0, q1, q2, q3)`, block = `q0 σ0 − i Σ qk σk`.
    /// Real for a quaternion-real block.
    pub fn quaternion_coefficients(&self, i: usize, j: usize) -> [Complex64; 4] {
        let c = self.pauli_coefficients(i, j);
        [c[0], c[1] * IMAG, c[2] * IMAG, c[3] * IMAG]
    }

    /// Largest imaginary part over all quaternion coefficients.
    pub fn quaternion_realness_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.block_dim {
            for j in 0..self.block_dim {
                for q in self.quaternion_coefficients(i, j) {
                    worst = worst.max(q.im.abs());
                }
            }
        }
        worst
    }

    pub fn is_quaternion_real(&self, tol: f64) -> bool {
        self.quaternion_realness_residual() <= tol
    }
}

fn quaternion_block(q: [f64; 4]) -> Matrix2<Complex64> {
    // q0 σ0 − i(q1 σx + q2 σy + q3 σz) = [[q0 − i q3, −q2 − i q1], [q2 − i q1, q0 + i q3]]
    Matrix2::new(
        Complex64::new(q[0], -q[3]),
        Complex64::new(-q[2], -q[1]),
        Complex64::new(q[2], -q[1]),
        Complex64::new(q[0], q[3]),
    )
}

/// Maps an angle into `(-π, π]`, storing `-π` (and anything within
/// `BRANCH_SNAP` of it) as `+π`.
pub fn canonical_phase(phi: f64) -> f64 {
    let mut p = phi.rem_euclid(2.0 * PI);
    if p > PI {
        p -= 2.0 * PI;
    }
    if p <= -PI + BRANCH_SNAP {
        p = PI;
    }
    p
}

fn sorted_eigen<T: ComplexField<RealField = f64>>(m: DMatrix<T>) -> (Vec<f64>, DMatrix<T>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])].clone());
    (values, vectors)
}

/// Ranges of consecutive sorted values chained by gaps below `gap`.
fn clusters(values: &[f64], gap: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=values.len() {
        if k == values.len() || values[k] - values[k - 1] >= gap {
            out.push(start..k);
            start = k;
        }
    }
    out
}

/// Hermitian `i(I − U)(I + U)⁻¹` for `U = e^{−iα}s`; eigenvalues
/// `tan((φ − α)/2)`, pole at `φ = α + π`.
fn cayley_at(s: &CMatrix, alpha: f64) -> Option<CMatrix> {
    let n = s.nrows();
    let u = s * Complex64::from_polar(1.0, -alpha);
    let id = CMatrix::identity(n, n);
    let c = (&id + &u).lu().solve(&(&id - &u))? * IMAG;
    c.iter().all(|z| z.is_finite()).then(|| hermitian_part(&c))
}

/// Midpoint of the widest gap between consecutive phases on the circle.
fn widest_gap_phase(mut phases: Vec<f64>) -> f64 {
    phases.sort_by(f64::total_cmp);
    let last = phases.len() - 1;
    let mut gap = phases[0] + 2.0 * PI - phases[last];
    let mut mid = phases[last] + 0.5 * gap;
    for k in 0..last {
        let g = phases[k + 1] - phases[k];
        if g > gap {
            gap = g;
            mid = phases[k] + 0.5 * g;
        }
    }
    mid
}

/// Cayley transform of a unitary `s` with the pole in the widest spectral
/// gap. A first transform with a fixed pole locates the phases roughly.
fn cayley_transform(s: &CMatrix) -> Result<CMatrix> {
    let (alpha0, rough) = [0.5, 1.7, 2.9]
        .iter()
        .find_map(|&a| cayley_at(s, a).map(|c| (a, c)))
        .ok_or_else(|| Error::numerical("Cayley transform is singular", f64::NAN))?;
    let phases = SymmetricEigen::new(rough)
        .eigenvalues
        .iter()
        .map(|t| alpha0 + 2.0 * t.atan())
        .collect();
    let alpha = widest_gap_phase(phases) - PI;
    cayley_at(s, alpha).ok_or_else(|| Error::numerical("Cayley transform is singular", f64::NAN))
}

fn hermitian_part<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> DMatrix<T> {
    let half = T::from_real(0.5);
    (m + m.adjoint()) * half
}

fn check_square(m: &CMatrix) -> Result<()> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "expected a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !is_finite(m) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    Ok(())
}

fn check_unitary(m: &CMatrix, tol: f64) -> Result<()> {
    let res = unitarity_residual(m);
    if res > tol {
        return Err(Error::Domain(format!(
            "matrix is not unitary (residual {res:.3e} > {tol:.1e})"
        )));
    }
    Ok(())
}

fn check_residual(fact: &SpectralFactorization, s: &CMatrix, tol: f64) -> Result<()> {
    let res = max_abs(&(fact.reconstruct() - s));
    if res > tol {
        return Err(Error::numerical(
            "spectral factorization does not reproduce its input",
            res,
        ));
    }
    Ok(())
}

/// `S = Xᵀ diag(e^{iφ}) X` with `X ∈ SO(N)`, using the default tolerances.
pub fn factor_symmetric_unitary(s: &CMatrix) -> Result<SpectralFactorization> {
    factor_symmetric_unitary_with(s, &FactorOptions::default())
}

pub fn factor_symmetric_unitary_with(
    s: &CMatrix,
    opts: &FactorOptions,
) -> Result<SpectralFactorization> {
    check_square(s)?;
    check_unitary(s, opts.structure_tol)?;
    let sym = symmetry_residual(s);
    if sym > opts.structure_tol {
        return Err(Error::Domain(format!(
            "matrix is not symmetric (residual {sym:.3e})"
        )));
    }
    let n = s.nrows();
    let re = s.map(|z| z.re);
    let im = s.map(|z| z.im);
    let (_, q) = sorted_eigen(cayley_transform(s)?.map(|z| z.re));

    let mut rows: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|k| {
            let v = q.column(k);
            let a = v.dot(&(&re * v));
            let b = v.dot(&(&im * v));
            let mut row: Vec<f64> = v.iter().copied().collect();
            if let Some(lead) = row.iter().copied().find(|x| x.abs() > 1e-12) {
                if lead < 0.0 {
                    row.iter_mut().for_each(|x| *x = -*x);
                }
            }
            (canonical_phase(b.atan2(a)), row)
        })
        .collect();

    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let phase_values: Vec<f64> = rows.iter().map(|r| r.0).collect();
    for range in clusters(&phase_values, opts.cluster_gap) {
        rows[range].sort_by(|a, b| {
            a.1.iter()
                .zip(&b.1)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
    }

    let mut x = RMatrix::from_fn(n, n, |r, c| rows[r].1[c]);
    if x.determinant() < 0.0 {
        x.row_mut(n - 1).neg_mut();
    }
    let fact = SpectralFactorization {
        rotation: complexify(&x),
        phases: rows.iter().map(|r| r.0).collect(),
        group: RotationGroup::SpecialOrthogonal,
    };
    check_residual(&fact, s, opts.residual_tol)?;
    Ok(fact)
}

fn project_out(v: &CVector, basis: &[CVector]) -> CVector {
    let mut w = v.clone();
    for _ in 0..2 {
        for b in basis {
            let c = b.dotc(&w);
            w -= b * c;
        }
    }
    w
}

/// Extends the orthonormal, time-reversal-closed set `span` by `m` vectors
/// `v_k` drawn from the span of `candidates`, pushing each `v_k` and its
/// partner `J v̄_k`. The candidates should span a time-reversal-invariant
/// space of dimension `2m`; projecting against the whole of `span` keeps the
/// frame orthonormal even when the candidates are slightly contaminated by
/// earlier clusters.
pub(crate) fn kramers_extend(candidates: &[CVector], span: &mut Vec<CVector>) -> Vec<CVector> {
    let target = candidates.len() / 2;
    let mut out = Vec::with_capacity(target);
    while out.len() < target {
        let best = candidates
            .iter()
            .map(|c| project_out(c, span))
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("non-empty candidate set");
        let v = &best / Complex64::new(best.norm(), 0.0);
        span.push(v.clone());
        let tv = project_out(&time_reversal(&v), span);
        let tv = &tv / Complex64::new(tv.norm(), 0.0);
        span.push(tv);
        out.push(v);
    }
    out
}

/// Assembles `V = [v_1 … v_N, −J v̄_1 … −J v̄_N]`, which is unitary symplectic
/// when the `v_k` come from [`kramers_extend`].
pub(crate) fn symplectic_frame(vectors: &[CVector]) -> CMatrix {
    let n = vectors.len();
    let mut v = CMatrix::zeros(2 * n, 2 * n);
    for (k, vk) in vectors.iter().enumerate() {
        v.set_column(k, vk);
        v.set_column(n + k, &(-time_reversal(vk)));
    }
    v
}

/// `S = X^R Ω X` with `X` unitary symplectic and `Ω = diag(ω_k σ0)`.
pub fn factor_self_dual_unitary(s: &QuaternionBlockMatrix) -> Result<SpectralFactorization> {
    factor_self_dual_unitary_with(s, &FactorOptions::default())
}

pub fn factor_self_dual_unitary_with(
    s: &QuaternionBlockMatrix,
    opts: &FactorOptions,
) -> Result<SpectralFactorization> {
    let m = s.realization();
    check_square(m)?;
    check_unitary(m, opts.structure_tol)?;
    let dual = self_duality_residual(m);
    if dual > opts.structure_tol {
        return Err(Error::Domain(format!(
            "matrix is not self-dual (residual {dual:.3e})"
        )));
    }
    let (values, q) = sorted_eigen(cayley_transform(m)?);
    let phase_of = |v: &CVector| canonical_phase(v.dotc(&(m * v)).arg());

    let mut pairs: Vec<(f64, CVector)> = Vec::with_capacity(s.block_dim());
    let mut span: Vec<CVector> = Vec::with_capacity(m.nrows());
    for range in clusters(&values, opts.cluster_gap) {
        if range.len() % 2 != 0 {
            let phase = phase_of(&q.column(range.start).into_owned());
            return Err(Error::numerical(
                format!(
                    "eigenphase {phase:.6} has odd multiplicity {} (no Kramers partner)",
                    range.len()
                ),
                opts.pairing_tol,
            ));
        }
        let candidates: Vec<CVector> = range.map(|k| q.column(k).into_owned()).collect();
        for v in kramers_extend(&candidates, &mut span) {
            let phase = phase_of(&v);
            let partner = phase_of(&time_reversal(&v));
            let split = (Complex64::from_polar(1.0, phase) - Complex64::from_polar(1.0, partner)).norm();
            if split > opts.pairing_tol {
                return Err(Error::numerical("Kramers partners have different eigenphases", split));
            }
            pairs.push((phase, v));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let vectors: Vec<CVector> = pairs.iter().map(|p| p.1.clone()).collect();
    let fact = SpectralFactorization {
        rotation: symplectic_frame(&vectors).adjoint(),
        phases: pairs.iter().map(|p| p.0).collect(),
        group: RotationGroup::UnitarySymplectic,
    };
    check_residual(&fact, m, opts.residual_tol)?;
    Ok(fact)
}

/// `S = X† diag(e^{iφ}) X` for any unitary `S`.
pub fn factor_unitary(s: &CMatrix) -> Result<SpectralFactorization> {
    factor_unitary_with(s, &FactorOptions::default())
}

pub fn factor_unitary_with(s: &CMatrix, opts: &FactorOptions) -> Result<SpectralFactorization> {
    check_square(s)?;
    check_unitary(s, opts.structure_tol)?;
    let (_, q) = sorted_eigen(cayley_transform(s)?);
    let mut cols: Vec<(f64, usize)> = (0..q.ncols())
        .map(|k| {
            let v = q.column(k);
            (canonical_phase(v.dotc(&(s * v)).arg()), k)
        })
        .collect();
    cols.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = s.nrows();
    let v = CMatrix::from_fn(n, n, |r, c| q[(r, cols[c].1)]);
    let fact = SpectralFactorization {
        rotation: v.adjoint(),
        phases: cols.iter().map(|c| c.0).collect(),
        group: RotationGroup::Unitary,
    };
    check_residual(&fact, s, opts.residual_tol)?;
    Ok(fact)
}

/// Factorization matching the point's domain.
pub fn factor_point(point: &DomainPoint) -> Result<SpectralFactorization> {
    let m = point.matrix();
    match point.domain().kind {
        DomainKind::SymmetricUnitary => factor_symmetric_unitary(m),
        DomainKind::SelfDualUnitary => {
            factor_self_dual_unitary(&QuaternionBlockMatrix::new(m.clone())?)
        }
        DomainKind::FullUnitary => factor_unitary(m),
    }
}

/// Principal square root: eigenphases halved from `(-π, π]`, so `-1 ↦ +i`.
/// The result stays in the same domain.
pub fn principal_sqrt(point: &DomainPoint) -> Result<DomainPoint> {
    let fact = factor_point(point)?;
    let mut root = fact.apply(|phi| Complex64::from_polar(1.0, 0.5 * phi));
    match point.domain().kind {
        DomainKind::SymmetricUnitary => root = (&root + root.transpose()) * Complex64::new(0.5, 0.0),
        DomainKind::SelfDualUnitary => {
            root = (&root + symplectic_dual_unchecked(&root)) * Complex64::new(0.5, 0.0)
        }
        DomainKind::FullUnitary => {}
    }
    DomainPoint::new(point.domain(), root)
}

/// Residual of `a` against the generator structure required by `kind`:
/// Hermitian always, plus real (symmetric domain) or self-dual (self-dual domain).
pub fn generator_residual(a: &CMatrix, kind: DomainKind) -> f64 {
    let herm = hermiticity_residual(a);
    match kind {
        DomainKind::SymmetricUnitary => herm.max(imaginary_residual(a)),
        DomainKind::SelfDualUnitary => herm.max(self_duality_residual(a)),
        DomainKind::FullUnitary => herm,
    }
}

const GENERATOR_TOL: f64 = 1e-10;

fn hermitian_function(a: &CMatrix, kind: DomainKind, f: impl Fn(f64) -> Complex64) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::Dimension("generator must be square".into()));
    }
    let res = generator_residual(a, kind);
    if res > GENERATOR_TOL {
        return Err(Error::Domain(format!(
            "generator lacks the structure required by {kind:?} (residual {res:.3e})"
        )));
    }
    let n = a.nrows();
    match kind {
        DomainKind::SymmetricUnitary => {
            let re = a.map(|z| z.re);
            let eig = SymmetricEigen::new((&re + re.transpose()) * 0.5);
            let q = complexify(&eig.eigenvectors);
            let mut scaled = q.transpose();
            for r in 0..n {
                let d = f(eig.eigenvalues[r]);
                for c in 0..n {
                    scaled[(r, c)] *= d;
                }
            }
            Ok(&q * scaled)
        }
        _ => {
            let eig = SymmetricEigen::new(hermitian_part(a));
            let v = &eig.eigenvectors;
            let mut scaled = v.adjoint();
            for r in 0..n {
                let d = f(eig.eigenvalues[r]);
                for c in 0..n {
                    scaled[(r, c)] *= d;
                }
            }
            Ok(v * scaled)
        }
    }
}

/// `e^{iAt}` for a generator with the structure demanded by `kind`.
pub fn exp_i_generator(a: &CMatrix, t: f64, kind: DomainKind) -> Result<CMatrix> {
    hermitian_function(a, kind, |lambda| Complex64::from_polar(1.0, lambda * t))
}

/// `e^{iAt} − I`, accurate when `‖At‖` is small.
pub fn exp_i_generator_minus_identity(a: &CMatrix, t: f64, kind: DomainKind) -> Result<CMatrix> {
    hermitian_function(a, kind, |lambda| {
        let theta = lambda * t;
        let s = (0.5 * theta).sin();
        Complex64::new(-2.0 * s * s, theta.sin())
    })
}

/// Frobenius inner product `Re Tr(A† B)`.
pub fn frobenius_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// `Tr(A B)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}
