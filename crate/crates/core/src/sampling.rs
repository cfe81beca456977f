//! Seeded random matrices: Haar unitaries, COE/CSE members, conjugating
//! rotations and tangent directions.
//!
//! Every draw comes from a [`SeededStream`], a ChaCha20 generator keyed by
//! `seed` with `stream_id` selecting an independent counter stream, so trial
//! `k` of a batch sees the same numbers no matter which worker runs it.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::domains::{DomainKind, DomainPoint, LandscapeDomain, TangentChart};
use crate::error::{Error, Result};
use crate::linalg::{complexify, symplectic_dual, symplectic_frame, time_reversal, CMatrix, CVector, RMatrix};

#[derive(Debug, Clone)]
pub struct SeededStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha20Rng,
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Standard complex Gaussian, `E|z|² = 1`.
    pub fn complex_normal(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(self.normal() * s, self.normal() * s)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("matrix size must be at least 1".into()));
    }
    Ok(())
}

/// Haar-distributed `U ∈ U(N)`: QR of a complex Ginibre matrix with the
/// diagonal of `R` rotated onto the positive reals.
pub fn haar_unitary(n: usize, stream: &mut SeededStream) -> Result<CMatrix> {
    check_size(n)?;
    let z = CMatrix::from_fn(n, n, |_, _| stream.complex_normal());
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// COE member `UᵀU`.
pub fn coe_sample(n: usize, stream: &mut SeededStream) -> Result<DomainPoint> {
    let u = haar_unitary(n, stream)?;
    DomainPoint::new(LandscapeDomain::symmetric(n), u.transpose() * u)
}

/// CSE member `U^R U` of size `2N`.
pub fn cse_sample(n: usize, stream: &mut SeededStream) -> Result<DomainPoint> {
    let u = haar_unitary(2 * n, stream)?;
    DomainPoint::new(LandscapeDomain::self_dual(n), symplectic_dual(&u)? * u)
}

/// Haar member of the domain's natural ensemble (COE, CSE or CUE).
pub fn ensemble_sample(domain: LandscapeDomain, stream: &mut SeededStream) -> Result<DomainPoint> {
    match domain.kind {
        DomainKind::SymmetricUnitary => coe_sample(domain.n, stream),
        DomainKind::SelfDualUnitary => cse_sample(domain.n, stream),
        DomainKind::FullUnitary => DomainPoint::new(domain, haar_unitary(domain.n, stream)?),
    }
}

/// Haar element of `SO(N)`.
pub fn haar_special_orthogonal(n: usize, stream: &mut SeededStream) -> Result<RMatrix> {
    check_size(n)?;
    let z = RMatrix::from_fn(n, n, |_, _| stream.normal());
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    Ok(q)
}

/// Haar element of `USp(2N)`: sequential Gram–Schmidt of Gaussian vectors
/// against the growing Kramers-closed span.
pub fn haar_unitary_symplectic(n: usize, stream: &mut SeededStream) -> Result<CMatrix> {
    check_size(n)?;
    let size = 2 * n;
    let mut span: Vec<CVector> = Vec::with_capacity(size);
    let mut vectors = Vec::with_capacity(n);
    while vectors.len() < n {
        let mut v = DVector::from_fn(size, |_, _| stream.complex_normal());
        for _ in 0..2 {
            for b in &span {
                let c = b.dotc(&v);
                v -= b * c;
            }
        }
        let nv = v.norm();
        if nv < 1e-8 {
            continue;
        }
        v /= Complex64::new(nv, 0.0);
        let mut tv = time_reversal(&v);
        let c = v.dotc(&tv);
        tv -= &v * c;
        tv /= Complex64::new(tv.norm(), 0.0);
        span.push(v.clone());
        span.push(tv);
        vectors.push(v);
    }
    Ok(symplectic_frame(&vectors))
}

/// Conjugating element for [`crate::landscape::CriticalPointSpec`]:
/// `SO(N)`, `USp(2N)` or `U(N)`.
pub fn random_rotation(domain: LandscapeDomain, stream: &mut SeededStream) -> Result<CMatrix> {
    match domain.kind {
        DomainKind::SymmetricUnitary => Ok(complexify(&haar_special_orthogonal(domain.n, stream)?)),
        DomainKind::SelfDualUnitary => haar_unitary_symplectic(domain.n, stream),
        DomainKind::FullUnitary => haar_unitary(domain.n, stream),
    }
}

/// Uniform point on the sphere of radius `norm` in chart coordinates.
pub fn random_tangent(chart: &TangentChart, stream: &mut SeededStream, norm: f64) -> Result<Vec<f64>> {
    if !norm.is_finite() || norm <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tangent norm must be positive, got {norm}"
        )));
    }
    loop {
        let v: Vec<f64> = (0..chart.dim()).map(|_| stream.normal()).collect();
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-12 {
            return Ok(v.into_iter().map(|x| x * norm / len).collect());
        }
    }
}
