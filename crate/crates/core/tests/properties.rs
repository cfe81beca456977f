use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;
use proptest::prelude::*;

use unitary_landscape::domains::{contains, curve, domain_dim, renormalize};
use unitary_landscape::landscape::{
    j_canonical, j_metric, reduce_to_canonical, TargetTransformation,
};
use unitary_landscape::linalg::{
    factor_point, generator_residual, identity, max_abs, principal_sqrt, self_duality_residual,
    symplectic_dual, time_reversal, CMatrix, CVector, RotationGroup,
};
use unitary_landscape::sampling::{ensemble_sample, haar_unitary, random_tangent};
use unitary_landscape::{DomainKind, LandscapeDomain, SeededStream, TangentChart};

fn ginibre(n: usize, seed: u64) -> CMatrix {
    let mut st = SeededStream::new(seed, 1000);
    CMatrix::from_fn(n, n, |_, _| st.complex_normal())
}

fn all_domains(n: usize) -> [LandscapeDomain; 3] {
    [
        LandscapeDomain::symmetric(n),
        LandscapeDomain::self_dual(n),
        LandscapeDomain::full(n),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dual_is_an_involutive_anti_automorphism(seed in any::<u64>(), half in 1usize..4) {
        let n = 2 * half;
        let a = ginibre(n, seed);
        let b = ginibre(n, seed.wrapping_add(1));
        let ra = symplectic_dual(&a).unwrap();
        let rb = symplectic_dual(&b).unwrap();
        prop_assert!(max_abs(&(symplectic_dual(&(&a * &b)).unwrap() - &rb * &ra)) < 1e-12);
        prop_assert!(max_abs(&(symplectic_dual(&ra).unwrap() - &a)) < 1e-15);
        let z = Complex64::new(0.3, -1.1);
        let lin = symplectic_dual(&(&a * z + &b)).unwrap() - (&ra * z + &rb);
        prop_assert!(max_abs(&lin) < 1e-13);
        // Explicit −J Mᵀ J.
        let mut j = CMatrix::zeros(n, n);
        for i in 0..half {
            j[(i, half + i)] = Complex64::new(1.0, 0.0);
            j[(half + i, i)] = Complex64::new(-1.0, 0.0);
        }
        let oracle = -(&j * a.transpose() * &j);
        prop_assert!(max_abs(&(ra - oracle)) < 1e-15);
    }

    #[test]
    fn factorizations_round_trip(seed in any::<u64>(), n in 1usize..6) {
        for domain in all_domains(n) {
            let mut st = SeededStream::new(seed, 0);
            let s = ensemble_sample(domain, &mut st).unwrap();
            let f = factor_point(&s).unwrap();
            prop_assert!(max_abs(&(f.reconstruct() - s.matrix())) < 1e-10, "{domain}");
            let x = &f.rotation;
            let size = domain.matrix_size();
            match f.group {
                RotationGroup::SpecialOrthogonal => {
                    prop_assert!(x.iter().all(|z| z.im == 0.0));
                    prop_assert!(max_abs(&(x.transpose() * x - identity(size))) < 1e-12);
                    prop_assert!((x.map(|z| z.re).determinant() - 1.0).abs() < 1e-10);
                }
                RotationGroup::UnitarySymplectic => {
                    prop_assert!(max_abs(&(symplectic_dual(x).unwrap() * x - identity(size))) < 1e-12);
                }
                RotationGroup::Unitary => {
                    prop_assert!(max_abs(&(x.adjoint() * x - identity(size))) < 1e-12);
                }
            }
            prop_assert!(f.phases.iter().all(|p| *p > -std::f64::consts::PI && *p <= std::f64::consts::PI));
        }
    }

    #[test]
    fn principal_root_squares_back(seed in any::<u64>(), n in 1usize..5) {
        for domain in all_domains(n) {
            let mut st = SeededStream::new(seed, 1);
            let s = ensemble_sample(domain, &mut st).unwrap();
            let r = principal_sqrt(&s).unwrap();
            prop_assert!(contains(domain, r.matrix(), 1e-10));
            prop_assert!(max_abs(&(r.matrix() * r.matrix() - s.matrix())) < 1e-10);
        }
    }

    #[test]
    fn cse_spectrum_is_kramers_paired(seed in any::<u64>(), n in 1usize..5) {
        let domain = LandscapeDomain::self_dual(n);
        let mut st = SeededStream::new(seed, 2);
        let s = ensemble_sample(domain, &mut st).unwrap();
        let m = s.matrix();
        // Eigenvectors of the Hermitian part (eigenvalues cos φ) carry a
        // doubly degenerate spectrum; so must the anti-Hermitian part.
        for part in [
            (m + m.adjoint()) * Complex64::new(0.5, 0.0),
            (m - m.adjoint()) * Complex64::new(0.0, -0.5),
        ] {
            let mut ev: Vec<f64> = SymmetricEigen::new(part).eigenvalues.iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            for p in ev.chunks(2) {
                prop_assert!((p[0] - p[1]).abs() < 1e-10);
            }
        }
        // Θ maps eigenvectors to eigenvectors with the same eigenvalue.
        let f = factor_point(&s).unwrap();
        let v: CVector = f.rotation.adjoint().column(0).into_owned();
        let z = v.dotc(&(m * &v));
        let tv = time_reversal(&v);
        prop_assert!((tv.dotc(&(m * &tv)) - z).norm() < 1e-10);
        prop_assert!(v.dotc(&tv).norm() < 1e-12);
    }

    #[test]
    fn curves_stay_on_domain(seed in any::<u64>(), n in 1usize..5, t in -3.0f64..3.0) {
        for domain in all_domains(n) {
            let mut st = SeededStream::new(seed, 3);
            let s = ensemble_sample(domain, &mut st).unwrap();
            let chart = TangentChart::for_domain(domain);
            let a = chart.direction(&random_tangent(&chart, &mut st, 1.0).unwrap()).unwrap();
            prop_assert!(generator_residual(&a, domain.kind) < 1e-12);
            let p = curve(&s, &a, t).unwrap();
            prop_assert!(contains(domain, p.matrix(), 1e-10));
        }
    }

    #[test]
    fn reduction_preserves_landscape_value(seed in any::<u64>(), n in 1usize..5) {
        for domain in all_domains(n) {
            let mut st = SeededStream::new(seed, 4);
            let w = TargetTransformation::new(ensemble_sample(domain, &mut st).unwrap());
            let s = ensemble_sample(domain, &mut st).unwrap();
            let reduced = reduce_to_canonical(&s, &w).unwrap();
            prop_assert!(contains(domain, reduced.matrix(), 1e-10));
            prop_assert!((j_metric(&s, &w).unwrap() - j_canonical(reduced.matrix())).abs() < 1e-10);
        }
    }

    #[test]
    fn renormalize_repairs_small_drift(seed in any::<u64>(), n in 1usize..5, eps in 1e-11f64..1e-8) {
        for domain in all_domains(n) {
            let mut st = SeededStream::new(seed, 5);
            let s = ensemble_sample(domain, &mut st).unwrap();
            let noise = ginibre(domain.matrix_size(), seed) * Complex64::new(eps, 0.0);
            let p = renormalize(domain, &(s.matrix() + noise)).unwrap();
            prop_assert!(contains(domain, p.matrix(), 1e-12));
            prop_assert!(max_abs(&(p.matrix() - s.matrix())) < 100.0 * eps);
        }
    }
}

/// Real dimension of `{A : A = A†, structure(A)}` from the rank of the
/// linearized constraints, computed by brute force.
fn tangent_dim_at_identity(domain: LandscapeDomain) -> usize {
    let size = domain.matrix_size();
    let vars = 2 * size * size;
    let unpack = |x: &[f64]| CMatrix::from_fn(size, size, |r, c| {
        let k = 2 * (r * size + c);
        Complex64::new(x[k], x[k + 1])
    });
    let constraints = |a: &CMatrix| -> Vec<f64> {
        let mut out = Vec::new();
        let mut push = |m: CMatrix| {
            for z in m.iter() {
                out.push(z.re);
                out.push(z.im);
            }
        };
        push(a - a.adjoint());
        match domain.kind {
            DomainKind::SymmetricUnitary => push(a - a.transpose()),
            DomainKind::SelfDualUnitary => push(a - symplectic_dual(a).unwrap()),
            DomainKind::FullUnitary => {}
        }
        out
    };
    let mut columns = Vec::with_capacity(vars);
    for k in 0..vars {
        let mut e = vec![0.0; vars];
        e[k] = 1.0;
        columns.push(constraints(&unpack(&e)));
    }
    let rows = columns[0].len();
    let m = DMatrix::from_fn(rows, vars, |r, c| columns[c][r]);
    let rank = SVD::new(m, false, false)
        .singular_values
        .iter()
        .filter(|s| **s > 1e-9)
        .count();
    vars - rank
}

#[test]
fn domain_dimension_matches_constraint_rank() {
    for n in 1..=4 {
        for domain in all_domains(n) {
            assert_eq!(tangent_dim_at_identity(domain), domain_dim(domain), "{domain}");
            assert_eq!(TangentChart::for_domain(domain).dim(), domain_dim(domain));
        }
    }
}

#[test]
fn haar_invariance_first_two_moments() {
    let mut st = SeededStream::new(404, 0);
    let v = haar_unitary(4, &mut st).unwrap();
    let samples = 2000;
    let mut plain = Vec::with_capacity(samples);
    let mut rotated = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u = haar_unitary(4, &mut st).unwrap();
        plain.push(u.trace());
        let w = haar_unitary(4, &mut st).unwrap();
        rotated.push((&v * w).trace());
    }
    let stats = |xs: &[Complex64]| {
        let mean: Complex64 = xs.iter().sum::<Complex64>() / xs.len() as f64;
        let second = xs.iter().map(|z| z.norm_sqr()).sum::<f64>() / xs.len() as f64;
        let fourth = xs.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() / xs.len() as f64;
        (mean, second, fourth)
    };
    let (m1, s1, f1) = stats(&plain);
    let (m2, s2, f2) = stats(&rotated);
    let n = samples as f64;
    // E Tr U = 0 with E|Tr U|² = 1: mean has standard error 1/√n.
    assert!((m1 - m2).norm() < 3.0 * (2.0 / n).sqrt());
    let se = ((f1 - s1 * s1).max(0.0) / n + (f2 - s2 * s2).max(0.0) / n).sqrt();
    assert!((s1 - s2).abs() < 3.0 * se, "second moments {s1} vs {s2} (se {se})");
}

#[test]
fn ensemble_membership_many_samples() {
    for n in 1..=6 {
        for domain in all_domains(n) {
            let mut st = SeededStream::new(9000 + n as u64, domain.kind as u64);
            for _ in 0..1000 / 6 + 1 {
                let s = ensemble_sample(domain, &mut st).unwrap();
                assert!(contains(domain, s.matrix(), 1e-10));
                if domain.kind == DomainKind::SelfDualUnitary {
                    assert!(self_duality_residual(s.matrix()) < 1e-12);
                }
            }
        }
    }
}
