use nalgebra::SymmetricEigen;

use unitary_landscape::hessian::{
    closed_form_signature, grassmannian_dim, hqf_at_critical, numerical_hessian, signature, DEFAULT_H,
    DEFAULT_ZERO_TOL,
};
use unitary_landscape::landscape::make_critical_point;
use unitary_landscape::sampling::random_rotation;
use unitary_landscape::{CriticalPointSpec, HessianSignature, LandscapeDomain, SeededStream, TangentChart};

/// Independent counting: the diagonal quadratic form has one coefficient per
/// pair `(i, j)`, `i ≤ j`, proportional to `−(ω_i + ω_j)`.
fn counting_oracle(domain: LandscapeDomain, n: usize) -> HessianSignature {
    let big = domain.n;
    let (plus, minus) = (big - n, n);
    match domain.kind {
        unitary_landscape::DomainKind::SymmetricUnitary => HessianSignature::new(
            plus * (plus + 1) / 2,
            minus * (minus + 1) / 2,
            plus * minus,
        ),
        // Quaternion-real generators: one real parameter per diagonal
        // block, four per off-diagonal block.
        unitary_landscape::DomainKind::SelfDualUnitary => HessianSignature::new(
            plus + 4 * plus * (plus.saturating_sub(1)) / 2,
            minus + 4 * minus * (minus.saturating_sub(1)) / 2,
            4 * plus * minus,
        ),
        unitary_landscape::DomainKind::FullUnitary => {
            HessianSignature::new(plus * plus, minus * minus, 2 * plus * minus)
        }
    }
}

fn sweep(domain: LandscapeDomain, rotations: usize) {
    let chart = TangentChart::for_domain(domain);
    let mut stream = SeededStream::new(77, domain.n as u64);
    for n in 0..=domain.n {
        let oracle = counting_oracle(domain, n);
        assert_eq!(closed_form_signature(domain, n).unwrap(), oracle, "{domain} n={n}");
        assert_eq!(oracle.total(), chart.dim());
        assert_eq!(oracle.d_zero, grassmannian_dim(domain, n).unwrap());
        for _ in 0..rotations {
            let spec = CriticalPointSpec {
                domain,
                n,
                rotation: random_rotation(domain, &mut stream).unwrap(),
            };
            let point = make_critical_point(&spec).unwrap();
            let local = TangentChart::for_domain(domain);
            let h = numerical_hessian(&point, &local, DEFAULT_H).unwrap();
            assert_eq!(signature(&h, DEFAULT_ZERO_TOL), oracle, "{domain} n={n}");
            let half = numerical_hessian(&point, &local, DEFAULT_H / 2.0).unwrap();
            assert_eq!(signature(&half, DEFAULT_ZERO_TOL), oracle);
        }
    }
}

#[test]
fn symmetric_signatures_match_counting() {
    for big in 1..=6 {
        sweep(LandscapeDomain::symmetric(big), 10);
    }
}

#[test]
fn self_dual_signatures_match_counting() {
    for big in 1..=3 {
        sweep(LandscapeDomain::self_dual(big), 10);
    }
}

#[test]
fn full_signatures_match_counting() {
    for big in 1..=4 {
        sweep(LandscapeDomain::full(big), 10);
    }
}

#[test]
fn hqf_spectrum_matches_finite_differences_at_identity_rotation() {
    for domain in [
        LandscapeDomain::symmetric(4),
        LandscapeDomain::self_dual(3),
        LandscapeDomain::full(3),
    ] {
        let chart = TangentChart::for_domain(domain);
        for n in 0..=domain.n {
            let spec = CriticalPointSpec::canonical(domain, n).unwrap();
            let mut expected = hqf_at_critical(&spec).unwrap().chart_values();
            let point = make_critical_point(&spec).unwrap();
            let h = numerical_hessian(&point, &chart, DEFAULT_H).unwrap();
            let mut measured: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
            expected.sort_by(f64::total_cmp);
            measured.sort_by(f64::total_cmp);
            assert_eq!(expected.len(), measured.len());
            for (e, m) in expected.iter().zip(&measured) {
                assert!((e - m).abs() < 1e-5, "{domain} n={n}: {e} vs {m}");
            }
        }
    }
}
