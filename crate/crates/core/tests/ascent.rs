use unitary_landscape::landscape::{critical_value, make_critical_point};
use unitary_landscape::optimizer::{run_batch, run_trial};
use unitary_landscape::sampling::ensemble_sample;
use unitary_landscape::{
    AscentConfig, CriticalPointSpec, EscapeMode, LandscapeDomain, SeededStream, Termination,
};

const SLACK: f64 = 1e-12;

fn domains() -> Vec<LandscapeDomain> {
    vec![
        LandscapeDomain::symmetric(3),
        LandscapeDomain::symmetric(5),
        LandscapeDomain::self_dual(2),
        LandscapeDomain::full(3),
    ]
}

#[test]
fn traces_ascend_and_reach_the_global_value() {
    let cfg = AscentConfig::default();
    for domain in domains() {
        for trial in 0..10u64 {
            let mut stream = SeededStream::new(31, trial);
            let start = ensemble_sample(domain, &mut stream).unwrap();
            let trace = run_trial(&start, &cfg, &mut stream).unwrap();
            assert_eq!(trace.termination, Termination::ConvergedGlobal, "{domain} trial {trial}");
            for k in 0..trace.j_values.len() - 1 {
                if trace.escapes.iter().any(|e| e.index == k) {
                    continue;
                }
                assert!(
                    trace.j_values[k + 1] >= trace.j_values[k] - SLACK,
                    "{domain} trial {trial} step {k}"
                );
            }
            let top = critical_value(domain, domain.n);
            assert!((trace.final_j() - top).abs() < 1e-6);
            assert!(trace.final_grad_norm() <= cfg.grad_tol);
        }
    }
}

#[test]
fn saddle_starts_escape_and_record_interior_classes() {
    for mode in [EscapeMode::RandomTangent, EscapeMode::HessianGuided] {
        let cfg = AscentConfig {
            escape_mode: mode,
            ..AscentConfig::default()
        };
        for domain in domains() {
            for n in 1..domain.n {
                let point = make_critical_point(&CriticalPointSpec::canonical(domain, n).unwrap()).unwrap();
                let mut stream = SeededStream::new(5, n as u64);
                let trace = run_trial(&point, &cfg, &mut stream).unwrap();
                assert_eq!(trace.termination, Termination::ConvergedGlobal, "{domain} n={n} {mode:?}");
                assert!(!trace.escapes.is_empty());
                for e in &trace.escapes {
                    assert!(e.saddle_n > 0 && e.saddle_n < domain.n);
                }
                for v in &trace.saddle_visits {
                    assert!(*v > 0 && *v < domain.n);
                }
                assert!((trace.final_j() - critical_value(domain, domain.n)).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn minimum_start_with_no_escapes_stays_put() {
    let cfg = AscentConfig {
        max_escapes: 0,
        ..AscentConfig::default()
    };
    let domain = LandscapeDomain::symmetric(3);
    let point = make_critical_point(&CriticalPointSpec::canonical(domain, 0).unwrap()).unwrap();
    let mut stream = SeededStream::new(1, 0);
    let trace = run_trial(&point, &cfg, &mut stream).unwrap();
    assert_eq!(trace.termination, Termination::ConvergedCritical(0));
    assert!((trace.final_j() - critical_value(domain, 0)).abs() < 1e-12);
}

#[test]
fn batch_is_independent_of_thread_count() {
    let cfg = AscentConfig::default();
    let domain = LandscapeDomain::symmetric(4);
    let one = run_batch(domain, 12, &cfg, 99, 1).unwrap();
    let four = run_batch(domain, 12, &cfg, 99, 4).unwrap();
    assert_eq!(one.outcomes, four.outcomes);
    assert_eq!(one.saddle_histogram, four.saddle_histogram);
    assert!(one.all_global());
}

#[test]
fn iteration_cap_is_reported() {
    let cfg = AscentConfig {
        max_iters: 1,
        ..AscentConfig::default()
    };
    let summary = run_batch(LandscapeDomain::full(3), 4, &cfg, 3, 2).unwrap();
    assert!(summary
        .outcomes
        .iter()
        .all(|o| o.termination == Termination::MaxIters));
    assert!(!summary.all_global());
}
