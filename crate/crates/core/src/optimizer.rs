//! Gradient ascent of `𝒥` along the domain curves, with Armijo backtracking
//! and random (or Hessian-guided) escapes from saddles, plus seeded batches.

use std::time::Instant;

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{
    curve, curve_from_root, membership_residual, renormalize, standard_tangent_chart, DomainPoint,
    LandscapeDomain, TangentChart, RENORMALIZE_TOL,
};
use crate::error::{Error, Result};
use crate::hessian::{numerical_hessian, DEFAULT_H};
use crate::landscape::{
    classify_critical_point, directional_gradient, j_canonical, norm, CriticalClass,
};
use crate::linalg::{exp_i_generator_minus_identity, principal_sqrt, trace_of_product};
use crate::sampling::{ensemble_sample, random_tangent, SeededStream};

/// Maximum number of step halvings before a step is declared failed.
pub const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EscapeMode {
    #[default]
    RandomTangent,
    /// Step along the top eigenvector of the finite-difference Hessian.
    HessianGuided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AscentConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub initial_step: f64,
    pub backtrack_factor: f64,
    pub armijo_c: f64,
    /// Consecutive iterations with gradient inside `saddle_grad_band` after
    /// which the iterate is checked for a stalled saddle.
    pub saddle_window: usize,
    pub saddle_grad_band: f64,
    pub escape_norm: f64,
    pub max_escapes: usize,
    pub escape_mode: EscapeMode,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            grad_tol: 1e-8,
            initial_step: 0.5,
            backtrack_factor: 0.5,
            armijo_c: 1e-4,
            saddle_window: 50,
            saddle_grad_band: 1e-6,
            escape_norm: 1e-2,
            max_escapes: 20,
            escape_mode: EscapeMode::RandomTangent,
        }
    }
}

impl AscentConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("grad_tol", self.grad_tol),
            ("initial_step", self.initial_step),
            ("backtrack_factor", self.backtrack_factor),
            ("armijo_c", self.armijo_c),
            ("saddle_grad_band", self.saddle_grad_band),
            ("escape_norm", self.escape_norm),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.backtrack_factor >= 1.0 {
            return Err(Error::InvalidArgument("backtrack_factor must be below 1".into()));
        }
        if self.armijo_c >= 1.0 {
            return Err(Error::InvalidArgument("armijo_c must be below 1".into()));
        }
        if self.max_iters == 0 || self.saddle_window == 0 {
            return Err(Error::InvalidArgument(
                "max_iters and saddle_window must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    /// Accepted curve parameter (0 when converged).
    pub step: f64,
    /// `𝒥(new) − 𝒥(old)` evaluated without cancellation.
    pub gain: f64,
    pub grad_norm: f64,
    pub backtracks: usize,
    pub converged: bool,
}

/// One Armijo-backtracked step along the gradient direction.
pub fn ascent_step(point: &DomainPoint, config: &AscentConfig) -> Result<(DomainPoint, StepStats)> {
    let chart = standard_tangent_chart(point)?;
    let g = directional_gradient(&chart, point.matrix());
    ascent_step_with(point, &chart, &g, config)
}

fn ascent_step_with(
    point: &DomainPoint,
    chart: &TangentChart,
    g: &[f64],
    config: &AscentConfig,
) -> Result<(DomainPoint, StepStats)> {
    let grad_norm = norm(g);
    if grad_norm < config.grad_tol {
        return Ok((
            point.clone(),
            StepStats {
                step: 0.0,
                gain: 0.0,
                grad_norm,
                backtracks: 0,
                converged: true,
            },
        ));
    }
    let kind = point.domain().kind;
    let a = chart.direction(g)?;
    let slope = grad_norm * grad_norm;
    let mut t = config.initial_step;
    for backtracks in 0..=MAX_BACKTRACKS {
        // Re Tr(√S (e^{iAt} − I) √S) = Re Tr(S (e^{iAt} − I))
        let gain = trace_of_product(point.matrix(), &exp_i_generator_minus_identity(&a, t, kind)?).re;
        if gain >= config.armijo_c * t * slope {
            let root = principal_sqrt(point)?;
            let next = curve_from_root(&root, &a, t)?;
            let next = if membership_residual(next.domain(), next.matrix()) > RENORMALIZE_TOL {
                renormalize(next.domain(), next.matrix())?
            } else {
                next
            };
            return Ok((
                next,
                StepStats {
                    step: t,
                    gain,
                    grad_norm,
                    backtracks,
                    converged: false,
                },
            ));
        }
        t *= config.backtrack_factor;
    }
    Err(Error::numerical(
        format!("Armijo condition not met after {MAX_BACKTRACKS} halvings"),
        grad_norm,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "n")]
pub enum Termination {
    ConvergedGlobal,
    /// Stopped at a non-global critical orbit with escapes exhausted.
    ConvergedCritical(usize),
    MaxIters,
    NumericalFailure,
}

impl Termination {
    pub fn label(&self) -> String {
        match self {
            Termination::ConvergedGlobal => "converged_global".into(),
            Termination::ConvergedCritical(n) => format!("converged_critical({n})"),
            Termination::MaxIters => "max_iters".into(),
            Termination::NumericalFailure => "numerical_failure".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapeEvent {
    /// Index into `j_values` of the point the escape started from.
    pub index: usize,
    pub iteration: usize,
    pub norm: f64,
    /// Critical class `n` of the saddle being left.
    pub saddle_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTrace {
    /// `𝒥` at every visited point, starting point first. The transition
    /// `k → k+1` is an escape iff some event has `index == k`.
    pub j_values: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub escapes: Vec<EscapeEvent>,
    pub saddle_visits: Vec<usize>,
    pub termination: Termination,
    pub iterations: usize,
    pub failure: Option<String>,
    #[serde(skip)]
    pub final_point: Option<DomainPoint>,
}

impl TrialTrace {
    pub fn final_j(&self) -> f64 {
        *self.j_values.last().unwrap_or(&f64::NAN)
    }

    pub fn final_grad_norm(&self) -> f64 {
        *self.grad_norms.last().unwrap_or(&f64::NAN)
    }

    /// Largest decrease of `𝒥` over a non-escape transition (0 if none).
    pub fn max_ascent_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.j_values.len().saturating_sub(1) {
            if self.escapes.iter().any(|e| e.index == k) {
                continue;
            }
            worst = worst.max(self.j_values[k] - self.j_values[k + 1]);
        }
        worst
    }
}

fn escape_direction(
    point: &DomainPoint,
    chart: &TangentChart,
    config: &AscentConfig,
    stream: &mut SeededStream,
) -> Result<Vec<f64>> {
    if config.escape_mode == EscapeMode::HessianGuided {
        let h = numerical_hessian(point, chart, DEFAULT_H)?;
        let eig = SymmetricEigen::new(h);
        let (k, lmax) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, &l)| if l > best.1 { (k, l) } else { best });
        if lmax > 0.0 {
            let sign = if stream.uniform() < 0.5 { -1.0 } else { 1.0 };
            let v = eig.eigenvectors.column(k);
            let len = v.norm();
            return Ok(v.iter().map(|x| sign * x * config.escape_norm / len).collect());
        }
    }
    random_tangent(chart, stream, config.escape_norm)
}

struct TraceBuilder {
    trace: TrialTrace,
}

impl TraceBuilder {
    fn push(&mut self, point: &DomainPoint, grad_norm: f64) {
        self.trace.j_values.push(j_canonical(point.matrix()));
        self.trace.grad_norms.push(grad_norm);
    }

    fn finish(mut self, termination: Termination, point: DomainPoint, failure: Option<String>) -> TrialTrace {
        self.trace.termination = termination;
        self.trace.final_point = Some(point);
        self.trace.failure = failure;
        self.trace
    }
}

/// Runs gradient ascent from `start` until the global maximum, a saddle with
/// escapes exhausted, the iteration cap or a numerical failure.
pub fn run_trial(start: &DomainPoint, config: &AscentConfig, stream: &mut SeededStream) -> Result<TrialTrace> {
    config.validate()?;
    let domain = start.domain();
    let chart = standard_tangent_chart(start)?;
    let mut b = TraceBuilder {
        trace: TrialTrace {
            j_values: Vec::new(),
            grad_norms: Vec::new(),
            escapes: Vec::new(),
            saddle_visits: Vec::new(),
            termination: Termination::MaxIters,
            iterations: 0,
            failure: None,
            final_point: None,
        },
    };
    let mut point = start.clone();
    let mut g = directional_gradient(&chart, point.matrix());
    b.push(&point, norm(&g));
    let mut stalled = 0usize;

    loop {
        let gn = norm(&g);
        let saddle = if gn < config.grad_tol {
            match classify_critical_point(&point, config.grad_tol) {
                Ok(CriticalClass::Critical(n)) if n == domain.n => {
                    return Ok(b.finish(Termination::ConvergedGlobal, point, None));
                }
                Ok(CriticalClass::Critical(n)) => Some(n),
                Ok(CriticalClass::NotCritical) => unreachable!("gradient below tolerance"),
                Err(e) => return Ok(b.finish(Termination::NumericalFailure, point, Some(e.to_string()))),
            }
        } else if gn < config.saddle_grad_band {
            stalled += 1;
            if stalled >= config.saddle_window {
                stalled = 0;
                match classify_critical_point(&point, config.saddle_grad_band) {
                    Ok(CriticalClass::Critical(n)) if n < domain.n => Some(n),
                    _ => None,
                }
            } else {
                None
            }
        } else {
            stalled = 0;
            None
        };

        if let Some(n) = saddle {
            b.trace.saddle_visits.push(n);
            if b.trace.escapes.len() >= config.max_escapes {
                return Ok(b.finish(Termination::ConvergedCritical(n), point, None));
            }
            let v = match escape_direction(&point, &chart, config, stream) {
                Ok(v) => v,
                Err(e) => return Ok(b.finish(Termination::NumericalFailure, point, Some(e.to_string()))),
            };
            let moved = chart.direction(&v).and_then(|a| curve(&point, &a, 1.0));
            match moved {
                Ok(p) => point = p,
                Err(e) => return Ok(b.finish(Termination::NumericalFailure, point, Some(e.to_string()))),
            }
            b.trace.escapes.push(EscapeEvent {
                index: b.trace.j_values.len() - 1,
                iteration: b.trace.iterations,
                norm: norm(&v),
                saddle_n: n,
            });
            g = directional_gradient(&chart, point.matrix());
            b.push(&point, norm(&g));
            stalled = 0;
            continue;
        }

        if b.trace.iterations >= config.max_iters {
            return Ok(b.finish(Termination::MaxIters, point, None));
        }
        match ascent_step_with(&point, &chart, &g, config) {
            Ok((next, stats)) => {
                debug_assert!(!stats.converged);
                point = next;
            }
            Err(e) => return Ok(b.finish(Termination::NumericalFailure, point, Some(e.to_string()))),
        }
        b.trace.iterations += 1;
        g = directional_gradient(&chart, point.matrix());
        b.push(&point, norm(&g));
    }
}

/// Per-trial record of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub index: usize,
    pub stream_id: u64,
    pub termination: Termination,
    pub iterations: usize,
    pub escapes: usize,
    pub saddle_visits: Vec<usize>,
    pub start_j: f64,
    pub final_j: f64,
    pub final_grad_norm: f64,
    pub max_ascent_violation: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub domain: LandscapeDomain,
    pub seed: u64,
    pub config: AscentConfig,
    pub outcomes: Vec<TrialOutcome>,
    /// Saddle visits counted by critical class `n = 0..=N`.
    pub saddle_histogram: Vec<usize>,
    pub converged_global: usize,
    pub zero_escape_trials: usize,
    pub wall_time_secs: f64,
}

impl BatchSummary {
    pub fn trials(&self) -> usize {
        self.outcomes.len()
    }

    pub fn all_global(&self) -> bool {
        self.converged_global == self.outcomes.len()
    }
}

fn run_one(domain: LandscapeDomain, index: usize, config: &AscentConfig, seed: u64) -> TrialOutcome {
    let stream_id = index as u64;
    let mut stream = SeededStream::new(seed, stream_id);
    let failed = |msg: String| TrialOutcome {
        index,
        stream_id,
        termination: Termination::NumericalFailure,
        iterations: 0,
        escapes: 0,
        saddle_visits: Vec::new(),
        start_j: f64::NAN,
        final_j: f64::NAN,
        final_grad_norm: f64::NAN,
        max_ascent_violation: 0.0,
        failure: Some(msg),
    };
    let start = match ensemble_sample(domain, &mut stream) {
        Ok(s) => s,
        Err(e) => return failed(e.to_string()),
    };
    match run_trial(&start, config, &mut stream) {
        Ok(trace) => TrialOutcome {
            index,
            stream_id,
            termination: trace.termination,
            iterations: trace.iterations,
            escapes: trace.escapes.len(),
            saddle_visits: trace.saddle_visits.clone(),
            start_j: trace.j_values[0],
            final_j: trace.final_j(),
            final_grad_norm: trace.final_grad_norm(),
            max_ascent_violation: trace.max_ascent_violation(),
            failure: trace.failure,
        },
        Err(e) => failed(e.to_string()),
    }
}

/// Runs `trials` ascents from ensemble starts; trial `k` uses stream `k` of
/// `seed`, so results do not depend on `jobs`.
pub fn run_batch(
    domain: LandscapeDomain,
    trials: usize,
    config: &AscentConfig,
    seed: u64,
    jobs: usize,
) -> Result<BatchSummary> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if jobs == 0 {
        return Err(Error::InvalidArgument("jobs must be at least 1".into()));
    }
    config.validate()?;
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<TrialOutcome> = pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|k| run_one(domain, k, config, seed))
            .collect()
    });
    let mut saddle_histogram = vec![0; domain.n + 1];
    for o in &outcomes {
        for &n in &o.saddle_visits {
            saddle_histogram[n] += 1;
        }
    }
    let converged_global = outcomes
        .iter()
        .filter(|o| o.termination == Termination::ConvergedGlobal)
        .count();
    let zero_escape_trials = outcomes.iter().filter(|o| o.escapes == 0).count();
    Ok(BatchSummary {
        domain,
        seed,
        config: config.clone(),
        outcomes,
        saddle_histogram,
        converged_global,
        zero_escape_trials,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{critical_value, make_critical_point, CriticalPointSpec};
    use crate::linalg::{identity, CMatrix};
    use crate::sampling::{coe_sample, random_rotation};
    use num_complex::Complex64;

    #[test]
    fn default_config_is_valid() {
        AscentConfig::default().validate().unwrap();
        let bad = AscentConfig {
            backtrack_factor: 1.0,
            ..AscentConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = AscentConfig {
            escape_norm: -1.0,
            ..AscentConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn step_at_critical_point_is_zero() {
        let d = LandscapeDomain::symmetric(3);
        let p = make_critical_point(&CriticalPointSpec::canonical(d, 1).unwrap()).unwrap();
        let (q, stats) = ascent_step(&p, &AscentConfig::default()).unwrap();
        assert!(stats.converged);
        assert_eq!(stats.step, 0.0);
        assert_eq!(q, p);
    }

    #[test]
    fn random_steps_never_decrease() {
        let mut st = SeededStream::new(77, 0);
        let cfg = AscentConfig::default();
        for k in 0..1000 {
            let d = [
                LandscapeDomain::symmetric(3),
                LandscapeDomain::self_dual(2),
                LandscapeDomain::full(3),
            ][k % 3];
            let p = ensemble_sample(d, &mut st).unwrap();
            let (q, stats) = ascent_step(&p, &cfg).unwrap();
            assert!(stats.gain >= 0.0);
            assert!(j_canonical(q.matrix()) - j_canonical(p.matrix()) > -1e-12);
            assert!((j_canonical(q.matrix()) - j_canonical(p.matrix()) - stats.gain).abs() < 1e-10);
        }
    }

    #[test]
    fn escape_from_minus_identity_then_ascends() {
        let d = LandscapeDomain::symmetric(3);
        let m: CMatrix = identity(3) * Complex64::new(-1.0, 0.0);
        let p = DomainPoint::new(d, m).unwrap();
        let chart = TangentChart::for_domain(d);
        let mut st = SeededStream::new(3, 0);
        let v = random_tangent(&chart, &mut st, 1e-2).unwrap();
        let escaped = curve(&p, &chart.direction(&v).unwrap(), 1.0).unwrap();
        let (next, stats) = ascent_step(&escaped, &AscentConfig::default()).unwrap();
        assert!(!stats.converged);
        assert!(j_canonical(next.matrix()) > j_canonical(escaped.matrix()));
    }

    #[test]
    fn global_start_terminates_immediately() {
        let d = LandscapeDomain::symmetric(4);
        let p = make_critical_point(&CriticalPointSpec::canonical(d, 4).unwrap()).unwrap();
        let trace = run_trial(&p, &AscentConfig::default(), &mut SeededStream::new(0, 0)).unwrap();
        assert_eq!(trace.termination, Termination::ConvergedGlobal);
        assert_eq!(trace.iterations, 0);
    }

    #[test]
    fn coe_start_reaches_global() {
        let mut st = SeededStream::new(11, 0);
        let start = coe_sample(4, &mut st).unwrap();
        let trace = run_trial(&start, &AscentConfig::default(), &mut st).unwrap();
        assert_eq!(trace.termination, Termination::ConvergedGlobal);
        assert!(trace.final_j() >= 4.0 - 1e-6);
        assert!(trace.max_ascent_violation() < 1e-12);
    }

    #[test]
    fn saddle_start_escapes_to_global() {
        let d = LandscapeDomain::symmetric(4);
        let mut st = SeededStream::new(12, 0);
        let spec = CriticalPointSpec {
            domain: d,
            n: 2,
            rotation: random_rotation(d, &mut st).unwrap(),
        };
        let start = make_critical_point(&spec).unwrap();
        let trace = run_trial(&start, &AscentConfig::default(), &mut st).unwrap();
        assert_eq!(trace.saddle_visits.first(), Some(&2));
        assert!(!trace.escapes.is_empty());
        assert_eq!(trace.termination, Termination::ConvergedGlobal);
        assert!((trace.final_j() - critical_value(d, 4)).abs() < 1e-6);
    }

    #[test]
    fn hessian_guided_escape_also_works() {
        let d = LandscapeDomain::self_dual(2);
        let start = make_critical_point(&CriticalPointSpec::canonical(d, 1).unwrap()).unwrap();
        let cfg = AscentConfig {
            escape_mode: EscapeMode::HessianGuided,
            ..AscentConfig::default()
        };
        let trace = run_trial(&start, &cfg, &mut SeededStream::new(13, 0)).unwrap();
        assert_eq!(trace.termination, Termination::ConvergedGlobal);
    }

    #[test]
    fn exhausted_escapes_report_the_saddle() {
        let d = LandscapeDomain::symmetric(3);
        let start = make_critical_point(&CriticalPointSpec::canonical(d, 1).unwrap()).unwrap();
        let cfg = AscentConfig {
            max_escapes: 0,
            ..AscentConfig::default()
        };
        let trace = run_trial(&start, &cfg, &mut SeededStream::new(14, 0)).unwrap();
        assert_eq!(trace.termination, Termination::ConvergedCritical(1));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let mut st = SeededStream::new(15, 0);
        let start = coe_sample(4, &mut st).unwrap();
        let cfg = AscentConfig {
            max_iters: 1,
            ..AscentConfig::default()
        };
        let trace = run_trial(&start, &cfg, &mut st).unwrap();
        assert_eq!(trace.termination, Termination::MaxIters);
        assert_eq!(trace.iterations, 1);
    }

    #[test]
    fn batch_is_deterministic_across_worker_counts() {
        let d = LandscapeDomain::symmetric(3);
        let cfg = AscentConfig::default();
        let a = run_batch(d, 8, &cfg, 99, 1).unwrap();
        let b = run_batch(d, 8, &cfg, 99, 4).unwrap();
        assert_eq!(a.outcomes, b.outcomes);
        assert_eq!(a.saddle_histogram, b.saddle_histogram);
        assert!(a.all_global());
        assert!(run_batch(d, 0, &cfg, 99, 1).is_err());
    }
}
