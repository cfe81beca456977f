//! The verification suites behind each CLI subcommand. Every command returns
//! a [`ReportDocument`] whose manifest records per-suite pass/fail.

use std::time::Instant;

use serde_json::{json, Value};

use crate::domains::{standard_tangent_chart, DomainKind, LandscapeDomain, TangentChart};
use crate::error::{Error, Result};
use crate::hessian::{
    closed_form_signature, grassmannian_dim, numerical_hessian, numerical_hessian_metric,
    published_symplectic_dim, published_symplectic_signature, signature, HessianSignature,
    SignatureClaim, H_RANGE,
};
use crate::landscape::{
    classify_critical_point, critical_value, gradient_canonical, gradient_metric, j_canonical,
    j_metric, make_critical_point, norm, reduce_to_canonical, transport_from_canonical,
    CriticalClass, CriticalPointSpec, TargetTransformation,
};
use crate::linalg::{exp_i_generator_minus_identity, principal_sqrt};
use crate::optimizer::{run_batch, AscentConfig};
use crate::report::{DiscrepancyNotice, ReportDocument, RunManifest, Table};
use crate::sampling::{ensemble_sample, random_rotation, random_tangent, SeededStream};

/// Pass threshold for the gradient check.
pub const GRADCHECK_TOL: f64 = 1e-6;
/// Central-difference step of the gradient check.
pub const GRADCHECK_STEP: f64 = 1e-5;
/// Gradient norm below which a constructed critical point passes.
pub const CRITICAL_GRAD_TOL: f64 = 1e-10;
/// Gradient norm below which a transported critical point passes.
pub const TRANSPORT_GRAD_TOL: f64 = 1e-8;
/// Allowed gap between `J(S, W)` and `𝒥` of the reduced point.
pub const REDUCTION_TOL: f64 = 1e-10;
/// Final `𝒥` must be within this of the matrix size for a global trial.
pub const GLOBAL_VALUE_TOL: f64 = 1e-6;
pub const DEFAULT_ROTATIONS: usize = 5;

fn check_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
    }
    Ok(())
}

fn check_hessian_params(h: f64, zero_tol: f64) -> Result<()> {
    if !(H_RANGE.0..=H_RANGE.1).contains(&h) || !(H_RANGE.0..=H_RANGE.1).contains(&(h / 2.0)) {
        return Err(Error::InvalidArgument(format!(
            "h = {h:e} must satisfy {:e} <= h/2 and h <= {:e}",
            H_RANGE.0, H_RANGE.1
        )));
    }
    if !(zero_tol > 0.0 && zero_tol < 1.0) {
        return Err(Error::InvalidArgument(format!("zero_tol must lie in (0, 1), got {zero_tol}")));
    }
    Ok(())
}

fn sig_json(s: &HessianSignature) -> Value {
    json!(s.to_string())
}

/// Analytic directional derivative of `𝒥` against a central difference along
/// random unit chart directions at ensemble points.
pub fn cmd_gradcheck(domain: LandscapeDomain, samples: usize, seed: u64) -> Result<ReportDocument> {
    check_positive("samples", samples)?;
    let started = Instant::now();
    let mut doc = ReportDocument::new(RunManifest::new(
        "gradcheck",
        Some(seed),
        Some(domain.kind),
        Some(domain.n),
        json!({ "samples": samples, "step": GRADCHECK_STEP, "tolerance": GRADCHECK_TOL }),
    ));
    let mut table = Table::new(&["sample", "j", "analytic", "finite_difference", "relative_deviation"]);
    let mut worst: f64 = 0.0;
    let h = GRADCHECK_STEP;
    for k in 0..samples {
        let mut stream = SeededStream::new(seed, k as u64);
        let p = ensemble_sample(domain, &mut stream)?;
        let chart = standard_tangent_chart(&p)?;
        let v = random_tangent(&chart, &mut stream, 1.0)?;
        let g = gradient_canonical(&p)?;
        let analytic: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
        let a = chart.direction(&v)?;
        // 𝒥 increments taken as Re Tr(√S (e^{iAt} − I) √S) to avoid cancellation.
        let root = principal_sqrt(&p)?;
        let inc = |t: f64| -> Result<f64> {
            let e = exp_i_generator_minus_identity(&a, t, domain.kind)?;
            Ok(j_canonical(&(root.matrix() * e * root.matrix())))
        };
        let fd = (inc(h)? - inc(-h)?) / (2.0 * h);
        let dev = (analytic - fd).abs() / analytic.abs().max(f64::MIN_POSITIVE);
        worst = worst.max(dev);
        table.push(vec![
            json!(k),
            json!(j_canonical(p.matrix())),
            json!(analytic),
            json!(fd),
            json!(dev),
        ]);
    }
    doc.tables.insert("gradient_check".into(), table);
    doc.add_suite(
        "gradient",
        worst < GRADCHECK_TOL,
        format!("max relative deviation {worst:.3e} over {samples} samples (tolerance {GRADCHECK_TOL:e})"),
    );
    doc.timing.wall_time_secs = started.elapsed().as_secs_f64();
    Ok(doc)
}

/// Builds `rotations` random realizations of every critical orbit and
/// checks value, gradient and classification.
pub fn cmd_critvals(domain: LandscapeDomain, rotations: usize, seed: u64) -> Result<ReportDocument> {
    check_positive("rotations", rotations)?;
    let started = Instant::now();
    let mut doc = ReportDocument::new(RunManifest::new(
        "critvals",
        Some(seed),
        Some(domain.kind),
        Some(domain.n),
        json!({ "rotations": rotations, "grad_tol": CRITICAL_GRAD_TOL }),
    ));
    let mut table = Table::new(&[
        "n",
        "critical_value",
        "max_value_error",
        "max_grad_norm",
        "classified",
        "pass",
    ]);
    let mut all_pass = true;
    for n in 0..=domain.n {
        let value = critical_value(domain, n);
        let mut max_err: f64 = 0.0;
        let mut max_grad: f64 = 0.0;
        let mut classified = true;
        for r in 0..rotations {
            let mut stream = SeededStream::new(seed, (n * rotations + r) as u64);
            let spec = CriticalPointSpec {
                domain,
                n,
                rotation: random_rotation(domain, &mut stream)?,
            };
            let p = make_critical_point(&spec)?;
            max_err = max_err.max((j_canonical(p.matrix()) - value).abs());
            max_grad = max_grad.max(norm(&gradient_canonical(&p)?));
            classified &= classify_critical_point(&p, CRITICAL_GRAD_TOL).ok() == Some(CriticalClass::Critical(n));
        }
        let pass = max_grad < CRITICAL_GRAD_TOL && max_err < CRITICAL_GRAD_TOL && classified;
        all_pass &= pass;
        table.push(vec![
            json!(n),
            json!(value),
            json!(max_err),
            json!(max_grad),
            json!(classified),
            json!(pass),
        ]);
    }
    let rows = table.rows.len();
    doc.tables.insert("critical_values".into(), table);
    doc.add_suite(
        "critical_values",
        all_pass,
        format!("{rows} critical values, {rotations} realizations each, gradient tolerance {CRITICAL_GRAD_TOL:e}"),
    );
    doc.timing.wall_time_secs = started.elapsed().as_secs_f64();
    Ok(doc)
}

/// Finite-difference signature at one critical point, at `h` and `h/2`.
fn measure_signature(
    spec: &CriticalPointSpec,
    chart: &TangentChart,
    h: f64,
    zero_tol: f64,
) -> Result<(HessianSignature, HessianSignature)> {
    let p = make_critical_point(spec)?;
    let a = signature(&numerical_hessian(&p, chart, h)?, zero_tol);
    let b = signature(&numerical_hessian(&p, chart, h / 2.0)?, zero_tol);
    Ok((a, b))
}

/// Measured Hessian signatures of every critical orbit against the closed
/// forms; on the self-dual domain also against the published triples.
pub fn cmd_signatures(
    domain: LandscapeDomain,
    rotations: usize,
    seed: u64,
    h: f64,
    zero_tol: f64,
) -> Result<ReportDocument> {
    check_positive("rotations", rotations)?;
    check_hessian_params(h, zero_tol)?;
    let started = Instant::now();
    let mut doc = ReportDocument::new(RunManifest::new(
        "signatures",
        Some(seed),
        Some(domain.kind),
        Some(domain.n),
        json!({ "rotations": rotations, "h": h, "zero_tol": zero_tol }),
    ));
    let self_dual = domain.kind == DomainKind::SelfDualUnitary;
    let chart = TangentChart::for_domain(domain);
    let mut table = Table::new(&[
        "n",
        "published",
        "corrected",
        "measured",
        "grassmannian_dim",
        "published_sum",
        "domain_dim",
        "agrees_published",
        "agrees_corrected",
        "stable_under_half_h",
        "saddle",
    ]);
    let mut samples = Table::new(&["n", "rotation", "measured", "measured_half_h"]);
    let mut certified = true;
    let mut stable = true;
    let mut kernel = true;
    let mut saddles = true;
    let dim = domain.dim();
    for n in 0..=domain.n {
        let closed = closed_form_signature(domain, n)?;
        let published: SignatureClaim = if self_dual {
            published_symplectic_signature(domain.n, n)?
        } else {
            closed.into()
        };
        let mut measured: Option<HessianSignature> = None;
        let mut consistent = true;
        let mut row_stable = true;
        for r in 0..rotations {
            let mut stream = SeededStream::new(seed, (n * rotations + r) as u64);
            let spec = CriticalPointSpec {
                domain,
                n,
                rotation: random_rotation(domain, &mut stream)?,
            };
            let (a, b) = measure_signature(&spec, &chart, h, zero_tol)?;
            samples.push(vec![json!(n), json!(r), sig_json(&a), sig_json(&b)]);
            row_stable &= a == b;
            match measured {
                None => measured = Some(a),
                Some(m) if m != a => consistent = false,
                _ => {}
            }
        }
        let measured = measured.expect("at least one rotation");
        let agrees_corrected = consistent && measured == closed;
        let agrees_published = consistent && published.matches(&measured);
        let saddle = measured.is_saddle();
        certified &= agrees_corrected;
        stable &= row_stable;
        kernel &= consistent && measured.d_zero == grassmannian_dim(domain, n)?;
        if n > 0 && n < domain.n {
            saddles &= consistent && saddle;
        }
        table.push(vec![
            json!(n),
            json!(published.to_string()),
            if self_dual { sig_json(&closed) } else { Value::Null },
            if consistent { sig_json(&measured) } else { json!("inconsistent") },
            json!(grassmannian_dim(domain, n)?),
            json!(published.total()),
            json!(dim),
            json!(agrees_published),
            json!(agrees_corrected),
            json!(row_stable),
            json!(saddle),
        ]);
        if self_dual && !agrees_published {
            doc.discrepancies.push(DiscrepancyNotice {
                published_claim: format!(
                    "(D+, D-, D0) = (2(N-n)^2+2(N-n), 2n^2+2n, 4N(N-n)) = {published} at N={}, n={n}",
                    domain.n
                ),
                published_location: "self-dual Hessian signature formulas".into(),
                measured: format!("{measured}"),
                verdict: format!(
                    "published triple sums to {} but the domain dimension is {dim}; measurement {} the corrected triple {closed}",
                    published.total(),
                    if agrees_corrected { "matches" } else { "does not match" }
                ),
            });
        }
    }
    if self_dual {
        let published_dim = published_symplectic_dim(domain.n);
        if published_dim != dim {
            doc.discrepancies.push(DiscrepancyNotice {
                published_claim: format!("dim U(2N)/Sp(2N) = 2N(N-1) = {published_dim} at N={}", domain.n),
                published_location: "self-dual domain dimension".into(),
                measured: format!("{}", chart.dim()),
                verdict: format!(
                    "orthonormal tangent chart has N(2N-1) = {dim} directions; measured signatures sum to {dim}"
                ),
            });
        }
    }
    doc.tables.insert("signatures".into(), table);
    doc.tables.insert("signature_samples".into(), samples);
    let certifies = if self_dual { "corrected" } else { "closed-form" };
    doc.add_suite(
        "signatures",
        certified,
        format!("measured signatures vs {certifies} triples, {rotations} rotations per n, h={h:e}, zero_tol={zero_tol:e}"),
    );
    doc.add_suite("step_stability", stable, "signatures unchanged when h is halved");
    doc.add_suite("kernel_dimension", kernel, "measured d_zero equals the critical-orbit dimension");
    doc.add_suite("saddle_certificate", saddles, "d_plus > 0 and d_minus > 0 for every 0 < n < N");
    doc.timing.wall_time_secs = started.elapsed().as_secs_f64();
    Ok(doc)
}

/// Seeded batch of gradient ascents from ensemble starts.
pub fn cmd_trials(
    domain: LandscapeDomain,
    trials: usize,
    seed: u64,
    config: &AscentConfig,
    jobs: usize,
) -> Result<ReportDocument> {
    check_positive("trials", trials)?;
    check_positive("jobs", jobs)?;
    let mut doc = ReportDocument::new(RunManifest::new(
        "trials",
        Some(seed),
        Some(domain.kind),
        Some(domain.n),
        json!({ "trials": trials, "ascent": config }),
    ));
    let summary = run_batch(domain, trials, config, seed, jobs)?;
    let target = domain.matrix_size() as f64;
    let mut table = Table::new(&[
        "trial",
        "stream_id",
        "termination",
        "iterations",
        "escapes",
        "saddle_visits",
        "start_j",
        "final_j",
        "final_grad_norm",
        "max_ascent_violation",
        "failure",
    ]);
    let mut reached = true;
    for o in &summary.outcomes {
        reached &= o.final_j >= target - GLOBAL_VALUE_TOL;
        let visits: Vec<String> = o.saddle_visits.iter().map(|n| n.to_string()).collect();
        table.push(vec![
            json!(o.index),
            json!(o.stream_id),
            json!(o.termination.label()),
            json!(o.iterations),
            json!(o.escapes),
            json!(visits.join(" ")),
            json!(o.start_j),
            json!(o.final_j),
            json!(o.final_grad_norm),
            json!(o.max_ascent_violation),
            json!(o.failure.clone().unwrap_or_default()),
        ]);
    }
    let mut hist = Table::new(&["n", "critical_value", "saddle_visits"]);
    for (n, count) in summary.saddle_histogram.iter().enumerate() {
        hist.push(vec![json!(n), json!(critical_value(domain, n)), json!(count)]);
    }
    let iters: Vec<usize> = summary.outcomes.iter().map(|o| o.iterations).collect();
    let mut totals = Table::new(&[
        "trials",
        "converged_global",
        "zero_escape_trials",
        "mean_iterations",
        "max_iterations",
    ]);
    totals.push(vec![
        json!(trials),
        json!(summary.converged_global),
        json!(summary.zero_escape_trials),
        json!(iters.iter().sum::<usize>() as f64 / trials as f64),
        json!(iters.iter().copied().max().unwrap_or(0)),
    ]);
    doc.tables.insert("trials".into(), table);
    doc.tables.insert("saddle_histogram".into(), hist);
    doc.tables.insert("trial_summary".into(), totals);
    doc.add_suite(
        "trap_free",
        summary.all_global() && reached,
        format!(
            "{}/{trials} trials converged to the global maximum (final J >= {target} - {GLOBAL_VALUE_TOL:e})",
            summary.converged_global
        ),
    );
    doc.timing.wall_time_secs = summary.wall_time_secs;
    Ok(doc)
}

/// Critical points of `J(·, W)` for random targets: transport, gradient,
/// signature, and the reduction identity.
pub fn cmd_target_invariance(
    domain: LandscapeDomain,
    samples: usize,
    seed: u64,
    h: f64,
    zero_tol: f64,
) -> Result<ReportDocument> {
    check_positive("samples", samples)?;
    check_hessian_params(h, zero_tol)?;
    let started = Instant::now();
    let mut doc = ReportDocument::new(RunManifest::new(
        "target-invariance",
        Some(seed),
        Some(domain.kind),
        Some(domain.n),
        json!({ "samples": samples, "h": h, "zero_tol": zero_tol }),
    ));
    let chart = TangentChart::for_domain(domain);
    let mut table = Table::new(&[
        "sample",
        "n",
        "metric_value",
        "grad_norm",
        "measured",
        "canonical",
        "agrees",
    ]);
    let mut reduction = Table::new(&["sample", "j_metric", "j_reduced", "deviation"]);
    let mut grads_ok = true;
    let mut sigs_ok = true;
    let mut worst_reduction: f64 = 0.0;
    for s in 0..samples {
        let mut stream = SeededStream::new(seed, s as u64);
        let w = TargetTransformation::new(ensemble_sample(domain, &mut stream)?);
        let probe = ensemble_sample(domain, &mut stream)?;
        let jm = j_metric(&probe, &w)?;
        let jr = j_canonical(reduce_to_canonical(&probe, &w)?.matrix());
        worst_reduction = worst_reduction.max((jm - jr).abs());
        reduction.push(vec![json!(s), json!(jm), json!(jr), json!((jm - jr).abs())]);
        for n in 0..=domain.n {
            let spec = CriticalPointSpec {
                domain,
                n,
                rotation: random_rotation(domain, &mut stream)?,
            };
            let c = make_critical_point(&spec)?;
            let p = transport_from_canonical(&c, &w)?;
            let g = norm(&gradient_metric(&p, &w)?);
            let measured = signature(&numerical_hessian_metric(&p, w.matrix.matrix(), &chart, h)?, zero_tol);
            let canonical = signature(&numerical_hessian(&c, &chart, h)?, zero_tol);
            let agrees = measured == canonical && canonical == closed_form_signature(domain, n)?;
            grads_ok &= g < TRANSPORT_GRAD_TOL;
            sigs_ok &= agrees;
            table.push(vec![
                json!(s),
                json!(n),
                json!(j_metric(&p, &w)?),
                json!(g),
                sig_json(&measured),
                sig_json(&canonical),
                json!(agrees),
            ]);
        }
    }
    doc.tables.insert("transported_critical_points".into(), table);
    doc.tables.insert("reduction_identity".into(), reduction);
    doc.add_suite(
        "transported_gradient",
        grads_ok,
        format!("metric gradient below {TRANSPORT_GRAD_TOL:e} at every transported critical point"),
    );
    doc.add_suite("transported_signature", sigs_ok, "signatures equal the canonical landscape's");
    doc.add_suite(
        "reduction_identity",
        worst_reduction < REDUCTION_TOL,
        format!("max |J(S,W) - J_canonical(reduced)| = {worst_reduction:.3e} (tolerance {REDUCTION_TOL:e})"),
    );
    doc.timing.wall_time_secs = started.elapsed().as_secs_f64();
    Ok(doc)
}
