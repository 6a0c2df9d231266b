use rayon::prelude::*;
use rdlab_core::attractor::{
    attraction_distance, correlation_dimension, dimension_bound_check, field_distance, find_equilibrium,
    greedy_epsilon_net, sample_attractor, segment_cloud, solution_map, torus_cloud, transport_net, DimensionOptions,
    NormTag, PointCloud,
};
use rdlab_core::estimates::SMOOTHING_TIME;
use rdlab_core::profiles::ensemble_member;
use rdlab_core::solver::write_states;
use rdlab_core::{certify_f_add, solve, Field, ProblemSpec, SolverConfig};
use serde_json::json;

use super::{estimates, holder_from_suite, Context, SuiteResult};
use crate::config::{parse_tag, AttractorSuite};
use crate::error::{CliError, SchemaError};
use crate::report::{Check, SuiteReport};

/// Which checks of the attractor suite to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttractorPart {
    All,
    Dimension,
    Transport,
}

const DIMENSION_TAGS: [NormTag; 4] = [NormTag::Lebesgue(2.0), NormTag::Lebesgue(4.0), NormTag::Lebesgue(6.0), NormTag::H1];

struct Setup {
    problem: ProblemSpec,
    cfg: SolverConfig,
    phi: Field,
    cloud: PointCloud,
}

fn tag(name: &str, field: &str) -> Result<NormTag, CliError> {
    parse_tag(name).ok_or_else(|| {
        CliError::Schema(SchemaError {
            line: None,
            field: field.to_string(),
            message: format!("unknown norm tag `{name}`"),
        })
    })
}

fn setup(ctx: &Context, suite: &AttractorSuite, report: &mut SuiteReport) -> Result<Setup, CliError> {
    let c = ctx.config;
    let domain = c.domain()?;
    let problem = c.problem_spec()?;
    let cfg = c.solver_config()?;
    let eq = &suite.equilibrium;
    let found = find_equilibrium(&problem, &domain.eigenmode([1, 0]), eq.damping, eq.max_iter, eq.tolerance)?;
    report.check(Check::at_most("equilibrium_residual", found.residual, eq.max_residual).witness(json!({
        "iterations": found.iterations,
    })));
    let phi = found.state;
    let cloud = sample_attractor(&problem, &c.sampling_plan()?, cfg.dt, cfg.scheme, ctx.seed)?;
    let mut bin = Vec::new();
    write_states(&domain, &cloud.states, &mut bin)?;
    ctx.write("cloud.bin", &bin)?;
    let manifest = json!({
        "states": cloud.len(),
        "file": "cloud.bin",
        "metadata": cloud.metadata,
    });
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    ctx.write("cloud.json", text.as_bytes())?;
    let l2 = NormTag::Lebesgue(2.0);
    let nearest = |target: &Field| -> Result<(f64, usize), CliError> {
        let mut best = (f64::INFINITY, 0);
        for (i, s) in cloud.states.iter().enumerate() {
            let d = field_distance(s, target, l2)?;
            if d < best.0 {
                best = (d, i);
            }
        }
        Ok(best)
    };
    for (name, target) in [("plus", phi.clone()), ("minus", phi.scale(-1.0))] {
        let (d, i) = nearest(&target)?;
        report.check(Check::at_most(format!("equilibrium_{name}_in_cloud"), d, eq.presence).witness(json!({ "state": i })));
    }
    let diameter = cloud.diameter(l2)?;
    report.check(Check::below("cloud_diameter_positive", 0.0, diameter).witness(json!({ "diameter": diameter })));
    report.put(
        "cloud",
        json!({
            "states": cloud.len(),
            "diameter": diameter,
            "unsettled_members": cloud.metadata.unsettled_members,
            "equilibrium_max": phi.max_abs(),
            "equilibrium_l2": phi.l2_norm(),
        }),
    );
    Ok(Setup { problem, cfg, phi, cloud })
}

fn attraction(ctx: &Context, suite: &AttractorSuite, s: &Setup, report: &mut SuiteReport) -> Result<(), CliError> {
    let c = ctx.config;
    let domain = c.domain()?;
    let cfg = s.cfg.with_t_end(suite.bundle_horizon).with_stride(suite.bundle_stride);
    let bundle = (0..suite.bundle_size as u64)
        .into_par_iter()
        .map(|i| {
            let (_, u0) = ensemble_member(&domain, ctx.seed ^ 0xB0B0, i, suite.bundle_l2)?;
            Ok(solve(&u0, &s.problem, &cfg)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut series = Vec::new();
    for name in &suite.attraction_tags {
        let t = tag(name, "suites.attractor.attraction_tags")?;
        let cert = match (t, &c.growth) {
            (NormTag::H1, Some(_)) => Some(certify_f_add(s.problem.nonlinearity(), &c.growth_constants()?, &c.scan_spec()?)?),
            _ => None,
        };
        let a = attraction_distance(&bundle, &s.cloud, t, cert.as_ref())?;
        let label = t.label();
        let least = a.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        report.check(Check::below(format!("attraction_{label}"), least, suite.attraction_threshold).witness(json!({
            "time_below": a.time_below(suite.attraction_threshold),
            "horizon": suite.bundle_horizon,
            "monotone_from": a.monotone_from,
        })));
        let rows: Vec<[f64; 2]> = a.points.iter().map(|p| [p.0, p.1]).collect();
        ctx.csv(&format!("attraction_{label}.csv"), &["t", "dist"], &rows)?;
        series.push(a);
    }
    report.put("attraction", &series);
    Ok(())
}

fn transport(ctx: &Context, suite: &AttractorSuite, s: &Setup, report: &mut SuiteReport) -> Result<(), CliError> {
    let gamma = suite.transport_gamma;
    let holder = match (ctx.holder, &suite.holder) {
        (Some(h), _) => h,
        (None, Some(h)) => (h.constant, h.exponent),
        (None, None) => {
            let smoothing = estimates::smoothing(ctx)?;
            holder_from_suite(&smoothing, gamma).ok_or(CliError::MissingSuite("smoothing"))?
        }
    };
    let image = solution_map(&s.cloud, &s.problem, &s.cfg.with_t_end(SMOOTHING_TIME))?;
    let source = NormTag::Lebesgue(2.0);
    let target = NormTag::Lebesgue(gamma);
    let shifted = s.cloud.translated(&s.phi)?;
    let mut results = Vec::new();
    for &eps in &suite.transport_eps {
        let net = greedy_epsilon_net(&s.cloud, eps, source)?;
        let r = transport_net(&s.cloud, &image, &net, source, target, holder)?;
        report.check(Check::at_least(format!("coverage_eps{eps}"), r.coverage, 1.0).witness(json!({
            "covered": r.covered,
            "total": r.total,
            "radius": r.radius,
        })));
        report.check(
            Check::at_most(format!("holder_ratio_eps{eps}"), r.worst_ratio, holder.0)
                .witness(json!({ "point": r.worst_point }))
                .diagnostic(),
        );
        let moved = greedy_epsilon_net(&shifted, eps, source)?;
        report.check(Check::holds(format!("net_translation_eps{eps}"), moved.indices == net.indices));
        results.push(r);
    }
    report.put("transport", json!({ "holder": [holder.0, holder.1], "gamma": gamma, "nets": results }));
    Ok(())
}

fn correlation_rows(e: &rdlab_core::attractor::DimensionEstimate) -> Vec<[f64; 2]> {
    e.scales
        .iter()
        .zip(&e.fractions)
        .filter(|(_, f)| **f > 0.0)
        .map(|(s, f)| [s.ln(), f.ln()])
        .collect()
}

fn dimension(ctx: &Context, suite: &AttractorSuite, s: &Setup, report: &mut SuiteReport) -> Result<(), CliError> {
    let domain = ctx.config.domain()?;
    let opts = DimensionOptions::default();
    let segment = segment_cloud(&s.phi, suite.segment_points, &mut ctx.rng(6));
    let torus = torus_cloud(&domain, (1.0, 0.5), suite.torus_points, &mut ctx.rng(7))?;
    let tol = suite.oracle_tolerance;
    let mut oracles = Vec::new();
    for t in DIMENSION_TAGS {
        let label = t.label();
        for (name, cloud, expected) in [("segment", &segment, 1.0), ("torus", &torus, 2.0)] {
            let e = correlation_dimension(cloud, t, &opts)?;
            report.check(
                Check::within(format!("{name}_{label}"), e.dimension, expected - tol, expected + tol)
                    .witness(json!({ "window": e.window, "band": e.band, "r_squared": e.r_squared })),
            );
            oracles.push(json!({ "cloud": name, "tag": t, "dimension": e.dimension, "band": e.band }));
        }
    }
    let mut bounds = Vec::new();
    for &gamma in &suite.dimension_gammas {
        let b = dimension_bound_check(&s.cloud, suite.dimension_p, gamma, Some(&s.phi), &opts)?;
        for bound in &b.bounds {
            let mut check = Check::at_most(format!("bound_{}_gamma{gamma}", bound.name), bound.lhs, bound.rhs + bound.tolerance);
            check = check.witness(json!({ "factor": bound.factor, "tolerance": bound.tolerance, "degenerate": b.degenerate }));
            report.check(check);
        }
        bounds.push(b);
    }
    let shifted = s.cloud.translated(&s.phi)?;
    let mut estimates = Vec::new();
    for t in DIMENSION_TAGS {
        let here = correlation_dimension(&s.cloud, t, &opts)?;
        let moved = correlation_dimension(&shifted, t, &opts)?;
        let label = t.label();
        report.check(
            Check::at_most(format!("translation_{label}"), (here.dimension - moved.dimension).abs(), suite.translation_tolerance)
                .witness(json!({ "dimension": here.dimension, "translated": moved.dimension })),
        );
        ctx.csv(&format!("correlation_{label}.csv"), &["log_eps", "log_C"], &correlation_rows(&here))?;
        estimates.push(here);
    }
    report.put("dimension", json!({ "oracles": oracles, "estimates": estimates, "bounds": bounds }));
    Ok(())
}

pub fn run(ctx: &Context, part: AttractorPart) -> SuiteResult {
    let suite = ctx.config.suites.attractor.clone().ok_or(CliError::MissingSuite("attractor"))?;
    let mut report = SuiteReport::new("attractor");
    let s = setup(ctx, &suite, &mut report)?;
    if part == AttractorPart::All {
        attraction(ctx, &suite, &s, &mut report)?;
    }
    if matches!(part, AttractorPart::All | AttractorPart::Transport) {
        transport(ctx, &suite, &s, &mut report)?;
    }
    if matches!(part, AttractorPart::All | AttractorPart::Dimension) {
        dimension(ctx, &suite, &s, &mut report)?;
    }
    Ok(report)
}
