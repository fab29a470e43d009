use std::path::Path;

use ctg::convergence::{convergence_study, order_advice, ConvergenceReport, ConvergenceSetup};
use ctg::integrator::{integrate, IntegrateOptions, TimeGrid};
use ctg::minors::{build_minor_table, minor_oracle};
use ctg::mtx::read_matrix_market_file;
use ctg::pade::{pade_spectrum, MAX_ORDER};
use ctg::problems::TestProblem;
use ctg::verify::{run_verification, Fault, VerifyOptions};
use serde::Serialize;

use crate::config::{ProblemSource, RunConfig};
use crate::output::{num, opt_num, sink, write_json, write_rows};
use crate::CliError;

fn load_problem(cfg: &RunConfig) -> Result<TestProblem<f64>, CliError> {
    match cfg.problem_source()? {
        ProblemSource::Named(kind) => Ok(kind.build()?),
        ProblemSource::Matrix { d, mass } => {
            let d = read_matrix_market_file::<f64>(&d)?;
            let mass = mass.map(read_matrix_market_file::<f64>).transpose()?;
            Ok(TestProblem::from_matrices("matrix", d, mass)?)
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let problem = load_problem(cfg)?;
    let grid = TimeGrid::uniform(0.0, cfg.t_end, cfg.step_count())?;
    let opts = IntegrateOptions { mode: cfg.mode, want_interior: false, quadrature_points: None, threads: cfg.threads };
    let traj = integrate(&problem.operator, cfg.order, &grid, &problem.y0, problem.source_fn(), &opts)?;
    let m = problem.dim();
    let mut header: Vec<String> = ["n", "t", "norm", "error"].iter().map(|s| s.to_string()).collect();
    header.extend((0..m).map(|i| format!("y_{i}")));
    let rows: Vec<Vec<String>> = traj
        .nodal_values()
        .iter()
        .zip(grid.nodes())
        .enumerate()
        .map(|(n, (y, &t))| {
            let err = problem.exact_at(t).map(|e| (y - e).norm());
            let mut row = vec![n.to_string(), num(t), num(y.norm()), opt_num(err)];
            row.extend(y.iter().map(|&v| num(v)));
            row
        })
        .collect();
    write_rows(&mut *sink(cfg.output.as_deref())?, &header, &rows)
}

#[derive(Serialize)]
struct ConvergenceJson<'a> {
    report: &'a ConvergenceReport,
    expected_nodal_order: usize,
    expected_max_order: usize,
    finest_nodal_order: Option<f64>,
    finest_max_order: Option<f64>,
    within_tolerance: bool,
}

pub fn convergence(cfg: &RunConfig, json: Option<&Path>, check: bool) -> Result<(), CliError> {
    let problem = load_problem(cfg)?;
    let setup = ConvergenceSetup {
        order: cfg.order,
        t_end: cfg.t_end,
        initial_steps: cfg.step_count(),
        refinements: cfg.refinements,
        mode: cfg.mode,
        samples_per_interval: 10,
        threads: cfg.threads,
    };
    let report = convergence_study(&problem, &setup)?;
    let header: Vec<String> = ["steps", "tau", "nodal_error", "nodal_order", "max_error", "max_order"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.steps.to_string(),
                num(r.tau),
                num(r.nodal_error),
                opt_num(r.nodal_order),
                num(r.max_error),
                opt_num(r.max_order),
            ]
        })
        .collect();
    write_rows(&mut *sink(cfg.output.as_deref())?, &header, &rows)?;
    let (en, em) = (2 * cfg.order, cfg.order + 1);
    let (fnod, fmax) = (report.finest_nodal_order(), report.finest_max_order());
    let close = |o: Option<f64>, e: usize| o.is_some_and(|o| (o - e as f64).abs() <= 0.25);
    let ok = close(fnod, en) && close(fmax, em);
    if let Some(path) = json {
        let doc = ConvergenceJson {
            report: &report,
            expected_nodal_order: en,
            expected_max_order: em,
            finest_nodal_order: fnod,
            finest_max_order: fmax,
            within_tolerance: ok,
        };
        write_json(path, &doc)?;
    }
    if check && !ok {
        return Err(CliError::failure(format!(
            "observed orders {fnod:?} (nodal, expected {en}) and {fmax:?} (max, expected {em}) are outside ±0.25"
        )));
    }
    Ok(())
}

pub fn verify(
    max_order: usize,
    seed: u64,
    instances: usize,
    fault: Option<Fault>,
    json: Option<&Path>,
) -> Result<(), CliError> {
    let opts = VerifyOptions { max_order, seed, random_instances: instances, fault };
    let results = run_verification(&opts);
    for r in &results {
        println!("{} {:<34} {:>8.3}s  {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.seconds, r.detail);
    }
    if let Some(path) = json {
        write_json(path, &results)?;
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError::failure(format!("{failed} of {} checks failed", results.len())));
    }
    println!("all {} checks passed", results.len());
    Ok(())
}

pub fn pade_table(max_order: usize, output: Option<&Path>) -> Result<(), CliError> {
    if max_order == 0 || max_order > MAX_ORDER {
        return Err(CliError::usage(format!("max order must lie in 1..={MAX_ORDER}")));
    }
    let header: Vec<String> =
        ["r", "j", "zeta_re", "zeta_im", "dp_re", "dp_im", "residual"].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for r in 1..=max_order {
        let s = pade_spectrum(r)?;
        for (j, (z, d)) in s.zeros().iter().zip(s.derivative_at_zeros()).enumerate() {
            let res = s.numerator().eval(*z).norm();
            rows.push(vec![r.to_string(), (j + 1).to_string(), num(z.re), num(z.im), num(d.re), num(d.im), num(res)]);
        }
    }
    write_rows(&mut *sink(output)?, &header, &rows)
}

pub fn minor_table(order: usize, oracle: bool, output: Option<&Path>) -> Result<(), CliError> {
    let table = if oracle { minor_oracle(order)? } else { build_minor_table(order)? };
    let header: Vec<String> = ["k", "i", "degree", "coefficients"].iter().map(|s| s.to_string()).collect();
    let mut rows = Vec::new();
    for k in 1..=order + 1 {
        for i in 1..=order + 1 {
            let p = table.phi(k, i);
            let coeffs: Vec<String> = p.coeffs().iter().map(|c| c.to_string()).collect();
            rows.push(vec![k.to_string(), i.to_string(), p.degree().to_string(), coeffs.join(" ")]);
        }
    }
    let det: Vec<String> = table.varphi().coeffs().iter().map(|c| c.to_string()).collect();
    rows.push(vec!["det".into(), "det".into(), table.varphi().degree().to_string(), det.join(" ")]);
    write_rows(&mut *sink(output)?, &header, &rows)
}

pub fn advise(h: f64, p: usize) -> Result<(), CliError> {
    let advice = order_advice(h, p)?;
    let text = serde_json::to_string_pretty(&advice).map_err(|e| CliError::failure(e.to_string()))?;
    println!("{text}");
    Ok(())
}
