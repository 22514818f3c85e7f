use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use kwgraph::solvers::{
    continuation_solve, estimate_lambda_star, mountain_pass_solve, SolverConfig,
};
use kwgraph::{KwError, KwProblem, SolutionCandidate, VertexFunction};
use rayon::prelude::*;

use crate::problem_file::{parse_problem, ProblemFile};
use crate::solution_file::{emit_solutions, fmt_num, parse_solutions};
use crate::CliError;

pub const EXIT_OK: i32 = 0;
/// Parse, I/O or verification failure.
pub const EXIT_FAILURE: i32 = 1;
/// The infeasibility certificate fired.
pub const EXIT_INFEASIBLE: i32 = 2;
/// A solver ran out of budget, stalled, or the hypotheses do not hold.
pub const EXIT_SOLVER: i32 = 3;

pub const SWEEP_HEADER: &str =
    "lambda,energy,sup_norm,hessian_min_eig,classification,residual_sup,status";

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub lambda: Option<f64>,
    pub both: bool,
    pub emit: Option<PathBuf>,
    pub cfg: SolverConfig,
}

#[derive(Debug, Clone, Default)]
pub struct LambdaStarOptions {
    /// Defaults to `1e-3 · (-min K)`.
    pub width_tol: Option<f64>,
    pub emit: Option<PathBuf>,
    pub cfg: SolverConfig,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    pub grid: Vec<f64>,
    pub both: bool,
    /// Standard output when `None`.
    pub out: Option<PathBuf>,
    pub cfg: SolverConfig,
}

/// `lo:hi:step` into the points `lo + i·step ≤ hi`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("grid must be lo:hi:step with step > 0, got `{spec}`"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<_>>()
        .ok_or_else(bad)?;
    let [lo, hi, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || hi < lo {
        return Err(bad());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

fn load(path: &Path) -> Result<ProblemFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_problem(&text)
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}

fn solver_exit(e: &KwError) -> i32 {
    match e {
        KwError::CertifiedInfeasible { .. } => EXIT_INFEASIBLE,
        KwError::ConvergenceFailure(_)
        | KwError::ContinuationStalled { .. }
        | KwError::DeformationStalled(_)
        | KwError::CollapsedToMinimum
        | KwError::EndpointSearchFailure(_)
        | KwError::SearchFailure(_)
        | KwError::HypothesesViolated(_) => EXIT_SOLVER,
        _ => EXIT_FAILURE,
    }
}

fn status_of(e: &KwError) -> &'static str {
    match e {
        KwError::CertifiedInfeasible { .. } => "certified_infeasible",
        KwError::ContinuationStalled { .. } | KwError::DeformationStalled(_) => "stalled",
        KwError::ConvergenceFailure(_) => "convergence_failure",
        KwError::CollapsedToMinimum => "collapsed",
        _ => "failed",
    }
}

fn report(err: &mut dyn Write, e: &dyn std::fmt::Display) {
    let _ = writeln!(err, "error: {e}");
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn certificate_message(p: &KwProblem) -> String {
    format!(
        "no solution at lambda {}: K + lambda >= 0 on every vertex while the integral of kappa is {} < 0",
        p.lambda(),
        p.kappa_integral()
    )
}

fn print_block(
    out: &mut dyn Write,
    p: &KwProblem,
    index: usize,
    c: &SolutionCandidate,
) -> std::io::Result<()> {
    let r = p.residual(&c.u).unwrap_or_else(|_| p.graph().constant(f64::NAN));
    writeln!(out, "solution {index} lambda={}", fmt_num(p.lambda()))?;
    writeln!(out, "vertex u residual")?;
    for (x, id) in p.graph().ids().iter().enumerate() {
        writeln!(out, "{id} {} {}", fmt_num(c.u[x]), fmt_num(r[x]))?;
    }
    writeln!(
        out,
        "energy={} hessian_min_eig={} class={}",
        fmt_num(c.energy),
        fmt_num(c.hessian_min_eig),
        c.classification
    )
}

pub fn cmd_solve(
    path: &Path,
    opts: &SolveOptions,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let file = match load(path) {
        Ok(f) => f,
        Err(e) => {
            report(err, &e);
            return EXIT_FAILURE;
        }
    };
    let lambda = opts.lambda.unwrap_or(file.problem.lambda());
    let p = file.problem.with_lambda(lambda);
    if p.infeasibility_certificate() {
        report(err, &certificate_message(&p));
        return EXIT_INFEASIBLE;
    }
    let minimal = match continuation_solve(&p, lambda, &opts.cfg) {
        Ok(c) => c,
        Err(e) => {
            report(err, &e);
            return solver_exit(&e);
        }
    };
    let mut found = vec![minimal];
    if opts.both {
        if lambda > 0.0 {
            match mountain_pass_solve(&p, &found[0], &opts.cfg) {
                Ok(r) => found.push(r.second_solution),
                Err(e) => {
                    report(err, &e);
                    return solver_exit(&e);
                }
            }
        } else {
            let _ = writeln!(err, "note: lambda <= 0, the solution is unique");
        }
    }
    for (i, c) in found.iter().enumerate() {
        if print_block(out, &p, i + 1, c).is_err() {
            return EXIT_FAILURE;
        }
    }
    if let Some(target) = &opts.emit {
        let us: Vec<&VertexFunction> = found.iter().map(|c| &c.u).collect();
        if let Err(e) = write_file(target, &emit_solutions(p.graph(), lambda, &us)) {
            report(err, &e);
            return EXIT_FAILURE;
        }
    }
    EXIT_OK
}

pub fn cmd_lambda_star(
    path: &Path,
    opts: &LambdaStarOptions,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let file = match load(path) {
        Ok(f) => f,
        Err(e) => {
            report(err, &e);
            return EXIT_FAILURE;
        }
    };
    let p = &file.problem;
    let width = opts.width_tol.unwrap_or(1e-3 * p.lambda_ceiling());
    let bracket = match estimate_lambda_star(p, width, &opts.cfg) {
        Ok(b) => b,
        Err(e) => {
            report(err, &e);
            return solver_exit(&e);
        }
    };
    let lo = &bracket.evidence_lo;
    let written = writeln!(
        out,
        "lambda_star in [{}, {}]",
        fmt_num(bracket.lambda_lo),
        fmt_num(bracket.lambda_hi)
    )
    .and_then(|_| {
        writeln!(
            out,
            "evidence_lo=solution residual_sup={} hessian_min_eig={} class={}",
            fmt_num(lo.residual_sup),
            fmt_num(lo.hessian_min_eig),
            lo.classification
        )
    })
    .and_then(|_| writeln!(out, "evidence_hi={}", bracket.evidence_hi.as_str()));
    if written.is_err() {
        return EXIT_FAILURE;
    }
    if let Some(target) = &opts.emit {
        let text = emit_solutions(p.graph(), bracket.lambda_lo, &[&lo.u]);
        if let Err(e) = write_file(target, &text) {
            report(err, &e);
            return EXIT_FAILURE;
        }
    }
    EXIT_OK
}

fn sweep_row(lambda: f64, result: &Result<SolutionCandidate, KwError>) -> String {
    match result {
        Ok(c) => format!(
            "{},{},{},{},{},{},ok",
            fmt_num(lambda),
            fmt_num(c.energy),
            fmt_num(c.u.sup_norm()),
            fmt_num(c.hessian_min_eig),
            c.classification,
            fmt_num(c.residual_sup)
        ),
        Err(e) => format!("{},,,,,,{}", fmt_num(lambda), status_of(e)),
    }
}

/// Rows for one grid point: the minimal branch, then the mountain-pass
/// branch when requested and `λ > 0`.
fn sweep_point(p: &KwProblem, lambda: f64, both: bool, cfg: &SolverConfig) -> Vec<String> {
    let q = p.with_lambda(lambda);
    let minimal = if q.infeasibility_certificate() {
        Err(KwError::CertifiedInfeasible { lambda })
    } else {
        continuation_solve(&q, lambda, cfg)
    };
    let mut rows = vec![sweep_row(lambda, &minimal)];
    if both && lambda > 0.0 {
        if let Ok(m) = &minimal {
            let second = mountain_pass_solve(&q, m, cfg).map(|r| r.second_solution);
            rows.push(sweep_row(lambda, &second));
        }
    }
    rows
}

pub fn cmd_sweep(
    path: &Path,
    opts: &SweepOptions,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let file = match load(path) {
        Ok(f) => f,
        Err(e) => {
            report(err, &e);
            return EXIT_FAILURE;
        }
    };
    let p = &file.problem;
    let rows: Vec<Vec<String>> = opts
        .grid
        .par_iter()
        .map(|&lambda| sweep_point(p, lambda, opts.both, &opts.cfg))
        .collect();
    let mut text = String::from(SWEEP_HEADER);
    text.push('\n');
    for row in rows.iter().flatten() {
        text.push_str(row);
        text.push('\n');
    }
    let written = match &opts.out {
        Some(target) => write_file(target, &text),
        None => out.write_all(text.as_bytes()).map_err(|e| CliError::Usage(e.to_string())),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => {
            report(err, &e);
            EXIT_FAILURE
        }
    }
}

/// Re-checks every solution in a solution CSV: residual, the integral
/// identity, energy, and the Hessian classification.
pub fn cmd_verify(
    path: &Path,
    solution_path: &Path,
    cfg: &SolverConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let loaded = load(path).and_then(|file| {
        let text = fs::read_to_string(solution_path).map_err(|e| io_error(solution_path, e))?;
        let solutions = parse_solutions(file.problem.graph(), &text)?;
        Ok((file, solutions))
    });
    let (file, solutions) = match loaded {
        Ok(v) => v,
        Err(e) => {
            report(err, &e);
            return EXIT_FAILURE;
        }
    };
    let tol = cfg.residual_tol;
    for s in &solutions {
        let p = file.problem.with_lambda(s.lambda);
        let fail = |err: &mut dyn Write, check: &str, detail: String| {
            let _ = writeln!(err, "{check} check failed for solution {}: {detail}", s.index);
            EXIT_FAILURE
        };
        let c = match p.candidate(s.u.clone()) {
            Ok(c) => c,
            Err(e) => return fail(err, "evaluation", e.to_string()),
        };
        if !(c.residual_sup <= tol) {
            return fail(err, "residual", format!("sup residual {:e} > {tol:e}", c.residual_sup));
        }
        let gap = p.identity_gap(&s.u).unwrap_or(f64::INFINITY);
        let allowed = 10.0 * tol * p.graph().total_measure();
        if !(gap <= allowed) {
            return fail(err, "identity", format!("gap {gap:e} > {allowed:e}"));
        }
        if !c.energy.is_finite() {
            return fail(err, "energy", format!("energy {}", c.energy));
        }
        if !c.hessian_min_eig.is_finite() {
            return fail(err, "hessian", format!("eigenvalue {}", c.hessian_min_eig));
        }
        let line = writeln!(
            out,
            "solution {} lambda={} residual_sup={} energy={} identity_gap={} hessian_min_eig={} class={}",
            s.index,
            fmt_num(s.lambda),
            fmt_num(c.residual_sup),
            fmt_num(c.energy),
            fmt_num(gap),
            fmt_num(c.hessian_min_eig),
            c.classification
        );
        if line.is_err() {
            return EXIT_FAILURE;
        }
    }
    EXIT_OK
}
