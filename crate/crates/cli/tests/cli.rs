use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use kwgraph::oracle::random_strict_problem;
use kwgraph::solvers::SolverConfig;
use kwgraph::KwProblem;
use kwgraph_cli::{
    cmd_lambda_star, cmd_solve, cmd_sweep, cmd_verify, emit_problem, parse_grid, parse_problem,
    parse_solutions, LambdaStarOptions, SolveOptions, SweepOptions, EXIT_FAILURE,
    EXIT_INFEASIBLE, EXIT_OK, EXIT_SOLVER, SWEEP_HEADER,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn sample_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/sample.kw")
}

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn solve(path: &Path, opts: &SolveOptions) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cmd_solve(path, opts, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn verify(path: &Path, solution: &Path) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cmd_verify(path, solution, &SolverConfig::default(), &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

/// Per-vertex `u` columns of every printed solution block.
fn blocks(out: &str) -> Vec<Vec<f64>> {
    let mut found = Vec::new();
    let mut cur: Option<Vec<f64>> = None;
    for line in out.lines() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if line.starts_with("solution ") {
            found.extend(cur.take());
            cur = Some(Vec::new());
        } else if fields.len() == 3 && fields[0] != "vertex" && !line.starts_with("energy=") {
            if let Some(c) = cur.as_mut() {
                c.push(fields[1].parse().unwrap());
            }
        }
    }
    found.extend(cur);
    found
}

#[test]
fn solve_at_zero_has_one_solution() {
    let run = solve(&sample_path(), &SolveOptions::default());
    assert_eq!(run.code, EXIT_OK, "{}", run.err);
    let b = blocks(&run.out);
    assert_eq!(b.len(), 1);
    let ub = 0.5 * 3f64.ln();
    assert!((b[0][1] - ub).abs() < 1e-10);
    assert!((b[0][0] - ub - 1.0).abs() < 1e-10);
    assert!(run.out.contains("class=local_min"));
    assert!(run.out.lines().any(|l| l.starts_with("energy=")));
}

#[test]
fn solve_beyond_ceiling_is_certified() {
    for lambda in [1.0, 1.5, 100.0] {
        let run = solve(
            &sample_path(),
            &SolveOptions {
                lambda: Some(lambda),
                ..Default::default()
            },
        );
        assert_eq!(run.code, EXIT_INFEASIBLE);
        assert!(run.out.is_empty());
        assert!(run.err.contains("no solution"));
    }
}

#[test]
fn solve_above_threshold_stalls() {
    let run = solve(
        &sample_path(),
        &SolveOptions {
            lambda: Some(0.5),
            ..Default::default()
        },
    );
    assert_eq!(run.code, EXIT_SOLVER);
    assert!(run.out.is_empty());
}

#[test]
fn both_solutions_round_trip_through_verify() {
    let dir = TempDir::new().unwrap();
    let emit = dir.path().join("both.csv");
    let run = solve(
        &sample_path(),
        &SolveOptions {
            lambda: Some(0.004),
            both: true,
            emit: Some(emit.clone()),
            ..Default::default()
        },
    );
    assert_eq!(run.code, EXIT_OK, "{}", run.err);
    let b = blocks(&run.out);
    assert_eq!(b.len(), 2);
    let gap = b[0].iter().zip(&b[1]).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap > 1e-3);
    let v = verify(&sample_path(), &emit);
    assert_eq!(v.code, EXIT_OK, "{}", v.err);
    assert!(v.out.contains("class=local_min") && v.out.contains("class=saddle"));

    // +0.1 at one vertex breaks the residual check
    let text = fs::read_to_string(&emit).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let fields: Vec<&str> = lines[1].split(',').collect();
    let bumped: f64 = fields[3].parse::<f64>().unwrap() + 0.1;
    lines[1] = format!("{},{},{},{bumped:.16e}", fields[0], fields[1], fields[2]);
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, lines.join("\n")).unwrap();
    let v = verify(&sample_path(), &bad);
    assert_eq!(v.code, EXIT_FAILURE);
    assert!(v.err.contains("residual check failed"), "{}", v.err);
}

#[test]
fn verify_accepts_hand_written_constant_solution() {
    let dir = TempDir::new().unwrap();
    let problem = dir.path().join("const.kw");
    fs::write(
        &problem,
        "mode relaxed\nvertex x 2\nvertex y 0.5\nedge x y 3\nkappa x -1\nkappa y -1\nK x -1\nK y -1\n",
    )
    .unwrap();
    let sol = dir.path().join("const.csv");
    fs::write(&sol, "solution,lambda,vertex,u\n1,0,x,0\n1,0,y,0\n").unwrap();
    assert_eq!(verify(&problem, &sol).code, EXIT_OK);
    // the residual at u ≡ 0.01 is 1 - e^{0.02} ≈ -0.02
    fs::write(&sol, "solution,lambda,vertex,u\n1,0,x,0.01\n1,0,y,0.01\n").unwrap();
    assert_eq!(verify(&problem, &sol).code, EXIT_FAILURE);
}

#[test]
fn lambda_star_contract() {
    let dir = TempDir::new().unwrap();
    let emit = dir.path().join("lo.csv");
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let opts = LambdaStarOptions {
        emit: Some(emit.clone()),
        ..Default::default()
    };
    assert_eq!(cmd_lambda_star(&sample_path(), &opts, &mut out, &mut err), EXIT_OK);
    let out = String::from_utf8(out).unwrap();
    let first = out.lines().next().unwrap();
    let inner = first
        .strip_prefix("lambda_star in [")
        .and_then(|s| s.strip_suffix(']'))
        .unwrap();
    let (lo, hi) = inner.split_once(", ").unwrap();
    let (lo, hi): (f64, f64) = (lo.parse().unwrap(), hi.parse().unwrap());
    assert!(0.0 < lo && lo < hi && hi <= 1.0 && hi - lo <= 1e-3);
    assert!(out.contains("evidence_hi=budget_failed"));
    assert_eq!(verify(&sample_path(), &emit).code, EXIT_OK);
}

#[test]
fn lambda_star_needs_the_hypotheses() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("relaxed.kw");
    fs::write(
        &path,
        "mode relaxed\nvertex a 1\nvertex b 1\nedge a b 1\nkappa a -1\nkappa b -2\nK a -0.5\nK b -1\n",
    )
    .unwrap();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cmd_lambda_star(&path, &LambdaStarOptions::default(), &mut out, &mut err);
    assert_eq!(code, EXIT_SOLVER);
    assert!(out.is_empty());
}

#[test]
fn sweep_rows() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("sweep.csv");
    let opts = SweepOptions {
        grid: parse_grid("0:1.2:0.002").unwrap(),
        both: true,
        out: Some(csv.clone()),
        ..Default::default()
    };
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(cmd_sweep(&sample_path(), &opts, &mut out, &mut err), EXIT_OK);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(SWEEP_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 7));
    let lambdas: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(lambdas.windows(2).all(|w| w[0] <= w[1]), "grid order");
    for r in &rows {
        let lambda: f64 = r[0].parse().unwrap();
        if lambda >= 1.0 {
            assert_eq!(r[6], "certified_infeasible");
        }
        if r[6] == "ok" {
            let res: f64 = r[5].parse().unwrap();
            assert!(res <= 1e-10);
        } else {
            assert!(r[1..6].iter().all(|f| f.is_empty()));
        }
    }
    // two solutions at small positive λ, none far above the threshold
    let at = |l: f64| {
        rows.iter()
            .filter(|r| r[6] == "ok" && (r[0].parse::<f64>().unwrap() - l).abs() < 1e-12)
            .count()
    };
    assert_eq!(at(0.0), 1);
    assert_eq!(at(0.004), 2);
    assert_eq!(at(0.5), 0);

    // the λ = 0 row matches cmd_solve
    let run = solve(&sample_path(), &SolveOptions::default());
    let energy_line = run.out.lines().find(|l| l.starts_with("energy=")).unwrap();
    let energy = energy_line
        .split_whitespace()
        .next()
        .unwrap()
        .trim_start_matches("energy=");
    assert_eq!(rows[0][1], energy);
}

#[test]
fn parse_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("broken.kw");
    fs::write(&path, "vertex a 1\nvertex b 1\nedge a b 1\nkappa a -1\nK a 0\nK b -1\n").unwrap();
    let run = solve(&path, &SolveOptions::default());
    assert_eq!(run.code, EXIT_FAILURE);
    assert!(run.err.contains("kappa not total"), "{}", run.err);
    let run = solve(&dir.path().join("missing.kw"), &SolveOptions::default());
    assert_eq!(run.code, EXIT_FAILURE);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_kwgraph");
    let sample = sample_path();
    let s = sample.to_str().unwrap();
    let code = |args: &[&str]| {
        Command::new(bin)
            .args(args)
            .output()
            .unwrap()
            .status
            .code()
            .unwrap()
    };
    assert_eq!(code(&["solve", s]), 0);
    assert_eq!(code(&["solve", s, "--lambda", "1"]), 2);
    assert_eq!(code(&["solve", s, "--lambda", "0.5"]), 3);
    assert_eq!(code(&["solve", s, "--lambda", "-0.25", "--tol", "1e-11"]), 0);
    assert_eq!(code(&["sweep", s, "--grid", "0:1:0"]), 1);
    let out = Command::new(bin).args(["solve", s]).output().unwrap();
    assert!(String::from_utf8(out.stdout).unwrap().contains("class=local_min"));
}

fn random_problem(seed: u64, strict: bool) -> KwProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 2 + (seed % 15) as usize;
    let p = random_strict_problem(&mut rng, n, (seed % 7) as f64 * 0.013 - 0.02).unwrap();
    if strict {
        p
    } else {
        KwProblem::relaxed(
            p.graph_arc().clone(),
            p.kappa().shift(0.1),
            p.k().shift(-0.3),
            p.lambda(),
        )
        .unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn emit_then_parse_is_identity(seed in any::<u64>(), strict in any::<bool>()) {
        let p = random_problem(seed, strict);
        let text = emit_problem(&p);
        let back = parse_problem(&text).unwrap();
        prop_assert_eq!(&back.problem, &p);
        prop_assert_eq!(emit_problem(&back.problem), text);
    }
}

#[test]
fn solution_csv_rejects_foreign_vertices() {
    let p = parse_problem(&fs::read_to_string(sample_path()).unwrap()).unwrap();
    assert!(parse_solutions(p.problem.graph(), "solution,lambda,vertex,u\n1,0,z,0\n").is_err());
}
