//! Line-based problem files.
//!
//! ```text
//! # comment
//! mode strict            # or relaxed; default strict
//! lambda 0               # default 0
//! vertex a 1
//! edge a b 1
//! kappa a -1
//! K a 0
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use kwgraph::{KwError, KwProblem, VertexFunction, WeightedGraph};

use crate::CliError;

/// A parsed problem together with the line each datum came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub problem: KwProblem,
    /// Keys `vertex <id>`, `edge <a> <b>`, `kappa <id>`, `K <id>`, `lambda`, `mode`.
    pub lines: BTreeMap<String, usize>,
}

impl ProblemFile {
    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.lines.get(key).copied()
    }
}

fn parse_number(token: &str, line: usize) -> Result<f64, CliError> {
    let v: f64 = token.parse().map_err(|_| CliError::Parse {
        line,
        reason: format!("expected a number, found `{token}`"),
    })?;
    if !v.is_finite() {
        return Err(CliError::Parse {
            line,
            reason: format!("number `{token}` is not finite"),
        });
    }
    Ok(v)
}

fn record(lines: &mut BTreeMap<String, usize>, key: String, line: usize) -> Result<(), CliError> {
    if let Some(first) = lines.get(&key) {
        return Err(CliError::Parse {
            line,
            reason: format!("duplicate `{key}` (first given on line {first})"),
        });
    }
    lines.insert(key, line);
    Ok(())
}

pub fn parse_problem(text: &str) -> Result<ProblemFile, CliError> {
    let mut lines = BTreeMap::new();
    let mut vertices: Vec<(String, f64)> = Vec::new();
    let mut edges: Vec<(String, String, f64)> = Vec::new();
    let mut kappa: BTreeMap<String, f64> = BTreeMap::new();
    let mut k: BTreeMap<String, f64> = BTreeMap::new();
    let mut lambda = 0.0;
    let mut strict = true;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let Some((&keyword, args)) = tokens.split_first() else {
            continue;
        };
        let arity = match keyword {
            "vertex" | "kappa" | "K" => 2,
            "edge" => 3,
            "lambda" | "mode" => 1,
            other => {
                return Err(CliError::Parse {
                    line,
                    reason: format!("unknown keyword `{other}`"),
                })
            }
        };
        if args.len() != arity {
            return Err(CliError::Parse {
                line,
                reason: format!("`{keyword}` takes {arity} fields, found {}", args.len()),
            });
        }
        match keyword {
            "vertex" => {
                // duplicates are left to graph validation, which names the vertex
                let mu = parse_number(args[1], line)?;
                lines.entry(format!("vertex {}", args[0])).or_insert(line);
                vertices.push((args[0].to_string(), mu));
            }
            "edge" => {
                let w = parse_number(args[2], line)?;
                lines.entry(format!("edge {} {}", args[0], args[1])).or_insert(line);
                edges.push((args[0].to_string(), args[1].to_string(), w));
            }
            "kappa" | "K" => {
                let v = parse_number(args[1], line)?;
                record(&mut lines, format!("{keyword} {}", args[0]), line)?;
                let target = if keyword == "kappa" { &mut kappa } else { &mut k };
                target.insert(args[0].to_string(), v);
            }
            "lambda" => {
                lambda = parse_number(args[0], line)?;
                record(&mut lines, "lambda".into(), line)?;
            }
            _ => {
                strict = match args[0] {
                    "strict" => true,
                    "relaxed" => false,
                    other => {
                        return Err(CliError::Parse {
                            line,
                            reason: format!("mode must be strict or relaxed, found `{other}`"),
                        })
                    }
                };
                record(&mut lines, "mode".into(), line)?;
            }
        }
    }

    let graph = WeightedGraph::build(&vertices, &edges)
        .map_err(|e| validation(graph_error_line(&e, text), e.to_string()))?;
    let kappa = total(&graph, &kappa, "kappa", &lines)?;
    let k = total(&graph, &k, "K", &lines)?;
    let problem = KwProblem::new(graph, kappa, k.clone(), lambda, strict).map_err(|e| {
        let line = match &e {
            KwError::HypothesesViolated(msg) if msg.starts_with("max K") => {
                let at = (0..k.len()).max_by(|&a, &b| k[a].total_cmp(&k[b])).unwrap_or(0);
                lines.get(&format!("K {}", vertices[at].0)).copied()
            }
            _ => None,
        };
        validation(line, e.to_string())
    })?;
    Ok(ProblemFile { problem, lines })
}

fn validation(line: Option<usize>, reason: String) -> CliError {
    CliError::Validation { line, reason }
}

/// Assembles κ or K in vertex order, naming the first gap or stray entry.
fn total(
    graph: &WeightedGraph,
    values: &BTreeMap<String, f64>,
    name: &str,
    lines: &BTreeMap<String, usize>,
) -> Result<VertexFunction, CliError> {
    if let Some(id) = values.keys().find(|id| graph.index_of(id).is_none()) {
        return Err(validation(
            lines.get(&format!("{name} {id}")).copied(),
            format!("{name} given for undeclared vertex `{id}`"),
        ));
    }
    let mut out = Vec::with_capacity(graph.len());
    for id in graph.ids() {
        match values.get(id) {
            Some(&v) => out.push(v),
            None => {
                return Err(validation(
                    lines.get(&format!("vertex {id}")).copied(),
                    format!("{name} not total: no value for vertex `{id}`"),
                ))
            }
        }
    }
    VertexFunction::new(out).map_err(|e| validation(None, e.to_string()))
}

/// Best-effort line number for a graph validation failure.
fn graph_error_line(e: &KwError, text: &str) -> Option<usize> {
    let vertex_line = |id: &str, nth: usize| -> Option<usize> {
        line_matching(text, |t| t.len() == 3 && t[0] == "vertex" && t[1] == id, nth)
    };
    let edge_line = |pred: &dyn Fn(&str, &str) -> bool| -> Option<usize> {
        line_matching(text, |t| t.len() == 4 && t[0] == "edge" && pred(t[1], t[2]), 0)
    };
    match e {
        KwError::DuplicateVertex(id) => vertex_line(id, 1),
        KwError::NonPositiveMeasure { vertex, .. } => vertex_line(vertex, 0),
        KwError::UnknownVertex(id) => edge_line(&|a, b| a == id || b == id),
        KwError::SelfLoop(id) => edge_line(&|a, b| a == id && b == id),
        KwError::NonPositiveWeight { a, b, .. } | KwError::DuplicateEdge { a, b, .. } => {
            let same = |x: &str, y: &str| (x == a && y == b) || (x == b && y == a);
            if matches!(e, KwError::DuplicateEdge { .. }) {
                line_matching(text, |t| t.len() == 4 && t[0] == "edge" && same(t[1], t[2]), 1)
            } else {
                edge_line(&same)
            }
        }
        _ => None,
    }
}

fn line_matching(text: &str, pred: impl Fn(&[&str]) -> bool, nth: usize) -> Option<usize> {
    text.lines()
        .enumerate()
        .filter(|(_, raw)| {
            let tokens: Vec<&str> = raw.split('#').next().unwrap_or("").split_whitespace().collect();
            pred(&tokens)
        })
        .nth(nth)
        .map(|(i, _)| i + 1)
}

/// Writes `p` in the problem-file format. Numbers use the shortest
/// representation that parses back to the same `f64`.
pub fn emit_problem(p: &KwProblem) -> String {
    let g = p.graph();
    let mut out = String::new();
    let mode = if p.is_strict() { "strict" } else { "relaxed" };
    let _ = writeln!(out, "mode {mode}");
    let _ = writeln!(out, "lambda {}", p.lambda());
    for (id, mu) in g.ids().iter().zip(g.measure()) {
        let _ = writeln!(out, "vertex {id} {mu}");
    }
    for e in g.edges() {
        let _ = writeln!(out, "edge {} {} {}", g.ids()[e.a], g.ids()[e.b], e.weight);
    }
    for (x, id) in g.ids().iter().enumerate() {
        let _ = writeln!(out, "kappa {id} {}", p.kappa()[x]);
    }
    for (x, id) in g.ids().iter().enumerate() {
        let _ = writeln!(out, "K {id} {}", p.k()[x]);
    }
    out
}
