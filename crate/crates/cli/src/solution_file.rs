//! Solution CSV: header `solution,lambda,vertex,u`, one row per vertex.

use std::fmt::Write as _;

use kwgraph::{VertexFunction, WeightedGraph};

use crate::CliError;

pub const SOLUTION_HEADER: &str = "solution,lambda,vertex,u";

/// One solution read back from a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct StoredSolution {
    pub index: usize,
    pub lambda: f64,
    pub u: VertexFunction,
}

/// 17 significant digits: enough for every `f64` to round-trip.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn emit_solutions(g: &WeightedGraph, lambda: f64, solutions: &[&VertexFunction]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{SOLUTION_HEADER}");
    for (i, u) in solutions.iter().enumerate() {
        for (x, id) in g.ids().iter().enumerate() {
            let _ = writeln!(out, "{},{},{id},{}", i + 1, fmt_num(lambda), fmt_num(u[x]));
        }
    }
    out
}

/// Reads every solution in `text`; each must assign a value to every vertex
/// of `g` exactly once.
pub fn parse_solutions(g: &WeightedGraph, text: &str) -> Result<Vec<StoredSolution>, CliError> {
    let mut rows = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match rows.next() {
        Some((_, header)) if header.trim() == SOLUTION_HEADER => {}
        _ => {
            return Err(CliError::Parse {
                line: 1,
                reason: format!("expected header `{SOLUTION_HEADER}`"),
            })
        }
    }
    let mut out: Vec<(usize, f64, Vec<Option<f64>>)> = Vec::new();
    for (i, row) in rows {
        let line = i + 1;
        let bad = |reason: String| CliError::Parse { line, reason };
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", fields.len())));
        }
        let index: usize = fields[0]
            .parse()
            .map_err(|_| bad(format!("bad solution index `{}`", fields[0])))?;
        let num = |s: &str| -> Result<f64, CliError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("bad number `{s}`")))
        };
        let lambda = num(fields[1])?;
        let value = num(fields[3])?;
        let x = g
            .index_of(fields[2])
            .ok_or_else(|| bad(format!("unknown vertex `{}`", fields[2])))?;
        let pos = match out.iter().position(|s| s.0 == index) {
            Some(pos) => pos,
            None => {
                out.push((index, lambda, vec![None; g.len()]));
                out.len() - 1
            }
        };
        let entry = &mut out[pos];
        if entry.1 != lambda {
            return Err(bad(format!("solution {index} mixes lambda values")));
        }
        if entry.2[x].replace(value).is_some() {
            return Err(bad(format!("vertex `{}` repeated in solution {index}", fields[2])));
        }
    }
    if out.is_empty() {
        return Err(CliError::Parse {
            line: 1,
            reason: "no solution rows".into(),
        });
    }
    out.into_iter()
        .map(|(index, lambda, values)| {
            let values = values
                .into_iter()
                .enumerate()
                .map(|(x, v)| {
                    v.ok_or_else(|| CliError::Validation {
                        line: None,
                        reason: format!("solution {index} has no value for vertex `{}`", g.ids()[x]),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(StoredSolution {
                index,
                lambda,
                u: VertexFunction::new(values).map_err(|e| CliError::Validation {
                    line: None,
                    reason: e.to_string(),
                })?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use kwgraph::build_graph;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = build_graph(&[("a", 1.0), ("b", 1.0)], &[("a", "b", 1.0)]).unwrap();
        let u = g.function(vec![0.1 + 0.2, -1.0 / 3.0]).unwrap();
        let w = g.function(vec![1e-300, 7.0]).unwrap();
        let text = emit_solutions(&g, 0.003, &[&u, &w]);
        let back = parse_solutions(&g, &text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].u, u);
        assert_eq!(back[1].u, w);
        assert_eq!(back[1].lambda, 0.003);
    }

    #[test]
    fn incomplete_solution_is_rejected() {
        let g = build_graph(&[("a", 1.0), ("b", 1.0)], &[("a", "b", 1.0)]).unwrap();
        let text = "solution,lambda,vertex,u\n1,0,a,0\n";
        assert!(parse_solutions(&g, text).is_err());
        let text = "solution,lambda,vertex,u\n1,0,a,0\n1,0,a,1\n";
        assert!(parse_solutions(&g, text).is_err());
    }
}
