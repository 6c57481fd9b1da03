//! Parsing of `--graph` specifications.

use std::fs::File;
use std::io::BufReader;

use anyhow::{bail, Context, Result};
use sis_bounds::graph::{self, Graph};

/// A graph together with the label used in reports.
pub struct NamedGraph {
    pub label: String,
    pub graph: Graph,
}

/// Accepts `star6`, `star:6`, `cycle:n`, `path:n`, `clique:n`,
/// `er:n:p:seed`, `ws:n:k:p:seed`, `spider:arms:len` and `file:path`.
pub fn parse_graph(spec: &str) -> Result<NamedGraph> {
    if let Some(path) = spec.strip_prefix("file:") {
        let f = File::open(path).with_context(|| format!("opening edge list {path}"))?;
        let graph = Graph::read_edge_list(BufReader::new(f)).with_context(|| format!("reading {path}"))?;
        return Ok(NamedGraph {
            label: spec.to_string(),
            graph,
        });
    }
    let (name, args) = split_spec(spec);
    let num = |k: usize| -> Result<usize> {
        args.get(k)
            .with_context(|| format!("{name} needs argument {}", k + 1))?
            .parse()
            .with_context(|| format!("bad integer in {spec:?}"))
    };
    let real = |k: usize| -> Result<f64> {
        args.get(k)
            .with_context(|| format!("{name} needs argument {}", k + 1))?
            .parse()
            .with_context(|| format!("bad number in {spec:?}"))
    };
    let expect = |count: usize| -> Result<()> {
        if args.len() != count {
            bail!("{name} takes {count} argument(s), got {} in {spec:?}", args.len());
        }
        Ok(())
    };
    let graph = match name {
        "star" | "cycle" | "path" | "clique" => {
            expect(1)?;
            let n = num(0)?;
            match name {
                "star" => graph::star(n)?,
                "cycle" => graph::cycle(n)?,
                "path" => graph::path(n)?,
                _ => graph::clique(n)?,
            }
        }
        "er" => {
            expect(3)?;
            graph::erdos_renyi(num(0)?, real(1)?, args[2].parse().context("bad seed")?)?
        }
        "ws" => {
            expect(4)?;
            graph::watts_strogatz(num(0)?, num(1)?, real(2)?, args[3].parse().context("bad seed")?)?
        }
        "spider" => {
            expect(2)?;
            graph::spider(num(0)?, num(1)?)?
        }
        _ => bail!("unknown graph generator {name:?} in {spec:?}"),
    };
    Ok(NamedGraph {
        label: spec.to_string(),
        graph,
    })
}

/// `star6` and `star:6` both give `("star", ["6"])`.
fn split_spec(spec: &str) -> (&str, Vec<&str>) {
    if spec.contains(':') {
        let mut it = spec.split(':');
        let name = it.next().unwrap_or_default();
        return (name, it.collect());
    }
    match spec.find(|c: char| c.is_ascii_digit()) {
        Some(k) if k > 0 => (&spec[..k], vec![&spec[k..]]),
        _ => (spec, Vec::new()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compact_and_colon_forms_agree() {
        let a = parse_graph("star6").unwrap().graph;
        let b = parse_graph("star:6").unwrap().graph;
        assert_eq!(a, b);
        assert_eq!(a.edge_count(), 5);
        assert_eq!(parse_graph("path3").unwrap().graph.edge_count(), 2);
    }

    #[test]
    fn parameterized_generators() {
        assert_eq!(parse_graph("ws:10:2:0:1").unwrap().graph, graph::cycle(10).unwrap());
        assert_eq!(parse_graph("spider:3:2").unwrap().graph.node_count(), 7);
        let a = parse_graph("er:30:0.2:5").unwrap().graph;
        assert_eq!(a, graph::erdos_renyi(30, 0.2, 5).unwrap());
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["blob7", "star", "star:x", "er:10:0.1", "ws:10:3:0.1:1", "cycle:2", "file:/nonexistent/x"] {
            assert!(parse_graph(bad).is_err(), "{bad}");
        }
    }
}
