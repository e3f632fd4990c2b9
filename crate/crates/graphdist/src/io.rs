//! File formats: edge-list TSV graphs, matrix CSV with meta sidecars,
//! label/partition TSV, ranking and coordinate CSV.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::dist::{DistanceMatrix, Method, Params};
use crate::error::{Error, Result};
use crate::graph::CostedGraph;

/// Format a float with 17 significant decimal digits, enough to round-trip
/// any f64 bit pattern.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parse an edge-list TSV: one `u<TAB>v<TAB>affinity[<TAB>cost]` edge per
/// line, `#` comments and blank lines ignored, undirected edges listed once.
/// Missing costs default to the reciprocal of the affinity.
pub fn load_graph(path: impl AsRef<Path>) -> Result<CostedGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_graph(&text, &path.display().to_string())
}

pub fn parse_graph(text: &str, origin: &str) -> Result<CostedGraph> {
    let mut edges: Vec<(usize, usize, f64, f64)> = Vec::new();
    let mut max_id = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 || fields.len() > 4 {
            return Err(Error::Parse {
                path: origin.into(),
                line: lineno + 1,
                msg: format!("expected 3 or 4 tab-separated fields, got {}", fields.len()),
            });
        }
        let parse_num = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                path: origin.into(),
                line: lineno + 1,
                msg: format!("bad {what} value {s:?}"),
            })
        };
        let parse_id = |s: &str, what: &str| -> Result<usize> {
            s.parse::<usize>().map_err(|_| Error::Parse {
                path: origin.into(),
                line: lineno + 1,
                msg: format!("bad {what} node id {s:?}"),
            })
        };
        let u = parse_id(fields[0], "source")?;
        let v = parse_id(fields[1], "target")?;
        let a = parse_num(fields[2], "affinity")?;
        let c = if fields.len() == 4 {
            parse_num(fields[3], "cost")?
        } else {
            1.0 / a
        };
        max_id = max_id.max(u).max(v);
        edges.push((u, v, a, c));
    }
    if edges.is_empty() {
        return Err(Error::Parse {
            path: origin.into(),
            line: 0,
            msg: "no edges".into(),
        });
    }
    CostedGraph::new(max_id + 1, &edges)
}

/// Render a graph as 4-column TSV; `parse_graph` of the result round-trips
/// bit-identically.
pub fn graph_to_tsv(g: &CostedGraph) -> String {
    let mut out = String::new();
    writeln!(out, "# u\tv\taffinity\tcost").unwrap();
    for e in g.edges() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            e.u,
            e.v,
            format_f64(e.affinity),
            format_f64(e.cost)
        )
        .unwrap();
    }
    out
}

pub fn save_graph(g: &CostedGraph, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, graph_to_tsv(g))?;
    Ok(())
}

/// Write a dense matrix as headerless CSV, one row per line, 17 significant
/// digits per entry.
pub fn write_matrix_csv(path: impl AsRef<Path>, m: &nalgebra::DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_f64(m[(i, j)])).collect();
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<nalgebra::DMatrix<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: format!("bad float {s:?}"),
                })
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 0,
            msg: "ragged rows".into(),
        });
    }
    Ok(nalgebra::DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct MatrixMeta {
    pub method: Method,
    pub params: Params,
    pub n: usize,
    pub graph_sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write a distance matrix as CSV plus a `<path>.meta.json` sidecar recording
/// the method, parameters, size, and a hash of the source graph bytes.
pub fn write_distance_csv(
    path: impl AsRef<Path>,
    d: &DistanceMatrix,
    graph_bytes: &[u8],
) -> Result<()> {
    let path = path.as_ref();
    write_matrix_csv(path, d.matrix())?;
    let meta = MatrixMeta {
        method: d.method(),
        params: *d.params(),
        n: d.n(),
        graph_sha256: sha256_hex(graph_bytes),
    };
    let meta_path = format!("{}.meta.json", path.display());
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    std::fs::write(meta_path, json)?;
    Ok(())
}

/// Write node labels (or cluster assignments) as `node<TAB>label` TSV.
pub fn write_labels_tsv(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let mut out = String::new();
    for (node, label) in labels.iter().enumerate() {
        writeln!(out, "{node}\t{label}").unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a `node<TAB>label` TSV as (node, label) pairs; nodes may be sparse.
pub fn read_labels_tsv(path: impl AsRef<Path>) -> Result<Vec<(usize, usize)>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split('\t');
        let parse = |field: Option<&str>, what: &str| -> Result<usize> {
            field
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    msg: format!("bad {what}"),
                })
        };
        let node = parse(it.next(), "node id")?;
        let label = parse(it.next(), "label")?;
        pairs.push((node, label));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures;

    #[test]
    fn parse_two_and_three_column_lines() {
        let g = parse_graph("0\t1\t1.0\n", "test").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edges()[0].cost, 1.0);

        let g = parse_graph("0\t1\t2.0\n", "test").unwrap();
        assert_eq!(g.edges()[0].affinity, 2.0);
        assert_eq!(g.edges()[0].cost, 0.5);

        let g = parse_graph("0\t1\t2.0\t7.0\n", "test").unwrap();
        assert_eq!(g.edges()[0].cost, 7.0);
    }

    #[test]
    fn parse_reports_line_numbers() {
        let err = parse_graph("# header\n0\t1\t1.0\nbogus line\n", "somefile").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn graph_roundtrip_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let g = crate::graph::CostedGraph::new(
            3,
            &[(0, 1, 0.1 + 0.2, 1.0 / 3.0), (1, 2, 1.5e-7, 7.25)],
        )
        .unwrap();
        let path = dir.path().join("g.tsv");
        save_graph(&g, &path).unwrap();
        let g2 = load_graph(&path).unwrap();
        assert_eq!(g.edges(), g2.edges());
        for fixture in ["k2", "path-3", "ext-triangle", "hub-4-3", "barbell-7"] {
            let g = fixtures::by_name(fixture).unwrap();
            save_graph(&g, &path).unwrap();
            let g2 = load_graph(&path).unwrap();
            assert_eq!(g.edges(), g2.edges());
        }
    }

    #[test]
    fn matrix_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0 / 3.0, 0.1, 2e-300]);
        write_matrix_csv(&path, &m).unwrap();
        let back = read_matrix_csv(&path).unwrap();
        assert_eq!(m, back);
    }
}
