//! Text format for meshes with per-vertex square-root matrices.
//!
//! ```text
//! avdmesh <n> <num_vertices> <num_simplices>
//! v x y [z] m11 m12 [m13] m22 [m23] [m33]
//! s i j k [l]
//! ```
//!
//! Vertex lines carry the upper triangle of `M`; simplex indices are
//! 0-based. Blank lines are ignored, anything else unrecognised is an error.

use std::fmt::Write as _;

use thiserror::Error;

use super::mesh::{MeshError, SimplicialMetricMesh};
use crate::linalg::{packed_len, SymMat};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Mesh(#[from] MeshError),
}

pub(crate) fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, message: message.into() }
}

pub(crate) fn parse_num<T: Real>(tok: &str, line: usize) -> Result<T, ParseError> {
    let v: T = tok.parse().map_err(|_| syntax(line, format!("invalid number `{tok}`")))?;
    if !v.is_finite() {
        return Err(syntax(line, format!("non-finite number `{tok}`")));
    }
    Ok(v)
}

pub(crate) fn parse_count(tok: &str, line: usize, what: &str) -> Result<usize, ParseError> {
    tok.parse().map_err(|_| syntax(line, format!("invalid {what} `{tok}`")))
}

/// Non-blank lines with their 1-based line numbers.
pub(crate) fn records(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, toks)| !toks.is_empty())
}

/// Reads the header and returns `(dimension, first count, second count)`.
pub(crate) fn parse_header(text: &str, magic: &str, fields: usize) -> Result<(usize, Vec<usize>), ParseError> {
    let (line, toks) = records(text).next().ok_or_else(|| syntax(1, format!("missing `{magic}` header")))?;
    if toks[0] != magic {
        return Err(syntax(line, format!("expected `{magic}` header, found `{}`", toks[0])));
    }
    if toks.len() != fields + 1 {
        return Err(syntax(line, format!("`{magic}` header takes {fields} fields")));
    }
    let n = parse_count(toks[1], line, "dimension")?;
    if n != 2 && n != 3 {
        return Err(syntax(line, format!("unsupported dimension {n}")));
    }
    let counts = toks[2..]
        .iter()
        .map(|t| parse_count(t, line, "count"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((n, counts))
}

/// Dimension declared in an `avdmesh` header.
pub fn mesh_dimension(text: &str) -> Result<usize, ParseError> {
    parse_header(text, "avdmesh", 3).map(|(n, _)| n)
}

pub fn parse_mesh<T: Real, const N: usize>(text: &str) -> Result<SimplicialMetricMesh<T, N>, ParseError> {
    let (n, counts) = parse_header(text, "avdmesh", 3)?;
    if n != N {
        return Err(syntax(1, format!("mesh is {n}-dimensional, expected {N}")));
    }
    let (nv, ns) = (counts[0], counts[1]);
    let mut vertices = Vec::with_capacity(nv);
    let mut mats = Vec::with_capacity(nv);
    let mut simplices = Vec::with_capacity(ns * (N + 1));
    let mut last_line = 1;
    for (line, toks) in records(text).skip(1) {
        last_line = line;
        match toks[0] {
            "v" => {
                let expect = 1 + N + packed_len(N);
                if toks.len() != expect {
                    return Err(syntax(line, format!("vertex line needs {} numbers, found {}", expect - 1, toks.len() - 1)));
                }
                if vertices.len() == nv {
                    return Err(syntax(line, format!("more than the declared {nv} vertices")));
                }
                let nums = toks[1..].iter().map(|t| parse_num::<T>(t, line)).collect::<Result<Vec<_>, _>>()?;
                vertices.push(std::array::from_fn(|k| nums[k]));
                mats.push(SymMat::from_upper(&nums[N..]).expect("length checked"));
            }
            "s" => {
                if toks.len() != N + 2 {
                    return Err(syntax(line, format!("simplex line needs {} indices", N + 1)));
                }
                if simplices.len() == ns * (N + 1) {
                    return Err(syntax(line, format!("more than the declared {ns} simplices")));
                }
                for t in &toks[1..] {
                    let idx = parse_count(t, line, "vertex index")?;
                    if idx >= nv {
                        return Err(syntax(line, format!("vertex index {idx} out of range (0..{nv})")));
                    }
                    simplices.push(idx);
                }
            }
            other => return Err(syntax(line, format!("unknown record `{other}`"))),
        }
    }
    if vertices.len() != nv {
        return Err(syntax(last_line, format!("declared {nv} vertices, found {}", vertices.len())));
    }
    if simplices.len() != ns * (N + 1) {
        return Err(syntax(last_line, format!("declared {ns} simplices, found {}", simplices.len() / (N + 1))));
    }
    Ok(SimplicialMetricMesh::new(vertices, simplices, mats)?)
}

pub fn write_mesh<T: Real, const N: usize>(mesh: &SimplicialMetricMesh<T, N>) -> String {
    let mut out = String::new();
    writeln!(out, "avdmesh {N} {} {}", mesh.num_vertices(), mesh.num_simplices()).unwrap();
    for (p, m) in mesh.vertices().iter().zip(mesh.vertex_sqrt_metrics()) {
        out.push('v');
        for x in p.iter().chain(m.as_sym().upper()) {
            write!(out, " {x}").unwrap();
        }
        out.push('\n');
    }
    for s in 0..mesh.num_simplices() {
        out.push('s');
        for v in mesh.simplex(s) {
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::field::Aabb;

    const TRIANGLE: &str = "avdmesh 2 3 1\nv 0 0 1 0 1\nv 1 0 2 0 2\n\nv 0 1 1 0 1\ns 0 1 2\n";

    #[test]
    fn parses_single_triangle() {
        let mesh = parse_mesh::<f64, 2>(TRIANGLE).unwrap();
        assert_eq!(mesh.num_vertices(), 3);
        assert_eq!(mesh.num_simplices(), 1);
        assert_eq!(mesh.vertex_sqrt_metrics()[1].as_sym().get(0, 0), 2.0);
        assert_eq!(mesh_dimension(TRIANGLE).unwrap(), 2);
    }

    #[test]
    fn malformed_vertex_reports_line() {
        let bad = "avdmesh 2 3 1\nv 0 0 1 0 1\nv 1 0 2 0\nv 0 1 1 0 1\ns 0 1 2\n";
        match parse_mesh::<f64, 2>(bad) {
            Err(ParseError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let bad = "avdmesh 2 3 1\nv 0 0 1 0 1\nv 1 0 2 0 x\nv 0 1 1 0 1\ns 0 1 2\n";
        assert!(matches!(parse_mesh::<f64, 2>(bad), Err(ParseError::Syntax { line: 3, .. })));
    }

    #[test]
    fn rejects_unknown_tokens_and_counts() {
        assert!(parse_mesh::<f64, 2>("avdmesh 2 3 1\n# hi\n").is_err());
        assert!(parse_mesh::<f64, 2>("mesh 2 3 1\n").is_err());
        assert!(parse_mesh::<f64, 2>("avdmesh 4 3 1\n").is_err());
        assert!(parse_mesh::<f64, 3>(TRIANGLE).is_err());
        let short = "avdmesh 2 3 1\nv 0 0 1 0 1\nv 1 0 2 0 2\ns 0 1 2\n";
        assert!(parse_mesh::<f64, 2>(short).is_err());
        let bad_idx = "avdmesh 2 3 1\nv 0 0 1 0 1\nv 1 0 2 0 2\nv 0 1 1 0 1\ns 0 1 3\n";
        assert!(matches!(parse_mesh::<f64, 2>(bad_idx), Err(ParseError::Syntax { line: 5, .. })));
        let indefinite = "avdmesh 2 3 1\nv 0 0 1 2 1\nv 1 0 2 0 2\nv 0 1 1 0 1\ns 0 1 2\n";
        assert!(matches!(parse_mesh::<f64, 2>(indefinite), Err(ParseError::Mesh(_))));
    }

    #[test]
    fn write_then_parse_is_identity() {
        let mesh = SimplicialMetricMesh::<f64, 3>::lattice(Aabb::unit(), [2, 1, 1], |p| {
            SymMat::from_fn(|i, j| if i == j { 1.0 + p[i] / 3.0 } else { 0.01 * p[0] })
        })
        .unwrap();
        let text = write_mesh(&mesh);
        let back = parse_mesh::<f64, 3>(&text).unwrap();
        assert_eq!(back.vertices(), mesh.vertices());
        assert_eq!(back.vertex_sqrt_metrics(), mesh.vertex_sqrt_metrics());
        assert_eq!(write_mesh(&back), text);
    }
}
