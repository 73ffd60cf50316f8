//! Grid function artifacts: CSV with a commented header and a binary
//! container.
//!
//! CSV columns are `x1..xN, y1..yk, value`, one row per node in row-major
//! order. Lines starting with `#` are comments; a `# grid: {json}` comment
//! pins the axes exactly, otherwise they are inferred from the node
//! coordinates.
//!
//! The binary container is the magic `GRSHGF01`, a little-endian `u32`
//! header length, a JSON header `{"grid": .., "meta": ..}` and the values as
//! little-endian `f64`.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{Axis, Grid, GridFunction};

pub const MAGIC: &[u8; 8] = b"GRSHGF01";

/// Column names for a grid function with `n` x-axes and `k` y-axes.
pub fn csv_header(n: usize, k: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).chain((1..=k).map(|j| format!("y{j}"))).chain(["value".into()]).collect()
}

/// Writes `f` as CSV, preceded by `comments` (one `# ` line each).
pub fn write_csv<W: Write>(mut w: W, f: &GridFunction, comments: &[String]) -> Result<()> {
    let grid = f.grid();
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "# grid: {}", serde_json::to_string(grid)?)?;
    writeln!(w, "{}", csv_header(grid.n(), grid.k()).join(","))?;
    let mut row = vec![0.0; grid.n() + grid.k()];
    for (flat, v) in f.values().iter().enumerate() {
        for (slot, (a, i)) in row.iter_mut().zip(grid.axes().zip(grid.multi_index(flat))) {
            *slot = a.node(i);
        }
        let cells: Vec<String> = row.iter().chain([v]).map(|c| c.to_string()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("line {line}: {msg}"))
}

/// Reads a grid function written by [`write_csv`] or any CSV with the same
/// columns on a uniform cell-centred tensor grid.
pub fn read_csv<R: BufRead>(r: R) -> Result<GridFunction> {
    let mut pinned: Option<Grid> = None;
    let mut header: Option<(usize, usize)> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(c) = t.strip_prefix('#') {
            if let Some(g) = c.trim().strip_prefix("grid:") {
                pinned = Some(serde_json::from_str(g.trim()).map_err(|e| parse_err(i + 1, e))?);
            }
            continue;
        }
        let cells: Vec<&str> = t.split(',').map(str::trim).collect();
        match header {
            None => {
                let n = cells.iter().filter(|c| c.starts_with('x')).count();
                let k = cells.iter().filter(|c| c.starts_with('y')).count();
                let expect = csv_header(n, k);
                if n == 0 || k == 0 || cells != expect {
                    return Err(parse_err(i + 1, format!("expected header {}", expect.join(","))));
                }
                header = Some((n, k));
            }
            Some((n, k)) => {
                if cells.len() != n + k + 1 {
                    return Err(parse_err(i + 1, format!("expected {} columns", n + k + 1)));
                }
                let row = cells
                    .iter()
                    .map(|c| c.parse::<f64>().map_err(|e| parse_err(i + 1, e)))
                    .collect::<Result<Vec<_>>>()?;
                rows.push(row);
            }
        }
    }
    let (n, k) = header.ok_or_else(|| Error::Parse("missing header".into()))?;
    let grid = match pinned {
        Some(g) => validated(g)?,
        None => infer_grid(&rows, n, k)?,
    };
    if grid.n() != n || grid.k() != k || grid.len() != rows.len() {
        return Err(Error::Parse(format!("{} rows do not fill the grid of {} nodes", rows.len(), grid.len())));
    }
    let d = n + k;
    for (flat, row) in rows.iter().enumerate() {
        for ((a, i), c) in grid.axes().zip(grid.multi_index(flat)).zip(row) {
            if (a.node(i) - c).abs() > 1e-9 * a.spacing() {
                return Err(Error::Parse(format!("row {flat} is not at node {i} of its axis (row-major order)")));
            }
        }
    }
    GridFunction::new(grid, rows.into_iter().map(|r| r[d]).collect())
}

fn validated(g: Grid) -> Result<Grid> {
    Grid::new(g.x_axes().to_vec(), g.y_axes().to_vec())
}

fn infer_grid(rows: &[Vec<f64>], n: usize, k: usize) -> Result<Grid> {
    let mut axes = Vec::with_capacity(n + k);
    for c in 0..n + k {
        let mut vals: Vec<f64> = rows.iter().map(|r| r[c]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        if vals.len() < 2 {
            return Err(Error::Parse(format!("column {} needs at least two distinct nodes", c + 1)));
        }
        let h = (vals[vals.len() - 1] - vals[0]) / (vals.len() - 1) as f64;
        if vals.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
            return Err(Error::NonUniformSpacing(csv_header(n, k)[c].clone()));
        }
        axes.push(Axis::new(vals[0] - 0.5 * h, vals[vals.len() - 1] + 0.5 * h, vals.len())?);
    }
    let ys = axes.split_off(n);
    Grid::new(axes, ys)
}

#[derive(Serialize, Deserialize)]
struct Header {
    grid: Grid,
    meta: Value,
}

/// Encodes `f` and free-form metadata into the binary container.
pub fn to_bytes(f: &GridFunction, meta: &Value) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(&Header { grid: f.grid().clone(), meta: meta.clone() })?;
    let len = u32::try_from(header.len()).map_err(|_| Error::Parse("header too large".into()))?;
    let mut out = Vec::with_capacity(12 + header.len() + 8 * f.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&header);
    for v in f.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Decodes the binary container into the function and its metadata.
pub fn from_bytes(bytes: &[u8]) -> Result<(GridFunction, Value)> {
    let mut r = bytes;
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| Error::Parse("truncated container".into()))?;
    if &magic != MAGIC {
        return Err(Error::Parse("not a grid function container".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len).map_err(|_| Error::Parse("truncated container".into()))?;
    let len = u32::from_le_bytes(len) as usize;
    if r.len() < len {
        return Err(Error::Parse("truncated header".into()));
    }
    let header: Header = serde_json::from_slice(&r[..len])?;
    let body = &r[len..];
    if body.len() != 8 * header.grid.len() {
        return Err(Error::Parse(format!("expected {} values, found {} bytes", header.grid.len(), body.len())));
    }
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    Ok((GridFunction::new(validated(header.grid)?, values)?, header.meta))
}

/// Writes rows of numbers under a header, preceded by `# ` comments.
pub fn write_table<W: Write>(mut w: W, comments: &[String], header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(n: usize, k: usize) -> GridFunction {
        let g = Grid::new(
            vec![Axis::new(-1.0, 2.0, 3).unwrap(); n],
            vec![Axis::new(-0.5, 0.5, 4).unwrap(); k],
        )
        .unwrap();
        GridFunction::from_fn(g, |x, y| x.iter().sum::<f64>() * 0.1 + y.iter().product::<f64>() / 3.0).unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        for (n, k) in [(1, 1), (2, 1), (1, 2)] {
            let f = sample(n, k);
            let mut buf = Vec::new();
            write_csv(&mut buf, &f, &["config: {}".into()]).unwrap();
            let text = String::from_utf8(buf.clone()).unwrap();
            assert!(text.starts_with("# config: {}\n# grid: "));
            assert_eq!(read_csv(&buf[..]).unwrap(), f);
        }
    }

    #[test]
    fn csv_without_grid_comment_infers_axes() {
        let text = "x1,y1,value\n-0.5,0,1\n-0.5,1,2\n0.5,0,3\n0.5,1,4\n";
        let f = read_csv(text.as_bytes()).unwrap();
        assert_eq!(f.grid().x_axes()[0], Axis::new(-1.0, 1.0, 2).unwrap());
        assert_eq!(f.grid().y_axes()[0], Axis::new(-0.5, 1.5, 2).unwrap());
        assert_eq!(f.values(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(read_csv("a,b\n".as_bytes()).is_err());
        assert!(read_csv("x1,y1,value\n0,0,nope\n0,1,1\n".as_bytes()).is_err());
        // Column-major order.
        assert!(read_csv("x1,y1,value\n0,0,1\n1,0,2\n0,1,3\n1,1,4\n".as_bytes()).is_err());
        assert!(matches!(
            read_csv("x1,y1,value\n0,0,1\n0,1,1\n1,0,1\n1,1,1\n3,0,1\n3,1,1\n".as_bytes()),
            Err(Error::NonUniformSpacing(_))
        ));
        assert!(read_csv("".as_bytes()).is_err());
    }

    #[test]
    fn binary_rejects_corruption() {
        let f = sample(1, 1);
        let bytes = to_bytes(&f, &Value::Null).unwrap();
        assert!(from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(from_bytes(&bytes[..6]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(from_bytes(&bad).is_err());
    }

    proptest! {
        #[test]
        fn binary_round_trip(vals in proptest::collection::vec(-1e300f64..1e300, 12), tag in "[a-z]{0,8}") {
            let g = Grid::cube(1, 1, 1.0, 2).unwrap();
            let g = Grid::new(g.x_axes().to_vec(), vec![Axis::new(0.0, 3.0, 6).unwrap()]).unwrap();
            let f = GridFunction::new(g, vals).unwrap();
            let meta = serde_json::json!({ "tag": tag });
            let (back, m) = from_bytes(&to_bytes(&f, &meta).unwrap()).unwrap();
            prop_assert_eq!(back, f);
            prop_assert_eq!(m, meta);
        }
    }
}
