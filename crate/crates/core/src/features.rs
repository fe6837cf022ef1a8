//! Node feature matrices with a known-entry mask, CSV I/O and the
//! missingness simulators.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng;

/// Dense `nodes × dim` features plus a mask of which entries are observed.
///
/// Unknown entries always hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    values: Array2<f64>,
    known: Array2<bool>,
}

impl FeatureTable {
    pub fn new(mut values: Array2<f64>, known: Array2<bool>) -> Result<Self> {
        if values.dim() != known.dim() {
            return Err(Error::input(format!(
                "feature shape {:?} differs from mask shape {:?}",
                values.dim(),
                known.dim()
            )));
        }
        for (v, &k) in values.iter_mut().zip(known.iter()) {
            if !k {
                *v = 0.0;
            } else if !v.is_finite() {
                return Err(Error::input("known feature entries must be finite"));
            }
        }
        Ok(FeatureTable { values, known })
    }

    pub fn fully_known(values: Array2<f64>) -> Result<Self> {
        let known = Array2::from_elem(values.dim(), true);
        Self::new(values, known)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn known(&self) -> &Array2<bool> {
        &self.known
    }

    pub fn num_nodes(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn unknown_fraction(&self) -> f64 {
        let total = self.known.len();
        if total == 0 {
            return 0.0;
        }
        self.known.iter().filter(|&&k| !k).count() as f64 / total as f64
    }

    /// Rows of `nodes`, in order.
    pub fn select_rows(&self, nodes: &[usize]) -> FeatureTable {
        FeatureTable {
            values: self.values.select(Axis(0), nodes),
            known: self.known.select(Axis(0), nodes),
        }
    }

    /// Copy with every row outside `keep` turned fully unknown.
    pub fn hide_rows(&self, keep: impl Fn(usize) -> bool) -> FeatureTable {
        let mut out = self.clone();
        for i in 0..out.num_nodes() {
            if !keep(i) {
                out.values.row_mut(i).fill(0.0);
                out.known.row_mut(i).fill(false);
            }
        }
        out
    }

    /// Each known entry becomes unknown independently with probability `rate`.
    pub fn mask_uniform(&self, rate: f64, seed: u64) -> Result<FeatureTable> {
        check_rate(rate)?;
        let mut out = self.clone();
        let mut rng = rng::rng_from(seed);
        for (v, k) in out.values.iter_mut().zip(out.known.iter_mut()) {
            if rng.random::<f64>() < rate {
                *v = 0.0;
                *k = false;
            }
        }
        Ok(out)
    }

    /// Each node independently loses its whole feature row with probability `rate`.
    pub fn mask_structural(&self, rate: f64, seed: u64) -> Result<FeatureTable> {
        check_rate(rate)?;
        let mut out = self.clone();
        let mut rng = rng::rng_from(seed);
        for i in 0..out.num_nodes() {
            if rng.random::<f64>() < rate {
                out.values.row_mut(i).fill(0.0);
                out.known.row_mut(i).fill(false);
            }
        }
        Ok(out)
    }

    /// CSV with header `node_id,f0,..`; unknown entries written as `nan`.
    pub fn to_csv(&self) -> String {
        let mut s = csv_header("f", self.dim());
        for i in 0..self.num_nodes() {
            let _ = write!(s, "{i}");
            for j in 0..self.dim() {
                if self.known[[i, j]] {
                    let _ = write!(s, ",{}", self.values[[i, j]]);
                } else {
                    s.push_str(",nan");
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Load a feature CSV. `nan` or empty cells are unknown.
    pub fn load(path: &Path, num_nodes: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path, num_nodes)
    }

    /// Load a feature CSV, taking the node count from its row count.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let n = parse_csv_rows(&text, path)?.len();
        Self::parse(&text, path, n)
    }

    pub(crate) fn parse(text: &str, path: &Path, num_nodes: usize) -> Result<Self> {
        let rows = parse_csv_rows(text, path)?;
        if rows.len() != num_nodes {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: rows.last().map_or(1, |r| r.line),
                message: format!("expected {num_nodes} feature rows, found {}", rows.len()),
            });
        }
        let dim = rows.first().map_or(0, |r| r.cells.len());
        let mut values = Array2::zeros((num_nodes, dim));
        let mut known = Array2::from_elem((num_nodes, dim), false);
        let mut seen = vec![false; num_nodes];
        for row in rows {
            if row.node >= num_nodes || seen[row.node] {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: row.line,
                    message: format!("node id {} out of range or repeated", row.node),
                });
            }
            seen[row.node] = true;
            for (j, cell) in row.cells.into_iter().enumerate() {
                if let Some(v) = cell {
                    values[[row.node, j]] = v;
                    known[[row.node, j]] = true;
                }
            }
        }
        FeatureTable::new(values, known)
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(Error::input(format!("missing rate {rate} not in [0, 1)")))
    }
}

fn csv_header(prefix: &str, dim: usize) -> String {
    let mut s = String::from("node_id");
    for j in 0..dim {
        let _ = write!(s, ",{prefix}{j}");
    }
    s.push('\n');
    s
}

struct CsvRow {
    line: usize,
    node: usize,
    cells: Vec<Option<f64>>,
}

fn parse_csv_rows(text: &str, path: &Path) -> Result<Vec<CsvRow>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((i, l)) => break (i, l),
            None => return Ok(Vec::new()),
        }
    };
    let width = header.1.split(',').count();
    if !header.1.trim_start().starts_with("node_id") {
        return Err(err(header.0 + 1, "missing `node_id,...` header".into()));
    }
    let mut rows = Vec::new();
    for (i, raw) in lines {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(err(
                i + 1,
                format!("expected {width} columns, found {}", fields.len()),
            ));
        }
        let node = fields[0]
            .parse()
            .map_err(|_| err(i + 1, format!("bad node id `{}`", fields[0])))?;
        let cells = fields[1..]
            .iter()
            .map(|f| match *f {
                "" => Ok(None),
                f if f.eq_ignore_ascii_case("nan") => Ok(None),
                f => match f.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(Some(v)),
                    _ => Err(err(i + 1, format!("unparsable number `{f}`"))),
                },
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(CsvRow {
            line: i + 1,
            node,
            cells,
        });
    }
    Ok(rows)
}

/// Dense matrix as CSV with header `node_id,{prefix}0,..`.
pub fn matrix_to_csv(m: &ArrayView2<f64>, prefix: &str) -> String {
    let mut s = csv_header(prefix, m.ncols());
    for (i, row) in m.outer_iter().enumerate() {
        let _ = write!(s, "{i}");
        for v in row {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

pub fn write_matrix_csv(path: &Path, m: &ArrayView2<f64>, prefix: &str) -> Result<()> {
    std::fs::write(path, matrix_to_csv(m, prefix)).map_err(|e| Error::io(path, e))
}

/// Read a fully dense matrix CSV (no missing cells allowed).
pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rows = parse_csv_rows(&text, path)?;
    let n = rows.len();
    let table = FeatureTable::parse(&text, path, n)?;
    if table.unknown_fraction() > 0.0 {
        return Err(Error::input(format!(
            "{}: dense matrix contains missing cells",
            path.display()
        )));
    }
    Ok(table.values)
}
