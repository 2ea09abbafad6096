//! Space-time snapshot matrices: loading, normalization, time windows and
//! persistence.
//!
//! Matrix-text layout:
//!
//! ```text
//! n m
//! x_0 … x_{n-1}
//! t_0 … t_{m-1}
//! u(x_0, t_0) … u(x_0, t_{m-1})
//! …                              (n rows, one per spatial point)
//! ```
//!
//! CSV layout is long format with header `x,t,u`, one grid point per row in
//! any order; the grid must be complete.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::DomainScales;
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotFormat {
    MatrixText,
    Csv,
}

impl SnapshotFormat {
    /// `.csv` files are long-format CSV, anything else matrix-text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => SnapshotFormat::Csv,
            _ => SnapshotFormat::MatrixText,
        }
    }
}

/// `n × m` solution values, rows indexed by space and columns by time, with
/// the physical axes and their normalized images.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    name: String,
    u: Matrix,
    x_phys: Vec<f64>,
    t_phys: Vec<f64>,
    x_norm: Vec<f64>,
    t_norm: Vec<f64>,
    scales: DomainScales,
}

/// Normalized axes and the factors that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAxes {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub scales: DomainScales,
}

/// Maps `t` onto `[0, 1]` and `x` onto `[−1, 1]`.
pub fn normalize_domain(x: &[f64], t: &[f64]) -> Result<NormalizedAxes> {
    check_axis("x", x)?;
    check_axis("t", t)?;
    let (t0, t1) = (t[0], t[t.len() - 1]);
    let (x0, x1) = (x[0], x[x.len() - 1]);
    if t1 <= t0 || x1 <= x0 {
        return Err(Error::arg("degenerate axis: need at least two distinct points"));
    }
    let s_t = t1 - t0;
    let s_x = (x1 - x0) / 2.0;
    let x_mid = (x1 + x0) / 2.0;
    let mut tn: Vec<f64> = t.iter().map(|v| (v - t0) / s_t).collect();
    let mut xn: Vec<f64> = x.iter().map(|v| (v - x_mid) / s_x).collect();
    // pin the endpoints against rounding
    let (nt, nx) = (tn.len(), xn.len());
    tn[0] = 0.0;
    tn[nt - 1] = 1.0;
    xn[0] = -1.0;
    xn[nx - 1] = 1.0;
    Ok(NormalizedAxes {
        x: xn,
        t: tn,
        scales: DomainScales::new(s_t, s_x)?,
    })
}

fn check_axis(label: &str, axis: &[f64]) -> Result<()> {
    if axis.len() < 2 {
        return Err(Error::arg(format!("{label} axis needs at least two points")));
    }
    if let Some(i) = axis.iter().position(|v| !v.is_finite()) {
        return Err(Error::arg(format!("{label} axis entry {i} is not finite")));
    }
    if let Some(i) = axis.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::arg(format!(
            "{label} axis not strictly increasing at index {}",
            i + 1
        )));
    }
    Ok(())
}

impl SnapshotMatrix {
    /// Builds a snapshot from physical axes and an `x.len() × t.len()` matrix.
    pub fn new(name: impl Into<String>, x: Vec<f64>, t: Vec<f64>, u: Matrix) -> Result<Self> {
        if u.shape() != (x.len(), t.len()) {
            return Err(Error::DimensionMismatch(format!(
                "values are {}×{}, axes give {}×{}",
                u.rows(),
                u.cols(),
                x.len(),
                t.len()
            )));
        }
        let axes = normalize_domain(&x, &t)?;
        Ok(Self {
            name: name.into(),
            u,
            x_phys: x,
            t_phys: t,
            x_norm: axes.x,
            t_norm: axes.t,
            scales: axes.scales,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &Matrix {
        &self.u
    }

    pub fn n(&self) -> usize {
        self.u.rows()
    }

    pub fn m(&self) -> usize {
        self.u.cols()
    }

    pub fn x_phys(&self) -> &[f64] {
        &self.x_phys
    }

    pub fn t_phys(&self) -> &[f64] {
        &self.t_phys
    }

    pub fn x_norm(&self) -> &[f64] {
        &self.x_norm
    }

    pub fn t_norm(&self) -> &[f64] {
        &self.t_norm
    }

    pub fn scales(&self) -> DomainScales {
        self.scales
    }

    pub fn value(&self, x_index: usize, t_index: usize) -> f64 {
        self.u[(x_index, t_index)]
    }

    /// The same data re-expressed on the normalized axes.
    pub fn normalized(&self) -> Self {
        Self::new(
            self.name.clone(),
            self.x_norm.clone(),
            self.t_norm.clone(),
            self.u.clone(),
        )
        .expect("normalized axes are valid")
    }

    /// Columns of one time window.
    pub fn window_values(&self, w: &TimeWindow) -> Matrix {
        self.u.column_range(w.col_start, w.col_end)
    }

    pub fn subdivide_time(&self, t_div: usize) -> Result<Vec<TimeWindow>> {
        subdivide_time(self.m(), t_div)
    }
}

/// Contiguous column range `[col_start, col_end)` of a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub index: usize,
    pub col_start: usize,
    pub col_end: usize,
}

impl TimeWindow {
    pub fn len(&self) -> usize {
        self.col_end - self.col_start
    }

    pub fn is_empty(&self) -> bool {
        self.col_end == self.col_start
    }
}

/// `round(num/den)` with ties to even, exactly.
fn round_ratio(num: usize, den: usize) -> usize {
    let (q, rem) = (num / den, num % den);
    match (2 * rem).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => q + (q & 1),
    }
}

/// Splits `m` columns into `t_div` windows with boundaries `round(i·m/t_div)`.
pub fn subdivide_time(m: usize, t_div: usize) -> Result<Vec<TimeWindow>> {
    if t_div == 0 || t_div > m {
        return Err(Error::arg(format!(
            "t_div must be in 1..={m}, got {t_div}"
        )));
    }
    Ok((0..t_div)
        .map(|i| TimeWindow {
            index: i,
            col_start: round_ratio(i * m, t_div),
            col_end: round_ratio((i + 1) * m, t_div),
        })
        .collect())
}

// ---------- persistence ----------

pub fn load_snapshot(path: &Path, format: SnapshotFormat) -> Result<SnapshotMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("snapshot")
        .to_string();
    match format {
        SnapshotFormat::MatrixText => parse_matrix_text(&text, &name, path),
        SnapshotFormat::Csv => parse_csv(&text, &name, path),
    }
}

pub fn save_snapshot(s: &SnapshotMatrix, path: &Path, format: SnapshotFormat) -> Result<()> {
    if path.as_os_str().is_empty() {
        return Err(Error::arg("empty output path"));
    }
    let text = match format {
        SnapshotFormat::MatrixText => to_matrix_text(s),
        SnapshotFormat::Csv => to_csv(s),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn join(values: &[f64]) -> String {
    let mut out = String::with_capacity(values.len() * 24);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v:.16e}");
    }
    out
}

pub fn to_matrix_text(s: &SnapshotMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", s.n(), s.m());
    let _ = writeln!(out, "{}", join(&s.x_phys));
    let _ = writeln!(out, "{}", join(&s.t_phys));
    for i in 0..s.n() {
        let _ = writeln!(out, "{}", join(s.u.row(i)));
    }
    out
}

pub fn to_csv(s: &SnapshotMatrix) -> String {
    let mut out = String::from("x,t,u\n");
    for i in 0..s.n() {
        for j in 0..s.m() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e}",
                s.x_phys[i], s.t_phys[j], s.u[(i, j)]
            );
        }
    }
    out
}

pub fn parse_matrix_text(text: &str, name: &str, path: &Path) -> Result<SnapshotMatrix> {
    let perr = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let parse_row = |no: usize, line: &str, expect: usize, what: &str| -> Result<Vec<f64>> {
        let vals = line
            .split_whitespace()
            .map(|tok| {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| perr(no, format!("bad number `{tok}` in {what}")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(perr(no, format!("non-finite value `{tok}` in {what}")))
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != expect {
            return Err(perr(
                no,
                format!("{what}: expected {expect} values, found {}", vals.len()),
            ));
        }
        Ok(vals)
    };

    let (no, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| perr(no, format!("malformed header `{header}`, expected `n m`")))?;
    let [n, m] = dims[..] else {
        return Err(perr(no, format!("malformed header `{header}`, expected `n m`")));
    };
    if n < 2 || m < 2 {
        return Err(perr(no, format!("grid {n}×{m} too small")));
    }

    let (no, line) = lines.next().ok_or_else(|| perr(no + 1, "missing x axis".into()))?;
    let x = parse_row(no, line, n, "x axis")?;
    check_axis("x", &x).map_err(|e| perr(no, e.to_string()))?;
    let (no, line) = lines.next().ok_or_else(|| perr(no + 1, "missing t axis".into()))?;
    let t = parse_row(no, line, m, "t axis")?;
    check_axis("t", &t).map_err(|e| perr(no, e.to_string()))?;

    let mut data = Vec::with_capacity(n * m);
    let mut last = no;
    for i in 0..n {
        let (no, line) = lines
            .next()
            .ok_or_else(|| perr(last + 1, format!("missing value row {i}")))?;
        data.extend(parse_row(no, line, m, &format!("value row {i}"))?);
        last = no;
    }
    if let Some((no, _)) = lines.next() {
        return Err(perr(no, "trailing data after value rows".into()));
    }
    SnapshotMatrix::new(name, x, t, Matrix::new(n, m, data)?)
}

#[derive(Deserialize)]
struct CsvRow {
    x: f64,
    t: f64,
    u: f64,
}

fn parse_csv(text: &str, name: &str, path: &Path) -> Result<SnapshotMatrix> {
    let perr = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x", "t", "u"] {
        return Err(perr(1, format!("expected header `x,t,u`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    // key by bit pattern so equal coordinates share a grid line
    let mut cells: BTreeMap<(u64, u64), (f64, usize)> = BTreeMap::new();
    let mut xs = BTreeMap::new();
    let mut ts = BTreeMap::new();
    for (k, rec) in rdr.deserialize::<CsvRow>().enumerate() {
        let line = k + 2;
        let row = rec.map_err(|e| perr(line, e.to_string()))?;
        if !(row.x.is_finite() && row.t.is_finite() && row.u.is_finite()) {
            return Err(perr(line, "non-finite entry".into()));
        }
        let key = (ord_key(row.x), ord_key(row.t));
        if cells.insert(key, (row.u, line)).is_some() {
            return Err(perr(line, format!("duplicate grid point x={}, t={}", row.x, row.t)));
        }
        xs.insert(ord_key(row.x), row.x);
        ts.insert(ord_key(row.t), row.t);
    }
    let x: Vec<f64> = xs.values().copied().collect();
    let t: Vec<f64> = ts.values().copied().collect();
    if cells.len() != x.len() * t.len() {
        return Err(perr(
            cells.len() + 1,
            format!(
                "incomplete grid: {} points for {}×{} axes",
                cells.len(),
                x.len(),
                t.len()
            ),
        ));
    }
    let xi: BTreeMap<u64, usize> = xs.keys().enumerate().map(|(i, k)| (*k, i)).collect();
    let ti: BTreeMap<u64, usize> = ts.keys().enumerate().map(|(i, k)| (*k, i)).collect();
    let mut u = Matrix::zeros(x.len(), t.len());
    for ((kx, kt), (v, _)) in &cells {
        u[(xi[kx], ti[kt])] = *v;
    }
    SnapshotMatrix::new(name, x, t, u).map_err(|e| perr(1, e.to_string()))
}

/// Monotone map from finite `f64` to `u64` preserving numeric order.
fn ord_key(v: f64) -> u64 {
    let v = if v == 0.0 { 0.0 } else { v };
    let b = v.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SnapshotMatrix {
        SnapshotMatrix::new(
            "small",
            vec![-1.0, 1.0],
            vec![0.0, 1.0],
            Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn matrix_text_round_trip() {
        let s = small();
        let text = to_matrix_text(&s);
        let back = parse_matrix_text(&text, "small", Path::new("mem")).unwrap();
        assert_eq!(back, s);
        assert_eq!((back.n(), back.m()), (2, 2));
    }

    #[test]
    fn csv_round_trip_any_order() {
        let s = small();
        let text = "x,t,u\n1,1,4\n-1,0,1\n1,0,3\n-1,1,2\n";
        let back = parse_csv(text, "small", Path::new("mem")).unwrap();
        assert_eq!(back, s);
        let again = parse_csv(&to_csv(&s), "small", Path::new("mem")).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn normalization_examples() {
        let ax = normalize_domain(&[-8.0, 0.0, 8.0], &[0.0, 5.0, 10.0]).unwrap();
        assert_eq!(ax.t[1], 0.5);
        assert_eq!(ax.x, vec![-1.0, 0.0, 1.0]);
        let kdv = normalize_domain(&[-30.0, 30.0], &[0.0, 20.0]).unwrap();
        assert_eq!((kdv.scales.s_x, kdv.scales.s_t), (30.0, 20.0));
        assert!(normalize_domain(&[0.0, 1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn normalization_is_idempotent() {
        let x: Vec<f64> = (0..7).map(|i| -3.0 + 0.7 * i as f64).collect();
        let t: Vec<f64> = (0..5).map(|j| 2.0 + 0.3 * j as f64).collect();
        let s = SnapshotMatrix::new("s", x, t, Matrix::zeros(7, 5)).unwrap();
        let once = s.normalized();
        let twice = once.normalized();
        assert_eq!(once.x_norm(), twice.x_norm());
        assert_eq!(once.t_norm(), twice.t_norm());
        assert_eq!(twice.scales(), DomainScales::new(1.0, 1.0).unwrap());
    }

    #[test]
    fn windows() {
        let w = subdivide_time(201, 2).unwrap();
        assert_eq!((w[0].len(), w[1].len()), (100, 101));
        let w = subdivide_time(9, 3).unwrap();
        assert!(w.iter().all(|w| w.len() == 3));
        let w = subdivide_time(9, 1).unwrap();
        assert_eq!((w[0].col_start, w[0].col_end), (0, 9));
        assert!(subdivide_time(9, 0).is_err());
        assert!(subdivide_time(9, 10).is_err());
    }

    #[test]
    fn parse_errors_name_line() {
        let p = Path::new("f.txt");
        let bad = "2 2\n-1 1\n1 0\n1 2\n3 4\n";
        let e = parse_matrix_text(bad, "f", p).unwrap_err().to_string();
        assert!(e.contains(":3:"), "{e}");
        let nan = "2 2\n-1 1\n0 1\n1 NaN\n3 4\n";
        let e = parse_matrix_text(nan, "f", p).unwrap_err().to_string();
        assert!(e.contains(":4:"), "{e}");
        let e = parse_matrix_text("2 x\n", "f", p).unwrap_err().to_string();
        assert!(e.contains(":1:") && e.contains("header"), "{e}");
        let short = "2 2\n-1 1\n0 1\n1 2\n";
        assert!(parse_matrix_text(short, "f", p).is_err());
    }

    #[test]
    fn empty_path_rejected() {
        assert!(save_snapshot(&small(), Path::new(""), SnapshotFormat::MatrixText).is_err());
    }

    #[test]
    fn ties_to_even() {
        assert_eq!(round_ratio(201, 2), 100);
        assert_eq!(round_ratio(203, 2), 102);
        assert_eq!(round_ratio(7, 3), 2);
        assert_eq!(round_ratio(8, 3), 3);
    }
}
