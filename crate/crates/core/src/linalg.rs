//! Dense row-major `f64` matrices and the handful of kernels the engines need.
//!
//! Every reduction runs in increasing index order so repeated runs are
//! bitwise identical. No max-subtraction happens here; engines decide how to
//! guard against overflow.

use std::fmt;
use std::io::{Read, Write};
use std::ops::{Index, IndexMut};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    /// Builds a matrix from row-major data, rejecting empty shapes and
    /// non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("matrix must be non-empty, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "expected {} entries for {rows}x{cols}, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i / cols, col: i % cols });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::Shape(format!("row {bad} has {} entries, expected {d}", rows[bad].len())));
        }
        Self::new(n, d, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entry of each column.
    pub fn column_max_abs(&self) -> Vec<f64> {
        let mut out = vec![0.0f64; self.cols];
        for r in 0..self.rows {
            for (o, v) in out.iter_mut().zip(self.row(r)) {
                *o = o.max(v.abs());
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        self.check_same_shape(other, "max_abs_diff")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copy with column `j` multiplied by `scales[j]`, i.e. `self * diag(scales)`.
    pub fn scale_columns(&self, scales: &[f64]) -> Result<Matrix> {
        if scales.len() != self.cols {
            return Err(Error::Shape(format!(
                "scale_columns: {} scales for {} columns",
                scales.len(),
                self.cols
            )));
        }
        let mut out = self.clone();
        for r in 0..out.rows {
            for (v, s) in out.row_mut(r).iter_mut().zip(scales) {
                *v *= s;
            }
        }
        Ok(out)
    }

    /// `self · v`, summing over columns in increasing order.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::Shape(format!("matvec: {}x{} times vector of {}", self.rows, self.cols, v.len())));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(0.0, |acc, (a, b)| acc + a * b))
            .collect())
    }

    /// `selfᵀ · v`, summing over rows in increasing order.
    pub fn matvec_transposed(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.rows {
            return Err(Error::Shape(format!(
                "matvec_transposed: {}x{} (transposed) times vector of {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, vi) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        Ok(out)
    }

    fn check_same_shape(&self, other: &Matrix, op: &str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "{op}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    /// Parses CSV text: one row per line, no header, dimensions inferred.
    pub fn read_csv<R: Read>(reader: R) -> Result<Matrix> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::Io(format!("line {}: bad number {f:?}: {e}", line + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Matrix::from_rows(&rows)
    }

    pub fn read_csv_file(path: impl AsRef<Path>) -> Result<Matrix> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Matrix::read_csv(file)
    }

    /// Writes CSV with 17 significant digits per entry.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for r in 0..self.rows {
            wtr.write_record(self.row(r).iter().map(|v| format!("{v:.16e}")))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Cubic matrix product. Each output entry accumulates `a[i,k]·b[k,j]` for
/// `k = 0, 1, …` starting from zero, matching the naive triple loop bit for bit.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::Shape(format!(
            "matmul: {}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            let brow = &b.data[k * b.cols..(k + 1) * b.cols];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += aik * bv;
            }
        }
    }
    Ok(out)
}

/// `a · bᵀ` without materializing the transpose.
pub fn matmul_bt(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.cols {
        return Err(Error::Shape(format!(
            "matmul_bt: {}x{} times ({}x{})ᵀ",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(Matrix::from_fn(a.rows, b.rows, |i, j| {
        a.row(i).iter().zip(b.row(j)).fold(0.0, |acc, (x, y)| acc + x * y)
    }))
}

pub fn hadamard(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.check_same_shape(b, "hadamard")?;
    Ok(Matrix {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect(),
    })
}

/// Row-wise Kronecker (face-splitting) product: row `i·m + j` of the result
/// is `a_i ⊙ b_j` (0-based).
pub fn rowwise_kron(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.cols {
        return Err(Error::Shape(format!(
            "rowwise_kron: column counts differ ({} vs {})",
            a.cols, b.cols
        )));
    }
    let d = a.cols;
    let mut data = Vec::with_capacity(a.rows * b.rows * d);
    for i in 0..a.rows {
        for j in 0..b.rows {
            data.extend(a.row(i).iter().zip(b.row(j)).map(|(x, y)| x * y));
        }
    }
    Ok(Matrix { rows: a.rows * b.rows, cols: d, data })
}

/// Entry-wise `exp(scale · a)`. Fails if any result overflows, naming the
/// largest offending exponent.
pub fn entrywise_exp(a: &Matrix, scale: f64) -> Result<Matrix> {
    let mut worst: Option<f64> = None;
    let data: Vec<f64> = a
        .data
        .iter()
        .map(|&v| {
            let x = scale * v;
            let e = x.exp();
            if !e.is_finite() {
                worst = Some(worst.map_or(x, |w: f64| w.max(x)));
            }
            e
        })
        .collect();
    if let Some(value) = worst {
        return Err(Error::Overflow { value });
    }
    Ok(Matrix { rows: a.rows, cols: a.cols, data })
}

/// `[a bᵀ · scale]^e`: the exponentiated (scaled) Gram matrix between the rows
/// of `a` and the rows of `b`.
pub fn exp_gram(a: &Matrix, b: &Matrix, scale: f64) -> Result<Matrix> {
    entrywise_exp(&matmul_bt(a, b)?, scale)
}

/// Diagonal of `ms[0] · ms[1] · … · ms[q-1]` for square `n×n` factors.
///
/// The first `q-1` factors are multiplied out in full; the last step only
/// forms the diagonal, `Σ_j P[i,j]·M_q[j,i]`.
pub fn diag_of_chain(ms: &[Matrix]) -> Result<Vec<f64>> {
    if ms.len() < 2 {
        return Err(Error::Shape(format!("diag_of_chain needs at least 2 factors, got {}", ms.len())));
    }
    let n = ms[0].rows;
    if let Some(bad) = ms.iter().position(|m| m.rows != n || m.cols != n) {
        return Err(Error::Shape(format!(
            "diag_of_chain: factor {bad} is {}x{}, expected {n}x{n}",
            ms[bad].rows, ms[bad].cols
        )));
    }
    let (last, head) = ms.split_last().expect("len >= 2");
    let mut prefix = head[0].clone();
    for m in &head[1..] {
        prefix = matmul(&prefix, m)?;
    }
    Ok((0..n)
        .map(|i| (0..n).fold(0.0, |acc, j| acc + prefix[(i, j)] * last[(j, i)]))
        .collect())
}
