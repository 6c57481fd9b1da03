//! Compressed sparse row storage and the operator abstraction shared by the
//! spectral routines.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A square real linear map that can be applied without materializing it.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// `y = A^T x`, i.e. the row-vector product `x^T A`.
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]);

    /// True iff every entry is `>= 0`.
    fn is_nonnegative(&self) -> bool;

    fn diagonal(&self) -> Vec<f64>;

    fn to_dense(&self) -> DMatrix<f64>;
}

/// Row-major sparse matrix. Explicit zeros are dropped and duplicate
/// coordinates summed on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= rows || c >= cols) {
            return Err(Error::InvalidSize(format!(
                "entry ({r}, {c}) outside a {rows}x{cols} matrix"
            )));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().expect("duplicate follows an entry") += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }

        let mut m = Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        };
        m.drop_zeros();
        Ok(m)
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|&v| v != 0.0) {
            return;
        }
        let mut row_ptr = vec![0usize; self.rows + 1];
        let mut col_idx = Vec::with_capacity(self.col_idx.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.values[k] != 0.0 {
                    col_idx.push(self.col_idx[k]);
                    values.push(self.values[k]);
                }
            }
            row_ptr[r + 1] = col_idx.len();
        }
        self.row_ptr = row_ptr;
        self.col_idx = col_idx;
        self.values = values;
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != 0.0 {
                    t.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t).expect("indices in range")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match span.binary_search(&c) {
            Ok(k) => self.values[self.row_ptr[r] + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (r, out) in y.iter_mut().enumerate() {
            *out = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn mul_vec_transpose(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.rows);
        assert_eq!(y.len(), self.cols);
        y.iter_mut().for_each(|v| *v = 0.0);
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            for (c, v) in self.row(r) {
                y[c] += v * xr;
            }
        }
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.triplets() {
            d[(r, c)] = v;
        }
        d
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols && self.triplets().all(|(r, c, v)| (self.get(c, r) - v).abs() <= tol)
    }

    /// Writes the `dim nnz` header followed by `row col value` lines.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> Result<()> {
        if self.rows != self.cols {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        writeln!(w, "{} {}", self.rows, self.nnz())?;
        for (r, c, v) in self.triplets() {
            writeln!(w, "{r} {c} {v:e}")?;
        }
        Ok(())
    }

    pub fn read_triplets<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (dim, nnz) = match lines.next() {
            Some((_, line)) => {
                let line = line?;
                let mut it = line.split_whitespace();
                let dim = parse_field::<usize>(it.next(), 1, "dim")?;
                let nnz = parse_field::<usize>(it.next(), 1, "nnz")?;
                (dim, nnz)
            }
            None => return Err(Error::Parse { line: 1, msg: "missing header".into() }),
        };
        let mut t = Vec::with_capacity(nnz);
        for (k, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let r = parse_field::<usize>(it.next(), k + 1, "row")?;
            let c = parse_field::<usize>(it.next(), k + 1, "col")?;
            let v = parse_field::<f64>(it.next(), k + 1, "value")?;
            t.push((r, c, v));
        }
        if t.len() != nnz {
            return Err(Error::Parse {
                line: 1,
                msg: format!("header announces {nnz} entries, found {}", t.len()),
            });
        }
        Self::from_triplets(dim, dim, t)
    }
}

pub(crate) fn parse_field<T: std::str::FromStr>(s: Option<&str>, line: usize, what: &str) -> Result<T> {
    let s = s.ok_or_else(|| Error::Parse {
        line,
        msg: format!("missing {what}"),
    })?;
    s.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {what} from {s:?}"),
    })
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.rows
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec(x, y)
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        self.mul_vec_transpose(x, y)
    }

    fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0)
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.dense()
    }
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            *out = self.row(r).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        for (c, out) in y.iter_mut().enumerate() {
            *out = self.column(c).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn is_nonnegative(&self) -> bool {
        self.iter().all(|&v| v >= 0.0)
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows().min(self.ncols())).map(|i| self[(i, i)]).collect()
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_summed_and_zeros_dropped() {
        let m = SparseMatrix::from_triplets(
            2,
            2,
            vec![(1, 0, 2.0), (0, 1, 1.0), (0, 1, 0.5), (1, 1, 0.0)],
        )
        .unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), 1.5);
        assert_eq!(m.triplets().collect::<Vec<_>>(), vec![(0, 1, 1.5), (1, 0, 2.0)]);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(SparseMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn transpose_product_matches_dense() {
        let m = SparseMatrix::from_triplets(3, 3, vec![(0, 0, 1.0), (0, 2, -2.0), (2, 1, 3.0)]).unwrap();
        let x = [1.0, 2.0, 3.0];
        let mut y = [0.0; 3];
        m.mul_vec_transpose(&x, &mut y);
        let expect = m.dense().transpose() * nalgebra::DVector::from_column_slice(&x);
        assert_eq!(y.to_vec(), expect.as_slice().to_vec());
    }

    #[test]
    fn triplet_text_round_trip() {
        let m = SparseMatrix::from_triplets(3, 3, vec![(0, 0, 0.1), (1, 2, -2.5e-7), (2, 1, 3.0)]).unwrap();
        let mut buf = Vec::new();
        m.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("3 3\n"));
        let back = SparseMatrix::read_triplets(&buf[..]).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn triplet_reader_checks_count() {
        assert!(SparseMatrix::read_triplets(&b"2 2\n0 0 1.0\n"[..]).is_err());
    }
}
