use std::fmt;
use std::ops::{Index, IndexMut};

use super::Rational;

/// Dense vector of rationals. Ordering is lexicographic by entry.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RVector {
    entries: Vec<Rational>,
}

impl RVector {
    pub fn zeros(len: usize) -> Self {
        RVector {
            entries: vec![Rational::zero(); len],
        }
    }

    pub fn from_vec(entries: Vec<Rational>) -> Self {
        RVector { entries }
    }

    /// Convenience constructor from `(numer, denom)` pairs.
    pub fn from_pairs(pairs: &[(i64, i64)]) -> Self {
        RVector {
            entries: pairs.iter().map(|&(n, d)| Rational::new(n, d)).collect(),
        }
    }

    pub fn from_ints(values: &[i64]) -> Self {
        RVector {
            entries: values.iter().map(|&v| Rational::from_int(v)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rational> {
        self.entries.iter()
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<Rational> {
        self.entries
    }

    pub fn dot(&self, other: &RVector) -> Rational {
        assert_eq!(self.len(), other.len(), "dot: dimension mismatch");
        self.iter().zip(other.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn add(&self, other: &RVector) -> RVector {
        assert_eq!(self.len(), other.len(), "add: dimension mismatch");
        RVector::from_vec(self.iter().zip(other.iter()).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &RVector) -> RVector {
        assert_eq!(self.len(), other.len(), "sub: dimension mismatch");
        RVector::from_vec(self.iter().zip(other.iter()).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, factor: &Rational) -> RVector {
        RVector::from_vec(self.iter().map(|a| a * factor).collect())
    }

    pub fn neg(&self) -> RVector {
        RVector::from_vec(self.iter().map(|a| -a).collect())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.iter().all(|a| !a.is_negative())
    }

    pub fn is_zero(&self) -> bool {
        self.iter().all(Rational::is_zero)
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.iter().map(Rational::to_f64).collect()
    }

    /// Entries rendered with single spaces between them, e.g. `1/2 -3 0`.
    pub fn display_row(&self) -> String {
        let parts: Vec<String> = self.iter().map(Rational::to_string).collect();
        parts.join(" ")
    }
}

impl Index<usize> for RVector {
    type Output = Rational;
    fn index(&self, i: usize) -> &Rational {
        &self.entries[i]
    }
}

impl IndexMut<usize> for RVector {
    fn index_mut(&mut self, i: usize) -> &mut Rational {
        &mut self.entries[i]
    }
}

impl fmt::Debug for RVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.display_row())
    }
}

impl FromIterator<Rational> for RVector {
    fn from_iter<I: IntoIterator<Item = Rational>>(iter: I) -> Self {
        RVector::from_vec(iter.into_iter().collect())
    }
}

/// Dense row-major matrix of rationals.
#[derive(Clone, PartialEq, Eq)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RMatrix {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    /// Builds from row vectors; every row must have the same length.
    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in rows {
            assert_eq!(row.len(), ncols, "from_rows: ragged rows");
            data.extend(row);
        }
        RMatrix {
            rows: nrows,
            cols: ncols,
            data,
        }
    }

    /// Convenience constructor from integer rows.
    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        RMatrix::from_rows(
            rows.iter()
                .map(|row| row.iter().map(|&v| Rational::from_int(v)).collect())
                .collect(),
        )
    }

    /// Convenience constructor from `(numer, denom)` rows.
    pub fn from_pair_rows(rows: &[&[(i64, i64)]]) -> Self {
        RMatrix::from_rows(
            rows.iter()
                .map(|row| row.iter().map(|&(n, d)| Rational::new(n, d)).collect())
                .collect(),
        )
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        RMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row_vec(&self, i: usize) -> RVector {
        assert!(i < self.rows, "row index out of range");
        RVector::from_vec(self.data[i * self.cols..(i + 1) * self.cols].to_vec())
    }

    pub fn col_vec(&self, j: usize) -> RVector {
        assert!(j < self.cols, "column index out of range");
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn row_slice(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn set_row(&mut self, i: usize, row: &RVector) {
        assert_eq!(row.len(), self.cols, "set_row: dimension mismatch");
        for j in 0..self.cols {
            self[(i, j)] = row[j].clone();
        }
    }

    pub fn transpose(&self) -> RMatrix {
        RMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn matmul(&self, other: &RMatrix) -> RMatrix {
        assert_eq!(self.cols, other.rows, "matmul: dimension mismatch");
        RMatrix::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).map(|k| &self[(i, k)] * &other[(k, j)]).sum()
        })
    }

    /// Matrix times column vector.
    pub fn mul_vec(&self, v: &RVector) -> RVector {
        assert_eq!(self.cols, v.len(), "mul_vec: dimension mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| &self[(i, j)] * &v[j]).sum())
            .collect()
    }

    /// Row vector times matrix.
    pub fn vec_mul(&self, v: &RVector) -> RVector {
        assert_eq!(self.rows, v.len(), "vec_mul: dimension mismatch");
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| &v[i] * &self[(i, j)]).sum())
            .collect()
    }

    pub fn add(&self, other: &RMatrix) -> RMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "add: shape mismatch");
        RMatrix::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] + &other[(i, j)])
    }

    pub fn sub(&self, other: &RMatrix) -> RMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "sub: shape mismatch");
        RMatrix::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] - &other[(i, j)])
    }

    pub fn neg(&self) -> RMatrix {
        RMatrix::from_fn(self.rows, self.cols, |i, j| -&self[(i, j)])
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &RMatrix) -> RMatrix {
        assert_eq!(self.rows, other.rows, "hstack: row mismatch");
        RMatrix::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                other[(i, j - self.cols)].clone()
            }
        })
    }

    /// Vertical concatenation `[self; other]`.
    pub fn vstack(&self, other: &RMatrix) -> RMatrix {
        assert_eq!(self.cols, other.cols, "vstack: column mismatch");
        let mut rows = Vec::with_capacity(self.rows + other.rows);
        for i in 0..self.rows {
            rows.push(self.row_slice(i).to_vec());
        }
        for i in 0..other.rows {
            rows.push(other.row_slice(i).to_vec());
        }
        RMatrix::from_rows(rows)
    }

    /// Columns `indices`, in the given order.
    pub fn select_cols(&self, indices: &[usize]) -> RMatrix {
        RMatrix::from_fn(self.rows, indices.len(), |i, j| self[(i, indices[j])].clone())
    }

    /// Rows `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> RMatrix {
        RMatrix::from_fn(indices.len(), self.cols, |i, j| self[(indices[i], j)].clone())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|a| !a.is_negative())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Rational::is_zero)
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| self.row_slice(i).iter().map(Rational::to_f64).collect())
            .collect()
    }
}

impl Index<(usize, usize)> for RMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        assert!(i < self.rows && j < self.cols, "index out of range");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        assert!(i < self.rows && j < self.cols, "index out of range");
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for RMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}x{}]", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {}", self.row_vec(i).display_row())?;
        }
        Ok(())
    }
}
