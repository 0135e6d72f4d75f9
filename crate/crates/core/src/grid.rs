//! Dense row-major 2-D and 3-D arrays used for the instance parameters and
//! solver output.
//!
//! Both types serialize as nested JSON arrays. Deserialization rejects ragged
//! input, so a successfully parsed array always has a rectangular shape.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("ragged array: row {row} has {found} entries, expected {expected}")]
pub struct RaggedError {
    pub row: usize,
    pub found: usize,
    pub expected: usize,
}

/// A rectangular `rows x cols` array.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<T>>", into = "Vec<Vec<T>>")]
#[serde(bound(
    serialize = "T: Clone + Serialize",
    deserialize = "T: Clone + Deserialize<'de>"
))]
pub struct Matrix<T: Clone> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// True when the shape is `rows x cols`. A matrix without rows carries no
    /// column information, so any column count matches in that case.
    pub fn has_shape(&self, rows: usize, cols: usize) -> bool {
        self.rows == rows && (rows == 0 || self.cols == cols)
    }

    pub fn get(&self, r: usize, c: usize) -> &T {
        assert!(r < self.rows && c < self.cols, "matrix index out of bounds");
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: T) {
        assert!(r < self.rows && c < self.cols, "matrix index out of bounds");
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        let cols = self.cols.max(1);
        self.data
            .iter()
            .enumerate()
            .map(move |(k, v)| (k / cols, k % cols, v))
    }

    pub fn map<U: Clone>(&self, f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Clone> TryFrom<Vec<Vec<T>>> for Matrix<T> {
    type Error = RaggedError;

    fn try_from(nested: Vec<Vec<T>>) -> Result<Self, Self::Error> {
        let rows = nested.len();
        let cols = nested.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * cols);
        for (row, values) in nested.into_iter().enumerate() {
            if values.len() != cols {
                return Err(RaggedError {
                    row,
                    found: values.len(),
                    expected: cols,
                });
            }
            data.extend(values);
        }
        Ok(Self { rows, cols, data })
    }
}

impl<T: Clone> From<Matrix<T>> for Vec<Vec<T>> {
    fn from(m: Matrix<T>) -> Self {
        if m.cols == 0 {
            return vec![Vec::new(); m.rows];
        }
        m.data.chunks(m.cols).map(<[T]>::to_vec).collect()
    }
}

/// A dense `d0 x d1 x d2` array indexed `(i, j, t)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<T>>>", into = "Vec<Vec<Vec<T>>>")]
#[serde(bound(
    serialize = "T: Clone + Serialize",
    deserialize = "T: Clone + Deserialize<'de>"
))]
pub struct Array3<T: Clone> {
    dims: (usize, usize, usize),
    data: Vec<T>,
}

impl<T: Clone> Array3<T> {
    pub fn filled(d0: usize, d1: usize, d2: usize, value: T) -> Self {
        Self {
            dims: (d0, d1, d2),
            data: vec![value; d0 * d1 * d2],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn has_shape(&self, d0: usize, d1: usize, d2: usize) -> bool {
        let (a, b, c) = self.dims;
        a == d0 && (d0 == 0 || b == d1) && (d0 == 0 || d1 == 0 || c == d2)
    }

    #[inline]
    fn offset(&self, i: usize, j: usize, t: usize) -> usize {
        let (a, b, c) = self.dims;
        assert!(i < a && j < b && t < c, "array index out of bounds");
        (i * b + j) * c + t
    }

    pub fn get(&self, i: usize, j: usize, t: usize) -> &T {
        &self.data[self.offset(i, j, t)]
    }

    pub fn set(&mut self, i: usize, j: usize, t: usize, value: T) {
        let k = self.offset(i, j, t);
        self.data[k] = value;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Iterates `((i, j, t), value)` in lexicographic index order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize, usize), &T)> {
        let (_, b, c) = self.dims;
        let (b, c) = (b.max(1), c.max(1));
        self.data
            .iter()
            .enumerate()
            .map(move |(k, v)| ((k / (b * c), (k / c) % b, k % c), v))
    }

    pub fn map<U: Clone>(&self, f: impl FnMut(&T) -> U) -> Array3<U> {
        Array3 {
            dims: self.dims,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Clone> TryFrom<Vec<Vec<Vec<T>>>> for Array3<T> {
    type Error = RaggedError;

    fn try_from(nested: Vec<Vec<Vec<T>>>) -> Result<Self, Self::Error> {
        let d0 = nested.len();
        let d1 = nested.first().map_or(0, Vec::len);
        let d2 = nested
            .first()
            .and_then(|plane| plane.first())
            .map_or(0, Vec::len);
        let mut data = Vec::with_capacity(d0 * d1 * d2);
        for (i, plane) in nested.into_iter().enumerate() {
            if plane.len() != d1 {
                return Err(RaggedError {
                    row: i,
                    found: plane.len(),
                    expected: d1,
                });
            }
            for (j, line) in plane.into_iter().enumerate() {
                if line.len() != d2 {
                    return Err(RaggedError {
                        row: i * d1 + j,
                        found: line.len(),
                        expected: d2,
                    });
                }
                data.extend(line);
            }
        }
        Ok(Self {
            dims: (d0, d1, d2),
            data,
        })
    }
}

impl<T: Clone> From<Array3<T>> for Vec<Vec<Vec<T>>> {
    fn from(a: Array3<T>) -> Self {
        let (d0, d1, d2) = a.dims;
        let mut it = a.data.into_iter();
        (0..d0)
            .map(|_| {
                (0..d1)
                    .map(|_| it.by_ref().take(d2).collect())
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ragged_matrix_rejected() {
        let err = Matrix::try_from(vec![vec![1, 2], vec![3]]).unwrap_err();
        assert_eq!(err.row, 1);
        assert_eq!(err.expected, 2);
    }

    #[test]
    fn array3_iterates_in_index_order() {
        let mut a = Array3::filled(2, 2, 3, 0u8);
        a.set(1, 0, 2, 7);
        let hit: Vec<_> = a.iter().filter(|(_, v)| **v == 7).map(|(k, _)| k).collect();
        assert_eq!(hit, vec![(1, 0, 2)]);
        let nested: Vec<Vec<Vec<u8>>> = a.clone().into();
        assert_eq!(nested[1][0][2], 7);
        assert_eq!(Array3::try_from(nested).unwrap(), a);
    }

    #[test]
    fn matrix_json_is_nested() {
        let m = Matrix::from_fn(2, 3, |r, c| (r * 3 + c) as u32);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[0,1,2],[3,4,5]]");
        let back: Matrix<u32> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
