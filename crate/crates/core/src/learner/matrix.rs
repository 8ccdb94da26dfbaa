use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major design matrix with named columns. NaN marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    names: Vec<String>,
    n_rows: usize,
    data: Vec<T>,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn new(names: Vec<String>, data: Vec<T>) -> Result<Self> {
        let n_cols = names.len();
        if n_cols == 0 {
            if !data.is_empty() {
                return Err(Error::schema("data supplied for a matrix with no columns"));
            }
            return Ok(Self { names, n_rows: 0, data });
        }
        if !data.len().is_multiple_of(n_cols) {
            return Err(Error::schema(format!(
                "{} cells do not fill rows of {} columns",
                data.len(),
                n_cols
            )));
        }
        Ok(Self { n_rows: data.len() / n_cols, names, data })
    }

    pub fn from_rows(names: Vec<String>, rows: &[Vec<T>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * names.len());
        for (i, r) in rows.iter().enumerate() {
            if r.len() != names.len() {
                return Err(Error::schema(format!(
                    "row {i} has {} cells, expected {}",
                    r.len(),
                    names.len()
                )));
            }
            data.extend_from_slice(r);
        }
        let mut m = Self::new(names, data)?;
        m.n_rows = rows.len();
        Ok(m)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.names.len() + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[T] {
        let d = self.names.len();
        &self.data[row * d..(row + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    pub fn column(&self, col: usize) -> Vec<T> {
        (0..self.n_rows).map(|i| self.get(i, col)).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols());
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Self { names: self.names.clone(), n_rows: rows.len(), data }
    }

    /// Reorders/subsets columns to `names`; a name absent here is a schema error.
    pub fn project(&self, names: &[String]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::schema(format!("missing feature column `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut data = Vec::with_capacity(self.n_rows * idx.len());
        for r in 0..self.n_rows {
            let row = self.row(r);
            data.extend(idx.iter().map(|&c| row[c]));
        }
        Ok(Self { names: names.to_vec(), n_rows: self.n_rows, data })
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, v: T) {
        let d = self.names.len();
        self.data[row * d + col] = v;
    }
}
