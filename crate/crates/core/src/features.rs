//! Dense row-major feature matrices with row ids and column names.

use serde::{Deserialize, Serialize};

use crate::error::{QtcError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    ids: Vec<String>,
    feature_names: Vec<String>,
    values: Vec<f64>,
}

impl FeatureMatrix {
    /// Builds a matrix from row-major `values`. Every value must be finite.
    pub fn new(ids: Vec<String>, feature_names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != ids.len() * feature_names.len() {
            return Err(QtcError::validation(format!(
                "feature matrix has {} values, expected {} rows x {} columns",
                values.len(),
                ids.len(),
                feature_names.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let cols = feature_names.len();
            return Err(QtcError::validation(format!(
                "non-finite value at row {}, column {}",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self {
            ids,
            feature_names,
            values,
        })
    }

    pub fn from_rows(
        ids: Vec<String>,
        feature_names: Vec<String>,
        rows: &[Vec<f64>],
    ) -> Result<Self> {
        let cols = feature_names.len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(QtcError::validation(format!(
                "row {i} has {} values, expected {cols}",
                r.len()
            )));
        }
        Self::new(ids, feature_names, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.feature_names.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.n_cols();
        &self.values[i * c..(i + 1) * c]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // chunks_exact panics on a zero chunk size
        self.values.chunks_exact(self.n_cols().max(1))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    /// Rows selected by id, in the order given.
    pub fn select_ids(&self, ids: &[String]) -> Result<Self> {
        let index: std::collections::HashMap<&str, usize> = self
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut values = Vec::with_capacity(ids.len() * self.n_cols());
        for id in ids {
            let &i = index
                .get(id.as_str())
                .ok_or_else(|| QtcError::validation(format!("unknown row id {id:?}")))?;
            values.extend_from_slice(self.row(i));
        }
        Self::new(ids.to_vec(), self.feature_names.clone(), values)
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }
}
