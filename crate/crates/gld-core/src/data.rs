// SPDX-License-Identifier: MIT
//! Column-major numeric dataset; the row index carries the persistence pattern.

use alloc::string::String;
use alloc::vec::Vec;

use crate::CoreError;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    cols: Vec<Vec<f64>>,
}

impl Dataset {
    /// Columns must be non-empty and of equal length.
    pub fn new(names: Vec<String>, cols: Vec<Vec<f64>>) -> Result<Self, CoreError> {
        if cols.is_empty() || names.len() != cols.len() {
            return Err(CoreError::invalid("dataset needs matching names and columns"));
        }
        let n = cols[0].len();
        if n == 0 {
            return Err(CoreError::invalid("dataset has zero rows"));
        }
        if cols.iter().any(|c| c.len() != n) {
            return Err(CoreError::invalid("dataset columns have unequal lengths"));
        }
        Ok(Dataset { names, cols })
    }

    /// Auto-named columns X0, X1, ...
    pub fn from_cols(cols: Vec<Vec<f64>>) -> Result<Self, CoreError> {
        let names = (0..cols.len())
            .map(|i| alloc::format!("X{i}"))
            .collect();
        Dataset::new(names, cols)
    }

    pub fn n(&self) -> usize {
        self.cols[0].len()
    }

    pub fn k(&self) -> usize {
        self.cols.len()
    }

    pub fn col(&self, i: usize) -> &[f64] {
        &self.cols[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}
