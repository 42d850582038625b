use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::labeling::Taxonomy;
use crate::scalar::Scalar;

/// Feature matrix with one class index per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T> {
    pub matrix: FeatureMatrix<T>,
    pub labels: Vec<usize>,
    pub taxonomy: Taxonomy,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn new(matrix: FeatureMatrix<T>, labels: Vec<usize>, taxonomy: Taxonomy) -> Result<Self> {
        if labels.len() != matrix.n_rows() {
            return Err(Error::Data(format!(
                "{} labels for {} feature rows",
                labels.len(),
                matrix.n_rows()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= taxonomy.len()) {
            return Err(Error::Taxonomy(format!(
                "label {l} out of range for {} classes",
                taxonomy.len()
            )));
        }
        Ok(Self {
            matrix,
            labels,
            taxonomy,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.taxonomy.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            matrix: self.matrix.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            taxonomy: self.taxonomy.clone(),
        }
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        Self {
            matrix: self.matrix.select_columns(idx),
            labels: self.labels.clone(),
            taxonomy: self.taxonomy.clone(),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        self.matrix.to_csv(Some(&self.labels))
    }

    pub fn from_csv(text: &str, taxonomy: Taxonomy) -> Result<Self> {
        let (matrix, labels) = FeatureMatrix::from_csv(text)?;
        let labels = labels.ok_or_else(|| Error::Data("feature CSV has no label column".into()))?;
        Self::new(matrix, labels, taxonomy)
    }
}

/// Per-class sample counts, indexed by class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSupport(pub Vec<usize>);

impl ClassSupport {
    pub fn of(labels: &[usize], n_classes: usize) -> Self {
        let mut v = vec![0; n_classes];
        for &l in labels {
            v[l] += 1;
        }
        Self(v)
    }
}
