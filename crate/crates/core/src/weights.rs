use crate::error::{Error, Result};

/// A positive weight vector normalized to sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights(Vec<f64>);

impl Weights {
    /// Normalizes `values`; every entry must be finite and strictly positive.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidWeights("no weights".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v <= 0.0) {
            return Err(Error::InvalidWeights(format!(
                "weights must be finite and positive, got {bad}"
            )));
        }
        let total: f64 = values.iter().sum();
        Ok(Self(values.into_iter().map(|v| v / total).collect()))
    }

    pub fn uniform(m: usize) -> Self {
        assert!(m > 0, "uniform weights need at least one entry");
        Self(vec![1.0 / m as f64; m])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub(crate) fn ensure_len(&self, m: usize) -> Result<()> {
        if self.len() == m {
            Ok(())
        } else {
            Err(Error::InvalidWeights(format!(
                "{} weights for {} matrices",
                self.len(),
                m
            )))
        }
    }
}
