//! Return-series container shared by the fitting and smoothing entry points.

use crate::error::{Error, Result};

/// A validated series of (log) returns, optionally with row labels such as
/// dates. Values are guaranteed finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    values: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl ReturnSeries {
    /// Wrap a vector of returns, rejecting non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite())
        {
            return Err(Error::InvalidInput(format!(
                "return at position {i} is not finite ({v})"
            )));
        }
        Ok(ReturnSeries {
            values,
            labels: None,
        })
    }

    /// Wrap returns together with one label per observation (e.g. ISO-8601
    /// dates). Labels must be strictly increasing, which for ISO dates is
    /// plain string order.
    pub fn with_labels(values: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                actual: labels.len(),
            });
        }
        if let Some(i) = labels.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(format!(
                "labels must be strictly increasing, but {:?} is not after {:?} (row {})",
                labels[i + 1],
                labels[i],
                i + 1
            )));
        }
        let mut series = Self::new(values)?;
        series.labels = Some(labels);
        Ok(series)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_finite_values() {
        let s = ReturnSeries::new(vec![0.01, -0.02, 0.0]).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.labels().is_none());
    }

    #[test]
    fn rejects_nan_and_infinity() {
        assert!(ReturnSeries::new(vec![0.0, f64::NAN]).is_err());
        assert!(ReturnSeries::new(vec![f64::INFINITY]).is_err());
        assert!(ReturnSeries::new(vec![]).is_err());
    }

    #[test]
    fn labels_must_match_length() {
        let err = ReturnSeries::with_labels(vec![0.1, 0.2], vec!["a".into()]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        let s =
            ReturnSeries::with_labels(vec![0.1, 0.2], vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(s.labels().unwrap().len(), 2);
    }

    #[test]
    fn labels_must_increase_strictly() {
        let err = ReturnSeries::with_labels(
            vec![0.1, 0.2, 0.3],
            vec!["2020-01-02".into(), "2020-01-02".into(), "2020-01-03".into()],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        assert!(ReturnSeries::with_labels(
            vec![0.1, 0.2],
            vec!["2020-01-02".into(), "2020-01-10".into()],
        )
        .is_ok());
    }
}
