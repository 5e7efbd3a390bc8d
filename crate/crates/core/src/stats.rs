//! Summary statistics over the finite entries of a grid.

use ndarray::Array2;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldStats {
    pub count: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub max_abs: f64,
}

impl FieldStats {
    /// Non-finite values are skipped. An empty input gives `count == 0` and NaN moments.
    pub fn from_values<I: IntoIterator<Item = f64>>(values: I) -> Self {
        let v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
        let n = v.len();
        if n == 0 {
            return Self {
                count: 0,
                mean: f64::NAN,
                std_dev: f64::NAN,
                max_abs: f64::NAN,
            };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let max_abs = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        Self {
            count: n,
            mean,
            std_dev: var.sqrt(),
            max_abs,
        }
    }

    pub fn of(grid: &Array2<f64>) -> Self {
        Self::from_values(grid.iter().copied())
    }

    /// Statistics over the nodes where `keep` is true.
    pub fn of_masked(grid: &Array2<f64>, keep: &Array2<bool>) -> Self {
        Self::from_values(
            grid.iter()
                .zip(keep.iter())
                .filter(|(_, k)| **k)
                .map(|(v, _)| *v),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skips_nan() {
        let s = FieldStats::from_values([1.0, f64::NAN, 3.0, -5.0]);
        assert_eq!(s.count, 3);
        assert_eq!(s.mean, -1.0 / 3.0);
        assert_eq!(s.max_abs, 5.0);
        assert_eq!(FieldStats::from_values([]).count, 0);
    }
}
