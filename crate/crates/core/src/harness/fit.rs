//! Log-log growth exponents and the tight/loose classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Columns whose every value is below this are classified as exact.
pub const EXACT_THRESHOLD: f64 = 1e-12;
pub const TIGHT_MAX_EXPONENT: f64 = 0.1;
pub const LOOSE_MIN_EXPONENT: f64 = 0.4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub exponent: f64,
    pub stderr: f64,
}

/// Ordinary least squares of `ln value` against `ln size`.
pub fn fit_exponent(sizes: &[f64], values: &[f64]) -> Result<ExponentFit> {
    if sizes.len() != values.len() {
        return Err(Error::InvalidArgument(format!(
            "{} sizes but {} values",
            sizes.len(),
            values.len()
        )));
    }
    if sizes.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 points to fit, got {}",
            sizes.len()
        )));
    }
    if let Some(bad) = sizes.iter().chain(values).find(|&&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain(format!("cannot take the log of {bad}")));
    }
    let x: Vec<f64> = sizes.iter().map(|s| s.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("sizes must not all be equal".into()));
    }
    let sxy: f64 = x.iter().zip(&y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(&y)
        .map(|(xi, yi)| (yi - intercept - slope * xi).powi(2))
        .sum();
    Ok(ExponentFit {
        exponent: slope,
        stderr: (ssr / (n - 2.0) / sxx).sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    /// The bound vanishes at every size.
    Exact,
    /// `|exponent| ≤ 0.1`.
    Tight,
    /// `exponent ≥ 0.4`.
    Loose,
    /// A fitted exponent between the two thresholds.
    Intermediate,
    /// Some values are zero or negative but not all; no fit possible.
    Undetermined,
}

pub fn classify_exponent(exponent: f64) -> Classification {
    if exponent.abs() <= TIGHT_MAX_EXPONENT {
        Classification::Tight
    } else if exponent >= LOOSE_MIN_EXPONENT {
        Classification::Loose
    } else {
        Classification::Intermediate
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnFit {
    pub column: String,
    pub exponent: Option<f64>,
    pub stderr: Option<f64>,
    pub classification: Classification,
}

pub fn fit_column(column: &str, sizes: &[f64], values: &[f64]) -> Result<ColumnFit> {
    if values.iter().all(|v| v.abs() < EXACT_THRESHOLD) {
        return Ok(ColumnFit {
            column: column.to_string(),
            exponent: None,
            stderr: None,
            classification: Classification::Exact,
        });
    }
    match fit_exponent(sizes, values) {
        Ok(fit) => Ok(ColumnFit {
            column: column.to_string(),
            exponent: Some(fit.exponent),
            stderr: Some(fit.stderr),
            classification: classify_exponent(fit.exponent),
        }),
        Err(Error::Domain(_)) => Ok(ColumnFit {
            column: column.to_string(),
            exponent: None,
            stderr: None,
            classification: Classification::Undetermined,
        }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SIZES: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 5.0];

    #[test]
    fn linear_values_give_unit_exponent() {
        let fit = fit_exponent(&SIZES, &SIZES).unwrap();
        assert!((fit.exponent - 1.0).abs() < 1e-14);
        assert!(fit.stderr < 1e-14);
    }

    #[test]
    fn square_root_values() {
        let values: Vec<f64> = SIZES.iter().map(|s| s.sqrt()).collect();
        let fit = fit_exponent(&SIZES, &values).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-14);
    }

    #[test]
    fn constant_values() {
        let fit = fit_exponent(&SIZES, &[0.3; 5]).unwrap();
        assert!(fit.exponent.abs() < 1e-14);
    }

    #[test]
    fn noisy_fit_has_stderr() {
        let values = [1.0, 2.2, 2.9, 4.3, 4.8];
        let fit = fit_exponent(&SIZES, &values).unwrap();
        assert!(fit.stderr > 0.0 && fit.stderr < 0.1);
        assert!((fit.exponent - 1.0).abs() < 0.1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_exponent(&SIZES[..2], &[1.0, 2.0]).is_err());
        assert!(fit_exponent(&SIZES, &[1.0, 0.0, 1.0, 1.0, 1.0]).is_err());
        assert!(fit_exponent(&SIZES, &[1.0, -1.0, 1.0, 1.0, 1.0]).is_err());
        assert!(fit_exponent(&[2.0; 3], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_exponent(&SIZES, &[1.0; 4]).is_err());
    }

    #[test]
    fn classification_thresholds() {
        assert_eq!(classify_exponent(0.1), Classification::Tight);
        assert_eq!(classify_exponent(-0.05), Classification::Tight);
        assert_eq!(classify_exponent(0.4), Classification::Loose);
        assert_eq!(classify_exponent(1.0), Classification::Loose);
        assert_eq!(classify_exponent(0.25), Classification::Intermediate);
        assert_eq!(classify_exponent(-0.3), Classification::Intermediate);
        assert_eq!(
            fit_column("x", &SIZES, &[0.0; 5]).unwrap().classification,
            Classification::Exact
        );
        assert_eq!(
            fit_column("x", &SIZES, &[1e-13; 5]).unwrap().classification,
            Classification::Exact
        );
        assert_eq!(
            fit_column("x", &SIZES, &[0.0, 1.0, 1.0, 1.0, 1.0])
                .unwrap()
                .classification,
            Classification::Undetermined
        );
    }

    proptest! {
        #[test]
        fn recovers_power_laws(exponent in -2.0f64..2.0, prefactor in 1e-3f64..1e3) {
            let values: Vec<f64> = SIZES.iter().map(|s| prefactor * s.powf(exponent)).collect();
            let fit = fit_exponent(&SIZES, &values).unwrap();
            prop_assert!((fit.exponent - exponent).abs() < 1e-10);
            prop_assert!(fit.stderr < 1e-8);
        }

        #[test]
        fn scale_invariant(scale in 1e-6f64..1e6) {
            let values = [0.3, 0.5, 0.55, 0.9, 1.4];
            let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
            let a = fit_exponent(&SIZES, &values).unwrap();
            let b = fit_exponent(&SIZES, &scaled).unwrap();
            prop_assert!((a.exponent - b.exponent).abs() < 1e-10);
        }
    }
}
