use serde::{Deserialize, Serialize};

use super::GprError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub r2: f64,
    pub rmse: f64,
    pub mae: f64,
    /// Percent; entries with |y| < 1e-9 are skipped.
    pub mape: f64,
}

pub fn regression_metrics(y: &[f64], yhat: &[f64]) -> Result<Metrics, GprError> {
    if y.len() != yhat.len() {
        return Err(GprError::LengthMismatch { left: y.len(), right: yhat.len() });
    }
    if y.len() < 2 {
        return Err(GprError::TooFewPoints(y.len()));
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(GprError::ZeroVariance);
    }
    let (mut ss_res, mut abs, mut pct, mut counted) = (0.0, 0.0, 0.0, 0usize);
    for (a, b) in y.iter().zip(yhat) {
        let e = a - b;
        ss_res += e * e;
        abs += e.abs();
        if a.abs() >= 1e-9 {
            pct += (e / a).abs();
            counted += 1;
        }
    }
    Ok(Metrics {
        r2: 1.0 - ss_res / ss_tot,
        rmse: (ss_res / n).sqrt(),
        mae: abs / n,
        mape: if counted > 0 { 100.0 * pct / counted as f64 } else { f64::NAN },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_mean_predictions() {
        let y = [1.0, 2.0, 4.0];
        let m = regression_metrics(&y, &y).unwrap();
        assert_eq!((m.r2, m.rmse, m.mae, m.mape), (1.0, 0.0, 0.0, 0.0));
        let mean = [7.0 / 3.0; 3];
        assert!(regression_metrics(&y, &mean).unwrap().r2.abs() < 1e-12);
    }

    #[test]
    fn hand_example() {
        let m = regression_metrics(&[-5.0, -4.0], &[-4.5, -4.0]).unwrap();
        assert!((m.rmse - 0.125f64.sqrt()).abs() < 1e-12);
        assert!((m.mae - 0.25).abs() < 1e-12);
        assert!((m.mape - 5.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(regression_metrics(&[1.0, 2.0], &[1.0]), Err(GprError::LengthMismatch { .. })));
        assert_eq!(regression_metrics(&[3.0, 3.0], &[1.0, 2.0]), Err(GprError::ZeroVariance));
    }
}
