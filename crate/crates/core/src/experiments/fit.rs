use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// `log s` against `(log L)²`.
    LogSq,
    /// `log s` against `√L`.
    Sqrt,
}

impl DecayModel {
    pub fn abscissa(self, length: f64) -> f64 {
        match self {
            DecayModel::LogSq => length.ln().powi(2),
            DecayModel::Sqrt => length.sqrt(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DecayModel::LogSq => "log_sq",
            DecayModel::Sqrt => "sqrt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "log_sq" => Some(Self::LogSq),
            "sqrt" => Some(Self::Sqrt),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of `log s`.
    pub residual: f64,
    pub used: Vec<(f64, f64)>,
    pub censored: Vec<(f64, f64)>,
    pub floor: f64,
}

/// Least-squares slope of `log(shift)` against the model abscissa. Shifts
/// below `floor` are at solver resolution and censored; fewer than three
/// distinct L values after censoring is a degenerate fit.
pub fn fit_decay(points: &[(f64, f64)], model: DecayModel, floor: f64) -> Result<DecayFit> {
    let (used, censored): (Vec<_>, Vec<_>) = points
        .iter()
        .copied()
        .partition(|&(_, s)| s.is_finite() && s > floor && s > 0.0);
    let mut distinct: Vec<f64> = used.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} distinct L values above the floor {floor:e} ({} censored); 3 required",
            distinct.len(),
            censored.len()
        )));
    }
    let xs: Vec<f64> = used.iter().map(|p| model.abscissa(p.0)).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DecayFit {
        model,
        slope,
        intercept,
        residual,
        used,
        censored,
        floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_log_sq() {
        let pts: Vec<(f64, f64)> = [8.0f64, 12.0, 16.0]
            .iter()
            .map(|&l| (l, (-2.0 * l.ln().powi(2)).exp()))
            .collect();
        let f = fit_decay(&pts, DecayModel::LogSq, 0.0).unwrap();
        assert!((f.slope + 2.0).abs() < 1e-6);
        assert!(f.residual < 1e-9);
    }

    #[test]
    fn synthetic_sqrt() {
        let pts: Vec<(f64, f64)> = [9.0f64, 12.0, 16.0]
            .iter()
            .map(|&l| (l, (-0.5 * l.sqrt()).exp()))
            .collect();
        let f = fit_decay(&pts, DecayModel::Sqrt, 0.0).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-6);
    }

    #[test]
    fn censoring_degenerates() {
        let pts = [(8.0, 1e-3), (12.0, 1e-12), (16.0, 1e-13)];
        assert!(matches!(
            fit_decay(&pts, DecayModel::Sqrt, 1e-8),
            Err(Error::DegenerateFit(_))
        ));
    }
}
