//! Least-squares scaling fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    PowerLaw,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitParams {
    /// `y = κ x^η`
    PowerLaw {
        kappa: f64,
        eta: f64,
    },
    Linear {
        slope: f64,
        intercept: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub kind: FitKind,
    pub params: FitParams,
    pub r_squared: f64,
    /// Observed minus fitted, in the space the fit was done in (logarithmic
    /// for power laws).
    pub residuals: Vec<f64>,
}

impl ScalingFit {
    pub fn predict(&self, x: f64) -> f64 {
        match self.params {
            FitParams::PowerLaw { kappa, eta } => kappa * x.powf(eta),
            FitParams::Linear { slope, intercept } => slope * x + intercept,
        }
    }
}

struct Line {
    slope: f64,
    intercept: f64,
    r_squared: f64,
    residuals: Vec<f64>,
}

fn ols(xs: &[f64], ys: &[f64]) -> Result<Line> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            have: xs.len(),
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite fit input".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 1e-300) {
        return Err(Error::InvalidArgument("abscissae are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - (slope * x + intercept)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(Line {
        slope,
        intercept,
        r_squared,
        residuals,
    })
}

/// OLS on `(ln x, ln y)`; `κ = exp(intercept)`, `η = slope`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<ScalingFit> {
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("power-law fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let line = ols(&lx, &ly)?;
    Ok(ScalingFit {
        kind: FitKind::PowerLaw,
        params: FitParams::PowerLaw {
            kappa: line.intercept.exp(),
            eta: line.slope,
        },
        r_squared: line.r_squared,
        residuals: line.residuals,
    })
}

/// OLS line evaluated at `x_target`.
pub fn fit_linear_extrapolate(xs: &[f64], ys: &[f64], x_target: f64) -> Result<(ScalingFit, f64)> {
    let line = ols(xs, ys)?;
    let fit = ScalingFit {
        kind: FitKind::Linear,
        params: FitParams::Linear {
            slope: line.slope,
            intercept: line.intercept,
        },
        r_squared: line.r_squared,
        residuals: line.residuals,
    };
    let y = fit.predict(x_target);
    Ok((fit, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_power_law() {
        let xs = [1.0, 2.0, 5.0, 10.0];
        let fit = fit_power_law(&xs, &xs).unwrap();
        let FitParams::PowerLaw { kappa, eta } = fit.params else {
            panic!()
        };
        assert!((kappa - 1.0).abs() < 1e-12 && (eta - 1.0).abs() < 1e-12);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn collinear_points_interpolate() {
        let xs = [0.25, 1.0 / 6.0, 1.0 / 9.0];
        let ys: Vec<f64> = xs.iter().map(|x| 1.05 - 0.4 * x).collect();
        let (fit, y0) = fit_linear_extrapolate(&xs, &ys, 0.0).unwrap();
        assert!((y0 - 1.05).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_power_law(&[1.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(fit_power_law(&[1.0], &[1.0]).is_err());
        assert!(fit_linear_extrapolate(&[2.0, 2.0], &[1.0, 3.0], 0.0).is_err());
        assert!(fit_linear_extrapolate(&[1.0, 2.0], &[1.0], 0.0).is_err());
    }
}
