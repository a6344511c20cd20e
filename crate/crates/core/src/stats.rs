//! Small statistics helpers shared by the sampler and the analysis code.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanErr {
    pub mean: f64,
    pub err: f64,
}

impl MeanErr {
    /// Sample mean and standard error of the mean (`s / sqrt(n)`, zero for one value).
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                err: f64::NAN,
            };
        }
        let m = mean(values);
        if n == 1 {
            return Self { mean: m, err: 0.0 };
        }
        let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean: m,
            err: (var / n as f64).sqrt(),
        }
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument("x and y differ in length".into()));
    }
    if x.len() < 2 {
        return Err(Error::EmptyInput("linear fit needs at least two points"));
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("x values are all equal".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

/// Centered boxcar average; the window shrinks near the ends.
pub fn boxcar(values: &[f64], width: usize) -> Vec<f64> {
    let n = values.len();
    if width <= 1 || n == 0 {
        return values.to_vec();
    }
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    let lo_off = (width - 1) / 2;
    let hi_off = width / 2;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(lo_off);
            let hi = (i + hi_off).min(n - 1);
            (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
        })
        .collect()
}

/// Trailing moving average over the last `width` values (fewer at the start).
pub fn trailing_average(values: &[f64], width: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, v) in values.iter().enumerate() {
        sum += v;
        if i >= width {
            sum -= values[i - width];
        }
        out.push(sum / (i + 1).min(width) as f64);
    }
    out
}

/// Linear interpolation of `y(x)` at `x0`; `x` must be increasing.
pub fn interpolate(x: &[f64], y: &[f64], x0: f64) -> Option<f64> {
    let k = x.windows(2).position(|w| w[0] <= x0 && x0 <= w[1])?;
    let t = if x[k + 1] == x[k] {
        0.0
    } else {
        (x0 - x[k]) / (x[k + 1] - x[k])
    };
    Some(y[k] + t * (y[k + 1] - y[k]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_err() {
        let m = MeanErr::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.err - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(MeanErr::of(&[7.0]).err, 0.0);
    }

    #[test]
    fn fit_exact_line() {
        let x = [1.0, 2.0, 3.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-14 && (f.intercept - 3.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn smoothing() {
        let v = [0.0, 0.0, 3.0, 0.0, 0.0];
        assert_eq!(boxcar(&v, 3), vec![0.0, 1.0, 1.0, 1.0, 0.0]);
        assert_eq!(trailing_average(&[1.0, 3.0, 5.0], 2), vec![1.0, 2.0, 4.0]);
        assert_eq!(
            interpolate(&[0.0, 1.0, 2.0], &[0.0, 10.0, 30.0], 1.5),
            Some(20.0)
        );
        assert_eq!(interpolate(&[0.0, 1.0], &[0.0, 1.0], 2.0), None);
    }
}
