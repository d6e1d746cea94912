//! Time series of distances: design times, power-law fits and saturation.

use crate::error::invalid;
use crate::{Error, Result};
use std::collections::BTreeMap;

/// Distances `Delta^(k)` against a common abscissa (time, energy or N_B).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeltaSeries {
    pub abscissa: Vec<f64>,
    pub values: BTreeMap<usize, Vec<f64>>,
    pub label: String,
}

impl DeltaSeries {
    pub fn new(abscissa: Vec<f64>, label: impl Into<String>) -> Self {
        Self {
            abscissa,
            values: BTreeMap::new(),
            label: label.into(),
        }
    }

    /// Adds the values for order `k`; every value must lie in `[0, 1]`.
    pub fn insert(&mut self, k: usize, values: Vec<f64>) -> Result<()> {
        if values.len() != self.abscissa.len() {
            return Err(Error::DimensionMismatch {
                what: "series length",
                expected: self.abscissa.len(),
                found: values.len(),
            });
        }
        if let Some(v) = values.iter().find(|v| !(-1e-12..=1.0 + 1e-12).contains(*v)) {
            return Err(invalid(format!("distance {v} outside [0, 1]")));
        }
        self.values.insert(k, values);
        Ok(())
    }

    pub fn get(&self, k: usize) -> Option<&[f64]> {
        self.values.get(&k).map(|v| v.as_slice())
    }
}

/// First time the order-`k` series drops to `epsilon` or below, linearly
/// interpolated in `(log t, log Delta)` between the bracketing samples.
/// `None` when the series never gets there.
pub fn design_time(series: &DeltaSeries, k: usize, epsilon: f64) -> Result<Option<f64>> {
    let t = &series.abscissa;
    let v = series
        .get(k)
        .ok_or_else(|| invalid(format!("series has no values for k = {k}")))?;
    if t.len() < 2 {
        return Err(invalid("design time needs at least two samples"));
    }
    if t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("abscissa must be strictly increasing"));
    }
    if t[0] <= 0.0 || epsilon <= 0.0 {
        return Err(invalid("log interpolation needs positive times and threshold"));
    }
    if v[0] <= epsilon {
        return Ok(Some(t[0]));
    }
    for i in 1..t.len() {
        if v[i] <= epsilon {
            if v[i] <= 0.0 {
                return Ok(Some(t[i]));
            }
            let (x0, x1) = (t[i - 1].ln(), t[i].ln());
            let (y0, y1) = (v[i - 1].ln(), v[i].ln());
            let x = x0 + (epsilon.ln() - y0) * (x1 - x0) / (y1 - y0);
            return Ok(Some(x.exp()));
        }
    }
    Ok(None)
}

/// Least-squares fit of `log Delta = log A - alpha log t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerLawFit {
    /// Decay exponent `alpha` (positive for decay).
    pub exponent: f64,
    pub prefactor: f64,
    pub points: usize,
}

/// Unweighted fit over samples with `lo <= t <= hi` and positive values.
/// `None` with fewer than two usable points.
pub fn power_law_fit(t: &[f64], v: &[f64], lo: f64, hi: f64) -> Option<PowerLawFit> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(v)
        .filter(|(&t, &v)| t >= lo && t <= hi && t > 0.0 && v > 0.0)
        .map(|(t, v)| (t.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some(PowerLawFit {
        exponent: -slope,
        prefactor: (my - slope * mx).exp(),
        points: pts.len(),
    })
}

/// Mean of the last `n` values.
pub fn saturation(v: &[f64], n: usize) -> Option<f64> {
    if n == 0 || v.len() < n {
        return None;
    }
    Some(v[v.len() - n..].iter().sum::<f64>() / n as f64)
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
