//! Piecewise-linear time series, used for boundary-condition histories.

use serde::{Deserialize, Serialize};

/// Piecewise-linear interpolant through `(t, value)` points sorted by time;
/// evaluation clamps to the first/last value outside the covered interval.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TimeSeries {
    pub points: Vec<(f64, f64)>,
}

impl TimeSeries {
    pub fn new(points: Vec<(f64, f64)>) -> TimeSeries {
        TimeSeries { points }
    }

    pub fn constant(v: f64) -> TimeSeries {
        TimeSeries { points: vec![(0.0, v)] }
    }

    pub fn is_sorted(&self) -> bool {
        self.points.windows(2).all(|w| w[0].0 < w[1].0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.points.len() {
            0 => 0.0,
            1 => self.points[0].1,
            _ => {
                if t <= self.points[0].0 {
                    return self.points[0].1;
                }
                if t >= self.points[self.points.len() - 1].0 {
                    return self.points[self.points.len() - 1].1;
                }
                let k = self.points.partition_point(|p| p.0 <= t);
                let (t0, v0) = self.points[k - 1];
                let (t1, v1) = self.points[k];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_and_clamps() {
        let s = TimeSeries::new(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 2.0), (4.0, 0.0)]);
        assert_eq!(s.eval(-1.0), 0.0);
        assert_eq!(s.eval(0.5), 1.0);
        assert_eq!(s.eval(2.0), 2.0);
        assert_eq!(s.eval(3.5), 1.0);
        assert_eq!(s.eval(9.0), 0.0);
        assert!(s.is_sorted());
    }

    #[test]
    fn degenerate_series() {
        assert_eq!(TimeSeries::constant(0.17).eval(5.0), 0.17);
        assert_eq!(TimeSeries::new(vec![]).eval(1.0), 0.0);
    }
}
