use serde::{Deserialize, Serialize};

use super::HORIZON;
use crate::data::BoundingBox;
use crate::error::{Error, Result};
use crate::prediction::PredictionSet;

/// Below this x-variance (px²) a corner's line is fitted against time instead of x.
pub const DEGENERATE_X_VARIANCE: f64 = 1e-6;

/// Fitted motion of one box corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerLine {
    /// `y = slope * x + intercept`, or `y = slope * t + intercept` when degenerate.
    pub slope: f64,
    pub intercept: f64,
    /// Mean x step per frame over the observation.
    pub alpha: f64,
    pub degenerate: bool,
    /// Last observed x.
    pub x_last: f64,
    /// Frame index of the last observation (observations are `0 ..= t_last`).
    pub t_last: f64,
}

impl CornerLine {
    fn fit(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len();
        let t_last = (n - 1) as f64;
        let alpha = (xs[n - 1] - xs[0]) / t_last;
        let ts: Vec<f64> = (0..n).map(|t| t as f64).collect();
        let degenerate = variance(xs) < DEGENERATE_X_VARIANCE;
        let (slope, intercept) = least_squares(if degenerate { &ts } else { xs }, ys);
        Self {
            slope,
            intercept,
            alpha,
            degenerate,
            x_last: xs[n - 1],
            t_last,
        }
    }

    /// Corner position `k` frames after the last observation.
    pub fn at(&self, k: usize) -> (f64, f64) {
        let k = k as f64;
        if self.degenerate {
            (self.x_last, self.slope * (self.t_last + k) + self.intercept)
        } else {
            let x = self.x_last + k * self.alpha;
            (x, self.slope * x + self.intercept)
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

/// Ordinary least squares `y = a x + b` in centered form.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(xs), mean(ys));
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let a = sxy / sxx;
    (a, my - a * mx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerRegression {
    pub top_left: CornerLine,
    pub bottom_right: CornerLine,
}

impl CornerRegression {
    pub fn fit(observed: &[BoundingBox]) -> Result<Self> {
        if observed.len() < 2 {
            return Err(Error::contract(format!(
                "LR needs at least 2 observed boxes, got {}",
                observed.len()
            )));
        }
        let col = |f: fn(&BoundingBox) -> f64| observed.iter().map(f).collect::<Vec<_>>();
        Ok(Self {
            top_left: CornerLine::fit(&col(|b| b.x1), &col(|b| b.y1)),
            bottom_right: CornerLine::fit(&col(|b| b.x2), &col(|b| b.y2)),
        })
    }

    pub fn at(&self, k: usize) -> BoundingBox {
        let (x1, y1) = self.top_left.at(k);
        let (x2, y2) = self.bottom_right.at(k);
        BoundingBox::new(x1, y1, x2, y2)
    }
}

/// Offsets `+2 ..= +10` from per-corner constant-velocity regression. Boxes are not clamped.
pub fn lr_fit_predict(observed: &[BoundingBox]) -> Result<PredictionSet> {
    let model = CornerRegression::fit(observed)?;
    Ok(PredictionSet::from_boxes((2..=HORIZON).map(|k| model.at(k)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continues_a_diagonal() {
        let obs: Vec<_> = (0..10)
            .map(|t| {
                let t = t as f64;
                BoundingBox::new(10.0 + 2.0 * t, 20.0 + t, 50.0 + 2.0 * t, 120.0 + 1.5 * t)
            })
            .collect();
        let p = lr_fit_predict(&obs).unwrap();
        for (i, b) in p.boxes.iter().enumerate() {
            let t = (9 + i + 2) as f64;
            let e = BoundingBox::new(10.0 + 2.0 * t, 20.0 + t, 50.0 + 2.0 * t, 120.0 + 1.5 * t);
            assert!((b.x1 - e.x1).abs() < 1e-9 && (b.y1 - e.y1).abs() < 1e-9);
            assert!((b.x2 - e.x2).abs() < 1e-9 && (b.y2 - e.y2).abs() < 1e-9);
        }
    }

    #[test]
    fn stationary_box_uses_time_fallback() {
        let b = BoundingBox::new(5.0, 6.0, 30.0, 90.0);
        let m = CornerRegression::fit(&[b; 10]).unwrap();
        assert!(m.top_left.degenerate && m.bottom_right.degenerate);
        assert_eq!(m.top_left.alpha, 0.0);
        let p = lr_fit_predict(&[b; 10]).unwrap();
        assert!(p.boxes.iter().all(|x| *x == b));
    }

    #[test]
    fn vertical_motion_extrapolates_in_time() {
        let obs: Vec<_> = (0..10)
            .map(|t| BoundingBox::new(40.0, 10.0 + 3.0 * t as f64, 80.0, 100.0 + 3.0 * t as f64))
            .collect();
        let p = lr_fit_predict(&obs).unwrap();
        let last = p.final_box().unwrap();
        assert!((last.y1 - (10.0 + 3.0 * 19.0)).abs() < 1e-9);
        assert_eq!(last.x1, 40.0);
    }
}
