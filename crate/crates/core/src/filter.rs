//! Smooth cutoff filters `eta` with `chi_[0,1] <= eta <= chi_[0,2]`.

/// A filter evaluated at spectral ratios `t = k / n`.
pub trait Filter: Send + Sync {
    fn eval(&self, t: f64) -> f64;
}

/// The C-infinity partition-of-unity bump: `h(2-t) / (h(2-t) + h(t-1))` on `(1, 2)` with
/// `h(s) = exp(-1/s)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SmoothStep;

fn h(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

impl Filter for SmoothStep {
    fn eval(&self, t: f64) -> f64 {
        if t <= 1.0 {
            1.0
        } else if t >= 2.0 {
            0.0
        } else {
            let up = h(2.0 - t);
            up / (up + h(t - 1.0))
        }
    }
}
