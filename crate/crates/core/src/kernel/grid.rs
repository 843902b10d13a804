use std::fmt;

use crate::error::{Error, Result};

/// Uniform grid `x_i = i h`, `i = 0..n`, on the truncated half-line `[0, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    h: f64,
    n: usize,
}

impl Grid {
    pub const MIN_POINTS: usize = 8;

    pub fn new(h: f64, n: usize) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("step must be positive, got {h}")));
        }
        if n < Self::MIN_POINTS {
            return Err(Error::InvalidGrid(format!("need at least {} points, got {n}", Self::MIN_POINTS)));
        }
        Ok(Self { h, n })
    }

    /// Grid with step `h` whose last node is `x_max`; `x_max` must be a multiple of `h`.
    pub fn with_extent(h: f64, x_max: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0 && x_max.is_finite() && x_max > 0.0) {
            return Err(Error::InvalidGrid(format!("bad extent h={h} x_max={x_max}")));
        }
        let steps = (x_max / h).round();
        if (steps * h - x_max).abs() > 1e-9 * x_max {
            return Err(Error::InvalidGrid(format!("x_max={x_max} is not a multiple of h={h}")));
        }
        Self::new(h, steps as usize + 1)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_max(&self) -> f64 {
        self.h * (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    /// Number of whole grid steps in `t`. Fails unless `t >= 0` is a multiple of `h`.
    pub fn steps(&self, t: f64) -> Result<usize> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidTime { t, reason: "must be finite and nonnegative" });
        }
        let m = (t / self.h).round();
        if (m * self.h - t).abs() > 1e-9 * self.h.max(t) {
            return Err(Error::InvalidTime { t, reason: "must be a multiple of the grid step" });
        }
        Ok(m as usize)
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch { left: *self, right: *other })
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "h={} n={}", self.h, self.n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extent_round_trip() {
        let g = Grid::with_extent(1.0 / 64.0, 12.0).unwrap();
        assert_eq!(g.n(), 769);
        assert_eq!(g.x_max(), 12.0);
    }

    #[test]
    fn rejects_small_or_bad_grids() {
        assert!(Grid::new(0.1, 7).is_err());
        assert!(Grid::new(0.0, 10).is_err());
        assert!(Grid::new(f64::NAN, 10).is_err());
        assert!(Grid::with_extent(0.3, 1.0).is_err());
    }

    #[test]
    fn steps_require_multiples() {
        let g = Grid::new(0.25, 16).unwrap();
        assert_eq!(g.steps(0.0).unwrap(), 0);
        assert_eq!(g.steps(1.5).unwrap(), 6);
        assert!(g.steps(0.3).is_err());
        assert!(g.steps(-0.25).is_err());
    }
}
