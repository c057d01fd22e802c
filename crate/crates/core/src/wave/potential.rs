use serde::{Deserialize, Serialize};

/// External potential V(x, t).
///
/// Hard walls are not part of the potential: they are the Dirichlet edges of
/// the grid. The well kinds therefore only describe the central bump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Free,
    /// `amplitude * exp(-a x^2)`.
    GaussianBarrier { amplitude: f64, a: f64 },
    /// Square bump of the given width and height centred at x = 0.
    DoubleWell { bump_width: f64, bump_height: f64 },
    /// Same bump, used with a domain whose right wall is moved far away.
    HalfOpenWell { bump_width: f64, bump_height: f64 },
    /// Square bump at x = 0 whose height grows as `rate * t`.
    GrowingBump { bump_width: f64, rate: f64 },
}

impl Potential {
    #[inline]
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match *self {
            Potential::Free => 0.0,
            Potential::GaussianBarrier { amplitude, a } => amplitude * (-a * x * x).exp(),
            Potential::DoubleWell {
                bump_width,
                bump_height,
            }
            | Potential::HalfOpenWell {
                bump_width,
                bump_height,
            } => square(x, bump_width, bump_height),
            Potential::GrowingBump { bump_width, rate } => square(x, bump_width, rate * t),
        }
    }

    pub fn is_static(&self) -> bool {
        !matches!(self, Potential::GrowingBump { .. })
    }

    /// Sample the potential on a grid at time `t`.
    pub fn sample(&self, grid: &super::Grid1D, t: f64) -> Vec<f64> {
        grid.xs().map(|x| self.eval(x, t)).collect()
    }
}

#[inline]
fn square(x: f64, width: f64, height: f64) -> f64 {
    if x.abs() <= 0.5 * width {
        height
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_kinds_ignore_time() {
        let v = Potential::GaussianBarrier {
            amplitude: 0.08,
            a: 4.0,
        };
        assert_eq!(v.eval(0.0, 0.0), 0.08);
        assert_eq!(v.eval(0.3, 5.0), v.eval(0.3, 0.0));
        let w = Potential::DoubleWell {
            bump_width: 0.1,
            bump_height: 0.1,
        };
        assert_eq!(w.eval(0.04, 1.0), 0.1);
        assert_eq!(w.eval(0.06, 1.0), 0.0);
        assert!(w.is_static());
    }

    #[test]
    fn growing_bump_is_linear_in_time() {
        let v = Potential::GrowingBump {
            bump_width: 0.1,
            rate: 0.1,
        };
        assert!(!v.is_static());
        assert!((v.eval(0.0, 30.0) - 3.0).abs() < 1e-15);
        assert_eq!(v.eval(0.5, 30.0), 0.0);
    }
}
