use serde::{Deserialize, Serialize};

use super::{Grid1D, C64};
use crate::error::{invalid, Error, Result};

/// Complex amplitudes on a uniform grid with hard walls at both edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveFunction {
    grid: Grid1D,
    amp: Vec<C64>,
}

impl WaveFunction {
    /// Wrap raw amplitudes. The edge samples are forced to zero.
    pub fn new(grid: Grid1D, mut amp: Vec<C64>) -> Result<Self> {
        if amp.len() != grid.len() {
            return Err(invalid(
                "amp",
                format!("length {} does not match grid size {}", amp.len(), grid.len()),
            ));
        }
        if amp.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(invalid("amp", "non-finite amplitude"));
        }
        let n = amp.len();
        amp[0] = C64::new(0.0, 0.0);
        amp[n - 1] = C64::new(0.0, 0.0);
        Ok(WaveFunction { grid, amp })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> C64) -> Result<Self> {
        let amp = grid.xs().map(f).collect();
        Self::new(grid, amp)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn amp(&self) -> &[C64] {
        &self.amp
    }

    pub(crate) fn amp_mut(&mut self) -> &mut [C64] {
        &mut self.amp
    }

    pub fn into_amp(self) -> Vec<C64> {
        self.amp
    }

    pub fn density(&self) -> Vec<f64> {
        self.amp.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.grid.integrate_with(|i| self.amp[i].norm_sqr())
    }

    /// Rescale to unit norm.
    pub fn normalize(&mut self) -> Result<()> {
        let n2 = self.norm_sqr();
        if !(n2 > 0.0 && n2.is_finite()) {
            return Err(invalid("psi", format!("cannot normalize state with norm^2 = {n2}")));
        }
        let s = 1.0 / n2.sqrt();
        self.amp.iter_mut().for_each(|a| *a *= s);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    /// Multiply pointwise by a real envelope.
    pub fn scaled_by(&self, envelope: &[f64]) -> WaveFunction {
        WaveFunction {
            grid: self.grid.clone(),
            amp: self.amp.iter().zip(envelope).map(|(a, p)| a * p).collect(),
        }
    }

    /// <self|other> with trapezoidal measure.
    pub fn inner(&self, other: &WaveFunction) -> C64 {
        self.amp
            .iter()
            .zip(&other.amp)
            .enumerate()
            .map(|(i, (a, b))| a.conj() * b * self.grid.weight(i))
            .sum()
    }
}

/// Normalized Gaussian packet `exp(-((x - x_c)/delta)^2) exp(i p0 x)`.
pub fn gaussian_packet(grid: &Grid1D, x_c: f64, delta: f64, p0: f64) -> Result<WaveFunction> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid("delta", format!("must be positive, got {delta}")));
    }
    let envelope = |x: f64| (-((x - x_c) / delta).powi(2)).exp();
    // The peak envelope value is 1 when x_c lies inside the domain.
    let peak = if (grid.x_min()..=grid.x_max()).contains(&x_c) {
        1.0
    } else {
        envelope(x_c.clamp(grid.x_min(), grid.x_max()))
    };
    let edge = envelope(grid.x_min()).max(envelope(grid.x_max()));
    let ratio = if peak > 0.0 { edge / peak } else { f64::INFINITY };
    if ratio >= 1e-10 {
        return Err(Error::PacketClipped { ratio });
    }
    WaveFunction::from_fn(grid.clone(), |x| C64::from_polar(envelope(x), p0 * x))?.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid1D {
        Grid1D::new(-16.0, 16.0, 1024).unwrap()
    }

    #[test]
    fn packet_is_normalized_with_walls() {
        let psi = gaussian_packet(&grid(), -8.0, 1.25, 8.0).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        assert_eq!(psi.amp()[0], C64::new(0.0, 0.0));
        assert_eq!(psi.amp()[1023], C64::new(0.0, 0.0));
    }

    #[test]
    fn clipped_packet_is_rejected() {
        let r = gaussian_packet(&grid(), 14.0, 2.0, 0.0);
        assert!(matches!(r, Err(Error::PacketClipped { .. })));
    }

    #[test]
    fn normalize_round_trip_is_stable() {
        let mut psi = gaussian_packet(&grid(), 1.0, 1.0, 0.5).unwrap();
        for _ in 0..10 {
            psi.normalize().unwrap();
        }
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_state_cannot_be_normalized() {
        let psi = WaveFunction::new(grid(), vec![C64::new(0.0, 0.0); 1024]).unwrap();
        assert!(psi.normalized().is_err());
    }
}
