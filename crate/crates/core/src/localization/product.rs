//! Additivity of the collapse entropy functional for independent subsystems.

use super::trial::{LocalizationPair, Side, MIN_BRANCH_WEIGHT};
use crate::error::{invalid, Error, Result};
use crate::wave::observables::xlogx;
use crate::wave::WaveFunction;

/// Largest per-axis grid accepted for the joint quadrature.
pub const PRODUCT_MAX_POINTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProductSPrime {
    /// `sum_{a,b} w_a w_b integral |Phi_ab|^2 log |Phi_ab|^2 dx dy` on the
    /// joint grid.
    pub joint: f64,
    /// `S'_A + S'_B` from the single-particle branches.
    pub sum: f64,
}

/// Branch weights and normalized branch densities of one subsystem.
fn branches(psi: &WaveFunction, pair: &LocalizationPair) -> Result<Vec<(f64, Vec<f64>)>> {
    if pair.p_l.len() != psi.grid().len() {
        return Err(invalid("pair", "envelope length does not match the grid"));
    }
    let g = psi.grid();
    let rho = psi.density();
    let mut out = Vec::with_capacity(2);
    for side in [Side::L, Side::R] {
        let p = pair.envelope(side);
        let w = g.integrate_with(|i| p[i] * p[i] * rho[i]);
        if w < MIN_BRANCH_WEIGHT {
            continue;
        }
        out.push((w, rho.iter().zip(p).map(|(r, p)| p * p * r / w).collect()));
    }
    Ok(out)
}

/// Compare `S'` of the joint split of a product state `psi_a(x) psi_b(y)`
/// against the sum of the single-particle values.
///
/// The joint value is computed by brute-force 2D trapezoid quadrature over
/// the four product branches, without using the factorization.
pub fn s_prime_product_factorization(
    psi_a: &WaveFunction,
    psi_b: &WaveFunction,
    pair_a: &LocalizationPair,
    pair_b: &LocalizationPair,
) -> Result<ProductSPrime> {
    for psi in [psi_a, psi_b] {
        let n = psi.grid().len();
        if n > PRODUCT_MAX_POINTS {
            return Err(Error::GridTooLarge {
                n,
                max: PRODUCT_MAX_POINTS,
            });
        }
    }
    let (ga, gb) = (psi_a.grid(), psi_b.grid());
    let (ra, rb) = (psi_a.density(), psi_b.density());
    let (na, nb) = (ga.len(), gb.len());

    let mut joint = 0.0;
    for (pa, pb) in [Side::L, Side::R]
        .into_iter()
        .flat_map(|a| [(a, Side::L), (a, Side::R)])
        .map(|(a, b)| (pair_a.envelope(a), pair_b.envelope(b)))
    {
        let mut dens = vec![0.0; na * nb];
        for i in 0..na {
            for j in 0..nb {
                dens[i * nb + j] = pa[i] * pa[i] * ra[i] * pb[j] * pb[j] * rb[j];
            }
        }
        let quad = |f: &dyn Fn(usize, usize) -> f64| {
            let mut acc = 0.0;
            for i in 0..na {
                for j in 0..nb {
                    acc += ga.weight(i) * gb.weight(j) * f(i, j);
                }
            }
            acc
        };
        let w = quad(&|i, j| dens[i * nb + j]);
        if w < MIN_BRANCH_WEIGHT {
            continue;
        }
        joint += w * quad(&|i, j| xlogx(dens[i * nb + j] / w));
    }

    let single = |psi: &WaveFunction, pair| -> Result<f64> {
        let g = psi.grid();
        Ok(branches(psi, pair)?
            .into_iter()
            .map(|(w, d)| w * g.integrate_with(|i| xlogx(d[i])))
            .sum())
    };
    let sum = single(psi_a, pair_a)? + single(psi_b, pair_b)?;
    Ok(ProductSPrime { joint, sum })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localization::trial_pair;
    use crate::wave::{gaussian_packet, Grid1D};

    #[test]
    fn trivial_second_split_reduces_to_single() {
        let g = Grid1D::new(-6.0, 6.0, 64).unwrap();
        let a = gaussian_packet(&g, -0.5, 0.8, 1.0).unwrap();
        let b = gaussian_packet(&g, 0.7, 1.1, 0.0).unwrap();
        let pa = trial_pair(&g, 0.0, 0.6).unwrap();
        let pb = LocalizationPair::trivial(&g);
        let r = s_prime_product_factorization(&a, &b, &pa, &pb).unwrap();
        assert!((r.joint - r.sum).abs() < 1e-8);
        let swapped = s_prime_product_factorization(&b, &a, &pb, &pa).unwrap();
        assert!((swapped.joint - r.joint).abs() < 1e-12);
    }

    #[test]
    fn guard() {
        let g = Grid1D::new(-6.0, 6.0, 65).unwrap();
        let a = gaussian_packet(&g, 0.0, 0.8, 0.0).unwrap();
        let p = LocalizationPair::trivial(&g);
        assert!(matches!(
            s_prime_product_factorization(&a, &a, &p, &p),
            Err(Error::GridTooLarge { .. })
        ));
    }
}
