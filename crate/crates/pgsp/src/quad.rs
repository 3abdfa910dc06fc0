//! Gauss–Hermite quadrature with the physicists' weight `e^{-x²}`.
//!
//! An n-point rule integrates `p(x) e^{-x²}` exactly for polynomials `p`
//! of degree ≤ 2n−1, which is what the moment oracle needs: every
//! integrand there is a monomial times a Gaussian.

use crate::error::{Error, Result};

const NEWTON_EPS: f64 = 3e-14;
const NEWTON_MAX_ITER: usize = 100;

/// Nodes and weights of an n-point Gauss–Hermite rule on (−∞, ∞).
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Build the rule by Newton iteration on the orthonormal Hermite
    /// recurrence (nodes are symmetric about 0, so only half are solved).
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("quadrature order must be ≥ 1".into()));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let nf = n as f64;

        let half = n.div_ceil(2);
        let mut z = 0.0;
        for i in 0..half {
            // initial guesses: asymptotic for the largest root, then
            // extrapolation from the roots already found
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            let mut converged = false;
            for _ in 0..NEWTON_MAX_ITER {
                // evaluate the orthonormal Hermite polynomial of degree n at z
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2; // derivative at z
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= NEWTON_EPS {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::InvalidInput(format!(
                    "Gauss–Hermite iteration failed to converge for n = {n}"
                )));
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        // odd n leaves the middle node at exactly 0
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ∫ f(x) e^{-x²} dx.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// E[f(Z)] for Z ~ N(0,1), via the change of variables x = √2 u.
    pub fn expect_standard_normal<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let root2 = std::f64::consts::SQRT_2;
        self.integrate(|u| f(root2 * u)) / std::f64::consts::PI.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn three_point_rule_matches_known_values() {
        let rule = GaussHermite::new(3).unwrap();
        let x_expected = [1.224_744_871_391_589, 0.0, -1.224_744_871_391_589];
        let w_expected = [
            0.295_408_975_150_919_35,
            1.181_635_900_603_677_4,
            0.295_408_975_150_919_35,
        ];
        for i in 0..3 {
            assert_abs_diff_eq!(rule.nodes()[i], x_expected[i], epsilon = 1e-14);
            assert_abs_diff_eq!(rule.weights()[i], w_expected[i], epsilon = 1e-14);
        }
    }

    #[test]
    fn weights_sum_to_sqrt_pi() {
        for n in [1, 2, 5, 17, 40, 64] {
            let rule = GaussHermite::new(n).unwrap();
            assert_abs_diff_eq!(
                rule.weights().iter().sum::<f64>(),
                PI.sqrt(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn nodes_are_symmetric_and_sorted() {
        let rule = GaussHermite::new(40).unwrap();
        for i in 0..40 {
            assert_abs_diff_eq!(rule.nodes()[i], -rule.nodes()[39 - i], epsilon = 0.0);
        }
        for w in rule.nodes().windows(2) {
            assert!(w[0] > w[1]);
        }
    }

    #[test]
    fn gaussian_moments_are_exact() {
        // E[Z^{2m}] = (2m-1)!! for the standard normal
        let rule = GaussHermite::new(40).unwrap();
        let double_factorials: [f64; 7] = [1.0, 1.0, 3.0, 15.0, 105.0, 945.0, 10395.0];
        for (m, &df) in double_factorials.iter().enumerate() {
            let got = rule.expect_standard_normal(|z| z.powi(2 * m as i32));
            assert_abs_diff_eq!(got, df, epsilon = 1e-10 * df.max(1.0));
        }
        // odd moments vanish
        for m in [1, 3, 5] {
            let got = rule.expect_standard_normal(|z| z.powi(m));
            assert_abs_diff_eq!(got, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn x_squared_against_closed_form() {
        let rule = GaussHermite::new(10).unwrap();
        assert_abs_diff_eq!(
            rule.integrate(|x| x * x),
            PI.sqrt() / 2.0,
            epsilon = 1e-13
        );
    }

    #[test]
    fn zero_order_is_rejected() {
        assert!(GaussHermite::new(0).is_err());
    }
}
