//! The k-dimensional perturbed Gaussian law.
//!
//! Its density multiplies the standard k-variate normal by the factor
//! `1 + x_1⋯x_k e^{-|x|²/2}`:
//!
//! ```text
//! ψ(x) = (2π)^{-k/2} (1 + x_1⋯x_k e^{-|x|²/2}) e^{-|x|²/2}
//! ```
//!
//! The perturbation term integrates to zero against any set of at most
//! k−1 coordinates, so dropping any one coordinate leaves i.i.d. N(0,1)
//! marginals, while the full k-dimensional law is not Gaussian. The
//! characteristic function is
//!
//! ```text
//! Φ(t) = e^{-|t|²/2} + (i/(2√2))^k (t_1⋯t_k) e^{-|t|²/4}
//! ```
//!
//! (one integration by parts per coordinate on the perturbation term).

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::quad::GaussHermite;

/// Proposal cap for one rejection draw. The acceptance rate is at least
/// 1/(1+e^{-1}) ≈ 0.73, so hitting the cap has probability below
/// 10^{-100} and indicates a broken RNG.
pub const MAX_REJECTION_PROPOSALS: u32 = 1000;

/// Largest dimension the quadrature moment oracle accepts.
pub const MAX_QUADRATURE_DIM: usize = 4;
/// Largest per-coordinate exponent the moment oracle accepts.
pub const MAX_QUADRATURE_EXPONENT: u32 = 8;
/// Default Gauss–Hermite nodes per axis for the moment oracle.
pub const DEFAULT_QUADRATURE_NODES: usize = 40;

/// One draw from the law: a vector of k finite coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleVector {
    coords: Vec<f64>,
}

impl SampleVector {
    pub(crate) fn from_coords(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

impl std::ops::Deref for SampleVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.coords
    }
}

/// Parameters of the perturbed Gaussian law: the dimension k ≥ 2 plus
/// the constants derived from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbedGaussian {
    k: usize,
}

impl PerturbedGaussian {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput(format!(
                "dimension k must be ≥ 2, got {k}"
            )));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Envelope constant for the rejection sampler: 1 + e^{-k/2}.
    ///
    /// Coordinatewise, |x e^{-x²/2}| ≤ e^{-1/2}, so the density ratio
    /// against the standard normal proposal never exceeds this bound.
    pub fn rejection_bound(&self) -> f64 {
        1.0 + (-(self.k as f64) / 2.0).exp()
    }

    /// Expected acceptance probability per proposal: 1/(1 + e^{-k/2}).
    pub fn acceptance_rate(&self) -> f64 {
        1.0 / self.rejection_bound()
    }

    /// E[X_1 X_2 ⋯ X_k] = 2^{-3k/2}.
    pub fn product_moment(&self) -> f64 {
        (-1.5 * self.k as f64).exp2()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// The perturbation factor `x_1⋯x_k e^{-|x|²/2}`, evaluated in
    /// log-magnitude plus sign form so that huge coordinates underflow
    /// to 0 instead of producing inf·0 = NaN. Always in (-1, 1).
    pub fn perturbation(&self, x: &[f64]) -> f64 {
        let mut sign = 1.0;
        let mut log_mag = 0.0;
        for &c in x {
            if c == 0.0 {
                return 0.0;
            }
            if c < 0.0 {
                sign = -sign;
            }
            log_mag += c.abs().ln() - 0.5 * c * c;
        }
        sign * log_mag.exp()
    }

    /// ψ(x); strictly positive everywhere.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let norm_sq: f64 = x.iter().map(|c| c * c).sum();
        let gauss = (-0.5 * norm_sq).exp() * (2.0 * std::f64::consts::PI).powf(-0.5 * self.k as f64);
        Ok(gauss * (1.0 + self.perturbation(x)))
    }

    /// log ψ(x), stable for large |x| where the density underflows.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let norm_sq: f64 = x.iter().map(|c| c * c).sum();
        let log_gauss =
            -0.5 * norm_sq - 0.5 * self.k as f64 * (2.0 * std::f64::consts::PI).ln();
        Ok(log_gauss + self.perturbation(x).ln_1p())
    }

    /// Characteristic function Φ(t) = E[e^{i t·X}].
    pub fn cf(&self, t: &[f64]) -> Result<Complex64> {
        self.check_dim(t)?;
        Ok(self.cf_unchecked(t))
    }

    pub(crate) fn cf_unchecked(&self, t: &[f64]) -> Complex64 {
        let norm_sq: f64 = t.iter().map(|c| c * c).sum();
        let gauss = (-0.5 * norm_sq).exp();
        let prod: f64 = t.iter().product();
        // (i/(2√2))^k t_1⋯t_k e^{-|t|²/4}; i^k rotates the magnitude
        // into the axis picked by k mod 4
        let mag = self.product_moment() * prod * (-0.25 * norm_sq).exp();
        match self.k % 4 {
            0 => Complex64::new(gauss + mag, 0.0),
            1 => Complex64::new(gauss, mag),
            2 => Complex64::new(gauss - mag, 0.0),
            _ => Complex64::new(gauss, -mag),
        }
    }

    /// One exact draw by rejection against the standard normal proposal.
    /// Returns the number of proposals consumed.
    pub fn sample_into<R: Rng>(&self, rng: &mut R, out: &mut [f64]) -> u32 {
        self.sample_into_signed(rng, 1.0, out)
    }

    /// Rejection sampler with the perturbation scaled by `sign` (±1).
    /// `sign = -1.0` targets the mirrored law and exists as a fault
    /// injection hook for the verification suite's mutation test.
    pub(crate) fn sample_into_signed<R: Rng>(
        &self,
        rng: &mut R,
        sign: f64,
        out: &mut [f64],
    ) -> u32 {
        assert_eq!(out.len(), self.k, "output buffer must have length k");
        let bound = self.rejection_bound();
        for proposals in 1..=MAX_REJECTION_PROPOSALS {
            for c in out.iter_mut() {
                *c = rng.sample(StandardNormal);
            }
            let u: f64 = rng.random();
            if u * bound < 1.0 + sign * self.perturbation(out) {
                return proposals;
            }
        }
        panic!(
            "rejection sampler exceeded {MAX_REJECTION_PROPOSALS} proposals \
             (probability < 1e-100 under a working RNG)"
        );
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> SampleVector {
        let mut coords = vec![0.0; self.k];
        self.sample_into(rng, &mut coords);
        SampleVector { coords }
    }

    /// Quadrature oracle for E[X_1^{a_1} ⋯ X_k^{a_k}], using the default
    /// node count.
    pub fn moment(&self, exponents: &[u32]) -> Result<f64> {
        self.moment_with_nodes(exponents, DEFAULT_QUADRATURE_NODES)
    }

    /// Tensor-product Gauss–Hermite evaluation of a monomial moment.
    ///
    /// The density splits into a Gaussian term and a perturbation term,
    /// each a product of one-dimensional integrals, so the k-dimensional
    /// tensor sum collapses to a product of 1-D Gauss–Hermite sums.
    pub fn moment_with_nodes(&self, exponents: &[u32], nodes: usize) -> Result<f64> {
        self.check_dim_exponents(exponents)?;
        let rule = GaussHermite::new(nodes)?;
        let inv_sqrt_2pi = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let mut gauss_term = 1.0;
        let mut pert_term = 1.0;
        for &a in exponents {
            gauss_term *= rule.expect_standard_normal(|z| z.powi(a as i32));
            // (2π)^{-1/2} ∫ x^{a+1} e^{-x²} dx
            pert_term *= inv_sqrt_2pi * rule.integrate(|x| x.powi(a as i32 + 1));
        }
        Ok(gauss_term + pert_term)
    }

    fn check_dim_exponents(&self, exponents: &[u32]) -> Result<()> {
        if exponents.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                got: exponents.len(),
            });
        }
        if self.k > MAX_QUADRATURE_DIM {
            return Err(Error::Unsupported(format!(
                "moment oracle supports k ≤ {MAX_QUADRATURE_DIM}, got {}",
                self.k
            )));
        }
        if let Some(&a) = exponents.iter().find(|&&a| a > MAX_QUADRATURE_EXPONENT) {
            return Err(Error::Unsupported(format!(
                "moment oracle supports exponents ≤ {MAX_QUADRATURE_EXPONENT}, got {a}"
            )));
        }
        Ok(())
    }
}
