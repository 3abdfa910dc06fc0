//! Exact finite-dimensional laws of the process.
//!
//! Because `Y_{n} = Σ_j X_{n+j}[k−1−j]` and the vectors X_r are i.i.d.,
//! the joint characteristic function of any marginal (Y_{n_1}, …, Y_{n_p})
//! factorizes over the vectors: vector r contributes coordinate slot
//! k−1−(r−n) to Y_n whenever 0 ≤ r−n ≤ k−1, each slot receiving at most
//! one frequency, so
//!
//! ```text
//! Φ(t) = ∏_r Φ_ν(s_r),   s_r[k−1−(r−n_p)] = t_p
//! ```
//!
//! with the product running over the finitely many vectors that touch the
//! index set. [`cf_marginal`] evaluates this for arbitrary index sets.
//! [`cf_block_convolution`] evaluates consecutive windows instead as the
//! explicit convolution of embedded blocks — (k−1) Gaussian prefix blocks,
//! the overlapping full-law blocks, (k−1) Gaussian suffix blocks — which
//! is an algebraically independent route that must agree to near machine
//! precision. [`mixed_moment`] expands small product moments symbolically;
//! no sampling anywhere in this module.

use num_complex::Complex64;

use crate::dist::PerturbedGaussian;
use crate::error::{Error, Result};

/// A finite marginal of the process: strictly increasing indices plus a
/// frequency point of the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalQuery {
    indices: Vec<i64>,
    t: Vec<f64>,
}

impl MarginalQuery {
    pub fn new(indices: Vec<i64>, t: Vec<f64>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("index set must be nonempty".into()));
        }
        if indices.len() != t.len() {
            return Err(Error::DimensionMismatch {
                expected: indices.len(),
                got: t.len(),
            });
        }
        if !indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(
                "indices must be strictly increasing".into(),
            ));
        }
        if !t.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("frequencies must be finite".into()));
        }
        Ok(Self { indices, t })
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }
}

/// Exact characteristic function of (Y_{n_1}, …, Y_{n_p}).
pub fn cf_marginal(dist: &PerturbedGaussian, query: &MarginalQuery) -> Complex64 {
    let k = dist.k() as i64;
    let indices = query.indices();
    let t = query.t();
    let first = indices[0];
    let last = *indices.last().unwrap();
    let mut slots = vec![0.0; dist.k()];
    let mut cf = Complex64::new(1.0, 0.0);
    for r in first..=last + k - 1 {
        slots.fill(0.0);
        let mut touched = false;
        for (p, &n) in indices.iter().enumerate() {
            let off = r - n;
            if (0..k).contains(&off) {
                slots[(k - 1 - off) as usize] = t[p];
                touched = true;
            }
        }
        if touched {
            cf *= dist.cf_unchecked(&slots);
        }
    }
    cf
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    /// Independent standard normal coordinates embedded on the range.
    Gaussian,
    /// A full copy of the perturbed law embedded on the range (width k).
    Full,
}

/// One convolution factor of a consecutive window's law, covering the
/// inclusive 0-based coordinate range [lo, hi] of the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockSpec {
    pub kind: BlockKind,
    pub lo: usize,
    pub hi: usize,
}

impl BlockSpec {
    pub fn width(&self) -> usize {
        self.hi - self.lo + 1
    }
}

/// The block list for a window of length m ≥ k: Gaussian prefixes of
/// widths 1..k−1, the m−k+1 embedded full-law blocks, Gaussian suffixes
/// of widths k−1..1. Together the blocks cover every window coordinate
/// exactly k times.
pub fn convolution_blocks(k: usize, m: usize) -> Result<Vec<BlockSpec>> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("k must be ≥ 2, got {k}")));
    }
    if m < k {
        return Err(Error::Unsupported(format!(
            "window length {m} is below k = {k}; use cf_marginal for short windows"
        )));
    }
    let mut blocks = Vec::with_capacity(m + k - 1);
    for j in 0..k - 1 {
        blocks.push(BlockSpec {
            kind: BlockKind::Gaussian,
            lo: 0,
            hi: j,
        });
    }
    for j in 0..=m - k {
        blocks.push(BlockSpec {
            kind: BlockKind::Full,
            lo: j,
            hi: j + k - 1,
        });
    }
    for j in m - k + 1..m {
        blocks.push(BlockSpec {
            kind: BlockKind::Gaussian,
            lo: j,
            hi: m - 1,
        });
    }
    Ok(blocks)
}

/// Exact characteristic function of the consecutive window
/// (Y_{n+1}, …, Y_{n+m}), m ≥ k, evaluated as the product over the
/// explicit convolution block list.
pub fn cf_block_convolution(
    dist: &PerturbedGaussian,
    m: usize,
    t: &[f64],
) -> Result<Complex64> {
    if t.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: t.len(),
        });
    }
    let blocks = convolution_blocks(dist.k(), m)?;
    let mut cf = Complex64::new(1.0, 0.0);
    for b in &blocks {
        match b.kind {
            BlockKind::Gaussian => {
                let sq: f64 = t[b.lo..=b.hi].iter().map(|v| v * v).sum();
                cf *= Complex64::new((-0.5 * sq).exp(), 0.0);
            }
            BlockKind::Full => {
                cf *= dist.cf_unchecked(&t[b.lo..=b.hi]);
            }
        }
    }
    Ok(cf)
}

/// |Φ(t) − e^{-k|t|²/2}|: the exact deviation of the m-window law from
/// N(0, kI_m). Zero (to rounding) whenever m ≤ k−1 or any coordinate of
/// t is zero.
pub fn nongaussianity_gap(dist: &PerturbedGaussian, t: &[f64]) -> Result<f64> {
    if t.is_empty() {
        return Err(Error::InvalidInput("frequency point must be nonempty".into()));
    }
    let indices: Vec<i64> = (0..t.len() as i64).collect();
    let query = MarginalQuery::new(indices, t.to_vec())?;
    let cf = cf_marginal(dist, &query);
    Ok((cf - gaussian_window_cf(dist.k(), t)).norm())
}

/// e^{-k|t|²/2}: the CF the window would have if the process were the
/// Gaussian one with the same second-order structure.
pub fn gaussian_window_cf(k: usize, t: &[f64]) -> Complex64 {
    let sq: f64 = t.iter().map(|v| v * v).sum();
    Complex64::new((-0.5 * k as f64 * sq).exp(), 0.0)
}

/// Mixed-moment order budget: Σ orders ≤ k + 2.
pub fn moment_order_budget(k: usize) -> u32 {
    k as u32 + 2
}

/// Exact E[Y_{n_1}^{a_1} ⋯ Y_{n_p}^{a_p}] by symbolic expansion.
///
/// Each exponent is distributed multinomially over the k vectors feeding
/// its index; a vector's factor is the product of 1-D standard normal
/// moments of its received degrees, plus the perturbation product — which
/// survives only when all k slots of that vector carry odd degree.
pub fn mixed_moment(dist: &PerturbedGaussian, indices: &[i64], orders: &[u32]) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::InvalidInput("index set must be nonempty".into()));
    }
    if indices.len() != orders.len() {
        return Err(Error::DimensionMismatch {
            expected: indices.len(),
            got: orders.len(),
        });
    }
    if !indices.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidInput(
            "indices must be strictly increasing".into(),
        ));
    }
    let total: u32 = orders.iter().sum();
    if total > moment_order_budget(dist.k()) {
        return Err(Error::Unsupported(format!(
            "total moment order {total} exceeds the budget {} for k = {}",
            moment_order_budget(dist.k()),
            dist.k()
        )));
    }

    let k = dist.k();
    let first = indices[0];
    let n_vectors = (indices[indices.len() - 1] - first) as usize + k;
    // degrees[v][slot]: degree landed on coordinate `slot` of vector v
    let mut degrees = vec![vec![0u32; k]; n_vectors];
    let mut total_moment = 0.0;
    distribute(
        dist,
        indices,
        orders,
        first,
        0,
        1.0,
        &mut degrees,
        &mut total_moment,
    );
    Ok(total_moment)
}

/// Recursively split orders[p] over the k vectors covering indices[p],
/// then score the leaf.
#[allow(clippy::too_many_arguments)]
fn distribute(
    dist: &PerturbedGaussian,
    indices: &[i64],
    orders: &[u32],
    first: i64,
    p: usize,
    weight: f64,
    degrees: &mut Vec<Vec<u32>>,
    acc: &mut f64,
) {
    if p == indices.len() {
        *acc += weight * leaf_value(degrees);
        return;
    }
    let k = dist.k();
    let base_vector = (indices[p] - first) as usize;
    // compositions of orders[p] into k labelled parts (offset j of the
    // covering vectors), weighted by the multinomial coefficient
    let mut parts = vec![0u32; k];
    compose(orders[p], 0, &mut parts, &mut |parts: &[u32]| {
        let w = weight * multinomial(orders[p], parts);
        // offset j means vector indices[p]+j, slot k-1-j
        for (j, &a) in parts.iter().enumerate() {
            if a > 0 {
                degrees[base_vector + j][k - 1 - j] += a;
            }
        }
        distribute(dist, indices, orders, first, p + 1, w, degrees, acc);
        for (j, &a) in parts.iter().enumerate() {
            if a > 0 {
                degrees[base_vector + j][k - 1 - j] -= a;
            }
        }
    });
}

fn compose(remaining: u32, pos: usize, parts: &mut Vec<u32>, visit: &mut impl FnMut(&[u32])) {
    if pos == parts.len() - 1 {
        parts[pos] = remaining;
        visit(parts);
        parts[pos] = 0;
        return;
    }
    for take in 0..=remaining {
        parts[pos] = take;
        compose(remaining - take, pos + 1, parts, visit);
    }
    parts[pos] = 0;
}

fn multinomial(total: u32, parts: &[u32]) -> f64 {
    let mut v = factorial(total);
    for &p in parts {
        v /= factorial(p);
    }
    v
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// E_ν[∏ x_c^{b_c}] for one vector: product of 1-D N(0,1) moments plus
/// the perturbation product, which needs every slot odd.
fn leaf_value(degrees: &[Vec<u32>]) -> f64 {
    let mut value = 1.0;
    for vector in degrees {
        let mut gauss = 1.0;
        let mut pert = 1.0;
        for &b in vector {
            gauss *= normal_moment(b);
            pert *= perturbation_moment(b);
        }
        value *= gauss + pert;
        if value == 0.0 {
            return 0.0;
        }
    }
    value
}

/// E[Z^b] for Z ~ N(0,1): (b−1)!! for even b, else 0.
fn normal_moment(b: u32) -> f64 {
    if b % 2 == 1 {
        return 0.0;
    }
    let mut v = 1.0;
    let mut odd = 1u32;
    while odd + 1 <= b {
        v *= odd as f64;
        odd += 2;
    }
    v
}

/// (2π)^{-1/2} ∫ x^{b+1} e^{-x²} dx = b!! / (√2 · 2^{(b+1)/2}) for odd b,
/// else 0.
fn perturbation_moment(b: u32) -> f64 {
    if b % 2 == 0 {
        return 0.0;
    }
    let mut double_fact = 1.0;
    let mut odd = 1u32;
    while odd <= b {
        double_fact *= odd as f64;
        odd += 2;
    }
    double_fact / (std::f64::consts::SQRT_2 * (((b + 1) / 2) as f64).exp2())
}
