//! The stationary sequence built from i.i.d. perturbed-Gaussian vectors.
//!
//! With X_n the n-th vector (n ranging over all of Z), the process is the
//! anti-diagonal sum
//!
//! ```text
//! Y_n = X_{n}[k] + X_{n+1}[k-1] + ⋯ + X_{n+k-1}[1]
//! ```
//!
//! one coordinate from each of k consecutive vectors, the two labels in
//! each summand adding up to n+k. Vector streams are counter-based: each
//! index owns a private ChaCha8 substream derived from the root seed, so
//! segments regenerate bit-identically in any order and in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dist::{PerturbedGaussian, SampleVector};
use crate::error::{Error, Result};

// domain tags keep the process stream and the reference stream disjoint
// even under the same root seed
const DOMAIN_NU_VECTOR: u64 = 0x7067_7370_2e6e_7501;
const DOMAIN_GAUSS_REF: u64 = 0x7067_7370_2e67_7202;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-index substream. The four key words chain the root
/// seed, a domain tag and the index through splitmix64 (a bijection), so
/// distinct (seed, domain, index) triples always get distinct keys.
fn substream(root_seed: u64, domain: u64, n: i64) -> ChaCha8Rng {
    let w0 = splitmix64(root_seed);
    let w1 = splitmix64(w0 ^ domain);
    let w2 = splitmix64(w1 ^ (n as u64));
    let w3 = splitmix64(w2 ^ 0xD134_2543_DE82_EF95);
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&w0.to_le_bytes());
    key[8..16].copy_from_slice(&w1.to_le_bytes());
    key[16..24].copy_from_slice(&w2.to_le_bytes());
    key[24..32].copy_from_slice(&w3.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Anything that can produce the i.i.d. vector at a given integer index.
/// The simulator is generic over this so tests can substitute instrumented
/// or constant stubs.
pub trait VectorSource {
    fn k(&self) -> usize;
    /// Fill `out` (length k) with the vector at index `n`.
    fn vector_into(&self, n: i64, out: &mut [f64]);
}

/// Reproducible, index-addressable stream of i.i.d. perturbed-Gaussian
/// vectors. Same (root seed, k, index) always yields the same vector,
/// independent of query order or parallelism.
#[derive(Debug, Clone)]
pub struct VectorStream {
    dist: PerturbedGaussian,
    root_seed: u64,
    perturbation_sign: f64,
}

impl VectorStream {
    pub fn new(k: usize, root_seed: u64) -> Result<Self> {
        Ok(Self {
            dist: PerturbedGaussian::new(k)?,
            root_seed,
            perturbation_sign: 1.0,
        })
    }

    /// Fault injection hook: draw from the mirrored law (perturbation
    /// negated). The verification suite uses this to prove its detectors
    /// would catch a sign bug in the sampler.
    pub fn with_flipped_perturbation(mut self) -> Self {
        self.perturbation_sign = -self.perturbation_sign;
        self
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn dist(&self) -> &PerturbedGaussian {
        &self.dist
    }

    pub fn vector_at(&self, n: i64) -> SampleVector {
        let mut coords = vec![0.0; self.dist.k()];
        self.vector_into(n, &mut coords);
        SampleVector::from_coords(coords)
    }

    /// Path segment Y_{n0}, …, Y_{n0+len−1} with provenance attached.
    pub fn segment(&self, n0: i64, len: usize) -> Result<PathSegment> {
        let values = path_values(self, n0, len)?;
        Ok(PathSegment {
            k: self.dist.k() as u32,
            root_seed: self.root_seed,
            offset: n0,
            values,
        })
    }
}

impl VectorSource for VectorStream {
    fn k(&self) -> usize {
        self.dist.k()
    }

    fn vector_into(&self, n: i64, out: &mut [f64]) {
        let mut rng = substream(self.root_seed, DOMAIN_NU_VECTOR, n);
        self.dist
            .sample_into_signed(&mut rng, self.perturbation_sign, out);
    }
}

/// A contiguous realization of the process with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSegment {
    k: u32,
    root_seed: u64,
    offset: i64,
    values: Vec<f64>,
}

impl PathSegment {
    pub fn from_parts(k: u32, root_seed: u64, offset: i64, values: Vec<f64>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput(format!("k must be ≥ 2, got {k}")));
        }
        if values.is_empty() {
            return Err(Error::InvalidInput("segment must be nonempty".into()));
        }
        Ok(Self {
            k,
            root_seed,
            offset,
            values,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Generate Y_{n0..n0+len} from any vector source with a ring buffer of
/// k vectors: O(k) work per step, touching vectors n0..n0+len+k−2 only,
/// each exactly once.
pub fn path_values<S: VectorSource>(source: &S, n0: i64, len: usize) -> Result<Vec<f64>> {
    if len == 0 {
        return Err(Error::InvalidInput("segment length must be ≥ 1".into()));
    }
    let k = source.k();
    let mut ring: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut v = vec![0.0; k];
            source.vector_into(n0 + j as i64, &mut v);
            v
        })
        .collect();
    let mut out = Vec::with_capacity(len);
    for step in 0..len {
        // vector n0+step+j sits in ring slot (step+j) mod k
        let mut y = 0.0;
        for j in 0..k {
            y += ring[(step + j) % k][k - 1 - j];
        }
        out.push(y);
        if step + 1 < len {
            let retired = step % k;
            source.vector_into(n0 + step as i64 + k as i64, &mut ring[retired]);
        }
    }
    Ok(out)
}

/// All products of `window` consecutive values, in order.
pub fn sliding_products(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::InvalidInput("window must be ≥ 1".into()));
    }
    if window > values.len() {
        return Err(Error::InvalidInput(format!(
            "window {} exceeds segment length {}",
            window,
            values.len()
        )));
    }
    Ok(values
        .windows(window)
        .map(|w| w.iter().product())
        .collect())
}

/// Uniform interface over path producers, so the statistical tests run
/// unchanged against the real process and the calibration reference.
pub trait PathSampler {
    fn k(&self) -> usize;
    fn label(&self) -> &'static str;
    /// One realization of (Y_{n_1}, …, Y_{n_p}) for ascending indices.
    fn window_into(&mut self, indices: &[i64], out: &mut [f64]);
    /// Contiguous values Y_{n0..n0+len}.
    fn segment_values(&mut self, n0: i64, len: usize) -> Vec<f64>;
}

/// The real process as a `PathSampler`.
#[derive(Debug, Clone)]
pub struct ProcessSampler {
    stream: VectorStream,
    scratch: Vec<f64>,
}

impl ProcessSampler {
    pub fn new(stream: VectorStream) -> Self {
        let k = stream.dist().k();
        Self {
            stream,
            scratch: vec![0.0; k],
        }
    }

    pub fn stream(&self) -> &VectorStream {
        &self.stream
    }
}

impl PathSampler for ProcessSampler {
    fn k(&self) -> usize {
        self.stream.dist().k()
    }

    fn label(&self) -> &'static str {
        "process"
    }

    fn window_into(&mut self, indices: &[i64], out: &mut [f64]) {
        let k = self.k();
        for (slot, &n) in indices.iter().enumerate() {
            // same ascending-j summation order as the ring buffer, so
            // window values agree bit-exactly with segment values
            let mut y = 0.0;
            for j in 0..k {
                self.stream.vector_into(n + j as i64, &mut self.scratch);
                y += self.scratch[k - 1 - j];
            }
            out[slot] = y;
        }
    }

    fn segment_values(&mut self, n0: i64, len: usize) -> Vec<f64> {
        path_values(&self.stream, n0, len).expect("len ≥ 1")
    }
}

/// Index-addressable i.i.d. N(0, k) reference sequence. This is the law
/// the process would have if it were Gaussian; the calibration run of the
/// verification suite uses it to demonstrate the thresholds do not raise
/// false alarms and the non-Gaussianity detector stays silent.
#[derive(Debug, Clone)]
pub struct GaussianReference {
    k: usize,
    root_seed: u64,
}

impl GaussianReference {
    pub fn new(k: usize, root_seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput(format!("k must be ≥ 2, got {k}")));
        }
        Ok(Self { k, root_seed })
    }

    fn value_at(&self, n: i64) -> f64 {
        let mut rng = substream(self.root_seed, DOMAIN_GAUSS_REF, n);
        let z: f64 = rng.sample(StandardNormal);
        (self.k as f64).sqrt() * z
    }
}

impl PathSampler for GaussianReference {
    fn k(&self) -> usize {
        self.k
    }

    fn label(&self) -> &'static str {
        "gaussian-reference"
    }

    fn window_into(&mut self, indices: &[i64], out: &mut [f64]) {
        for (slot, &n) in indices.iter().enumerate() {
            out[slot] = self.value_at(n);
        }
    }

    fn segment_values(&mut self, n0: i64, len: usize) -> Vec<f64> {
        (0..len).map(|s| self.value_at(n0 + s as i64)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::RefCell;
    use std::collections::HashMap;

    /// Stub source where coordinate c of every vector equals c+1.
    struct ConstStub {
        k: usize,
    }

    impl VectorSource for ConstStub {
        fn k(&self) -> usize {
            self.k
        }
        fn vector_into(&self, _n: i64, out: &mut [f64]) {
            for (c, v) in out.iter_mut().enumerate() {
                *v = (c + 1) as f64;
            }
        }
    }

    /// Stub that counts how often each index is requested.
    struct CountingStub {
        k: usize,
        hits: RefCell<HashMap<i64, usize>>,
    }

    impl VectorSource for CountingStub {
        fn k(&self) -> usize {
            self.k
        }
        fn vector_into(&self, n: i64, out: &mut [f64]) {
            *self.hits.borrow_mut().entry(n).or_insert(0) += 1;
            out.fill(0.0);
        }
    }

    #[test]
    fn constant_stub_forces_triangular_sum() {
        // Y_n = 1 + 2 + … + k for every n
        for k in [2, 3, 5] {
            let stub = ConstStub { k };
            let values = path_values(&stub, -4, 10).unwrap();
            let expected = (k * (k + 1) / 2) as f64;
            assert!(values.iter().all(|&y| y == expected));
        }
    }

    #[test]
    fn segment_generation_touches_exactly_the_covering_vectors() {
        let stub = CountingStub {
            k: 4,
            hits: RefCell::new(HashMap::new()),
        };
        let n0 = -7;
        let len = 25;
        path_values(&stub, n0, len).unwrap();
        let hits = stub.hits.borrow();
        let expected: Vec<i64> = (n0..=n0 + len as i64 + 3 - 1).collect();
        let mut seen: Vec<i64> = hits.keys().copied().collect();
        seen.sort_unstable();
        assert_eq!(seen, expected);
        assert!(hits.values().all(|&c| c == 1));
    }

    #[test]
    fn vector_at_is_deterministic_and_bilateral() {
        let s = VectorStream::new(3, 99).unwrap();
        let a = s.vector_at(5);
        let b = s.vector_at(5);
        assert_eq!(a, b);
        let neg = s.vector_at(-3);
        assert_eq!(neg.coords().len(), 3);
        assert!(neg.iter().all(|c| c.is_finite()));
        assert_ne!(s.vector_at(-3), s.vector_at(3));
    }

    #[test]
    fn query_order_does_not_matter() {
        let s = VectorStream::new(3, 7).unwrap();
        let forward: Vec<_> = (0..10).map(|n| s.vector_at(n)).collect();
        let backward: Vec<_> = (0..10).rev().map(|n| s.vector_at(n)).collect();
        for (i, v) in forward.iter().enumerate() {
            assert_eq!(*v, backward[9 - i]);
        }
    }

    #[test]
    fn distinct_seeds_give_distinct_streams() {
        let a = VectorStream::new(3, 1).unwrap();
        let b = VectorStream::new(3, 2).unwrap();
        assert_ne!(a.vector_at(0), b.vector_at(0));
    }

    #[test]
    fn overlapping_segments_agree_bit_exactly() {
        let s = VectorStream::new(3, 123).unwrap();
        let seg_a = s.segment(0, 100).unwrap();
        let seg_b = s.segment(50, 100).unwrap();
        for i in 0..50 {
            let a = seg_a.values()[50 + i];
            let b = seg_b.values()[i];
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn segments_agree_across_negative_offsets() {
        let s = VectorStream::new(2, 5).unwrap();
        let seg_a = s.segment(-500, 600).unwrap();
        let seg_b = s.segment(0, 100).unwrap();
        for i in 0..100 {
            assert_eq!(
                seg_a.values()[500 + i].to_bits(),
                seg_b.values()[i].to_bits()
            );
        }
    }

    #[test]
    fn window_sampler_matches_segments_bit_exactly() {
        let s = VectorStream::new(4, 31).unwrap();
        let seg = s.segment(-10, 40).unwrap();
        let mut sampler = ProcessSampler::new(s);
        let indices: Vec<i64> = vec![-10, -3, 0, 17, 29];
        let mut out = vec![0.0; indices.len()];
        sampler.window_into(&indices, &mut out);
        for (slot, &n) in indices.iter().enumerate() {
            let from_seg = seg.values()[(n + 10) as usize];
            assert_eq!(out[slot].to_bits(), from_seg.to_bits());
        }
    }

    #[test]
    fn empty_segment_is_rejected() {
        let s = VectorStream::new(3, 1).unwrap();
        assert!(s.segment(0, 0).is_err());
    }

    #[test]
    fn sliding_products_basics() {
        assert_eq!(
            sliding_products(&[1.0, 2.0, 3.0], 2).unwrap(),
            vec![2.0, 6.0]
        );
        let seg = [0.5, -1.0, 4.0];
        assert_eq!(sliding_products(&seg, 1).unwrap(), seg.to_vec());
        assert!(sliding_products(&seg, 4).is_err());
        assert!(sliding_products(&seg, 0).is_err());
    }

    #[test]
    fn path_variance_is_near_k() {
        let s = VectorStream::new(3, 2024).unwrap();
        let seg = s.segment(0, 200_000).unwrap();
        let n = seg.len() as f64;
        let mean = seg.values().iter().sum::<f64>() / n;
        let var = seg.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!((var - 3.0).abs() < 0.08, "var = {var}");
        assert!(mean.abs() < 4.0 * (3.0f64 / n).sqrt(), "mean = {mean}");
    }

    #[test]
    fn gaussian_reference_is_deterministic_with_variance_k() {
        let mut a = GaussianReference::new(3, 8).unwrap();
        let mut b = GaussianReference::new(3, 8).unwrap();
        assert_eq!(a.segment_values(-5, 20), b.segment_values(-5, 20));
        let vals = a.segment_values(0, 200_000);
        let n = vals.len() as f64;
        let var = vals.iter().map(|v| v * v).sum::<f64>() / n;
        assert!((var - 3.0).abs() < 0.08, "var = {var}");
        // reference and process streams differ under the same seed
        let s = VectorStream::new(3, 8).unwrap();
        let mut p = ProcessSampler::new(s);
        assert_ne!(p.segment_values(0, 4), b.segment_values(0, 4));
    }

    #[test]
    fn flipped_perturbation_changes_the_draws() {
        let s = VectorStream::new(3, 77).unwrap();
        let f = s.clone().with_flipped_perturbation();
        let plain: Vec<_> = (0..50).map(|n| s.vector_at(n)).collect();
        let flipped: Vec<_> = (0..50).map(|n| f.vector_at(n)).collect();
        assert_ne!(plain, flipped);
    }
}
