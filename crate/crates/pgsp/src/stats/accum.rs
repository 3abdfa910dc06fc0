//! Mergeable streaming statistics.
//!
//! Shards accumulate over disjoint index ranges and merge deterministically;
//! merging partitions of a sample reproduces the single-pass statistics to
//! floating-point tolerance.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::stats::grid::FrequencyGrid;

/// Welford running mean and variance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        let delta2 = x - self.mean;
        self.m2 += delta * delta2;
    }

    pub fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        let adj = delta * other.count as f64 / total as f64;
        self.mean += adj;
        self.m2 += other.m2 + delta * adj * self.count as f64;
        self.count = total;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Sample variance (n−1 denominator).
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Empirical characteristic function sums on a fixed frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EcfGrid {
    grid: FrequencyGrid,
    sums: Vec<Complex64>,
    count: u64,
}

impl EcfGrid {
    pub fn new(grid: FrequencyGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            sums: vec![Complex64::new(0.0, 0.0); n],
            count: 0,
        }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.grid.dim());
        for (sum, t) in self.sums.iter_mut().zip(self.grid.points()) {
            let dot: f64 = t.iter().zip(x).map(|(a, b)| a * b).sum();
            let (sin, cos) = dot.sin_cos();
            *sum += Complex64::new(cos, sin);
        }
    }

    /// ECF value at grid point i.
    pub fn value(&self, i: usize) -> Complex64 {
        self.sums[i] / self.count as f64
    }

    /// Largest |ECF − reference| over the grid.
    pub fn max_deviation(&self, reference: impl Fn(&[f64]) -> Complex64) -> f64 {
        (0..self.grid.len())
            .map(|i| (self.value(i) - reference(self.grid.point(i))).norm())
            .fold(0.0, f64::max)
    }

    pub fn merge(&mut self, other: &EcfGrid) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::InvalidInput(
                "cannot merge ECF accumulators on different grids".into(),
            ));
        }
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        self.count += other.count;
        Ok(())
    }
}

/// Empirical characteristic function (1/N) Σ e^{i t·x} of a finite sample.
pub fn ecf<'a, I>(samples: I, t: &[f64]) -> Result<Complex64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut sum = Complex64::new(0.0, 0.0);
    let mut count = 0u64;
    for x in samples {
        if x.len() != t.len() {
            return Err(Error::DimensionMismatch {
                expected: t.len(),
                got: x.len(),
            });
        }
        let dot: f64 = t.iter().zip(x).map(|(a, b)| a * b).sum();
        let (sin, cos) = dot.sin_cos();
        sum += Complex64::new(cos, sin);
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidInput("empty sample".into()));
    }
    Ok(sum / count as f64)
}

/// Means over disjoint batches of fixed length; the spread of the batch
/// means gives a dependence-robust standard error for path averages.
/// A trailing partial batch is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchMeans {
    batch_len: usize,
    partial_sum: f64,
    partial_len: usize,
    batches: Welford,
}

impl BatchMeans {
    pub fn new(batch_len: usize) -> Result<Self> {
        if batch_len == 0 {
            return Err(Error::InvalidInput("batch length must be ≥ 1".into()));
        }
        Ok(Self {
            batch_len,
            partial_sum: 0.0,
            partial_len: 0,
            batches: Welford::new(),
        })
    }

    pub fn batch_len(&self) -> usize {
        self.batch_len
    }

    pub fn push(&mut self, x: f64) {
        self.partial_sum += x;
        self.partial_len += 1;
        if self.partial_len == self.batch_len {
            self.batches.update(self.partial_sum / self.batch_len as f64);
            self.partial_sum = 0.0;
            self.partial_len = 0;
        }
    }

    pub fn batches(&self) -> u64 {
        self.batches.count()
    }

    /// Mean over completed batches.
    pub fn mean(&self) -> f64 {
        self.batches.mean()
    }

    /// Batch-means standard error of the mean.
    pub fn se(&self) -> f64 {
        self.batches.se()
    }

    /// Append a later shard. The receiver must sit on a batch boundary,
    /// which holds whenever shard sizes are multiples of the batch length.
    pub fn merge(&mut self, other: &BatchMeans) -> Result<()> {
        if self.batch_len != other.batch_len {
            return Err(Error::InvalidInput("batch lengths differ".into()));
        }
        if self.partial_len != 0 {
            return Err(Error::InvalidInput(
                "merge target has a partial batch; shard sizes must be batch-aligned".into(),
            ));
        }
        self.batches.merge(&other.batches);
        self.partial_sum = other.partial_sum;
        self.partial_len = other.partial_len;
        Ok(())
    }
}

/// Single-pass path statistics: running moments of Y, batch means of the
/// lagged products Y_n·Y_{n+j}, batch means of the sliding k-products,
/// and the strided-window empirical CF. Shards consume contiguous index
/// ranges (with lookahead values supplied past the end) and merge.
#[derive(Debug, Clone)]
pub struct StatAccumulator {
    k: usize,
    max_lag: usize,
    ecf_stride: usize,
    count: u64,
    moments: Welford,
    lag_products: Vec<BatchMeans>,
    window_products: BatchMeans,
    window_ecf: EcfGrid,
}

impl StatAccumulator {
    pub fn new(
        k: usize,
        max_lag: usize,
        batch_len: usize,
        ecf_stride: usize,
        grid: FrequencyGrid,
    ) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput(format!("k must be ≥ 2, got {k}")));
        }
        if grid.dim() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: grid.dim(),
            });
        }
        if ecf_stride == 0 {
            return Err(Error::InvalidInput("ECF stride must be ≥ 1".into()));
        }
        Ok(Self {
            k,
            max_lag,
            ecf_stride,
            count: 0,
            moments: Welford::new(),
            lag_products: (0..max_lag)
                .map(|_| BatchMeans::new(batch_len))
                .collect::<Result<_>>()?,
            window_products: BatchMeans::new(batch_len)?,
            window_ecf: EcfGrid::new(grid),
        })
    }

    /// Values a shard must supply beyond its own range.
    pub fn lookahead(&self) -> usize {
        self.max_lag.max(self.k - 1)
    }

    /// Consume base observations `values[0..base_len]`; the tail of
    /// `values` is lookahead only and will be re-consumed by the next
    /// shard as its own base.
    pub fn consume(&mut self, global_start: i64, values: &[f64], base_len: usize) -> Result<()> {
        if values.len() < base_len + self.lookahead() {
            return Err(Error::InvalidInput(format!(
                "shard needs {} lookahead values past its {} base observations",
                self.lookahead(),
                base_len
            )));
        }
        for i in 0..base_len {
            let x = values[i];
            self.count += 1;
            self.moments.update(x);
            for j in 1..=self.max_lag {
                self.lag_products[j - 1].push(x * values[i + j]);
            }
            let product: f64 = values[i..i + self.k].iter().product();
            self.window_products.push(product);
            if (global_start + i as i64).rem_euclid(self.ecf_stride as i64) == 0 {
                self.window_ecf.push(&values[i..i + self.k]);
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &StatAccumulator) -> Result<()> {
        if self.k != other.k || self.max_lag != other.max_lag || self.ecf_stride != other.ecf_stride
        {
            return Err(Error::InvalidInput(
                "cannot merge accumulators with different configurations".into(),
            ));
        }
        self.count += other.count;
        self.moments.merge(&other.moments);
        for (a, b) in self.lag_products.iter_mut().zip(&other.lag_products) {
            a.merge(b)?;
        }
        self.window_products.merge(&other.window_products)?;
        self.window_ecf.merge(&other.window_ecf)?;
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn moments(&self) -> &Welford {
        &self.moments
    }

    pub fn lag_products(&self, lag: usize) -> &BatchMeans {
        &self.lag_products[lag - 1]
    }

    pub fn window_products(&self) -> &BatchMeans {
        &self.window_products
    }

    pub fn window_ecf(&self) -> &EcfGrid {
        &self.window_ecf
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn welford_matches_two_pass_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>() - 0.3).collect();
        let mut w = Welford::new();
        for &x in &xs {
            w.update(x);
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64;
        assert_abs_diff_eq!(w.mean(), mean, epsilon = 1e-12);
        assert_abs_diff_eq!(w.variance(), var, epsilon = 1e-12);
    }

    #[test]
    fn merging_random_partitions_matches_single_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<f64> = (0..5_000).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        let mut single = Welford::new();
        for &x in &xs {
            single.update(x);
        }
        // split at random points into five shards
        let mut cuts: Vec<usize> = (0..4).map(|_| rng.random_range(0..xs.len())).collect();
        cuts.sort_unstable();
        let mut shards = Vec::new();
        let mut start = 0;
        for &c in cuts.iter().chain(std::iter::once(&xs.len())) {
            let mut w = Welford::new();
            for &x in &xs[start..c] {
                w.update(x);
            }
            shards.push(w);
            start = c;
        }
        let mut merged = Welford::new();
        for s in &shards {
            merged.merge(s);
        }
        assert_eq!(merged.count(), single.count());
        assert_abs_diff_eq!(merged.mean(), single.mean(), epsilon = 1e-9 * single.mean().abs());
        assert_abs_diff_eq!(
            merged.variance(),
            single.variance(),
            epsilon = 1e-9 * single.variance()
        );
    }

    #[test]
    fn ecf_basics() {
        // single sample: e^{i t·x}
        let x = [0.4, -1.2];
        let t = [1.0, 2.0];
        let got = ecf([&x[..]], &t).unwrap();
        let dot: f64 = 0.4 - 2.4;
        assert_abs_diff_eq!(got.re, dot.cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(got.im, dot.sin(), epsilon = 1e-15);
        // at t = 0 the ECF is exactly 1
        let samples = [[1.0, 2.0], [3.0, -4.0]];
        let refs: Vec<&[f64]> = samples.iter().map(|s| &s[..]).collect();
        assert_eq!(
            ecf(refs.iter().copied(), &[0.0, 0.0]).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        // modulus never exceeds one
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![rng.random::<f64>() * 4.0 - 2.0, rng.random::<f64>()])
            .collect();
        let views: Vec<&[f64]> = pts.iter().map(|p| &p[..]).collect();
        let v = ecf(views.iter().copied(), &[0.7, -1.1]).unwrap();
        assert!(v.norm() <= 1.0 + 1e-12);
        // empty samples are rejected
        assert!(ecf(std::iter::empty::<&[f64]>(), &[1.0]).is_err());
    }

    #[test]
    fn ecf_grid_merge_matches_single_pass() {
        let grid = FrequencyGrid::for_dim(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Vec<f64>> = (0..999)
            .map(|_| vec![rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5])
            .collect();
        let mut single = EcfGrid::new(grid.clone());
        for p in &pts {
            single.push(p);
        }
        let mut a = EcfGrid::new(grid.clone());
        let mut b = EcfGrid::new(grid.clone());
        for (i, p) in pts.iter().enumerate() {
            if i % 3 == 0 {
                a.push(p);
            } else {
                b.push(p);
            }
        }
        a.merge(&b).unwrap();
        assert_eq!(a.count(), single.count());
        for i in 0..grid.len() {
            assert_abs_diff_eq!(a.value(i).re, single.value(i).re, epsilon = 1e-12);
            assert_abs_diff_eq!(a.value(i).im, single.value(i).im, epsilon = 1e-12);
        }
    }

    #[test]
    fn batch_means_drop_the_partial_tail() {
        let mut bm = BatchMeans::new(10).unwrap();
        for i in 0..25 {
            bm.push(i as f64);
        }
        assert_eq!(bm.batches(), 2);
        assert_abs_diff_eq!(bm.mean(), (4.5 + 14.5) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn unaligned_batch_merge_is_rejected() {
        let mut a = BatchMeans::new(10).unwrap();
        for i in 0..15 {
            a.push(i as f64);
        }
        let b = BatchMeans::new(10).unwrap();
        assert!(a.merge(&b).is_err());
    }

    #[test]
    fn sharded_path_accumulation_matches_single_pass() {
        let grid = FrequencyGrid::for_dim(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let total = 4000usize;
        let batch = 100usize;
        let lookahead = 2usize;
        let values: Vec<f64> = (0..total + lookahead)
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        let mut single = StatAccumulator::new(3, 2, batch, 6, grid.clone()).unwrap();
        single.consume(0, &values, total).unwrap();
        // batch-aligned shards: 0..1000, 1000..3000, 3000..4000
        let mut merged = StatAccumulator::new(3, 2, batch, 6, grid.clone()).unwrap();
        for (start, end) in [(0usize, 1000usize), (1000, 3000), (3000, 4000)] {
            let mut shard = StatAccumulator::new(3, 2, batch, 6, grid.clone()).unwrap();
            shard
                .consume(start as i64, &values[start..end + lookahead], end - start)
                .unwrap();
            merged.merge(&shard).unwrap();
        }
        assert_eq!(merged.count(), single.count());
        assert_abs_diff_eq!(
            merged.moments().mean(),
            single.moments().mean(),
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            merged.window_products().mean(),
            single.window_products().mean(),
            epsilon = 1e-9
        );
        assert_eq!(merged.window_ecf().count(), single.window_ecf().count());
        for i in 0..grid.len() {
            let d = (merged.window_ecf().value(i) - single.window_ecf().value(i)).norm();
            assert!(d < 1e-12);
        }
        assert_abs_diff_eq!(
            merged.lag_products(2).mean(),
            single.lag_products(2).mean(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn shard_without_lookahead_is_rejected() {
        let grid = FrequencyGrid::for_dim(2).unwrap();
        let mut acc = StatAccumulator::new(2, 3, 10, 4, grid).unwrap();
        let values = vec![0.0; 20];
        assert!(acc.consume(0, &values, 20).is_err());
        assert!(acc.consume(0, &values, 17).is_ok());
    }
}
