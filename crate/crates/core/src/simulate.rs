//! Monte-Carlo verification: sample Galton-Watson trees conditioned on
//! their total size, extract height and diameter, and compare the rescaled
//! empirical laws with the analytic module.
//!
//! Conditioned trees are drawn exactly: the offspring counts given their sum
//! form an exchangeable bridge, sampled by recursive binary splitting with
//! the split law `P(S_a = u | S_a + S_b = s) ∝ pmf_a(u) pmf_b(s−u)`
//! (partial-sum pmfs built once per size by FFT convolution doubling), and
//! the cycle lemma rotates each bridge into the unique corresponding
//! depth-first walk. Truncating the offspring support at n−1 is exact under
//! the conditioning, since no count can exceed the total.

use crate::laws::Laws;
use crate::numeric::fft::convolve;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;

/// Critical offspring distributions whose conditioned trees converge to the
/// stable tree of the matching index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffspringLaw {
    /// Geometric(1/2): `p_k = 2^{−k−1}`; finite variance, Brownian limit.
    GeometricHalf,
    /// `p_0 = 1/γ, p_1 = 0, p_k = |binom(γ, k)|/γ`: generating function
    /// `f(s) = s + (1−s)^γ/γ`, mean one, tail exponent 1+γ.
    Stable(f64),
}

impl OffspringLaw {
    pub fn for_gamma(gamma: f64) -> Result<OffspringLaw> {
        if gamma == 2.0 {
            Ok(OffspringLaw::GeometricHalf)
        } else if gamma > 1.0 && gamma < 2.0 {
            Ok(OffspringLaw::Stable(gamma))
        } else {
            Err(Error::domain("offspring law needs gamma in (1, 2]"))
        }
    }

    /// Probabilities p_0..p_max (the dropped tail mass is unreachable under
    /// the bridge conditioning).
    pub fn pmf(&self, max_k: usize) -> Vec<f64> {
        match *self {
            OffspringLaw::GeometricHalf => {
                let mut p = Vec::with_capacity(max_k + 1);
                let mut cur = 0.5;
                for _ in 0..=max_k {
                    p.push(cur);
                    cur *= 0.5;
                }
                p
            }
            OffspringLaw::Stable(gamma) => {
                let mut p = vec![0.0; max_k + 1];
                p[0] = 1.0 / gamma;
                if max_k >= 2 {
                    p[2] = (gamma - 1.0) / 2.0;
                    for k in 2..max_k {
                        p[k + 1] = p[k] * (k as f64 - gamma) / (k as f64 + 1.0);
                    }
                }
                p
            }
        }
    }
}

/// Walker alias table for O(1) draws from a finite distribution.
struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    fn new(weights: &[f64]) -> AliasTable {
        let n = weights.len();
        let total: f64 = weights.iter().sum();
        let mut prob = vec![0.0; n];
        let mut alias = vec![0u32; n];
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut small: Vec<usize> = (0..n).filter(|&i| scaled[i] < 1.0).collect();
        let mut large: Vec<usize> = (0..n).filter(|&i| scaled[i] >= 1.0).collect();
        while let (Some(s), Some(l)) = (small.pop(), large.pop()) {
            prob[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                small.push(l);
            } else {
                large.push(l);
            }
        }
        for i in small.into_iter().chain(large) {
            prob[i] = 1.0;
            alias[i] = i as u32;
        }
        AliasTable { prob, alias }
    }

    #[inline]
    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let i = rng.gen_range(0..self.prob.len());
        if rng.gen::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }
}

struct Level {
    /// pmf of the sum of `size` offspring counts, restricted to [0, n−1].
    pmf: Vec<f64>,
    max: f64,
    alias: AliasTable,
}

/// Exact sampler of the offspring bridge `(ξ_1..ξ_n | Σξ = n−1)`.
pub struct BridgeSampler {
    n: usize,
    levels: HashMap<usize, Level>,
}

impl BridgeSampler {
    pub fn new(law: OffspringLaw, n: usize) -> Result<BridgeSampler> {
        if n < 2 {
            return Err(Error::domain("conditioned trees need n ≥ 2"));
        }
        let base = law.pmf(n - 1);
        let mut pmfs: HashMap<usize, Vec<f64>> = HashMap::new();
        pmfs.insert(1, base);
        build_pmf(n, &mut pmfs);
        if pmfs[&n][n - 1] <= 0.0 {
            return Err(Error::domain(format!(
                "no trees with {n} vertices under this offspring law"
            )));
        }
        let levels = pmfs
            .into_iter()
            .map(|(size, mut pmf)| {
                let total: f64 = pmf.iter().sum();
                for v in pmf.iter_mut() {
                    *v /= total;
                }
                let max = pmf.iter().fold(0.0f64, |a, &b| a.max(b));
                let alias = AliasTable::new(&pmf);
                (size, Level { pmf, max, alias })
            })
            .collect();
        Ok(BridgeSampler { n, levels })
    }

    pub fn tree_size(&self) -> usize {
        self.n
    }

    /// Draw the offspring counts of a conditioned tree, already rotated to a
    /// valid depth-first (preorder) sequence.
    pub fn sample<R: Rng>(&self, rng: &mut R, out: &mut Vec<u32>) -> Result<()> {
        out.clear();
        self.split(self.n, self.n - 1, rng, out)?;
        rotate_to_walk(out);
        Ok(())
    }

    fn split<R: Rng>(&self, size: usize, sum: usize, rng: &mut R, out: &mut Vec<u32>) -> Result<()> {
        if size == 1 {
            out.push(sum as u32);
            return Ok(());
        }
        if sum == 0 {
            // only the all-zero assignment has positive probability
            out.resize(out.len() + size, 0);
            return Ok(());
        }
        let a = size / 2;
        let b = size - a;
        let la = &self.levels[&a];
        let lb = &self.levels[&b];
        // Rejection from the unconditioned half marginal is O(1) while `sum`
        // sits in the bulk of the size-`size` sum; skewed sums (leaf blocks,
        // heavy-tail jumps) starve it, so fall back to exact inversion.
        for _ in 0..256u32 {
            let u = la.alias.sample(rng);
            if u > sum || sum - u >= lb.pmf.len() {
                continue;
            }
            if rng.gen::<f64>() * lb.max < lb.pmf[sum - u] {
                self.split(a, u, rng, out)?;
                self.split(b, sum - u, rng, out)?;
                return Ok(());
            }
        }
        let lo = sum.saturating_sub(lb.pmf.len() - 1);
        let hi = sum.min(la.pmf.len() - 1);
        let mut total = 0.0;
        for u in lo..=hi {
            total += la.pmf[u] * lb.pmf[sum - u];
        }
        if total <= 0.0 {
            return Err(Error::Validation(format!(
                "conditioned split has empty support (size {size}, sum {sum})"
            )));
        }
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = hi;
        for u in lo..=hi {
            acc += la.pmf[u] * lb.pmf[sum - u];
            if acc >= target {
                pick = u;
                break;
            }
        }
        self.split(a, pick, rng, out)?;
        self.split(b, sum - pick, rng, out)
    }
}

fn build_pmf(size: usize, pmfs: &mut HashMap<usize, Vec<f64>>) {
    if pmfs.contains_key(&size) {
        return;
    }
    let a = size / 2;
    let b = size - a;
    build_pmf(a, pmfs);
    build_pmf(b, pmfs);
    let n_cap = pmfs[&1].len();
    let mut conv = convolve(&pmfs[&a], &pmfs[&b]);
    conv.truncate(n_cap);
    pmfs.insert(size, conv);
}

/// Rotate the exchangeable bridge into the unique cyclic shift whose
/// depth-first walk first hits −1 at time n: the rotation starting right
/// after the first minimum of the prefix sums.
pub fn rotate_to_walk(counts: &mut Vec<u32>) {
    let n = counts.len();
    let mut best = i64::MAX;
    let mut best_at = 0;
    let mut w = 0i64;
    for (i, &c) in counts.iter().enumerate() {
        w += c as i64 - 1;
        if w < best {
            best = w;
            best_at = i;
        }
    }
    counts.rotate_left((best_at + 1) % n);
    debug_assert!(is_walk(counts));
}

/// Check the depth-first-walk property: prefix sums of (count − 1) stay
/// nonnegative before the end and finish at −1.
pub fn is_walk(counts: &[u32]) -> bool {
    let mut w = 0i64;
    for (i, &c) in counts.iter().enumerate() {
        w += c as i64 - 1;
        if w < 0 && i + 1 != counts.len() {
            return false;
        }
    }
    w == -1
}

/// Reusable buffers for per-tree statistics.
#[derive(Default)]
pub struct TreeScratch {
    parent: Vec<u32>,
    depth: Vec<u32>,
    stack: Vec<(u32, u32)>,
    head: Vec<u32>,
    child: Vec<u32>,
    dist: Vec<u32>,
    queue: Vec<u32>,
}

impl TreeScratch {
    /// Depth of a vertex after the last [`tree_stats`] call.
    pub fn depth_of(&self, v: u32) -> u32 {
        self.depth[v as usize]
    }
}

/// Height (max depth) and graph diameter of the tree encoded by a preorder
/// offspring sequence; the diameter comes from a double breadth-first sweep,
/// exact on trees. Also returns the endpoints of the sweep's diameter path.
pub fn tree_stats(counts: &[u32], s: &mut TreeScratch) -> (u32, u32, u32, u32) {
    let n = counts.len();
    s.parent.clear();
    s.parent.resize(n, u32::MAX);
    s.depth.clear();
    s.depth.resize(n, 0);
    s.stack.clear();
    // preorder: the stack holds (node, remaining children)
    s.stack.push((0, counts[0]));
    let mut height = 0;
    for i in 1..n as u32 {
        while let Some(&(_, remaining)) = s.stack.last() {
            if remaining == 0 {
                s.stack.pop();
            } else {
                break;
            }
        }
        let &(p, remaining) = s.stack.last().expect("preorder underflow");
        s.stack.last_mut().unwrap().1 = remaining - 1;
        s.parent[i as usize] = p;
        let d = s.depth[p as usize] + 1;
        s.depth[i as usize] = d;
        height = height.max(d);
        s.stack.push((i, counts[i as usize]));
    }
    // children in CSR layout
    s.head.clear();
    s.head.resize(n + 1, 0);
    for i in 1..n {
        s.head[s.parent[i] as usize + 1] += 1;
    }
    for i in 0..n {
        s.head[i + 1] += s.head[i];
    }
    s.child.clear();
    s.child.resize(n.saturating_sub(1), 0);
    let mut cursor = s.head.clone();
    for i in 1..n as u32 {
        let p = s.parent[i as usize] as usize;
        s.child[cursor[p] as usize] = i;
        cursor[p] += 1;
    }
    let a = bfs_farthest(0, counts, s);
    let b = bfs_farthest(a, counts, s);
    let diam = s.dist[b as usize];
    (height, diam, a, b)
}

/// BFS from `start`; returns the farthest vertex (smallest index on ties)
/// and leaves the distance array in the scratch.
fn bfs_farthest(start: u32, counts: &[u32], s: &mut TreeScratch) -> u32 {
    let n = counts.len();
    s.dist.clear();
    s.dist.resize(n, u32::MAX);
    s.queue.clear();
    s.dist[start as usize] = 0;
    s.queue.push(start);
    let mut qi = 0;
    let mut far = start;
    let mut far_d = 0;
    while qi < s.queue.len() {
        let v = s.queue[qi];
        qi += 1;
        let d = s.dist[v as usize];
        if d > far_d {
            far_d = d;
            far = v;
        }
        let p = s.parent[v as usize];
        if p != u32::MAX && s.dist[p as usize] == u32::MAX {
            s.dist[p as usize] = d + 1;
            s.queue.push(p);
        }
        for k in s.head[v as usize]..s.head[v as usize + 1] {
            let c = s.child[k as usize];
            if s.dist[c as usize] == u32::MAX {
                s.dist[c as usize] = d + 1;
                s.queue.push(c);
            }
        }
    }
    far
}

/// Per-experiment summary with the distribution-comparison metrics.
#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub gamma: f64,
    pub n: usize,
    pub replicas: usize,
    pub seed: u64,
    /// Calibrated scale: analytic mean height / (empirical mean · n^{−(γ−1)/γ}).
    pub kappa: f64,
    pub mean_height: f64,
    pub mean_diam: f64,
    pub ratio: f64,
    pub analytic_mean_height: f64,
    pub analytic_mean_diam: f64,
    pub analytic_ratio: f64,
    /// Kolmogorov-Smirnov distance of the mean-normalized empirical height
    /// law against the analytic mean-normalized law.
    pub ks_height: f64,
    pub ks_diam: f64,
    /// Count of trees violating Γ ≤ D ≤ 2Γ (must be zero).
    pub per_tree_violations: usize,
}

fn replica_rng(seed: u64, index: usize) -> ChaCha8Rng {
    // splitmix64 over a golden-ratio stream gives well-separated seeds
    let mut z = seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Sample one conditioned tree per replica and collect (height, diameter).
/// Replicas are independent with counter-based seeds, so the run is
/// reproducible bit-for-bit regardless of the worker count.
pub fn sample_statistics(
    law: OffspringLaw,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<(u32, u32)>> {
    let sampler = BridgeSampler::new(law, n)?;
    (0..replicas)
        .into_par_iter()
        .map_init(
            || (TreeScratch::default(), Vec::with_capacity(n)),
            |(scratch, counts), i| {
                let mut rng = replica_rng(seed, i);
                sampler.sample(&mut rng, counts)?;
                let (h, d, _, _) = tree_stats(counts, scratch);
                Ok((h, d))
            },
        )
        .collect()
}

/// Two-sided Kolmogorov-Smirnov distance of a sample against a CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = sample.len() as f64;
    let mut ks = 0.0f64;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        ks = ks.max(f - i as f64 / m).max((i as f64 + 1.0) / m - f);
    }
    ks
}

/// KS distance against a CDF tabulated once on a dense grid (the analytic
/// CDFs cost nested quadratures per point; 2048 knots keep the
/// interpolation error orders below the sampling resolution).
fn ks_distance_gridded<F: Fn(f64) -> f64>(sample: &mut [f64], cdf: F) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = sample[0] * 0.999;
    let hi = sample[sample.len() - 1] * 1.001;
    let knots = 2048usize;
    let step = (hi - lo) / (knots - 1) as f64;
    let table: Vec<f64> = (0..knots).map(|i| cdf(lo + step * i as f64)).collect();
    let m = sample.len() as f64;
    let mut ks = 0.0f64;
    for (i, &x) in sample.iter().enumerate() {
        let pos = ((x - lo) / step).clamp(0.0, (knots - 1) as f64);
        let k = (pos as usize).min(knots - 2);
        let frac = pos - k as f64;
        let f = table[k] + frac * (table[k + 1] - table[k]);
        ks = ks.max(f - i as f64 / m).max((i as f64 + 1.0) / m - f);
    }
    ks
}

/// Run the full experiment: conditioned trees of size n, scale-free
/// comparisons of the empirical height/diameter laws against the analytic
/// module, and the calibrated scale factor.
pub fn run_experiment(gamma: f64, n: usize, replicas: usize, seed: u64) -> Result<SimReport> {
    Ok(run_experiment_with_stats(gamma, n, replicas, seed)?.0)
}

/// As [`run_experiment`], also returning the per-replica (height, diameter).
pub fn run_experiment_with_stats(
    gamma: f64,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<(SimReport, Vec<(u32, u32)>)> {
    let law = OffspringLaw::for_gamma(gamma)?;
    let laws = Laws::new(gamma)?;
    let stats = sample_statistics(law, n, replicas, seed)?;

    let mut violations = 0usize;
    let mut sum_h = 0.0;
    let mut sum_d = 0.0;
    for &(h, d) in &stats {
        if !(h <= d && d <= 2 * h) {
            violations += 1;
        }
        sum_h += h as f64;
        sum_d += d as f64;
    }
    let m = replicas as f64;
    let mean_height = sum_h / m;
    let mean_diam = sum_d / m;
    let report = laws.moment_report()?;
    let kappa = report.mean_height / (mean_height * (n as f64).powf(-(gamma - 1.0) / gamma));

    let mut normalized_h: Vec<f64> = stats.iter().map(|&(h, _)| h as f64 / mean_height).collect();
    let ks_height = ks_distance_gridded(&mut normalized_h, |u| {
        laws.nr_height_cdf(u * report.mean_height).unwrap_or(0.0)
    });
    let mut normalized_d: Vec<f64> = stats.iter().map(|&(_, d)| d as f64 / mean_diam).collect();
    let ks_diam = ks_distance_gridded(&mut normalized_d, |u| {
        laws.nr_diam_cdf(u * report.mean_diam).unwrap_or(0.0)
    });

    let report = SimReport {
        gamma,
        n,
        replicas,
        seed,
        kappa,
        mean_height,
        mean_diam,
        ratio: mean_diam / mean_height,
        analytic_mean_height: report.mean_height,
        analytic_mean_diam: report.mean_diam,
        analytic_ratio: report.ratio,
        ks_height,
        ks_diam,
        per_tree_violations: violations,
    };
    Ok((report, stats))
}

/// Deterministic structural facts along the diameter of sampled trees.
#[derive(Debug, Clone, Serialize)]
pub struct MidpointReport {
    pub trees_checked: usize,
    /// Trees where no diameter endpoint realizes the height (must be 0).
    pub endpoint_violations: usize,
    /// Trees where the diameter midpoint sits farther than one edge from
    /// equidistance (must be 0; odd diameters carry slack one).
    pub midpoint_violations: usize,
}

/// For each sampled tree: a diameter-realizing pair must contain a vertex of
/// maximal depth, and the vertex of the diameter path nearest its middle is
/// within one edge of depth D/2 from both endpoints.
pub fn midpoint_structure_check(
    gamma: f64,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<MidpointReport> {
    let law = OffspringLaw::for_gamma(gamma)?;
    let sampler = BridgeSampler::new(law, n)?;
    let results: Vec<(usize, usize)> = (0..replicas)
        .into_par_iter()
        .map_init(
            || (TreeScratch::default(), Vec::with_capacity(n)),
            |(scratch, counts), i| {
                let mut rng = replica_rng(seed, i);
                sampler.sample(&mut rng, counts)?;
                let (height, diam, a, b) = tree_stats(counts, scratch);
                // distances from `a` are in scratch.dist after the second sweep
                let mut endpoint_bad = 0;
                let mut midpoint_bad = 0;
                if scratch.depth[a as usize].max(scratch.depth[b as usize]) != height {
                    endpoint_bad = 1;
                }
                // walk from b toward a: parents in the tree do not follow the
                // path, so follow neighbours with decreasing distance-to-a
                let mut v = b;
                let half = diam / 2;
                while scratch.dist[v as usize] > half {
                    let p = scratch.parent[v as usize];
                    v = if p != u32::MAX
                        && scratch.dist[p as usize] == scratch.dist[v as usize] - 1
                    {
                        p
                    } else {
                        let mut next = v;
                        for k in scratch.head[v as usize]..scratch.head[v as usize + 1] {
                            let c = scratch.child[k as usize];
                            if scratch.dist[c as usize] == scratch.dist[v as usize] - 1 {
                                next = c;
                                break;
                            }
                        }
                        next
                    };
                }
                let da = scratch.dist[v as usize];
                let db = diam - da;
                if da.abs_diff(db) > 1 {
                    midpoint_bad = 1;
                }
                Ok((endpoint_bad, midpoint_bad))
            },
        )
        .collect::<Result<Vec<_>>>()?;
    let endpoint_violations = results.iter().map(|r| r.0).sum();
    let midpoint_violations = results.iter().map(|r| r.1).sum();
    Ok(MidpointReport {
        trees_checked: replicas,
        endpoint_violations,
        midpoint_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offspring_laws_are_critical() {
        let p = OffspringLaw::GeometricHalf.pmf(400);
        let total: f64 = p.iter().sum();
        let mean: f64 = p.iter().enumerate().map(|(k, &w)| k as f64 * w).sum();
        assert!((total - 1.0).abs() < 1e-12 && (mean - 1.0).abs() < 1e-10);
        for &gamma in &[1.3, 1.5, 1.8] {
            let p = OffspringLaw::Stable(gamma).pmf(4_000_000);
            let total: f64 = p.iter().sum();
            let mean: f64 = p.iter().enumerate().map(|(k, &w)| k as f64 * w).sum();
            assert!((total - 1.0).abs() < 1e-6, "γ={gamma}: mass {total}");
            // the mean converges slowly (tail k^{−γ}); generous window
            assert!((mean - 1.0).abs() < 1e-2, "γ={gamma}: mean {mean}");
            assert_eq!(p[1], 0.0);
            // tail exponent 1+γ: p_k k^{1+γ} approaches a constant
            let r1 = p[100_000] * (100_000f64).powf(1.0 + gamma);
            let r2 = p[1_000_000] * (1_000_000f64).powf(1.0 + gamma);
            assert!((r1 / r2 - 1.0).abs() < 1e-2, "tail not power-law");
        }
    }

    #[test]
    fn cycle_lemma_unique_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(2..12usize);
            // random counts summing to n−1
            let mut counts = vec![0u32; n];
            for _ in 0..n - 1 {
                let i = rng.gen_range(0..n);
                counts[i] += 1;
            }
            // exactly one rotation is a depth-first walk
            let valid = (0..n)
                .filter(|&r| {
                    let mut c = counts.clone();
                    c.rotate_left(r);
                    is_walk(&c)
                })
                .count();
            assert_eq!(valid, 1, "counts {counts:?}");
            rotate_to_walk(&mut counts);
            assert!(is_walk(&counts));
        }
    }

    #[test]
    fn smallest_trees() {
        // n = 2: the only tree is an edge; the geometric sampler must
        // produce it, the stable law has no tree of size 2 at all
        let s = BridgeSampler::new(OffspringLaw::GeometricHalf, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut counts = Vec::new();
        for _ in 0..50 {
            s.sample(&mut rng, &mut counts).unwrap();
            assert_eq!(counts, vec![1, 0]);
        }
        assert!(BridgeSampler::new(OffspringLaw::Stable(1.5), 2).is_err());
        let mut sc = TreeScratch::default();
        let (h, d, _, _) = tree_stats(&[1, 0], &mut sc);
        assert_eq!((h, d), (1, 1));
    }

    #[test]
    fn conditioned_shapes_geometric_n3() {
        // path and cherry are equally likely under the conditioned law
        let s = BridgeSampler::new(OffspringLaw::GeometricHalf, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = Vec::new();
        let trials = 20_000;
        let mut path = 0;
        for _ in 0..trials {
            s.sample(&mut rng, &mut counts).unwrap();
            if counts == vec![1, 1, 0] {
                path += 1;
            } else {
                assert_eq!(counts, vec![2, 0, 0]);
            }
        }
        // 4σ window around 1/2
        let sigma = (trials as f64 * 0.25).sqrt();
        assert!(
            (path as f64 - trials as f64 / 2.0).abs() < 4.0 * sigma,
            "path count {path}"
        );
    }

    #[test]
    fn conditioned_shapes_geometric_n4_uniform() {
        // geometric(1/2) conditioned trees are uniform plane trees: all five
        // shapes with 4 vertices are equally likely
        let s = BridgeSampler::new(OffspringLaw::GeometricHalf, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = Vec::new();
        let mut seen: HashMap<Vec<u32>, usize> = HashMap::new();
        let trials = 25_000;
        for _ in 0..trials {
            s.sample(&mut rng, &mut counts).unwrap();
            *seen.entry(counts.clone()).or_default() += 1;
        }
        assert_eq!(seen.len(), 5, "expected the 5 plane trees: {seen:?}");
        let expect = trials as f64 / 5.0;
        let sigma = (trials as f64 * 0.2 * 0.8).sqrt();
        for (shape, count) in seen {
            assert!(
                (count as f64 - expect).abs() < 4.5 * sigma,
                "shape {shape:?}: {count}"
            );
        }
    }

    #[test]
    fn conditioned_shapes_stable_n5() {
        // with p_1 = 0 the only 5-vertex shapes are the 4-star (weight
        // p_4 p_0^4) and the two two-binary-node trees (p_2² p_0³ each)
        let gamma = 1.5;
        let s = BridgeSampler::new(OffspringLaw::Stable(gamma), 5).unwrap();
        let p = OffspringLaw::Stable(gamma).pmf(8);
        let w_star = p[4] * p[0].powi(4);
        let w_two = p[2] * p[2] * p[0].powi(3);
        let p_star = w_star / (w_star + 2.0 * w_two);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = Vec::new();
        let trials = 30_000;
        let mut stars = 0;
        for _ in 0..trials {
            s.sample(&mut rng, &mut counts).unwrap();
            if counts.contains(&4) {
                stars += 1;
            } else {
                let twos = counts.iter().filter(|&&c| c == 2).count();
                assert_eq!(twos, 2, "unexpected shape {counts:?}");
            }
        }
        let sigma = (trials as f64 * p_star * (1.0 - p_star)).sqrt();
        assert!(
            (stars as f64 - trials as f64 * p_star).abs() < 4.5 * sigma,
            "stars {stars} vs expected {}",
            trials as f64 * p_star
        );
    }

    #[test]
    fn tree_stats_line_and_star() {
        let mut sc = TreeScratch::default();
        // path of 6 vertices
        let (h, d, _, _) = tree_stats(&[1, 1, 1, 1, 1, 0], &mut sc);
        assert_eq!((h, d), (5, 5));
        // star with 5 leaves
        let (h, d, _, _) = tree_stats(&[5, 0, 0, 0, 0, 0], &mut sc);
        assert_eq!((h, d), (1, 2));
    }

    #[test]
    fn diameter_matches_all_pairs_brute_force() {
        let s = BridgeSampler::new(OffspringLaw::GeometricHalf, 60).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = Vec::new();
        let mut sc = TreeScratch::default();
        for _ in 0..60 {
            s.sample(&mut rng, &mut counts).unwrap();
            let (h, d, _, _) = tree_stats(&counts, &mut sc);
            assert!(h <= d && d <= 2 * h);
            // brute-force all-pairs distances through the parent array
            let n = counts.len();
            let mut best = 0u32;
            let depth = sc.depth.clone();
            let parent = sc.parent.clone();
            let anc = |mut v: u32| {
                let mut path = vec![v];
                while parent[v as usize] != u32::MAX {
                    v = parent[v as usize];
                    path.push(v);
                }
                path
            };
            for x in 0..n as u32 {
                let px = anc(x);
                for y in (x + 1)..n as u32 {
                    // lowest common ancestor through path membership
                    let mut v = y;
                    loop {
                        if let Some(pos) = px.iter().position(|&z| z == v) {
                            let lca_depth = depth[px[pos] as usize];
                            let dist =
                                depth[x as usize] + depth[y as usize] - 2 * lca_depth;
                            best = best.max(dist);
                            break;
                        }
                        v = parent[v as usize];
                    }
                }
            }
            assert_eq!(d, best, "double sweep vs brute force");
        }
    }

    #[test]
    fn reproducible_across_worker_counts() {
        let a = sample_statistics(OffspringLaw::GeometricHalf, 200, 64, 99).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| sample_statistics(OffspringLaw::GeometricHalf, 200, 64, 99)).unwrap();
        assert_eq!(a, b);
        let c = sample_statistics(OffspringLaw::GeometricHalf, 200, 64, 100).unwrap();
        assert_ne!(a, c, "different seeds should differ");
    }

    #[test]
    fn midpoint_check_small_run() {
        let rep = midpoint_structure_check(2.0, 500, 300, 17).unwrap();
        assert_eq!(rep.endpoint_violations, 0);
        assert_eq!(rep.midpoint_violations, 0);
        let rep = midpoint_structure_check(1.5, 500, 300, 18).unwrap();
        assert_eq!(rep.endpoint_violations, 0);
        assert_eq!(rep.midpoint_violations, 0);
    }

    #[test]
    fn small_experiment_sane() {
        let rep = run_experiment(2.0, 400, 400, 4).unwrap();
        assert_eq!(rep.per_tree_violations, 0);
        assert!(rep.ratio > 1.0 && rep.ratio < 2.0);
        assert!(rep.ks_height < 0.2 && rep.ks_diam < 0.2);
        assert!(rep.kappa > 0.0);
    }

    /// Calibration sanity: the fitted scale factor is stable across tree
    /// sizes 10³ and 10⁴ — within ±2% at the Brownian index; the stable
    /// index carries first-order n^{−1/3}-type finite-size corrections
    /// (measured drift ≈ 10%), so only gross miscalibration is guarded
    /// there. Slow; run on demand with
    /// `cargo test -p levytree kappa_stable -- --ignored`.
    #[test]
    #[ignore]
    fn kappa_stable_across_sizes() {
        for &(gamma, window) in &[(2.0, 0.02), (1.5, 0.15)] {
            let a = run_experiment(gamma, 1_000, 20_000, 33).unwrap();
            let b = run_experiment(gamma, 10_000, 20_000, 33).unwrap();
            let drift = (a.kappa / b.kappa - 1.0).abs();
            assert!(
                drift < window,
                "γ={gamma}: kappa {:.4} at 10³ vs {:.4} at 10⁴ ({:.2}% drift)",
                a.kappa,
                b.kappa,
                100.0 * drift
            );
        }
    }
}
