//! Piecewise-linear coding functions and the tree operations they induce.
//!
//! A nonnegative excursion `H` on `[0, ζ]` codes a rooted compact real tree
//! through the pseudometric `d(s, t) = H_s + H_t − 2 min_{[s∧t, s∨t]} H`.
//! Working with piecewise-linear functions keeps every operation exact:
//! rerooting, concatenation, the height/diameter functionals, the split of
//! the height-realizing geodesic, and the spinal decomposition all map
//! breakpoint lists to breakpoint lists with no quadrature involved.

mod spinal;

pub use spinal::{reconstruct, SpinalAtom, SpinalDecomposition, SpineSegment};

use crate::{Error, Result};

/// Relative tolerance for snapping coincident breakpoints.
pub(crate) const SNAP: f64 = 1e-12;

/// Raw breakpoint list with linear interpolation between entries.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Polyline {
    pub ts: Vec<f64>,
    pub vs: Vec<f64>,
}

impl Polyline {
    pub fn new(ts: Vec<f64>, vs: Vec<f64>) -> Self {
        debug_assert_eq!(ts.len(), vs.len());
        Polyline { ts, vs }
    }

    pub fn lifetime(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    /// Index of the last breakpoint with time ≤ t.
    fn seg_index(&self, t: f64) -> usize {
        match self.ts.partition_point(|&x| x <= t) {
            0 => 0,
            k => (k - 1).min(self.ts.len() - 2),
        }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        if t <= self.ts[0] {
            return self.vs[0];
        }
        if t >= self.lifetime() {
            return *self.vs.last().unwrap();
        }
        let i = self.seg_index(t);
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let (v0, v1) = (self.vs[i], self.vs[i + 1]);
        if t1 == t0 {
            return v1;
        }
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// Minimum of the function over the real interval [s, t] (s ≤ t).
    pub fn min_on(&self, s: f64, t: f64) -> f64 {
        let mut m = self.value_at(s).min(self.value_at(t));
        let lo = self.ts.partition_point(|&x| x <= s);
        let hi = self.ts.partition_point(|&x| x < t);
        for i in lo..hi {
            if self.vs[i] < m {
                m = self.vs[i];
            }
        }
        m
    }

    /// Merge coincident breakpoints and drop interior points that lie on the
    /// segment between their neighbours.
    pub fn normalize(&mut self) {
        let scale_t = self.lifetime().abs().max(1.0);
        let scale_v = self
            .vs
            .iter()
            .fold(1.0_f64, |a, &b| a.max(b.abs()));
        let mut ts = Vec::with_capacity(self.ts.len());
        let mut vs = Vec::with_capacity(self.vs.len());
        for i in 0..self.ts.len() {
            if let (Some(&pt), Some(&pv)) = (ts.last(), vs.last()) {
                let pt: f64 = pt;
                let pv: f64 = pv;
                if (self.ts[i] - pt).abs() <= SNAP * scale_t
                    && (self.vs[i] - pv).abs() <= SNAP * scale_v
                {
                    continue;
                }
            }
            ts.push(self.ts[i]);
            vs.push(self.vs[i]);
        }
        // Drop collinear interior points.
        let mut keep = vec![true; ts.len()];
        for i in 1..ts.len().saturating_sub(1) {
            let (t0, t1, t2) = (ts[i - 1], ts[i], ts[i + 1]);
            let (v0, v2) = (vs[i - 1], vs[i + 1]);
            if t2 > t0 {
                let interp = v0 + (v2 - v0) * (t1 - t0) / (t2 - t0);
                if (vs[i] - interp).abs() <= 1e-14 * scale_v {
                    keep[i] = false;
                }
            }
        }
        let mut j = 0;
        ts.retain(|_| {
            j += 1;
            keep[j - 1]
        });
        let mut j = 0;
        vs.retain(|_| {
            j += 1;
            keep[j - 1]
        });
        self.ts = ts;
        self.vs = vs;
    }

    /// Sweep forward from `t0`: the function `u ↦ h0 + H(t0+u) − 2 m(u)`
    /// where `m(u)` is the running minimum of `H` over `[t0, t0+u]`.
    /// Emits exact breakpoints including the reattachment crossings where
    /// `H` returns to its running minimum.
    pub fn dist_sweep_forward(&self, t0: f64) -> Vec<(f64, f64)> {
        let h0 = self.value_at(t0);
        let mut out = vec![(0.0, 0.0)];
        let mut m = h0;
        let mut cur_t = t0;
        let mut cur_v = h0;
        let start = self.ts.partition_point(|&x| x <= t0);
        for i in start..self.ts.len() {
            let (t2, v2) = (self.ts[i], self.vs[i]);
            if t2 <= cur_t {
                continue;
            }
            if cur_v <= m {
                // Sitting on the running minimum.
                if v2 < m {
                    m = v2;
                    out.push((t2 - t0, h0 - v2));
                } else {
                    out.push((t2 - t0, h0 + v2 - 2.0 * m));
                }
            } else if v2 >= m {
                out.push((t2 - t0, h0 + v2 - 2.0 * m));
            } else {
                // Crosses the running minimum inside the segment.
                let tc = cur_t + (t2 - cur_t) * (cur_v - m) / (cur_v - v2);
                out.push((tc - t0, h0 - m));
                m = v2;
                out.push((t2 - t0, h0 - v2));
            }
            cur_t = t2;
            cur_v = v2;
        }
        out
    }

    /// Sweep backward from `t0`: values `g(s) = h0 + H(s) − 2 min_{[s, t0]} H`
    /// for `s ∈ [0, t0]`, returned with `s` increasing.
    pub fn dist_sweep_backward(&self, t0: f64) -> Vec<(f64, f64)> {
        let h0 = self.value_at(t0);
        let mut rev = vec![(t0, 0.0)];
        let mut m = h0;
        let mut cur_t = t0;
        let mut cur_v = h0;
        let start = self.ts.partition_point(|&x| x < t0);
        for i in (0..start).rev() {
            let (t2, v2) = (self.ts[i], self.vs[i]);
            if t2 >= cur_t {
                continue;
            }
            if cur_v <= m {
                if v2 < m {
                    m = v2;
                    rev.push((t2, h0 - v2));
                } else {
                    rev.push((t2, h0 + v2 - 2.0 * m));
                }
            } else if v2 >= m {
                rev.push((t2, h0 + v2 - 2.0 * m));
            } else {
                let tc = cur_t - (cur_t - t2) * (cur_v - m) / (cur_v - v2);
                rev.push((tc, h0 - m));
                m = v2;
                rev.push((t2, h0 - v2));
            }
            cur_t = t2;
            cur_v = v2;
        }
        rev.reverse();
        rev
    }
}

/// Range-minimum table over breakpoint values for O(1) interval minima.
struct MinTable {
    table: Vec<Vec<f64>>,
}

impl MinTable {
    fn new(vs: &[f64]) -> Self {
        let n = vs.len();
        let levels = (usize::BITS - n.leading_zeros()) as usize;
        let mut table = Vec::with_capacity(levels);
        table.push(vs.to_vec());
        let mut len = 1;
        while 2 * len <= n {
            let prev = table.last().unwrap();
            let row: Vec<f64> = (0..=n - 2 * len)
                .map(|i| prev[i].min(prev[i + len]))
                .collect();
            table.push(row);
            len *= 2;
        }
        MinTable { table }
    }

    /// Minimum of vs[i..=j].
    fn min(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.table[0][i];
        }
        let k = (usize::BITS - 1 - (j - i + 1).leading_zeros()) as usize;
        self.table[k][i].min(self.table[k][j + 1 - (1 << k)])
    }
}

/// A coding function: piecewise-linear, nonnegative, zero at both ends of
/// its lifetime, and not identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PLExcursion {
    pl: Polyline,
}

/// A nonnegative piecewise-linear path; unlike [`PLExcursion`], the initial
/// value may be positive (spinal pieces are of this shape).
#[derive(Debug, Clone, PartialEq)]
pub struct PLPath {
    pl: Polyline,
}

impl PLPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        validate_polyline(&times, &values)?;
        let mut pl = Polyline::new(times, values);
        pl.normalize();
        Ok(PLPath { pl })
    }

    pub fn times(&self) -> &[f64] {
        &self.pl.ts
    }

    pub fn values(&self) -> &[f64] {
        &self.pl.vs
    }

    pub fn lifetime(&self) -> f64 {
        self.pl.lifetime()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.pl.value_at(t)
    }

    /// Tree pseudometric between two times of the path.
    pub fn dist(&self, s: f64, t: f64) -> Result<f64> {
        dist_impl(&self.pl, s, t)
    }
}

fn validate_polyline(times: &[f64], values: &[f64]) -> Result<()> {
    if times.len() != values.len() {
        return Err(Error::Validation(
            "times and values must have equal length".into(),
        ));
    }
    if times.len() < 2 {
        return Err(Error::Validation("need at least two breakpoints".into()));
    }
    if times[0] != 0.0 {
        return Err(Error::Validation("breakpoints must start at 0".into()));
    }
    if !times.windows(2).all(|w| w[1] > w[0]) {
        return Err(Error::Validation(
            "breakpoint times must be strictly increasing".into(),
        ));
    }
    if !times.iter().chain(values).all(|x| x.is_finite()) {
        return Err(Error::Validation("non-finite breakpoint data".into()));
    }
    if values.iter().any(|&v| v < 0.0) {
        return Err(Error::Validation("values must be nonnegative".into()));
    }
    Ok(())
}

fn dist_impl(pl: &Polyline, s: f64, t: f64) -> Result<f64> {
    let zeta = pl.lifetime();
    if !(0.0..=zeta).contains(&s) || !(0.0..=zeta).contains(&t) {
        return Err(Error::domain(format!(
            "dist: times ({s}, {t}) outside [0, {zeta}]"
        )));
    }
    let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
    Ok(pl.value_at(lo) + pl.value_at(hi) - 2.0 * pl.min_on(lo, hi))
}

impl PLExcursion {
    /// Build an excursion from breakpoints, checking every invariant:
    /// strictly increasing times starting at 0, nonnegative values vanishing
    /// at both ends, and at least one strictly positive value.
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        validate_polyline(&times, &values)?;
        if values[0] != 0.0 || *values.last().unwrap() != 0.0 {
            return Err(Error::Validation(
                "excursion must vanish at both endpoints".into(),
            ));
        }
        if !values.iter().any(|&v| v > 0.0) {
            return Err(Error::Validation(
                "excursion must not be identically zero".into(),
            ));
        }
        let mut pl = Polyline::new(times, values);
        pl.normalize();
        Ok(PLExcursion { pl })
    }

    fn from_points(points: Vec<(f64, f64)>) -> Result<Self> {
        // Sweep junctions repeat their glue point; keep the first copy.
        let scale_t = points.last().map(|p| p.0.abs().max(1.0)).unwrap_or(1.0);
        let mut ts: Vec<f64> = Vec::with_capacity(points.len());
        let mut vs: Vec<f64> = Vec::with_capacity(points.len());
        for (t, v) in points {
            if let Some(&prev) = ts.last() {
                if t - prev <= SNAP * scale_t {
                    continue;
                }
            }
            ts.push(t);
            vs.push(v);
        }
        // Clamp roundoff noise at the ends and below zero.
        let scale = vs.iter().fold(1.0_f64, |a, &b| a.max(b.abs()));
        for v in vs.iter_mut() {
            if *v < 0.0 && *v > -SNAP * scale {
                *v = 0.0;
            }
        }
        if let Some(first) = vs.first_mut() {
            if first.abs() <= SNAP * scale {
                *first = 0.0;
            }
        }
        if let Some(last) = vs.last_mut() {
            if last.abs() <= SNAP * scale {
                *last = 0.0;
            }
        }
        PLExcursion::new(ts, vs)
    }

    pub(crate) fn polyline(&self) -> &Polyline {
        &self.pl
    }

    pub(crate) fn from_polyline_unchecked(mut pl: Polyline) -> Self {
        pl.normalize();
        PLExcursion { pl }
    }

    pub fn times(&self) -> &[f64] {
        &self.pl.ts
    }

    pub fn values(&self) -> &[f64] {
        &self.pl.vs
    }

    /// Lifetime ζ of the excursion.
    pub fn lifetime(&self) -> f64 {
        self.pl.lifetime()
    }

    pub fn value_at(&self, t: f64) -> f64 {
        self.pl.value_at(t)
    }

    /// Tree pseudometric `d(s, t) = H_s + H_t − 2 min_{[s∧t, s∨t]} H`.
    pub fn dist(&self, s: f64, t: f64) -> Result<f64> {
        dist_impl(&self.pl, s, t)
    }

    /// Total height Γ and the first time τ attaining it.
    pub fn total_height(&self) -> (f64, f64) {
        let mut best = f64::NEG_INFINITY;
        let mut at = 0.0;
        for (&t, &v) in self.pl.ts.iter().zip(&self.pl.vs) {
            if v > best {
                best = v;
                at = t;
            }
        }
        (best, at)
    }

    /// Diameter of the coded tree with a maximizing pair of times,
    /// lexicographically smallest among breakpoint pairs attaining it.
    pub fn diameter(&self) -> (f64, f64, f64) {
        let vs = &self.pl.vs;
        let ts = &self.pl.ts;
        let table = MinTable::new(vs);
        let mut best = f64::NEG_INFINITY;
        let (mut bi, mut bj) = (0, 0);
        for i in 0..vs.len() {
            for j in (i + 1)..vs.len() {
                let d = vs[i] + vs[j] - 2.0 * table.min(i, j);
                if d > best {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        (best, ts[bi], ts[bj])
    }

    /// Reroot the coded tree at the point visited at time `t0`; the result
    /// has the same lifetime and codes the same tree with a new root.
    pub fn reroot(&self, t0: f64) -> Result<PLExcursion> {
        let zeta = self.lifetime();
        if !(0.0..=zeta).contains(&t0) {
            return Err(Error::domain(format!("reroot: t0={t0} outside [0, {zeta}]")));
        }
        if t0 == 0.0 || t0 == zeta {
            return Ok(self.clone());
        }
        let mut points = self.pl.dist_sweep_forward(t0);
        let off = zeta - t0;
        for (s, g) in self.pl.dist_sweep_backward(t0) {
            points.push((off + s, g));
        }
        PLExcursion::from_points(points)
    }

    /// Concatenation: `self` on `[0, ζ]` followed by `other`.
    pub fn concat(&self, other: &PLExcursion) -> PLExcursion {
        let zeta = self.lifetime();
        let mut ts = self.pl.ts.clone();
        let mut vs = self.pl.vs.clone();
        ts.extend(other.pl.ts.iter().map(|t| t + zeta));
        vs.extend(other.pl.vs.iter().copied());
        let mut pl = Polyline::new(ts, vs);
        pl.normalize();
        PLExcursion { pl }
    }

    /// Reverse the excursion at its lifetime: `t ↦ H_{ζ − t}`.
    pub fn reverse(&self) -> PLExcursion {
        let zeta = self.lifetime();
        let ts: Vec<f64> = self.pl.ts.iter().rev().map(|&t| zeta - t).collect();
        let vs: Vec<f64> = self.pl.vs.iter().rev().copied().collect();
        PLExcursion {
            pl: Polyline::new(ts, vs),
        }
    }

    /// Last time before τ (resp. first after) at which H drops below Γ − x.
    /// At level 0 (the x = Γ boundary) no strict downcrossing exists; the
    /// limit convention is the last/first touch of 0 around τ.
    fn level_crossings(&self, level: f64) -> (f64, f64) {
        let (_, tau) = self.total_height();
        let ts = &self.pl.ts;
        let vs = &self.pl.vs;
        let k = ts.partition_point(|&x| x < tau);
        // Walk left for the last upcrossing through `level` before τ.
        let mut tminus = 0.0;
        for i in (0..k).rev() {
            if vs[i] < level || (level == 0.0 && vs[i] == 0.0) {
                if vs[i] == level {
                    tminus = ts[i];
                } else {
                    let (t1, v1) = (ts[i], vs[i]);
                    let (t2, v2) = (ts[i + 1], vs[i + 1]);
                    tminus = t1 + (t2 - t1) * (level - v1) / (v2 - v1);
                }
                break;
            }
        }
        // Walk right for the first downcrossing after τ.
        let mut tplus = self.lifetime();
        for i in (k + 1)..ts.len() {
            if vs[i] < level || (level == 0.0 && vs[i] == 0.0) {
                if vs[i] == level {
                    tplus = ts[i];
                } else {
                    let (t1, v1) = (ts[i - 1], vs[i - 1]);
                    let (t2, v2) = (ts[i], vs[i]);
                    tplus = t1 + (t2 - t1) * (v1 - level) / (v1 - v2);
                }
                break;
            }
        }
        (tminus, tplus)
    }

    /// Split at distance `x` below the top of the height-realizing geodesic.
    /// Returns the subtree above the split point (total height exactly `x`)
    /// and the complement rerooted at the split point. `x = Γ` is allowed
    /// when the function touches 0 strictly between its endpoints (the
    /// diameter-midpoint case for trees whose diameter passes the root).
    pub fn height_split(&self, x: f64) -> Result<(PLExcursion, PLExcursion)> {
        let (gamma, _) = self.total_height();
        if !(x > 0.0 && x <= gamma) {
            return Err(Error::domain(format!(
                "height_split: x={x} outside (0, {gamma}]"
            )));
        }
        let level = gamma - x;
        let (tminus, tplus) = self.level_crossings(level);
        // Part above the level: H restricted to [τ−, τ+] minus the level.
        let mut top = vec![(0.0, 0.0)];
        let lo = self.pl.ts.partition_point(|&t| t <= tminus);
        let hi = self.pl.ts.partition_point(|&t| t < tplus);
        for i in lo..hi {
            top.push((self.pl.ts[i] - tminus, self.pl.vs[i] - level));
        }
        top.push((tplus - tminus, 0.0));
        let above = PLExcursion::from_points(top)?;
        // Complement: forward sweep from τ+, then the wrapped prefix [0, τ−].
        let mut rest = self.pl.dist_sweep_forward(tplus);
        let off = self.lifetime() - tplus;
        for (s, g) in self.pl.dist_sweep_backward(tminus) {
            rest.push((off + s, g));
        }
        let below = PLExcursion::from_points(rest)?;
        Ok((above, below))
    }

    /// Spinal decomposition of the excursion between time 0 and time `t`.
    pub fn spinal_decompose_at(&self, t: f64) -> Result<SpinalDecomposition> {
        spinal::decompose_at(self, t)
    }

    /// Spinal decomposition between times `t0 < t1`: reroot at `t0`, then
    /// decompose between 0 and `t1 − t0`.
    pub fn spinal_decompose(&self, t0: f64, t1: f64) -> Result<SpinalDecomposition> {
        if !(t0 >= 0.0 && t0 < t1 && t1 <= self.lifetime()) {
            return Err(Error::domain(format!(
                "spinal_decompose: need 0 ≤ t0 < t1 ≤ ζ, got ({t0}, {t1})"
            )));
        }
        if t0 == 0.0 {
            self.spinal_decompose_at(t1)
        } else {
            self.reroot(t0)?.spinal_decompose_at(t1 - t0)
        }
    }

    /// Pointwise comparison as functions on the union breakpoint grid.
    pub fn approx_eq(&self, other: &PLExcursion, tol: f64) -> bool {
        if (self.lifetime() - other.lifetime()).abs() > tol * (1.0 + self.lifetime().abs()) {
            return false;
        }
        let scale = 1.0 + self.total_height().0.abs();
        let mut grid: Vec<f64> = self
            .pl
            .ts
            .iter()
            .chain(other.pl.ts.iter())
            .copied()
            .collect();
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &t in &grid {
            let t = t.min(self.lifetime()).min(other.lifetime());
            if (self.value_at(t) - other.value_at(t)).abs() > tol * scale {
                return false;
            }
        }
        true
    }
}

/// Serialize an excursion as CSV with header `t,h`.
pub fn to_csv(exc: &PLExcursion) -> String {
    let mut out = String::from("t,h\n");
    for (t, v) in exc.times().iter().zip(exc.values()) {
        out.push_str(&format!("{t},{v}\n"));
    }
    out
}

/// Parse an excursion from CSV (`t,h` header) or a JSON array of [t, h].
pub fn from_str(data: &str) -> Result<PLExcursion> {
    let trimmed = data.trim_start();
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    if trimmed.starts_with('[') {
        let rows: Vec<(f64, f64)> = serde_json::from_str(trimmed)
            .map_err(|e| Error::Validation(format!("bad JSON excursion: {e}")))?;
        for (t, v) in rows {
            ts.push(t);
            vs.push(v);
        }
    } else {
        for (i, line) in data.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with('t')) {
                continue;
            }
            let mut parts = line.split(',');
            let t: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Validation(format!("bad CSV row {i}")))?;
            let v: f64 = parts
                .next()
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Validation(format!("bad CSV row {i}")))?;
            ts.push(t);
            vs.push(v);
        }
    }
    PLExcursion::new(ts, vs)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::Rng;

    /// Random excursion from a nonnegative random walk bridge.
    pub fn random_excursion<R: Rng>(rng: &mut R, max_pts: usize) -> PLExcursion {
        let n = rng.gen_range(3..max_pts.max(4));
        loop {
            let mut ts: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
            ts.push(0.0);
            ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
            if ts.len() < 3 {
                continue;
            }
            let m = ts.len();
            let mut vs = vec![0.0; m];
            for i in 1..m - 1 {
                vs[i] = rng.gen_range(0.0..4.0);
            }
            if let Ok(e) = PLExcursion::new(ts, vs) {
                return e;
            }
        }
    }
}
