//! Spinal decomposition of a coding function between two times, and its
//! exact inverse.
//!
//! Decomposing `H` between 0 and `t` splits the function into the subtree
//! excursions grafted left and right of the path from `p(t)` down to the
//! root, indexed by the distance `a` of the graft point below `H_t`. For
//! piecewise-linear inputs the path between graft points carries positive
//! time (the mass measure is not supported by leaves), so the decomposition
//! additionally records the monotone descent profile of each side; with that
//! record the reconstruction is exact rather than almost-everywhere.

use super::{PLExcursion, Polyline, SNAP};
use crate::{Error, Result};

/// One linear piece of a side's descent profile: the running minimum drops
/// from `spine_height − a_from` to `spine_height − a_to` over `duration`
/// time units. `a_from == a_to` with positive duration records a flat
/// stretch at the running minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpineSegment {
    pub a_from: f64,
    pub a_to: f64,
    pub duration: f64,
}

/// Subtree excursions grafted at distance `a` below the top of the spine.
/// At least one side is present.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinalAtom {
    pub a: f64,
    pub left: Option<PLExcursion>,
    pub right: Option<PLExcursion>,
}

/// Spinal decomposition of an excursion between time 0 and a marked time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinalDecomposition {
    /// Value of the coding function at the marked time (= length of the spine).
    pub spine_height: f64,
    /// Grafted excursion pairs, sorted by increasing `a`.
    pub atoms: Vec<SpinalAtom>,
    /// Descent profile of the reversed pre-`t` part of the function.
    pub left_spine: Vec<SpineSegment>,
    /// Descent profile of the post-`t` part of the function.
    pub right_spine: Vec<SpineSegment>,
}

impl SpinalDecomposition {
    /// Total lifetime carried by one side (excursions plus spine time).
    fn side_lifetime(&self, left: bool) -> f64 {
        let spine: f64 = if left {
            self.left_spine.iter().map(|s| s.duration).sum()
        } else {
            self.right_spine.iter().map(|s| s.duration).sum()
        };
        let exc: f64 = self
            .atoms
            .iter()
            .filter_map(|at| {
                if left {
                    at.left.as_ref()
                } else {
                    at.right.as_ref()
                }
            })
            .map(|e| e.lifetime())
            .sum();
        spine + exc
    }

    /// Lifetime of the reconstructed excursion.
    pub fn total_lifetime(&self) -> f64 {
        self.side_lifetime(true) + self.side_lifetime(false)
    }
}

/// Sweep one side path (starting at the spine top, ending at 0) into its
/// excursions-above-the-running-minimum plus the descent profile.
fn side_sweep(ts: &[f64], vs: &[f64]) -> (Vec<(f64, PLExcursion)>, Vec<SpineSegment>) {
    let h0 = vs[0];
    let mut atoms = Vec::new();
    let mut spine = Vec::new();
    let mut m = h0;
    let mut cur_t = ts[0];
    let mut i = 1;
    while i < ts.len() {
        let (t2, v2) = (ts[i], vs[i]);
        if v2 < m {
            // Pure descent of the running minimum.
            spine.push(SpineSegment {
                a_from: h0 - m,
                a_to: h0 - v2,
                duration: t2 - cur_t,
            });
            m = v2;
            cur_t = t2;
            i += 1;
            continue;
        }
        // Flat or rising: one merged piece above the current level until the
        // path drops strictly below `m` (or ends).
        let start_t = cur_t;
        let mut pts = vec![(0.0, 0.0)];
        let mut any_positive = false;
        let mut end_t = None;
        while i < ts.len() {
            let (t2, v2) = (ts[i], vs[i]);
            if v2 < m {
                let (t1, v1) = (ts[i - 1].max(start_t), {
                    // value at the sub-segment start
                    if ts[i - 1] >= start_t {
                        vs[i - 1]
                    } else {
                        m
                    }
                });
                let tc = t1 + (t2 - t1) * (v1 - m) / (v1 - v2);
                pts.push((tc - start_t, 0.0));
                end_t = Some(tc);
                break;
            }
            if v2 > m {
                any_positive = true;
            }
            pts.push((t2 - start_t, v2 - m));
            i += 1;
        }
        let piece_end = end_t.unwrap_or(*ts.last().unwrap());
        if any_positive {
            let (pt, pv): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            let exc = PLExcursion::from_polyline_unchecked(Polyline::new(pt, pv));
            atoms.push((h0 - m, exc));
        } else if piece_end > start_t {
            // Flat stretch at the running minimum: spine time at one level.
            spine.push(SpineSegment {
                a_from: h0 - m,
                a_to: h0 - m,
                duration: piece_end - start_t,
            });
        }
        cur_t = piece_end;
        if end_t.is_none() {
            break;
        }
    }
    (atoms, spine)
}

/// Decompose `H` between time 0 and time `t`.
pub(super) fn decompose_at(exc: &PLExcursion, t: f64) -> Result<SpinalDecomposition> {
    let zeta = exc.lifetime();
    if !(t > 0.0 && t < zeta) {
        return Err(Error::domain(format!(
            "spinal decomposition needs 0 < t < ζ, got t={t}, ζ={zeta}"
        )));
    }
    let pl = exc.polyline();
    let ht = pl.value_at(t);

    // Right path: H(t + s) for s ∈ [0, ζ − t].
    let mut rts = vec![0.0];
    let mut rvs = vec![ht];
    let start = pl.ts.partition_point(|&x| x <= t);
    for i in start..pl.ts.len() {
        rts.push(pl.ts[i] - t);
        rvs.push(pl.vs[i]);
    }
    // Left path: H(t − s) for s ∈ [0, t].
    let mut lts = vec![0.0];
    let mut lvs = vec![ht];
    let before = pl.ts.partition_point(|&x| x < t);
    for i in (0..before).rev() {
        lts.push(t - pl.ts[i]);
        lvs.push(pl.vs[i]);
    }

    let (latoms, lspine) = side_sweep(&lts, &lvs);
    let (ratoms, rspine) = side_sweep(&rts, &rvs);

    // Merge the two sides by graft level.
    let mut atoms: Vec<SpinalAtom> = Vec::with_capacity(latoms.len() + ratoms.len());
    let (mut li, mut ri) = (0, 0);
    while li < latoms.len() || ri < ratoms.len() {
        let la = latoms.get(li).map(|x| x.0);
        let ra = ratoms.get(ri).map(|x| x.0);
        match (la, ra) {
            (Some(a), Some(b)) if a == b => {
                atoms.push(SpinalAtom {
                    a,
                    left: Some(latoms[li].1.clone()),
                    right: Some(ratoms[ri].1.clone()),
                });
                li += 1;
                ri += 1;
            }
            (Some(a), Some(b)) if a < b => {
                atoms.push(SpinalAtom {
                    a,
                    left: Some(latoms[li].1.clone()),
                    right: None,
                });
                li += 1;
            }
            (Some(_), Some(b)) => {
                atoms.push(SpinalAtom {
                    a: b,
                    left: None,
                    right: Some(ratoms[ri].1.clone()),
                });
                ri += 1;
            }
            (Some(a), None) => {
                atoms.push(SpinalAtom {
                    a,
                    left: Some(latoms[li].1.clone()),
                    right: None,
                });
                li += 1;
            }
            (None, Some(b)) => {
                atoms.push(SpinalAtom {
                    a: b,
                    left: None,
                    right: Some(ratoms[ri].1.clone()),
                });
                ri += 1;
            }
            (None, None) => unreachable!(),
        }
    }

    Ok(SpinalDecomposition {
        spine_height: ht,
        atoms,
        left_spine: lspine,
        right_spine: rspine,
    })
}

/// Replay one side from its atoms and descent profile.
fn assemble_side(
    h0: f64,
    atoms: &[(f64, &PLExcursion)],
    spine: &[SpineSegment],
    fuzz: f64,
) -> Result<Polyline> {
    let mut pts: Vec<(f64, f64)> = vec![(0.0, h0)];
    let mut time = 0.0;
    let mut level_a = 0.0;
    let mut ai = 0;
    let push_atoms_at = |a: f64,
                             time: &mut f64,
                             ai: &mut usize,
                             pts: &mut Vec<(f64, f64)>|
     -> Result<()> {
        while *ai < atoms.len() && atoms[*ai].0 <= a + fuzz {
            let (aa, exc) = (&atoms[*ai].0, atoms[*ai].1);
            if (aa - a).abs() > fuzz {
                return Err(Error::Validation(format!(
                    "atom at level {aa} does not sit on a spine boundary (expected ≈ {a})"
                )));
            }
            let base = h0 - a;
            for (et, ev) in exc.times().iter().zip(exc.values()) {
                if *et == 0.0 {
                    continue;
                }
                pts.push((*time + et, base + ev));
            }
            *time += exc.lifetime();
            *ai += 1;
        }
        Ok(())
    };
    for seg in spine {
        if seg.duration <= 0.0 || seg.a_to < seg.a_from {
            return Err(Error::Validation("malformed spine segment".into()));
        }
        if (seg.a_from - level_a).abs() > fuzz {
            return Err(Error::Validation(format!(
                "spine segment starts at level {} but the profile is at {}",
                seg.a_from, level_a
            )));
        }
        push_atoms_at(level_a, &mut time, &mut ai, &mut pts)?;
        time += seg.duration;
        pts.push((time, h0 - seg.a_to));
        level_a = seg.a_to;
    }
    push_atoms_at(level_a, &mut time, &mut ai, &mut pts)?;
    if ai != atoms.len() {
        return Err(Error::Validation(
            "atom below the bottom of the spine profile".into(),
        ));
    }
    if (level_a - h0).abs() > fuzz {
        return Err(Error::Validation(format!(
            "spine profile descends to level {level_a}, expected {h0}"
        )));
    }
    if let Some(last) = pts.last_mut() {
        last.1 = 0.0;
    }
    let (ts, vs): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Ok(Polyline::new(ts, vs))
}

/// Inverse of the spinal decomposition: rebuild `(t, H)` exactly (up to
/// breakpoint normalization) from the atoms and the two descent profiles.
pub fn reconstruct(sd: &SpinalDecomposition) -> Result<(f64, PLExcursion)> {
    let h0 = sd.spine_height;
    if h0 < 0.0 {
        return Err(Error::Validation("negative spine height".into()));
    }
    let fuzz = SNAP * (1.0 + h0.abs()) * 10.0;
    if !sd.atoms.windows(2).all(|w| w[0].a < w[1].a) {
        return Err(Error::Validation("atom levels must be increasing".into()));
    }
    if sd
        .atoms
        .iter()
        .any(|at| at.left.is_none() && at.right.is_none())
    {
        return Err(Error::Validation("atom with both sides null".into()));
    }
    let latoms: Vec<(f64, &PLExcursion)> = sd
        .atoms
        .iter()
        .filter_map(|at| at.left.as_ref().map(|e| (at.a, e)))
        .collect();
    let ratoms: Vec<(f64, &PLExcursion)> = sd
        .atoms
        .iter()
        .filter_map(|at| at.right.as_ref().map(|e| (at.a, e)))
        .collect();
    let left = assemble_side(h0, &latoms, &sd.left_spine, fuzz)?;
    let right = assemble_side(h0, &ratoms, &sd.right_spine, fuzz)?;
    let t = left.lifetime();

    // H on [0, t] is the left side reversed; H on [t, ζ] is the right side.
    let mut ts: Vec<f64> = left.ts.iter().rev().map(|&s| t - s).collect();
    let mut vs: Vec<f64> = left.vs.iter().rev().copied().collect();
    for (i, (&s, &v)) in right.ts.iter().zip(&right.vs).enumerate() {
        if i == 0 {
            continue;
        }
        ts.push(t + s);
        vs.push(v);
    }
    let mut pl = Polyline::new(ts, vs);
    pl.normalize();
    if pl.vs.first() != Some(&0.0) || pl.vs.last() != Some(&0.0) {
        return Err(Error::Validation(
            "reconstructed function does not vanish at its endpoints".into(),
        ));
    }
    Ok((t, PLExcursion::from_polyline_unchecked(pl)))
}
