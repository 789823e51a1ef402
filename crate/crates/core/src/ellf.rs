//! Erasing larger loops first.
//!
//! All operations work in the path's own coordinates: loop structure does not
//! depend on the identification of a cell with `O a b`, so segments are never
//! moved.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::gasket::LatticePoint;
use crate::paths::{crossing_level, hitting_times, skeleton_of, Path};

/// Lawler's chronological loop erasure.
pub fn erase_chronological(w: &Path) -> Path {
    let mut out: Vec<LatticePoint> = Vec::with_capacity(w.vertices().len());
    let mut pos: HashMap<LatticePoint, usize> = HashMap::new();
    for &p in w.vertices() {
        if let Some(&i) = pos.get(&p) {
            for q in out.drain(i + 1..) {
                pos.remove(&q);
            }
        } else {
            pos.insert(p, out.len());
            out.push(p);
        }
    }
    Path::from_trusted(out, w.scale())
}

/// One largest-loop erasure of a crossing segment of level `k`: erase loops of
/// the coarse path at `G_{k-1}` chronologically and reinsert the fine segment
/// that follows each kept coarse vertex at its last visit.
fn erase_top(seg: &[LatticePoint], k: u32) -> Vec<LatticePoint> {
    let t = hitting_times(seg, k - 1).times;
    let last = t.len() - 1;
    let mut last_visit: HashMap<LatticePoint, usize> = HashMap::with_capacity(t.len());
    for (i, &ti) in t.iter().enumerate() {
        last_visit.insert(seg[ti], i);
    }
    let mut out = Vec::with_capacity(seg.len());
    out.push(seg[0]);
    let mut i = 0;
    while i < last {
        let j = last_visit[&seg[t[i]]];
        if j == last {
            break;
        }
        out.extend_from_slice(&seg[t[j] + 1..=t[j + 1]]);
        i = j + 1;
    }
    out
}

/// Applies `rounds` induction steps to a crossing segment of level `k`.
fn erase_rounds(seg: &[LatticePoint], k: u32, rounds: u32) -> Result<Vec<LatticePoint>> {
    if rounds == 0 || k == 0 {
        return Ok(seg.to_vec());
    }
    let top = erase_top(seg, k);
    if rounds == 1 || k == 1 {
        return Ok(top);
    }
    let sk = skeleton_of(&top, k - 1)?;
    let mut out = Vec::with_capacity(top.len());
    out.push(top[0]);
    for c in &sk.cells {
        let inner = erase_rounds(&top[c.entry_time..=c.exit_time], k - 1, rounds - 1)?;
        out.extend_from_slice(&inner[1..]);
    }
    Ok(out)
}

/// Erases the `2^{N-1}`-scale loops of a crossing of level `N`. Returns the
/// path `w'` with fine structure restored and its coarse path
/// `\hat Q_{N-1} w = Q_{N-1} w'`.
pub fn erase_largest(w: &Path) -> Result<(Path, Path)> {
    let n = crossing_level(w)?;
    if n == 0 {
        return Err(Error::NotACrossing("level-0 crossing has no loops to erase".into()));
    }
    let out = Path::from_trusted(erase_top(w.vertices(), n), 0);
    let coarse = out.coarse_grain(n - 1);
    Ok((out, coarse))
}

/// The loop-erasing operator `L` on crossings of any level and type.
pub fn ellf(w: &Path) -> Result<Path> {
    let n = crossing_level(w)?;
    Ok(Path::from_trusted(erase_rounds(w.vertices(), n, n)?, 0))
}

/// Path after erasing loops of scales `2^{N-1}` down to `2^m`, with fine
/// structure restored.
pub fn erase_down_to(w: &Path, m: u32) -> Result<Path> {
    let n = crossing_level(w)?;
    if m > n {
        return Err(Error::InvalidArgument(format!("scale {m} exceeds crossing level {n}")));
    }
    Ok(Path::from_trusted(erase_rounds(w.vertices(), n, n - m)?, 0))
}

/// `\hat Q_m w`: the coarse path at `G_m` after erasing all loops of scale
/// `2^m` and larger. `\hat Q_N = Q_N` and `\hat Q_0 = L`.
pub fn hatq(w: &Path, m: u32) -> Result<Path> {
    Ok(erase_down_to(w, m)?.coarse_grain(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::find_loops;

    fn path(pts: &[(i64, i64)]) -> Path {
        Path::new(pts.iter().map(|&(u, v)| LatticePoint::new(u, v)).collect()).unwrap()
    }

    #[test]
    fn chronological_basics() {
        let w = path(&[(0, 0), (0, 1), (0, 2)]);
        assert_eq!(erase_chronological(&w), w);
        let w = path(&[(0, 0), (0, 1), (0, 0), (1, 0), (1, 1), (0, 2)]);
        assert_eq!(
            erase_chronological(&w).vertices(),
            path(&[(0, 0), (1, 0), (1, 1), (0, 2)]).vertices()
        );
    }

    #[test]
    fn b_erased_with_a_loop() {
        // V_1 path: O b0 b1 m b0 a0 a1, erasing the loop at b0 drops b1
        let w = path(&[(0, 0), (1, 0), (2, 0), (1, 1), (1, 0), (0, 1), (0, 2)]);
        let l = ellf(&w).unwrap();
        assert_eq!(l.vertices(), path(&[(0, 0), (1, 0), (0, 1), (0, 2)]).vertices());
        assert_eq!(l, erase_chronological(&w));
    }

    #[test]
    fn ellf_level_two() {
        // a loop at O of scale 2 followed by a detour at scale 1
        let w = path(&[
            (0, 0),
            (0, 1),
            (0, 2),
            (1, 1),
            (2, 0),
            (1, 0),
            (0, 0),
            (0, 1),
            (1, 0),
            (0, 1),
            (0, 2),
            (0, 3),
            (0, 4),
        ]);
        let (top, coarse) = erase_largest(&w).unwrap();
        assert_eq!(coarse.vertices(), &[LatticePoint::ORIGIN, LatticePoint::a(1), LatticePoint::a(2)]);
        assert_eq!(top.coarse_grain(1), coarse);
        let l = ellf(&w).unwrap();
        assert!(find_loops(&l).is_empty());
        assert_eq!(l.vertices(), path(&[(0, 0), (0, 1), (0, 2), (0, 3), (0, 4)]).vertices());
        assert_eq!(ellf(&l).unwrap(), l);
        assert_eq!(hatq(&w, 2).unwrap(), w.coarse_grain(2));
        assert_eq!(hatq(&w, 0).unwrap(), l);
    }
}
