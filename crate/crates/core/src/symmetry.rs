//! Lattice isometries and the cell-frame identifications used by path
//! decompositions and the recursive samplers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gasket::{cells_at, LatticePoint, TriangleAddress};

/// An isometry of the triangular lattice: `p -> linear * p + shift`.
///
/// The linear part is one of the twelve elements of the dihedral group of the
/// hexagon, written as an integer matrix acting on `(u, v)` columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Isometry {
    pub linear: [[i64; 2]; 2],
    pub shift: LatticePoint,
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry {
        linear: [[1, 0], [0, 1]],
        shift: LatticePoint::ORIGIN,
    };

    /// Swaps `a_N` and `b_N`: reflection in the bisector of the angle at `O`.
    pub const SWAP_AB: Isometry = Isometry {
        linear: [[0, 1], [1, 0]],
        shift: LatticePoint::ORIGIN,
    };

    /// Reflection across the y-axis.
    pub const MIRROR_Y: Isometry = Isometry {
        linear: [[-1, -1], [0, 1]],
        shift: LatticePoint::ORIGIN,
    };

    /// Counter-clockwise rotation by 60 degrees.
    pub const ROTATE_60: Isometry = Isometry {
        linear: [[0, -1], [1, 1]],
        shift: LatticePoint::ORIGIN,
    };

    #[inline]
    pub fn apply(&self, p: LatticePoint) -> LatticePoint {
        let m = &self.linear;
        LatticePoint::new(
            m[0][0] * p.u + m[0][1] * p.v + self.shift.u,
            m[1][0] * p.u + m[1][1] * p.v + self.shift.v,
        )
    }

    #[inline]
    pub fn apply_linear(&self, p: LatticePoint) -> LatticePoint {
        let m = &self.linear;
        LatticePoint::new(m[0][0] * p.u + m[0][1] * p.v, m[1][0] * p.u + m[1][1] * p.v)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        let (a, b) = (&self.linear, &other.linear);
        let mut linear = [[0; 2]; 2];
        for (i, row) in linear.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Isometry {
            linear,
            shift: self.apply(other.shift),
        }
    }

    pub fn det(&self) -> i64 {
        let m = &self.linear;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn inverse(&self) -> Isometry {
        let m = &self.linear;
        let d = self.det();
        let linear = [[m[1][1] * d, -m[0][1] * d], [-m[1][0] * d, m[0][0] * d]];
        let lin = Isometry {
            linear,
            shift: LatticePoint::ORIGIN,
        };
        let s = lin.apply_linear(self.shift);
        Isometry {
            linear,
            shift: LatticePoint::new(-s.u, -s.v),
        }
    }

    /// Preserves the quadratic form `u^2 + uv + v^2`.
    pub fn is_isometry(&self) -> bool {
        let e1 = self.apply_linear(LatticePoint::new(1, 0));
        let e2 = self.apply_linear(LatticePoint::new(0, 1));
        let e3 = self.apply_linear(LatticePoint::new(1, 1));
        e1.norm_sq() == 1 && e2.norm_sq() == 1 && e3.norm_sq() == 3
    }

    /// The unique isometry taking the triangle `from` (as an ordered corner
    /// triple) onto `to`.
    pub fn mapping(from: [LatticePoint; 3], to: [LatticePoint; 3]) -> Result<Isometry> {
        let (f1, f2) = (from[1] - from[0], from[2] - from[0]);
        let (t1, t2) = (to[1] - to[0], to[2] - to[0]);
        let det = f1.u * f2.v - f2.u * f1.v;
        if det == 0 {
            return Err(Error::InvalidArgument("degenerate triangle".into()));
        }
        // linear = T F^{-1}, with F = [f1 f2] as columns
        let inv = [[f2.v, -f2.u], [-f1.v, f1.u]];
        let mut linear = [[0i64; 2]; 2];
        let t = [[t1.u, t2.u], [t1.v, t2.v]];
        for i in 0..2 {
            for j in 0..2 {
                let num = t[i][0] * inv[0][j] + t[i][1] * inv[1][j];
                if num % det != 0 {
                    return Err(Error::InvalidArgument("triangles are not congruent".into()));
                }
                linear[i][j] = num / det;
            }
        }
        let lin = Isometry {
            linear,
            shift: LatticePoint::ORIGIN,
        };
        let image = lin.apply_linear(from[0]);
        let iso = Isometry {
            linear,
            shift: to[0] - image,
        };
        if !iso.is_isometry() {
            return Err(Error::InvalidArgument("triangles are not congruent".into()));
        }
        Ok(iso)
    }

    /// All twelve linear parts, generated from the 60-degree rotation and a reflection.
    pub fn point_group() -> Vec<Isometry> {
        let mut out = Vec::with_capacity(12);
        let mut r = Isometry::IDENTITY;
        for _ in 0..6 {
            out.push(r);
            out.push(r.compose(&Isometry::SWAP_AB));
            r = Isometry::ROTATE_60.compose(&r);
        }
        out
    }
}

/// Reflection fixing the vertex `c` that exchanges the two `2^scale`-triangles
/// meeting there.
pub fn pair_reflection(c: LatticePoint, scale: u32) -> Result<Isometry> {
    let cells = cells_at(c, scale);
    if cells.len() != 2 {
        return Err(Error::NotAVertex(c));
    }
    let others = |t: &TriangleAddress| -> [LatticePoint; 2] {
        let k = t.corners();
        let mut rest = k.iter().copied().filter(|&p| p != c);
        [rest.next().unwrap(), rest.next().unwrap()]
    };
    let [p1, p2] = others(&cells[0]);
    let [q1, q2] = others(&cells[1]);
    for target in [[c, q1, q2], [c, q2, q1]] {
        let iso = Isometry::mapping([c, p1, p2], target)?;
        if iso.det() == -1 {
            return Ok(iso);
        }
    }
    Err(Error::Integrity("no reflection exchanging the cells".into()))
}

/// Identification of a `2^scale`-triangle (plus the neighbouring triangles at
/// its corners) with the canonical triangle `O a_scale b_scale`.
///
/// Points of the primary triangle move by a single isometry. A point in the
/// other triangle attached at a corner `c` is first reflected into the primary
/// triangle by the pair reflection at `c`, mapped, and then reflected out again
/// at the image corner. The result is a graph isomorphism of the union, which
/// a global isometry cannot always provide.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameMap {
    pub primary: TriangleAddress,
    pub iso: Isometry,
}

impl FrameMap {
    /// Maps `entry -> O`, `exit -> a_scale`, `third -> b_scale`.
    pub fn to_canonical(cell: TriangleAddress, entry: LatticePoint, exit: LatticePoint) -> Result<FrameMap> {
        let third = cell
            .corners()
            .into_iter()
            .find(|&p| p != entry && p != exit)
            .ok_or_else(|| Error::InvalidArgument("entry/exit must be distinct corners".into()))?;
        if !cell.is_corner(entry) || !cell.is_corner(exit) {
            return Err(Error::InvalidArgument("entry/exit must be corners of the cell".into()));
        }
        let s = cell.scale;
        let iso = Isometry::mapping(
            [entry, exit, third],
            [LatticePoint::ORIGIN, LatticePoint::a(s), LatticePoint::b(s)],
        )?;
        Ok(FrameMap { primary: cell, iso })
    }

    pub fn inverse(&self) -> FrameMap {
        let s = self.primary.scale;
        FrameMap {
            primary: TriangleAddress {
                corner: self.image_corner(),
                scale: s,
            },
            iso: self.iso.inverse(),
        }
    }

    fn image_corner(&self) -> LatticePoint {
        let k = self.primary.corners().map(|p| self.iso.apply(p));
        *k.iter().min_by_key(|p| (p.v, p.u)).unwrap()
    }

    pub fn apply(&self, p: LatticePoint) -> Result<LatticePoint> {
        if self.primary.contains(p) {
            return Ok(self.iso.apply(p));
        }
        let s = self.primary.scale;
        for c in self.primary.corners() {
            let refl = pair_reflection(c, s)?;
            let q = refl.apply(p);
            if self.primary.contains(q) {
                // p sits in the other triangle at c
                let image_c = self.iso.apply(c);
                let back = pair_reflection(image_c, s)?;
                return Ok(back.apply(self.iso.apply(q)));
            }
        }
        Err(Error::InvalidArgument(format!(
            "{p} lies outside the triangle and its corner neighbours"
        )))
    }

    /// Maps a path. Points outside the primary triangle are reflected at the
    /// most recently visited corner, which is where a segment between
    /// consecutive corner hits can leave the triangle.
    pub fn apply_all(&self, pts: &[LatticePoint]) -> Result<Vec<LatticePoint>> {
        let s = self.primary.scale;
        let mut anchor: Option<(LatticePoint, Isometry)> = None;
        let mut out = Vec::with_capacity(pts.len());
        for &p in pts {
            if self.primary.contains(p) {
                if self.primary.is_corner(p) && anchor.map(|(c, _)| c) != Some(p) {
                    let image_c = self.iso.apply(p);
                    let there = pair_reflection(p, s)?;
                    let back = pair_reflection(image_c, s)?;
                    anchor = Some((p, back.compose(&self.iso).compose(&there)));
                }
                out.push(self.iso.apply(p));
            } else {
                match anchor {
                    Some((c, map)) if self.primary.contains(pair_reflection(c, s)?.apply(p)) => out.push(map.apply(p)),
                    _ => out.push(self.apply(p)?),
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gasket::{is_vertex, neighbors};

    #[test]
    fn group_has_twelve_distinct_isometries() {
        let g = Isometry::point_group();
        assert_eq!(g.len(), 12);
        for (i, a) in g.iter().enumerate() {
            assert!(a.is_isometry());
            for b in &g[i + 1..] {
                assert_ne!(a.linear, b.linear);
            }
        }
        assert!(g.iter().any(|x| x.linear == Isometry::MIRROR_Y.linear));
    }

    #[test]
    fn inverse_and_mapping() {
        let t = Isometry::mapping(
            [LatticePoint::new(2, 0), LatticePoint::new(4, 0), LatticePoint::new(2, 2)],
            [LatticePoint::ORIGIN, LatticePoint::a(1), LatticePoint::b(1)],
        )
        .unwrap();
        let inv = t.inverse();
        for p in [LatticePoint::new(3, 1), LatticePoint::new(5, -2)] {
            assert_eq!(inv.apply(t.apply(p)), p);
            assert_eq!(t.compose(&inv).apply(p), p);
        }
        assert_eq!(t.apply(LatticePoint::new(4, 0)), LatticePoint::a(1));
    }

    #[test]
    fn pair_reflection_swaps_cells() {
        for c in [LatticePoint::ORIGIN, LatticePoint::new(1, 0), LatticePoint::new(0, 1), LatticePoint::new(1, 1)] {
            let r = pair_reflection(c, 0).unwrap();
            assert_eq!(r.apply(c), c);
            let cells = cells_at(c, 0);
            let img: Vec<_> = cells[0].corners().map(|p| r.apply(p)).to_vec();
            for p in cells[1].corners() {
                assert!(img.contains(&p));
            }
        }
    }

    #[test]
    fn frame_map_is_graph_isomorphism_near_cell() {
        // cell at (1,0) scale 0 entered at (1,0) leaving at (1,1)
        let cell = TriangleAddress::new(LatticePoint::new(1, 0), 0).unwrap();
        let f = FrameMap::to_canonical(cell, LatticePoint::new(1, 0), LatticePoint::new(1, 1)).unwrap();
        let g = f.inverse();
        let pts = [
            LatticePoint::new(1, 0),
            LatticePoint::new(2, 0),
            LatticePoint::new(1, 1),
            LatticePoint::new(0, 0),
            LatticePoint::new(0, 1),
        ];
        for &p in &pts {
            let q = f.apply(p).unwrap();
            assert!(is_vertex(q), "{p} -> {q}");
            assert_eq!(g.apply(q).unwrap(), p);
        }
        // edges inside the two cells at the entry corner are preserved
        let near: Vec<_> = pts.iter().copied().filter(|&p| p != LatticePoint::new(1, 1)).collect();
        for &p in &near {
            for &q in &near {
                if neighbors(p).unwrap().contains(&q) {
                    assert!(neighbors(f.apply(p).unwrap()).unwrap().contains(&f.apply(q).unwrap()));
                }
            }
        }
        // a path that wanders at the entry and leaves through the exit
        let walk = [
            LatticePoint::new(1, 0),
            LatticePoint::new(0, 1),
            LatticePoint::new(0, 0),
            LatticePoint::new(1, 0),
            LatticePoint::new(2, 0),
            LatticePoint::new(1, 1),
        ];
        let img = f.apply_all(&walk).unwrap();
        assert_eq!(img[0], LatticePoint::ORIGIN);
        assert_eq!(img[5], LatticePoint::a(0));
        assert_eq!(g.apply_all(&img).unwrap(), walk);
        assert_eq!(f.apply(LatticePoint::new(0, 0)).unwrap().v, 0);
    }
}
