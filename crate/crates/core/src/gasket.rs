//! Geometry of the two-sided infinite pre-Sierpinski gasket.
//!
//! Points are integer pairs `(u, v)` in the basis `b0 = (1, 0)`,
//! `a0 = (1/2, sqrt(3)/2)`, so the origin is `O = (0, 0)`, `a_N = (0, 2^N)` and
//! `b_N = (2^N, 0)`. The right half `F'` lives in the cone `u, v >= 0`; the left
//! half is its mirror image across the y-axis, which in this basis is the map
//! `(u, v) -> (-u - v, v)`.
//!
//! All identity tests are exact integer computations. Cartesian coordinates are
//! only produced for reporting distances.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sentinel returned by [`vertex_level`] for the origin, which lies in every `G_N`.
pub const LEVEL_INFINITE: u32 = u32::MAX;

/// A point of the triangular lattice, serialized as `[u, v]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i64; 2]", into = "[i64; 2]")]
pub struct LatticePoint {
    pub u: i64,
    pub v: i64,
}

impl From<[i64; 2]> for LatticePoint {
    fn from([u, v]: [i64; 2]) -> Self {
        LatticePoint { u, v }
    }
}

impl From<LatticePoint> for [i64; 2] {
    fn from(p: LatticePoint) -> Self {
        [p.u, p.v]
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.u, self.v)
    }
}

impl std::ops::Add for LatticePoint {
    type Output = LatticePoint;
    fn add(self, o: LatticePoint) -> LatticePoint {
        LatticePoint::new(self.u + o.u, self.v + o.v)
    }
}

impl std::ops::Sub for LatticePoint {
    type Output = LatticePoint;
    fn sub(self, o: LatticePoint) -> LatticePoint {
        LatticePoint::new(self.u - o.u, self.v - o.v)
    }
}

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint { u: 0, v: 0 };

    pub const fn new(u: i64, v: i64) -> Self {
        LatticePoint { u, v }
    }

    /// `a_N = 2^N a0`.
    pub const fn a(level: u32) -> Self {
        LatticePoint::new(0, 1 << level)
    }

    /// `b_N = 2^N b0`.
    pub const fn b(level: u32) -> Self {
        LatticePoint::new(1 << level, 0)
    }

    pub fn scaled(self, k: i64) -> Self {
        LatticePoint::new(self.u * k, self.v * k)
    }

    /// Squared Euclidean norm in units of the unit edge length: `u^2 + uv + v^2`.
    pub fn norm_sq(self) -> i64 {
        self.u * self.u + self.u * self.v + self.v * self.v
    }

    pub fn norm(self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn dist_sq(self, other: LatticePoint) -> i64 {
        (self - other).norm_sq()
    }

    pub fn cartesian(self) -> (f64, f64) {
        let (u, v) = (self.u as f64, self.v as f64);
        (u + 0.5 * v, v * 3f64.sqrt() / 2.0)
    }

    /// Mirror image across the y-axis.
    pub fn mirrored(self) -> Self {
        LatticePoint::new(-self.u - self.v, self.v)
    }

    /// True when both coordinates are divisible by `2^level`.
    pub fn divisible(self, level: u32) -> bool {
        if level >= 63 {
            return self.u == 0 && self.v == 0;
        }
        let mask = (1i64 << level) - 1;
        (self.u | self.v) & mask == 0
    }
}

/// Which half of the two-sided gasket a triangle belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Right,
    Left,
}

/// A validated vertex of `F_0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "LatticePoint", into = "LatticePoint")]
pub struct Vertex(LatticePoint);

impl Vertex {
    pub const ORIGIN: Vertex = Vertex(LatticePoint::ORIGIN);

    pub fn new(p: LatticePoint) -> Result<Self> {
        if is_vertex(p) {
            Ok(Vertex(p))
        } else {
            Err(Error::NotAVertex(p))
        }
    }

    pub fn point(self) -> LatticePoint {
        self.0
    }
}

impl TryFrom<LatticePoint> for Vertex {
    type Error = Error;
    fn try_from(p: LatticePoint) -> Result<Self> {
        Vertex::new(p)
    }
}

impl From<Vertex> for LatticePoint {
    fn from(v: Vertex) -> Self {
        v.0
    }
}

/// Membership of a point of the closed cone `u, v >= 0` in the right half `F'`.
///
/// Descends one binary scale at a time: a point of the side-`s` triangle lies in
/// the bottom-left, bottom-right or top sub-triangle of side `s/2`, or in the
/// central hole.
fn in_right_half(mut u: i64, mut v: i64) -> bool {
    if u < 0 || v < 0 {
        return false;
    }
    let sum = u + v;
    if sum <= 1 {
        return true;
    }
    let mut side: i64 = 1 << (64 - ((sum - 1) as u64).leading_zeros());
    while side > 1 {
        let half = side / 2;
        if u + v <= half {
            // bottom-left copy
        } else if u >= half {
            u -= half;
        } else if v >= half {
            v -= half;
        } else {
            return false;
        }
        side = half;
    }
    true
}

/// True iff `p` is a vertex of the two-sided infinite pre-gasket `F_0`.
pub fn is_vertex(p: LatticePoint) -> bool {
    if p.v < 0 {
        return false;
    }
    if p.u >= 0 {
        in_right_half(p.u, p.v)
    } else {
        let m = p.mirrored();
        in_right_half(m.u, m.v)
    }
}

/// True iff the upward unit triangle with lower-left corner `c` belongs to `F_0`.
pub fn is_unit_cell(c: LatticePoint) -> bool {
    if c.u >= 0 && c.v >= 0 {
        c.u & c.v == 0
    } else {
        // left cell at c mirrors the right cell whose lower-left corner is the
        // mirror image of c + b0
        let r = (c + LatticePoint::new(1, 0)).mirrored();
        r.u >= 0 && r.v >= 0 && r.u & r.v == 0
    }
}

/// True iff the upward `2^scale`-triangle with lower-left corner `c` belongs to `F_0`.
pub fn is_cell(c: LatticePoint, scale: u32) -> bool {
    c.divisible(scale) && is_unit_cell(LatticePoint::new(c.u >> scale, c.v >> scale))
}

/// For a vertex `p`, membership in `G_M = 2^M G_0`.
///
/// A vertex lies in `G_1` exactly when both coordinates are even (every unit
/// vertex that is not a 2-triangle corner is an edge midpoint and has an odd
/// coordinate), and the statement iterates.
pub fn in_level(p: LatticePoint, level: u32) -> bool {
    p.divisible(level)
}

/// Unit edge directions of the triangular lattice.
const DIRECTIONS: [LatticePoint; 6] = [
    LatticePoint::new(1, 0),
    LatticePoint::new(-1, 0),
    LatticePoint::new(0, 1),
    LatticePoint::new(0, -1),
    LatticePoint::new(-1, 1),
    LatticePoint::new(1, -1),
];

/// Lower-left corner (in units of the scale) of the only upward triangle that can
/// carry the edge `x -> x + d`.
fn edge_cell(x: LatticePoint, d: LatticePoint) -> LatticePoint {
    match (d.u, d.v) {
        (1, 0) | (0, 1) => x,
        (-1, 0) | (-1, 1) => x - LatticePoint::new(1, 0),
        (0, -1) | (1, -1) => x - LatticePoint::new(0, 1),
        _ => unreachable!("not a unit direction"),
    }
}

pub(crate) fn neighbors_unchecked(x: LatticePoint) -> impl Iterator<Item = LatticePoint> {
    DIRECTIONS
        .into_iter()
        .filter(move |&d| is_unit_cell(edge_cell(x, d)))
        .map(move |d| x + d)
}

/// All `y` with `(x, y)` an edge of `F_0`. Every vertex has exactly four.
pub fn neighbors(x: LatticePoint) -> Result<Vec<LatticePoint>> {
    if !is_vertex(x) {
        return Err(Error::NotAVertex(x));
    }
    Ok(neighbors_unchecked(x).collect())
}

/// Neighbors of `x` in the coarse graph `F_scale`. `x` must lie in `G_scale`.
pub fn neighbors_at_scale(x: LatticePoint, scale: u32) -> Result<Vec<LatticePoint>> {
    if !x.divisible(scale) || !is_vertex(x) {
        return Err(Error::NotAVertex(x));
    }
    let unit = LatticePoint::new(x.u >> scale, x.v >> scale);
    Ok(neighbors_unchecked(unit).map(|p| p.scaled(1 << scale)).collect())
}

/// Edge test in `F_scale`: both endpoints in `G_scale` and the edge belongs to a
/// `2^scale`-triangle of the gasket.
pub fn adjacent(x: LatticePoint, y: LatticePoint, scale: u32) -> bool {
    if !x.divisible(scale) || !y.divisible(scale) {
        return false;
    }
    let xs = LatticePoint::new(x.u >> scale, x.v >> scale);
    let d = LatticePoint::new((y.u - x.u) >> scale, (y.v - x.v) >> scale);
    DIRECTIONS.contains(&d) && is_unit_cell(edge_cell(xs, d))
}

/// Largest `N` with `x` in `G_N`; [`LEVEL_INFINITE`] for the origin.
pub fn vertex_level(x: LatticePoint) -> Result<u32> {
    if !is_vertex(x) {
        return Err(Error::NotAVertex(x));
    }
    if x == LatticePoint::ORIGIN {
        return Ok(LEVEL_INFINITE);
    }
    Ok((x.u | x.v).trailing_zeros())
}

/// An upward `2^scale`-triangle identified by its lower-left corner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TriangleAddress {
    pub corner: LatticePoint,
    pub scale: u32,
}

impl TriangleAddress {
    pub fn new(corner: LatticePoint, scale: u32) -> Result<Self> {
        if is_cell(corner, scale) {
            Ok(TriangleAddress { corner, scale })
        } else {
            Err(Error::NotAVertex(corner))
        }
    }

    pub fn side_length(&self) -> i64 {
        1 << self.scale
    }

    pub fn side(&self) -> Side {
        if self.corner.u >= 0 {
            Side::Right
        } else {
            Side::Left
        }
    }

    /// Corners in the order lower-left, lower-right, top.
    pub fn corners(&self) -> [LatticePoint; 3] {
        let s = self.side_length();
        [
            self.corner,
            self.corner + LatticePoint::new(s, 0),
            self.corner + LatticePoint::new(0, s),
        ]
    }

    /// Closed containment of a lattice point.
    pub fn contains(&self, p: LatticePoint) -> bool {
        let a = p.u - self.corner.u;
        let b = p.v - self.corner.v;
        a >= 0 && b >= 0 && a + b <= self.side_length()
    }

    pub fn is_corner(&self, p: LatticePoint) -> bool {
        self.corners().contains(&p)
    }
}

fn floor_div(a: i64, s: i64) -> i64 {
    a.div_euclid(s)
}

/// Every gasket `2^scale`-triangle whose closure contains `p`.
pub fn triangles_containing(p: LatticePoint, scale: u32) -> Vec<TriangleAddress> {
    let s = 1i64 << scale;
    let (qu, qv) = (floor_div(p.u, s), floor_div(p.v, s));
    let mut out = Vec::with_capacity(2);
    for du in 0..2 {
        for dv in 0..2 {
            let corner = LatticePoint::new((qu - du) * s, (qv - dv) * s);
            let t = TriangleAddress { corner, scale };
            if t.contains(p) && is_cell(corner, scale) && !out.contains(&t) {
                out.push(t);
            }
        }
    }
    out
}

/// The unique upward `2^scale`-triangle containing both `x` and `y`.
pub fn containing_triangle(x: LatticePoint, y: LatticePoint, scale: u32) -> Result<TriangleAddress> {
    let mut found = triangles_containing(x, scale).into_iter().filter(|t| t.contains(y));
    match (found.next(), found.next()) {
        (Some(t), None) => Ok(t),
        (None, _) => Err(Error::NoCommonTriangle(scale)),
        (Some(_), Some(_)) => Err(Error::AmbiguousTriangle(scale)),
    }
}

/// The two `2^scale`-triangles meeting at a vertex `c` of `G_scale`.
pub fn cells_at(c: LatticePoint, scale: u32) -> Vec<TriangleAddress> {
    triangles_containing(c, scale)
        .into_iter()
        .filter(|t| t.is_corner(c))
        .collect()
}

/// Vertices of `F'_N` inside the closed triangle `O a_N b_N`, relative to `O`.
pub fn cell_vertices(scale: u32) -> Vec<LatticePoint> {
    let s = 1i64 << scale;
    let mut out = Vec::new();
    for v in 0..=s {
        for u in 0..=(s - v) {
            if in_right_half(u, v) {
                out.push(LatticePoint::new(u, v));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    /// F'_N built literally by F'_{N+1} = F'_N u (F'_N + a_N) u (F'_N + b_N).
    pub(crate) fn construct_right(n: u32) -> (HashSet<LatticePoint>, HashSet<(LatticePoint, LatticePoint)>) {
        let o = LatticePoint::ORIGIN;
        let (a0, b0) = (LatticePoint::a(0), LatticePoint::b(0));
        let mut verts: HashSet<_> = [o, a0, b0].into_iter().collect();
        let mut edges: HashSet<_> = [(o, a0), (o, b0), (a0, b0)].into_iter().collect();
        for k in 0..n {
            let shifts = [LatticePoint::a(k), LatticePoint::b(k)];
            let (v0, e0) = (verts.clone(), edges.clone());
            for s in shifts {
                verts.extend(v0.iter().map(|&p| p + s));
                edges.extend(e0.iter().map(|&(p, q)| (p + s, q + s)));
            }
        }
        (verts, edges)
    }

    #[test]
    fn small_examples() {
        assert!(is_vertex(LatticePoint::new(0, 0)));
        assert!(is_vertex(LatticePoint::new(0, 1)));
        assert!(!is_vertex(LatticePoint::new(3, 2)));
        assert!(!is_vertex(LatticePoint::new(1, -1)));
        assert!(is_vertex(LatticePoint::new(-1, 1)));
    }

    #[test]
    fn membership_matches_construction_up_to_six() {
        for n in 0..=6u32 {
            let (verts, _) = construct_right(n);
            let s = 1i64 << n;
            for u in -1..=s + 1 {
                for v in -1..=s + 1 {
                    let p = LatticePoint::new(u, v);
                    if u >= 0 && v >= 0 && u + v <= s {
                        assert_eq!(is_vertex(p), verts.contains(&p), "{p} at N={n}");
                    }
                    // mirrored half
                    let m = p.mirrored();
                    if u >= 0 && v >= 0 && u + v <= s {
                        assert_eq!(is_vertex(m), verts.contains(&p), "mirror of {p}");
                    }
                }
            }
        }
    }

    #[test]
    fn edges_match_construction() {
        let (verts, edges) = construct_right(5);
        let s = 1i64 << 5;
        for &p in &verts {
            // only test away from the outer corners, where the infinite gasket
            // attaches further triangles
            if p.u + p.v >= s || p == LatticePoint::ORIGIN || p.u == 0 && p.v == s {
                continue;
            }
            let ns: HashSet<_> = neighbors(p).unwrap().into_iter().collect();
            let expect: HashSet<_> = edges
                .iter()
                .filter_map(|&(x, y)| {
                    if x == p {
                        Some(y)
                    } else if y == p {
                        Some(x)
                    } else {
                        None
                    }
                })
                .collect();
            assert_eq!(ns, expect, "neighbors of {p}");
        }
    }

    #[test]
    fn origin_neighbors() {
        let ns: HashSet<_> = neighbors(LatticePoint::ORIGIN).unwrap().into_iter().collect();
        let expect: HashSet<_> = [(1, 0), (0, 1), (-1, 0), (-1, 1)]
            .into_iter()
            .map(|(u, v)| LatticePoint::new(u, v))
            .collect();
        assert_eq!(ns, expect);
        let a0 = neighbors(LatticePoint::a(0)).unwrap();
        assert_eq!(a0.len(), 4);
        assert!(a0.contains(&LatticePoint::ORIGIN) && a0.contains(&LatticePoint::b(0)));
        assert!(matches!(neighbors(LatticePoint::new(3, 2)), Err(Error::NotAVertex(_))));
    }

    #[test]
    fn degree_four_and_symmetric() {
        for u in -40..40 {
            for v in 0..40 {
                let p = LatticePoint::new(u, v);
                if !is_vertex(p) {
                    continue;
                }
                let ns = neighbors(p).unwrap();
                assert_eq!(ns.len(), 4, "degree at {p}");
                for q in ns {
                    assert!(is_vertex(q));
                    assert!(neighbors(q).unwrap().contains(&p));
                    assert!(adjacent(p, q, 0));
                }
            }
        }
    }

    #[test]
    fn levels() {
        assert_eq!(vertex_level(LatticePoint::b(0)).unwrap(), 0);
        assert_eq!(vertex_level(LatticePoint::b(1)).unwrap(), 1);
        assert_eq!(vertex_level(LatticePoint::ORIGIN).unwrap(), LEVEL_INFINITE);
        for u in -30..30 {
            for v in 0..30 {
                let p = LatticePoint::new(u, v);
                if !is_vertex(p) || p == LatticePoint::ORIGIN {
                    continue;
                }
                let l = vertex_level(p).unwrap();
                assert_eq!(vertex_level(p.scaled(2)).unwrap(), l + 1);
                // definition: x in G_N iff x = 2^N y with y a vertex
                for n in 0..=l {
                    assert!(is_vertex(LatticePoint::new(p.u >> n, p.v >> n)));
                }
                let k = l + 1;
                assert!(!p.divisible(k) || !is_vertex(LatticePoint::new(p.u >> k, p.v >> k)));
            }
        }
    }

    #[test]
    fn containing_triangles() {
        let o = LatticePoint::ORIGIN;
        let t = containing_triangle(o, LatticePoint::a(0), 0).unwrap();
        assert_eq!(t.corner, o);
        assert_eq!(t.side(), Side::Right);
        let t = containing_triangle(LatticePoint::a(1), LatticePoint::b(1), 1).unwrap();
        assert_eq!((t.corner, t.scale), (o, 1));
        let t = containing_triangle(o, LatticePoint::new(-1, 0), 0).unwrap();
        assert_eq!(t.side(), Side::Left);
        assert_eq!(t.corner, LatticePoint::new(-1, 0));
        assert!(t.contains(LatticePoint::new(-1, 1)));
        assert_eq!(containing_triangle(o, o, 0), Err(Error::AmbiguousTriangle(0)));
        assert_eq!(
            containing_triangle(o, LatticePoint::new(0, 2), 0),
            Err(Error::NoCommonTriangle(0))
        );
    }

    #[test]
    fn two_cells_at_every_vertex() {
        for u in -20..20 {
            for v in 0..20 {
                let p = LatticePoint::new(u, v);
                if is_vertex(p) {
                    assert_eq!(cells_at(p, 0).len(), 2, "{p}");
                }
            }
        }
        assert_eq!(cell_vertices(1).len(), 6);
        assert_eq!(cell_vertices(2).len(), 15);
    }
}
