//! Paths on the pre-gasket: hitting times of `G_M`, coarse-graining, skeletons
//! with exit times, the step-based and triangle-based decompositions, and loop
//! detection.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gasket::{adjacent, containing_triangle, in_level, vertex_level, LatticePoint, TriangleAddress, LEVEL_INFINITE};
use crate::symmetry::FrameMap;

/// The four loopless unit crossings of the triangle `O a_0 b_0`, which also
/// label the four crossing ensembles of a `2^N`-triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CrossingType {
    /// `O -> a`
    A,
    /// `O -> b`
    B,
    /// `O -> b -> a`
    BA,
    /// `O -> a -> b`
    AB,
}

impl CrossingType {
    pub const ALL: [CrossingType; 4] = [CrossingType::A, CrossingType::B, CrossingType::BA, CrossingType::AB];

    /// Position in `ALL` (0-based index of the crossing measure).
    pub fn index(self) -> usize {
        match self {
            CrossingType::A => 0,
            CrossingType::B => 1,
            CrossingType::BA => 2,
            CrossingType::AB => 3,
        }
    }

    pub fn from_index(i: usize) -> CrossingType {
        CrossingType::ALL[i]
    }

    /// Image under the reflection exchanging `a` and `b`.
    pub fn mirrored(self) -> CrossingType {
        match self {
            CrossingType::A => CrossingType::B,
            CrossingType::B => CrossingType::A,
            CrossingType::BA => CrossingType::AB,
            CrossingType::AB => CrossingType::BA,
        }
    }

    /// Whether the crossing visits the third corner (`V`-type ensembles).
    pub fn visits_third(self) -> bool {
        matches!(self, CrossingType::BA | CrossingType::AB)
    }

    /// Whether the crossing ends at `b` rather than `a`.
    pub fn ends_at_b(self) -> bool {
        matches!(self, CrossingType::B | CrossingType::AB)
    }

    /// Corner sequence of the level-`n` coarse crossing.
    pub fn corners(self, level: u32) -> Vec<LatticePoint> {
        let (o, a, b) = (LatticePoint::ORIGIN, LatticePoint::a(level), LatticePoint::b(level));
        match self {
            CrossingType::A => vec![o, a],
            CrossingType::B => vec![o, b],
            CrossingType::BA => vec![o, b, a],
            CrossingType::AB => vec![o, a, b],
        }
    }

    pub fn target(self, level: u32) -> LatticePoint {
        *self.corners(level).last().unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            CrossingType::A => "A",
            CrossingType::B => "B",
            CrossingType::BA => "BA",
            CrossingType::AB => "AB",
        }
    }
}

impl fmt::Display for CrossingType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CrossingType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(CrossingType::A),
            "B" | "b" => Ok(CrossingType::B),
            "BA" | "ba" => Ok(CrossingType::BA),
            "AB" | "ab" => Ok(CrossingType::AB),
            other => Err(Error::InvalidArgument(format!("unknown crossing type {other}"))),
        }
    }
}

/// A nearest-neighbour path in the coarse graph `F_scale`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    scale: u32,
    vertices: Vec<LatticePoint>,
}

impl Path {
    /// A path on `F_0`; consecutive vertices must be adjacent.
    pub fn new(vertices: Vec<LatticePoint>) -> Result<Path> {
        Path::with_scale(vertices, 0)
    }

    pub fn with_scale(vertices: Vec<LatticePoint>, scale: u32) -> Result<Path> {
        if vertices.is_empty() {
            return Err(Error::EmptyPath);
        }
        if vertices.len() == 1 && !crate::gasket::is_vertex(vertices[0]) {
            return Err(Error::NotAVertex(vertices[0]));
        }
        for w in vertices.windows(2) {
            if !adjacent(w[0], w[1], scale) {
                return Err(Error::NotAdjacent {
                    from: w[0],
                    to: w[1],
                    scale,
                });
            }
        }
        Ok(Path { scale, vertices })
    }

    /// Skips the adjacency check; callers guarantee it.
    pub(crate) fn from_trusted(vertices: Vec<LatticePoint>, scale: u32) -> Path {
        debug_assert!(vertices.windows(2).all(|w| adjacent(w[0], w[1], scale)));
        Path { scale, vertices }
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn vertices(&self) -> &[LatticePoint] {
        &self.vertices
    }

    pub fn into_vertices(self) -> Vec<LatticePoint> {
        self.vertices
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() == 1
    }

    pub fn start(&self) -> LatticePoint {
        self.vertices[0]
    }

    pub fn end(&self) -> LatticePoint {
        *self.vertices.last().unwrap()
    }

    /// `2^{-k}` times a path on `F_k`, as a path on `F_{scale-k}`.
    pub fn rescaled_down(&self, k: u32) -> Result<Path> {
        if k > self.scale {
            return Err(Error::InvalidArgument("cannot rescale below scale 0".into()));
        }
        Ok(Path {
            scale: self.scale - k,
            vertices: self.vertices.iter().map(|p| LatticePoint::new(p.u >> k, p.v >> k)).collect(),
        })
    }

    pub fn rescaled_up(&self, k: u32) -> Path {
        Path {
            scale: self.scale + k,
            vertices: self.vertices.iter().map(|p| p.scaled(1 << k)).collect(),
        }
    }

    pub fn hitting_times(&self, m: u32) -> HittingTimes {
        hitting_times(&self.vertices, m)
    }

    pub fn coarse_grain(&self, m: u32) -> Path {
        coarse_grain(self, m)
    }

    pub fn is_loopless(&self) -> bool {
        is_self_avoiding(&self.vertices)
    }
}

/// Hitting times `T_0^M = 0 < T_1^M < ...` of `G_M`, where repeated hits of the
/// same `G_M` vertex in a row count once.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HittingTimes {
    pub scale: u32,
    pub times: Vec<usize>,
}

pub(crate) fn hitting_times(w: &[LatticePoint], m: u32) -> HittingTimes {
    let mut times = vec![0usize];
    let mut last = w[0];
    for (j, &p) in w.iter().enumerate().skip(1) {
        if p != last && in_level(p, m) {
            times.push(j);
            last = p;
        }
    }
    HittingTimes { scale: m, times }
}

/// The coarse-graining map `Q_M`: the path read at its `G_M` hitting times.
pub fn coarse_grain(w: &Path, m: u32) -> Path {
    let ht = w.hitting_times(m);
    let vertices: Vec<_> = ht.times.iter().map(|&t| w.vertices[t]).collect();
    Path {
        scale: m.max(w.scale),
        vertices,
    }
}

/// Type of a skeleton cell: how many `G_M` hits the path spends in it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CellType {
    /// Entered at one corner, left at another.
    One,
    /// Visits all three corners.
    Two,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SkeletonCell {
    pub triangle: TriangleAddress,
    /// Number of `G_M` hits between entry and exit (1 for Type 1, 2 for Type 2,
    /// larger only when the coarse path has loops).
    pub hits: usize,
    pub entry_time: usize,
    pub exit_time: usize,
}

impl SkeletonCell {
    pub fn cell_type(&self) -> Option<CellType> {
        match self.hits {
            1 => Some(CellType::One),
            2 => Some(CellType::Two),
            _ => None,
        }
    }
}

/// The `2^M`-skeleton `(Δ_1, ..., Δ_k)` with exit times.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skeleton {
    pub scale: u32,
    pub cells: Vec<SkeletonCell>,
}

impl Skeleton {
    pub fn exit_times(&self) -> Vec<usize> {
        std::iter::once(0).chain(self.cells.iter().map(|c| c.exit_time)).collect()
    }

    /// `(s1, s2)`: numbers of Type 1 and Type 2 cells.
    pub fn type_counts(&self) -> (usize, usize) {
        let s1 = self.cells.iter().filter(|c| c.hits == 1).count();
        let s2 = self.cells.iter().filter(|c| c.hits == 2).count();
        (s1, s2)
    }
}

/// Builds the skeleton of `w` at scale `m` by the exit-time recursion: a cell
/// is left at the last `G_M` hit before the next hit falls outside it.
pub fn skeleton(w: &Path, m: u32) -> Result<Skeleton> {
    skeleton_of(&w.vertices, m)
}

pub(crate) fn skeleton_of(w: &[LatticePoint], m: u32) -> Result<Skeleton> {
    let ht = hitting_times(w, m);
    let t = &ht.times;
    let last = t.len() - 1;
    if last == 0 {
        return Ok(Skeleton { scale: m, cells: vec![] });
    }
    let mut cells = Vec::new();
    // index into the hitting times of the current entry
    let mut entry = 0usize;
    let mut tri = containing_triangle(w[t[0]], w[t[1]], m)?;
    loop {
        let mut j = entry + 1;
        while j < last && tri.contains(w[t[j + 1]]) {
            j += 1;
        }
        cells.push(SkeletonCell {
            triangle: tri,
            hits: j - entry,
            entry_time: t[entry],
            exit_time: t[j],
        });
        if j == last {
            break;
        }
        tri = containing_triangle(w[t[j]], w[t[j + 1]], m)?;
        entry = j;
    }
    Ok(Skeleton { scale: m, cells })
}

/// A segment of a decomposition, stored in canonical position together with
/// the identification that places it back.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    /// Identification of the actual cell with `O a_M b_M`.
    pub frame: FrameMap,
    /// The segment after identification: starts at `O`, ends at `a_M`.
    pub path: Path,
}

impl Segment {
    pub fn restore(&self) -> Result<Vec<LatticePoint>> {
        self.frame.inverse().apply_all(self.path.vertices())
    }
}

/// Step-based decomposition `(w~; w_1, ..., w_l)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepDecomposition {
    /// `Q_M w` on `F_M`.
    pub coarse: Path,
    pub segments: Vec<Segment>,
}

fn segment_between(w: &[LatticePoint], from: usize, to: usize, m: u32, cell: TriangleAddress, exit: LatticePoint) -> Result<Segment> {
    let frame = FrameMap::to_canonical(cell, w[from], exit)?;
    let canon = frame.apply_all(&w[from..=to])?;
    Ok(Segment {
        frame,
        path: Path::with_scale(canon, 0).map_err(|e| Error::NotACrossing(format!("segment at scale {m}: {e}")))?,
    })
}

/// Splits `w` at its `G_M` hitting times. Segment `i` runs between the
/// consecutive hits `T_{i-1}^M` and `T_i^M`, mapped so its entry is `O` and
/// its exit is `a_M`.
pub fn decompose_steps(w: &Path, m: u32) -> Result<StepDecomposition> {
    let ht = w.hitting_times(m);
    let v = &w.vertices;
    let mut segments = Vec::with_capacity(ht.times.len().saturating_sub(1));
    for pair in ht.times.windows(2) {
        let (from, to) = (pair[0], pair[1]);
        let cell = containing_triangle(v[from], v[to], m)?;
        segments.push(segment_between(v, from, to, m, cell, v[to])?);
    }
    Ok(StepDecomposition {
        coarse: coarse_grain(w, m),
        segments,
    })
}

fn concat_segments<'a>(parts: impl Iterator<Item = &'a Segment>, start: LatticePoint) -> Result<Vec<LatticePoint>> {
    let mut out = vec![start];
    for seg in parts {
        let restored = seg.restore()?;
        if restored[0] != *out.last().unwrap() {
            return Err(Error::Integrity("segments do not join".into()));
        }
        out.extend_from_slice(&restored[1..]);
    }
    Ok(out)
}

pub fn recompose_steps(d: &StepDecomposition) -> Result<Path> {
    let v = concat_segments(d.segments.iter(), d.coarse.start())?;
    Path::new(v)
}

/// Triangle-based decomposition `(σ_M(w); w|Δ_1, ..., w|Δ_k)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangleDecomposition {
    pub skeleton: Skeleton,
    /// `w|Δ_i` identified with a path of `W_M` (Type 1) or `V_M` (Type 2).
    pub segments: Vec<Segment>,
}

/// Requires `Q_M w` to be loopless.
pub fn decompose_triangles(w: &Path, m: u32) -> Result<TriangleDecomposition> {
    if !coarse_grain(w, m).is_loopless() {
        return Err(Error::CoarseNotLoopless(m));
    }
    let sk = skeleton(w, m)?;
    let v = &w.vertices;
    let mut segments = Vec::with_capacity(sk.cells.len());
    for c in &sk.cells {
        segments.push(segment_between(v, c.entry_time, c.exit_time, m, c.triangle, v[c.exit_time])?);
    }
    Ok(TriangleDecomposition { skeleton: sk, segments })
}

pub fn recompose_triangles(d: &TriangleDecomposition, start: LatticePoint) -> Result<Path> {
    Path::new(concat_segments(d.segments.iter(), start)?)
}

/// A loop `w(i) = w(j) = c` with no visit to `c` strictly between.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Loop {
    pub vertex: LatticePoint,
    pub start: usize,
    pub end: usize,
    /// Squared Euclidean diameter.
    pub diameter_sq: i64,
    /// `M` such that this is a `2^M`-scale loop, if any.
    pub scale: Option<u32>,
}

impl Loop {
    pub fn diameter(&self) -> f64 {
        (self.diameter_sq as f64).sqrt()
    }
}

fn diameter_sq(pts: &[LatticePoint]) -> i64 {
    let mut best = 0;
    for (i, &p) in pts.iter().enumerate() {
        for &q in &pts[i + 1..] {
            best = best.max(p.dist_sq(q));
        }
    }
    best
}

/// Largest `M` with `4^M <= d2`.
fn log2_floor_of_sqrt(d2: i64) -> u32 {
    let mut m = 0u32;
    while m < 31 && (1i64 << (2 * (m + 1))) <= d2 {
        m += 1;
    }
    m
}

/// All loops of `w`, with exact squared diameters and scale classification.
///
/// A loop formed at `c` is `2^M`-scale when `M` is the level of `c` and the
/// diameter is at least `2^M`. Loops at the origin, whose level is unbounded,
/// are assigned the largest `M` with diameter at least `2^M`.
pub fn find_loops(w: &Path) -> Vec<Loop> {
    let v = &w.vertices;
    let mut last_seen: HashMap<LatticePoint, usize> = HashMap::new();
    let mut out = Vec::new();
    for (j, &p) in v.iter().enumerate() {
        if let Some(i) = last_seen.insert(p, j) {
            let d2 = diameter_sq(&v[i..=j]);
            let level = vertex_level(p).unwrap_or(0);
            let scale = if level == LEVEL_INFINITE {
                (d2 >= 1).then(|| log2_floor_of_sqrt(d2))
            } else if level < 31 && d2 >= 1i64 << (2 * level) {
                Some(level)
            } else {
                None
            };
            out.push(Loop {
                vertex: p,
                start: i,
                end: j,
                diameter_sq: d2,
                scale,
            });
        }
    }
    out
}

pub fn is_self_avoiding(v: &[LatticePoint]) -> bool {
    let mut seen = HashSet::with_capacity(v.len());
    v.iter().all(|p| seen.insert(*p))
}

/// Level `N` of a crossing from `O` to `a_N` or `b_N` (the level of its endpoint).
pub fn crossing_level(w: &Path) -> Result<u32> {
    if w.start() != LatticePoint::ORIGIN {
        return Err(Error::NotACrossing("path must start at O".into()));
    }
    let e = w.end();
    let lvl = vertex_level(e)?;
    if lvl == LEVEL_INFINITE || (e != LatticePoint::a(lvl) && e != LatticePoint::b(lvl)) {
        return Err(Error::NotACrossing(format!("endpoint {e} is not a_N or b_N")));
    }
    Ok(lvl)
}

/// Classifies a path as one of the four crossing ensembles `W_N, W_N^b, V_N, V_N^b`.
pub fn crossing_type(w: &Path) -> Result<(u32, CrossingType)> {
    let n = crossing_level(w)?;
    let coarse = coarse_grain(w, n);
    let c = coarse.vertices();
    for t in CrossingType::ALL {
        if c == t.corners(n).as_slice() {
            return Ok((n, t));
        }
    }
    Err(Error::NotACrossing(format!("coarse path {:?} at level {n}", c)))
}
