//! Exact samplers built from the level-1 catalogs: the recursive crossing
//! sampler, the infinite walk, and the two-type branching sampler for exit
//! times.
//!
//! Loopless crossings stay inside their triangle, so each cell is filled
//! through a plain affine isometry from the canonical triangle `O a b`.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{to_f64, Q};
use crate::gasket::{LatticePoint, TriangleAddress};
use crate::measures::{catalogs, Catalogs};
use crate::paths::{CrossingType, Path};
use crate::rng::RandomStream;
use crate::symmetry::{FrameMap, Isometry};

/// Exact discrete law with integer weights.
#[derive(Clone, Debug)]
struct Alias {
    cumulative: Vec<u64>,
    items: Vec<usize>,
}

impl Alias {
    fn new(weighted: Vec<(usize, Q)>) -> Alias {
        let mut den = BigInt::one();
        for (_, w) in &weighted {
            den = den.lcm(w.denom());
        }
        let mut cumulative = Vec::new();
        let mut items = Vec::new();
        let mut acc = 0u64;
        for (i, w) in weighted {
            if w.is_zero() {
                continue;
            }
            let n = (w.numer() * (&den / w.denom())).to_u64().expect("weight fits");
            acc += n;
            cumulative.push(acc);
            items.push(i);
        }
        Alias { cumulative, items }
    }

    fn draw(&self, rng: &mut RandomStream) -> usize {
        let r = rng.below(*self.cumulative.last().unwrap());
        let k = self.cumulative.partition_point(|&c| c <= r);
        self.items[k]
    }
}

#[derive(Clone, Debug)]
struct ShapeData {
    vertices: Vec<LatticePoint>,
    /// `(hits, canonical unit triangle -> cell)` per cell in order.
    cells: Vec<(usize, Isometry)>,
    first_exit: usize,
    crossing: CrossingType,
}

/// Precomputed sampling tables.
#[derive(Debug)]
pub struct SamplerTables {
    shapes: Vec<ShapeData>,
    by_type: [Alias; 4],
    /// `(j, σ)` given the current top type `i`.
    level_up: [Alias; 4],
    alpha: Alias,
    offspring: [Vec<((u64, u64), f64)>; 2],
}

impl SamplerTables {
    pub fn new(cats: &Catalogs) -> Result<SamplerTables> {
        let chain = crate::measures::type_chain(cats)?;
        let mut shapes = Vec::new();
        let mut per_type: [Vec<(usize, Q)>; 4] = Default::default();
        let mut up: [Vec<(usize, Q)>; 4] = Default::default();
        for t in CrossingType::ALL {
            for e in &cats.get(t).entries {
                if e.prob.is_zero() {
                    continue;
                }
                let s = &e.shape;
                let mut cells = Vec::with_capacity(s.cells.len());
                for c in &s.cells {
                    let fm = FrameMap::to_canonical(c.triangle, s.vertices[c.entry_time], s.vertices[c.exit_time])?;
                    cells.push((c.hits, fm.iso.inverse()));
                }
                let idx = shapes.len();
                shapes.push(ShapeData {
                    vertices: s.vertices.clone(),
                    cells,
                    first_exit: s.cells[0].exit_time,
                    crossing: t,
                });
                per_type[t.index()].push((idx, e.prob.clone()));
                up[s.first_cell.index()].push((idx, &chain.alpha[t.index()] * &e.prob));
            }
        }
        let by_type = per_type.map(Alias::new);
        let level_up = up.map(Alias::new);
        let alpha = Alias::new(chain.alpha.iter().cloned().enumerate().collect());
        let offspring = [CrossingType::A, CrossingType::BA].map(|t| {
            let mut m: std::collections::BTreeMap<(u64, u64), Q> = Default::default();
            for e in &cats.get(t).entries {
                *m.entry((e.shape.s1 as u64, e.shape.s2 as u64)).or_insert_with(Q::zero) += &e.prob;
            }
            m.into_iter().filter(|(_, p)| !p.is_zero()).map(|(k, p)| (k, to_f64(&p))).collect()
        });
        Ok(SamplerTables {
            shapes,
            by_type,
            level_up,
            alpha,
            offspring,
        })
    }

    fn draw_shape(&self, t: CrossingType, rng: &mut RandomStream) -> usize {
        self.by_type[t.index()].draw(rng)
    }
}

/// Tables built from the cached catalogs.
pub fn tables() -> &'static SamplerTables {
    static T: OnceLock<SamplerTables> = OnceLock::new();
    T.get_or_init(|| SamplerTables::new(catalogs()).expect("sampler tables"))
}

#[derive(Clone, Debug)]
struct Frame {
    shape: usize,
    level: u32,
    /// Next vertex (level 1) or next cell (level >= 2).
    pos: usize,
    iso: Isometry,
}

/// Depth-first expansion of crossings into level-0 steps.
#[derive(Clone, Debug)]
struct Expander {
    stack: Vec<Frame>,
}

impl Expander {
    fn next(&mut self, tables: &SamplerTables, rng: &mut RandomStream) -> Option<LatticePoint> {
        loop {
            let f = self.stack.last_mut()?;
            let sh = &tables.shapes[f.shape];
            if f.level == 1 {
                if f.pos < sh.vertices.len() {
                    let p = f.iso.apply(sh.vertices[f.pos]);
                    f.pos += 1;
                    return Some(p);
                }
                self.stack.pop();
                continue;
            }
            if f.pos >= sh.cells.len() {
                self.stack.pop();
                continue;
            }
            let (hits, cell) = sh.cells[f.pos];
            f.pos += 1;
            let c = 1i64 << (f.level - 1);
            let scaled = Isometry {
                linear: cell.linear,
                shift: cell.shift.scaled(c),
            };
            let iso = f.iso.compose(&scaled);
            let level = f.level - 1;
            let sub = if hits == 1 { CrossingType::A } else { CrossingType::BA };
            let shape = tables.draw_shape(sub, rng);
            self.stack.push(Frame {
                shape,
                level,
                pos: usize::from(level == 1),
                iso,
            });
        }
    }
}

/// Streams a crossing of `△O a_N b_N` drawn from `\hat P^{(t)}_N`, one vertex
/// at a time, starting with `O`.
pub struct CrossingStream<'a> {
    tables: &'a SamplerTables,
    rng: RandomStream,
    pending: Vec<LatticePoint>,
    expander: Expander,
}

impl<'a> CrossingStream<'a> {
    pub fn new(tables: &'a SamplerTables, n: u32, t: CrossingType, mut rng: RandomStream) -> Self {
        let mut pending = vec![LatticePoint::ORIGIN];
        let mut stack = Vec::new();
        if n == 0 {
            pending.extend_from_slice(&t.corners(0)[1..]);
        } else {
            let shape = tables.draw_shape(t, &mut rng);
            stack.push(Frame {
                shape,
                level: n,
                pos: usize::from(n == 1),
                iso: Isometry::IDENTITY,
            });
        }
        pending.reverse();
        CrossingStream {
            tables,
            rng,
            pending,
            expander: Expander { stack },
        }
    }
}

impl Iterator for CrossingStream<'_> {
    type Item = LatticePoint;

    fn next(&mut self) -> Option<LatticePoint> {
        if let Some(p) = self.pending.pop() {
            return Some(p);
        }
        self.expander.next(self.tables, &mut self.rng)
    }
}

/// A crossing of `△O a_N b_N` with law `\hat P^{(t)}_N`.
pub fn sample_crossing(n: u32, t: CrossingType, rng: &mut RandomStream) -> Path {
    let child = {
        let label = rng.below(u64::MAX);
        rng.split(label)
    };
    let stream = CrossingStream::new(tables(), n, t, child);
    Path::from_trusted(stream.collect(), 0)
}

/// `T_1^{ex,N} = ℓ(w)` under `\hat P^{(t)}_N`, from the two-type branching
/// process with offspring laws `Φ^{(1)}`, `Φ^{(2)}`.
pub fn sample_exit_time(n: u32, t: CrossingType, rng: &mut RandomStream) -> u64 {
    sample_exit_time_with(tables(), n, t, rng)
}

pub fn sample_exit_time_with(tables: &SamplerTables, n: u32, t: CrossingType, rng: &mut RandomStream) -> u64 {
    let mut pop: [u64; 2] = if t.visits_third() { [0, 1] } else { [1, 0] };
    for _ in 0..n {
        let mut next = [0u64; 2];
        for (kind, &count) in pop.iter().enumerate() {
            let mut left = count;
            let mut mass = 1.0;
            let law = &tables.offspring[kind];
            for (k, &((s1, s2), p)) in law.iter().enumerate() {
                if left == 0 {
                    break;
                }
                let m = if k + 1 == law.len() {
                    left
                } else {
                    let q = (p / mass).clamp(0.0, 1.0);
                    Binomial::new(left, q).expect("valid binomial").sample(rng)
                };
                next[0] += m * s1;
                next[1] += m * s2;
                left -= m;
                mass -= p;
            }
        }
        pop = next;
    }
    pop[0] + 2 * pop[1]
}

/// The walk `X` on the infinite gasket, grown level by level.
///
/// The state at level `N` is the top type `i` with the crossing `ω_N` of
/// `△O a_N b_N`, jointly distributed as `α_i \hat P^{(i)}_N`. A level-up draws
/// the type `j` and level-1 shape `σ` of the crossing of `△O a_{N+1} b_{N+1}`
/// with probability `α_j \hat P^{(j)}_1[σ] 1{first cell of σ = i} / α_i`, keeps
/// `ω_N` as the first cell and fills the remaining cells independently from
/// `\hat P_N` of their types. Summing over `j` the weights total
/// `(αP)_i / α_i = 1`. The joint law of `(j, ω_{N+1})` is then
/// `α_j \hat P^{(j)}_1[σ] Π_cells \hat P_N = α_j \hat P^{(j)}_{N+1}`, since the
/// first cell has law `\hat P^{(i)}_N` given `i`. Induction from
/// `i ~ α` at level 0 gives the projective family.
#[derive(Clone, Debug)]
pub struct InfiniteWalk<'a> {
    tables: &'a SamplerTables,
    rng: RandomStream,
    level: u32,
    top: CrossingType,
    types: Vec<CrossingType>,
    exit_steps: Vec<u64>,
    emitted: u64,
    pending: Vec<LatticePoint>,
    expander: Expander,
}

impl<'a> InfiniteWalk<'a> {
    pub fn new(tables: &'a SamplerTables, mut rng: RandomStream) -> Self {
        let top = CrossingType::from_index(tables.alpha.draw(&mut rng));
        let mut pending = top.corners(0);
        pending.reverse();
        InfiniteWalk {
            tables,
            rng,
            level: 0,
            top,
            types: vec![top],
            exit_steps: Vec::new(),
            emitted: 0,
            pending,
            expander: Expander { stack: Vec::new() },
        }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn top_type(&self) -> CrossingType {
        self.top
    }

    /// Top type at each completed or current level.
    pub fn type_history(&self) -> &[CrossingType] {
        &self.types
    }

    /// `T_1^{ex,M}` for every level `M` whose crossing is complete.
    pub fn exit_steps(&self) -> &[u64] {
        &self.exit_steps
    }

    fn level_up(&mut self) {
        // the crossing of the current level is complete
        self.exit_steps.push(self.emitted - 1);
        let idx = self.tables.level_up[self.top.index()].draw(&mut self.rng);
        let sh = &self.tables.shapes[idx];
        self.level += 1;
        self.top = sh.crossing;
        self.types.push(sh.crossing);
        let iso = Isometry::IDENTITY;
        if self.level == 1 {
            self.expander.stack.push(Frame {
                shape: idx,
                level: 1,
                pos: sh.first_exit + 1,
                iso,
            });
        } else {
            self.expander.stack.push(Frame {
                shape: idx,
                level: self.level,
                pos: 1,
                iso,
            });
        }
    }
}

impl Iterator for InfiniteWalk<'_> {
    type Item = LatticePoint;

    fn next(&mut self) -> Option<LatticePoint> {
        loop {
            if let Some(p) = self.pending.pop() {
                self.emitted += 1;
                return Some(p);
            }
            if let Some(p) = self.expander.next(self.tables, &mut self.rng) {
                self.emitted += 1;
                return Some(p);
            }
            self.level_up();
        }
    }
}

/// A materialized prefix `X(0), ..., X(n)` of the infinite walk.
#[derive(Clone, Debug)]
pub struct InfiniteWalkState {
    walk: InfiniteWalk<'static>,
    prefix: Vec<LatticePoint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WalkSummary {
    pub level: u32,
    pub top_type: CrossingType,
    pub steps: usize,
    pub type_history: Vec<CrossingType>,
    pub exit_steps: Vec<u64>,
}

impl InfiniteWalkState {
    pub fn new(rng: RandomStream) -> Self {
        InfiniteWalkState {
            walk: InfiniteWalk::new(tables(), rng),
            prefix: Vec::new(),
        }
    }

    /// Number of steps available.
    pub fn steps(&self) -> usize {
        self.prefix.len().saturating_sub(1)
    }

    pub fn prefix(&self) -> &[LatticePoint] {
        &self.prefix
    }

    pub fn level(&self) -> u32 {
        self.walk.level()
    }

    pub fn top_type(&self) -> CrossingType {
        self.walk.top_type()
    }

    pub fn type_history(&self) -> &[CrossingType] {
        self.walk.type_history()
    }

    pub fn exit_steps(&self) -> &[u64] {
        self.walk.exit_steps()
    }

    /// Completes levels until the current crossing has been fully expanded
    /// and covers at least `n` steps.
    pub fn extend_walk(&mut self, n: usize) {
        while self.steps() < n {
            self.prefix.push(self.walk.next().expect("infinite walk"));
        }
    }

    /// Extends until the crossing of level `m` is complete.
    pub fn extend_to_level(&mut self, m: u32) {
        while self.walk.exit_steps().len() <= m as usize {
            self.prefix.push(self.walk.next().expect("infinite walk"));
        }
    }

    pub fn position_at(&self, n: usize) -> Result<LatticePoint> {
        self.prefix.get(n).copied().ok_or(Error::OutOfRange {
            index: n,
            len: self.prefix.len(),
        })
    }

    pub fn summary(&self) -> WalkSummary {
        WalkSummary {
            level: self.level(),
            top_type: self.top_type(),
            steps: self.steps(),
            type_history: self.type_history().to_vec(),
            exit_steps: self.exit_steps().to_vec(),
        }
    }
}

/// Whether every vertex of `w` lies in `tri`.
pub fn confined_to(w: &Path, tri: TriangleAddress) -> bool {
    w.vertices().iter().all(|&p| tri.contains(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ellf::ellf;
    use crate::paths::{crossing_type, is_self_avoiding, skeleton};

    #[test]
    fn level_zero_and_one() {
        let mut rng = RandomStream::new(1);
        assert_eq!(sample_crossing(0, CrossingType::A, &mut rng).vertices(), CrossingType::A.corners(0));
        assert_eq!(sample_exit_time(0, CrossingType::A, &mut rng), 1);
        assert_eq!(sample_exit_time(0, CrossingType::BA, &mut rng), 2);
        let cat = catalogs().get(CrossingType::BA);
        for _ in 0..200 {
            let w = sample_crossing(1, CrossingType::BA, &mut rng);
            assert!(cat.prob_of(w.vertices()) > Q::zero());
        }
    }

    #[test]
    fn samples_are_loopless_crossings_of_their_type() {
        let mut rng = RandomStream::new(2);
        for n in 0..7 {
            for t in CrossingType::ALL {
                let w = sample_crossing(n, t, &mut rng);
                let w = Path::new(w.vertices().to_vec()).unwrap();
                assert!(is_self_avoiding(w.vertices()));
                // the ensemble fixes the endpoint; the third corner may be erased
                let (level, got) = crossing_type(&w).unwrap();
                assert_eq!(level, n);
                assert_eq!(got.ends_at_b(), t.ends_at_b(), "{n} {t}");
                let tri = TriangleAddress::new(LatticePoint::ORIGIN, n).unwrap();
                assert!(confined_to(&w, tri));
                assert_eq!(ellf(&w).unwrap(), w);
                let (s1, s2) = skeleton(&w, 0).unwrap().type_counts();
                assert_eq!(w.len(), s1 + 2 * s2);
            }
        }
    }

    #[test]
    fn level_up_is_consistent_in_type_frequencies() {
        let mut counts = [0usize; 4];
        let runs = 20_000;
        for r in 0..runs {
            let mut s = InfiniteWalkState::new(RandomStream::new(9).split(r));
            s.extend_to_level(3);
            counts[s.type_history()[3].index()] += 1;
            assert_eq!(s.position_at(0).unwrap(), LatticePoint::ORIGIN);
            let t = s.exit_steps()[3] as usize;
            let end = s.position_at(t).unwrap();
            let expect = s.type_history()[3].target(3);
            assert_eq!(end, expect);
        }
        let alpha = [11.0, 11.0, 3.0, 3.0].map(|x| x / 28.0);
        for k in 0..4 {
            let p = counts[k] as f64 / runs as f64;
            let se = (alpha[k] * (1.0 - alpha[k]) / runs as f64).sqrt();
            assert!((p - alpha[k]).abs() < 5.0 * se, "{k}: {p}");
        }
    }

    #[test]
    fn exit_time_mean_level_one() {
        let mut rng = RandomStream::new(3);
        let n = 40_000;
        let m: f64 = (0..n).map(|_| sample_exit_time(1, CrossingType::A, &mut rng) as f64).sum::<f64>() / n as f64;
        assert!((m - 2.6).abs() < 0.03, "{m}");
    }

    #[test]
    fn deterministic_given_seed() {
        let a = sample_crossing(5, CrossingType::AB, &mut RandomStream::new(11));
        let b = sample_crossing(5, CrossingType::AB, &mut RandomStream::new(11));
        assert_eq!(a, b);
        let mut s1 = InfiniteWalkState::new(RandomStream::new(4));
        let mut s2 = InfiniteWalkState::new(RandomStream::new(4));
        s1.extend_walk(5000);
        s2.extend_walk(3000);
        s2.extend_walk(5000);
        assert_eq!(s1.prefix()[..5001], s2.prefix()[..5001]);
        assert!(s1.position_at(s1.steps() + 1).is_err());
    }
}
