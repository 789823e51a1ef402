//! Conditioned simple random walks on a `2^N`-triangle, sampled exactly by a
//! Doob h-transform.
//!
//! A crossing is run in stages. Each stage starts at a corner `c` of `G_N`
//! and is conditioned so that the next new `G_N` vertex is the stage target.
//! Before that hit the walk is confined to the two `2^N`-triangles at `c`.
//! The hitting probability `h` is harmonic in each triangle, so it is fixed by
//! its corner values through the midpoint rule `(2A + 2B + C) / 5`, and
//! `h(c) = 1/4` because the four `G_N` neighbours of `c` are symmetric. Scaled
//! by `4 * 5^N`, every value of `h` is an integer, which makes the tilted
//! transition weights exact.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{q, solve_dense, Q};
use crate::gasket::{cells_at, in_level, neighbors_unchecked, LatticePoint};
use crate::paths::{CrossingType, Path};
use crate::rng::RandomStream;

/// A conditioned-walk ensemble: `W_N`, `W_N^b`, `V_N` or `V_N^b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConditionedWalkSpec {
    pub scale: u32,
    pub kind: CrossingType,
}

impl ConditionedWalkSpec {
    pub fn new(scale: u32, kind: CrossingType) -> Self {
        ConditionedWalkSpec { scale, kind }
    }

    /// `(start corner, target)` of each stage.
    pub fn stages(&self) -> Vec<(LatticePoint, LatticePoint)> {
        let c = self.kind.corners(self.scale);
        c.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Size limits for the direct SRW pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrwConfig {
    /// Largest `N` for which the h-transform field is built.
    pub max_scale: u32,
    /// Largest `N` for exact rational transition tables.
    pub exact_limit: u32,
}

impl Default for SrwConfig {
    fn default() -> Self {
        SrwConfig {
            max_scale: 8,
            exact_limit: 6,
        }
    }
}

/// The harmonic field of one stage on the two triangles at its start corner.
#[derive(Clone, Debug)]
pub struct StageField {
    pub scale: u32,
    pub center: LatticePoint,
    pub target: LatticePoint,
    points: Vec<LatticePoint>,
    index: HashMap<LatticePoint, u32>,
    /// `h * 4 * 5^N`.
    weight: Vec<u128>,
    nbrs: Vec<[u32; 4]>,
    absorbing: Vec<bool>,
}

impl StageField {
    pub fn new(center: LatticePoint, target: LatticePoint, scale: u32) -> Result<StageField> {
        let cells = cells_at(center, scale);
        if cells.len() != 2 || !cells.iter().any(|c| c.is_corner(target)) || center == target {
            return Err(Error::InvalidArgument(format!(
                "stage {center} -> {target} is not a step of F_{scale}"
            )));
        }
        let unit = 5u128.pow(scale);
        let mut f = StageField {
            scale,
            center,
            target,
            points: Vec::new(),
            index: HashMap::new(),
            weight: Vec::new(),
            nbrs: Vec::new(),
            absorbing: Vec::new(),
        };
        for cell in &cells {
            let corners = cell.corners();
            let vals = corners.map(|p| {
                if p == center {
                    unit
                } else if p == target {
                    4 * unit
                } else {
                    0
                }
            });
            f.fill(corners, vals, scale)?;
        }
        f.nbrs = vec![[0; 4]; f.points.len()];
        f.absorbing = f.points.iter().map(|&p| p != center && in_level(p, scale)).collect();
        for i in 0..f.points.len() {
            if f.absorbing[i] {
                continue;
            }
            let mut row = [0u32; 4];
            for (k, y) in neighbors_unchecked(f.points[i]).enumerate() {
                row[k] = *f
                    .index
                    .get(&y)
                    .ok_or_else(|| Error::Integrity(format!("neighbour {y} outside stage region")))?;
            }
            f.nbrs[i] = row;
        }
        Ok(f)
    }

    fn insert(&mut self, p: LatticePoint, w: u128) -> Result<()> {
        match self.index.get(&p) {
            Some(&i) if self.weight[i as usize] != w => Err(Error::Integrity(format!("harmonic values disagree at {p}"))),
            Some(_) => Ok(()),
            None => {
                self.index.insert(p, self.points.len() as u32);
                self.points.push(p);
                self.weight.push(w);
                Ok(())
            }
        }
    }

    fn fill(&mut self, c: [LatticePoint; 3], v: [u128; 3], scale: u32) -> Result<()> {
        if scale == 0 {
            for k in 0..3 {
                self.insert(c[k], v[k])?;
            }
            return Ok(());
        }
        let mid = |i: usize, j: usize| LatticePoint::new((c[i].u + c[j].u) / 2, (c[i].v + c[j].v) / 2);
        let val = |i: usize, j: usize, k: usize| (2 * v[i] + 2 * v[j] + v[k]) / 5;
        debug_assert!((2 * v[0] + 2 * v[1] + v[2]) % 5 == 0);
        let (m01, m02, m12) = (mid(0, 1), mid(0, 2), mid(1, 2));
        let (w01, w02, w12) = (val(0, 1, 2), val(0, 2, 1), val(1, 2, 0));
        self.fill([c[0], m01, m02], [v[0], w01, w02], scale - 1)?;
        self.fill([m01, c[1], m12], [w01, v[1], w12], scale - 1)?;
        self.fill([m02, m12, c[2]], [w02, w12, v[2]], scale - 1)
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `h(x)` as an exact rational, `None` outside the region.
    pub fn h(&self, x: LatticePoint) -> Option<Q> {
        let i = *self.index.get(&x)?;
        let den = BigInt::from(4u8) * BigInt::from(5u8).pow(self.scale);
        Some(Q::new(BigInt::from(self.weight[i as usize]), den))
    }

    pub fn is_absorbing(&self, x: LatticePoint) -> bool {
        self.index.get(&x).is_some_and(|&i| self.absorbing[i as usize])
    }

    /// Tilted transitions `p(x, y) = h(y) / (4 h(x))` out of a non-absorbing
    /// `x` with `h(x) > 0`.
    pub fn transitions(&self, x: LatticePoint) -> Result<Vec<(LatticePoint, Q)>> {
        let i = *self.index.get(&x).ok_or(Error::NotAVertex(x))? as usize;
        if self.absorbing[i] || self.weight[i] == 0 {
            return Err(Error::InvalidArgument(format!("{x} has no conditioned transitions")));
        }
        let den = BigInt::from(4u8) * BigInt::from(self.weight[i]);
        Ok(self.nbrs[i]
            .iter()
            .filter(|&&j| self.weight[j as usize] > 0)
            .map(|&j| (self.points[j as usize], Q::new(BigInt::from(self.weight[j as usize]), den.clone())))
            .collect())
    }

    /// Runs the stage from its start corner; appends the visited vertices
    /// after the start to `out`.
    pub fn walk(&self, rng: &mut RandomStream, out: &mut Vec<LatticePoint>) {
        let mut i = self.index[&self.center] as usize;
        loop {
            let total = 4 * self.weight[i];
            let mut r = rng.below_u128(total);
            let mut next = self.nbrs[i][3] as usize;
            for &j in &self.nbrs[i] {
                let w = self.weight[j as usize];
                if r < w {
                    next = j as usize;
                    break;
                }
                r -= w;
            }
            i = next;
            out.push(self.points[i]);
            if self.absorbing[i] {
                debug_assert_eq!(self.points[i], self.target);
                return;
            }
        }
    }
}

/// All vertices reachable from `O` before the first hit of `G_N \ {O}`,
/// including the absorbing corners.
pub fn reachable_region(scale: u32) -> Result<Vec<LatticePoint>> {
    let f = StageField::new(LatticePoint::ORIGIN, LatticePoint::a(scale), scale)?;
    let mut pts = f.points.clone();
    pts.sort_by_key(|p| (p.v, p.u));
    Ok(pts)
}

/// The staged h-transform sampler for one ensemble.
#[derive(Clone, Debug)]
pub struct SrwChain {
    pub spec: ConditionedWalkSpec,
    stages: Vec<StageField>,
}

impl SrwChain {
    pub fn new(spec: ConditionedWalkSpec, config: &SrwConfig) -> Result<SrwChain> {
        if spec.scale == 0 || spec.scale > config.max_scale {
            return Err(Error::Capacity(format!(
                "conditioned walk at N={} outside 1..={}",
                spec.scale, config.max_scale
            )));
        }
        let stages = spec
            .stages()
            .into_iter()
            .map(|(c, t)| StageField::new(c, t, spec.scale))
            .collect::<Result<Vec<_>>>()?;
        Ok(SrwChain { spec, stages })
    }

    pub fn stages(&self) -> &[StageField] {
        &self.stages
    }

    pub fn sample(&self, rng: &mut RandomStream) -> Path {
        let mut out = vec![LatticePoint::ORIGIN];
        for s in &self.stages {
            s.walk(rng, &mut out);
        }
        Path::from_trusted(out, 0)
    }

    /// Exact `E[ℓ]` from the linear system `E_x = 1 + Σ_y p(x,y) E_y` of each
    /// stage. Dense, so only for small `N`.
    pub fn expected_length(&self) -> Result<Q> {
        if self.spec.scale > 3 {
            return Err(Error::Capacity("exact expected length only for N <= 3".into()));
        }
        let mut total = Q::zero();
        for s in &self.stages {
            let live: Vec<usize> = (0..s.len()).filter(|&i| !s.absorbing[i] && s.weight[i] > 0).collect();
            let pos: HashMap<usize, usize> = live.iter().enumerate().map(|(k, &i)| (i, k)).collect();
            let n = live.len();
            let mut a = vec![vec![Q::zero(); n]; n];
            let b = vec![Q::one(); n];
            for (k, &i) in live.iter().enumerate() {
                a[k][k] = Q::one();
                for (y, p) in s.transitions(s.points[i])? {
                    if let Some(&j) = pos.get(&(s.index[&y] as usize)) {
                        a[k][j] -= p;
                    }
                }
            }
            let e = solve_dense(a, b)?;
            total += &e[pos[&(s.index[&s.center] as usize)]];
        }
        Ok(total)
    }
}

/// Draws one path of the ensemble. Builds the field on every call; reuse an
/// [`SrwChain`] for repeated sampling.
pub fn sample_conditioned(spec: ConditionedWalkSpec, rng: &mut RandomStream) -> Result<Path> {
    Ok(SrwChain::new(spec, &SrwConfig::default())?.sample(rng))
}

/// Rejection sampler used only as an oracle: runs plain SRW stages and
/// restarts whenever a stage ends at the wrong corner.
pub fn sample_rejection(spec: ConditionedWalkSpec, rng: &mut RandomStream) -> Result<Path> {
    if spec.scale == 0 || spec.scale > 3 {
        return Err(Error::Capacity("rejection oracle only for 1 <= N <= 3".into()));
    }
    let n = spec.scale;
    'attempt: loop {
        let mut out = vec![LatticePoint::ORIGIN];
        for (start, target) in spec.stages() {
            let mut x = start;
            loop {
                let k = rng.below(4) as usize;
                x = neighbors_unchecked(x).nth(k).unwrap();
                out.push(x);
                if x != start && in_level(x, n) {
                    if x != target {
                        continue 'attempt;
                    }
                    break;
                }
            }
        }
        return Ok(Path::from_trusted(out, 0));
    }
}

/// Exact rational transition probabilities of one stage.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageTable {
    pub center: LatticePoint,
    pub target: LatticePoint,
    #[serde(serialize_with = "ser_rows")]
    pub rows: BTreeMap<(i64, i64), Vec<(LatticePoint, Q)>>,
}

fn ser_rows<S: serde::Serializer>(
    rows: &BTreeMap<(i64, i64), Vec<(LatticePoint, Q)>>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for (&(u, v), row) in rows {
        let r: Vec<(LatticePoint, String)> = row.iter().map(|(p, x)| (*p, crate::exact::fmt_q(x))).collect();
        seq.serialize_element(&((u, v), r))?;
    }
    seq.end()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransitionTable {
    pub spec: ConditionedWalkSpec,
    pub stages: Vec<StageTable>,
}

impl TransitionTable {
    pub fn row_sums_are_one(&self) -> bool {
        self.stages
            .iter()
            .all(|s| s.rows.values().all(|r| r.iter().map(|(_, p)| p).sum::<Q>() == Q::one()))
    }
}

pub fn exact_conditional_chain(spec: ConditionedWalkSpec, config: &SrwConfig) -> Result<TransitionTable> {
    if spec.scale > config.exact_limit {
        return Err(Error::Capacity(format!(
            "exact tables limited to N <= {}",
            config.exact_limit
        )));
    }
    let chain = SrwChain::new(spec, &SrwConfig {
        max_scale: config.max_scale.max(config.exact_limit),
        ..*config
    })?;
    let mut stages = Vec::new();
    for s in &chain.stages {
        let mut rows = BTreeMap::new();
        for (i, &p) in s.points.iter().enumerate() {
            if !s.absorbing[i] && s.weight[i] > 0 {
                rows.insert((p.u, p.v), s.transitions(p)?);
            }
        }
        stages.push(StageTable {
            center: s.center,
            target: s.target,
            rows,
        });
    }
    Ok(TransitionTable { spec, stages })
}

/// Per-length comparison of the chain's length law with the path-counting
/// weight `(1/4)^{ℓ-k}`, `k` the number of stages.
#[derive(Clone, Debug, PartialEq)]
pub struct LengthLawCheck {
    /// `(ℓ, chain probability, counting weight)` for `ℓ <= max_len`.
    pub rows: Vec<(usize, Q, Q)>,
    /// `1 - P[ℓ <= max_len]` under the chain.
    pub truncated_mass: f64,
    /// Smallest length `L` with `P[ℓ > L] < 1e-6`.
    pub len_for_1e6: usize,
}

impl LengthLawCheck {
    pub fn agrees(&self) -> bool {
        self.rows.iter().all(|(_, a, b)| a == b)
    }
}

/// Counts admissible walks by length with no reference to `h` and compares
/// with the h-transform chain's length law.
pub fn length_law_check(chain: &SrwChain, max_len: usize) -> Result<LengthLawCheck> {
    let stages = chain.stages();
    let k = stages.len();
    // state: (stage, vertex index); counts of admissible walks and chain mass
    let mut count: Vec<HashMap<usize, BigInt>> = vec![HashMap::new(); k];
    let mut mass: Vec<HashMap<usize, Q>> = vec![HashMap::new(); k];
    count[0].insert(stages[0].index[&stages[0].center] as usize, BigInt::one());
    mass[0].insert(stages[0].index[&stages[0].center] as usize, Q::one());
    let mut rows = Vec::new();
    let quarter = q(1, 4);
    for len in 1..=max_len {
        let mut ncount: Vec<HashMap<usize, BigInt>> = vec![HashMap::new(); k];
        let mut nmass: Vec<HashMap<usize, Q>> = vec![HashMap::new(); k];
        let mut done_count = BigInt::zero();
        let mut done_mass = Q::zero();
        for st in 0..k {
            let s = &stages[st];
            for (&i, c) in &count[st] {
                let x = s.points[i];
                for y in neighbors_unchecked(x) {
                    let j = s.index[&y] as usize;
                    if !s.absorbing[j] {
                        *ncount[st].entry(j).or_default() += c;
                    } else if y == s.target {
                        if st + 1 == k {
                            done_count += c;
                        } else {
                            let nxt = &stages[st + 1];
                            *ncount[st + 1].entry(nxt.index[&y] as usize).or_default() += c;
                        }
                    }
                }
            }
            for (&i, m) in &mass[st] {
                for (y, p) in s.transitions(s.points[i])? {
                    let j = s.index[&y] as usize;
                    let add = m * &p;
                    if !s.absorbing[j] {
                        *nmass[st].entry(j).or_insert_with(Q::zero) += add;
                    } else if st + 1 == k {
                        done_mass += add;
                    } else {
                        let nxt = &stages[st + 1];
                        *nmass[st + 1].entry(nxt.index[&y] as usize).or_insert_with(Q::zero) += add;
                    }
                }
            }
        }
        let weight = Q::from_integer(done_count) * crate::exact::pow_q(&quarter, len as u32) * crate::exact::pow_q(&Q::from_integer(BigInt::from(4)), k as u32);
        rows.push((len, done_mass, weight));
        count = ncount;
        mass = nmass;
    }
    let covered: Q = rows.iter().map(|(_, m, _)| m.clone()).sum();
    let truncated_mass = 1.0 - crate::exact::to_f64(&covered);
    let len_for_1e6 = tail_length(chain, 1e-6);
    Ok(LengthLawCheck {
        rows,
        truncated_mass,
        len_for_1e6,
    })
}

/// Smallest `L` with `P[ℓ > L] < eps`, by a floating-point forward recursion.
fn tail_length(chain: &SrwChain, eps: f64) -> usize {
    let stages = chain.stages();
    let k = stages.len();
    let mut mass: Vec<Vec<f64>> = stages.iter().map(|s| vec![0.0; s.len()]).collect();
    mass[0][stages[0].index[&stages[0].center] as usize] = 1.0;
    let mut done = 0.0;
    let mut len = 0;
    while 1.0 - done >= eps && len < 1_000_000 {
        len += 1;
        let mut next: Vec<Vec<f64>> = stages.iter().map(|s| vec![0.0; s.len()]).collect();
        for st in 0..k {
            let s = &stages[st];
            for i in 0..s.len() {
                let m = mass[st][i];
                if m == 0.0 {
                    continue;
                }
                let tot = 4.0 * s.weight[i] as f64;
                for &j in &s.nbrs[i] {
                    let p = m * s.weight[j as usize] as f64 / tot;
                    if p == 0.0 {
                        continue;
                    }
                    if !s.absorbing[j as usize] {
                        next[st][j as usize] += p;
                    } else if st + 1 == k {
                        done += p;
                    } else {
                        let nxt = &stages[st + 1];
                        next[st + 1][nxt.index[&s.points[j as usize]] as usize] += p;
                    }
                }
            }
        }
        mass = next;
    }
    len
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::qi;
    use crate::symmetry::Isometry;

    #[test]
    fn region_sizes() {
        let r1 = reachable_region(1).unwrap();
        assert_eq!(r1.len(), 11);
        assert!(r1.contains(&LatticePoint::ORIGIN));
        assert_eq!(reachable_region(2).unwrap().len(), 29);
    }

    #[test]
    fn h_matches_linear_solve() {
        // independent oracle: Dirichlet problem for SRW on the stage region
        for n in 1..=2 {
            for (c, t) in [(LatticePoint::ORIGIN, LatticePoint::a(n)), (LatticePoint::b(n), LatticePoint::a(n))] {
                let f = StageField::new(c, t, n).unwrap();
                let pts = f.points().to_vec();
                let idx: HashMap<_, _> = pts.iter().enumerate().map(|(i, &p)| (p, i)).collect();
                let m = pts.len();
                let mut a = vec![vec![Q::zero(); m]; m];
                let mut b = vec![Q::zero(); m];
                for (i, &p) in pts.iter().enumerate() {
                    a[i][i] = Q::one();
                    if p != c && in_level(p, n) {
                        b[i] = if p == t { Q::one() } else { Q::zero() };
                    } else {
                        for y in neighbors_unchecked(p) {
                            a[i][idx[&y]] -= q(1, 4);
                        }
                    }
                }
                let h = solve_dense(a, b).unwrap();
                for (i, &p) in pts.iter().enumerate() {
                    assert_eq!(f.h(p).unwrap(), h[i], "N={n} at {p}");
                }
                assert_eq!(f.h(c).unwrap(), q(1, 4));
            }
        }
    }

    #[test]
    fn exact_tables() {
        let cfg = SrwConfig::default();
        let ta = exact_conditional_chain(ConditionedWalkSpec::new(1, CrossingType::A), &cfg).unwrap();
        let tb = exact_conditional_chain(ConditionedWalkSpec::new(1, CrossingType::B), &cfg).unwrap();
        assert!(ta.row_sums_are_one() && tb.row_sums_are_one());
        // a <-> b on the right triangle, mirrored a <-> b on the left one
        let left = Isometry::MIRROR_Y.compose(&Isometry::SWAP_AB).compose(&Isometry::MIRROR_Y);
        let swap = |p: LatticePoint| {
            if p.u >= 0 && p.v >= 0 {
                Isometry::SWAP_AB.apply(p)
            } else {
                left.apply(p)
            }
        };
        for (&(u, v), row) in &ta.stages[0].rows {
            let img = swap(LatticePoint::new(u, v));
            let mut mapped: Vec<_> = row.iter().map(|(p, x)| (swap(*p), x.clone())).collect();
            let mut other = tb.stages[0].rows[&(img.u, img.v)].clone();
            mapped.sort_by_key(|(p, _)| (p.u, p.v));
            other.sort_by_key(|(p, _)| (p.u, p.v));
            assert_eq!(mapped, other);
        }
        let big = ConditionedWalkSpec::new(7, CrossingType::A);
        assert!(matches!(exact_conditional_chain(big, &cfg), Err(Error::Capacity(_))));
    }

    #[test]
    fn samples_are_admissible() {
        let mut rng = RandomStream::new(1);
        for kind in CrossingType::ALL {
            let chain = SrwChain::new(ConditionedWalkSpec::new(2, kind), &SrwConfig::default()).unwrap();
            for _ in 0..200 {
                let w = chain.sample(&mut rng);
                let (n, t) = crate::paths::crossing_type(&w).unwrap();
                assert_eq!((n, t), (2, kind));
            }
        }
    }

    #[test]
    fn v_weights_by_counting() {
        let chain = SrwChain::new(ConditionedWalkSpec::new(1, CrossingType::BA), &SrwConfig::default()).unwrap();
        let chk = length_law_check(&chain, 14).unwrap();
        assert!(chk.agrees());
        assert_eq!(chk.rows[0].1, Q::zero());
        assert_eq!(chk.rows[3].1, qi(1) * chk.rows[3].2.clone());
        assert!(chk.truncated_mass > 0.0 && chk.truncated_mass < 1.0);
    }
}
