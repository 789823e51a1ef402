//! Exact crossing measures at level 1 and the data derived from them: shape
//! catalogs, first-cell groupings, the backward type chain and the consistency
//! identity of the infinite-walk construction.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{fmt_q, q, ser_q, ser_q_mat, ser_q_vec, solve_dense, to_f64, Q};
use crate::gasket::{neighbors_unchecked, LatticePoint, TriangleAddress};
use crate::paths::{skeleton_of, CrossingType, Path, SkeletonCell};
use crate::srw::{ConditionedWalkSpec, SrwChain, SrwConfig};
use crate::symmetry::FrameMap;

/// A loopless crossing of `O a_1 b_1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Shape {
    pub vertices: Vec<LatticePoint>,
    /// Type of the shape itself, read off its coarse path at level 1.
    pub crossing: CrossingType,
    pub cells: Vec<SkeletonCell>,
    pub s1: u32,
    pub s2: u32,
    /// Type of the sub-crossing of the unit triangle at `O`.
    pub first_cell: CrossingType,
}

/// In-place type of a loopless unit-cell traversal with the given entry.
pub fn cell_crossing_type(vertices: &[LatticePoint]) -> Result<CrossingType> {
    let pts: Vec<LatticePoint> = vertices.to_vec();
    let (n, t) = crate::paths::crossing_type(&Path::new(pts)?)?;
    if n != 0 {
        return Err(Error::NotACrossing("not a unit crossing".into()));
    }
    Ok(t)
}

impl Shape {
    fn from_vertices(vertices: Vec<LatticePoint>) -> Result<Shape> {
        let path = Path::new(vertices.clone())?;
        let (level, crossing) = crate::paths::crossing_type(&path)?;
        if level != 1 {
            return Err(Error::NotACrossing("shape must cross a level-1 triangle".into()));
        }
        let sk = skeleton_of(&vertices, 0)?;
        let (s1, s2) = sk.type_counts();
        let first = &sk.cells[0];
        let first_cell = cell_crossing_type(&vertices[..=first.exit_time])?;
        Ok(Shape {
            vertices,
            crossing,
            cells: sk.cells,
            s1: s1 as u32,
            s2: s2 as u32,
            first_cell,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() == 1
    }

    /// Ordering key: the skeleton cell sequence.
    fn key(&self) -> Vec<(i64, i64, usize)> {
        self.cells.iter().map(|c| (c.triangle.corner.u, c.triangle.corner.v, c.hits)).collect()
    }
}

/// All loopless paths from `O` to `target` inside `O a_1 b_1`, in canonical
/// order (lexicographic over skeleton cell sequences).
pub fn enumerate_shapes(target: LatticePoint) -> Result<Vec<Shape>> {
    let tri = TriangleAddress::new(LatticePoint::ORIGIN, 1)?;
    let mut out = Vec::new();
    let mut stack = vec![LatticePoint::ORIGIN];
    fn dfs(tri: &TriangleAddress, target: LatticePoint, stack: &mut Vec<LatticePoint>, out: &mut Vec<Vec<LatticePoint>>) {
        let x = *stack.last().unwrap();
        if x == target {
            out.push(stack.clone());
            return;
        }
        for y in neighbors_unchecked(x) {
            if tri.contains(y) && !stack.contains(&y) {
                stack.push(y);
                dfs(tri, target, stack, out);
                stack.pop();
            }
        }
    }
    let mut raw = Vec::new();
    dfs(&tri, target, &mut stack, &mut raw);
    for v in raw {
        out.push(Shape::from_vertices(v)?);
    }
    out.sort_by_key(|s| s.key());
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub shape: Shape,
    #[serde(serialize_with = "ser_q")]
    pub prob: Q,
}

/// The law `\hat P^{(i)}_1` over loopless crossings for one type.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShapeCatalog {
    pub kind: CrossingType,
    pub entries: Vec<CatalogEntry>,
}

impl ShapeCatalog {
    pub fn probabilities(&self) -> Vec<Q> {
        self.entries.iter().map(|e| e.prob.clone()).collect()
    }

    pub fn total(&self) -> Q {
        self.entries.iter().map(|e| &e.prob).sum()
    }

    pub fn prob_of(&self, vertices: &[LatticePoint]) -> Q {
        self.entries
            .iter()
            .find(|e| e.shape.vertices == vertices)
            .map(|e| e.prob.clone())
            .unwrap_or_else(Q::zero)
    }
}

/// Equation of a prefix state after eliminating its descendants:
/// `f = Σ_d coef[d] f(ancestor at depth d) + b`.
struct Expr {
    coef: Vec<Q>,
    b: BTreeMap<usize, Q>,
}

fn add_scaled(dst: &mut BTreeMap<usize, Q>, src: &BTreeMap<usize, Q>, p: &Q) {
    for (k, v) in src {
        *dst.entry(*k).or_insert_with(Q::zero) += p * v;
    }
}

type State = (usize, Vec<LatticePoint>);

/// Absorption law of the loop-erased conditioned walk at level 1.
///
/// The state is the stage together with the current loop-erased prefix. A
/// step either extends the prefix or cuts it back to an ancestor, so the
/// states form a prefix tree with moves to children and ancestors only.
/// Eliminating the deepest states first writes each state in terms of its
/// ancestors; a top-down pass then yields every value exactly.
pub fn exact_shape_catalog(kind: CrossingType) -> Result<ShapeCatalog> {
    let chain = SrwChain::new(ConditionedWalkSpec::new(1, kind), &SrwConfig::default())?;
    let stages = chain.stages();
    let last_stage = stages.len() - 1;
    let shapes = enumerate_shapes(kind.target(1))?;
    let shape_id: HashMap<Vec<LatticePoint>, usize> =
        shapes.iter().enumerate().map(|(i, s)| (s.vertices.clone(), i)).collect();

    enum Move {
        Done(usize),
        Next(State),
        Back(usize),
        Child(State),
    }
    let mut moves: HashMap<State, Vec<(Move, Q)>> = HashMap::new();
    let mut queue = vec![(0usize, vec![LatticePoint::ORIGIN])];
    while let Some(st) = queue.pop() {
        if moves.contains_key(&st) {
            continue;
        }
        let (s, prefix) = &st;
        let field = &stages[*s];
        let x = *prefix.last().unwrap();
        let mut out = Vec::new();
        for (y, p) in field.transitions(x)? {
            let mv = if field.is_absorbing(y) {
                let mut v = prefix.clone();
                v.push(y);
                if *s == last_stage {
                    let id = *shape_id
                        .get(&v)
                        .ok_or_else(|| Error::Integrity(format!("unexpected loop-erased shape {v:?}")))?;
                    Move::Done(id)
                } else {
                    queue.push((s + 1, v.clone()));
                    Move::Next((s + 1, v))
                }
            } else if let Some(i) = prefix.iter().position(|&z| z == y) {
                queue.push((*s, prefix[..=i].to_vec()));
                Move::Back(i)
            } else {
                let mut v = prefix.clone();
                v.push(y);
                queue.push((*s, v.clone()));
                Move::Child((*s, v))
            };
            out.push((mv, p));
        }
        moves.insert(st, out);
    }

    let mut values: HashMap<State, BTreeMap<usize, Q>> = HashMap::new();
    for s in (0..stages.len()).rev() {
        let mut states: Vec<&State> = moves.keys().filter(|k| k.0 == s).collect();
        states.sort_by_key(|k| std::cmp::Reverse(k.1.len()));
        let mut exprs: HashMap<&State, Expr> = HashMap::new();
        for st in &states {
            let depth = st.1.len() - 1;
            let mut coef = vec![Q::zero(); depth + 1];
            let mut b = BTreeMap::new();
            for (mv, p) in &moves[*st] {
                match mv {
                    Move::Done(id) => *b.entry(*id).or_insert_with(Q::zero) += p,
                    Move::Next(nx) => add_scaled(&mut b, &values[nx], p),
                    Move::Back(i) => coef[*i] += p,
                    Move::Child(c) => {
                        let e = &exprs[c];
                        for (k, v) in e.coef.iter().enumerate() {
                            coef[k] += p * v;
                        }
                        add_scaled(&mut b, &e.b, p);
                    }
                }
            }
            let own = coef.pop().unwrap();
            let factor = (Q::one() - own).recip();
            for c in coef.iter_mut() {
                *c *= &factor;
            }
            for v in b.values_mut() {
                *v *= &factor;
            }
            exprs.insert(*st, Expr { coef, b });
        }
        for st in states.iter().rev() {
            let e = &exprs[*st];
            let mut v = e.b.clone();
            for (d, c) in e.coef.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let anc = (s, st.1[..=d].to_vec());
                let av = values
                    .get(&anc)
                    .ok_or_else(|| Error::Integrity("cut back to an unvisited prefix".into()))?
                    .clone();
                add_scaled(&mut v, &av, c);
            }
            values.insert((*st).clone(), v);
        }
    }
    let root = &values[&(0, vec![LatticePoint::ORIGIN])];
    let entries = shapes
        .into_iter()
        .enumerate()
        .map(|(i, shape)| CatalogEntry {
            shape,
            prob: root.get(&i).cloned().unwrap_or_else(Q::zero),
        })
        .collect();
    let cat = ShapeCatalog { kind, entries };
    if cat.total() != Q::one() {
        return Err(Error::Integrity(format!("catalog {kind} sums to {}", fmt_q(&cat.total()))));
    }
    Ok(cat)
}

/// Catalogs of all four types, computed once.
#[derive(Clone, Debug, Serialize)]
pub struct Catalogs {
    pub by_type: [ShapeCatalog; 4],
}

impl Catalogs {
    pub fn compute() -> Result<Catalogs> {
        let by_type = [
            exact_shape_catalog(CrossingType::A)?,
            exact_shape_catalog(CrossingType::B)?,
            exact_shape_catalog(CrossingType::BA)?,
            exact_shape_catalog(CrossingType::AB)?,
        ];
        Ok(Catalogs { by_type })
    }

    pub fn get(&self, t: CrossingType) -> &ShapeCatalog {
        &self.by_type[t.index()]
    }
}

static CATALOGS: OnceLock<Catalogs> = OnceLock::new();

/// Shared catalogs. The computation is deterministic, so the cache never
/// changes any result.
pub fn catalogs() -> &'static Catalogs {
    CATALOGS.get_or_init(|| Catalogs::compute().expect("level-1 catalogs"))
}

/// Catalog probability summed by first-cell type, in the order A, B, BA, AB.
pub fn first_cell_groupings(cat: &ShapeCatalog) -> [Q; 4] {
    let mut out: [Q; 4] = Default::default();
    for e in &cat.entries {
        out[e.shape.first_cell.index()] += &e.prob;
    }
    out
}

/// Backward type chain: `P[k][j] = \hat P^{(k)}_1[first cell = v_j]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypeChain {
    #[serde(serialize_with = "ser_q_mat")]
    pub p: Vec<Vec<Q>>,
    #[serde(serialize_with = "ser_q_vec")]
    pub alpha: Vec<Q>,
}

impl TypeChain {
    /// `start · P^n` in floating point.
    pub fn power_iterate(&self, start: [f64; 4], n: usize) -> [f64; 4] {
        let p: Vec<Vec<f64>> = self.p.iter().map(|r| r.iter().map(to_f64).collect()).collect();
        let mut v = start;
        for _ in 0..n {
            let mut w = [0.0; 4];
            for (k, vk) in v.iter().enumerate() {
                for j in 0..4 {
                    w[j] += vk * p[k][j];
                }
            }
            v = w;
        }
        v
    }

    pub fn alpha_f64(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|i| to_f64(&self.alpha[i]))
    }

    /// `α · P == α`, exactly.
    pub fn is_stationary(&self) -> bool {
        (0..4).all(|j| (0..4).map(|k| &self.alpha[k] * &self.p[k][j]).sum::<Q>() == self.alpha[j])
    }
}

/// The backward chain in the transposed matrix layout, for comparison.
pub fn reference_type_matrix() -> Vec<Vec<Q>> {
    [[19, 5, 5, 1], [5, 19, 1, 5], [7, 15, 5, 3], [15, 7, 3, 5]]
        .iter()
        .map(|r| r.iter().map(|&x| q(x, 30)).collect())
        .collect()
}

pub fn type_chain(cats: &Catalogs) -> Result<TypeChain> {
    let p: Vec<Vec<Q>> = CrossingType::ALL
        .iter()
        .map(|&t| first_cell_groupings(cats.get(t)).to_vec())
        .collect();
    for row in &p {
        if row.iter().sum::<Q>() != Q::one() {
            return Err(Error::Integrity("type chain row does not sum to 1".into()));
        }
    }
    // α (P - I) = 0 with Σ α = 1: replace the last equation by normalization
    let mut a = vec![vec![Q::zero(); 4]; 4];
    let mut b = vec![Q::zero(); 4];
    for j in 0..3 {
        for k in 0..4 {
            a[j][k] = p[k][j].clone() - if j == k { Q::one() } else { Q::zero() };
        }
    }
    for k in 0..4 {
        a[3][k] = Q::one();
    }
    b[3] = Q::one();
    let alpha = solve_dense(a, b)?;
    let chain = TypeChain { p, alpha };
    if !chain.is_stationary() {
        return Err(Error::Integrity("invariant vector is not stationary".into()));
    }
    Ok(chain)
}

/// Exact law `\hat P^{(t)}_n` on loopless crossings, for `n <= 2`, obtained by
/// drawing the level-1 shape and filling each cell independently.
pub fn crossing_law(n: u32, t: CrossingType, cats: &Catalogs) -> Result<BTreeMap<Vec<LatticePoint>, Q>> {
    let mut out = BTreeMap::new();
    match n {
        0 => {
            out.insert(t.corners(0), Q::one());
        }
        1 => {
            for e in &cats.get(t).entries {
                if !e.prob.is_zero() {
                    out.insert(e.shape.vertices.clone(), e.prob.clone());
                }
            }
        }
        2 => {
            let sub_a = crossing_law(1, CrossingType::A, cats)?;
            let sub_ba = crossing_law(1, CrossingType::BA, cats)?;
            for e in &cats.get(t).entries {
                if e.prob.is_zero() {
                    continue;
                }
                // partial products over the cells of the shape
                let mut partial: Vec<(Vec<LatticePoint>, Q)> = vec![(vec![LatticePoint::ORIGIN], e.prob.clone())];
                for cell in &e.shape.cells {
                    let v = &e.shape.vertices;
                    let tri = TriangleAddress::new(cell.triangle.corner.scaled(2), 1)?;
                    let entry = v[cell.entry_time].scaled(2);
                    let exit = v[cell.exit_time].scaled(2);
                    let back = FrameMap::to_canonical(tri, entry, exit)?.inverse();
                    let sub = if cell.hits == 1 { &sub_a } else { &sub_ba };
                    let mut next = Vec::with_capacity(partial.len() * sub.len());
                    for (pre, pp) in &partial {
                        for (w, pw) in sub {
                            let placed = back.apply_all(w)?;
                            let mut v2 = pre.clone();
                            v2.extend_from_slice(&placed[1..]);
                            next.push((v2, pp * pw));
                        }
                    }
                    partial = next;
                }
                for (v, p) in partial {
                    *out.entry(v).or_insert_with(Q::zero) += p;
                }
            }
        }
        _ => return Err(Error::Capacity("exact crossing laws only for N <= 2".into())),
    }
    Ok(out)
}

/// Outcome of the consistency check at one level.
#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub level: u32,
    #[serde(serialize_with = "ser_q_vec")]
    pub weights: Vec<Q>,
    /// Mixing rows: first-cell groupings of each level-1 catalog.
    #[serde(serialize_with = "ser_q_mat")]
    pub mixing_rows: Vec<Vec<Q>>,
    /// Whether each restricted law equals the mixture given by its row.
    pub rows_hold: bool,
    /// Number of restricted paths checked.
    pub paths_checked: usize,
    /// Restricted paths where the weighted identity fails.
    pub failures: Vec<Vec<LatticePoint>>,
}

impl ConsistencyReport {
    pub fn holds(&self) -> bool {
        self.rows_hold && self.failures.is_empty()
    }
}

/// Restricted law `\hat P^{(i)}_{n+1}[w|_Δ = ·]` with `Δ = O a_n b_n`.
fn restricted_law(n: u32, i: CrossingType, cats: &Catalogs) -> Result<BTreeMap<Vec<LatticePoint>, Q>> {
    let mut out: BTreeMap<Vec<LatticePoint>, Q> = BTreeMap::new();
    let restrict = |v: &[LatticePoint]| -> Result<Vec<LatticePoint>> {
        let sk = skeleton_of(v, n)?;
        Ok(v[..=sk.cells[0].exit_time].to_vec())
    };
    if n == 1 {
        for (v, p) in crossing_law(2, i, cats)? {
            *out.entry(restrict(&v)?).or_insert_with(Q::zero) += p;
        }
        return Ok(out);
    }
    if n != 2 {
        return Err(Error::Capacity("consistency check only for N <= 2".into()));
    }
    // marginalize over the cells after the first: place the first cell's law
    // and complete the path with a fixed loopless filling of the others
    let fill_a = crossing_law(2, CrossingType::A, cats)?.into_keys().next().unwrap();
    let fill_ba = crossing_law(2, CrossingType::BA, cats)?.into_keys().next().unwrap();
    let scale = 1i64 << n;
    for e in &cats.get(i).entries {
        if e.prob.is_zero() {
            continue;
        }
        let first = &e.shape.cells[0];
        let mut tail = Vec::new();
        for cell in &e.shape.cells[1..] {
            let v = &e.shape.vertices;
            let tri = TriangleAddress::new(cell.triangle.corner.scaled(scale), n)?;
            let back = FrameMap::to_canonical(tri, v[cell.entry_time].scaled(scale), v[cell.exit_time].scaled(scale))?.inverse();
            let fill = if cell.hits == 1 { &fill_a } else { &fill_ba };
            tail.extend_from_slice(&back.apply_all(fill)?[1..]);
        }
        let first_type = cell_crossing_type(&e.shape.vertices[..=first.exit_time])?;
        for (w, p) in crossing_law(n, first_type, cats)? {
            let mut full = w.clone();
            full.extend_from_slice(&tail);
            *out.entry(restrict(&full)?).or_insert_with(Q::zero) += &e.prob * p;
        }
    }
    Ok(out)
}

/// Checks the mixing rows and the weighted identity
/// `Σ_i w_i \hat P^{(i)}_{n+1}[w|_Δ = ŵ] = Σ_i w_i \hat P^{(i)}_n[ŵ]` for every
/// `ŵ ∈ Γ_n`, in exact arithmetic.
pub fn consistency_identity(n: u32, weights: &[Q; 4], cats: &Catalogs) -> Result<ConsistencyReport> {
    let chain = type_chain(cats)?;
    let lower: Vec<BTreeMap<Vec<LatticePoint>, Q>> = CrossingType::ALL
        .iter()
        .map(|&t| crossing_law(n, t, cats))
        .collect::<Result<_>>()?;
    let upper: Vec<BTreeMap<Vec<LatticePoint>, Q>> = CrossingType::ALL
        .iter()
        .map(|&t| restricted_law(n, t, cats))
        .collect::<Result<_>>()?;
    let mut keys: Vec<&Vec<LatticePoint>> = lower.iter().flat_map(|m| m.keys()).chain(upper.iter().flat_map(|m| m.keys())).collect();
    keys.sort();
    keys.dedup();
    let get = |m: &BTreeMap<Vec<LatticePoint>, Q>, k: &Vec<LatticePoint>| m.get(k).cloned().unwrap_or_else(Q::zero);

    // each restricted law must equal the mixture of level-n laws given by its row
    let mut rows_hold = true;
    for (i, up) in upper.iter().enumerate() {
        for k in &keys {
            let mix: Q = (0..4).map(|j| &chain.p[i][j] * get(&lower[j], k)).sum();
            if get(up, k) != mix {
                rows_hold = false;
            }
        }
    }
    let rows = chain.p.clone();
    let mut failures = Vec::new();
    for k in &keys {
        let lhs: Q = (0..4).map(|i| &weights[i] * get(&upper[i], k)).sum();
        let rhs: Q = (0..4).map(|i| &weights[i] * get(&lower[i], k)).sum();
        if lhs != rhs {
            failures.push((*k).clone());
        }
    }
    Ok(ConsistencyReport {
        level: n,
        weights: weights.to_vec(),
        mixing_rows: rows,
        rows_hold,
        paths_checked: keys.len(),
        failures,
    })
}

/// `E[ℓ]` under a catalog.
pub fn mean_length(cat: &ShapeCatalog) -> Q {
    cat.entries.iter().map(|e| &e.prob * Q::from_integer((e.shape.len() as i64).into())).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::Isometry;

    fn sorted(mut v: Vec<Q>) -> Vec<Q> {
        v.sort();
        v
    }

    #[test]
    fn ten_shapes_per_target() {
        let s = enumerate_shapes(LatticePoint::a(1)).unwrap();
        assert_eq!(s.len(), 10);
        for sh in &s {
            assert_eq!((sh.s1 + 2 * sh.s2) as usize, sh.len());
        }
        assert_eq!(s.iter().filter(|x| x.crossing == CrossingType::BA).count(), 3);
    }

    #[test]
    fn catalogs_a_and_ba() {
        let a = exact_shape_catalog(CrossingType::A).unwrap();
        let expect_a = sorted(vec![
            q(1, 2), q(2, 15), q(2, 15), q(2, 15), q(1, 30), q(1, 30), q(1, 30), Q::zero(), Q::zero(), Q::zero(),
        ]);
        assert_eq!(sorted(a.probabilities()), expect_a);
        for e in &a.entries {
            if e.shape.crossing == CrossingType::BA {
                assert!(e.prob.is_zero());
            }
        }
        let ba = exact_shape_catalog(CrossingType::BA).unwrap();
        let expect_ba = sorted(vec![
            q(1, 9), q(11, 90), q(11, 90), q(2, 45), q(2, 45), q(2, 45), q(8, 45), q(2, 9), q(1, 18), q(1, 18),
        ]);
        assert_eq!(sorted(ba.probabilities()), expect_ba);
        assert_eq!(first_cell_groupings(&a), [q(19, 30), q(1, 6), q(1, 6), q(1, 30)]);
        assert_eq!(first_cell_groupings(&ba), [q(7, 30), q(1, 2), q(1, 6), q(1, 10)]);
        assert_eq!(mean_length(&a), q(13, 5));
        assert_eq!(mean_length(&ba), q(52, 15));
    }

    #[test]
    fn mirrored_types_agree() {
        let c = catalogs();
        for (x, y) in [(CrossingType::A, CrossingType::B), (CrossingType::BA, CrossingType::AB)] {
            for e in &c.get(x).entries {
                let img: Vec<_> = e.shape.vertices.iter().map(|&p| Isometry::SWAP_AB.apply(p)).collect();
                assert_eq!(c.get(y).prob_of(&img), e.prob);
            }
        }
    }

    #[test]
    fn chain_and_alpha() {
        let ch = type_chain(catalogs()).unwrap();
        assert_eq!(ch.p, reference_type_matrix());
        assert_eq!(ch.alpha, vec![q(11, 28), q(11, 28), q(3, 28), q(3, 28)]);
    }

    #[test]
    fn level_two_law_is_normalized() {
        for t in CrossingType::ALL {
            let law = crossing_law(2, t, catalogs()).unwrap();
            assert_eq!(law.values().sum::<Q>(), Q::one());
            for (v, _) in law.iter().take(50) {
                let p = Path::new(v.clone()).unwrap();
                assert!(p.is_loopless());
                let (lvl, got) = crate::paths::crossing_type(&p).unwrap();
                assert_eq!(lvl, 2);
                assert_eq!(got.ends_at_b(), t.ends_at_b());
            }
        }
    }
}

#[cfg(test)]
mod consistency_tests {
    use super::*;

    #[test]
    fn level_one_identity() {
        let alpha = [q(11, 28), q(11, 28), q(3, 28), q(3, 28)];
        let r = consistency_identity(1, &alpha, catalogs()).unwrap();
        assert!(r.rows_hold);
        assert!(r.holds(), "{:?}", r.failures.len());
        let bad = [q(10, 28), q(12, 28), q(3, 28), q(3, 28)];
        assert!(!consistency_identity(1, &bad, catalogs()).unwrap().holds());
    }
}
