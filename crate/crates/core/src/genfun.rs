//! Generating functions of `(s1, s2)`, their renormalization recursion, the
//! mean matrix with its Perron root, and Laplace transforms of scaled exit
//! times.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::{fmt_q, q, qi, to_f64, Q};
use crate::measures::{Catalogs, ShapeCatalog};
use crate::paths::CrossingType;

/// A bivariate polynomial `Σ c_{ij} x^i y^j` with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct GenFun {
    pub coeffs: BTreeMap<(u32, u32), Q>,
}

impl Serialize for GenFun {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let terms: Vec<(u32, u32, String)> = self.coeffs.iter().map(|(&(i, j), c)| (i, j, fmt_q(c))).collect();
        terms.serialize(s)
    }
}

impl GenFun {
    pub fn from_terms(terms: &[(u32, u32, Q)]) -> GenFun {
        let mut g = GenFun::default();
        for (i, j, c) in terms {
            g.add_term(*i, *j, c.clone());
        }
        g
    }

    fn add_term(&mut self, i: u32, j: u32, c: Q) {
        if c.is_zero() {
            return;
        }
        let e = self.coeffs.entry((i, j)).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&(i, j));
        }
    }

    pub fn coeff(&self, i: u32, j: u32) -> Q {
        self.coeffs.get(&(i, j)).cloned().unwrap_or_else(Q::zero)
    }

    pub fn eval(&self, x: &Q, y: &Q) -> Q {
        self.coeffs
            .iter()
            .map(|(&(i, j), c)| c * crate::exact::pow_q(x, i) * crate::exact::pow_q(y, j))
            .sum()
    }

    pub fn eval_f64(&self, x: f64, y: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&(i, j), c)| to_f64(c) * x.powi(i as i32) * y.powi(j as i32))
            .sum()
    }

    /// `(∂_x, ∂_y)` at `(1, 1)`.
    pub fn gradient_at_one(&self) -> (Q, Q) {
        let mut dx = Q::zero();
        let mut dy = Q::zero();
        for (&(i, j), c) in &self.coeffs {
            dx += c * qi(i as i64);
            dy += c * qi(j as i64);
        }
        (dx, dy)
    }

    pub fn degree(&self) -> u32 {
        self.coeffs.keys().map(|&(i, j)| i + j).max().unwrap_or(0)
    }

    pub fn linear_combination(a: &Q, f: &GenFun, b: &Q, g: &GenFun) -> GenFun {
        let mut out = GenFun::default();
        for (&(i, j), c) in &f.coeffs {
            out.add_term(i, j, a * c);
        }
        for (&(i, j), c) in &g.coeffs {
            out.add_term(i, j, b * c);
        }
        out
    }
}

/// `(Φ^{(1)}, Φ^{(2)})` read off the type-A and type-BA catalogs.
pub fn phi_from_catalogs(a: &ShapeCatalog, ba: &ShapeCatalog) -> (GenFun, GenFun) {
    let read = |c: &ShapeCatalog| {
        let mut g = GenFun::default();
        for e in &c.entries {
            g.add_term(e.shape.s1, e.shape.s2, e.prob.clone());
        }
        g
    };
    (read(a), read(ba))
}

/// The closed forms `(1/30)(15x²+8xy+y²+2x²y+4x³)` and
/// `(1/45)(5x²+11xy+2y²+14x²y+8x³+5xy²)`.
pub fn reference_phi() -> (GenFun, GenFun) {
    let p1 = GenFun::from_terms(&[
        (2, 0, q(15, 30)),
        (1, 1, q(8, 30)),
        (0, 2, q(1, 30)),
        (2, 1, q(2, 30)),
        (3, 0, q(4, 30)),
    ]);
    let p2 = GenFun::from_terms(&[
        (2, 0, q(5, 45)),
        (1, 1, q(11, 45)),
        (0, 2, q(2, 45)),
        (2, 1, q(14, 45)),
        (3, 0, q(8, 45)),
        (1, 2, q(5, 45)),
    ]);
    (p1, p2)
}

/// `Φ^{(1)}, Φ^{(2)}` from the catalogs, checked against the closed forms.
pub fn phi_base(cats: &Catalogs) -> Result<(GenFun, GenFun)> {
    let got = phi_from_catalogs(cats.get(CrossingType::A), cats.get(CrossingType::BA));
    if got != reference_phi() {
        return Err(Error::Integrity("catalog generating functions differ from the closed forms".into()));
    }
    Ok(got)
}

/// Integer-coefficient polynomial over a common denominator, used for
/// composition.
#[derive(Clone, Debug)]
struct IntPoly {
    num: BTreeMap<(u32, u32), BigInt>,
    den: BigInt,
}

impl IntPoly {
    fn from_genfun(g: &GenFun) -> IntPoly {
        let mut den = BigInt::one();
        for c in g.coeffs.values() {
            den = num_integer::Integer::lcm(&den, c.denom());
        }
        let num = g
            .coeffs
            .iter()
            .map(|(&k, c)| (k, c.numer() * (&den / c.denom())))
            .collect();
        IntPoly { num, den }
    }

    fn mul(&self, other: &IntPoly) -> IntPoly {
        let mut num: BTreeMap<(u32, u32), BigInt> = BTreeMap::new();
        for (&(i, j), a) in &self.num {
            for (&(k, l), b) in &other.num {
                *num.entry((i + k, j + l)).or_insert_with(BigInt::zero) += a * b;
            }
        }
        IntPoly {
            num,
            den: &self.den * &other.den,
        }
    }
}

/// Largest `N` for exact iteration by default.
pub const DEFAULT_PHI_CAP: u32 = 4;

/// `Φ_N = Φ_{N-1} ∘ Φ`, computed as `Φ(Φ^{(1)}_{N-1}, Φ^{(2)}_{N-1})` so that
/// only the degree-3 outer polynomial is expanded.
pub fn phi_iterate(n: u32, cap: u32, base: &(GenFun, GenFun)) -> Result<(GenFun, GenFun)> {
    if n == 0 {
        return Err(Error::InvalidArgument("phi_iterate needs N >= 1".into()));
    }
    if n > cap {
        return Err(Error::Capacity(format!("exact composition capped at N = {cap}")));
    }
    let mut cur = base.clone();
    for _ in 1..n {
        cur = compose(base, &cur);
    }
    Ok(cur)
}

/// `outer(inner^{(1)}, inner^{(2)})` for both components of `outer`.
pub fn compose(outer: &(GenFun, GenFun), inner: &(GenFun, GenFun)) -> (GenFun, GenFun) {
    let x = IntPoly::from_genfun(&inner.0);
    let y = IntPoly::from_genfun(&inner.1);
    let max_deg = outer.0.degree().max(outer.1.degree());
    // powers x^i y^j up to total degree max_deg
    let mut xp = vec![IntPoly {
        num: BTreeMap::from([((0, 0), BigInt::one())]),
        den: BigInt::one(),
    }];
    for _ in 0..max_deg {
        xp.push(xp.last().unwrap().mul(&x));
    }
    let mut yp = vec![xp[0].clone()];
    for _ in 0..max_deg {
        yp.push(yp.last().unwrap().mul(&y));
    }
    let apply = |g: &GenFun| {
        let mut out = GenFun::default();
        for (&(i, j), c) in &g.coeffs {
            let term = xp[i as usize].mul(&yp[j as usize]);
            for (&(k, l), v) in &term.num {
                out.add_term(k, l, c * Q::new(v.clone(), term.den.clone()));
            }
        }
        out
    };
    (apply(&outer.0), apply(&outer.1))
}

/// A number `a + b √s` with rational `a, b` and squarefree `s > 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticSurd {
    pub a: Q,
    pub b: Q,
    pub s: BigInt,
}

impl QuadraticSurd {
    /// `(a + √d)` with `d` a nonnegative rational, reduced.
    pub fn sqrt_plus(a: Q, d: &Q) -> QuadraticSurd {
        // √(p/q) = √(p q) / q
        let pq = d.numer() * d.denom();
        let (outside, inside) = square_split(&pq);
        QuadraticSurd {
            a,
            b: Q::new(outside, d.denom().clone()),
            s: inside,
        }
    }

    /// Rational enclosure `lo <= value <= hi` with `hi - lo <= 10^{-digits}`
    /// times `|b|`.
    pub fn interval(&self, digits: u32) -> (Q, Q) {
        let scale = BigInt::from(10u8).pow(digits);
        let r = (&self.s * &scale * &scale).sqrt();
        let lo = Q::new(r.clone(), scale.clone());
        let hi = Q::new(r + 1, scale);
        if self.b.is_negative() {
            (&self.a + &self.b * hi, &self.a + &self.b * lo)
        } else {
            (&self.a + &self.b * lo, &self.a + &self.b * hi)
        }
    }

    pub fn to_f64(&self) -> f64 {
        let (lo, _) = self.interval(30);
        to_f64(&lo)
    }
}

impl std::fmt::Display for QuadraticSurd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} + {}*sqrt({})", fmt_q(&self.a), fmt_q(&self.b), self.s)
    }
}

/// `n = outside² · inside` with `inside` squarefree.
fn square_split(n: &BigInt) -> (BigInt, BigInt) {
    let mut m = n.clone();
    let mut outside = BigInt::one();
    let mut p = BigInt::from(2);
    while &p * &p <= m {
        let sq = &p * &p;
        while (&m % &sq).is_zero() {
            m /= &sq;
            outside *= &p;
        }
        p += 1;
    }
    (outside, m)
}

/// Mean matrix `M = ∂(Φ^{(1)}, Φ^{(2)}) / ∂(x, y)` at `(1, 1)` with its Perron root.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanMatrix {
    pub m: [[Q; 2]; 2],
    pub lambda: QuadraticSurd,
}

impl Serialize for MeanMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("MeanMatrix", 4)?;
        let m: Vec<Vec<String>> = self.m.iter().map(|r| r.iter().map(fmt_q).collect()).collect();
        st.serialize_field("m", &m)?;
        st.serialize_field("lambda_exact", &self.lambda.to_string())?;
        st.serialize_field("lambda", &self.lambda_f64())?;
        st.serialize_field("nu", &self.nu())?;
        st.end()
    }
}

impl MeanMatrix {
    pub fn from_phi(phi: &(GenFun, GenFun)) -> MeanMatrix {
        let (a, b) = phi.0.gradient_at_one();
        let (c, d) = phi.1.gradient_at_one();
        let tr = &a + &d;
        let det = &a * &d - &b * &c;
        // λ = tr/2 + √(tr²/4 - det)
        let disc = &tr * &tr / qi(4) - det;
        let lambda = QuadraticSurd::sqrt_plus(tr / qi(2), &disc);
        MeanMatrix {
            m: [[a, b], [c, d]],
            lambda,
        }
    }

    pub fn lambda_f64(&self) -> f64 {
        self.lambda.to_f64()
    }

    /// `ν = log 2 / log λ`.
    pub fn nu(&self) -> f64 {
        std::f64::consts::LN_2 / self.lambda_f64().ln()
    }

    pub fn m_f64(&self) -> [[f64; 2]; 2] {
        [[to_f64(&self.m[0][0]), to_f64(&self.m[0][1])], [to_f64(&self.m[1][0]), to_f64(&self.m[1][1])]]
    }

    /// `M^n` exactly.
    pub fn power(&self, n: u32) -> [[Q; 2]; 2] {
        let mut out = [[Q::one(), Q::zero()], [Q::zero(), Q::one()]];
        for _ in 0..n {
            let mut next: [[Q; 2]; 2] = Default::default();
            for i in 0..2 {
                for j in 0..2 {
                    next[i][j] = &out[i][0] * &self.m[0][j] + &out[i][1] * &self.m[1][j];
                }
            }
            out = next;
        }
        out
    }

    /// Exact `E[T_1^{ex,n}]` for the two families: `M^n (1, 2)^T`.
    pub fn mean_exit_times(&self, n: u32) -> [Q; 2] {
        let p = self.power(n);
        [&p[0][0] + qi(2) * &p[0][1], &p[1][0] + qi(2) * &p[1][1]]
    }
}

pub fn mean_matrix(cats: &Catalogs) -> Result<MeanMatrix> {
    Ok(MeanMatrix::from_phi(&phi_base(cats)?))
}

/// `1 - Φ(1 - u, 1 - v)` expanded exactly around `(1, 1)`.
pub fn complement(g: &GenFun) -> GenFun {
    let binom = |n: u32, k: u32| -> Q { qi((0..k).fold(1i64, |acc, r| acc * (n - r) as i64 / (r + 1) as i64)) };
    let mut out = GenFun::from_terms(&[(0, 0, qi(1))]);
    for (&(i, j), c) in &g.coeffs {
        for a in 0..=i {
            for b in 0..=j {
                let sign = if (a + b) % 2 == 0 { qi(-1) } else { qi(1) };
                out.add_term(a, b, sign * c * binom(i, a) * binom(j, b));
            }
        }
    }
    out
}

/// Floating evaluation of `Φ` in the deviations `u = 1 - x`, `v = 1 - y`.
/// Near `(1, 1)` this keeps full relative precision, where evaluating `Φ`
/// directly would lose about `log10 λ` digits per level. The polynomial has no
/// constant term, so `G(0) = 1` exactly.
#[derive(Clone, Debug)]
pub struct PhiEval {
    terms: [Vec<(i32, i32, f64)>; 2],
    den: [f64; 2],
    direct: [Vec<(i32, i32, f64)>; 2],
    direct_den: [f64; 2],
}

impl PhiEval {
    pub fn new(phi: &(GenFun, GenFun)) -> PhiEval {
        let one = |g: &GenFun| {
            let p = IntPoly::from_genfun(g);
            let terms = p
                .num
                .iter()
                .map(|(&(i, j), c)| (i as i32, j as i32, c.to_f64().unwrap()))
                .collect::<Vec<_>>();
            (terms, p.den.to_f64().unwrap())
        };
        let (t1, d1) = one(&complement(&phi.0));
        let (t2, d2) = one(&complement(&phi.1));
        let (p1, e1) = one(&phi.0);
        let (p2, e2) = one(&phi.1);
        PhiEval {
            terms: [t1, t2],
            den: [d1, d2],
            direct: [p1, p2],
            direct_den: [e1, e2],
        }
    }

    /// `Φ(x, y)` from its nonnegative coefficients.
    pub fn apply_direct(&self, x: f64, y: f64) -> (f64, f64) {
        let ev = |k: usize| self.direct[k].iter().map(|&(i, j, c)| c * x.powi(i) * y.powi(j)).sum::<f64>() / self.direct_den[k];
        (ev(0), ev(1))
    }

    /// `(u, v) -> (1 - Φ^{(1)}, 1 - Φ^{(2)})` at `(1 - u, 1 - v)`.
    pub fn apply_deviation(&self, u: f64, v: f64) -> (f64, f64) {
        let ev = |k: usize| self.terms[k].iter().map(|&(i, j, c)| c * u.powi(i) * v.powi(j)).sum::<f64>() / self.den[k];
        (ev(0), ev(1))
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let (u, v) = self.apply_deviation(1.0 - x, 1.0 - y);
        (1.0 - u, 1.0 - v)
    }
}

/// `1 - G^{(i)}_N(t)`, with `G^{(i)}_N(t) = Φ^{(i)}_N(e^{-t/λ^N}, e^{-2t/λ^N})`.
pub fn laplace_deviation(phi: &PhiEval, lambda: f64, n: u32, t: f64) -> (f64, f64) {
    let s = t / lambda.powi(n as i32);
    let (mut u, mut v) = (-(-s).exp_m1(), -(-2.0 * s).exp_m1());
    for _ in 0..n {
        (u, v) = phi.apply_deviation(u, v);
    }
    (u, v)
}

/// `G^{(i)}_N(t)` by applying `Φ` `N` times to the level-0 transform. Levels
/// run in deviation form while `G` is near 1 and in direct form (positive
/// coefficients) once it is not, so both ends keep relative precision.
pub fn laplace_g(phi: &PhiEval, lambda: f64, n: u32, t: f64) -> (f64, f64) {
    let s = t / lambda.powi(n as i32);
    let (mut u, mut v) = (-(-s).exp_m1(), -(-2.0 * s).exp_m1());
    let mut k = 0;
    while k < n && u.max(v) < 0.5 {
        (u, v) = phi.apply_deviation(u, v);
        k += 1;
    }
    let (mut x, mut y) = if k == 0 { ((-s).exp(), (-2.0 * s).exp()) } else { (1.0 - u, 1.0 - v) };
    for _ in k..n {
        (x, y) = phi.apply_direct(x, y);
    }
    (x, y)
}

/// `\tilde g_N = (11/14) G^{(1)}_N + (3/14) G^{(2)}_N`.
pub fn laplace_tilde(phi: &PhiEval, lambda: f64, n: u32, t: f64) -> f64 {
    let (g1, g2) = laplace_g(phi, lambda, n, t);
    (11.0 * g1 + 3.0 * g2) / 14.0
}

/// `sup_{t in grid} |G_{N+1}(t) - G_N(t)|` over both components.
pub fn laplace_sup_diff(phi: &PhiEval, lambda: f64, n: u32, grid: &[f64]) -> f64 {
    grid.iter()
        .map(|&t| {
            let (a1, a2) = laplace_g(phi, lambda, n, t);
            let (b1, b2) = laplace_g(phi, lambda, n + 1, t);
            (a1 - b1).abs().max((a2 - b2).abs())
        })
        .fold(0.0, f64::max)
}

/// The two-sided bound `c1^{2^M} <= G^{(i)}_{N+M}(t) <= c2^{2^M}` with
/// `λ^M <= t/t0 < λ^{M+1}` and `c1, c2` taken from levels `1..=n_max`.
#[derive(Clone, Debug, Serialize)]
pub struct DoublingBound {
    pub t0: f64,
    pub c1: f64,
    pub c2: f64,
    pub checked: usize,
    pub violations: usize,
}

pub fn doubling_bound(phi: &PhiEval, lambda: f64, t0: f64, n_max: u32, t_grid: &[f64]) -> DoublingBound {
    let q1 = 1.0 / 9.0;
    let mut c1 = f64::INFINITY;
    let mut c2: f64 = 0.0;
    for n in 1..=n_max {
        let (a1, a2) = laplace_g(phi, lambda, n, lambda * t0);
        c1 = c1.min(q1 * a1.min(a2));
        let (b1, b2) = laplace_g(phi, lambda, n, t0);
        c2 = c2.max(b1.max(b2));
    }
    let mut checked = 0;
    let mut violations = 0;
    for &t in t_grid {
        if t <= t0 {
            continue;
        }
        let m = ((t / t0).ln() / lambda.ln()).floor() as i32;
        let e = 2f64.powi(m);
        let (lo, hi) = (c1.powf(e), c2.powf(e));
        for n in 1..=n_max {
            let (g1, g2) = laplace_g(phi, lambda, n + m as u32, t);
            for g in [g1, g2] {
                checked += 1;
                if g < lo * (1.0 - 1e-12) || g > hi * (1.0 + 1e-12) {
                    violations += 1;
                }
            }
        }
    }
    DoublingBound {
        t0,
        c1,
        c2,
        checked,
        violations,
    }
}

/// Fitted constants of the bracket `exp(-C_hi t^ν) <= G_N(t) <= exp(-C_lo t^ν)`
/// over `t` in the grid and `log_λ t <= N <= log_λ t + extra`.
#[derive(Clone, Debug, Serialize)]
pub struct TauberianFit {
    pub c_lo: f64,
    pub c_hi: f64,
    pub points: usize,
}

impl TauberianFit {
    pub fn brackets(&self) -> bool {
        self.c_lo > 0.0 && self.c_hi.is_finite() && self.c_lo <= self.c_hi
    }
}

pub fn tauberian_fit(phi: &PhiEval, lambda: f64, nu: f64, t_grid: &[f64], extra: u32) -> TauberianFit {
    let mut c_lo = f64::INFINITY;
    let mut c_hi: f64 = 0.0;
    let mut points = 0;
    for &t in t_grid {
        let n0 = (t.ln() / lambda.ln()).ceil().max(1.0) as u32;
        for n in n0..=n0 + extra {
            let (g1, g2) = laplace_g(phi, lambda, n, t);
            for g in [g1, g2] {
                let c = -g.ln() / t.powf(nu);
                c_lo = c_lo.min(c);
                c_hi = c_hi.max(c);
                points += 1;
            }
        }
    }
    TauberianFit { c_lo, c_hi, points }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::catalogs;

    #[test]
    fn base_and_matrix() {
        let phi = phi_base(catalogs()).unwrap();
        assert_eq!(phi.0.eval(&qi(1), &qi(1)), qi(1));
        assert_eq!(phi.1.eval(&qi(1), &qi(1)), qi(1));
        assert_eq!(phi.0.coeff(3, 0), q(2, 15));
        let m = MeanMatrix::from_phi(&phi);
        assert_eq!(m.m, [[q(9, 5), q(2, 5)], [q(26, 15), q(13, 15)]]);
        assert_eq!(m.lambda.a, q(4, 3));
        assert_eq!(m.lambda.b, q(1, 15));
        assert_eq!(m.lambda.s, BigInt::from(205));
        assert!((m.lambda_f64() - (20.0 + 205f64.sqrt()) / 15.0).abs() < 1e-14);
        assert_eq!(m.mean_exit_times(1), [q(13, 5), q(52, 15)]);
    }

    #[test]
    fn chain_rule_at_level_two() {
        let phi = phi_base(catalogs()).unwrap();
        let p2 = phi_iterate(2, DEFAULT_PHI_CAP, &phi).unwrap();
        let m = MeanMatrix::from_phi(&phi);
        let m2 = m.power(2);
        assert_eq!(p2.0.gradient_at_one(), (m2[0][0].clone(), m2[0][1].clone()));
        assert_eq!(p2.1.gradient_at_one(), (m2[1][0].clone(), m2[1][1].clone()));
        assert_eq!(p2.0.eval(&qi(1), &qi(1)), qi(1));
        // Φ_2 = Φ ∘ Φ both ways round
        let other = compose(&p2, &phi);
        let p3 = phi_iterate(3, DEFAULT_PHI_CAP, &phi).unwrap();
        assert_eq!(other, p3);
        assert!(matches!(phi_iterate(DEFAULT_PHI_CAP + 1, DEFAULT_PHI_CAP, &phi), Err(Error::Capacity(_))));
    }

    #[test]
    fn doubling_and_tauberian_brackets() {
        let phi = phi_base(catalogs()).unwrap();
        let ev = PhiEval::new(&phi);
        let m = MeanMatrix::from_phi(&phi);
        let lam = m.lambda_f64();
        let grid: Vec<f64> = (1..=60).map(|k| 1.3f64.powi(k)).collect();
        let b = doubling_bound(&ev, lam, 1.0, 12, &grid);
        assert!(b.c1 > 0.0 && b.c2 < 1.0, "{b:?}");
        assert!(b.checked > 0);
        assert_eq!(b.violations, 0, "{b:?}");
        let f = tauberian_fit(&ev, lam, m.nu(), &grid[..20], 6);
        assert!(f.brackets(), "{f:?}");
        // the mixed transform stays between its components
        let (g1, g2) = laplace_g(&ev, lam, 20, 2.0);
        let gt = laplace_tilde(&ev, lam, 20, 2.0);
        assert!(gt >= g1.min(g2) && gt <= g1.max(g2));
    }

    #[test]
    fn surd_interval() {
        let s = QuadraticSurd::sqrt_plus(q(4, 3), &q(205, 225));
        let (lo, hi) = s.interval(20);
        assert!(lo < hi);
        assert!(to_f64(&(hi - lo)) < 1e-19);
    }

    #[test]
    fn complement_has_mean_matrix_as_linear_part() {
        let phi = phi_base(catalogs()).unwrap();
        let c = complement(&phi.0);
        assert_eq!(c.coeff(0, 0), qi(0));
        assert_eq!((c.coeff(1, 0), c.coeff(0, 1)), (q(9, 5), q(2, 5)));
        let x = q(1, 3);
        let y = q(2, 7);
        assert_eq!(qi(1) - phi.0.eval(&x, &y), c.eval(&(qi(1) - &x), &(qi(1) - &y)));
    }

    #[test]
    fn laplace_basics() {
        let phi = phi_base(catalogs()).unwrap();
        let ev = PhiEval::new(&phi);
        let lam = MeanMatrix::from_phi(&phi).lambda_f64();
        assert_eq!(laplace_g(&ev, lam, 10, 0.0), (1.0, 1.0));
        let mut prev = (1.0, 1.0);
        for k in 1..50 {
            let g = laplace_g(&ev, lam, 10, k as f64 * 0.1);
            assert!(g.0 < prev.0 && g.1 < prev.1 && g.0 > 0.0);
            prev = g;
        }
    }
}
