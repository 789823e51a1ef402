//! Monte Carlo estimators on the infinite walk and goodness-of-fit statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::exact::{to_f64, Q};
use crate::genfun::QuadraticSurd;
use crate::gasket::LatticePoint;
use crate::paths::is_self_avoiding;
use crate::rng::RandomStream;
use crate::sampler::InfiniteWalkState;

/// Compensated summation in a fixed order.
pub fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = neumaier_sum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = neumaier_sum(xs.iter().map(|x| (x - m) * (x - m))) / (n - 1.0);
    (m, (var / n).sqrt())
}

pub fn euclid(p: LatticePoint) -> f64 {
    (p.norm_sq() as f64).sqrt()
}

/// `K(n)` with `λ^K <= n < λ^{K+1}`, decided with rational enclosures of `λ`.
pub fn k_of_n(n: u64, lambda: &QuadraticSurd) -> u32 {
    let guess = ((n as f64).ln() / lambda.to_f64().ln()).floor().max(0.0) as u32;
    let nq = Q::from_integer(n.into());
    let mut digits = 30;
    loop {
        let (lo, hi) = lambda.interval(digits);
        let pow = |x: &Q, k: u32| crate::exact::pow_q(x, k);
        // retry with more digits when an enclosure straddles n
        for k in guess.saturating_sub(2)..=guess + 2 {
            let below = pow(&hi, k) <= nq;
            let above = nq < pow(&lo, k + 1);
            let undecided = (pow(&lo, k) <= nq) != below || (nq < pow(&hi, k + 1)) != above;
            if undecided {
                break;
            }
            if below && above {
                return k;
            }
        }
        digits += 30;
        assert!(digits < 600, "K(n) undecidable");
    }
}

/// `ψ(n) = n^ν (log log n)^{1-ν}`.
pub fn psi(n: f64, nu: f64) -> f64 {
    n.powf(nu) * n.ln().ln().powf(1.0 - nu)
}

/// `D_n = min{M >= 0 : |X(i)| <= 2^M for i <= n}`.
pub fn d_n(prefix: &[LatticePoint], n: usize) -> u32 {
    let m = prefix[..=n].iter().map(|p| p.norm_sq()).max().unwrap_or(0);
    let mut d = 0;
    while (1i64 << (2 * d)) < m {
        d += 1;
    }
    d
}

fn guarded_walk(seed: u64, replica: u64, n: usize) -> Result<InfiniteWalkState> {
    let mut s = InfiniteWalkState::new(RandomStream::new(seed).split(replica));
    s.extend_walk(n);
    if !is_self_avoiding(&s.prefix()[..=n]) {
        return Err(Error::Integrity(format!("replica {replica} contains a loop")));
    }
    Ok(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentRow {
    pub n: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub replicas: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentTable {
    pub s: f64,
    pub rows: Vec<MomentRow>,
    /// `|X(n)|^s` per replica, in row order.
    #[serde(skip)]
    pub samples: Vec<Vec<f64>>,
}

impl MomentTable {
    pub fn from_samples(s: f64, ns: &[u64], samples: Vec<Vec<f64>>) -> MomentTable {
        let rows = ns
            .iter()
            .enumerate()
            .map(|(j, &n)| {
                let col: Vec<f64> = samples.iter().map(|r| r[j]).collect();
                let (estimate, std_error) = mean_se(&col);
                MomentRow {
                    n,
                    estimate,
                    std_error,
                    replicas: col.len(),
                }
            })
            .collect();
        MomentTable { s, rows, samples }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,n,estimate,std_error,replicas\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", self.s, r.n, r.estimate, r.std_error, r.replicas);
        }
        out
    }
}

/// `E|X(n)|^s` for each `s` from the same trajectories.
pub fn estimate_moments_multi(ss: &[f64], ns: &[u64], replicas: usize, seed: u64, budget: u64) -> Result<Vec<MomentTable>> {
    if ss.iter().any(|&s| s <= 0.0) {
        return Err(Error::InvalidArgument("moment order must be positive".into()));
    }
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n list must be nonempty and strictly increasing".into()));
    }
    let n_max = *ns.last().unwrap();
    if n_max > budget {
        return Err(Error::Capacity(format!("n = {n_max} exceeds the walk budget {budget}")));
    }
    let per: Vec<Vec<f64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let s = guarded_walk(seed, r, n_max as usize)?;
            Ok(ns.iter().map(|&n| euclid(s.prefix()[n as usize])).collect())
        })
        .collect::<Result<_>>()?;
    Ok(ss
        .iter()
        .map(|&s| {
            let samples = per.iter().map(|r| r.iter().map(|d| d.powf(s)).collect()).collect();
            MomentTable::from_samples(s, ns, samples)
        })
        .collect())
}

pub fn estimate_moments(s: f64, ns: &[u64], replicas: usize, seed: u64, budget: u64) -> Result<MomentTable> {
    Ok(estimate_moments_multi(&[s], ns, replicas, seed, budget)?.remove(0))
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentFit {
    pub s: f64,
    pub nu: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub resamples: usize,
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Least-squares slope of `log E|X(n)|^s` against `log n`, divided by `s`, with
/// a percentile bootstrap over replicas.
pub fn fit_exponent(table: &MomentTable, resamples: usize, seed: u64) -> Result<ExponentFit> {
    if table.rows.len() < 4 {
        return Err(Error::InvalidArgument("need at least 4 rows".into()));
    }
    if table.rows.iter().any(|r| !(r.estimate > 0.0)) {
        return Err(Error::InvalidArgument("degenerate table".into()));
    }
    let xs: Vec<f64> = table.rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = table.rows.iter().map(|r| r.estimate.ln()).collect();
    let nu = slope(&xs, &ys) / table.s;
    let reps = table.samples.len();
    if reps < 2 || resamples == 0 {
        return Ok(ExponentFit {
            s: table.s,
            nu,
            ci_low: nu,
            ci_high: nu,
            resamples: 0,
        });
    }
    let mut rng = RandomStream::new(seed);
    let mut boots = Vec::with_capacity(resamples);
    let mut sums = vec![0.0; xs.len()];
    for _ in 0..resamples {
        sums.iter_mut().for_each(|x| *x = 0.0);
        for _ in 0..reps {
            let r = &table.samples[rng.below(reps as u64) as usize];
            for (acc, v) in sums.iter_mut().zip(r) {
                *acc += v;
            }
        }
        let ys: Vec<f64> = sums.iter().map(|x| (x / reps as f64).ln()).collect();
        boots.push(slope(&xs, &ys) / table.s);
    }
    boots.sort_by(f64::total_cmp);
    let q = |p: f64| boots[((p * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    Ok(ExponentFit {
        s: table.s,
        nu,
        ci_low: q(0.025),
        ci_high: q(0.975),
        resamples,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LilTrace {
    pub id: u64,
    /// `(n, running max of |X(k)|/ψ(k) over 16 <= k <= n)`.
    pub samples: Vec<(u64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LilReport {
    pub n_max: u64,
    pub nu: f64,
    pub traces: Vec<LilTrace>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std_dev: f64,
    pub quantiles: Vec<(f64, f64)>,
}

impl LilReport {
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.min >= lo && self.max <= hi
    }
}

pub fn lil_diagnostic(replicas: usize, n_max: u64, nu: f64, seed: u64) -> Result<LilReport> {
    if n_max < 16 {
        return Err(Error::InvalidArgument("n_max must be at least 16".into()));
    }
    let mut checkpoints: Vec<u64> = (4..).map(|k| 1u64 << k).take_while(|&n| n < n_max).collect();
    checkpoints.push(n_max);
    let traces: Vec<LilTrace> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let s = guarded_walk(seed, r, n_max as usize)?;
            let mut best: f64 = 0.0;
            let mut samples = Vec::with_capacity(checkpoints.len());
            let mut next = 0;
            for (n, &p) in s.prefix().iter().enumerate().take(n_max as usize + 1).skip(16) {
                best = best.max(euclid(p) / psi(n as f64, nu));
                if n as u64 == checkpoints[next] {
                    samples.push((n as u64, best));
                    next += 1;
                }
            }
            Ok(LilTrace { id: r, samples })
        })
        .collect::<Result<_>>()?;
    let mut finals: Vec<f64> = traces.iter().map(|t| t.samples.last().unwrap().1).collect();
    let (mean, se) = mean_se(&finals);
    finals.sort_by(f64::total_cmp);
    let q = |p: f64| finals[(p * (finals.len() - 1) as f64).round() as usize];
    Ok(LilReport {
        n_max,
        nu,
        min: finals[0],
        max: *finals.last().unwrap(),
        mean,
        std_dev: se * (finals.len() as f64).sqrt(),
        quantiles: [0.05, 0.25, 0.5, 0.75, 0.95].iter().map(|&p| (p, q(p))).collect(),
        traces,
    })
}

/// Binomial proportion with a 95% Wilson interval.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Proportion {
    pub count: u64,
    pub total: u64,
    pub p: f64,
    pub low: f64,
    pub high: f64,
}

impl Proportion {
    pub fn new(count: u64, total: u64) -> Proportion {
        let z = 1.959_963_984_540_054;
        let n = total as f64;
        let p = count as f64 / n;
        let d = 1.0 + z * z / n;
        let c = (p + z * z / (2.0 * n)) / d;
        let h = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / d;
        Proportion {
            count,
            total,
            p,
            low: if count == 0 { 0.0 } else { (c - h).max(0.0) },
            high: if count == total { 1.0 } else { (c + h).min(1.0) },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TailRow {
    pub m: u32,
    /// `P[D_n < K - M]`.
    pub short: Proportion,
    /// `P[D_n > K + M]`.
    pub long: Proportion,
    /// `K + M >= ceil(log2 n)`, so `D_n > K + M` cannot happen.
    pub long_impossible: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailReport {
    pub n: u64,
    pub k: u32,
    pub replicas: usize,
    pub histogram: BTreeMap<u32, u64>,
    pub rows: Vec<TailRow>,
}

/// Log-probabilities strictly decreasing with strictly growing drops; every
/// probability must be observed.
fn superexponential(ps: &[f64]) -> bool {
    if ps.iter().any(|&p| !(p > 0.0)) {
        return false;
    }
    let l: Vec<f64> = ps.iter().map(|p| p.ln()).collect();
    let drops: Vec<f64> = l.windows(2).map(|w| w[0] - w[1]).collect();
    drops.iter().all(|&d| d > 0.0) && drops.windows(2).all(|w| w[1] > w[0])
}

impl TailReport {
    pub fn short_decay(&self) -> bool {
        superexponential(&self.rows.iter().map(|r| r.short.p).collect::<Vec<_>>())
    }

    pub fn long_decay(&self) -> bool {
        superexponential(&self.rows.iter().map(|r| r.long.p).collect::<Vec<_>>())
    }

    pub fn monotone(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].short.count <= w[0].short.count && w[1].long.count <= w[0].long.count)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,K,M,short_count,short_p,short_low,short_high,long_count,long_p,long_low,long_high,long_impossible\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                self.n,
                self.k,
                r.m,
                r.short.count,
                r.short.p,
                r.short.low,
                r.short.high,
                r.long.count,
                r.long.p,
                r.long.low,
                r.long.high,
                r.long_impossible
            );
        }
        out
    }
}

pub fn tail_decay(n: u64, ms: &[u32], replicas: usize, lambda: &QuadraticSurd, seed: u64) -> Result<TailReport> {
    let k = k_of_n(n, lambda);
    if ms.iter().any(|&m| m >= k) {
        return Err(Error::InvalidArgument(format!("M must be below K(n) = {k}")));
    }
    let ds: Vec<u32> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| Ok(d_n(guarded_walk(seed, r, n as usize)?.prefix(), n as usize)))
        .collect::<Result<_>>()?;
    let mut histogram = BTreeMap::new();
    for &d in &ds {
        *histogram.entry(d).or_insert(0u64) += 1;
    }
    let ceil_log2 = 64 - (n - 1).leading_zeros();
    let total = replicas as u64;
    let rows = ms
        .iter()
        .map(|&m| {
            let short = ds.iter().filter(|&&d| d + m < k).count() as u64;
            let long = ds.iter().filter(|&&d| d > k + m).count() as u64;
            TailRow {
                m,
                short: Proportion::new(short, total),
                long: Proportion::new(long, total),
                long_impossible: k + m >= ceil_log2,
            }
        })
        .collect();
    Ok(TailReport {
        n,
        k,
        replicas,
        histogram,
        rows,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of categories merged into the pooled bin.
    pub pooled: usize,
}

fn p_value(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64).map(|d| d.sf(stat)).unwrap_or(f64::NAN)
}

/// Pearson goodness of fit. Categories with expected count below 5 are pooled
/// into one bin. Any count on a zero-probability category is an error.
pub fn chi_square(observed: &[u64], expected: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != expected.len() {
        return Err(Error::InvalidArgument("length mismatch".into()));
    }
    for (i, (&o, &e)) in observed.iter().zip(expected).enumerate() {
        if e == 0.0 && o > 0 {
            return Err(Error::ZeroProbabilityObserved { index: i, count: o });
        }
    }
    let total: u64 = observed.iter().sum();
    let mass: f64 = expected.iter().sum();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pool = (0.0, 0.0);
    let mut pooled = 0;
    for (&o, &e) in observed.iter().zip(expected) {
        if e == 0.0 {
            continue;
        }
        let ec = e / mass * total as f64;
        if ec < 5.0 {
            pool.0 += o as f64;
            pool.1 += ec;
            pooled += 1;
        } else {
            bins.push((o as f64, ec));
        }
    }
    if pool.1 > 0.0 {
        bins.push(pool);
    }
    let statistic = neumaier_sum(bins.iter().map(|(o, e)| (o - e) * (o - e) / e));
    let dof = bins.len().saturating_sub(1);
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: p_value(statistic, dof),
        pooled,
    })
}

/// Two-sample homogeneity test on aligned category counts. Categories with a
/// combined count below 10 are pooled.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<ChiSquareResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument("length mismatch".into()));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pool = (0.0, 0.0);
    let mut pooled = 0;
    for (&x, &y) in a.iter().zip(b) {
        if x + y == 0 {
            continue;
        }
        if x + y < 10 {
            pool.0 += x as f64;
            pool.1 += y as f64;
            pooled += 1;
        } else {
            bins.push((x as f64, y as f64));
        }
    }
    if pool.0 + pool.1 > 0.0 {
        bins.push(pool);
    }
    let n = na + nb;
    let statistic = neumaier_sum(bins.iter().map(|&(x, y)| {
        let c = x + y;
        let ea = c * na / n;
        let eb = c * nb / n;
        (x - ea) * (x - ea) / ea + (y - eb) * (y - eb) / eb
    }));
    let dof = bins.len().saturating_sub(1);
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: p_value(statistic, dof),
        pooled,
    })
}

/// Counts of each key of an exact law, plus the number of draws off its support.
pub fn tally<K: Ord + Clone>(law: &BTreeMap<K, Q>, draws: impl IntoIterator<Item = K>) -> (Vec<u64>, Vec<f64>, u64) {
    let index: BTreeMap<&K, usize> = law.keys().enumerate().map(|(i, k)| (k, i)).collect();
    let mut counts = vec![0u64; law.len()];
    let mut off = 0;
    for d in draws {
        match index.get(&d) {
            Some(&i) => counts[i] += 1,
            None => off += 1,
        }
    }
    (counts, law.values().map(to_f64).collect(), off)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q;

    fn lambda() -> QuadraticSurd {
        QuadraticSurd::sqrt_plus(q(4, 3), &q(205, 225))
    }

    #[test]
    fn k_brackets_n() {
        let l = lambda();
        let lf = l.to_f64();
        for n in [1u64, 2, 3, 5, 100, 4096, 100_000, 1 << 40] {
            let k = k_of_n(n, &l);
            assert!(lf.powi(k as i32) <= n as f64 * (1.0 + 1e-12));
            assert!((n as f64) < lf.powi(k as i32 + 1));
        }
        assert_eq!(k_of_n(4096, &l), 10);
        assert_eq!(k_of_n(2, &l), 0);
        assert_eq!(k_of_n(3, &l), 1);
    }

    #[test]
    fn exact_power_law_fit() {
        let ns: Vec<u64> = (6..=14).map(|k| 1u64 << k).collect();
        let samples = vec![ns.iter().map(|&n| (n as f64).powf(0.8)).collect::<Vec<_>>()];
        let t = MomentTable::from_samples(1.0, &ns, samples);
        let f = fit_exponent(&t, 0, 0).unwrap();
        assert!((f.nu - 0.8).abs() < 1e-12);
        let t2 = MomentTable::from_samples(2.0, &ns, vec![ns.iter().map(|&n| (n as f64).powf(1.6)).collect()]);
        assert!((fit_exponent(&t2, 0, 0).unwrap().nu - 0.8).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_ci_shrinks() {
        let ns: Vec<u64> = (6..=10).map(|k| 1u64 << k).collect();
        let mut rng = RandomStream::new(5);
        let mut make = |reps: usize| {
            let samples = (0..reps)
                .map(|_| ns.iter().map(|&n| (n as f64).powf(0.8) * (0.5 + rng.uniform())).collect())
                .collect();
            let t = MomentTable::from_samples(1.0, &ns, samples);
            let f = fit_exponent(&t, 400, 1).unwrap();
            f.ci_high - f.ci_low
        };
        let w1 = make(100);
        let w2 = make(1600);
        assert!(w2 < w1 / 2.0, "{w1} {w2}");
    }

    #[test]
    fn small_moments() {
        let l = lambda();
        let nu = std::f64::consts::LN_2 / l.to_f64().ln();
        let ts = estimate_moments_multi(&[1.0, 2.0], &[1, 2, 4, 8, 16, 32, 64], 200, 3, 1 << 20).unwrap();
        assert!((ts[0].rows[0].estimate - 1.0).abs() < 1e-12);
        for (a, b) in ts[0].rows.iter().zip(&ts[1].rows) {
            assert!(a.estimate * a.estimate <= b.estimate + 1e-9);
            assert!(a.estimate <= a.n as f64);
        }
        assert!(estimate_moments(1.0, &[4, 2], 1, 0, 100).is_err());
        assert!(matches!(estimate_moments(1.0, &[4, 200], 1, 0, 100), Err(Error::Capacity(_))));
        let lil = lil_diagnostic(20, 2000, nu, 2).unwrap();
        assert!((psi(16.0, nu) - 16f64.powf(nu) * 16f64.ln().ln().powf(1.0 - nu)).abs() < 1e-12);
        for t in &lil.traces {
            assert!(t.samples.windows(2).all(|w| w[0].1 <= w[1].1));
        }
    }

    #[test]
    fn tail_report_shape() {
        let r = tail_decay(256, &[0, 1, 2], 300, &lambda(), 4).unwrap();
        assert!(r.monotone());
        assert!(r.rows.iter().all(|x| x.short.p <= 1.0 && x.long.low <= x.long.p));
        assert_eq!(r.histogram.values().sum::<u64>(), 300);
    }

    #[test]
    fn chi_square_behaviour() {
        let e = [0.5, 0.25, 0.25];
        let r = chi_square(&[5000, 2500, 2500], &e).unwrap();
        assert!(r.statistic.abs() < 1e-12 && (r.p_value - 1.0).abs() < 1e-12);
        assert!(matches!(
            chi_square(&[1, 2, 3], &[0.5, 0.5, 0.0]),
            Err(Error::ZeroProbabilityObserved { index: 2, count: 3 })
        ));
        let p = [15.0, 4.0, 4.0, 4.0, 1.0, 1.0, 1.0].map(|x| x / 30.0);
        let uniform = [100_000 / 7; 7];
        assert!(chi_square(&uniform, &p).unwrap().p_value < 1e-6);
        let same = chi_square_two_sample(&[100, 200, 300], &[100, 200, 300]).unwrap();
        assert!(same.statistic.abs() < 1e-12);
    }
}
