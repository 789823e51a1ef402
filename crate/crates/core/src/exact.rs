//! Exact rational helpers: construction, `"num/den"` formatting and a dense
//! Gaussian elimination used by the small exact solves.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn fmt_q(x: &Q) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses `"n/d"` or `"n"`.
pub fn parse_q(s: &str) -> Result<Q> {
    let bad = || Error::InvalidArgument(format!("not a rational: {s}"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Q::new(n, d))
}

/// Serializes a rational as `"num/den"`.
pub fn ser_q<S: Serializer>(x: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_q(x))
}

pub fn ser_q_vec<S: Serializer>(xs: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
    xs.iter().map(fmt_q).collect::<Vec<_>>().serialize(s)
}

pub fn ser_q_mat<S: Serializer>(xs: &[Vec<Q>], s: S) -> std::result::Result<S::Ok, S::Error> {
    xs.iter()
        .map(|r| r.iter().map(fmt_q).collect::<Vec<_>>())
        .collect::<Vec<_>>()
        .serialize(s)
}

/// Solves `a x = b` exactly by Gaussian elimination with partial pivoting on
/// nonzero entries.
pub fn solve_dense(mut a: Vec<Vec<Q>>, mut b: Vec<Q>) -> Result<Vec<Q>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument("matrix shape mismatch".into()));
    }
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::Integrity("singular system".into()))?;
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].recip();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] * &inv;
            let (pivot_row, row) = if r < col {
                let (lo, hi) = a.split_at_mut(col);
                (&hi[0], &mut lo[r])
            } else {
                let (lo, hi) = a.split_at_mut(r);
                (&lo[col], &mut hi[0])
            };
            for c in col..n {
                if !pivot_row[c].is_zero() {
                    row[c] -= &f * &pivot_row[c];
                }
            }
            let d = &f * &b[col];
            b[r] -= d;
        }
    }
    Ok((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// `x^n` for a rational and nonnegative exponent.
pub fn pow_q(x: &Q, n: u32) -> Q {
    let mut out = Q::one();
    for _ in 0..n {
        out *= x;
    }
    out
}

pub fn abs_q(x: &Q) -> Q {
    x.abs()
}
