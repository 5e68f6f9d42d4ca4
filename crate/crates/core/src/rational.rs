//! Exact rational helpers shared by the geometry and p-adic code.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    BigRational::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // numerator or denominator overflowed f64; go through logs
        let sign = if x.is_negative() { -1.0 } else { 1.0 };
        sign * (log_abs_bigint(x.numer()) - log_abs_bigint(x.denom())).exp()
    })
}

pub fn log_abs_bigint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits < 1000 {
        return n.abs().to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (n.abs() >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln |x|` for a nonzero rational.
pub fn log_abs(x: &Q) -> f64 {
    log_abs_bigint(x.numer()) - log_abs_bigint(x.denom())
}

/// Exponent of `p` in a nonzero integer.
pub fn int_valuation(n: &BigInt, p: u64) -> i64 {
    assert!(!n.is_zero(), "valuation of zero");
    let p = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0;
    loop {
        let (quo, rem) = n.div_rem(&p);
        if !rem.is_zero() {
            return v;
        }
        n = quo;
        v += 1;
    }
}

/// p-adic valuation of a nonzero rational.
pub fn valuation(x: &Q, p: u64) -> i64 {
    int_valuation(x.numer(), p) - int_valuation(x.denom(), p)
}

/// Primes dividing the numerator or denominator, in increasing order.
pub fn prime_support(x: &Q) -> Vec<u64> {
    let mut out = Vec::new();
    for part in [x.numer(), x.denom()] {
        let mut n = part
            .abs()
            .to_u64()
            .expect("prime_support expects word-sized rationals");
        let mut p = 2;
        while p * p <= n {
            if n % p == 0 {
                out.push(p);
                while n % p == 0 {
                    n /= p;
                }
            }
            p += 1;
        }
        if n > 1 {
            out.push(n);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            return false;
        }
        p += 1;
    }
    true
}

pub fn is_integer(x: &Q) -> bool {
    x.denom().is_one()
}

/// Exact determinant by fraction-free elimination.
pub fn det(rows: &[Vec<Q>]) -> Q {
    let n = rows.len();
    let mut a: Vec<Vec<Q>> = rows.to_vec();
    let mut sign = Q::one();
    let mut result = Q::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Q::zero();
        };
        if pivot != col {
            a.swap(pivot, col);
            sign = -sign;
        }
        let p = a[col][col].clone();
        result *= &p;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &p;
            for c in col..n {
                let delta = &factor * &a[col][c];
                a[r][c] -= delta;
            }
        }
    }
    sign * result
}

/// Integer determinant (Bareiss), used for lattice index computations.
pub fn det_i128(rows: &[Vec<i128>]) -> i128 {
    let n = rows.len();
    if n == 0 {
        return 1;
    }
    let mut a = rows.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&r| a[r][k] != 0) else {
                return 0;
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}
