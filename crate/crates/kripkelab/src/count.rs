//! Exact arbitrary-precision counting: Bell numbers, bounded-block
//! partition counts, binomials, closed-form class censuses, the exponential
//! formula for disjoint unions, the brute-force census oracle, and numeric
//! reports for the asymptotic claims.
//!
//! Every census path is exact big-integer arithmetic; floating point only
//! appears when a report row is rendered.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::classes::ClassId;
use crate::frame::Frame;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CountError {
    #[error("brute-force census supports n <= {max}, got {n}")]
    CensusTooLarge { n: usize, max: usize },
    #[error("report budget is n <= {max}, got {upto}")]
    BudgetExceeded { upto: usize, max: usize },
}

/// Largest `n` the full-relation enumeration will accept (2^25 relations).
pub const MAX_CENSUS_N: usize = 5;
/// Largest index for exact Bell-number reports.
pub const MAX_BELL_REPORT_N: usize = 400;

// ---------------------------------------------------------------------------
// Exact sequences
// ---------------------------------------------------------------------------

/// `B_0 ..= B_upto` by the Bell-triangle recurrence.
pub fn bell(upto: usize) -> Vec<BigUint> {
    let mut out = Vec::with_capacity(upto + 1);
    out.push(BigUint::one());
    if upto == 0 {
        return out;
    }
    let mut row = vec![BigUint::one()];
    out.push(BigUint::one());
    for _ in 2..=upto {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(row.last().unwrap().clone());
        for value in &row {
            let prev = next.last().unwrap().clone();
            next.push(prev + value);
        }
        out.push(next.last().unwrap().clone());
        row = next;
    }
    out
}

pub fn binomial(n: usize, m: usize) -> BigUint {
    if m > n {
        return BigUint::zero();
    }
    let m = m.min(n - m);
    let mut result = BigUint::one();
    for i in 0..m {
        result = result * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    result
}

/// The full binomial row `C(n, 0) ..= C(n, n)`.
pub fn binomial_row(n: usize) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for i in 0..n {
        let next = row[i].clone() * BigUint::from(n - i) / BigUint::from(i + 1);
        row.push(next);
    }
    row
}

/// Partial sum of the series `e^-1 Σ k^n / k!`, which converges to `B_n`.
///
/// Terms are updated by ratio, `t_(k+1) = t_k * (1 + 1/k)^n / (k + 1)`, so
/// no intermediate power or factorial is formed; the tail is cut off once a
/// term drops below 1e-30 of the running sum.
pub fn dobinski_estimate(n: usize, terms: usize) -> f64 {
    assert!(terms >= 1, "at least one term");
    let mut sum = if n == 0 { 1.0 } else { 0.0 }; // k = 0 contributes 0^n / 0!
    let mut term = 1.0f64; // k = 1: 1^n / 1!
    for k in 1..terms {
        sum += term;
        if k > n && term < 1e-30 * sum {
            break;
        }
        let k = k as f64;
        term *= ((k + 1.0) / k).powi(n as i32) / (k + 1.0);
    }
    sum * (-1.0f64).exp()
}

/// `G_(n,r)`: partitions of an n-set into blocks of size at most `r`.
pub fn bounded_partitions(n: usize, r: usize) -> BigUint {
    assert!(r >= 1, "block bound must be at least 1");
    bounded_partitions_table(n, r).pop().unwrap()
}

/// `G_(0,r) ..= G_(n,r)`.
pub fn bounded_partitions_table(n: usize, r: usize) -> Vec<BigUint> {
    assert!(r >= 1);
    let mut g = Vec::with_capacity(n + 1);
    g.push(BigUint::one());
    for m in 1..=n {
        let mut total = BigUint::zero();
        for j in 1..=r.min(m) {
            total += binomial(m - 1, j - 1) * &g[m - j];
        }
        g.push(total);
    }
    g
}

// ---------------------------------------------------------------------------
// Class censuses
// ---------------------------------------------------------------------------

/// Exact number of connected class members on `[n]`, by the structure
/// theorems: KD5 frames are a core cluster plus independent nonempty
/// out-sets, KD45 frames are determined by the nonempty core, S5 has the
/// single cluster, K5B adds the irreflexive singleton at n = 1, and the
/// tree classes are counted by rooted labelled trees.
pub fn count_connected(class: ClassId, n: usize) -> BigUint {
    assert!(n >= 1);
    match class {
        ClassId::Kd5 => {
            let mut total = BigUint::zero();
            for m in 1..=n {
                let choices = BigUint::from(2u32).pow(m as u32) - 1u32;
                total += binomial(n, m) * choices.pow((n - m) as u32);
            }
            total
        }
        ClassId::Kd45 => BigUint::from(2u32).pow(n as u32) - 1u32,
        ClassId::S5 => BigUint::one(),
        ClassId::K5b => {
            if n == 1 {
                BigUint::from(2u32)
            } else {
                BigUint::one()
            }
        }
        ClassId::Gl3 | ClassId::Grz3 => BigUint::from(n).pow(n.saturating_sub(1) as u32),
    }
}

/// Per-m summands of the connected-KD5 census, `C(n,m) (2^m - 1)^(n-m)` for
/// m = 1..=n; the samplers draw the core size from these exact weights.
pub fn kd5_core_weights(n: usize) -> Vec<BigUint> {
    (1..=n)
        .map(|m| {
            let choices = BigUint::from(2u32).pow(m as u32) - 1u32;
            binomial(n, m) * choices.pow((n - m) as u32)
        })
        .collect()
}

/// Exponential formula: total counts from connected counts for a class
/// closed under disjoint unions. `connected[j-1]` is the connected count at
/// size j; returns totals a_1..a_n where
/// `a_m = Σ_j C(m-1, j-1) c_j a_(m-j)` (the block containing the smallest
/// label has size j).
pub fn exp_formula(connected: &[BigUint]) -> Vec<BigUint> {
    let n = connected.len();
    let mut totals = Vec::with_capacity(n + 1);
    totals.push(BigUint::one());
    for m in 1..=n {
        let mut a_m = BigUint::zero();
        for j in 1..=m {
            a_m += binomial(m - 1, j - 1) * &connected[j - 1] * &totals[m - j];
        }
        totals.push(a_m);
    }
    totals.remove(0);
    totals
}

/// Exact number of class members on `[n]` across both scopes, using the
/// closed forms where available (K5B totals are `B_(n+1)`, S5 totals are
/// `B_n`) and the exponential formula elsewhere.
pub fn count_all(class: ClassId, n: usize) -> BigUint {
    assert!(n >= 1);
    match class {
        ClassId::K5b => bell(n + 1).pop().unwrap(),
        ClassId::S5 => bell(n).pop().unwrap(),
        _ => {
            let connected: Vec<BigUint> =
                (1..=n).map(|m| count_connected(class, m)).collect();
            exp_formula(&connected).pop().unwrap()
        }
    }
}

// ---------------------------------------------------------------------------
// Brute-force census
// ---------------------------------------------------------------------------

/// Visits every frame on `[n]` (all `2^(n²)` relations), reusing one
/// scratch frame.
pub fn for_each_frame<F: FnMut(&Frame)>(n: usize, visit: F) -> Result<(), CountError> {
    let cells = frame_space_bits(n)?;
    for_each_frame_in(n, 0..1u64 << cells, visit)
}

/// Number of relation bits for frames on `[n]`; the enumeration space is
/// `0..2^bits`.
pub fn frame_space_bits(n: usize) -> Result<u32, CountError> {
    if n == 0 || n > MAX_CENSUS_N {
        return Err(CountError::CensusTooLarge { n, max: MAX_CENSUS_N });
    }
    Ok((n * n) as u32)
}

/// Visits the frames whose relation masks lie in `range`; partitioning the
/// mask space over workers visits every frame exactly once.
pub fn for_each_frame_in<F: FnMut(&Frame)>(
    n: usize,
    range: std::ops::Range<u64>,
    mut visit: F,
) -> Result<(), CountError> {
    let cells = frame_space_bits(n)?;
    debug_assert!(range.end <= 1u64 << cells);
    let row_mask = (1u64 << n) - 1;
    let mut frame = Frame::empty(n);
    for rel in range {
        for a in 0..n {
            frame.set_row_mask(a, rel >> (a * n) & row_mask);
        }
        visit(&frame);
    }
    Ok(())
}

/// Exact count of frames on `[n]` satisfying the predicate, by full
/// enumeration.
pub fn brute_census<P: FnMut(&Frame) -> bool>(n: usize, mut pred: P) -> Result<u64, CountError> {
    let mut count = 0u64;
    for_each_frame(n, |f| {
        if pred(f) {
            count += 1;
        }
    })?;
    Ok(count)
}

// ---------------------------------------------------------------------------
// Asymptotic reports
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Debug)]
pub enum AsymptoticClaim {
    /// `ln B_n / (n (ln n - ln ln n - 1))`, tending to 1.
    BellLog,
    /// `B_n / B_(n+1)`, tending to 0.
    BellRatio,
    /// `ln (G_(n,r) 2^(kn) / B_n)`, tending to -infinity.
    GnrVsBell { r: usize, k: u32 },
    /// `C(n, n/2) sqrt(pi n / 2) / 2^n`, tending to 1.
    CentralBinomial,
}

/// Rows of `(n, value)` for one asymptotic claim, computed from exact
/// integers.
#[derive(Clone, Debug)]
pub struct AsymptoticReport {
    pub claim: AsymptoticClaim,
    pub rows: Vec<(usize, f64)>,
}

pub fn asymptotic_report(
    claim: AsymptoticClaim,
    upto: usize,
) -> Result<AsymptoticReport, CountError> {
    if upto > MAX_BELL_REPORT_N {
        return Err(CountError::BudgetExceeded { upto, max: MAX_BELL_REPORT_N });
    }
    let rows = match claim {
        AsymptoticClaim::BellLog => {
            let bells = bell(upto);
            (3..=upto)
                .map(|n| {
                    let nf = n as f64;
                    let denom = nf * (nf.ln() - nf.ln().ln() - 1.0);
                    (n, ln_big(&bells[n]) / denom)
                })
                .collect()
        }
        AsymptoticClaim::BellRatio => {
            let bells = bell(upto + 1);
            (1..=upto)
                .map(|n| (n, big_ratio_f64(&bells[n], &bells[n + 1])))
                .collect()
        }
        AsymptoticClaim::GnrVsBell { r, k } => {
            let bells = bell(upto);
            let g = bounded_partitions_table(upto, r);
            (1..=upto)
                .map(|n| {
                    let value =
                        ln_big(&g[n]) + (k as usize * n) as f64 * 2f64.ln() - ln_big(&bells[n]);
                    (n, value)
                })
                .collect()
        }
        AsymptoticClaim::CentralBinomial => (1..=upto)
            .map(|n| {
                let c = binomial(n, n / 2);
                let pow = BigUint::from(2u32).pow(n as u32);
                let value =
                    big_ratio_f64(&c, &pow) * (std::f64::consts::PI * n as f64 / 2.0).sqrt();
                (n, value)
            })
            .collect(),
    };
    Ok(AsymptoticReport { claim, rows })
}

/// `B_n / B_(n+1)` strictly decreasing for n in `1..=max_n`, decided by
/// exact cross-multiplication.
pub fn bell_ratio_strictly_decreasing(max_n: usize) -> bool {
    let bells = bell(max_n + 1);
    (1..max_n).all(|n| &bells[n + 1] * &bells[n + 1] < &bells[n] * &bells[n + 2])
}

/// `ln (G_(n,r) 2^(kn) / B_n)` strictly decreasing for n in `from..=to`,
/// decided by exact cross-multiplication.
pub fn gnr_ratio_strictly_decreasing(r: usize, k: u32, from: usize, to: usize) -> bool {
    let bells = bell(to + 1);
    let g = bounded_partitions_table(to + 1, r);
    let two_k = BigUint::from(2u32).pow(k);
    (from..to).all(|n| &g[n + 1] * &two_k * &bells[n] < &g[n] * &bells[n + 1])
}

/// Natural log of a big integer via its top 53 bits; accurate to an ulp or
/// two regardless of magnitude.
pub fn ln_big(x: &BigUint) -> f64 {
    assert!(!x.is_zero(), "ln of zero");
    let bits = x.bits();
    if bits <= 53 {
        return x.to_f64().unwrap().ln();
    }
    let shift = bits - 53;
    let mantissa = (x >> shift).to_f64().unwrap();
    mantissa.ln() + shift as f64 * 2f64.ln()
}

/// `num / den` as f64 for arbitrarily large exact integers.
pub fn big_ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    assert!(!den.is_zero());
    if num.is_zero() {
        return 0.0;
    }
    (ln_big(num) - ln_big(den)).exp()
}
