//! Closed-form delay model for end-to-end versus local (GoS) retransmission
//! and the resulting bound on the useful recovery diameter.
//!
//! Link delays are integer microseconds and the GoS overhead factor is an
//! exact rational, so every identity here holds as an exact equality.
//!
//! Indices follow the usual LSP convention: a route `x_0 .. x_m` has link
//! `l` joining `x_l` and `x_{l+1}`, and `LSP_{i,n}` covers links `i..n`.

use std::fmt;
use std::ops::RangeInclusive;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalyticsError {
    #[error("need at least one link")]
    EmptyPath,
    #[error("segment {i}..{n} does not fit a route with {links} links")]
    BadSegment { i: usize, n: usize, links: usize },
    #[error("diameter {d} outside 0 < d < {limit}")]
    DiameterOutOfRange { d: usize, limit: usize },
    #[error("d_gos must be positive, got {0}")]
    NonPositiveDgos(Rational64),
    #[error("d_gos must lie in (0, 3), got {0}")]
    DgosOutOfDomain(Rational64),
    #[error("cannot parse `{0}` as a d_gos value")]
    BadNumber(String),
}

/// GoS overhead factor and the segment `LSP_{i,n}` under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalyticsParams {
    pub d_gos: Rational64,
    pub i: usize,
    pub n: usize,
}

impl AnalyticsParams {
    /// Parameters covering a whole route of `links` links.
    pub fn whole(d_gos: Rational64, links: usize) -> Self {
        Self { d_gos, i: 0, n: links }
    }

    fn check(&self, links: usize) -> Result<(), AnalyticsError> {
        if self.d_gos <= Rational64::zero() {
            return Err(AnalyticsError::NonPositiveDgos(self.d_gos));
        }
        if self.i >= self.n || self.n > links {
            return Err(AnalyticsError::BadSegment {
                i: self.i,
                n: self.n,
                links,
            });
        }
        Ok(())
    }
}

/// Detection delay, retransmission delay and their sum, in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DelayReport {
    pub ddt: Rational64,
    pub retx: Rational64,
    pub total: Rational64,
}

impl DelayReport {
    fn new(ddt: Rational64, retx: Rational64) -> Self {
        Self {
            ddt,
            retx,
            total: ddt + retx,
        }
    }

    pub fn csv_header() -> &'static str {
        "ddt,retx,total"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{}",
            decimal(self.ddt),
            decimal(self.retx),
            decimal(self.total)
        )
    }
}

/// Renders an exact rational as a finite decimal (6 places when inexact).
pub fn decimal(v: Rational64) -> String {
    if v.is_integer() {
        v.to_integer().to_string()
    } else {
        format!("{:.6}", v.to_f64().unwrap_or(0.0))
    }
}

fn sum(delays: &[u64]) -> Rational64 {
    Rational64::from_integer(delays.iter().sum::<u64>() as i64)
}

/// Time until a loss at the far end becomes detectable without GoS: the sum
/// of link delays along the path.
pub fn ddt_e2e(delays: &[u64]) -> Result<u64, AnalyticsError> {
    if delays.is_empty() {
        return Err(AnalyticsError::EmptyPath);
    }
    Ok(delays.iter().sum())
}

/// End-to-end recovery: detection `Σd`, retransmission `2Σd`, total `3Σd`.
pub fn total_e2e(delays: &[u64]) -> Result<DelayReport, AnalyticsError> {
    let s = Rational64::from_integer(ddt_e2e(delays)? as i64);
    Ok(DelayReport::new(s, s * 2))
}

/// End-to-end recovery over the segment `LSP_{i,n}` only.
pub fn total_e2e_segment(delays: &[u64], i: usize, n: usize) -> Result<DelayReport, AnalyticsError> {
    if i >= n || n > delays.len() {
        return Err(AnalyticsError::BadSegment {
            i,
            n,
            links: delays.len(),
        });
    }
    total_e2e(&delays[i..n])
}

/// Local recovery with diameter `d`: detection `d_gos·Σ_{i..n}` plus a round
/// trip over the last `d` links, `2·d_gos·Σ_{n-d..n}`.
pub fn total_gos(delays: &[u64], d: usize, p: &AnalyticsParams) -> Result<DelayReport, AnalyticsError> {
    p.check(delays.len())?;
    if d == 0 || d >= p.n - p.i {
        return Err(AnalyticsError::DiameterOutOfRange {
            d,
            limit: p.n - p.i,
        });
    }
    Ok(gos_unchecked(delays, d, p))
}

fn gos_unchecked(delays: &[u64], d: usize, p: &AnalyticsParams) -> DelayReport {
    let ddt = p.d_gos * sum(&delays[p.i..p.n]);
    let retx = p.d_gos * sum(&delays[p.n - d..p.n]) * 2;
    DelayReport::new(ddt, retx)
}

/// Local retransmission delay with the diameter range check lifted, so
/// `d = n - i` can be evaluated (it degenerates to an end-to-end
/// retransmission scaled by `d_gos`).
pub fn gos_retx_any_diameter(delays: &[u64], d: usize, p: &AnalyticsParams) -> Result<Rational64, AnalyticsError> {
    p.check(delays.len())?;
    if d == 0 || d > p.n - p.i {
        return Err(AnalyticsError::DiameterOutOfRange {
            d,
            limit: p.n - p.i + 1,
        });
    }
    Ok(gos_unchecked(delays, d, p).retx)
}

/// Outcome of comparing local and end-to-end recovery for one diameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    /// `total_gos < total_e2e`, evaluated directly.
    pub gos_faster: bool,
    /// The same question through the half-plane inequality
    /// `Σ_{i..n} > 2·d_gos·Σ_{n-d..n} / (3 - d_gos)`; `None` when
    /// `d_gos >= 3` and the inequality no longer applies.
    pub half_plane: Option<bool>,
}

impl Verdict {
    pub fn degenerate(&self) -> bool {
        self.half_plane.is_none()
    }
}

pub fn gos_beats_e2e(delays: &[u64], d: usize, p: &AnalyticsParams) -> Result<Verdict, AnalyticsError> {
    let gos = total_gos(delays, d, p)?;
    let e2e = total_e2e(&delays[p.i..p.n])?;
    let gos_faster = gos.total < e2e.total;

    let three = Rational64::from_integer(3);
    let half_plane = (p.d_gos < three).then(|| {
        let lhs = sum(&delays[p.i..p.n]);
        let rhs = p.d_gos * 2 * sum(&delays[p.n - d..p.n]) / (three - p.d_gos);
        lhs > rhs
    });
    if let Some(h) = half_plane {
        debug_assert_eq!(h, gos_faster, "half-plane and direct comparison disagree");
    }
    Ok(Verdict {
        gos_faster,
        half_plane,
    })
}

/// Diameter bound for `LSP_{i,n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiameterBound {
    pub n: usize,
    /// `((n - 1 - i)(3 - d_gos)) / (2 d_gos) + 1`; feasible `d` are strictly below it.
    pub bound: Rational64,
    /// Largest integer diameter under the bound and inside `0 < d < n - i`.
    pub max_d: usize,
}

fn check_domain(d_gos: Rational64) -> Result<(), AnalyticsError> {
    if d_gos <= Rational64::zero() || d_gos >= Rational64::from_integer(3) {
        return Err(AnalyticsError::DgosOutOfDomain(d_gos));
    }
    Ok(())
}

pub fn max_diameter_bound(n: usize, i: usize, d_gos: Rational64) -> Result<DiameterBound, AnalyticsError> {
    check_domain(d_gos)?;
    if i >= n {
        return Err(AnalyticsError::BadSegment { i, n, links: n });
    }
    let span = Rational64::from_integer((n - 1 - i) as i64);
    let three = Rational64::from_integer(3);
    let bound = span * (three - d_gos) / (d_gos * 2) + 1;
    let below_bound = (bound.ceil().to_integer() - 1).max(0) as usize;
    Ok(DiameterBound {
        n,
        bound,
        max_d: below_bound.min(n - i - 1),
    })
}

/// `max_diameter_bound` over a range of LSP sizes.
pub fn scalability_curve(
    n_range: RangeInclusive<usize>,
    i: usize,
    d_gos: Rational64,
) -> Result<Vec<DiameterBound>, AnalyticsError> {
    check_domain(d_gos)?;
    n_range
        .filter(|&n| n > i)
        .map(|n| max_diameter_bound(n, i, d_gos))
        .collect()
}

pub struct CurveCsv<'a>(pub &'a [DiameterBound]);

impl fmt::Display for CurveCsv<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n,bound,max_d")?;
        for p in self.0 {
            writeln!(f, "{},{},{}", p.n, decimal(p.bound), p.max_d)?;
        }
        Ok(())
    }
}

/// Parses `d_gos` exactly from a decimal (`1.00267`) or a fraction (`3/2`).
pub fn parse_d_gos(s: &str) -> Result<Rational64, AnalyticsError> {
    let bad = || AnalyticsError::BadNumber(s.to_string());
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: i64 = num.trim().parse().map_err(|_| bad())?;
        let den: i64 = den.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(num, den));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() > 15 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let int: i64 = if int.is_empty() || int == "-" {
        if frac.is_empty() {
            return Err(bad());
        }
        0
    } else {
        int.parse().map_err(|_| bad())?
    };
    let scale = 10i64.pow(frac.len() as u32);
    let frac_val: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let sign = if s.starts_with('-') { -1 } else { 1 };
    Ok(Rational64::new(int * scale + sign * frac_val, scale))
}
