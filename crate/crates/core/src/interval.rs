//! Closed real intervals with arbitrary-precision endpoints.

use std::cmp::Ordering;
use std::fmt;

use rug::Float;

/// An interval `[lo, hi]` on the real line. Membership tests are open unless
/// the method name says otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval {
    pub lo: Float,
    pub hi: Float,
}

impl Interval {
    /// Builds the hull of two endpoints in either order.
    pub fn new(a: Float, b: Float) -> Self {
        if a <= b {
            Interval { lo: a, hi: b }
        } else {
            Interval { lo: b, hi: a }
        }
    }

    pub fn from_f64(lo: f64, hi: f64, prec: u32) -> Self {
        Interval::new(Float::with_val(prec, lo), Float::with_val(prec, hi))
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    pub fn width(&self) -> Float {
        Float::with_val(self.prec(), &self.hi - &self.lo)
    }

    pub fn midpoint(&self) -> Float {
        let mut m = Float::with_val(self.prec(), &self.lo + &self.hi);
        m /= 2;
        m
    }

    /// Open membership `lo < x < hi`.
    pub fn contains(&self, x: &Float) -> bool {
        self.lo < *x && *x < self.hi
    }

    pub fn contains_closed(&self, x: &Float) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    /// `other ⊂ self` with closed endpoints.
    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// `other ⊂ self` allowing `tol` of slack at either end.
    pub fn contains_interval_tol(&self, other: &Interval, tol: &Float) -> bool {
        let lo = Float::with_val(self.prec(), &self.lo - tol);
        let hi = Float::with_val(self.prec(), &self.hi + tol);
        lo <= other.lo && other.hi <= hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }

    /// Position of `x` relative to the open interval: `Less` left of it,
    /// `Greater` right of it, `Equal` inside.
    pub fn side(&self, x: &Float) -> Ordering {
        if *x <= self.lo {
            Ordering::Less
        } else if *x >= self.hi {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    }

    /// Distance from `x` to the nearer endpoint.
    pub fn endpoint_distance(&self, x: &Float) -> Float {
        let a = Float::with_val(self.prec(), x - &self.lo).abs();
        let b = Float::with_val(self.prec(), x - &self.hi).abs();
        if a < b {
            a
        } else {
            b
        }
    }

    /// The reflected interval `1 - self`.
    pub fn mirror(&self) -> Interval {
        let p = self.prec();
        Interval {
            lo: Float::with_val(p, 1 - &self.hi),
            hi: Float::with_val(p, 1 - &self.lo),
        }
    }

    /// Hausdorff distance between two intervals.
    pub fn hausdorff(&self, other: &Interval) -> Float {
        let p = self.prec().max(other.prec());
        let a = Float::with_val(p, &self.lo - &other.lo).abs();
        let b = Float::with_val(p, &self.hi - &other.hi).abs();
        if a > b {
            a
        } else {
            b
        }
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Interval) -> Interval {
        let lo = if self.lo < other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi > other.hi { &self.hi } else { &other.hi };
        Interval { lo: lo.clone(), hi: hi.clone() }
    }

    pub fn with_prec(&self, prec: u32) -> Interval {
        Interval {
            lo: Float::with_val(prec, &self.lo),
            hi: Float::with_val(prec, &self.hi),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo.to_f64(), self.hi.to_f64())
    }
}

/// Total length of a union of intervals.
pub fn union_length(parts: &[Interval], prec: u32) -> Float {
    let mut sorted: Vec<&Interval> = parts.iter().collect();
    sorted.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap_or(Ordering::Equal));
    let mut total = Float::with_val(prec, 0);
    let mut current: Option<Interval> = None;
    for part in sorted {
        match current.as_mut() {
            Some(cur) if part.lo <= cur.hi => {
                if part.hi > cur.hi {
                    cur.hi = part.hi.clone();
                }
            }
            _ => {
                if let Some(cur) = current.take() {
                    total += cur.width();
                }
                current = Some(part.clone());
            }
        }
    }
    if let Some(cur) = current {
        total += cur.width();
    }
    total
}
