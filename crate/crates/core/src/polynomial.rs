//! The cubic families `P⁺(x) = a x³ + b x² + (1−a−b) x` and `P⁻ = 1 − P⁺`
//! evaluated and inverted at arbitrary precision.

use std::fmt;
use std::str::FromStr;

use rug::{Assign, Float};
use thiserror::Error;

use crate::interval::Interval;

pub const MIN_PRECISION: u32 = 64;
pub const DEFAULT_PRECISION: u32 = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FamilySign {
    Positive,
    Negative,
}

impl fmt::Display for FamilySign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySign::Positive => write!(f, "positive"),
            FamilySign::Negative => write!(f, "negative"),
        }
    }
}

impl FromStr for FamilySign {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" | "pos" | "+" => Ok(FamilySign::Positive),
            "negative" | "neg" | "-" => Ok(FamilySign::Negative),
            other => Err(format!("unknown family sign '{other}'")),
        }
    }
}

/// The three monotone laps `(0,c)`, `(c,d)`, `(d,1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Lap {
    Left,
    Middle,
    Right,
}

impl Lap {
    pub fn index(self) -> usize {
        match self {
            Lap::Left => 0,
            Lap::Middle => 1,
            Lap::Right => 2,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("leading coefficient is zero, the map is not cubic")]
    Degenerate,
    #[error("precision of {0} bits is below the minimum of 64")]
    InvalidPrecision(u32),
    #[error("map is not bimodal on [0,1]: {0}")]
    NotBimodal(String),
    #[error("value lies outside the image of the branch")]
    NoPreimage,
    #[error("branch contains a turning point")]
    BranchNotMonotone,
    #[error("interval width fell below the precision floor")]
    PrecisionExhausted,
    #[error("f(x) - x does not change sign on the region")]
    NoSignChange,
}

/// A validated bimodal cubic on `[0,1]`. Immutable after construction.
#[derive(Clone, Debug)]
pub struct CubicMap {
    family_sign: FamilySign,
    a: Float,
    b: Float,
    c: Float,
    d: Float,
    precision_bits: u32,
    // coefficients of 1, x, x², x³
    k: [Float; 4],
    // +1 increasing, -1 decreasing on each lap
    orient: [i8; 3],
}

/// Parses a decimal string at the given precision.
pub fn parse_real(text: &str, prec: u32) -> Result<Float, String> {
    Float::parse(text.trim())
        .map(|p| Float::with_val(prec, p))
        .map_err(|e| format!("invalid number '{text}': {e}"))
}

pub fn make_cubic(
    family_sign: FamilySign,
    a: &Float,
    b: &Float,
    precision_bits: u32,
) -> Result<CubicMap, PolyError> {
    if precision_bits < MIN_PRECISION {
        return Err(PolyError::InvalidPrecision(precision_bits));
    }
    if a.is_zero() {
        return Err(PolyError::Degenerate);
    }
    let p = precision_bits;
    let a = Float::with_val(p, a);
    let b = Float::with_val(p, b);
    let lin = Float::with_val(p, 1 - Float::with_val(p, &a + &b));
    let k = match family_sign {
        FamilySign::Positive => [Float::with_val(p, 0), lin, b.clone(), a.clone()],
        FamilySign::Negative => [
            Float::with_val(p, 1),
            Float::with_val(p, -&lin),
            Float::with_val(p, -&b),
            Float::with_val(p, -&a),
        ],
    };

    // derivative 3k3 x² + 2k2 x + k1
    let qa = Float::with_val(p, &k[3] * 3);
    let qb = Float::with_val(p, &k[2] * 2);
    let mut disc = Float::with_val(p, qb.square_ref());
    disc -= Float::with_val(p, &qa * &k[1]) * 4u32;
    if disc <= 0 {
        return Err(PolyError::NotBimodal(
            "derivative has no pair of distinct real roots".into(),
        ));
    }
    let sq = disc.sqrt();
    let den = Float::with_val(p, &qa * 2);
    let r1 = (Float::with_val(p, -&qb) - &sq) / &den;
    let r2 = (Float::with_val(p, -&qb) + &sq) / &den;
    let (c, d) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
    if c <= 0 || d >= 1 {
        return Err(PolyError::NotBimodal(format!(
            "turning points {} and {} are not inside (0,1)",
            c.to_f64(),
            d.to_f64()
        )));
    }
    let s: i8 = if k[3] > 0 { 1 } else { -1 };
    let map = CubicMap {
        family_sign,
        a,
        b,
        c,
        d,
        precision_bits,
        k,
        orient: [s, -s, s],
    };
    let slack = map.value_slack();
    let lower = Float::with_val(p, -&slack);
    let upper = Float::with_val(p, 1 + &slack);
    for x in [&map.c, &map.d] {
        let v = map.eval(x);
        if v < lower || v > upper {
            return Err(PolyError::NotBimodal(format!(
                "critical value {} escapes [0,1]",
                v.to_f64()
            )));
        }
    }
    let (want0, want1) = match family_sign {
        FamilySign::Positive => (0, 1),
        FamilySign::Negative => (1, 0),
    };
    let e0 = Float::with_val(p, map.eval(&Float::with_val(p, 0)) - want0).abs();
    let e1 = Float::with_val(p, map.eval(&Float::with_val(p, 1)) - want1).abs();
    if e0 > slack || e1 > slack {
        return Err(PolyError::NotBimodal("boundary points are not preserved".into()));
    }
    Ok(map)
}

/// The mirror-symmetric slice `b = −3a/2`.
pub fn make_symmetric_cubic(
    family_sign: FamilySign,
    a: &Float,
    precision_bits: u32,
) -> Result<CubicMap, PolyError> {
    let p = precision_bits.max(MIN_PRECISION);
    let b = Float::with_val(p, a * -3) / 2;
    make_cubic(family_sign, a, &b, precision_bits)
}

impl CubicMap {
    pub fn family_sign(&self) -> FamilySign {
        self.family_sign
    }

    pub fn a(&self) -> &Float {
        &self.a
    }

    pub fn b(&self) -> &Float {
        &self.b
    }

    /// Left turning point.
    pub fn c(&self) -> &Float {
        &self.c
    }

    /// Right turning point.
    pub fn d(&self) -> &Float {
        &self.d
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn zero(&self) -> Float {
        Float::with_val(self.precision_bits, 0)
    }

    pub fn float(&self, v: f64) -> Float {
        Float::with_val(self.precision_bits, v)
    }

    /// `2^e` at working precision.
    pub fn pow2(&self, e: i32) -> Float {
        Float::with_val(self.precision_bits, 1) << e
    }

    /// Slack for exact identities such as `f(0) = 0`.
    pub fn value_slack(&self) -> Float {
        self.pow2(8 - self.precision_bits as i32)
    }

    /// Widths below this raise `PrecisionExhausted`.
    pub fn exhaustion_width(&self) -> Float {
        self.pow2(16 - self.precision_bits as i32)
    }

    /// Orbit points closer than this to a box endpoint are ambiguous.
    pub fn boundary_tolerance(&self) -> Float {
        self.pow2(-(self.precision_bits as i32) / 4)
    }

    /// Bisection tolerance for a branch of the given width.
    pub fn root_tolerance(&self, width: &Float) -> Float {
        self.pow2(-(self.precision_bits as i32) / 2) * width
    }

    /// Whether the map is in the `b = −3a/2` slice to working precision.
    pub fn is_symmetric(&self) -> bool {
        let twice_b = Float::with_val(self.precision_bits, &self.b * 2);
        let thrice_a = Float::with_val(self.precision_bits, &self.a * 3);
        let diff = Float::with_val(self.precision_bits, &twice_b + &thrice_a).abs();
        diff <= self.value_slack() * Float::with_val(self.precision_bits, self.a.abs_ref())
    }

    pub fn eval(&self, x: &Float) -> Float {
        let mut out = Float::new(self.precision_bits);
        self.eval_into(x, &mut out);
        out
    }

    /// Horner evaluation into `out`, reusing its allocation.
    pub fn eval_into(&self, x: &Float, out: &mut Float) {
        out.assign(&self.k[3] * x);
        *out += &self.k[2];
        *out *= x;
        *out += &self.k[1];
        *out *= x;
        *out += &self.k[0];
    }

    pub fn derivative(&self, x: &Float) -> Float {
        let p = self.precision_bits;
        let mut out = Float::with_val(p, &self.k[3] * x) * 3;
        out += Float::with_val(p, &self.k[2] * 2);
        out *= x;
        out += &self.k[1];
        out
    }

    /// `f^n(x)`.
    pub fn iterate(&self, x: &Float, n: u64) -> Float {
        let mut cur = Float::with_val(self.precision_bits, x);
        let mut next = Float::new(self.precision_bits);
        for _ in 0..n {
            self.eval_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Whether `c` is a local maximum (it is then `d` that is a local minimum).
    pub fn c_is_max(&self) -> bool {
        self.orient[0] > 0
    }

    pub fn lap_of(&self, x: &Float) -> Lap {
        if *x < self.c {
            Lap::Left
        } else if *x < self.d {
            Lap::Middle
        } else {
            Lap::Right
        }
    }

    pub fn lap_interval(&self, lap: Lap) -> Interval {
        let p = self.precision_bits;
        match lap {
            Lap::Left => Interval::new(Float::with_val(p, 0), self.c.clone()),
            Lap::Middle => Interval::new(self.c.clone(), self.d.clone()),
            Lap::Right => Interval::new(self.d.clone(), Float::with_val(p, 1)),
        }
    }

    /// +1 where `f` increases on the lap, -1 where it decreases.
    pub fn lap_orientation(&self, lap: Lap) -> i8 {
        self.orient[lap.index()]
    }

    /// Orientation of `f` at a point off the turning points.
    pub fn orientation_at(&self, x: &Float) -> i8 {
        self.lap_orientation(self.lap_of(x))
    }

    /// The unique `x` in `branch` with `f(x) = y`, by bisection.
    pub fn monotone_preimage(&self, y: &Float, branch: &Interval) -> Result<Float, PolyError> {
        let tol = self.root_tolerance(&branch.width());
        self.monotone_preimage_tol(y, branch, &tol)
    }

    /// As `monotone_preimage` but bisects until the bracket can no longer
    /// shrink at working precision.
    pub fn sharp_preimage(&self, y: &Float, branch: &Interval) -> Result<Float, PolyError> {
        let tol = self.zero();
        self.monotone_preimage_tol(y, branch, &tol)
    }

    pub fn monotone_preimage_tol(&self, y: &Float, branch: &Interval, tol: &Float) -> Result<Float, PolyError> {
        if branch.contains(&self.c) || branch.contains(&self.d) {
            return Err(PolyError::BranchNotMonotone);
        }
        let p = self.precision_bits;
        let width = branch.width();
        if width < self.exhaustion_width() {
            return Err(PolyError::PrecisionExhausted);
        }
        let f_lo = self.eval(&branch.lo);
        let f_hi = self.eval(&branch.hi);
        let increasing = f_lo <= f_hi;
        let (min, max) = if increasing { (&f_lo, &f_hi) } else { (&f_hi, &f_lo) };
        if *y < *min || *y > *max {
            return Err(PolyError::NoPreimage);
        }
        if *y == f_lo {
            return Ok(branch.lo.clone());
        }
        if *y == f_hi {
            return Ok(branch.hi.clone());
        }
        let mut lo = Float::with_val(p, &branch.lo);
        let mut hi = Float::with_val(p, &branch.hi);
        let mut mid = Float::new(p);
        let mut val = Float::new(p);
        let mut gap = Float::new(p);
        loop {
            gap.assign(&hi - &lo);
            if gap <= *tol {
                break;
            }
            mid.assign(&lo + &hi);
            mid >>= 1;
            if mid <= lo || mid >= hi {
                break;
            }
            self.eval_into(&mid, &mut val);
            if (val < *y) == increasing {
                lo.assign(&mid);
            } else {
                hi.assign(&mid);
            }
        }
        mid.assign(&lo + &hi);
        mid >>= 1;
        Ok(mid)
    }

    /// The fixed point of `f` in `region`, by bisection on `f(x) − x`.
    pub fn fixed_point_in(&self, region: &Interval) -> Result<Float, PolyError> {
        let p = self.precision_bits;
        let width = region.width();
        if width < self.exhaustion_width() {
            return Err(PolyError::PrecisionExhausted);
        }
        let h = |x: &Float| Float::with_val(p, self.eval(x) - x);
        let h_lo = h(&region.lo);
        let h_hi = h(&region.hi);
        if h_lo.is_zero() {
            return Ok(region.lo.clone());
        }
        if h_hi.is_zero() {
            return Ok(region.hi.clone());
        }
        if h_lo.is_sign_negative() == h_hi.is_sign_negative() {
            return Err(PolyError::NoSignChange);
        }
        let lo_negative = h_lo.is_sign_negative();
        let mut lo = region.lo.clone();
        let mut hi = region.hi.clone();
        // run to full precision; pullbacks from p amplify its error
        loop {
            let mid = Float::with_val(p, &lo + &hi) / 2;
            if mid <= lo || mid >= hi {
                break;
            }
            let hm = h(&mid);
            if hm.is_zero() {
                return Ok(mid);
            }
            if hm.is_sign_negative() == lo_negative {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Float::with_val(p, &lo + &hi) / 2)
    }

    /// All fixed points in the open interval `(0,1)`.
    pub fn interior_fixed_points(&self) -> Vec<Float> {
        let p = self.precision_bits;
        // h'(x) = 3k3 x² + 2k2 x + k1 - 1 splits [0,1] into monotone pieces of h
        let qa = Float::with_val(p, &self.k[3] * 3);
        let qb = Float::with_val(p, &self.k[2] * 2);
        let qc = Float::with_val(p, &self.k[1] - 1);
        let mut disc = Float::with_val(p, qb.square_ref());
        disc -= Float::with_val(p, &qa * &qc) * 4u32;
        let mut cuts = vec![Float::with_val(p, 0)];
        if disc > 0 {
            let sq = disc.sqrt();
            let den = Float::with_val(p, &qa * 2);
            let mut rs = [
                (Float::with_val(p, -&qb) - &sq) / &den,
                (Float::with_val(p, -&qb) + &sq) / &den,
            ];
            rs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for r in rs {
                if r > 0 && r < 1 {
                    cuts.push(r);
                }
            }
        }
        cuts.push(Float::with_val(p, 1));
        let edge = self.pow2(-(self.precision_bits as i32) / 2);
        let one_minus = Float::with_val(p, 1 - &edge);
        let mut roots: Vec<Float> = Vec::new();
        for w in cuts.windows(2) {
            let region = Interval::new(w[0].clone(), w[1].clone());
            if let Ok(x) = self.fixed_point_in(&region) {
                if x > edge && x < one_minus && !roots.iter().any(|r| {
                    Float::with_val(p, r - &x).abs() < edge
                }) {
                    roots.push(x);
                }
            }
        }
        roots
    }

    /// Every solution of `f(x) = y` in `[0,1]`, one per lap at most, sorted.
    pub fn preimages(&self, y: &Float) -> Vec<Float> {
        let mut out = Vec::new();
        for lap in [Lap::Left, Lap::Middle, Lap::Right] {
            if let Ok(x) = self.sharp_preimage(y, &self.lap_interval(lap)) {
                out.push(x);
            }
        }
        out.sort_by(|x, y| x.partial_cmp(y).unwrap());
        out
    }
}
