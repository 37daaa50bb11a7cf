//! Locating parameters in the symmetric slice `b = −3a/2` whose nest realizes
//! a prescribed combinatorial prefix.

use std::cmp::Ordering;

use rug::Float;
use thiserror::Error;

use crate::combinatorics::{admissible_key, check_admissible, CombSequence, Violation};
use crate::interval::Interval;
use crate::nest::{build_nest, first_return, initial_boxes, Nest, NestOptions, NestStatus};
use crate::polynomial::{make_symmetric_cubic, CubicMap, FamilySign};

pub const MAX_SOLVER_PRECISION: u32 = 4096;
pub const DEFAULT_BUDGET: u64 = 20_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("target is not admissible: {0}")]
    NotAdmissible(Violation),
    #[error("depth {depth} exceeds the target length {len}")]
    DepthExceedsTarget { depth: usize, len: usize },
    #[error("no parameter found: {0}")]
    NotFound(String),
    #[error("outcome carries no direction: {0}")]
    Incomparable(String),
}

/// Extraction that stopped early keeps what it found.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtractFailure {
    pub partial: CombSequence,
    pub status: NestStatus,
    pub message: String,
}

/// Builds the nest to `depth + 1` levels and reads off `depth` triples.
pub fn extract_prefix(map: &CubicMap, depth: usize) -> Result<CombSequence, ExtractFailure> {
    let prec = map.precision_bits();
    let mut options = NestOptions::for_precision(prec);
    options.depth_cap = options.depth_cap.max(depth + 1);
    let nest = match build_nest(map.clone(), depth + 1, options) {
        Ok(n) => n,
        Err(e) => {
            return Err(ExtractFailure {
                partial: CombSequence { triples: vec![], origin: crate::combinatorics::Origin::Extracted },
                status: NestStatus::NotInClassG,
                message: e.to_string(),
            })
        }
    };
    extract_from_nest(&nest, depth)
}

pub fn extract_from_nest(nest: &Nest, depth: usize) -> Result<CombSequence, ExtractFailure> {
    let seq = nest.combinatorial_sequence();
    if seq.len() >= depth {
        Ok(seq.prefix(depth))
    } else {
        Err(ExtractFailure {
            partial: seq,
            status: nest.status,
            message: nest.failure.clone().unwrap_or_else(|| "nest too shallow".into()),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Match,
    Before,
    After,
}

/// Orders an extracted sequence against the target. At the first differing
/// triple the key is `(r under ≺, t under ≺, subtype rank)`. A partial
/// extraction that agrees as far as it goes sorts before the target on a
/// central return and after it when the map leaves the class.
pub fn compare_realized(
    target: &CombSequence,
    extracted: &Result<CombSequence, ExtractFailure>,
) -> Result<Verdict, SolveError> {
    let seq = match extracted {
        Ok(s) => s,
        Err(f) => &f.partial,
    };
    for (want, got) in target.triples.iter().zip(&seq.triples) {
        let key = |tr: &crate::combinatorics::CombTriple| {
            let rank = tr.subtype().map(|s| s.rank()).unwrap_or(tr.letter as u8 * 4);
            (admissible_key(tr.r), admissible_key(tr.t), rank)
        };
        let same_type = want.letter == got.letter
            && want.i == got.i
            && (want.j.is_none() || want.j == got.j);
        if same_type && want.r == got.r && want.t == got.t {
            continue;
        }
        return Ok(match key(got).cmp(&key(want)) {
            Ordering::Less => Verdict::Before,
            Ordering::Greater => Verdict::After,
            Ordering::Equal => Verdict::Before,
        });
    }
    if seq.len() >= target.len() {
        return Ok(Verdict::Match);
    }
    match extracted {
        Ok(_) => Err(SolveError::Incomparable("extraction shorter than target".into())),
        Err(f) => match f.status {
            NestStatus::CentralReturn => Ok(Verdict::Before),
            NestStatus::NotInClassG => Ok(Verdict::After),
            NestStatus::PrecisionExhausted | NestStatus::Ok => {
                Err(SolveError::Incomparable(f.message.clone()))
            }
        },
    }
}

/// Outcome of the geometric comparator at one parameter: either the level
/// at which the orbit of `c` first deviates from the target, with the side
/// of the deviation, or a match to full depth.
#[derive(Clone, Debug, PartialEq)]
pub enum Located {
    Deviates { level: usize, side: i8 },
    Matches,
}

fn side(x: &Float, lo: &Float, hi: &Float) -> i8 {
    if x <= lo {
        -1
    } else if x >= hi {
        1
    } else {
        0
    }
}

/// Level-0 test: `f(c)` in the outer gap, `f²(c)` in a box on the side of
/// its turning point fixed by the extremum type, `f³(c)` in a box.
fn compare_level0(map: &CubicMap, i0: &Interval, j0: &Interval) -> i8 {
    let sep = &i0.hi;
    let one = map.float(1.0);
    let zero = map.zero();
    let v1 = map.eval(map.c());
    let s = if v1 > *sep { side(&v1, &j0.hi, &one) } else { side(&v1, &zero, &i0.lo) };
    if s != 0 {
        return s;
    }
    let mut sigma = map.orientation_at(&v1);
    let v2 = map.eval(&v1);
    let (bx, cr) = if v2 > *sep { (j0, map.d()) } else { (i0, map.c()) };
    let s = side(&v2, &bx.lo, &bx.hi);
    if s != 0 {
        return s * sigma;
    }
    let jt = if map.c_is_max() { sigma } else { -sigma };
    let s = if jt > 0 { side(&v2, cr, &bx.hi) } else { side(&v2, &bx.lo, cr) };
    if s != 0 {
        return s * sigma;
    }
    sigma *= map.orientation_at(&v2);
    let v3 = map.eval(&v2);
    let bx = if v3 > *sep { j0 } else { i0 };
    side(&v3, &bx.lo, &bx.hi) * sigma
}

/// Test of the step from level `n` to `n+1` against `(r, t)`, following the
/// `gₙ`-orbit of `c`.
fn compare_level(nest: &Nest, n: usize, r: u32, t: u32) -> Result<i8, String> {
    let map = &nest.map;
    let lvl = &nest.levels[n];
    let prev = &nest.levels[n - 1];
    let sep = &nest.levels[0].i.hi;
    let (cd, dd) = (lvl.c_dom.as_ref().unwrap(), lvl.d_dom.as_ref().unwrap());
    let noncentral = |x: &Float| if x < sep { cd } else { dd };
    let central = |x: &Float| if x < sep { &lvl.i } else { &lvl.j };
    let crit = |x: &Float| if x < sep { map.c() } else { map.d() };
    let boxes = [&prev.i, &prev.j];
    let g = |x: &Float| {
        first_return(map, x, &boxes, nest.options.max_iter, None)
            .map(|ret| (ret.point, ret.orientation))
            .map_err(|e| e.to_string())
    };
    let (mut v, _) = g(map.c())?;
    let mut sigma = 1i8;
    for k in 1..r {
        let (nv, o) = g(&v)?;
        v = nv;
        sigma *= o;
        if k + 1 < r {
            let dom = noncentral(&v);
            let s = side(&v, &dom.lo, &dom.hi);
            if s != 0 {
                return Ok(s * sigma);
            }
        }
    }
    let bx = central(&v);
    let s = side(&v, &bx.lo, &bx.hi);
    if s != 0 {
        return Ok(s * sigma);
    }
    let j = lvl.subtype.map(|s| s.j.as_i8()).unwrap_or(1);
    let s = if j * sigma > 0 { side(&v, crit(&v), &bx.hi) } else { side(&v, &bx.lo, crit(&v)) };
    if s != 0 {
        return Ok(s * sigma);
    }
    let mut w = v;
    for k in 1..=t {
        let (nw, o) = g(&w)?;
        w = nw;
        sigma *= o;
        let dom = if k < t { noncentral(&w) } else { central(&w) };
        let s = side(&w, &dom.lo, &dom.hi);
        if s != 0 {
            return Ok(s * sigma);
        }
    }
    Ok(0)
}

fn solver_options(prec: u32, depth: usize) -> NestOptions {
    let mut o = NestOptions::for_precision(prec);
    o.boundary_check = false;
    o.depth_cap = o.depth_cap.max(depth + 1);
    o
}

/// Geometric comparator on an already built map.
pub fn locate_map(map: &CubicMap, pairs: &[(u32, u32)]) -> Result<Located, SolveError> {
    let depth = pairs.len();
    let (i0, j0) = initial_boxes(map).map_err(|e| SolveError::Incomparable(e.to_string()))?;
    let s = compare_level0(map, &i0, &j0);
    if s != 0 {
        return Ok(Located::Deviates { level: 0, side: s });
    }
    let mut nest = Nest::new(map.clone(), solver_options(map.precision_bits(), depth))
        .map_err(|e| SolveError::Incomparable(e.to_string()))?;
    nest.extend();
    for n in 1..=depth {
        if nest.status != NestStatus::Ok {
            return Err(SolveError::Incomparable(format!(
                "level {} not built: {}",
                nest.depth() + 1,
                nest.failure.clone().unwrap_or_default()
            )));
        }
        let (r, t) = pairs[n - 1];
        let s = compare_level(&nest, n, r, t).map_err(SolveError::Incomparable)?;
        if s != 0 {
            return Ok(Located::Deviates { level: n, side: s });
        }
        nest.extend();
    }
    if nest.status != NestStatus::Ok {
        return Err(SolveError::Incomparable(nest.failure.clone().unwrap_or_default()));
    }
    Ok(Located::Matches)
}

pub fn locate(
    family: FamilySign,
    a: &Float,
    pairs: &[(u32, u32)],
    prec: u32,
) -> Result<Located, SolveError> {
    let map = make_symmetric_cubic(family, a, prec)
        .map_err(|e| SolveError::Incomparable(e.to_string()))?;
    locate_map(&map, pairs)
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    /// Parameters whose comparator verdict is a match, endpoints located to
    /// the tolerance.
    pub parameter_interval: (Float, Float),
    pub parameter: Float,
    pub achieved_depth: usize,
    pub extracted: CombSequence,
    pub evaluations: u64,
    pub precision_bits: u32,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub family: FamilySign,
    pub a_range: (Float, Float),
    pub tolerance: Float,
    pub precision_bits: u32,
    pub budget: u64,
}

impl SolveOptions {
    pub fn symmetric_positive(prec: u32) -> Self {
        SolveOptions {
            family: FamilySign::Positive,
            a_range: default_a_range(FamilySign::Positive),
            tolerance: Float::with_val(prec, 1e-30),
            precision_bits: prec,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// The bimodal part of the symmetric slice, found by a coarse scan at 64
/// bits over `a ∈ [−64, 64]` and returned slightly inside its ends.
pub fn default_a_range(family: FamilySign) -> (Float, Float) {
    let prec = 64;
    let mut first: Option<f64> = None;
    let mut last: Option<f64> = None;
    let mut k = -64.0f64;
    while k <= 64.0 {
        if k != 0.0 && make_symmetric_cubic(family, &Float::with_val(prec, k), prec).is_ok() {
            if first.is_none() {
                first = Some(k);
            }
            last = Some(k);
        } else if first.is_some() && last.is_some() && k > 0.0 {
            break;
        }
        k += 0.125;
    }
    let lo = first.unwrap_or(4.0);
    let hi = last.unwrap_or(16.0);
    (Float::with_val(prec, lo), Float::with_val(prec, hi))
}

#[derive(Clone, Debug)]
struct Point {
    a: Float,
    level: usize,
    side: i8,
}

impl Point {
    fn matched(&self, depth: usize) -> bool {
        self.level > depth
    }
}

enum Stop {
    Found(Point),
    Incomparable(String),
    NotFound(String),
}

struct Search<'a> {
    family: FamilySign,
    pairs: &'a [(u32, u32)],
    prec: u32,
    evaluations: u64,
    budget: u64,
    /// Brackets narrower than this give up for lack of precision.
    floor: Float,
    seen: Vec<Point>,
}

impl<'a> Search<'a> {
    fn depth(&self) -> usize {
        self.pairs.len()
    }

    fn eval(&mut self, a: &Float) -> Result<Point, Stop> {
        if self.evaluations >= self.budget {
            return Err(Stop::NotFound(format!("budget of {} evaluations exhausted", self.budget)));
        }
        self.evaluations += 1;
        let a = Float::with_val(self.prec, a);
        let pt = match locate(self.family, &a, self.pairs, self.prec) {
            Ok(Located::Deviates { level, side }) => Point { a, level, side },
            Ok(Located::Matches) => Point { a, level: self.depth() + 1, side: 0 },
            Err(e) => return Err(Stop::Incomparable(e.to_string())),
        };
        self.seen.push(pt.clone());
        if pt.matched(self.depth()) {
            return Err(Stop::Found(pt));
        }
        Ok(pt)
    }

    fn mid(&self, x: &Point, y: &Point) -> Float {
        Float::with_val(self.prec, &x.a + &y.a) / 2u32
    }

    fn too_narrow(&self, x: &Point, y: &Point) -> bool {
        Float::with_val(self.prec, &x.a - &y.a).abs() < self.floor
    }

    /// `x`, `y` at the same level with opposite sides.
    fn bisect(&mut self, mut x: Point, mut y: Point) -> Stop {
        loop {
            if self.too_narrow(&x, &y) {
                return Stop::Incomparable(format!("bracket at level {} collapsed", x.level));
            }
            let m = match self.eval(&self.mid(&x, &y)) {
                Ok(m) => m,
                Err(stop) => return stop,
            };
            match m.level.cmp(&x.level) {
                Ordering::Equal if m.side == x.side => x = m,
                Ordering::Equal => y = m,
                Ordering::Greater => return self.pivot(x, y, m),
                Ordering::Less => return self.grid(x, y, 0),
            }
        }
    }

    /// `p` lies deeper than the search so far. Looks on both sides of it,
    /// one evaluation at a time, for a point at the level of `p` with the
    /// opposite side.
    fn pivot(&mut self, left: Point, right: Point, p: Point) -> Stop {
        // (outer, pivot) on each side, `None` once a side collapses
        let mut sides: [Option<(Point, Point)>; 2] = [Some((left, p.clone())), Some((right, p))];
        let mut turn = 0usize;
        loop {
            if sides.iter().all(|s| s.is_none()) {
                return Stop::Incomparable("pivot search collapsed on both sides".into());
            }
            turn = 1 - turn;
            let Some((outer, piv)) = sides[turn].take() else { continue };
            if self.too_narrow(&outer, &piv) {
                continue;
            }
            let m = match self.eval(&self.mid(&outer, &piv)) {
                Ok(m) => m,
                Err(stop) => return stop,
            };
            let level = piv.level;
            sides[turn] = match m.level.cmp(&level) {
                Ordering::Less => Some((m, piv)),
                Ordering::Equal if m.side == piv.side => Some((outer, m)),
                Ordering::Equal => return self.bisect(m, piv),
                Ordering::Greater => return self.pivot(outer, piv, m),
            };
        }
    }

    /// Splits `[x, y]` into 8 pieces and restarts from the most promising
    /// feature among the grid points.
    fn grid(&mut self, x: Point, y: Point, generation: u32) -> Stop {
        if generation > 6 {
            return Stop::NotFound("grid refinement found no consistent direction".into());
        }
        let (x, y) = if x.a <= y.a { (x, y) } else { (y, x) };
        let width = Float::with_val(self.prec, &y.a - &x.a);
        let mut pts = vec![x];
        for k in 1..8u32 {
            let a = Float::with_val(self.prec, &width * k) / 8u32 + &pts[0].a;
            match self.eval(&a) {
                Ok(p) => pts.push(p),
                Err(stop) => return stop,
            }
        }
        pts.push(y);
        // same-level opposite-side neighbours, deepest first
        let mut best: Option<usize> = None;
        for k in 0..8 {
            let (u, v) = (&pts[k], &pts[k + 1]);
            if u.level == v.level && u.side == -v.side && best.map_or(true, |b| u.level > pts[b].level) {
                best = Some(k);
            }
        }
        let deepest = (0..9).max_by_key(|&k| pts[k].level).unwrap();
        let deep_level = pts[deepest].level;
        if let Some(k) = best {
            if pts[k].level >= deep_level {
                return self.bisect(pts[k].clone(), pts[k + 1].clone());
            }
        }
        if deepest > 0 && deepest < 8 {
            let (l, r) = (&pts[deepest - 1], &pts[deepest + 1]);
            if l.level < deep_level && r.level < deep_level {
                return self.pivot(l.clone(), r.clone(), pts[deepest].clone());
            }
        }
        let k = deepest.clamp(1, 7);
        self.grid(pts[k - 1].clone(), pts[k + 1].clone(), generation + 1)
    }

    /// Boundary of the match region between a matching point and a
    /// non-matching one, to `tol`; returns the matching end.
    fn boundary(&mut self, inside: Float, outside: Float, tol: &Float) -> Result<Float, Stop> {
        let (mut inside, mut outside) = (inside, outside);
        let depth = self.depth();
        while Float::with_val(self.prec, &inside - &outside).abs() > *tol {
            let a = Float::with_val(self.prec, &inside + &outside) / 2u32;
            if a == inside || a == outside {
                break;
            }
            match self.eval(&a) {
                Ok(_) => outside = a,
                Err(Stop::Found(p)) if p.matched(depth) => inside = a,
                Err(stop) => return Err(stop),
            }
        }
        Ok(inside)
    }
}

fn solve_at(
    target: &CombSequence,
    depth: usize,
    options: &SolveOptions,
    prec: u32,
    evaluations: &mut u64,
) -> Result<SolveResult, SolveError> {
    let pairs: Vec<(u32, u32)> = target.pairs()[..depth].to_vec();
    let floor = Float::with_val(prec, 1) << (20 - prec as i32);
    let mut search = Search {
        family: options.family,
        pairs: &pairs,
        prec,
        evaluations: 0,
        budget: options.budget.saturating_sub(*evaluations),
        floor,
        seen: Vec::new(),
    };
    let (lo, hi) = (&options.a_range.0, &options.a_range.1);
    let outcome = (|| {
        let x = match search.eval(lo) {
            Ok(p) => p,
            Err(stop) => return stop,
        };
        let y = match search.eval(hi) {
            Ok(p) => p,
            Err(stop) => return stop,
        };
        if x.level == y.level && x.side == -y.side {
            search.bisect(x, y)
        } else {
            search.grid(x, y, 0)
        }
    })();
    let found = match outcome {
        Stop::Found(p) => p,
        Stop::Incomparable(msg) => {
            *evaluations += search.evaluations;
            return Err(SolveError::Incomparable(msg));
        }
        Stop::NotFound(msg) => {
            *evaluations += search.evaluations;
            return Err(SolveError::NotFound(msg));
        }
    };
    // nearest non-matching evaluated points on either side
    let nearest = |pts: &[Point], below: bool| -> Option<Float> {
        pts.iter()
            .filter(|p| !p.matched(depth) && ((p.a < found.a) == below))
            .map(|p| p.a.clone())
            .min_by(|u, v| {
                let du = Float::with_val(prec, u - &found.a).abs();
                let dv = Float::with_val(prec, v - &found.a).abs();
                du.partial_cmp(&dv).unwrap()
            })
    };
    let below = nearest(&search.seen, true).unwrap_or_else(|| lo.clone());
    let above = nearest(&search.seen, false).unwrap_or_else(|| hi.clone());
    let tol = Float::with_val(prec, &options.tolerance);
    let a_lo = search.boundary(found.a.clone(), below, &tol);
    let a_hi = a_lo.and_then(|a_lo| search.boundary(found.a.clone(), above, &tol).map(|h| (a_lo, h)));
    *evaluations += search.evaluations;
    let (a_lo, a_hi) = match a_hi {
        Ok(v) => v,
        Err(Stop::Incomparable(m)) => return Err(SolveError::Incomparable(m)),
        Err(Stop::NotFound(m)) => return Err(SolveError::NotFound(m)),
        Err(Stop::Found(_)) => unreachable!("boundary search handles matches"),
    };
    let parameter = Float::with_val(prec, &a_lo + &a_hi) / 2u32;
    let map = make_symmetric_cubic(options.family, &parameter, prec)
        .map_err(|e| SolveError::NotFound(e.to_string()))?;
    let extracted = match extract_prefix(&map, depth) {
        Ok(s) => s,
        Err(f) => return Err(SolveError::Incomparable(f.message)),
    };
    if compare_realized(&target.prefix(depth), &Ok(extracted.clone()))? != Verdict::Match {
        return Err(SolveError::NotFound(format!(
            "located parameter realizes a different prefix: {}",
            crate::combinatorics::format_sequence(&extracted, false)
        )));
    }
    Ok(SolveResult {
        parameter_interval: (a_lo, a_hi),
        parameter,
        achieved_depth: depth,
        extracted,
        evaluations: *evaluations,
        precision_bits: prec,
    })
}

/// Searches the symmetric slice for a parameter whose extracted prefix of
/// length `depth` equals the target's. Precision doubles whenever the
/// search runs out of resolution.
pub fn solve(target: &CombSequence, depth: usize, options: &SolveOptions) -> Result<SolveResult, SolveError> {
    check_admissible(target).map_err(SolveError::NotAdmissible)?;
    if depth > target.len() {
        return Err(SolveError::DepthExceedsTarget { depth, len: target.len() });
    }
    if depth == 0 {
        let prec = options.precision_bits;
        let (lo, hi) = (&options.a_range.0, &options.a_range.1);
        return Ok(SolveResult {
            parameter_interval: (Float::with_val(prec, lo), Float::with_val(prec, hi)),
            parameter: Float::with_val(prec, lo + hi) / 2u32,
            achieved_depth: 0,
            extracted: CombSequence { triples: vec![], origin: crate::combinatorics::Origin::Extracted },
            evaluations: 0,
            precision_bits: prec,
        });
    }
    let mut prec = options.precision_bits;
    let mut evaluations = 0u64;
    loop {
        match solve_at(target, depth, options, prec, &mut evaluations) {
            Err(SolveError::Incomparable(msg)) => {
                if prec >= MAX_SOLVER_PRECISION {
                    return Err(SolveError::NotFound(format!("precision cap reached: {msg}")));
                }
                prec = (prec * 2).min(MAX_SOLVER_PRECISION);
            }
            other => return other,
        }
    }
}
