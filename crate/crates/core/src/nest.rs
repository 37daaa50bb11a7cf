//! The twin principal nest `Iⁿ ∋ c`, `Jⁿ ∋ d` with auxiliary domains
//! `Cⁿ`, `Dⁿ`, return times and scaling factors.

use std::fmt;

use rug::Float;
use thiserror::Error;

use crate::combinatorics::{CombSequence, CombTriple, Letter, Origin, Sign, Subtype};
use crate::interval::{union_length, Interval};
use crate::polynomial::{CubicMap, FamilySign, Lap, PolyError};

pub const DEFAULT_MAX_ITER: u64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NestError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("fixed point configuration not supported: {0}")]
    FixedPointConfiguration(String),
    #[error("no return within {0} iterations")]
    NoReturn(u64),
    #[error("orbit came within tolerance of a box endpoint at step {0}")]
    BoundaryHit(u64),
    #[error("pullback meets a turning point at step {0}")]
    NonMonotone(u64),
    #[error("working precision exhausted")]
    PrecisionExhausted,
    #[error("orbit of the center does not reach the target")]
    NotInTarget,
    #[error("pullback is not contained in the ambient interval")]
    OutsideAmbient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NestStatus {
    Ok,
    CentralReturn,
    NotInClassG,
    PrecisionExhausted,
}

impl fmt::Display for NestStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NestStatus::Ok => "ok",
            NestStatus::CentralReturn => "central_return",
            NestStatus::NotInClassG => "not_in_class_G",
            NestStatus::PrecisionExhausted => "precision_exhausted",
        })
    }
}

/// Where the branches of `gₙ` go. Box indices are 0 for `Iⁿ⁻¹`, 1 for `Jⁿ⁻¹`.
#[derive(Clone, Debug, PartialEq)]
pub struct Branches {
    pub i_to: usize,
    pub j_to: usize,
    pub c_to: usize,
    pub d_to: usize,
    /// `gₙ` has a local maximum at `c` (resp. `d`).
    pub c_max: bool,
    pub d_max: bool,
    /// Orientation of `gₙ` on `Cⁿ` and `Dⁿ`.
    pub c_orient: i8,
    pub d_orient: i8,
    /// `gₙ(c)` and `gₙ(d)`.
    pub value_c: Float,
    pub value_d: Float,
    /// Whether the point of `Cⁿ` is `gₙ(c)` (otherwise it is `gₙ(d)`).
    pub c_point_from_c: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NestLevel {
    pub n: usize,
    pub i: Interval,
    pub j: Interval,
    pub c_dom: Option<Interval>,
    pub d_dom: Option<Interval>,
    /// Return time of `c` and `d` to the previous level; 0 at level 0.
    pub s: u64,
    /// Return time of the points of `Cⁿ`, `Dⁿ`; 0 at level 0.
    pub s_hat: u64,
    pub lambda: Option<Float>,
    pub subtype: Option<Subtype>,
    /// `(rₙ, tₙ)`, known once level `n+1` exists.
    pub r: Option<u32>,
    pub t: Option<u32>,
    pub branches: Option<Branches>,
}

#[derive(Clone, Debug)]
pub struct NestOptions {
    pub max_iter: u64,
    pub depth_cap: usize,
    /// Abort on orbit points within the boundary tolerance of a box endpoint.
    pub boundary_check: bool,
}

impl NestOptions {
    pub fn for_precision(prec: u32) -> Self {
        NestOptions {
            max_iter: DEFAULT_MAX_ITER,
            depth_cap: default_depth_cap(prec),
            boundary_check: true,
        }
    }
}

/// 16 levels at 256 bits, scaled linearly with precision.
pub fn default_depth_cap(prec: u32) -> usize {
    ((prec / 16) as usize).max(4)
}

#[derive(Clone, Debug)]
pub struct Nest {
    pub map: CubicMap,
    pub levels: Vec<NestLevel>,
    pub status: NestStatus,
    pub failure: Option<String>,
    pub options: NestOptions,
}

/// A first return: time, box index, landing point and the product of lap
/// orientations along the way.
#[derive(Clone, Debug)]
pub struct Return {
    pub time: u64,
    pub box_index: usize,
    pub point: Float,
    pub orientation: i8,
}

/// Least `k ≥ 1` with `f^k(x)` in one of the boxes. `tol` enables the
/// boundary check.
pub fn first_return(
    map: &CubicMap,
    x: &Float,
    boxes: &[&Interval],
    max_iter: u64,
    tol: Option<&Float>,
) -> Result<Return, NestError> {
    let p = map.precision_bits();
    let padded: Option<Vec<Interval>> = tol.map(|tol| {
        boxes
            .iter()
            .map(|b| {
                Interval::new(Float::with_val(p, &b.lo - tol), Float::with_val(p, &b.hi + tol))
            })
            .collect()
    });
    let mut y = Float::with_val(p, x);
    let mut next = Float::new(p);
    let mut orientation = 1i8;
    for k in 1..=max_iter {
        if y != *map.c() && y != *map.d() {
            orientation *= map.orientation_at(&y);
        }
        map.eval_into(&y, &mut next);
        std::mem::swap(&mut y, &mut next);
        if let (Some(padded), Some(tol)) = (&padded, tol) {
            for (b, pb) in boxes.iter().zip(padded) {
                if pb.contains(&y) && (b.endpoint_distance(&y) < *tol) {
                    return Err(NestError::BoundaryHit(k));
                }
            }
        }
        for (idx, b) in boxes.iter().enumerate() {
            if b.contains(&y) {
                return Ok(Return { time: k, box_index: idx, point: y, orientation });
            }
        }
    }
    Err(NestError::NoReturn(max_iter))
}

/// Return time of `x` to `I ∪ J`, with the standard boundary tolerance.
pub fn first_return_time(
    map: &CubicMap,
    x: &Float,
    boxes: (&Interval, &Interval),
    max_iter: u64,
) -> Result<u64, NestError> {
    let tol = map.boundary_tolerance();
    first_return(map, x, &[boxes.0, boxes.1], max_iter, Some(&tol)).map(|r| r.time)
}

/// `x, f(x), …, f^n(x)`.
pub fn orbit(map: &CubicMap, x: &Float, n: u64) -> Vec<Float> {
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(Float::with_val(map.precision_bits(), x));
    for k in 0..n as usize {
        let y = map.eval(&out[k]);
        out.push(y);
    }
    out
}

fn turning_laps(map: &CubicMap, x: &Float) -> Option<(Lap, Lap, bool)> {
    if x == map.c() {
        Some((Lap::Left, Lap::Middle, map.c_is_max()))
    } else if x == map.d() {
        Some((Lap::Middle, Lap::Right, !map.c_is_max()))
    } else {
        None
    }
}

/// Pulls `target` back along a stored orbit segment. A fold is allowed only
/// at step 0 and only when the orbit starts at a turning point.
fn pullback_orbit(map: &CubicMap, orbit: &[Float], target: &Interval) -> Result<Interval, NestError> {
    let time = orbit.len() - 1;
    if !target.contains_closed(&orbit[time]) {
        return Err(NestError::NotInTarget);
    }
    let floor = map.exhaustion_width();
    let pre = |y: &Float, lap: Lap, step: usize| {
        map.sharp_preimage(y, &map.lap_interval(lap)).map_err(|e| match e {
            PolyError::NoPreimage | PolyError::BranchNotMonotone => NestError::NonMonotone(step as u64),
            other => NestError::Poly(other),
        })
    };
    let mut u = target.clone();
    for step in (0..time).rev() {
        let x = &orbit[step];
        u = match turning_laps(map, x) {
            Some((left, right, is_max)) if step == 0 => {
                let e = if is_max { &u.lo } else { &u.hi };
                Interval::new(pre(e, left, step)?, pre(e, right, step)?)
            }
            Some(_) => return Err(NestError::NonMonotone(step as u64)),
            None => {
                let lap = map.lap_of(x);
                Interval::new(pre(&u.lo, lap, step)?, pre(&u.hi, lap, step)?)
            }
        };
        if u.width() < floor {
            return Err(NestError::PrecisionExhausted);
        }
    }
    Ok(u)
}

/// The component of `f^{-time}(target)` containing `center`, required to
/// lie in `ambient`.
pub fn pullback_domain(
    map: &CubicMap,
    center: &Float,
    target: &Interval,
    time: u64,
    ambient: &Interval,
) -> Result<Interval, NestError> {
    let orb = orbit(map, center, time);
    let dom = pullback_orbit(map, &orb, target)?;
    if !ambient.contains_interval(&dom) {
        return Err(NestError::OutsideAmbient);
    }
    Ok(dom)
}

/// Image of an interval under `f`, accounting for turning points inside.
pub fn forward_image(map: &CubicMap, iv: &Interval) -> Interval {
    let mut lo = map.eval(&iv.lo);
    let mut hi = map.eval(&iv.hi);
    if lo > hi {
        std::mem::swap(&mut lo, &mut hi);
    }
    for t in [map.c(), map.d()] {
        if iv.contains(t) {
            let v = map.eval(t);
            if v < lo {
                lo = v;
            } else if v > hi {
                hi = v;
            }
        }
    }
    Interval { lo, hi }
}

/// `(I⁰, J⁰)` built from the fixed point between the turning points and its
/// preimages.
pub fn initial_boxes(map: &CubicMap) -> Result<(Interval, Interval), NestError> {
    let p = map.precision_bits();
    let fixed = map.interior_fixed_points();
    let between: Vec<&Float> = fixed.iter().filter(|x| *x > map.c() && *x < map.d()).collect();
    let near = map.pow2(-(p as i32) / 2);
    let others_of = |fp: &Float| -> Vec<Float> {
        let mut v: Vec<Float> = map
            .preimages(fp)
            .into_iter()
            .filter(|x| Float::with_val(p, x - fp).abs() > near)
            .collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    };
    let (fp, p1, p2) = if map.family_sign() == FamilySign::Positive || fixed.len() == 3 {
        // a fixed point between the turning points with preimages on the
        // outer laps; the one nearest the middle if there are several
        let mid = Float::with_val(p, map.c() + map.d()) / 2u32;
        let mut best: Option<(Float, Float, Float, Float)> = None;
        for fp in &between {
            let o = others_of(fp);
            if o.len() == 2 && o[0] < *map.c() && o[1] > *map.d() {
                let dist = Float::with_val(p, *fp - &mid).abs();
                if best.as_ref().map_or(true, |b| dist < b.0) {
                    best = Some((dist, (*fp).clone(), o[0].clone(), o[1].clone()));
                }
            }
        }
        match best {
            Some((_, fp, p1, p2)) => (fp, p1, p2),
            None => {
                return Err(NestError::FixedPointConfiguration(format!(
                    "no fixed point between the turning points with preimages on both outer laps ({} candidates)",
                    between.len()
                )))
            }
        }
    } else if fixed.len() == 1 {
        let fp = fixed[0].clone();
        let o = others_of(&fp);
        if o.len() != 2 {
            return Err(NestError::FixedPointConfiguration(
                "the fixed point is its own only preimage".into(),
            ));
        }
        (fp, o[0].clone(), o[1].clone())
    } else {
        return Err(NestError::FixedPointConfiguration(format!(
            "{} interior fixed points, {} between the turning points",
            fixed.len(),
            between.len()
        )));
    };
    let (i0, j0) = if fp < p1 {
        (Interval::new(fp.clone(), p1.clone()), Interval::new(p1, p2))
    } else if fp > p2 {
        (Interval::new(p1, p2.clone()), Interval::new(p2, fp))
    } else {
        (Interval::new(p1, fp.clone()), Interval::new(fp, p2))
    };
    // label by membership rather than by case
    let c = map.c();
    let d = map.d();
    if i0.contains(c) && j0.contains(d) {
        Ok((i0, j0))
    } else if j0.contains(c) && i0.contains(d) {
        Ok((j0, i0))
    } else {
        Err(NestError::FixedPointConfiguration(
            "turning points do not lie in distinct boxes".into(),
        ))
    }
}

struct LevelFailure {
    status: NestStatus,
    message: String,
}

impl From<NestError> for LevelFailure {
    fn from(e: NestError) -> Self {
        let status = match e {
            NestError::BoundaryHit(_)
            | NestError::PrecisionExhausted
            | NestError::Poly(PolyError::PrecisionExhausted) => NestStatus::PrecisionExhausted,
            _ => NestStatus::NotInClassG,
        };
        LevelFailure { status, message: e.to_string() }
    }
}

fn fail(status: NestStatus, message: impl Into<String>) -> LevelFailure {
    LevelFailure { status, message: message.into() }
}

fn not_g(message: impl Into<String>) -> LevelFailure {
    fail(NestStatus::NotInClassG, message)
}

fn orientation_product(map: &CubicMap, points: &[Float]) -> i8 {
    points.iter().map(|x| map.orientation_at(x)).product()
}

fn in_either(x: &Float, a: &Interval, b: &Interval) -> bool {
    a.contains(x) || b.contains(x)
}

/// Whether `target` is contained in the union of two intervals.
fn covered(target: &Interval, a: &Interval, b: &Interval) -> bool {
    if a.contains_interval(target) || b.contains_interval(target) {
        return true;
    }
    (a.lo <= b.hi && b.lo <= a.hi) && a.hull(b).contains_interval(target)
}

/// Number of visits of the orbit of `x` (times `1..=steps`) to `outer`; every
/// visit before the last must lie in `mid`, the last in `inner`.
fn count_visits(
    map: &CubicMap,
    x: &Float,
    steps: u64,
    outer: [&Interval; 2],
    mid: [&Interval; 2],
    inner: [&Interval; 2],
) -> Result<u32, LevelFailure> {
    let p = map.precision_bits();
    let mut y = Float::with_val(p, x);
    let mut next = Float::new(p);
    let mut count = 0u32;
    for k in 1..=steps {
        map.eval_into(&y, &mut next);
        std::mem::swap(&mut y, &mut next);
        if in_either(&y, outer[0], outer[1]) {
            count += 1;
            if k < steps && !in_either(&y, mid[0], mid[1]) {
                return Err(not_g(format!("intermediate return at step {k} misses the auxiliary domains")));
            }
        }
    }
    if !in_either(&y, inner[0], inner[1]) {
        return Err(not_g("final return misses the current boxes"));
    }
    Ok(count)
}

impl Nest {
    /// Level 0 only.
    pub fn new(map: CubicMap, options: NestOptions) -> Result<Nest, NestError> {
        let (i, j) = initial_boxes(&map)?;
        let level0 = NestLevel {
            n: 0,
            i,
            j,
            c_dom: None,
            d_dom: None,
            s: 0,
            s_hat: 0,
            lambda: None,
            subtype: None,
            r: None,
            t: None,
            branches: None,
        };
        Ok(Nest { map, levels: vec![level0], status: NestStatus::Ok, failure: None, options })
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn last(&self) -> &NestLevel {
        self.levels.last().unwrap()
    }

    /// Appends the next level or flips the status.
    pub fn extend(&mut self) {
        if self.status != NestStatus::Ok {
            return;
        }
        if self.depth() >= self.options.depth_cap {
            self.status = NestStatus::PrecisionExhausted;
            self.failure = Some(format!("depth cap {} reached", self.options.depth_cap));
            return;
        }
        match self.next_level() {
            Ok((level, rt)) => {
                if let Some((r, t)) = rt {
                    let n = self.depth();
                    self.levels[n].r = Some(r);
                    self.levels[n].t = Some(t);
                }
                self.levels.push(level);
            }
            Err(f) => {
                self.status = f.status;
                self.failure = Some(f.message);
            }
        }
    }

    fn next_level(&self) -> Result<(NestLevel, Option<(u32, u32)>), LevelFailure> {
        let map = &self.map;
        let p = map.precision_bits();
        let cur = self.last();
        let n = cur.n;
        let boxes = [&cur.i, &cur.j];
        let tol = map.boundary_tolerance();
        let tol = self.options.boundary_check.then_some(&tol);
        let max_iter = self.options.max_iter;

        let rc = first_return(map, map.c(), &boxes, max_iter, tol)?;
        let rd = first_return(map, map.d(), &boxes, max_iter, tol)?;
        if rc.time != rd.time {
            return Err(not_g(format!("return times of c and d differ ({} vs {})", rc.time, rd.time)));
        }
        let s = rc.time;
        let orbit_c = orbit(map, map.c(), s);
        let orbit_d = orbit(map, map.d(), s);
        let i_next = pullback_orbit(map, &orbit_c, boxes[rc.box_index])?;
        let j_next = pullback_orbit(map, &orbit_d, boxes[rd.box_index])?;
        if !(cur.i.contains_interval(&i_next) && i_next != cur.i && cur.j.contains_interval(&j_next) && j_next != cur.j) {
            return Err(not_g("new boxes are not strictly nested"));
        }
        if in_either(&rc.point, &i_next, &j_next) || in_either(&rd.point, &i_next, &j_next) {
            return Err(fail(NestStatus::CentralReturn, "a critical point returns centrally"));
        }

        let (cp, dp, c_point_from_c) = if cur.i.contains(&rc.point) && cur.j.contains(&rd.point) {
            (&rc.point, &rd.point, true)
        } else if cur.i.contains(&rd.point) && cur.j.contains(&rc.point) {
            (&rd.point, &rc.point, false)
        } else {
            return Err(not_g("critical returns do not split between the boxes"));
        };
        let rcp = first_return(map, cp, &boxes, max_iter, tol)?;
        let rdp = first_return(map, dp, &boxes, max_iter, tol)?;
        if rcp.time != rdp.time {
            return Err(not_g("return times of the auxiliary domains differ"));
        }
        let s_hat = rcp.time;
        let c_dom = pullback_orbit(map, &orbit(map, cp, s_hat), boxes[rcp.box_index])?;
        let d_dom = pullback_orbit(map, &orbit(map, dp, s_hat), boxes[rdp.box_index])?;
        if !cur.i.contains_interval(&c_dom) || c_dom.intersects(&i_next) {
            return Err(not_g("auxiliary domain C misplaced"));
        }
        if !cur.j.contains_interval(&d_dom) || d_dom.intersects(&j_next) {
            return Err(not_g("auxiliary domain D misplaced"));
        }

        let letter = match (rcp.box_index, rc.box_index) {
            (1, 1) => Letter::A,
            (1, 0) => Letter::B,
            (0, 1) => Letter::C,
            _ => Letter::D,
        };
        let c_max = map.c_is_max() == (orientation_product(map, &orbit_c[1..s as usize]) > 0);
        let d_max = (!map.c_is_max()) == (orientation_product(map, &orbit_d[1..s as usize]) > 0);
        let subtype = Subtype::new(
            letter,
            Sign::from_i8(rcp.orientation),
            if c_max { Sign::Plus } else { Sign::Minus },
        );

        // covering: gₙ₊₁(Iⁿ⁺¹ ∪ Jⁿ⁺¹) ⊃ Iⁿ⁺¹ ∪ Jⁿ⁺¹
        let image = |target: &Interval, value: &Float, is_max: bool| {
            if is_max {
                Interval::new(target.lo.clone(), value.clone())
            } else {
                Interval::new(value.clone(), target.hi.clone())
            }
        };
        let img_i = image(boxes[rc.box_index], &rc.point, c_max);
        let img_j = image(boxes[rd.box_index], &rd.point, d_max);
        if !covered(&i_next, &img_i, &img_j) || !covered(&j_next, &img_i, &img_j) {
            return Err(not_g("covering condition fails"));
        }

        let ratio_i = Float::with_val(p, i_next.width() / cur.i.width());
        let ratio_j = Float::with_val(p, j_next.width() / cur.j.width());
        let lambda = if ratio_i > ratio_j { ratio_i } else { ratio_j };

        let rt = if n >= 1 {
            let prev = &self.levels[n - 1];
            let (cd, dd) = (cur.c_dom.as_ref().unwrap(), cur.d_dom.as_ref().unwrap());
            let outer = [&prev.i, &prev.j];
            let r = count_visits(map, map.c(), s, outer, [cd, dd], boxes)?;
            let t = count_visits(map, cp, s_hat, outer, [cd, dd], boxes)?;
            if r < 2 || t < 1 {
                return Err(not_g("degenerate inducing step"));
            }
            let s_pred = cur.s + (r as u64 - 1) * cur.s_hat;
            let sh_pred = cur.s + (t as u64 - 1) * cur.s_hat;
            if s_pred != s || sh_pred != s_hat {
                return Err(not_g("counted return times disagree with the recursion"));
            }
            Some((r, t))
        } else {
            None
        };

        let branches = Branches {
            i_to: rc.box_index,
            j_to: rd.box_index,
            c_to: if c_point_from_c { rcp.box_index } else { rdp.box_index },
            d_to: if c_point_from_c { rdp.box_index } else { rcp.box_index },
            c_max,
            d_max,
            c_orient: rcp.orientation,
            d_orient: rdp.orientation,
            value_c: rc.point.clone(),
            value_d: rd.point.clone(),
            c_point_from_c,
        };
        // the C-point's own box index is what the letter uses
        let branches = Branches { c_to: rcp.box_index, d_to: rdp.box_index, ..branches };

        let level = NestLevel {
            n: n + 1,
            i: i_next,
            j: j_next,
            c_dom: Some(c_dom),
            d_dom: Some(d_dom),
            s,
            s_hat,
            lambda: Some(lambda),
            subtype: Some(subtype),
            r: None,
            t: None,
            branches: Some(branches),
        };
        Ok((level, rt))
    }

    /// The triples `(θₙ, rₙ, tₙ)` for every level whose step is known.
    pub fn combinatorial_sequence(&self) -> CombSequence {
        let triples = self.levels[1..]
            .iter()
            .map_while(|l| match (l.subtype, l.r, l.t) {
                (Some(s), Some(r), Some(t)) => Some(CombTriple::with_subtype(s, r, t)),
                _ => None,
            })
            .collect();
        CombSequence { triples, origin: Origin::Extracted }
    }

    /// Length of the level-`k` cover: forward images of `Iᵏ`, `Jᵏ` up to
    /// time `Sₖ − 1` and of `Cᵏ`, `Dᵏ` up to time `Ŝₖ − 1`.
    pub fn cover_length(&self, k: usize) -> Float {
        let p = self.map.precision_bits();
        let lvl = &self.levels[k];
        let mut parts = Vec::new();
        let mut push_orbit = |start: &Interval, steps: u64| {
            let mut cur = start.clone();
            for _ in 0..steps {
                let next = forward_image(&self.map, &cur);
                parts.push(std::mem::replace(&mut cur, next));
            }
        };
        push_orbit(&lvl.i, lvl.s);
        push_orbit(&lvl.j, lvl.s);
        if let (Some(c), Some(d)) = (&lvl.c_dom, &lvl.d_dom) {
            push_orbit(c, lvl.s_hat);
            push_orbit(d, lvl.s_hat);
        }
        union_length(&parts, p)
    }

    /// Hausdorff distance between `Jⁿ` and `1 − Iⁿ` per level.
    pub fn mirror_distances(&self) -> Vec<Float> {
        self.levels.iter().map(|l| l.j.hausdorff(&l.i.mirror())).collect()
    }
}

/// Builds the nest down to `depth` levels below level 0, stopping early on
/// any status change.
pub fn build_nest(map: CubicMap, depth: usize, options: NestOptions) -> Result<Nest, NestError> {
    let mut nest = Nest::new(map, options)?;
    while nest.depth() < depth && nest.status == NestStatus::Ok {
        nest.extend();
    }
    Ok(nest)
}

pub fn extend_nest(mut nest: Nest) -> Nest {
    nest.extend();
    nest
}

#[derive(Clone, Debug)]
pub struct ScalingRow {
    pub n: usize,
    pub width_i: Float,
    pub width_j: Float,
    pub lambda: Option<Float>,
}

pub fn scaling_report(nest: &Nest) -> Vec<ScalingRow> {
    nest.levels
        .iter()
        .map(|l| ScalingRow {
            n: l.n,
            width_i: l.i.width(),
            width_j: l.j.width(),
            lambda: l.lambda.clone(),
        })
        .collect()
}

/// Least-squares slope of `ln λₙ` against `n`.
pub fn log_lambda_slope(rows: &[(usize, f64)]) -> f64 {
    let m = rows.len() as f64;
    let (sx, sy) = rows.iter().fold((0.0, 0.0), |(sx, sy), &(n, l)| (sx + n as f64, sy + l.ln()));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = rows.iter().fold((0.0, 0.0), |(num, den), &(n, l)| {
        let dx = n as f64 - mx;
        (num + dx * (l.ln() - my), den + dx * dx)
    });
    num / den
}
