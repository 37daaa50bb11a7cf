//! The induced Markov map `G` on the shells `(Iⁿ∖Iⁿ⁺¹) ∪ (Jⁿ∖Jⁿ⁺¹)` and the
//! level walk `αₖ` it drives, evaluated pointwise by orbit iteration.
//!
//! On shell `n ≥ 1` write `h` for the first return map to `Iⁿ⁻¹ ∪ Jⁿ⁻¹`.
//! Then `G` is
//! * `h(x)` when `h(x) ∈ Iⁿ ∪ Jⁿ` (immediate branches);
//! * for `x ∈ (Wₙ∖Iⁿ⁺¹) ∪ (Vₙ∖Jⁿ⁺¹)`, with `E` the number of consecutive
//!   `h`-iterates in `Cⁿ ∪ Dⁿ`, `h^{E+1}(x)` if that lies in `Iⁿ ∪ Jⁿ` and
//!   `h^{E+2}(x)` otherwise;
//! * `h²(x)` in every other case.
//!
//! On shell 0, `G` is the first return to `I⁰ ∪ J⁰`.

use std::collections::BTreeMap;
use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::Float;
use thiserror::Error;

use crate::interval::Interval;
use crate::nest::{pullback_domain, Nest, NestError, NestStatus};
use crate::polynomial::{make_cubic, CubicMap, PolyError};

pub const DEFAULT_WALK_PRECISION: u32 = 128;
pub const DEFAULT_WALK_BUDGET: u64 = 1_000_000;
/// Deep levels start at the first level whose scaling factor drops below this.
pub const DEFAULT_DEEP_LAMBDA: f64 = 0.1;
/// Level at or below which a later visit counts as a return to the top.
pub const DEFAULT_REVISIT_LEVEL: usize = 2;

/// `κ² / (1 + 2κ)`.
pub fn koebe_kappa(kappa: f64) -> f64 {
    kappa * kappa / (1.0 + 2.0 * kappa)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Nest(#[from] NestError),
    #[error("nest has no level below level 0")]
    ShallowNest,
    #[error("point lies in the deepest computed level {0}")]
    DepthExceeded(usize),
    #[error("point lies in level {0}, below which the map leaves class G")]
    NotInClassG(usize),
    #[error("point is within tolerance of a box endpoint")]
    BoundaryHit,
    #[error("no return within {0} iterations")]
    BudgetExceeded(u64),
    #[error("point lies outside I⁰ ∪ J⁰")]
    Outside,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Outside,
    Level(usize),
}

/// Per-level data `G` needs, rounded to the walk precision.
#[derive(Clone, Debug)]
pub struct WalkLevel {
    pub i: Interval,
    pub j: Interval,
    pub c_dom: Option<Interval>,
    pub d_dom: Option<Interval>,
    pub r: Option<u32>,
    pub lambda: Option<f64>,
    /// `Wₙ ⊃ Iⁿ⁺¹` and `Vₙ ⊃ Jⁿ⁺¹`, sent by `h` onto the auxiliary domain
    /// holding the critical value.
    pub w: Option<Interval>,
    pub v: Option<Interval>,
    /// Immediate branches `Lₙ < c < L̂ₙ` in `Iⁿ` and `Rₙ < d < R̂ₙ` in `Jⁿ`.
    pub immediate_i: [Option<Interval>; 2],
    pub immediate_j: [Option<Interval>; 2],
}

#[derive(Clone, Debug)]
pub struct WalkContext {
    pub map: CubicMap,
    pub levels: Vec<WalkLevel>,
    pub nest_status: NestStatus,
    pub budget: u64,
    tol: Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GCase {
    FirstReturn,
    Immediate,
    Escape { e: u32 },
    EscapeExtra { e: u32 },
    Double,
}

#[derive(Clone, Debug)]
pub struct GStep {
    pub point: Float,
    pub from: usize,
    pub level: usize,
    pub f_steps: u64,
    pub case: GCase,
    /// Level and box (0 for `I`, 1 for `J`) the branch is mapped onto.
    pub image_level: usize,
    pub image_box: usize,
}

fn which_box(level: &WalkLevel, x: &Float) -> Option<usize> {
    if level.i.contains(x) {
        Some(0)
    } else if level.j.contains(x) {
        Some(1)
    } else {
        None
    }
}

/// `x` in `half` with `f^time(x) = y`, given that `f^time` is monotone on
/// `half`. Returns `None` if `y` is not in the image.
fn monotone_solve(map: &CubicMap, time: u64, half: &Interval, y: &Float) -> Option<Float> {
    let p = map.precision_bits();
    let f_lo = map.iterate(&half.lo, time);
    let f_hi = map.iterate(&half.hi, time);
    let increasing = f_lo < f_hi;
    let (min, max) = if increasing { (&f_lo, &f_hi) } else { (&f_hi, &f_lo) };
    if y < min || y > max {
        return None;
    }
    let (mut lo, mut hi) = (half.lo.clone(), half.hi.clone());
    for _ in 0..p {
        let mid = Float::with_val(p, &lo + &hi) / 2;
        if mid == lo || mid == hi {
            break;
        }
        if (map.iterate(&mid, time) < *y) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// The two components of `(f^time|box)^{-1}(target)` on either side of the
/// turning point `crit`.
fn immediate_pair(map: &CubicMap, time: u64, bx: &Interval, crit: &Float, target: &Interval) -> [Option<Interval>; 2] {
    let halves = [Interval::new(bx.lo.clone(), crit.clone()), Interval::new(crit.clone(), bx.hi.clone())];
    halves.map(|half| {
        let a = map.iterate(&half.lo, time);
        let b = map.iterate(&half.hi, time);
        let image = if a < b { Interval::new(a, b) } else { Interval::new(b, a) };
        if !image.intersects(target) {
            return None;
        }
        let lo = if image.lo > target.lo { image.lo.clone() } else { target.lo.clone() };
        let hi = if image.hi < target.hi { image.hi.clone() } else { target.hi.clone() };
        let x1 = monotone_solve(map, time, &half, &lo)?;
        let x2 = monotone_solve(map, time, &half, &hi)?;
        Some(if x1 < x2 { Interval::new(x1, x2) } else { Interval::new(x2, x1) })
    })
}

impl WalkContext {
    /// Rounds the nest to `precision` bits and prepares `Wₙ`, `Vₙ` and the
    /// immediate branches. `Wₙ`, `Vₙ` are pulled back at the nest's own
    /// precision.
    pub fn from_nest(nest: &Nest, precision: u32, budget: u64) -> Result<Self, WalkError> {
        if nest.levels.len() < 2 {
            return Err(WalkError::ShallowNest);
        }
        let hp = &nest.map;
        let map = make_cubic(hp.family_sign(), hp.a(), hp.b(), precision)?;
        let round = |iv: &Interval| iv.with_prec(precision);
        let mut levels = Vec::with_capacity(nest.levels.len());
        for lv in &nest.levels {
            let mut wl = WalkLevel {
                i: round(&lv.i),
                j: round(&lv.j),
                c_dom: lv.c_dom.as_ref().map(round),
                d_dom: lv.d_dom.as_ref().map(round),
                r: lv.r,
                lambda: lv.lambda.as_ref().map(|l| l.to_f64()),
                w: None,
                v: None,
                immediate_i: [None, None],
                immediate_j: [None, None],
            };
            if let (Some(br), Some(cd), Some(dd)) = (&lv.branches, &lv.c_dom, &lv.d_dom) {
                let holding = |v: &Float| if cd.contains_closed(v) { Some(cd) } else if dd.contains_closed(v) { Some(dd) } else { None };
                if let Some(x) = holding(&br.value_c) {
                    wl.w = Some(round(&pullback_domain(hp, hp.c(), x, lv.s, &lv.i)?));
                }
                if let Some(x) = holding(&br.value_d) {
                    wl.v = Some(round(&pullback_domain(hp, hp.d(), x, lv.s, &lv.j)?));
                }
                let target_of = |to: usize| if to == 0 { &wl.i } else { &wl.j };
                wl.immediate_i = immediate_pair(&map, lv.s, &wl.i, map.c(), target_of(br.i_to));
                wl.immediate_j = immediate_pair(&map, lv.s, &wl.j, map.d(), target_of(br.j_to));
            }
            levels.push(wl);
        }
        let tol = Float::with_val(precision, Float::i_exp(1, 16 - precision as i32));
        Ok(WalkContext { map, levels, nest_status: nest.status, budget, tol })
    }

    /// Deepest level with a known shell, i.e. `N − 1` for a nest of depth `N`.
    pub fn max_level(&self) -> usize {
        self.levels.len() - 2
    }

    /// First level `n ≥ 1` with `λₙ < threshold`.
    pub fn deep_level(&self, threshold: f64) -> Option<usize> {
        self.levels.iter().position(|l| l.lambda.is_some_and(|v| v < threshold))
    }

    fn near_boundary(&self, iv: &Interval, x: &Float) -> bool {
        let p = self.map.precision_bits();
        Float::with_val(p, x - &iv.lo).abs() < self.tol || Float::with_val(p, x - &iv.hi).abs() < self.tol
    }

    pub fn locate_level(&self, x: &Float) -> Result<Location, WalkError> {
        let top = &self.levels[0];
        if self.near_boundary(&top.i, x) || self.near_boundary(&top.j, x) {
            return Err(WalkError::BoundaryHit);
        }
        if which_box(top, x).is_none() {
            return Ok(Location::Outside);
        }
        let deepest = self.levels.len() - 1;
        for n in 0..deepest {
            let next = &self.levels[n + 1];
            if self.near_boundary(&next.i, x) || self.near_boundary(&next.j, x) {
                return Err(WalkError::BoundaryHit);
            }
            if which_box(next, x).is_none() {
                return Ok(Location::Level(n));
            }
        }
        Err(match self.nest_status {
            NestStatus::NotInClassG | NestStatus::CentralReturn => WalkError::NotInClassG(deepest),
            _ => WalkError::DepthExceeded(deepest),
        })
    }

    /// First return of `x` to `Iᵐ ∪ Jᵐ`, with the number of `f`-steps.
    fn return_to(&self, x: &Float, m: usize) -> Result<(Float, u64), WalkError> {
        let lv = &self.levels[m];
        let p = self.map.precision_bits();
        let mut cur = Float::with_val(p, x);
        let mut next = Float::new(p);
        for k in 1..=self.budget {
            self.map.eval_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
            if which_box(lv, &cur).is_some() {
                return Ok((cur, k));
            }
        }
        Err(WalkError::BudgetExceeded(self.budget))
    }

    fn in_aux(&self, n: usize, x: &Float) -> bool {
        let lv = &self.levels[n];
        lv.c_dom.as_ref().is_some_and(|c| c.contains(x)) || lv.d_dom.as_ref().is_some_and(|d| d.contains(x))
    }

    pub fn step_g(&self, x: &Float) -> Result<GStep, WalkError> {
        let n = match self.locate_level(x)? {
            Location::Outside => return Err(WalkError::Outside),
            Location::Level(n) => n,
        };
        let (point, f_steps, case) = if n == 0 {
            let (y, k) = self.return_to(x, 0)?;
            (y, k, GCase::FirstReturn)
        } else {
            let lv = &self.levels[n];
            let in_w = lv.w.as_ref().is_some_and(|w| w.contains(x)) || lv.v.as_ref().is_some_and(|v| v.contains(x));
            let (y1, k1) = self.return_to(x, n - 1)?;
            if in_w {
                let cap = lv.r.unwrap_or(u32::MAX);
                let (mut y, mut k, mut e) = (y1, k1, 0u32);
                while e < cap && self.in_aux(n, &y) {
                    let (z, dk) = self.return_to(&y, n - 1)?;
                    y = z;
                    k += dk;
                    e += 1;
                }
                if which_box(lv, &y).is_some() {
                    (y, k, GCase::Escape { e })
                } else {
                    let (z, dk) = self.return_to(&y, n - 1)?;
                    (z, k + dk, GCase::EscapeExtra { e })
                }
            } else if which_box(lv, &y1).is_some() {
                (y1, k1, GCase::Immediate)
            } else {
                let (z, dk) = self.return_to(&y1, n - 1)?;
                (z, k1 + dk, GCase::Double)
            }
        };
        let level = match self.locate_level(&point)? {
            Location::Level(m) => m,
            Location::Outside => unreachable!("returns land in the level-0 boxes"),
        };
        assert!(level + 1 >= n, "G dropped from level {n} to {level}");
        let image_level = match case {
            GCase::FirstReturn => 0,
            GCase::Immediate | GCase::Escape { .. } => n,
            GCase::EscapeExtra { .. } | GCase::Double => n - 1,
        };
        let image_box = which_box(&self.levels[image_level], &point).expect("image lies in its box");
        Ok(GStep { point, from: n, level, f_steps, case, image_level, image_box })
    }

    /// Uniform point of `I⁰ ∪ J⁰`, weighted by length.
    pub fn sample_start(&self, rng: &mut impl RngCore) -> Float {
        let p = self.map.precision_bits();
        let top = &self.levels[0];
        let (wi, wj) = (top.i.width(), top.j.width());
        let total = Float::with_val(p, &wi + &wj);
        let u = (Float::with_val(p, rng.next_u64()) >> 64u32) + (Float::with_val(p, rng.next_u64()) >> 128u32);
        let s = Float::with_val(p, &u * &total);
        if s < wi {
            Float::with_val(p, &top.i.lo + &s)
        } else {
            Float::with_val(p, &top.j.lo + &s) - &wi
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StopReason {
    Completed,
    DepthExceeded,
    NotInClassG,
    BudgetExceeded,
    BoundaryHit,
    Outside,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Completed => "completed",
            StopReason::DepthExceeded => "depth_exceeded",
            StopReason::NotInClassG => "not_in_class_G",
            StopReason::BudgetExceeded => "budget_exceeded",
            StopReason::BoundaryHit => "boundary_hit",
            StopReason::Outside => "outside",
        }
    }

    fn from_error(e: &WalkError) -> Self {
        match e {
            WalkError::DepthExceeded(_) => StopReason::DepthExceeded,
            WalkError::NotInClassG(_) => StopReason::NotInClassG,
            WalkError::BudgetExceeded(_) => StopReason::BudgetExceeded,
            WalkError::Outside => StopReason::Outside,
            _ => StopReason::BoundaryHit,
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    /// `α₀, α₁, …`; empty when the start point cannot be located.
    pub levels: Vec<usize>,
    pub stop: StopReason,
}

pub fn simulate_walk(ctx: &WalkContext, x0: &Float, steps: usize) -> Trajectory {
    let mut levels = Vec::with_capacity(steps + 1);
    match ctx.locate_level(x0) {
        Ok(Location::Level(n)) => levels.push(n),
        Ok(Location::Outside) => return Trajectory { levels, stop: StopReason::Outside },
        Err(e) => return Trajectory { levels, stop: StopReason::from_error(&e) },
    }
    let mut x = x0.clone();
    for _ in 0..steps {
        match ctx.step_g(&x) {
            Ok(step) => {
                levels.push(step.level);
                x = step.point;
            }
            Err(e) => return Trajectory { levels, stop: StopReason::from_error(&e) },
        }
    }
    Trajectory { levels, stop: StopReason::Completed }
}

/// Generator for sample `id`: one ChaCha stream per sample under a common
/// seed, so results do not depend on scheduling.
pub fn sample_rng(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn simulate_samples(ctx: &WalkContext, samples: usize, steps: usize, seed: u64) -> Vec<Trajectory> {
    (0..samples as u64)
        .into_par_iter()
        .map(|id| {
            let mut rng = sample_rng(seed, id);
            let x0 = ctx.sample_start(&mut rng);
            simulate_walk(ctx, &x0, steps)
        })
        .collect()
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct WalkStats {
    pub samples: usize,
    pub steps_per_sample: usize,
    /// Steps taken from each level.
    pub level_counts: BTreeMap<usize, u64>,
    /// `(n, jump)` counts.
    pub transition_counts: BTreeMap<(usize, i64), u64>,
    /// Mean jump per level.
    pub drift_estimates: BTreeMap<usize, f64>,
    /// Uncentered second moment of the jump per level.
    pub variance_estimates: BTreeMap<usize, f64>,
    pub stop_reasons: BTreeMap<StopReason, u64>,
    pub revisit_level: usize,
    /// Samples with some `αₖ ≤ revisit_level` for `k ≥ 1`.
    pub revisits: u64,
}

impl WalkStats {
    pub fn revisit_fraction(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.revisits as f64 / self.samples as f64
        }
    }

    /// Most negative jump observed.
    pub fn min_jump(&self) -> Option<i64> {
        self.transition_counts.keys().map(|&(_, r)| r).min()
    }

    /// Drift and second moment per level from the transition table.
    pub fn moments_from_counts(counts: &BTreeMap<(usize, i64), u64>) -> (BTreeMap<usize, f64>, BTreeMap<usize, f64>) {
        let mut sums: BTreeMap<usize, (u64, i64, i64)> = BTreeMap::new();
        for (&(n, r), &c) in counts {
            let e = sums.entry(n).or_default();
            e.0 += c;
            e.1 += r * c as i64;
            e.2 += r * r * c as i64;
        }
        let drift = sums.iter().map(|(&n, &(c, s1, _))| (n, s1 as f64 / c as f64)).collect();
        let second = sums.iter().map(|(&n, &(c, _, s2))| (n, s2 as f64 / c as f64)).collect();
        (drift, second)
    }
}

pub fn aggregate(trajectories: &[Trajectory], steps: usize, revisit_level: usize) -> WalkStats {
    let mut stats = WalkStats {
        samples: trajectories.len(),
        steps_per_sample: steps,
        revisit_level,
        ..WalkStats::default()
    };
    for t in trajectories {
        *stats.stop_reasons.entry(t.stop).or_default() += 1;
        for w in t.levels.windows(2) {
            *stats.level_counts.entry(w[0]).or_default() += 1;
            *stats.transition_counts.entry((w[0], w[1] as i64 - w[0] as i64)).or_default() += 1;
        }
        if t.levels.iter().skip(1).any(|&l| l <= revisit_level) {
            stats.revisits += 1;
        }
    }
    let (drift, second) = WalkStats::moments_from_counts(&stats.transition_counts);
    stats.drift_estimates = drift;
    stats.variance_estimates = second;
    stats
}

pub fn walk_statistics(ctx: &WalkContext, samples: usize, steps: usize, seed: u64) -> WalkStats {
    aggregate(&simulate_samples(ctx, samples, steps, seed), steps, DEFAULT_REVISIT_LEVEL)
}
