//! Types and subtypes of inducing steps, the admissible ordering, the
//! transition automaton and the admissibility check.

use std::cmp::Ordering;
use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    A,
    B,
    C,
    D,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::A, Letter::B, Letter::C, Letter::D];

    pub fn as_char(self) -> char {
        match self {
            Letter::A => 'A',
            Letter::B => 'B',
            Letter::C => 'C',
            Letter::D => 'D',
        }
    }

    pub fn from_char(ch: char) -> Option<Letter> {
        match ch {
            'A' => Some(Letter::A),
            'B' => Some(Letter::B),
            'C' => Some(Letter::C),
            'D' => Some(Letter::D),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_i8(v: i8) -> Sign {
        if v >= 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }

    pub fn from_char(ch: char) -> Option<Sign> {
        match ch {
            '+' => Some(Sign::Plus),
            '-' => Some(Sign::Minus),
            _ => None,
        }
    }
}

/// Single-sign type as used by the admissibility condition: letter and the
/// orientation `i` of the non-central branches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SingleType {
    pub letter: Letter,
    pub i: Sign,
}

impl SingleType {
    pub const fn new(letter: Letter, i: Sign) -> Self {
        SingleType { letter, i }
    }
}

impl fmt::Display for SingleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.letter.as_char(), self.i.as_char())
    }
}

/// Two-sign subtype: `j` records whether the central branch has a local
/// maximum (`+`) or minimum (`-`) at `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subtype {
    pub letter: Letter,
    pub i: Sign,
    pub j: Sign,
}

impl Subtype {
    pub const fn new(letter: Letter, i: Sign, j: Sign) -> Self {
        Subtype { letter, i, j }
    }

    /// Placeholder returned where the tables give type D; its signs carry
    /// no meaning.
    pub const D: Subtype = Subtype::new(Letter::D, Sign::Plus, Sign::Plus);

    pub fn single(self) -> SingleType {
        SingleType::new(self.letter, self.i)
    }

    pub fn all() -> Vec<Subtype> {
        let mut out = Vec::with_capacity(16);
        for letter in Letter::ALL {
            for i in [Sign::Plus, Sign::Minus] {
                for j in [Sign::Plus, Sign::Minus] {
                    out.push(Subtype::new(letter, i, j));
                }
            }
        }
        out
    }

    /// Fixed rank used to order outcomes: letter, then `i`, then `j`.
    pub fn rank(self) -> u8 {
        let l = self.letter as u8;
        let i = (self.i == Sign::Minus) as u8;
        let j = (self.j == Sign::Minus) as u8;
        l * 4 + i * 2 + j
    }
}

impl fmt::Display for Subtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.letter.as_char(), self.i.as_char(), self.j.as_char())
    }
}

/// Start subtype of level one in each family.
pub const START_POSITIVE: Subtype = Subtype::new(Letter::A, Sign::Plus, Sign::Plus);
pub const START_NEGATIVE: Subtype = Subtype::new(Letter::C, Sign::Minus, Sign::Plus);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CombTriple {
    pub letter: Letter,
    pub i: Sign,
    /// Present only in verbose form or on extracted sequences.
    pub j: Option<Sign>,
    pub r: u32,
    pub t: u32,
}

impl CombTriple {
    pub fn new(single: SingleType, r: u32, t: u32) -> Self {
        CombTriple { letter: single.letter, i: single.i, j: None, r, t }
    }

    pub fn with_subtype(subtype: Subtype, r: u32, t: u32) -> Self {
        CombTriple { letter: subtype.letter, i: subtype.i, j: Some(subtype.j), r, t }
    }

    pub fn single(&self) -> SingleType {
        SingleType::new(self.letter, self.i)
    }

    pub fn subtype(&self) -> Option<Subtype> {
        self.j.map(|j| Subtype::new(self.letter, self.i, j))
    }

    pub fn parity_class(&self) -> i32 {
        parity_class(self.r, self.t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Declared,
    Extracted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CombSequence {
    pub triples: Vec<CombTriple>,
    pub origin: Origin,
}

impl CombSequence {
    pub fn declared(triples: Vec<CombTriple>) -> Self {
        CombSequence { triples, origin: Origin::Declared }
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn pairs(&self) -> Vec<(u32, u32)> {
        self.triples.iter().map(|t| (t.r, t.t)).collect()
    }

    /// The first `n` triples.
    pub fn prefix(&self, n: usize) -> CombSequence {
        CombSequence {
            triples: self.triples[..n.min(self.triples.len())].to_vec(),
            origin: self.origin,
        }
    }

    /// Stationary `(r,t)` sequence with types filled in by the automaton.
    pub fn stationary(start: Subtype, r: u32, t: u32, len: usize) -> Option<CombSequence> {
        let run = run_automaton(start, &vec![(r, t); len]);
        if run.failure.is_some() {
            return None;
        }
        let triples = run.states[..len]
            .iter()
            .map(|s| CombTriple::new(s.single(), r, t))
            .collect();
        Some(CombSequence::declared(triples))
    }

    /// Fills in `j` along the automaton trajectory. Returns `None` if the
    /// sequence is not accepted.
    pub fn with_subtypes(&self) -> Option<Vec<Subtype>> {
        let start = start_for(self.triples.first()?.single())?;
        let run = run_automaton(start, &self.pairs());
        if run.failure.is_some() {
            return None;
        }
        Some(run.states[..self.len()].to_vec())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderingConstraint {
    StrictLess,
    AdmissiblePrec,
}

impl OrderingConstraint {
    pub fn holds(self, r: u32, t: u32) -> bool {
        match self {
            OrderingConstraint::StrictLess => t < r,
            OrderingConstraint::AdmissiblePrec => admissible_less(t, r),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CombError {
    #[error("type D admits no inducing step")]
    TypeD,
    #[error("ordering constraint fails for {subtype} with r={r}, t={t}")]
    ConstraintViolated { subtype: Subtype, r: u32, t: u32 },
    #[error("parity combination r={r}, t={t} is not tabulated for {subtype}")]
    UnlistedCase { subtype: Subtype, r: u32, t: u32 },
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },
}

/// `m ≺ n` in the order `1 ≺ 3 ≺ 5 ≺ … ≺ 6 ≺ 4 ≺ 2`.
pub fn admissible_less(m: u32, n: u32) -> bool {
    admissible_key(m) < admissible_key(n)
}

/// Sort key realizing the admissible order.
pub fn admissible_key(m: u32) -> (u8, i64) {
    if m % 2 == 1 {
        (0, m as i64)
    } else {
        (1, -(m as i64))
    }
}

pub fn admissible_cmp(m: u32, n: u32) -> Ordering {
    admissible_key(m).cmp(&admissible_key(n))
}

/// `e(r,t) = (−1)^r + (−1)^t`.
pub fn parity_class(r: u32, t: u32) -> i32 {
    let s = |k: u32| if k % 2 == 0 { 1 } else { -1 };
    s(r) + s(t)
}

pub fn ordering_constraint(subtype: Subtype) -> Result<OrderingConstraint, CombError> {
    single_constraint(subtype.single())
}

fn single_constraint(ty: SingleType) -> Result<OrderingConstraint, CombError> {
    use OrderingConstraint::*;
    match (ty.letter, ty.i) {
        (Letter::D, _) => Err(CombError::TypeD),
        (Letter::A | Letter::B, Sign::Minus) => Ok(StrictLess),
        (Letter::C, Sign::Minus) => Ok(AdmissiblePrec),
        (Letter::A | Letter::B, Sign::Plus) => Ok(AdmissiblePrec),
        (Letter::C, Sign::Plus) => Ok(StrictLess),
    }
}

const fn st(letter: Letter, i: Sign, j: Sign) -> Subtype {
    Subtype::new(letter, i, j)
}

use Letter::{A, B, C};
use Sign::{Minus as M, Plus as P};

/// Table lookup by `(subtype, r odd, t odd)`. `None` marks a combination the
/// tables leave out.
fn table(s: Subtype, r_odd: bool, t_odd: bool) -> Option<Subtype> {
    let d = Subtype::D;
    let pick = |oo, oe, eo, ee| match (r_odd, t_odd) {
        (true, true) => oo,
        (true, false) => oe,
        (false, true) => eo,
        (false, false) => ee,
    };
    let out = match (s.letter, s.i, s.j) {
        (A, M, P) => pick(Some(st(A, P, P)), Some(st(C, M, P)), Some(st(B, P, M)), Some(d)),
        (A, M, M) => pick(Some(st(A, P, M)), Some(st(C, M, M)), Some(st(B, P, P)), Some(d)),
        (B, M, P) => pick(Some(d), Some(st(B, P, P)), Some(st(C, M, M)), Some(st(A, P, M))),
        (B, M, M) => pick(Some(d), Some(st(B, P, M)), Some(st(C, M, P)), Some(st(A, P, P))),
        (C, M, P) => pick(Some(st(A, P, P)), None, Some(st(A, M, M)), Some(st(A, P, M))),
        (C, M, M) => pick(Some(st(A, P, M)), None, Some(st(A, M, P)), Some(st(A, P, P))),
        (A, P, P) => pick(Some(st(A, P, P)), None, Some(st(B, M, P)), Some(d)),
        (A, P, M) => pick(Some(st(A, P, M)), None, Some(st(B, M, P)), Some(d)),
        (B, P, P) => pick(Some(d), None, Some(st(C, P, P)), Some(st(A, P, P))),
        (B, P, M) => pick(Some(d), None, Some(st(C, P, M)), Some(st(A, P, M))),
        (C, P, P) => Some(st(A, P, P)),
        (C, P, M) => Some(st(A, P, M)),
        (Letter::D, _, _) => None,
    };
    out
}

/// Subtype of the induced map after one inducing step of type `(r,t)`.
pub fn transition(subtype: Subtype, r: u32, t: u32) -> Result<Subtype, CombError> {
    let constraint = ordering_constraint(subtype)?;
    if r < 2 || t < 1 || !constraint.holds(r, t) {
        return Err(CombError::ConstraintViolated { subtype, r, t });
    }
    table(subtype, r % 2 == 1, t % 2 == 1).ok_or(CombError::UnlistedCase { subtype, r, t })
}

/// Trajectory of the automaton. `states[0]` is the start (the type of level
/// one); `states[k]` is the type after the `k`-th inducing step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AutomatonRun {
    pub states: Vec<Subtype>,
    /// 1-based index of the triple at which the run failed.
    pub failure: Option<usize>,
}

pub fn run_automaton(start: Subtype, pairs: &[(u32, u32)]) -> AutomatonRun {
    let mut states = vec![start];
    for (k, &(r, t)) in pairs.iter().enumerate() {
        let cur = *states.last().unwrap();
        match transition(cur, r, t) {
            Ok(next) => {
                states.push(next);
                if next.letter == Letter::D {
                    return AutomatonRun { states, failure: Some(k + 1) };
                }
            }
            Err(_) => return AutomatonRun { states, failure: Some(k + 1) },
        }
    }
    AutomatonRun { states, failure: None }
}

/// Start subtype matching a declared first type.
pub fn start_for(first: SingleType) -> Option<Subtype> {
    match (first.letter, first.i) {
        (Letter::A, Sign::Plus) => Some(START_POSITIVE),
        (Letter::C, Sign::Minus) => Some(START_NEGATIVE),
        _ => None,
    }
}

/// Acceptance by the automaton: the run from the matching start state must
/// not fail and its single-sign projection must reproduce the declared types.
pub fn automaton_accepts(seq: &CombSequence) -> bool {
    let Some(first) = seq.triples.first() else {
        return false;
    };
    let Some(start) = start_for(first.single()) else {
        return false;
    };
    let run = run_automaton(start, &seq.pairs());
    if run.failure.is_some() {
        return false;
    }
    seq.triples
        .iter()
        .zip(&run.states)
        .all(|(tr, s)| tr.single() == s.single())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// `r < 2` or `t < 1`.
    Range,
    /// First type is neither `A+` nor `C-`.
    FirstType,
    /// The `t ≺ r` or `t < r` requirement fails.
    Ordering,
    /// `e(r,t)` takes a value the rule forbids.
    ForbiddenParity,
    /// The following type differs from the one the rule prescribes.
    NextType,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Violation {
    /// 1-based position of the offending triple.
    pub index: usize,
    /// Clause number 1..=7 of the rule that failed.
    pub rule: u8,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::Range => "r must be at least 2 and t at least 1",
            ViolationKind::FirstType => "first type must be A+ or C-",
            ViolationKind::Ordering => "ordering between t and r fails",
            ViolationKind::ForbiddenParity => "parity class e(r,t) is forbidden here",
            ViolationKind::NextType => "type differs from the prescribed one",
        };
        write!(f, "triple {} violates rule {}: {}", self.index, self.rule, what)
    }
}

/// Clause number of the rule governing a single-sign type.
fn clause(ty: SingleType) -> u8 {
    match (ty.letter, ty.i) {
        (Letter::A, Sign::Minus) => 2,
        (Letter::A, Sign::Plus) => 3,
        (Letter::B, Sign::Minus) => 4,
        (Letter::B, Sign::Plus) => 5,
        (Letter::C, Sign::Minus) => 6,
        (Letter::C, Sign::Plus) => 7,
        (Letter::D, _) => 0,
    }
}

/// Next single-sign type fixed by `(ty, r, t)`, or `None` when the parity is
/// forbidden for `ty`.
fn next_single(ty: SingleType, r: u32, t: u32) -> Option<SingleType> {
    let e = parity_class(r, t);
    let r_odd = r % 2 == 1;
    let s = SingleType::new;
    match (ty.letter, ty.i) {
        (Letter::A, Sign::Minus) => match e {
            2 => None,
            -2 => Some(s(Letter::A, Sign::Plus)),
            _ if r_odd => Some(s(Letter::C, Sign::Minus)),
            _ => Some(s(Letter::B, Sign::Plus)),
        },
        (Letter::A, Sign::Plus) => match e {
            2 => None,
            -2 => Some(s(Letter::A, Sign::Plus)),
            _ => Some(s(Letter::B, Sign::Minus)),
        },
        (Letter::B, Sign::Minus) => match e {
            -2 => None,
            2 => Some(s(Letter::A, Sign::Plus)),
            _ if r_odd => Some(s(Letter::B, Sign::Plus)),
            _ => Some(s(Letter::C, Sign::Minus)),
        },
        (Letter::B, Sign::Plus) => match e {
            -2 => None,
            2 => Some(s(Letter::A, Sign::Plus)),
            _ => Some(s(Letter::C, Sign::Plus)),
        },
        (Letter::C, Sign::Minus) => match e {
            0 => Some(s(Letter::A, Sign::Minus)),
            _ => Some(s(Letter::A, Sign::Plus)),
        },
        (Letter::C, Sign::Plus) => Some(s(Letter::A, Sign::Plus)),
        (Letter::D, _) => None,
    }
}

/// The admissibility check in its sharp form: every clause fixes the next
/// single-sign type from the parities of `(r,t)`, exactly as the transition
/// tables do. Sequences accepted here are exactly those the automaton
/// accepts.
pub fn check_admissible(seq: &CombSequence) -> Result<(), Violation> {
    check_with(seq, |ty, r, t| next_single(ty, r, t).map(|n| vec![n]))
}

/// The admissibility check read clause by clause as stated, where `A-` and
/// `B-` only restrict the next type to `{A+, B+, C-}` and `C-` with
/// `e(r,t) = -2` imposes nothing on the next type.
pub fn check_condition_a_literal(seq: &CombSequence) -> Result<(), Violation> {
    let s = SingleType::new;
    check_with(seq, move |ty, r, t| {
        let e = parity_class(r, t);
        let loose = vec![s(Letter::A, Sign::Plus), s(Letter::B, Sign::Plus), s(Letter::C, Sign::Minus)];
        match (ty.letter, ty.i) {
            (Letter::A, Sign::Minus) if e != 2 => Some(loose),
            (Letter::B, Sign::Minus) if e != -2 => Some(loose),
            (Letter::C, Sign::Minus) if e == -2 => Some(vec![
                s(Letter::A, Sign::Plus),
                s(Letter::A, Sign::Minus),
                s(Letter::B, Sign::Plus),
                s(Letter::B, Sign::Minus),
                s(Letter::C, Sign::Plus),
                s(Letter::C, Sign::Minus),
            ]),
            _ => next_single(ty, r, t).map(|n| vec![n]),
        }
    })
}

fn check_with<F>(seq: &CombSequence, allowed_next: F) -> Result<(), Violation>
where
    F: Fn(SingleType, u32, u32) -> Option<Vec<SingleType>>,
{
    let v = |index, rule, kind| Err(Violation { index, rule, kind });
    let Some(first) = seq.triples.first() else {
        return v(1, 1, ViolationKind::FirstType);
    };
    if start_for(first.single()).is_none() {
        return v(1, 1, ViolationKind::FirstType);
    }
    let mut governing_rule = 1u8;
    for (k, tr) in seq.triples.iter().enumerate() {
        let index = k + 1;
        if tr.r < 2 || tr.t < 1 {
            return v(index, governing_rule, ViolationKind::Range);
        }
        let ty = tr.single();
        let Ok(constraint) = single_constraint(ty) else {
            return v(index, governing_rule, ViolationKind::NextType);
        };
        if !constraint.holds(tr.r, tr.t) {
            return v(index, governing_rule, ViolationKind::Ordering);
        }
        let rule = clause(ty);
        let Some(next) = allowed_next(ty, tr.r, tr.t) else {
            return v(index, rule, ViolationKind::ForbiddenParity);
        };
        if let Some(following) = seq.triples.get(k + 1) {
            if !next.contains(&following.single()) {
                return v(index + 1, rule, ViolationKind::NextType);
            }
        }
        governing_rule = rule;
    }
    Ok(())
}

/// Whether a single inducing step `(r,t)` from a map of type `ty` passes the
/// range, ordering and parity clauses.
pub fn step_allowed(ty: SingleType, r: u32, t: u32) -> bool {
    r >= 2 && t >= 1 && single_constraint(ty).is_ok_and(|c| c.holds(r, t)) && next_single(ty, r, t).is_some()
}

/// Outcome of exploring the automaton along allowed steps only.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Reachability {
    pub states: BTreeSet<Subtype>,
    pub edges: usize,
    /// Allowed steps whose table entry is `D` or missing, or whose target
    /// disagrees with the single-sign rule.
    pub bad_edges: Vec<(Subtype, u32, u32)>,
}

impl Reachability {
    pub fn reaches_d(&self) -> bool {
        self.states.iter().any(|s| s.letter == Letter::D)
    }
}

/// Breadth-first search from both start subtypes over steps with
/// `r, t ≤ max_rt` that the admissibility clauses allow.
pub fn explore_automaton(max_rt: u32) -> Reachability {
    let mut out = Reachability::default();
    let mut queue = VecDeque::from([START_POSITIVE, START_NEGATIVE]);
    out.states.extend(queue.iter().copied());
    while let Some(state) = queue.pop_front() {
        for r in 2..=max_rt {
            for t in 1..=max_rt {
                if !step_allowed(state.single(), r, t) {
                    continue;
                }
                out.edges += 1;
                let next = match transition(state, r, t) {
                    Ok(n) => n,
                    Err(_) => {
                        out.bad_edges.push((state, r, t));
                        continue;
                    }
                };
                if next.letter == Letter::D || Some(next.single()) != next_single(state.single(), r, t) {
                    out.bad_edges.push((state, r, t));
                }
                if out.states.insert(next) {
                    queue.push_back(next);
                }
            }
        }
    }
    out
}

/// `(Sₙ, Ŝₙ)` for levels `1..=len+1`, from `S₁ = 2`, `Ŝ₁ = 1`.
pub fn return_times(seq: &CombSequence) -> Vec<(u64, u64)> {
    return_times_from_pairs(&seq.pairs())
}

pub fn return_times_from_pairs(pairs: &[(u32, u32)]) -> Vec<(u64, u64)> {
    let mut out = vec![(2u64, 1u64)];
    for &(r, t) in pairs {
        let (s, sh) = *out.last().unwrap();
        let next_s = s.saturating_add((r as u64 - 1).saturating_mul(sh));
        let next_sh = s.saturating_add((t as u64).saturating_sub(1).saturating_mul(sh));
        out.push((next_s, next_sh));
    }
    out
}

/// Parses `LETTER SIGN [SIGN] , r , t (; …)*`, whitespace ignored. The
/// optional second sign is `j`.
pub fn parse_sequence(text: &str) -> Result<CombSequence, CombError> {
    let chars: Vec<(usize, char)> = text
        .chars()
        .enumerate()
        .filter(|(_, ch)| !ch.is_whitespace())
        .collect();
    let end = text.chars().count();
    let mut pos = 0usize;
    let at = |pos: usize| chars.get(pos).map(|&(p, _)| p).unwrap_or(end);
    let err = |position: usize, message: &str| CombError::Syntax {
        position,
        message: message.to_string(),
    };
    let mut triples = Vec::new();
    loop {
        let letter = match chars.get(pos) {
            Some(&(_, ch)) => Letter::from_char(ch).ok_or_else(|| err(at(pos), "expected letter A, B, C or D"))?,
            None => return Err(err(end, "expected a triple")),
        };
        pos += 1;
        let i = chars
            .get(pos)
            .and_then(|&(_, ch)| Sign::from_char(ch))
            .ok_or_else(|| err(at(pos), "expected sign + or -"))?;
        pos += 1;
        let j = match chars.get(pos).and_then(|&(_, ch)| Sign::from_char(ch)) {
            Some(s) => {
                pos += 1;
                Some(s)
            }
            None => None,
        };
        let mut ints = [0u32; 2];
        for slot in ints.iter_mut() {
            match chars.get(pos) {
                Some(&(_, ',')) => pos += 1,
                _ => return Err(err(at(pos), "expected ','")),
            }
            let start = pos;
            let mut value: u64 = 0;
            while let Some(&(_, ch)) = chars.get(pos) {
                let Some(dg) = ch.to_digit(10) else { break };
                value = value * 10 + dg as u64;
                if value > u32::MAX as u64 {
                    return Err(err(at(start), "integer too large"));
                }
                pos += 1;
            }
            if pos == start {
                return Err(err(at(pos), "expected an integer"));
            }
            *slot = value as u32;
        }
        triples.push(CombTriple { letter, i, j, r: ints[0], t: ints[1] });
        match chars.get(pos) {
            None => break,
            Some(&(_, ';')) => pos += 1,
            Some(_) => return Err(err(at(pos), "expected ';' or end of input")),
        }
    }
    Ok(CombSequence::declared(triples))
}

/// Canonical text form; `j` is written only when `verbose` is set.
pub fn format_sequence(seq: &CombSequence, verbose: bool) -> String {
    seq.triples
        .iter()
        .map(|tr| {
            let mut s = String::new();
            s.push(tr.letter.as_char());
            s.push(tr.i.as_char());
            if verbose {
                if let Some(j) = tr.j {
                    s.push(j.as_char());
                }
            }
            format!("{s},{},{}", tr.r, tr.t)
        })
        .collect::<Vec<_>>()
        .join(";")
}
