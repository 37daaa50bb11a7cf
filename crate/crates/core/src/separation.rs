//! Symbolic lower bounds for the principal moduli: separation symbols
//! `(β, λ₁, λ₂)` pushed through the inducing steps of a combinatorial
//! sequence.
//!
//! Everything here is `f64` arithmetic on bounds. No annulus is ever built.

use std::fmt;

use thiserror::Error;

use crate::combinatorics::{CombSequence, CombTriple, Letter};

/// Relative slack for validity checks.
const SLACK: f64 = 1e-12;

/// Steps of a `(2,1)` run that must follow a type B level before the
/// η-growth is credited.
pub const FIBONACCI_RESOLUTION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LedgerError {
    #[error("norm lift failed: required {required}, best feasible {achieved}")]
    LemmaViolation { required: f64, achieved: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparationSymbol {
    pub beta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl SeparationSymbol {
    pub const ZERO: SeparationSymbol = SeparationSymbol { beta: 0.0, lambda1: 0.0, lambda2: 0.0 };

    pub fn new(beta: f64, lambda1: f64, lambda2: f64) -> Self {
        SeparationSymbol { beta, lambda1, lambda2 }
    }

    pub fn alpha(&self) -> f64 {
        self.beta / 2.0
    }

    /// `(s₁, s₂, s₃, s₄)`.
    pub fn quadruple(&self) -> [f64; 4] {
        let a = self.alpha();
        [a + self.lambda1, a - self.lambda2, self.beta - self.lambda1, self.beta + self.lambda2]
    }

    pub fn s4(&self) -> f64 {
        self.beta + self.lambda2
    }

    pub fn is_valid(&self) -> bool {
        let tol = SLACK * self.beta.abs().max(1.0);
        let a = self.alpha();
        self.beta >= -tol
            && self.lambda1.abs() <= a + tol
            && self.lambda2.abs() <= a + tol
            && self.lambda1 + self.lambda2 >= -tol
            && self.quadruple().iter().all(|&s| s >= -tol)
    }

    /// Whether every `sᵢ` stays below the matching bound.
    pub fn fits(&self, bounds: &BoundQuadruple) -> bool {
        let tol = SLACK * self.beta.abs().max(1.0);
        self.quadruple().iter().zip(bounds.0).all(|(&s, b)| s <= b + tol)
    }
}

impl fmt::Display for SeparationSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(β={}, λ₁={}, λ₂={})", self.beta, self.lambda1, self.lambda2)
    }
}

/// Lower bounds `(b₁, b₂, b₃, b₄)` available for `s₁..s₄`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundQuadruple(pub [f64; 4]);

impl BoundQuadruple {
    pub fn new(b1: f64, b2: f64, b3: f64, b4: f64) -> Result<Self, LedgerError> {
        let q = [b1, b2, b3, b4];
        if q.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(LedgerError::InvalidInput(format!("bounds must be finite and nonnegative: {q:?}")));
        }
        Ok(BoundQuadruple(q))
    }
}

/// Largest norm admitted by the bounds. With `α = β/2` the λ-box, the sum
/// constraint and `sᵢ ≤ bᵢ` reduce to five linear caps on `β`.
pub fn max_norm(bounds: &BoundQuadruple) -> f64 {
    let [b1, b2, b3, b4] = bounds.0;
    [2.0 * b3, 2.0 * b4, 2.0 * (b1 + b3) / 3.0, 2.0 * (b2 + b4) / 3.0, 2.0 * (b1 + b4) / 3.0]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
}

/// A symbol of norm exactly `beta` fitting the bounds, with corrections as
/// close to `hint` as the constraints allow. `None` if `beta` exceeds the
/// feasible range.
pub fn normalize_at(bounds: &BoundQuadruple, beta: f64, hint: (f64, f64)) -> Option<SeparationSymbol> {
    let [b1, b2, b3, b4] = bounds.0;
    let a = beta / 2.0;
    let tol = SLACK * beta.abs().max(1.0);
    let range = |lo: f64, hi: f64| -> Option<(f64, f64)> {
        if lo <= hi {
            Some((lo, hi))
        } else if lo - hi <= tol {
            let m = (lo + hi) / 2.0;
            Some((m, m))
        } else {
            None
        }
    };
    let (l1lo, l1hi) = range((-a).max(beta - b3), a.min(b1 - a))?;
    let (l2lo, l2hi) = range((-a).max(a - b2), a.min(b4 - beta))?;
    let mut l1 = hint.0.clamp(l1lo, l1hi);
    let mut l2 = hint.1.clamp(l2lo, l2hi);
    if l1 + l2 < 0.0 {
        l2 = l2hi.min(-l1);
        if l1 + l2 < 0.0 {
            l1 = l1hi.min(-l2);
        }
    }
    let sym = SeparationSymbol::new(beta, l1, l2);
    (sym.is_valid() && sym.fits(bounds)).then_some(sym)
}

/// The normalized symbol of maximal norm under the bounds.
pub fn normalize(bounds: &BoundQuadruple) -> SeparationSymbol {
    let beta = max_norm(bounds);
    if beta == 0.0 {
        return SeparationSymbol::ZERO;
    }
    normalize_at(bounds, beta, (0.0, 0.0)).expect("maximal norm is feasible")
}

/// Adds `epsilon` to `s₃` and `s₄` and renormalizes at norm `β + ε/2`,
/// checking that this norm is indeed available.
pub fn lift_norm(symbol: &SeparationSymbol, epsilon: f64) -> Result<SeparationSymbol, LedgerError> {
    if !(epsilon >= 0.0) {
        return Err(LedgerError::InvalidInput(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let [s1, s2, s3, s4] = symbol.quadruple();
    let bounds = BoundQuadruple([s1.max(0.0), s2.max(0.0), s3 + epsilon, s4 + epsilon]);
    let required = symbol.beta + epsilon / 2.0;
    let achieved = max_norm(&bounds);
    if achieved < required - SLACK * required.max(1.0) {
        return Err(LedgerError::LemmaViolation { required, achieved });
    }
    normalize_at(&bounds, required, (symbol.lambda1, symbol.lambda2))
        .ok_or(LedgerError::LemmaViolation { required, achieved })
}

/// Step with `t = 1`: same norm, corrections swapped and halved.
pub fn step_fibonacci_t1(symbol: &SeparationSymbol) -> SeparationSymbol {
    SeparationSymbol::new(symbol.beta, symbol.lambda2 / 2.0, symbol.lambda1 / 2.0)
}

/// Bounds produced by a step with `t ≥ 2`, `L` being the modulus of the
/// extra annulus (0 when absent).
pub fn general_quadruple(symbol: &SeparationSymbol, extra: f64) -> BoundQuadruple {
    let (b, a, l1, l2) = (symbol.beta, symbol.alpha(), symbol.lambda1, symbol.lambda2);
    BoundQuadruple([
        (a + l1) / 2.0 + extra / 2.0,
        (a - l2) / 2.0,
        b + (a - l1 + extra) / 2.0,
        b + (a + l2 + extra) / 2.0,
    ])
}

/// Step with `t ≥ 2`. The norm is kept for `L = 0` and lifted by `L/4`
/// otherwise.
pub fn step_general(symbol: &SeparationSymbol, extra: f64) -> Result<SeparationSymbol, LedgerError> {
    if !(extra >= 0.0) {
        return Err(LedgerError::InvalidInput(format!("extra modulus must be nonnegative, got {extra}")));
    }
    let a = symbol.alpha();
    let base = SeparationSymbol::new(symbol.beta, (symbol.lambda1 - a) / 2.0, (symbol.lambda2 + a) / 2.0);
    if extra == 0.0 {
        Ok(base)
    } else {
        lift_norm(&base, extra / 2.0)
    }
}

/// Which growth rule a step triggered.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    /// `t ≥ 2`: norm grows by `δ/8`.
    DeepReturn,
    /// `t = 1`, `r ≥ 3`: norm grows by `δ/8`.
    LongReturn,
    /// A `(2,1)` run resolved past a type B level: norm grows by `η`.
    FibonacciEta,
    /// A `(2,1)` step with no growth yet.
    FibonacciWait,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::DeepReturn => "deep_return",
            Rule::LongReturn => "long_return",
            Rule::FibonacciEta => "fibonacci_eta",
            Rule::FibonacciWait => "fibonacci_wait",
        }
    }

    pub fn grows(self) -> bool {
        self != Rule::FibonacciWait
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LedgerState {
    pub symbol: SeparationSymbol,
    pub delta: f64,
    pub step_index: usize,
    pub history: Vec<(usize, f64)>,
    /// Steps since a type B level inside the current `(2,1)` run.
    pub since_b: Option<u32>,
}

impl LedgerState {
    /// Starts from the symbol normalized out of `(τ, 0, τ, τ)`.
    pub fn initial(tau: f64) -> Result<Self, LedgerError> {
        let bounds = BoundQuadruple::new(tau, 0.0, tau, tau)?;
        let symbol = normalize(&bounds);
        Ok(LedgerState {
            symbol,
            delta: symbol.beta / 4.0,
            step_index: 0,
            history: vec![(0, symbol.beta)],
            since_b: None,
        })
    }

    pub fn mu_lower(&self) -> f64 {
        self.symbol.s4() / 2.0
    }
}

/// Default η: one thirty-second of the starting norm.
pub fn default_eta(tau: f64) -> f64 {
    max_norm(&BoundQuadruple([tau, 0.0, tau, tau])) / 32.0
}

fn grow(state: &mut LedgerState, amount: f64) -> Result<(), LedgerError> {
    state.symbol = lift_norm(&state.symbol, 2.0 * amount)?;
    state.delta = state.symbol.beta / 4.0;
    Ok(())
}

/// Applies the growth rule for `triple` to a state whose symbol already
/// went through the inducing step.
pub fn step_growth(state: &LedgerState, triple: &CombTriple, eta: f64) -> Result<(LedgerState, Rule), LedgerError> {
    let mut next = state.clone();
    let rule = match (triple.r, triple.t) {
        (_, t) if t >= 2 => Rule::DeepReturn,
        (r, 1) if r >= 3 => Rule::LongReturn,
        _ => {
            let advanced = match next.since_b {
                Some(k) => Some(k + 1),
                None if triple.letter == Letter::B => Some(0),
                None => None,
            };
            if advanced.is_some_and(|k| k >= FIBONACCI_RESOLUTION) {
                Rule::FibonacciEta
            } else {
                next.since_b = advanced;
                Rule::FibonacciWait
            }
        }
    };
    match rule {
        Rule::DeepReturn | Rule::LongReturn => {
            next.since_b = None;
            let d = next.delta;
            grow(&mut next, d / 8.0)?;
        }
        Rule::FibonacciEta => {
            next.since_b = None;
            grow(&mut next, eta)?;
        }
        Rule::FibonacciWait => {}
    }
    Ok((next, rule))
}

/// One full step: inducing arithmetic for `triple`, then its growth rule.
pub fn advance(state: &LedgerState, triple: &CombTriple, eta: f64) -> Result<(LedgerState, Rule), LedgerError> {
    let mut induced = state.clone();
    induced.symbol = if triple.t == 1 {
        step_fibonacci_t1(&state.symbol)
    } else {
        step_general(&state.symbol, 0.0)?
    };
    let (mut next, rule) = step_growth(&induced, triple, eta)?;
    next.step_index = state.step_index + 1;
    next.history.push((next.step_index, next.symbol.beta));
    Ok((next, rule))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LedgerRow {
    pub step: usize,
    pub beta: f64,
    pub delta: f64,
    /// `s₄/2` of the symbol before this step.
    pub mu_lower: f64,
    pub rule: Rule,
}

/// Runs the ledger along `seq` from `τ`, one row per triple.
pub fn run_ledger(seq: &CombSequence, tau: f64, eta: f64) -> Result<Vec<LedgerRow>, LedgerError> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(LedgerError::InvalidInput(format!("tau must be finite and nonnegative, got {tau}")));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(LedgerError::InvalidInput(format!("eta must be finite and nonnegative, got {eta}")));
    }
    let mut state = LedgerState::initial(tau)?;
    let mut rows = Vec::with_capacity(seq.len());
    for triple in &seq.triples {
        let mu_lower = state.mu_lower();
        let (next, rule) = advance(&state, triple, eta)?;
        rows.push(LedgerRow { step: next.step_index, beta: next.symbol.beta, delta: next.delta, mu_lower, rule });
        state = next;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::{CombSequence, SingleType, Sign, START_NEGATIVE, START_POSITIVE};
    use proptest::prelude::*;

    /// Brute-force LP: enumerate vertices of the polytope in `(β, λ₁, λ₂)`
    /// and keep the feasible one with largest `β`.
    fn lp_max_beta(b: [f64; 4]) -> f64 {
        // rows: coefficients on (β, λ₁, λ₂) and right-hand side, as `≤`
        let rows: [([f64; 3], f64); 10] = [
            ([-0.5, -1.0, 0.0], 0.0),
            ([-0.5, 1.0, 0.0], 0.0),
            ([-0.5, 0.0, -1.0], 0.0),
            ([-0.5, 0.0, 1.0], 0.0),
            ([0.0, -1.0, -1.0], 0.0),
            ([0.5, 1.0, 0.0], b[0]),
            ([0.5, 0.0, -1.0], b[1]),
            ([1.0, -1.0, 0.0], b[2]),
            ([1.0, 0.0, 1.0], b[3]),
            ([-1.0, 0.0, 0.0], 0.0),
        ];
        let det = |m: [[f64; 3]; 3]| {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        };
        let mut best = f64::NEG_INFINITY;
        for i in 0..rows.len() {
            for j in i + 1..rows.len() {
                for k in j + 1..rows.len() {
                    let m = [rows[i].0, rows[j].0, rows[k].0];
                    let rhs = [rows[i].1, rows[j].1, rows[k].1];
                    let d = det(m);
                    if d.abs() < 1e-12 {
                        continue;
                    }
                    let mut x = [0.0; 3];
                    for (col, xc) in x.iter_mut().enumerate() {
                        let mut mc = m;
                        for r in 0..3 {
                            mc[r][col] = rhs[r];
                        }
                        *xc = det(mc) / d;
                    }
                    let ok = rows
                        .iter()
                        .all(|(c, h)| c[0] * x[0] + c[1] * x[1] + c[2] * x[2] <= h + 1e-9);
                    if ok && x[0] > best {
                        best = x[0];
                    }
                }
            }
        }
        best
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn start_bounds_give_two_thirds() {
        let tau = 0.9;
        let b = BoundQuadruple::new(tau, 0.0, tau, tau).unwrap();
        let s = normalize(&b);
        assert!(close(s.beta, 2.0 * tau / 3.0));
        assert!(close(lp_max_beta(b.0), 2.0 * tau / 3.0));
        assert!(s.is_valid() && s.fits(&b));
    }

    #[test]
    fn hand_choice_is_feasible_but_not_maximal() {
        let tau = 1.0;
        let b = BoundQuadruple::new(tau, 0.0, tau, tau).unwrap();
        let hand = SeparationSymbol::new(tau / 2.0, 0.0, tau / 4.0);
        assert!(hand.is_valid() && hand.fits(&b));
        assert!(normalize(&b).beta > hand.beta);
    }

    #[test]
    fn zero_bounds_give_zero_symbol() {
        let b = BoundQuadruple::new(0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(normalize(&b), SeparationSymbol::ZERO);
    }

    #[test]
    fn negative_bound_rejected() {
        assert!(BoundQuadruple::new(1.0, -0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn lift_examples() {
        let s = SeparationSymbol::new(1.0, 0.0, 0.0);
        let same = lift_norm(&s, 0.0).unwrap();
        assert!(close(same.beta, 1.0));
        let up = lift_norm(&s, 0.2).unwrap();
        assert!(close(up.beta, 1.1));
        let [s1, s2, s3, s4] = s.quadruple();
        let best = lp_max_beta([s1, s2, s3 + 0.2, s4 + 0.2]);
        assert!(best >= 1.1 - 1e-12);
        assert!(close(best, 3.4 / 3.0));
    }

    #[test]
    fn fibonacci_step_example() {
        let s = step_fibonacci_t1(&SeparationSymbol::new(1.0, 0.2, 0.1));
        assert_eq!(s, SeparationSymbol::new(1.0, 0.05, 0.1));
        let fixed = SeparationSymbol::new(0.7, 0.0, 0.0);
        assert_eq!(step_fibonacci_t1(&fixed), fixed);
    }

    #[test]
    fn general_step_examples() {
        let s = SeparationSymbol::new(1.0, 0.1, 0.2);
        let kept = step_general(&s, 0.0).unwrap();
        assert!(close(kept.beta, 1.0));
        assert!(close(kept.lambda1 + kept.lambda2, 0.15));
        let lifted = step_general(&s, 0.4).unwrap();
        assert!(close(lifted.beta, 1.1));
        // the Case-i quadruple at L = 0 is exactly the symbol's own
        let q = general_quadruple(&s, 0.0).0;
        for (a, b) in q.iter().zip(kept.quadruple()) {
            assert!(close(*a, b));
        }
    }

    fn triple(letter: Letter, i: Sign, r: u32, t: u32) -> CombTriple {
        CombTriple::new(SingleType::new(letter, i), r, t)
    }

    #[test]
    fn growth_examples() {
        let tau = 0.3;
        let mut st = LedgerState::initial(tau).unwrap();
        st.delta = 0.2;
        let (g, rule) = step_growth(&st, &triple(Letter::C, Sign::Minus, 3, 2), 0.01).unwrap();
        assert_eq!(rule, Rule::DeepReturn);
        assert!(close(g.symbol.beta, st.symbol.beta + 0.025));
        assert!(close(g.delta, g.symbol.beta / 4.0));
        let (g, rule) = step_growth(&st, &triple(Letter::A, Sign::Plus, 3, 1), 0.01).unwrap();
        assert_eq!(rule, Rule::LongReturn);
        assert!(close(g.symbol.beta, st.symbol.beta + 0.025));
    }

    #[test]
    fn four_fibonacci_steps_give_one_eta_event() {
        for start in [START_POSITIVE, START_NEGATIVE] {
            let seq = CombSequence::stationary(start, 2, 1, 4).unwrap();
            let rows = run_ledger(&seq, 1.0, 0.01).unwrap();
            let events = rows.iter().filter(|r| r.rule == Rule::FibonacciEta).count();
            assert_eq!(events, 1, "start {start}");
        }
    }

    #[test]
    fn stationary_deep_matches_scalar_recursion() {
        let tau = 0.5;
        // the recursion ignores types, so the sequence need not be admissible
        let seq = CombSequence::declared(vec![triple(Letter::A, Sign::Plus, 3, 2); 40]);
        let rows = run_ledger(&seq, tau, default_eta(tau)).unwrap();
        let mut beta = 2.0 * tau / 3.0;
        for row in rows {
            beta *= 1.0 + 1.0 / 32.0;
            assert!(close(row.beta, beta), "step {}: {} vs {}", row.step, row.beta, beta);
        }
    }

    #[test]
    fn zero_tau_is_degenerate() {
        let seq = CombSequence::stationary(START_POSITIVE, 2, 1, 10).unwrap();
        let rows = run_ledger(&seq, 0.0, 0.0).unwrap();
        assert!(rows.iter().all(|r| r.beta == 0.0 && r.mu_lower == 0.0 && r.delta == 0.0));
    }

    fn symbol_strategy() -> impl Strategy<Value = SeparationSymbol> {
        (0.0f64..10.0, -1.0f64..1.0, 0.0f64..1.0).prop_map(|(beta, u, v)| {
            let a = beta / 2.0;
            let l1 = u * a;
            // λ₂ ∈ [max(-α, -λ₁), α]
            let lo = (-a).max(-l1);
            SeparationSymbol::new(beta, l1, lo + v * (a - lo))
        })
    }

    proptest! {
        #[test]
        fn closed_form_matches_lp(b in prop::array::uniform4(0.0f64..5.0)) {
            let bounds = BoundQuadruple(b);
            let ours = max_norm(&bounds);
            let lp = lp_max_beta(b);
            prop_assert!((ours - lp).abs() <= 1e-9 * lp.max(1.0), "{ours} vs {lp}");
            let s = normalize(&bounds);
            prop_assert!(s.is_valid() && s.fits(&bounds));
        }

        #[test]
        fn steps_keep_validity_and_norm(s in symbol_strategy(), extra in 0.0f64..2.0, eps in 0.0f64..2.0) {
            let f = step_fibonacci_t1(&s);
            prop_assert!(f.is_valid() && f.beta == s.beta);
            let g = step_general(&s, extra).unwrap();
            prop_assert!(g.is_valid() && g.beta >= s.beta - 1e-12);
            let l = lift_norm(&s, eps).unwrap();
            prop_assert!(l.is_valid() && close(l.beta, s.beta + eps / 2.0));
        }

        #[test]
        fn lift_monotone_in_epsilon(s in symbol_strategy(), e1 in 0.0f64..1.0, e2 in 0.0f64..1.0) {
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            let [s1, s2, s3, s4] = s.quadruple();
            let at = |e: f64| max_norm(&BoundQuadruple([s1.max(0.0), s2.max(0.0), s3 + e, s4 + e]));
            prop_assert!(at(lo) <= at(hi) + 1e-12);
        }

        #[test]
        fn two_fibonacci_steps_quarter_corrections(s in symbol_strategy()) {
            let t = step_fibonacci_t1(&step_fibonacci_t1(&s));
            prop_assert!(close(t.lambda1, s.lambda1 / 4.0) && close(t.lambda2, s.lambda2 / 4.0));
        }
    }
}
