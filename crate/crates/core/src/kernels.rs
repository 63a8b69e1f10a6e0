//! Exponential feed and reset kernels and the segment threshold-crossing solver.
//!
//! Between two events a neuron's membrane potential is a sum of two
//! exponentials, `A·e^{-α s} + B·e^{-β s}` with `s = t - t_ref`. The
//! coefficients are kept relative to the segment start so that no
//! `e^{+βt}` factor ever appears.

use crate::error::{Result, SnnError};

/// Smallest accepted separation between the synaptic and membrane rates.
pub const MIN_RATE_GAP: f64 = 1e-9;

/// Newton iterations before the crossing solver falls back to pure bisection.
const NEWTON_ITERATIONS: usize = 100;
const MAX_ITERATIONS: usize = 400;

/// Relative margin by which a segment's peak must exceed θ to count as a crossing.
pub const GRAZE_TOLERANCE: f64 = 1e-12;

/// Shared neuron constants: synaptic rate `alpha = 1/τ_s`, membrane rate
/// `beta = 1/τ_n` and firing threshold `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronParams {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
}

/// Which one-sided limit to take for a derivative at a kernel's kink.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl NeuronParams {
    pub fn new(alpha: f64, beta: f64, theta: f64) -> Result<Self> {
        let params = NeuronParams { alpha, beta, theta };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.alpha.is_finite() && self.beta.is_finite() && self.theta.is_finite();
        if !finite || self.alpha <= 0.0 || self.beta <= 0.0 || self.theta <= 0.0 {
            return Err(SnnError::invalid(format!(
                "alpha, beta, theta must be finite and positive (got {}, {}, {})",
                self.alpha, self.beta, self.theta
            )));
        }
        if (self.alpha - self.beta).abs() < MIN_RATE_GAP {
            return Err(SnnError::invalid(format!(
                "alpha and beta must differ by at least {MIN_RATE_GAP} (got {} and {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    /// Membrane response to one unit-weight input spike, `dt` after the spike.
    ///
    /// Evaluated as `e^{-β dt}·expm1((β-α)dt)/(β-α)`, which equals
    /// `(e^{-α dt} - e^{-β dt})/(β - α)` but does not cancel when the two
    /// rates are close.
    pub fn feed_kernel(&self, dt: f64) -> f64 {
        if dt <= 0.0 {
            return 0.0;
        }
        let gap = self.beta - self.alpha;
        (-self.beta * dt).exp() * (gap * dt).exp_m1() / gap
    }

    /// Time derivative of [`feed_kernel`](Self::feed_kernel). The kernel has a
    /// kink at zero, so `dt == 0` is rejected; use
    /// [`feed_kernel_deriv_one_sided`](Self::feed_kernel_deriv_one_sided) there.
    pub fn feed_kernel_deriv(&self, dt: f64) -> Result<f64> {
        if dt == 0.0 {
            return Err(SnnError::invalid(
                "feed kernel derivative is discontinuous at dt = 0; request a one-sided limit",
            ));
        }
        Ok(self.feed_deriv_unchecked(dt))
    }

    pub fn feed_kernel_deriv_one_sided(&self, dt: f64, side: Side) -> f64 {
        if dt == 0.0 {
            return match side {
                Side::Left => 0.0,
                Side::Right => 1.0,
            };
        }
        self.feed_deriv_unchecked(dt)
    }

    // h'(t) = e^{-αt} - β·h(t)
    #[inline]
    pub(crate) fn feed_deriv_unchecked(&self, dt: f64) -> f64 {
        if dt <= 0.0 {
            return 0.0;
        }
        (-self.alpha * dt).exp() - self.beta * self.feed_kernel(dt)
    }

    /// Decay of a unit reset injected `dt` ago (`e^{-β dt}`, gated at zero).
    pub fn reset_kernel(&self, dt: f64) -> f64 {
        if dt < 0.0 {
            0.0
        } else {
            (-self.beta * dt).exp()
        }
    }

    /// `d/dt e^{-β dt}` for `dt > 0`, zero before the reset.
    pub fn reset_kernel_deriv(&self, dt: f64) -> f64 {
        if dt <= 0.0 {
            0.0
        } else {
            -self.beta * (-self.beta * dt).exp()
        }
    }
}

/// Membrane potential on an event-free segment: `a·e^{-α(t-t_ref)} + b·e^{-β(t-t_ref)}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SegmentState {
    pub a: f64,
    pub b: f64,
    pub t_ref: f64,
}

impl SegmentState {
    pub fn new(a: f64, b: f64, t_ref: f64) -> Self {
        SegmentState { a, b, t_ref }
    }

    pub fn potential(&self, params: &NeuronParams, t: f64) -> f64 {
        let s = t - self.t_ref;
        self.a * (-params.alpha * s).exp() + self.b * (-params.beta * s).exp()
    }

    pub fn derivative(&self, params: &NeuronParams, t: f64) -> f64 {
        let s = t - self.t_ref;
        -params.alpha * self.a * (-params.alpha * s).exp()
            - params.beta * self.b * (-params.beta * s).exp()
    }

    /// Moves the reference time to `t` without changing the represented curve.
    pub fn rebase(&mut self, params: &NeuronParams, t: f64) {
        let s = t - self.t_ref;
        if s != 0.0 {
            self.a *= (-params.alpha * s).exp();
            self.b *= (-params.beta * s).exp();
            self.t_ref = t;
        }
    }

    /// Adds one input spike of the given weight arriving at `t`.
    pub fn add_input(&mut self, params: &NeuronParams, t: f64, weight: f64) {
        self.rebase(params, t);
        let gap = params.beta - params.alpha;
        self.a += weight / gap;
        self.b -= weight / gap;
    }

    /// Applies the threshold reset of a fire at `t`: the potential drops by θ.
    pub fn reset(&mut self, params: &NeuronParams, t: f64) {
        self.rebase(params, t);
        self.b -= params.theta;
    }

    /// Offset of the unique interior extremum of the segment, if it lies at `s > 0`.
    fn extremum_offset(&self, params: &NeuronParams) -> Option<f64> {
        if self.a == 0.0 {
            return None;
        }
        let ratio = -params.beta * self.b / (params.alpha * self.a);
        if ratio <= 0.0 {
            return None;
        }
        let s = ratio.ln() / (params.beta - params.alpha);
        (s > 0.0 && s.is_finite()).then_some(s)
    }
}

/// Earliest time in `(t_ref, window_end]` at which the segment potential
/// reaches θ. `window_end` may be `f64::INFINITY`.
///
/// The segment has at most one interior extremum, so evaluating the
/// potential at that extremum and at the window end yields a bracket on
/// which the curve is monotone; the root is then polished by safeguarded
/// Newton iteration down to machine precision (well below 1e-12).
///
/// If the potential is already at or above θ at `t_ref` the segment start is
/// returned.
pub fn earliest_crossing(
    state: &SegmentState,
    params: &NeuronParams,
    window_end: f64,
) -> Result<Option<f64>> {
    if window_end.is_nan() || window_end <= state.t_ref {
        return Err(SnnError::invalid(format!(
            "crossing window must end after t_ref (t_ref = {}, window_end = {window_end})",
            state.t_ref
        )));
    }
    let theta = params.theta;
    let value = |s: f64| state.a * (-params.alpha * s).exp() + state.b * (-params.beta * s).exp();

    if value(0.0) >= theta {
        return Ok(Some(state.t_ref));
    }

    let span = window_end - state.t_ref;
    let mut candidates = [f64::NAN; 2];
    let mut n = 0;
    if let Some(s) = state.extremum_offset(params) {
        if s < span {
            candidates[n] = s;
            n += 1;
        }
    }
    if span.is_finite() {
        candidates[n] = span;
        n += 1;
    }

    let mut lo = 0.0;
    for (k, &hi) in candidates[..n].iter().enumerate() {
        // at the extremum the curve must rise strictly above θ: a tangential touch is not a fire
        let needed = if k + 1 < n || !span.is_finite() || hi < span {
            theta + GRAZE_TOLERANCE * theta.max(1.0)
        } else {
            theta
        };
        if value(hi) >= needed {
            let s = refine_crossing(state, params, lo, hi);
            return Ok(Some(state.t_ref + s));
        }
        lo = hi;
    }
    Ok(None)
}

// Bracket invariant: value(lo) < θ <= value(hi), curve monotone increasing on [lo, hi].
fn refine_crossing(state: &SegmentState, params: &NeuronParams, mut lo: f64, mut hi: f64) -> f64 {
    let (alpha, beta, theta) = (params.alpha, params.beta, params.theta);
    let eval = |s: f64| {
        let ea = state.a * (-alpha * s).exp();
        let eb = state.b * (-beta * s).exp();
        (ea + eb - theta, -alpha * ea - beta * eb)
    };

    let mut x = hi;
    for iter in 0..MAX_ITERATIONS {
        let (f, df) = eval(x);
        if f == 0.0 {
            return x;
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            break;
        }
        let newton = x - f / df;
        let next = if iter < NEWTON_ITERATIONS && df > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs().max(1.0) {
            x = next;
            break;
        }
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(alpha: f64, beta: f64, theta: f64) -> NeuronParams {
        NeuronParams::new(alpha, beta, theta).unwrap()
    }

    #[test]
    fn feed_kernel_is_causal() {
        let params = p(1.0, 2.0, 1.0);
        assert_eq!(params.feed_kernel(-1.0), 0.0);
        assert_eq!(params.feed_kernel(0.0), 0.0);
    }

    #[test]
    fn feed_kernel_peak() {
        // e^{-t} - e^{-2t} peaks at t = ln 2 with value 1/4 (dense grid agrees to 1e-12)
        let params = p(1.0, 2.0, 1.0);
        let peak = std::f64::consts::LN_2;
        assert!((params.feed_kernel(peak) - 0.25).abs() < 1e-15);
        let grid_max = (1..=500_000)
            .map(|k| params.feed_kernel(k as f64 * 1e-5))
            .fold(0.0, f64::max);
        assert!((grid_max - 0.25).abs() < 1e-9);
        assert!(params.feed_kernel_deriv(peak).unwrap().abs() < 1e-15);
    }

    #[test]
    fn feed_kernel_derivative_limits() {
        let params = p(1.0, 2.0, 1.0);
        assert_eq!(params.feed_kernel_deriv(-0.5).unwrap(), 0.0);
        assert!(params.feed_kernel_deriv(0.0).is_err());
        assert_eq!(params.feed_kernel_deriv_one_sided(0.0, Side::Right), 1.0);
        assert_eq!(params.feed_kernel_deriv_one_sided(0.0, Side::Left), 0.0);
        assert!((params.feed_kernel_deriv(1e-12).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reset_kernel_values() {
        let params = p(1.0, 0.99, 1.0);
        assert_eq!(params.reset_kernel(0.0), 1.0);
        assert_eq!(params.reset_kernel(-0.1), 0.0);
        assert!((params.reset_kernel(1.0) - 0.3715766910220457).abs() < 1e-15);
        assert!((params.reset_kernel_deriv(1.0) + 0.99 * 0.3715766910220457).abs() < 1e-15);
    }

    #[test]
    fn rejects_degenerate_rates() {
        assert!(NeuronParams::new(1.0, 1.0, 1.0).is_err());
        assert!(NeuronParams::new(1.0, 1.0 + 1e-10, 1.0).is_err());
        assert!(NeuronParams::new(1.0, -1.0, 1.0).is_err());
        assert!(NeuronParams::new(1.0, 2.0, 0.0).is_err());
        assert!(NeuronParams::new(0.999, 1.0, 1.0).is_ok());
    }

    #[test]
    fn close_rates_do_not_cancel() {
        // α → β limit of the kernel is t·e^{-βt}
        let params = p(1.0, 1.0 + 1e-8, 1.0);
        let t: f64 = 1.3;
        let limit = t * (-t).exp();
        assert!((params.feed_kernel(t) - limit).abs() < 1e-7);
    }

    #[test]
    fn crossing_hand_solved() {
        // u = e^{-t}: u - u² = 3/16, larger root u = 3/4
        let params = p(1.0, 2.0, 0.1875);
        let state = SegmentState::new(1.0, -1.0, 0.0);
        let t = earliest_crossing(&state, &params, f64::INFINITY)
            .unwrap()
            .unwrap();
        assert!((t - 0.28768207245178085).abs() < 1e-12);
    }

    #[test]
    fn crossing_absent_or_outside_window() {
        let params = p(1.0, 2.0, 1.0);
        let state = SegmentState::new(0.1, 0.0, 0.0);
        assert_eq!(earliest_crossing(&state, &params, f64::INFINITY).unwrap(), None);

        let params = p(1.0, 2.0, 0.1875);
        let state = SegmentState::new(1.0, -1.0, 0.0);
        assert_eq!(earliest_crossing(&state, &params, 0.2).unwrap(), None);
    }

    #[test]
    fn crossing_rejects_empty_window() {
        let params = p(1.0, 2.0, 1.0);
        let state = SegmentState::new(1.0, -1.0, 3.0);
        assert!(earliest_crossing(&state, &params, 3.0).is_err());
        assert!(earliest_crossing(&state, &params, 2.0).is_err());
    }

    #[test]
    fn crossing_respects_reference_time() {
        let params = p(1.0, 2.0, 0.1875);
        let state = SegmentState::new(1.0, -1.0, 10.0);
        let t = earliest_crossing(&state, &params, f64::INFINITY)
            .unwrap()
            .unwrap();
        assert!((t - 10.28768207245178).abs() < 1e-12);
    }

    #[test]
    fn rebase_preserves_curve() {
        let params = p(0.7, 1.9, 1.0);
        let mut state = SegmentState::new(2.0, -1.5, 0.3);
        let before = state.potential(&params, 2.0);
        state.rebase(&params, 1.1);
        assert!((state.potential(&params, 2.0) - before).abs() < 1e-14);
        assert_eq!(state.t_ref, 1.1);
    }

    #[test]
    fn input_then_reset_matches_kernels() {
        let params = p(1.0, 2.0, 0.1875);
        let mut state = SegmentState::default();
        state.add_input(&params, 0.0, 1.0);
        assert!((state.potential(&params, 0.7) - params.feed_kernel(0.7)).abs() < 1e-15);
        state.reset(&params, 0.4);
        let expected = params.feed_kernel(0.9) - params.theta * params.reset_kernel(0.5);
        assert!((state.potential(&params, 0.9) - expected).abs() < 1e-15);
    }
}
