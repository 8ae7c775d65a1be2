//! Certified summation of the theta series
//! Theta(tau) = sum_{n in Z} exp(2 pi i phi(n)),
//! optionally with a summation offset a (n -> n + a) and a derivative
//! prefactor prod_k (2 pi i (n+a)^k / k!)^{alpha_k}.
//!
//! Terms are summed in the fixed order 0, +1, -1, +2, -2, ... with Neumaier
//! compensation, one side at a time stopping independently. A side stops
//! only once a certificate holds: past the Cauchy root bounds of the
//! magnitude difference polynomial the term magnitudes decrease strictly
//! and at a worsening-free rate, so a geometric bound covers the tail.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::GtfError;
use crate::params::{
    factorial, horner_positive, phase_derivative, scaled_coeffs, validate_domain, ParameterVector,
    PhasePolynomial,
};

/// Per-side cap on the summation range.
pub const DEFAULT_RANGE_CAP: i64 = 1_000_000;

/// Above this log-magnitude a term does not fit in an f64.
const LOG_OVERFLOW: f64 = 709.0;

/// Below this log-magnitude a term underflows to exactly zero.
const LOG_FLOOR: f64 = -745.0;

/// Placeholder tail for a side whose terms underflowed to zero.
const UNDERFLOW_TAIL: f64 = 1e-290;

/// Derivative order per parameter axis. Entry k (0-based) differentiates
/// with respect to tau_{k+1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndex {
    orders: Vec<u32>,
}

impl MultiIndex {
    pub fn new(orders: Vec<u32>) -> Self {
        Self { orders }
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    /// Total differentiation order |alpha|.
    pub fn total_order(&self) -> u32 {
        self.orders.iter().sum()
    }
}

/// A certified evaluation: |value - exact| <= tail_bound, and on success
/// tail_bound <= the requested tolerance. The summed range always
/// contains n = 0, so n_min <= 0 <= n_max.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub value: Complex64,
    pub tail_bound: f64,
    pub n_min: i64,
    pub n_max: i64,
    pub terms_summed: u64,
}

#[derive(Clone, Copy, Default)]
struct Neumaier {
    s: f64,
    c: f64,
}

impl Neumaier {
    #[inline]
    fn add(&mut self, v: f64) {
        let t = self.s + v;
        if self.s.abs() >= v.abs() {
            self.c += (self.s - t) + v;
        } else {
            self.c += (v - t) + self.s;
        }
        self.s = t;
    }

    #[inline]
    fn value(self) -> f64 {
        self.s + self.c
    }
}

/// Coefficients of h(n+1) - h(n) for h given by real coefficients
/// h_j n^j, j = 0..=deg.
fn forward_diff(h: &[f64]) -> Vec<f64> {
    let deg = h.len() - 1;
    let mut d = vec![0.0; deg.max(1)];
    for (j, &hj) in h.iter().enumerate().skip(1) {
        // (n+1)^j - n^j = sum_{i<j} C(j,i) n^i
        let mut binom = 1.0f64;
        for (i, di) in d.iter_mut().enumerate().take(j) {
            // binom = C(j,i) built incrementally
            if i > 0 {
                binom = binom * ((j - i + 1) as f64) / (i as f64);
            }
            *di += hj * binom;
        }
    }
    d
}

fn poly_derivative(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![];
    }
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(j, &cj)| cj * j as f64)
        .collect()
}

/// Cauchy bound: every real root of the polynomial has magnitude below
/// 1 + max |c_i / c_lead|. Zero for constants.
fn cauchy_bound(c: &[f64]) -> f64 {
    if c.len() <= 1 {
        return 0.0;
    }
    let lead = *c.last().unwrap();
    let mut m = 0.0f64;
    for &ci in &c[..c.len() - 1] {
        m = m.max((ci / lead).abs());
    }
    1.0 + m
}

struct Side {
    sign: f64,
    steps: i64,
    last_logmag: f64,
    window: Vec<f64>,
    win: usize,
    x_need: i64,
    off_guard: i64,
    floor_hits: usize,
    done: bool,
    tail: f64,
}

impl Side {
    fn new(sign: f64, win: usize, x_need: i64, off_guard: i64, logmag0: f64) -> Self {
        Self {
            sign,
            steps: 0,
            last_logmag: logmag0,
            window: Vec::with_capacity(win),
            win,
            x_need,
            off_guard,
            floor_hits: 0,
            done: false,
            tail: f64::INFINITY,
        }
    }

    fn next_n(&self) -> i64 {
        (self.steps + 1) * self.sign as i64
    }

    /// Feeds the log-magnitude of the newest term and decides whether the
    /// side's tail is certified below `target`.
    fn observe(&mut self, logmag: f64, target: f64) {
        self.steps += 1;
        let past_thresholds = self.steps >= self.x_need && self.steps >= self.off_guard;
        if logmag <= LOG_FLOOR && self.last_logmag <= LOG_FLOOR {
            self.floor_hits += 1;
            if self.floor_hits >= self.win && past_thresholds {
                self.tail = UNDERFLOW_TAIL;
                self.done = true;
            }
            return;
        }
        self.floor_hits = 0;
        let ratio = logmag - self.last_logmag;
        self.last_logmag = logmag;
        if self.window.len() == self.win {
            self.window.remove(0);
        }
        self.window.push(ratio);
        if !past_thresholds || self.window.len() < self.win {
            return;
        }
        let mut worst = f64::NEG_INFINITY;
        for &r in &self.window {
            worst = worst.max(r);
        }
        if worst >= 0.0 {
            return;
        }
        let r = worst.exp();
        let tail = logmag.exp() * r / (1.0 - r);
        if tail <= target {
            self.tail = tail;
            self.done = true;
        }
    }
}

struct EngineOut {
    value: Complex64,
    trunc: f64,
    allowance: f64,
    n_min: i64,
    n_max: i64,
    terms: u64,
}

/// One term of the series at x = n + offset: value, log-magnitude, and the
/// rounding-allowance weight.
struct Term {
    value: Complex64,
    logmag: f64,
    allow: f64,
}

struct TermCtx<'a> {
    coeffs: &'a [Complex64],
    abs_coeffs: &'a [f64],
    offset: Complex64,
    alpha: Option<&'a [u32]>,
    c1: f64,
    c2: f64,
}

impl TermCtx<'_> {
    fn term(&self, n: i64) -> Term {
        let x = Complex64::new(n as f64, 0.0) + self.offset;
        let phi = horner_positive(x, self.coeffs);
        let mut logmag = -TAU * phi.im;
        let mut angle = TAU * (phi.re - phi.re.floor());
        if let Some(alpha) = self.alpha {
            let lx = x.norm().ln();
            let ax = x.arg();
            for (i, &ak) in alpha.iter().enumerate() {
                if ak == 0 {
                    continue;
                }
                let k = (i + 1) as f64;
                let a = ak as f64;
                logmag += a * (TAU.ln() + k * lx - factorial(i + 1).ln());
                angle += a * (std::f64::consts::FRAC_PI_2 + k * ax);
            }
        }
        let mag = logmag.exp();
        let value = mag * Complex64::cis(angle);
        let ax = x.norm();
        let mut s_tilde = 0.0f64;
        for &c in self.abs_coeffs.iter().rev() {
            s_tilde = (s_tilde + c) * ax;
        }
        Term {
            value,
            logmag,
            allow: mag * (self.c1 * s_tilde + self.c2),
        }
    }
}

/// Certificate thresholds for one direction: the scan index past which the
/// magnitude differences are positive and increasing.
fn direction_threshold(g: &[f64], sign: f64) -> i64 {
    let h: Vec<f64> = g
        .iter()
        .enumerate()
        .map(|(j, &gj)| if sign < 0.0 && j % 2 == 1 { -gj } else { gj })
        .collect();
    let delta = forward_diff(&h);
    let ddelta = poly_derivative(&delta);
    let x = cauchy_bound(&delta).max(cauchy_bound(&ddelta));
    (x.ceil() as i64).max(1)
}

fn sum_series(
    params: &ParameterVector,
    offset: Complex64,
    alpha: Option<&[u32]>,
    tol: f64,
    with_allowance: bool,
) -> Result<EngineOut, GtfError> {
    assert!(tol > 0.0 && tol.is_finite(), "tolerance must be positive");
    let n_params = params.len();
    let mut coeffs = scaled_coeffs(params);
    // With a zero offset the series runs over integers, where an integer
    // part of any phase coefficient contributes an exact multiple of 1 per
    // term. Dropping it here keeps the Horner magnitudes small, so large
    // lattice translates of the parameters do not cost mod-1 precision.
    if offset == Complex64::new(0.0, 0.0) {
        for c in coeffs.iter_mut() {
            c.re -= c.re.round();
        }
    }
    let abs_coeffs: Vec<f64> = coeffs.iter().map(|c| c.norm()).collect();

    let overflow_err = || {
        if offset.im != 0.0 {
            GtfError::ComplexOffsetDivergence(offset.im)
        } else {
            GtfError::RangeOverflow {
                cap: DEFAULT_RANGE_CAP,
                tol,
            }
        }
    };

    // Imaginary part of phi(n + offset) as a real polynomial in n.
    let phi = PhasePolynomial::new(params.clone());
    let g: Vec<f64> = (0..=n_params)
        .map(|j| phase_derivative(j, offset, &phi).im / factorial(j))
        .collect();

    let total_order = alpha.map(|a| a.iter().sum::<u32>()).unwrap_or(0);
    let off_guard = if alpha.is_some() {
        (2.0 * offset.norm()).ceil() as i64 + 4
    } else {
        0
    };
    let win = n_params.max(2);
    let ctx = TermCtx {
        coeffs: &coeffs,
        abs_coeffs: &abs_coeffs,
        offset,
        alpha,
        c1: 40.0 * (n_params as f64 + 1.0),
        c2: 12.0 + 14.0 * total_order as f64,
    };

    let t0 = ctx.term(0);
    if t0.logmag > LOG_OVERFLOW {
        return Err(overflow_err());
    }
    let mut re = Neumaier::default();
    let mut im = Neumaier::default();
    re.add(t0.value.re);
    im.add(t0.value.im);
    let mut allow_acc = t0.allow;
    let mut terms: u64 = 1;

    let mut plus = Side::new(
        1.0,
        win,
        direction_threshold(&g, 1.0),
        off_guard,
        t0.logmag,
    );
    let mut minus = Side::new(
        -1.0,
        win,
        direction_threshold(&g, -1.0),
        off_guard,
        t0.logmag,
    );

    let mut side_target = 0.35 * tol;
    let mut rounds = 0u32;
    loop {
        for side in [&mut plus, &mut minus] {
            if side.done {
                continue;
            }
            if side.steps >= DEFAULT_RANGE_CAP {
                return Err(overflow_err());
            }
            let n = side.next_n();
            let t = ctx.term(n);
            if t.logmag > LOG_OVERFLOW {
                return Err(overflow_err());
            }
            re.add(t.value.re);
            im.add(t.value.im);
            allow_acc += t.allow;
            terms += 1;
            side.observe(t.logmag, side_target);
        }
        if plus.done && minus.done {
            let allowance = if with_allowance {
                1.25 * f64::EPSILON * allow_acc
            } else {
                0.0
            };
            let trunc = plus.tail + minus.tail;
            if trunc + allowance <= tol {
                return Ok(EngineOut {
                    value: Complex64::new(re.value(), im.value()),
                    trunc,
                    allowance,
                    n_min: -minus.steps,
                    n_max: plus.steps,
                    terms,
                });
            }
            // The floating-point allowance ate the budget; push the
            // truncation further down if any room is left.
            rounds += 1;
            let room = tol - allowance;
            if rounds > 4 || room <= 0.0 {
                return Err(overflow_err());
            }
            side_target = 0.45 * room;
            if plus.tail > side_target {
                plus.done = false;
            }
            if minus.tail > side_target {
                minus.done = false;
            }
        }
    }
}

/// Evaluates the series at the given parameters with a certified absolute
/// error below `tol`.
pub fn theta_eval(params: &ParameterVector, tol: f64) -> Result<EvalResult, GtfError> {
    validate_domain(params)?;
    let out = sum_series(params, Complex64::new(0.0, 0.0), None, tol, true)?;
    Ok(finish(out))
}

/// Evaluates the series with the summation variable shifted by `a`.
///
/// An integer real `a` reindexes over the same term set, so the call
/// delegates to [`theta_eval`] and returns the identical result. Non-real
/// offsets are accepted as long as the certificate still closes; when the
/// imaginary part inflates the terms past what the tolerance or the f64
/// range can absorb, the error is `ComplexOffsetDivergence`.
pub fn theta_eval_offset(
    params: &ParameterVector,
    a: Complex64,
    tol: f64,
) -> Result<EvalResult, GtfError> {
    validate_domain(params)?;
    if a.im == 0.0 && a.re.fract() == 0.0 {
        return theta_eval(params, tol);
    }
    let out = sum_series(params, a, None, tol, true)?;
    Ok(finish(out))
}

/// The mixed partial derivative of the series with respect to the
/// parameters: order alpha_k along tau_k. Differentiating tau_k brings
/// down one factor 2 pi i n^k / k! per order.
pub fn theta_derivative(
    alpha: &MultiIndex,
    params: &ParameterVector,
    tol: f64,
) -> Result<EvalResult, GtfError> {
    validate_domain(params)?;
    if alpha.len() != params.len() {
        return Err(GtfError::DimensionMismatch(format!(
            "multi-index has {} entries for {} parameters",
            alpha.len(),
            params.len()
        )));
    }
    let out = if alpha.total_order() == 0 {
        sum_series(params, Complex64::new(0.0, 0.0), None, tol, true)?
    } else {
        sum_series(
            params,
            Complex64::new(0.0, 0.0),
            Some(alpha.orders()),
            tol,
            true,
        )?
    };
    Ok(finish(out))
}

/// Shared kernel entry for characteristic evaluations: real parameter
/// shifts plus a summation offset.
pub(crate) fn theta_eval_shifted_offset(
    params: &ParameterVector,
    shifts: &[f64],
    offset: f64,
    tol: f64,
) -> Result<EvalResult, GtfError> {
    let taus = params
        .taus()
        .iter()
        .zip(shifts)
        .map(|(&t, &s)| t + s)
        .collect();
    let shifted = crate::params::from_taus_unchecked(taus);
    validate_domain(&shifted)?;
    let out = sum_series(&shifted, Complex64::new(offset, 0.0), None, tol, true)?;
    Ok(finish(out))
}

/// Certifies a truncation range for the plain series: summing n over
/// [n_min, n_max] leaves a tail below the returned bound, which is at most
/// `tol`. Term magnitudes decrease strictly beyond the range.
pub fn truncation_bound(params: &ParameterVector, tol: f64) -> Result<(i64, i64, f64), GtfError> {
    validate_domain(params)?;
    let out = sum_series(params, Complex64::new(0.0, 0.0), None, tol, false)?;
    Ok((out.n_min, out.n_max, out.trunc))
}

/// Index range certified for the weighted series, for callers that
/// re-sum the same terms themselves (the finite-difference route). The
/// target is tightened two decades so the range's own truncation error
/// stays out of the caller's budget.
pub(crate) fn derivative_range(
    params: &ParameterVector,
    alpha: &MultiIndex,
    tol: f64,
) -> Result<(i64, i64), GtfError> {
    let inner = (tol * 1e-2).max(1e-300);
    let alpha_ref = if alpha.total_order() == 0 {
        None
    } else {
        Some(alpha.orders())
    };
    let out = sum_series(params, Complex64::new(0.0, 0.0), alpha_ref, inner, false)?;
    Ok((out.n_min, out.n_max))
}

fn finish(out: EngineOut) -> EvalResult {
    EvalResult {
        value: out.value,
        tail_bound: out.trunc + out.allowance,
        n_min: out.n_min,
        n_max: out.n_max,
        terms_summed: out.terms,
    }
}
