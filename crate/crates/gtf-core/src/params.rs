//! Parameter vectors and the phase polynomial
//! phi(a) = sum_{k=1..N} a^k / k! * tau_k.

use num_complex::Complex64;

use crate::error::GtfError;

/// Largest supported parameter count. Factorials up to 20! are exactly
/// representable in f64, which keeps the k! scaling exact.
pub const MAX_PARAMS: usize = 20;

pub(crate) const FACTORIALS: [f64; MAX_PARAMS + 1] = {
    let mut t = [1.0f64; MAX_PARAMS + 1];
    let mut k = 1;
    let mut acc = 1u64;
    while k <= MAX_PARAMS {
        acc *= k as u64;
        t[k] = acc as f64;
        k += 1;
    }
    t
};

/// k! as an f64, exact for k <= 20.
#[inline]
pub(crate) fn factorial(k: usize) -> f64 {
    FACTORIALS[k]
}

/// The tuple (tau_1, ..., tau_N) driving a theta series.
///
/// Construction only bounds the length; evenness of N and positivity of
/// Im(tau_N) are checked by [`validate_domain`], so out-of-domain vectors
/// can be built and then rejected with a precise error.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    taus: Vec<Complex64>,
}

impl ParameterVector {
    pub fn new(taus: Vec<Complex64>) -> Result<Self, GtfError> {
        if taus.is_empty() || taus.len() > MAX_PARAMS {
            return Err(GtfError::DimensionMismatch(format!(
                "parameter count must lie in 1..={}, got {}",
                MAX_PARAMS,
                taus.len()
            )));
        }
        Ok(Self { taus })
    }

    /// Number of parameters N.
    pub fn len(&self) -> usize {
        self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn taus(&self) -> &[Complex64] {
        &self.taus
    }

    /// tau_k with the conventional 1-based index, so tau(1) is the linear
    /// coefficient and tau(N) the top one.
    pub fn tau(&self, k: usize) -> Complex64 {
        self.taus[k - 1]
    }

    pub fn validate_domain(&self) -> Result<(), GtfError> {
        validate_domain(self)
    }
}

/// Checks the convergence domain: N even and Im(tau_N) > 0.
pub fn validate_domain(params: &ParameterVector) -> Result<(), GtfError> {
    let n = params.len();
    if !n.is_multiple_of(2) {
        return Err(GtfError::OddParameterCount(n));
    }
    let top = params.tau(n).im;
    if top <= 0.0 {
        return Err(GtfError::NonPositiveLastImaginary(top));
    }
    Ok(())
}

/// phi(a) = sum_k a^k / k! * tau_k with the k! folded into the
/// coefficients once, so every evaluation shares the same rounding.
#[derive(Debug, Clone)]
pub struct PhasePolynomial {
    params: ParameterVector,
    coeffs: Vec<Complex64>,
}

impl PhasePolynomial {
    pub fn new(params: ParameterVector) -> Self {
        let coeffs = scaled_coeffs(&params);
        Self { params, coeffs }
    }

    pub fn params(&self) -> &ParameterVector {
        &self.params
    }

    pub fn degree(&self) -> usize {
        self.params.len()
    }

    pub fn eval(&self, a: Complex64) -> Complex64 {
        horner_positive(a, &self.coeffs)
    }
}

pub(crate) fn scaled_coeffs(params: &ParameterVector) -> Vec<Complex64> {
    params
        .taus()
        .iter()
        .enumerate()
        .map(|(i, &t)| t / factorial(i + 1))
        .collect()
}

/// Evaluates sum_{k=1..K} coeffs[k-1] * a^k by Horner's rule. The constant
/// term is zero by construction, so the recursion ends on a final multiply.
#[inline]
pub(crate) fn horner_positive(a: Complex64, coeffs: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = (acc + c) * a;
    }
    acc
}

/// exp(2 pi i z) for complex z, with the real part reduced mod 1 before the
/// trig call so large phases keep full angular accuracy.
#[inline]
pub(crate) fn exp_two_pi_i(z: Complex64) -> Complex64 {
    let mag = (-std::f64::consts::TAU * z.im).exp();
    let frac = z.re - z.re.floor();
    mag * Complex64::cis(std::f64::consts::TAU * frac)
}

/// phi(a) for the given parameters.
pub fn phase_eval(a: Complex64, phi: &PhasePolynomial) -> Complex64 {
    phi.eval(a)
}

/// The m-th derivative phi^(m)(a) = tau_m + sum_{1<=k<=N-m} a^k / k! * tau_{k+m}.
///
/// m = 0 returns phi(a) itself and m > N returns zero. For a = 0 the result
/// is tau_m bit for bit, which downstream shift identities rely on.
pub fn phase_derivative(m: usize, a: Complex64, phi: &PhasePolynomial) -> Complex64 {
    let n = phi.degree();
    if m == 0 {
        return phi.eval(a);
    }
    if m > n {
        return Complex64::new(0.0, 0.0);
    }
    let tau_m = phi.params.tau(m);
    if a == Complex64::new(0.0, 0.0) {
        return tau_m;
    }
    let shifted: Vec<Complex64> = (1..=n - m)
        .map(|k| phi.params.tau(k + m) / factorial(k))
        .collect();
    tau_m + horner_positive(a, &shifted)
}

/// The parameter shift induced by translating the summation variable by a:
/// component m of the result is phi^(m)(a). Feeding a = 0 returns the input
/// unchanged, and the shift composes additively in a up to rounding.
pub fn shifted_params(a: Complex64, params: &ParameterVector) -> ParameterVector {
    if a == Complex64::new(0.0, 0.0) {
        return params.clone();
    }
    let phi = PhasePolynomial::new(params.clone());
    let taus = (1..=params.len())
        .map(|m| phase_derivative(m, a, &phi))
        .collect();
    ParameterVector { taus }
}

/// Builds a vector without the length check, for internal shifts whose
/// length is already known to be valid.
pub(crate) fn from_taus_unchecked(taus: Vec<Complex64>) -> ParameterVector {
    ParameterVector { taus }
}
