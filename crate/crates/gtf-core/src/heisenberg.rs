//! The extended translation group acting on theta parameters: elements
//! (t, a, b) with multiplication
//! (t1, a1, b1)(t2, a2, b2) = (t1 + t2 - phi(a1; b2), a1 + a2, b1 + b2),
//! where phi(a; b) = sum_k a^k / k! b_k, together with the operator and
//! matrix pictures of the same data.

use num_complex::Complex64;

use crate::error::GtfError;
use crate::params::{
    exp_two_pi_i, factorial, horner_positive, phase_eval, shifted_params, validate_domain,
    ParameterVector, PhasePolynomial,
};

/// phi(a; b) for a coefficient slice b of length N.
fn phase_on(a: Complex64, b: &[Complex64]) -> Complex64 {
    let coeffs: Vec<Complex64> = b
        .iter()
        .enumerate()
        .map(|(i, &bk)| bk / factorial(i + 1))
        .collect();
    horner_positive(a, &coeffs)
}

/// A group element (t, a, b). The scalar part is kept as the logarithm
/// t with lambda = exp(2 pi i t); its real part is reduced into [0, 1),
/// while a nonzero imaginary part encodes a non-unit |lambda|, which the
/// composition law produces for generic complex a and b.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    t: Complex64,
    a: Complex64,
    b: Vec<Complex64>,
}

impl GroupElement {
    pub fn new(t: Complex64, a: Complex64, b: Vec<Complex64>) -> Self {
        Self {
            t: reduce_log(t),
            a,
            b,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            t: Complex64::new(0.0, 0.0),
            a: Complex64::new(0.0, 0.0),
            b: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Log of the scalar part, real part in [0, 1).
    pub fn t(&self) -> Complex64 {
        self.t
    }

    /// The scalar lambda = exp(2 pi i t).
    pub fn lambda(&self) -> Complex64 {
        exp_two_pi_i(self.t)
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn b(&self) -> &[Complex64] {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }
}

fn reduce_log(t: Complex64) -> Complex64 {
    Complex64::new(t.re.rem_euclid(1.0), t.im)
}

/// Group multiplication. The scalar part picks up -phi(a1; b2): the
/// translation part of g1 commutes past the modulation part of g2 at the
/// cost of that phase.
pub fn group_multiply(g1: &GroupElement, g2: &GroupElement) -> Result<GroupElement, GtfError> {
    if g1.n() != g2.n() {
        return Err(GtfError::DimensionMismatch(format!(
            "group elements of sizes {} and {}",
            g1.n(),
            g2.n()
        )));
    }
    let t = g1.t + g2.t - phase_on(g1.a, &g2.b);
    let a = g1.a + g2.a;
    let b: Vec<Complex64> = g1.b.iter().zip(&g2.b).map(|(&x, &y)| x + y).collect();
    Ok(GroupElement::new(t, a, b))
}

/// The right inverse (-t - phi(a; b), -a, -b), so g * inverse(g) is the
/// identity exactly. It is two-sided on the classical stratum (only b_1
/// nonzero) and two-sided mod 1 on the integer lattice.
pub fn inverse(g: &GroupElement) -> GroupElement {
    let t = -g.t - phase_on(g.a, &g.b);
    let a = -g.a;
    let b: Vec<Complex64> = g.b.iter().map(|&x| -x).collect();
    GroupElement::new(t, a, b)
}

/// The index-shift operator: returns the multiplier exp(-2 pi i phi(a))
/// and the shifted parameters, so that
/// theta_eval(shifted) = multiplier * theta_eval_offset(params, a).
pub fn apply_t(a: Complex64, params: &ParameterVector) -> (Complex64, ParameterVector) {
    let phi = PhasePolynomial::new(params.clone());
    let multiplier = exp_two_pi_i(-phase_eval(a, &phi));
    (multiplier, shifted_params(a, params))
}

/// The modulation operator: adds b to the parameters componentwise. Fails
/// if the shifted top parameter leaves the convergence domain.
pub fn apply_s(b: &[Complex64], params: &ParameterVector) -> Result<ParameterVector, GtfError> {
    let n = params.len();
    if b.len() != n {
        return Err(GtfError::DimensionMismatch(format!(
            "shift of length {} against {} parameters",
            b.len(),
            n
        )));
    }
    let taus: Vec<Complex64> = params.taus().iter().zip(b).map(|(&t, &s)| t + s).collect();
    let out = crate::params::from_taus_unchecked(taus);
    validate_domain(&out)?;
    Ok(out)
}

/// The phase exp(-2 pi i phi(a; b)) by which the two operator orderings
/// T_a S_b and S_b T_a differ.
pub fn commutation_phase(a: Complex64, b: &[Complex64]) -> Complex64 {
    exp_two_pi_i(-phase_on(a, b))
}

/// Square matrix of size N+2 realizing a group element on column vectors
/// (p, tau_1, ..., tau_N, 1): the first row accumulates phase, the middle
/// band is the Taylor shift by a, and the last column adds b.
#[derive(Debug, Clone, PartialEq)]
pub struct RepMatrix {
    n: usize,
    e: Vec<Complex64>,
}

impl RepMatrix {
    /// Parameter count N; the matrix itself is (N+2) x (N+2).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.n + 2
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.e[i * (self.n + 2) + j]
    }

    pub fn identity(n: usize) -> Self {
        let size = n + 2;
        let mut e = vec![Complex64::new(0.0, 0.0); size * size];
        for i in 0..size {
            e[i * size + i] = Complex64::new(1.0, 0.0);
        }
        Self { n, e }
    }

    pub fn mul(&self, other: &RepMatrix) -> Result<RepMatrix, GtfError> {
        if self.n != other.n {
            return Err(GtfError::DimensionMismatch(format!(
                "matrices for {} and {} parameters",
                self.n, other.n
            )));
        }
        let size = self.n + 2;
        let mut e = vec![Complex64::new(0.0, 0.0); size * size];
        for i in 0..size {
            for k in 0..size {
                let aik = self.entry(i, k);
                if aik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..size {
                    e[i * size + j] += aik * other.entry(k, j);
                }
            }
        }
        Ok(RepMatrix { n: self.n, e })
    }
}

/// Builds the matrix of a group element:
/// row 0 is (1, a, a^2/2!, ..., a^N/N!, -t), rows 1..=N carry the
/// upper-triangular Taylor band a^(j-i)/(j-i)! with b_i in the last
/// column, and the final row is the unit row fixing the constant slot.
pub fn matrix_rep(g: &GroupElement) -> RepMatrix {
    let n = g.n();
    let size = n + 2;
    let mut e = vec![Complex64::new(0.0, 0.0); size * size];
    let mut apow = vec![Complex64::new(1.0, 0.0); n + 1];
    for k in 1..=n {
        apow[k] = apow[k - 1] * g.a;
    }
    e[0] = Complex64::new(1.0, 0.0);
    for k in 1..=n {
        e[k] = apow[k] / factorial(k);
    }
    e[n + 1] = -g.t;
    for i in 1..=n {
        for j in i..=n {
            e[i * size + j] = apow[j - i] / factorial(j - i);
        }
        e[i * size + n + 1] = g.b[i - 1];
    }
    e[(n + 1) * size + n + 1] = Complex64::new(1.0, 0.0);
    RepMatrix { n, e }
}

/// Applies a representation matrix to the column (phase, tau, 1):
/// returns the accumulated phase and the transformed parameters. The
/// output phase of matrix_rep(g) is phase + phi(a; tau) - t.
pub fn matrix_apply(
    m: &RepMatrix,
    phase: Complex64,
    params: &ParameterVector,
) -> Result<(Complex64, ParameterVector), GtfError> {
    let n = params.len();
    if m.n != n {
        return Err(GtfError::DimensionMismatch(format!(
            "matrix for {} parameters applied to {}",
            m.n, n
        )));
    }
    let size = n + 2;
    let mut col = Vec::with_capacity(size);
    col.push(phase);
    col.extend_from_slice(params.taus());
    col.push(Complex64::new(1.0, 0.0));
    let mut out = vec![Complex64::new(0.0, 0.0); size];
    for (i, o) in out.iter_mut().enumerate() {
        for (j, &cj) in col.iter().enumerate() {
            *o += m.entry(i, j) * cj;
        }
    }
    let taus = out[1..=n].to_vec();
    Ok((out[0], crate::params::from_taus_unchecked(taus)))
}
