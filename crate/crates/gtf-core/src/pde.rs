//! The built-in catalog of parameter-space differential identities, their
//! exact symbolic verification, and numeric residuals with an independent
//! finite-difference route.
//!
//! Differentiating the series along tau_k multiplies each term by
//! 2 pi i n^k / k!, so a constant-coefficient operator annihilates the
//! series exactly when its symbol cancels as a polynomial in n over the
//! exact coefficient ring generated by pi and i. That check is integer
//! arithmetic; no floating point is involved.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dd::{sin_cos_small, Dd, DdComplex, TAU_DD};
use crate::error::GtfError;
use crate::params::{
    exp_two_pi_i, factorial, horner_positive, scaled_coeffs, validate_domain, ParameterVector,
};
use crate::series::{derivative_range, theta_derivative, theta_eval, MultiIndex};

/// An exact coefficient (num/den) * pi^pi_pow * i^i_pow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymCoeff {
    pub num: i64,
    pub den: i64,
    pub pi_pow: i32,
    pub i_pow: u8,
}

impl SymCoeff {
    pub fn new(num: i64, den: i64, pi_pow: i32, i_pow: u8) -> Self {
        assert!(den != 0, "zero denominator");
        Self {
            num,
            den,
            pi_pow,
            i_pow: i_pow % 4,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        let base = (self.num as f64 / self.den as f64) * PI.powi(self.pi_pow);
        match self.i_pow % 4 {
            0 => Complex64::new(base, 0.0),
            1 => Complex64::new(0.0, base),
            2 => Complex64::new(-base, 0.0),
            _ => Complex64::new(0.0, -base),
        }
    }
}

/// One summand coeff * D^alpha of a differential operator.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeTerm {
    pub coeff: SymCoeff,
    pub alpha: MultiIndex,
}

/// A named constant-coefficient operator in the parameter derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeSpec {
    pub name: String,
    pub terms: Vec<PdeTerm>,
}

fn spec(name: &str, terms: Vec<(SymCoeff, Vec<u32>)>) -> PdeSpec {
    PdeSpec {
        name: name.to_string(),
        terms: terms
            .into_iter()
            .map(|(coeff, orders)| PdeTerm {
                coeff,
                alpha: MultiIndex::new(orders),
            })
            .collect(),
    }
}

fn pad(mut orders: Vec<u32>, n: usize) -> Vec<u32> {
    orders.resize(n, 0);
    orders
}

/// The operators annihilating every series with at least n parameters.
/// All of them act termwise through the symbol, so they hold for any
/// even n at or above the largest axis they touch: two operators need
/// only the classical pair, the other four also reach tau_3 and tau_4.
pub fn builtin_pdes(n: usize) -> Vec<PdeSpec> {
    assert!(n >= 2 && n.is_multiple_of(2), "parameter count must be even, at least 2");
    let mut out = vec![
        spec(
            "heat",
            vec![
                (SymCoeff::new(1, 1, 0, 1), pad(vec![0, 1], n)),
                (SymCoeff::new(-1, 4, -1, 0), pad(vec![2], n)),
            ],
        ),
        spec(
            "quartic",
            vec![
                (SymCoeff::new(1, 1, 0, 0), pad(vec![4], n)),
                (SymCoeff::new(16, 1, 2, 0), pad(vec![0, 2], n)),
            ],
        ),
    ];
    if n >= 4 {
        out.push(spec(
            "tau-heat",
            vec![
                (SymCoeff::new(12, 1, 1, 1), pad(vec![0, 0, 0, 1], n)),
                (SymCoeff::new(-1, 1, 0, 0), pad(vec![0, 2], n)),
            ],
        ));
        out.push(spec(
            "delta-mixed",
            vec![
                (SymCoeff::new(48, 1, 2, 0), pad(vec![0, 0, 0, 1], n)),
                (SymCoeff::new(1, 1, 0, 0), pad(vec![2, 1], n)),
            ],
        ));
        out.push(spec(
            "eta-mixed",
            vec![
                (SymCoeff::new(4, 1, 1, 1), pad(vec![0, 0, 0, 1], n)),
                (SymCoeff::new(-1, 1, 0, 0), pad(vec![0, 2], n)),
                (SymCoeff::new(1, 1, 0, 0), pad(vec![1, 0, 1], n)),
            ],
        ));
        out.push(spec(
            "rho-cubic",
            vec![
                (SymCoeff::new(24, 1, 2, 0), pad(vec![0, 0, 1], n)),
                (SymCoeff::new(1, 1, 0, 0), pad(vec![3], n)),
            ],
        ));
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
struct Rat {
    n: i128,
    d: i128,
}

impl Rat {
    fn zero() -> Self {
        Self { n: 0, d: 1 }
    }

    fn new(n: i128, d: i128) -> Option<Self> {
        if d == 0 {
            return None;
        }
        let g = gcd(n.unsigned_abs(), d.unsigned_abs()).max(1) as i128;
        let sign = if d < 0 { -1 } else { 1 };
        Some(Self {
            n: sign * n / g,
            d: sign * d / g,
        })
    }

    fn add(self, o: Rat) -> Option<Rat> {
        let n = self.n.checked_mul(o.d)?.checked_add(o.n.checked_mul(self.d)?)?;
        let d = self.d.checked_mul(o.d)?;
        Rat::new(n, d)
    }

    fn is_zero(self) -> bool {
        self.n == 0
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Checks, in exact arithmetic, that the operator kills the series
/// termwise: each term contributes
/// (num 2^|alpha| / (den prod k!^alpha_k)) pi^(pi_pow+|alpha|)
/// i^(i_pow+|alpha|) n^(sum k alpha_k), and every (n-degree, pi-power)
/// bucket must cancel in both the real and imaginary component.
pub fn symbolic_annihilation(spec: &PdeSpec) -> bool {
    let mut buckets: BTreeMap<(u64, i32), (Rat, Rat)> = BTreeMap::new();
    for term in &spec.terms {
        let orders = term.alpha.orders();
        let total: u32 = orders.iter().sum();
        if total > 120 {
            return false;
        }
        let mut den: i128 = term.coeff.den as i128;
        let mut n_deg: u64 = 0;
        for (i, &ak) in orders.iter().enumerate() {
            n_deg += (i as u64 + 1) * ak as u64;
            for _ in 0..ak {
                den = match den.checked_mul(factorial(i + 1) as i128) {
                    Some(v) => v,
                    None => return false,
                };
            }
        }
        let num = match (term.coeff.num as i128).checked_mul(1i128 << total) {
            Some(v) => v,
            None => return false,
        };
        let r = match Rat::new(num, den) {
            Some(v) => v,
            None => return false,
        };
        let pi_total = term.coeff.pi_pow + total as i32;
        let entry = buckets
            .entry((n_deg, pi_total))
            .or_insert((Rat::zero(), Rat::zero()));
        let slot = match (term.coeff.i_pow as u32 + total) % 4 {
            0 => (Some(r), None),
            1 => (None, Some(r)),
            2 => (Some(Rat::new(-r.n, r.d).unwrap()), None),
            _ => (None, Some(Rat::new(-r.n, r.d).unwrap())),
        };
        if let Some(re) = slot.0 {
            entry.0 = match entry.0.add(re) {
                Some(v) => v,
                None => return false,
            };
        }
        if let Some(im) = slot.1 {
            entry.1 = match entry.1.add(im) {
                Some(v) => v,
                None => return false,
            };
        }
    }
    buckets.values().all(|(re, im)| re.is_zero() && im.is_zero())
}

/// Applies the operator to the series at the given point. Returns the
/// residual and the scale max_i |coeff_i D^alpha_i|, so residual/scale is
/// the meaningful relative size. Tolerances for the inner evaluations are
/// allocated per term from a first rough magnitude pass.
pub fn pde_residual(
    spec: &PdeSpec,
    params: &ParameterVector,
    tol: f64,
) -> Result<(Complex64, f64), GtfError> {
    validate_domain(params)?;
    assert!(tol > 0.0 && tol.is_finite(), "tolerance must be positive");
    let nt = spec.terms.len().max(1);
    let mut mags = Vec::with_capacity(nt);
    for term in &spec.terms {
        let rough = theta_derivative(&term.alpha, params, 1e-4)?;
        mags.push(rough.value.norm() + 1e-4);
    }
    let mut scale = 0.0f64;
    for (term, &m) in spec.terms.iter().zip(&mags) {
        scale = scale.max(term.coeff.to_complex().norm() * m);
    }
    let scale = scale.max(1e-280);
    let mut residual = Complex64::new(0.0, 0.0);
    for (term, &m) in spec.terms.iter().zip(&mags) {
        let cnorm = term.coeff.to_complex().norm().max(1e-280);
        let tol_i = (tol * scale / (3.0 * nt as f64 * cnorm)).max(m * 1e-11);
        let r = theta_derivative(&term.alpha, params, tol_i)?;
        residual += term.coeff.to_complex() * r.value;
    }
    Ok((residual, scale))
}

/// Central-difference stencils per derivative order: (offset, weight),
/// each with O(step^2) truncation error.
const STENCILS: [&[(i32, f64)]; 4] = [
    &[(-1, -0.5), (1, 0.5)],
    &[(-1, 1.0), (0, -2.0), (1, 1.0)],
    &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
    &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
];

/// Independent derivative estimate: composed central differences with
/// O(step^2) truncation error.
///
/// Every stencil point is summed over one common certified index range,
/// so the truncated series is differenced as a single smooth function.
/// Displacing tau_k by eps shifts the phase of term n by exactly
/// eps n^k / k!, so each index contributes its base term times a small
/// stencil bracket; the bracket and the accumulation are carried in
/// double-double, which removes the step^(-order) rounding floor that a
/// plain f64 evaluation of the stencil would have.
pub fn finite_difference(
    alpha: &MultiIndex,
    params: &ParameterVector,
    step: f64,
    tol: f64,
) -> Result<Complex64, GtfError> {
    validate_domain(params)?;
    let n_params = params.len();
    if alpha.len() != n_params {
        return Err(GtfError::DimensionMismatch(format!(
            "multi-index has {} entries for {} parameters",
            alpha.len(),
            n_params
        )));
    }
    assert!(step > 0.0 && step.is_finite(), "step must be positive");
    let total = alpha.total_order();
    if total == 0 {
        return Ok(theta_eval(params, tol)?.value);
    }
    for &ak in alpha.orders() {
        if ak > 4 {
            return Err(GtfError::DimensionMismatch(
                "finite-difference stencils cover per-axis order at most 4".into(),
            ));
        }
    }

    let (lo, hi) = derivative_range(params, alpha, tol)?;
    let axes: Vec<(usize, &[(i32, f64)])> = alpha
        .orders()
        .iter()
        .enumerate()
        .filter(|(_, &ak)| ak > 0)
        .map(|(i, &ak)| (i, STENCILS[ak as usize - 1]))
        .collect();

    // Cartesian product of the per-axis stencils.
    let mut points: Vec<(Vec<i32>, f64)> = vec![(vec![], 1.0)];
    for (_, stencil) in &axes {
        let mut next = Vec::with_capacity(points.len() * stencil.len());
        for (offs, w) in &points {
            for &(o, wo) in *stencil {
                let mut offs = offs.clone();
                offs.push(o);
                next.push((offs, w * wo));
            }
        }
        points = next;
    }

    let coeffs = scaled_coeffs(params);
    let mut acc = DdComplex::default();
    for n in lo..=hi {
        let x = Complex64::new(n as f64, 0.0);
        let base = exp_two_pi_i(horner_positive(x, &coeffs));
        if base == Complex64::new(0.0, 0.0) {
            continue;
        }
        // n^k / k! per active axis, exact to double-double
        let mut npow: Vec<Dd> = Vec::with_capacity(axes.len());
        for (i, _) in &axes {
            let mut p = Dd::from_f64(1.0);
            for _ in 0..=*i {
                p = p.mul_f64(n as f64);
            }
            npow.push(p.div_f64(factorial(i + 1)));
        }
        let mut bracket = DdComplex::default();
        for (offs, w) in &points {
            let mut delta = Dd::from_f64(0.0);
            for (ax, &o) in offs.iter().enumerate() {
                delta = delta.add(npow[ax].mul_f64(step).mul_f64(o as f64));
            }
            let (s, cs) = sin_cos_small(delta.mul(TAU_DD));
            bracket = bracket.add(DdComplex { re: cs, im: s }.mul_f64(*w));
        }
        acc = acc.add(bracket.mul_complex(base));
    }
    Ok(acc.scale_recip(step.powi(total as i32)).to_complex())
}

/// One step of Richardson extrapolation on [`finite_difference`]:
/// (4 F(step/2) - F(step)) / 3 cancels the step^2 truncation term.
pub fn finite_difference_richardson(
    alpha: &MultiIndex,
    params: &ParameterVector,
    step: f64,
    tol: f64,
) -> Result<Complex64, GtfError> {
    let half = finite_difference(alpha, params, step / 2.0, tol)?;
    let full = finite_difference(alpha, params, step, tol)?;
    Ok((4.0 * half - full) / 3.0)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pv(taus: Vec<Complex64>) -> ParameterVector {
        ParameterVector::new(taus).unwrap()
    }

    fn anchor4() -> ParameterVector {
        pv(vec![c(0.3, 0.1), c(0.0, 1.0), c(0.2, 0.0), c(0.0, 2.0)])
    }

    #[test]
    fn catalog_sizes() {
        assert_eq!(builtin_pdes(2).len(), 2);
        assert_eq!(builtin_pdes(4).len(), 6);
        assert_eq!(builtin_pdes(6).len(), 6);
        let names: Vec<_> = builtin_pdes(4).iter().map(|s| s.name.clone()).collect();
        assert!(names.contains(&"heat".to_string()));
        assert!(names.contains(&"rho-cubic".to_string()));
    }

    #[test]
    fn catalog_is_symbolically_exact() {
        for n in [2usize, 4, 6] {
            for spec in builtin_pdes(n) {
                assert!(symbolic_annihilation(&spec), "{} at n = {}", spec.name, n);
            }
        }
    }

    #[test]
    fn sign_flip_breaks_the_symbol() {
        for mut spec in builtin_pdes(4) {
            spec.terms[0].coeff.num = -spec.terms[0].coeff.num;
            assert!(!symbolic_annihilation(&spec), "{}", spec.name);
        }
    }

    #[test]
    fn residuals_vanish_at_the_anchor() {
        let p = anchor4();
        for spec in builtin_pdes(4) {
            let (res, scale) = pde_residual(&spec, &p, 1e-10).unwrap();
            assert!(
                res.norm() < 1e-9 * scale,
                "{}: {} vs scale {}",
                spec.name,
                res.norm(),
                scale
            );
        }
    }

    #[test]
    fn flipped_sign_residual_is_large() {
        let p = anchor4();
        let mut spec = builtin_pdes(4).remove(0);
        spec.terms[0].coeff.num = -spec.terms[0].coeff.num;
        let (res, scale) = pde_residual(&spec, &p, 1e-10).unwrap();
        assert!(res.norm() > 0.1 * scale);
    }

    #[test]
    fn finite_differences_match_frozen_derivatives() {
        let p = anchor4();
        // (alpha, step, reference, relative budget)
        let cases: [(&[u32], f64, Complex64, f64); 4] = [
            (
                &[0, 1, 0, 0],
                1e-5,
                c(0.09339559478697987551538, -0.09682639532857477208764),
                1e-7,
            ),
            (
                &[2, 0, 0, 0],
                1e-5,
                c(1.216756368951326312885, 1.173643657841700669142),
                1e-7,
            ),
            (
                &[2, 1, 0, 0],
                1e-4,
                c(-3.687107429316937494362, 3.822549836457282443643),
                3e-6,
            ),
            (
                &[4, 0, 0, 0],
                1e-4,
                c(-48.03557793678025648209, -46.33355845175375468818),
                2e-6,
            ),
        ];
        for (orders, step, want, budget) in cases {
            let alpha = MultiIndex::new(orders.to_vec());
            let got = finite_difference(&alpha, &p, step, 1e-12).unwrap();
            let rel = (got - want).norm() / want.norm();
            assert!(rel < budget, "alpha {:?}: rel {}", orders, rel);
        }
    }

    #[test]
    fn richardson_beats_the_plain_stencil() {
        let p = anchor4();
        let alpha = MultiIndex::new(vec![4, 0, 0, 0]);
        let want = c(-48.03557793678025648209, -46.33355845175375468818);
        let plain = finite_difference(&alpha, &p, 1e-3, 1e-12).unwrap();
        let rich = finite_difference_richardson(&alpha, &p, 1e-3, 1e-12).unwrap();
        assert!((rich - want).norm() < (plain - want).norm());
    }

    #[test]
    fn per_axis_order_is_capped() {
        let p = anchor4();
        let alpha = MultiIndex::new(vec![5, 0, 0, 0]);
        assert!(matches!(
            finite_difference(&alpha, &p, 1e-4, 1e-10),
            Err(GtfError::DimensionMismatch(_))
        ));
    }
}
