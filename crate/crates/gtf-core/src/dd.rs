//! Double-double arithmetic: an unevaluated sum of two f64s carrying
//! roughly 32 significant digits. Used where plain f64 cancellation would
//! dominate, namely finite-difference stencils and reference summation.

use num_complex::Complex64;

use crate::params::{factorial, ParameterVector};

/// 2 pi split into high and low parts.
pub(crate) const TAU_DD: Dd = Dd {
    hi: std::f64::consts::TAU,
    lo: 2.4492935982947064e-16,
};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// hi + lo with |lo| <= ulp(hi)/2.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[allow(clippy::should_implement_trait)]
impl Dd {
    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn add_f64(self, o: f64) -> Dd {
        let (s1, s2) = two_sum(self.hi, o);
        let (hi, lo) = quick_two_sum(s1, s2 + self.lo);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn mul(self, o: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, o.hi);
        let p2 = p2 + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, o: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, o);
        let (hi, lo) = quick_two_sum(p1, p2 + self.lo * o);
        Dd { hi, lo }
    }

    /// Quotient by an f64, good to double-double accuracy.
    #[inline]
    pub fn div_f64(self, o: f64) -> Dd {
        let q0 = self.hi / o;
        let (p1, p2) = two_prod(q0, o);
        let r = ((self.hi - p1) - p2) + self.lo;
        let q1 = r / o;
        let (hi, lo) = quick_two_sum(q0, q1);
        Dd { hi, lo }
    }

    /// Fractional part reduced into [0, 1).
    pub fn fract01(self) -> Dd {
        let f = self.add_f64(-self.hi.floor());
        if f.hi >= 1.0 {
            f.add_f64(-1.0)
        } else if f.hi < 0.0 {
            f.add_f64(1.0)
        } else {
            f
        }
    }

    /// sin and cos accurate to roughly an f64 ulp of the true value, using
    /// the low word as a first-order correction.
    pub fn sin_cos(self) -> (f64, f64) {
        let (s, c) = self.hi.sin_cos();
        (s + self.lo * c, c - self.lo * s)
    }
}

/// Complex double-double.
#[derive(Debug, Clone, Copy, Default)]
pub struct DdComplex {
    pub re: Dd,
    pub im: Dd,
}

#[allow(clippy::should_implement_trait)]
impl DdComplex {
    pub fn from_complex(z: Complex64) -> Self {
        Self {
            re: Dd::from_f64(z.re),
            im: Dd::from_f64(z.im),
        }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn add(self, o: DdComplex) -> DdComplex {
        DdComplex {
            re: self.re.add(o.re),
            im: self.im.add(o.im),
        }
    }

    pub fn mul(self, o: DdComplex) -> DdComplex {
        DdComplex {
            re: self.re.mul(o.re).sub(self.im.mul(o.im)),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    pub fn mul_f64(self, o: f64) -> DdComplex {
        DdComplex {
            re: self.re.mul_f64(o),
            im: self.im.mul_f64(o),
        }
    }

    /// Multiplies by a plain complex value.
    pub fn mul_complex(self, o: Complex64) -> DdComplex {
        DdComplex {
            re: self.re.mul_f64(o.re).sub(self.im.mul_f64(o.im)),
            im: self.re.mul_f64(o.im).add(self.im.mul_f64(o.re)),
        }
    }

    pub fn scale_recip(self, o: f64) -> DdComplex {
        DdComplex {
            re: self.re.div_f64(o),
            im: self.im.div_f64(o),
        }
    }
}

/// The phase polynomial with coefficients tau_k / k! carried in
/// double-double, evaluated at real integer arguments.
pub(crate) struct DdPhase {
    coeffs: Vec<(Dd, Dd)>,
}

impl DdPhase {
    pub fn new(params: &ParameterVector) -> Self {
        let coeffs = params
            .taus()
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let f = factorial(i + 1);
                (Dd::from_f64(t.re).div_f64(f), Dd::from_f64(t.im).div_f64(f))
            })
            .collect();
        Self { coeffs }
    }

    /// phi(x) for exact real x.
    pub fn eval(&self, x: f64) -> (Dd, Dd) {
        let mut re = Dd::default();
        let mut im = Dd::default();
        for (cr, ci) in self.coeffs.iter().rev() {
            re = re.add(*cr).mul_f64(x);
            im = im.add(*ci).mul_f64(x);
        }
        (re, im)
    }
}

/// One series term exp(2 pi i phi(n)) at extended precision, rounded to a
/// Complex64 at the end.
pub(crate) fn term_at(phase: &DdPhase, n: i64) -> Complex64 {
    let (re, im) = phase.eval(n as f64);
    let angle = re.fract01().mul(TAU_DD);
    let (s, c) = angle.sin_cos();
    let marg = im.mul(TAU_DD).neg();
    let mag = marg.hi.exp() * (1.0 + marg.lo);
    Complex64::new(mag * c, mag * s)
}

/// Reference summation of the series over an explicit index range, with
/// phases and accumulation in double-double. Truncation is the caller's
/// responsibility; pick the range generously.
pub fn theta_reference_sum(params: &ParameterVector, n_min: i64, n_max: i64) -> Complex64 {
    let phase = DdPhase::new(params);
    let mut re = Dd::default();
    let mut im = Dd::default();
    for n in n_min..=n_max {
        let t = term_at(&phase, n);
        re = re.add_f64(t.re);
        im = im.add_f64(t.im);
    }
    Complex64::new(re.to_f64(), im.to_f64())
}

/// sin/cos of a small double-double angle by Taylor series, falling back
/// to the f64 path once the series would converge slowly. Below the
/// threshold the result is good to double-double accuracy, which the
/// stencil cancellation in finite differences depends on.
pub(crate) fn sin_cos_small(theta: Dd) -> (Dd, Dd) {
    if theta.hi.abs() > 0.5 {
        let (s, c) = theta.sin_cos();
        return (Dd::from_f64(s), Dd::from_f64(c));
    }
    let x2 = theta.mul(theta);
    // sin: x (1 - x^2/6 (1 - x^2/20 (1 - ...)))
    let mut s = Dd::from_f64(1.0);
    let mut c = Dd::from_f64(1.0);
    let terms = 9;
    for j in (1..=terms).rev() {
        let k = 2 * j;
        // sin denominators (2j)(2j+1), cos denominators (2j-1)(2j)
        s = Dd::from_f64(1.0).sub(x2.mul(s).div_f64((k * (k + 1)) as f64));
        c = Dd::from_f64(1.0).sub(x2.mul(c).div_f64(((k - 1) * k) as f64));
    }
    (theta.mul(s), c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn arithmetic_keeps_extra_bits() {
        let a = Dd::from_f64(1.0).div_f64(3.0);
        let b = a.mul_f64(3.0).add_f64(-1.0);
        assert!(b.to_f64().abs() < 1e-31);
    }

    #[test]
    fn fract_reduces_into_unit_interval() {
        let x = Dd::from_f64(12345.0).add_f64(0.625);
        let f = x.fract01();
        assert!((f.to_f64() - 0.625).abs() < 1e-30);
        let y = Dd::from_f64(-2.25);
        assert!((y.fract01().to_f64() - 0.75).abs() < 1e-30);
    }

    #[test]
    fn small_angle_taylor_matches_std() {
        for &t in &[1e-8, 1e-4, 0.01, 0.3, 0.499] {
            let (s, c) = sin_cos_small(Dd::from_f64(t));
            assert!((s.to_f64() - t.sin()).abs() < 1e-16);
            assert!((c.to_f64() - t.cos()).abs() < 1e-16);
        }
    }

    #[test]
    fn reference_sum_matches_kernel() {
        let p = ParameterVector::new(vec![
            Complex64::new(0.3, 0.1),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.2, 0.0),
            Complex64::new(0.0, 2.0),
        ])
        .unwrap();
        let r = crate::series::theta_eval(&p, 1e-12).unwrap();
        let want = theta_reference_sum(&p, 2 * r.n_min, 2 * r.n_max);
        assert!((r.value - want).norm() <= r.tail_bound);
    }
}
