//! Seeded sampling helpers shared by the integration test targets.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gtf_core::{phase_eval, theta_eval, ParameterVector, PhasePolynomial};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// exp(2 pi i z) with the real part folded mod 1 before the trig calls.
pub fn exp_2pi_i(z: Complex64) -> Complex64 {
    let mag = (-std::f64::consts::TAU * z.im).exp();
    let ang = std::f64::consts::TAU * (z.re - z.re.floor());
    mag * Complex64::new(ang.cos(), ang.sin())
}

/// Largest term magnitude of the series, scanned directly from the phase.
/// Sampled parameters can push the peak many orders above 1, so absolute
/// tolerances and zero floors are scaled by this.
pub fn peak_term(p: &ParameterVector) -> f64 {
    let phi = PhasePolynomial::new(p.clone());
    let mut best = 1.0f64;
    for n in -60..=60i64 {
        let im = phase_eval(Complex64::new(n as f64, 0.0), &phi).im;
        let arg = (-std::f64::consts::TAU * im).min(700.0);
        best = best.max(arg.exp());
    }
    best
}

/// A random in-domain parameter vector. Real parts in [-1, 1], interior
/// imaginary parts in [-0.3, 0.3], top imaginary part in [0.8, 2.5] so the
/// series converges within a few dozen terms.
pub fn sample_params(rng: &mut ChaCha8Rng, n: usize) -> ParameterVector {
    let taus = (1..=n)
        .map(|k| {
            let re = rng.gen_range(-1.0..1.0);
            let im = if k == n {
                rng.gen_range(0.8..2.5)
            } else {
                rng.gen_range(-0.3..0.3)
            };
            Complex64::new(re, im)
        })
        .collect();
    ParameterVector::new(taus).unwrap()
}

/// Like [`sample_params`], but rejects points where the series value is
/// close to zero relative to its peak term. Relative-error comparisons
/// divide by the value, so the identity suites run at generic points away
/// from zeros.
pub fn generic_params(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> ParameterVector {
    loop {
        let p = sample_params(rng, n);
        let pk = peak_term(&p);
        if theta_eval(&p, 1e-6 * pk).unwrap().value.norm() >= floor * pk {
            return p;
        }
    }
}
