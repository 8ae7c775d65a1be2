//! Shared fixtures for the benchmark targets.

use num_complex::Complex64;

use gtf_core::ParameterVector;

/// The classical point (0, i).
pub fn classical_point() -> ParameterVector {
    ParameterVector::new(vec![
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 1.0),
    ])
    .unwrap()
}

/// A four-parameter point with mixed real parts.
pub fn quartic_point() -> ParameterVector {
    ParameterVector::new(vec![
        Complex64::new(0.3, 0.1),
        Complex64::new(0.0, 1.0),
        Complex64::new(0.2, 0.0),
        Complex64::new(0.0, 2.0),
    ])
    .unwrap()
}
