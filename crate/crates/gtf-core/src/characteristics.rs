//! Rational characteristics, the projective family they index, and group
//! actions on that family.
//!
//! A level-l characteristic on N parameters is an offset a = a0/l together
//! with real shifts beta_k = b_k / l^(N-k) for k < N and beta_N = 0. The
//! characteristic series sums exp(2 pi i sum_k (n+a)^k/k! (tau_k + beta_k)).

use num_complex::Complex64;

use crate::error::GtfError;
use crate::heisenberg::GroupElement;
use crate::params::{
    exp_two_pi_i, factorial, from_taus_unchecked, phase_eval, shifted_params, validate_domain,
    ParameterVector, PhasePolynomial,
};
use crate::series::{theta_eval_shifted_offset, EvalResult};

/// Coordinates this small are treated as projectively meaningless.
pub const PROJECTIVE_FLOOR: f64 = 1e-120;

/// A characteristic of level l: numerators reduced into canonical range,
/// a_num in [0, l) and b_num[k-1] in [0, l^(N-k)).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Characteristic {
    l: u32,
    a_num: i64,
    b_num: Vec<i64>,
}

impl Characteristic {
    pub fn new(l: u32, a_num: i64, b_num: Vec<i64>) -> Result<Self, GtfError> {
        if l == 0 {
            return Err(GtfError::DimensionMismatch("level must be positive".into()));
        }
        let n = b_num.len() + 1;
        let mut reduced = Vec::with_capacity(b_num.len());
        for (i, &raw) in b_num.iter().enumerate() {
            let k = i + 1;
            let den = (l as i64).checked_pow((n - k) as u32).ok_or_else(|| {
                GtfError::DimensionMismatch(format!("denominator l^{} overflows", n - k))
            })?;
            reduced.push(raw.rem_euclid(den));
        }
        Ok(Self {
            l,
            a_num: a_num.rem_euclid(l as i64),
            b_num: reduced,
        })
    }

    pub fn level(&self) -> u32 {
        self.l
    }

    /// Parameter count N this characteristic belongs to.
    pub fn n(&self) -> usize {
        self.b_num.len() + 1
    }

    /// The summation offset a0/l.
    pub fn a(&self) -> f64 {
        self.a_num as f64 / self.l as f64
    }

    pub fn a_num(&self) -> i64 {
        self.a_num
    }

    pub fn b_num(&self) -> &[i64] {
        &self.b_num
    }

    /// The parameter shift beta_k = b_k / l^(N-k); zero for k = N.
    pub fn beta(&self, k: usize) -> f64 {
        let n = self.n();
        if k == n {
            return 0.0;
        }
        self.b_num[k - 1] as f64 / (self.l as f64).powi((n - k) as i32)
    }
}

/// All level-l characteristics on n parameters, l^(1 + n(n-1)/2) in total.
/// The offset numerator varies fastest, then b_{n-1} down to b_1.
pub fn enumerate_chars(l: u32, n: usize) -> Vec<Characteristic> {
    assert!(l >= 1, "level must be positive");
    assert!(n >= 2 && n.is_multiple_of(2), "parameter count must be even, at least 2");
    let lw = l as u128;
    let mut total: u128 = lw;
    for k in 1..n {
        total *= lw.pow((n - k) as u32);
    }
    let mut out = Vec::with_capacity(total as usize);
    for idx in 0..total {
        let mut rest = idx;
        let a_num = (rest % lw) as i64;
        rest /= lw;
        let mut b_num = vec![0i64; n - 1];
        for k in (1..n).rev() {
            let den = lw.pow((n - k) as u32);
            b_num[k - 1] = (rest % den) as i64;
            rest /= den;
        }
        out.push(Characteristic { l, a_num, b_num });
    }
    out
}

/// Evaluates the characteristic series: the kernel runs on
/// tau_k + beta_k with summation offset a.
pub fn theta_char_eval(
    ch: &Characteristic,
    params: &ParameterVector,
    tol: f64,
) -> Result<EvalResult, GtfError> {
    let n = params.len();
    if ch.n() != n {
        return Err(GtfError::DimensionMismatch(format!(
            "characteristic for {} parameters against {}",
            ch.n(),
            n
        )));
    }
    let shifts: Vec<f64> = (1..=n).map(|k| ch.beta(k)).collect();
    theta_eval_shifted_offset(params, &shifts, ch.a(), tol)
}

/// The rescaled parameters w_k = l^(N-k) tau_k feeding the embedding.
pub fn embedding_params(params: &ParameterVector, l: u32) -> ParameterVector {
    let n = params.len();
    let taus = params
        .taus()
        .iter()
        .enumerate()
        .map(|(i, &t)| t * (l as f64).powi((n - 1 - i) as i32))
        .collect();
    from_taus_unchecked(taus)
}

/// A tuple of homogeneous coordinates with the largest certified tail
/// bound among them.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectivePoint {
    pub coords: Vec<Complex64>,
    pub tail_bound: f64,
}

/// Embeds the parameters by the full level-l family: coordinate i is the
/// characteristic series of chars[i] at w = embedding_params, with the
/// shift convention beta_k scaled by k!.
pub fn embed(params: &ParameterVector, l: u32, tol: f64) -> Result<ProjectivePoint, GtfError> {
    validate_domain(params)?;
    let w = embedding_params(params, l);
    let chars = enumerate_chars(l, params.len());
    family_coords(&chars, &w, tol)
}

fn family_coords(
    chars: &[Characteristic],
    w: &ParameterVector,
    tol: f64,
) -> Result<ProjectivePoint, GtfError> {
    let n = w.len();
    let mut coords = Vec::with_capacity(chars.len());
    let mut tail = 0.0f64;
    for ch in chars {
        let shifts: Vec<f64> = (1..=n).map(|k| factorial(k) * ch.beta(k)).collect();
        let r = theta_eval_shifted_offset(w, &shifts, ch.a(), tol)?;
        tail = tail.max(r.tail_bound);
        coords.push(r.value);
    }
    Ok(ProjectivePoint {
        coords,
        tail_bound: tail,
    })
}

/// Tests projective equality y = s x, returning the scalar fitted at the
/// largest coordinate of x. Fails with DegeneratePoint when either point
/// has no coordinate above the floor.
pub fn projective_equal(
    x: &ProjectivePoint,
    y: &ProjectivePoint,
    tol: f64,
) -> Result<(bool, Complex64), GtfError> {
    if x.coords.len() != y.coords.len() {
        return Err(GtfError::DimensionMismatch(format!(
            "points with {} and {} coordinates",
            x.coords.len(),
            y.coords.len()
        )));
    }
    let xmax = x.coords.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    let ymax = y.coords.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    if xmax <= PROJECTIVE_FLOOR || ymax <= PROJECTIVE_FLOOR {
        return Err(GtfError::DegeneratePoint(PROJECTIVE_FLOOR));
    }
    let anchor = x
        .coords
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(i, _)| i)
        .unwrap();
    let s = y.coords[anchor] / x.coords[anchor];
    let mut residual = 0.0f64;
    for (xi, yi) in x.coords.iter().zip(&y.coords) {
        residual = residual.max((yi - s * xi).norm());
    }
    Ok((residual <= tol * ymax, s))
}

/// How a group element rearranged the embedded family: the global
/// cocycle factored out first, then a permutation with unit phases.
/// Transformed coordinate i matches original coordinate permutation[i]
/// up to phases[i], with the worst match quality in max_residual.
#[derive(Debug, Clone)]
pub struct FamilyActionReport {
    pub cocycle: Complex64,
    pub permutation: Vec<usize>,
    pub phases: Vec<Complex64>,
    pub max_residual: f64,
}

/// Acts on the embedded family by a group element: parameters move by the
/// index shift a and the modulation b at the embedding scale, and every
/// coordinate picks up the global cocycle exp(2 pi i (t - phi(a; w))).
/// Elements of the level subgroup permute the family up to unit phases;
/// the report quantifies how well that holds.
pub fn group_action_on_family(
    g: &GroupElement,
    params: &ParameterVector,
    l: u32,
    tol: f64,
) -> Result<FamilyActionReport, GtfError> {
    validate_domain(params)?;
    let n = params.len();
    if g.n() != n {
        return Err(GtfError::DimensionMismatch(format!(
            "group element of size {} against {} parameters",
            g.n(),
            n
        )));
    }
    let w = embedding_params(params, l);
    let chars = enumerate_chars(l, n);
    let original = family_coords(&chars, &w, tol)?;

    let moved = shifted_params(g.a(), &w);
    let taus: Vec<Complex64> = moved
        .taus()
        .iter()
        .zip(g.b())
        .map(|(&t, &b)| t + b)
        .collect();
    let transformed_params = from_taus_unchecked(taus);
    validate_domain(&transformed_params)?;

    let phi_w = PhasePolynomial::new(w.clone());
    let cocycle = exp_two_pi_i(g.t() - phase_eval(g.a(), &phi_w));
    let call_tol = tol * cocycle.norm().max(1.0);
    let transformed = family_coords(&chars, &transformed_params, call_tol)?;

    let targets: Vec<Complex64> = transformed.coords.iter().map(|&c| c / cocycle).collect();
    let scale = original
        .coords
        .iter()
        .chain(&targets)
        .map(|c| c.norm())
        .fold(PROJECTIVE_FLOOR, f64::max);

    // Greedy magnitude matching: each target claims the unused original
    // coordinate closest in magnitude, largest targets first so the
    // informative coordinates are never stolen by noise-level ones.
    let m = targets.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| targets[j].norm().total_cmp(&targets[i].norm()));
    let mut used = vec![false; m];
    let mut permutation = vec![0usize; m];
    let mut phases = vec![Complex64::new(1.0, 0.0); m];
    let mut max_residual = 0.0f64;
    for &i in &order {
        let v = targets[i];
        let mut best = usize::MAX;
        let mut best_gap = f64::INFINITY;
        for (j, orig) in original.coords.iter().enumerate() {
            if used[j] {
                continue;
            }
            let gap = (v.norm() - orig.norm()).abs();
            if gap < best_gap {
                best_gap = gap;
                best = j;
            }
        }
        used[best] = true;
        permutation[i] = best;
        let u = original.coords[best];
        let (phase, residual) = if u.norm() <= PROJECTIVE_FLOOR * scale {
            (Complex64::new(1.0, 0.0), (v - u).norm() / scale)
        } else {
            let raw = v / u;
            let unit = raw / raw.norm();
            (unit, (v - unit * u).norm() / scale + (raw.norm() - 1.0).abs())
        };
        phases[i] = phase;
        max_residual = max_residual.max(residual);
    }
    Ok(FamilyActionReport {
        cocycle,
        permutation,
        phases,
        max_residual,
    })
}

/// Drops the first two parameters: the tail (tau_3, ..., tau_N) is again
/// a valid parameter vector, two shorter.
pub fn chain_project(params: &ParameterVector) -> Result<ParameterVector, GtfError> {
    let n = params.len();
    if n < 4 {
        return Err(GtfError::DimensionTooSmall(n));
    }
    Ok(from_taus_unchecked(params.taus()[2..].to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::theta_eval;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pv(taus: Vec<Complex64>) -> ParameterVector {
        ParameterVector::new(taus).unwrap()
    }

    fn sample4() -> ParameterVector {
        pv(vec![c(0.31, 0.12), c(-0.4, 0.21), c(0.55, -0.08), c(0.3, 1.7)])
    }

    #[test]
    fn characteristic_counts() {
        assert_eq!(enumerate_chars(2, 4).len(), 128);
        assert_eq!(enumerate_chars(3, 2).len(), 9);
        assert_eq!(enumerate_chars(1, 4).len(), 1);
        assert_eq!(enumerate_chars(2, 2).len(), 4);
    }

    #[test]
    fn characteristics_are_distinct_and_ordered() {
        let chars = enumerate_chars(2, 4);
        let mut seen = std::collections::HashSet::new();
        for ch in &chars {
            assert!(seen.insert((ch.a_num(), ch.b_num().to_vec())));
        }
        // offset numerator varies fastest
        assert_eq!(chars[0].a_num(), 0);
        assert_eq!(chars[1].a_num(), 1);
        assert_eq!(chars[0].b_num(), chars[1].b_num());
        // then b_3, with denominator l
        assert_eq!(chars[2].b_num(), &[0, 0, 1]);
    }

    #[test]
    fn numerators_reduce_into_canonical_range() {
        let ch = Characteristic::new(2, -3, vec![9, -1, 5]).unwrap();
        assert_eq!(ch.a_num(), 1);
        assert_eq!(ch.b_num(), &[1, 3, 1]);
        assert_eq!(ch.beta(3), 0.5);
        assert_eq!(ch.beta(4), 0.0);
    }

    #[test]
    fn char_eval_matches_shift_route() {
        // theta[a; beta](nu) = exp(2 pi i phi(a; nu + beta))
        //                      * theta(shifted_params(a, nu + beta))
        let params = sample4();
        let ch = Characteristic::new(2, 1, vec![3, 1, 1]).unwrap();
        let lhs = theta_char_eval(&ch, &params, 1e-12).unwrap().value;
        let shifts: Vec<Complex64> = (1..=4).map(|k| c(ch.beta(k), 0.0)).collect();
        let nu_beta = crate::heisenberg::apply_s(&shifts, &params).unwrap();
        let phi = PhasePolynomial::new(nu_beta.clone());
        let a = c(ch.a(), 0.0);
        let rhs = exp_two_pi_i(phi.eval(a)) * theta_eval(&shifted_params(a, &nu_beta), 1e-12)
            .unwrap()
            .value;
        assert!((lhs - rhs).norm() < 1e-10 * lhs.norm());
    }

    #[test]
    fn level_one_embedding_is_the_series_itself() {
        let params = sample4();
        let p = embed(&params, 1, 1e-12).unwrap();
        assert_eq!(p.coords.len(), 1);
        let direct = theta_eval(&params, 1e-12).unwrap().value;
        assert!((p.coords[0] - direct).norm() < 1e-14);
    }

    #[test]
    fn projective_equality_ignores_global_scale() {
        let params = sample4();
        let p = embed(&params, 2, 1e-11).unwrap();
        let s = c(0.6, -1.3);
        let q = ProjectivePoint {
            coords: p.coords.iter().map(|&z| s * z).collect(),
            tail_bound: p.tail_bound,
        };
        let (eq, fitted) = projective_equal(&p, &q, 1e-9).unwrap();
        assert!(eq);
        assert!((fitted - s).norm() < 1e-10);

        let mut bad = q.clone();
        bad.coords[5] += c(0.05, 0.0);
        let (eq_bad, _) = projective_equal(&p, &bad, 1e-9).unwrap();
        assert!(!eq_bad);
    }

    #[test]
    fn degenerate_points_are_rejected() {
        let zero = ProjectivePoint {
            coords: vec![c(0.0, 0.0); 3],
            tail_bound: 0.0,
        };
        let ok = ProjectivePoint {
            coords: vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            tail_bound: 0.0,
        };
        assert!(matches!(
            projective_equal(&zero, &ok, 1e-9),
            Err(GtfError::DegeneratePoint(_))
        ));
    }

    #[test]
    fn chain_projection_drops_two() {
        let params = pv(vec![
            c(0.1, 0.0),
            c(0.2, 0.1),
            c(0.3, 0.0),
            c(0.4, 0.2),
            c(0.5, 0.0),
            c(0.0, 1.3),
        ]);
        let tail = chain_project(&params).unwrap();
        assert_eq!(tail.len(), 4);
        assert_eq!(tail.tau(1), params.tau(3));
        assert_eq!(tail.tau(4), params.tau(6));
        let small = pv(vec![c(0.0, 0.0), c(0.0, 1.0)]);
        assert_eq!(chain_project(&small), Err(GtfError::DimensionTooSmall(2)));
    }

    #[test]
    fn level_subgroup_permutes_the_small_family() {
        // N = 2, l = 2: the element (0, l, l b_1) acts by a unit-phase
        // permutation after the cocycle is factored out.
        let params = pv(vec![c(0.23, 0.05), c(0.4, 1.1)]);
        let g = GroupElement::new(c(0.0, 0.0), c(2.0, 0.0), vec![c(2.0, 0.0), c(0.0, 0.0)]);
        let report = group_action_on_family(&g, &params, 2, 1e-11).unwrap();
        assert!(report.max_residual < 1e-8, "residual {}", report.max_residual);
        let mut seen = vec![false; report.permutation.len()];
        for &j in &report.permutation {
            assert!(!seen[j]);
            seen[j] = true;
        }
        for ph in &report.phases {
            assert!((ph.norm() - 1.0).abs() < 1e-9);
        }
    }
}
