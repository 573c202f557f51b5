//! Circle-group arithmetic on 𝕋 = ℝ/ℤ, continued fractions, Diophantine
//! checks, and orbit/weighted-average utilities.
//!
//! Points are stored reduced to [0,1) in double precision. Orbit points
//! x₀ + nω are recomputed from n·ω with a compensated product, so there is
//! no cumulative drift for scans up to n ~ 10⁶.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorusError {
    #[error("continued fraction of {omega} terminates at step {step}: rational at working precision")]
    RationalInput { omega: f64, step: usize },
    #[error("expected {expected} samples (2M-1 for M={m}), got {got}")]
    LengthMismatch { m: usize, expected: usize, got: usize },
    #[error("invalid frequency: {0}")]
    InvalidFrequency(String),
}

/// A point of the circle ℝ/ℤ, kept in [0,1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TorusPoint(f64);

impl TorusPoint {
    pub fn new(x: f64) -> Self {
        TorusPoint(wrap(x))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// x + t reduced to [0,1).
    pub fn shifted(self, t: f64) -> Self {
        TorusPoint::new(self.0 + t)
    }

    /// ‖x‖ = inf over integers m of |x − m|, in [0, 1/2].
    pub fn dist_to_zero(self) -> f64 {
        torus_dist(self.0)
    }

    /// ‖x − y‖ on the circle.
    pub fn dist(self, other: TorusPoint) -> f64 {
        torus_dist(self.0 - other.0)
    }
}

/// Reduce a real number to [0,1). Negative inputs wrap upward; results that
/// round to 1.0 collapse to 0.0 so the half-open invariant survives.
fn wrap(x: f64) -> f64 {
    let mut f = x.fract();
    if f < 0.0 {
        f += 1.0;
    }
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// ‖x‖ = min over integers m of |x − m|; always in [0, 1/2].
pub fn torus_dist(x: f64) -> f64 {
    let f = wrap(x);
    f.min(1.0 - f)
}

/// Exact product a·b = hi + lo (Dekker/Veltkamp two-product, no FMA needed).
pub(crate) fn two_product(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let err = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, err)
}

fn split(a: f64) -> (f64, f64) {
    const FACTOR: f64 = 134_217_729.0; // 2^27 + 1
    let c = FACTOR * a;
    let h = c - (c - a);
    (h, a - h)
}

/// x₀ + n·ω reduced to [0,1), accurate to a few ulps uniformly in |n|.
///
/// n·ω is formed as an exact hi+lo pair; the fractional part of hi is exact,
/// so the only rounding happens at magnitude O(1).
pub fn orbit_point(x0: TorusPoint, omega: f64, n: i64) -> TorusPoint {
    let (hi, lo) = two_product(n as f64, omega);
    let frac_hi = hi - hi.floor();
    TorusPoint::new(frac_hi + lo + x0.value())
}

/// An irrational rotation number with finite-range Diophantine constants:
/// ‖kω‖ > dc_coeff · |k|^(−dc_power) is the condition being probed.
#[derive(Debug, Clone, Copy)]
pub struct Frequency {
    omega: f64,
    dc_coeff: f64,
    dc_power: f64,
}

impl Frequency {
    /// Validates 0 < ω < 1, dc_coeff > 0, dc_power ≥ 1, and that ω is
    /// irrational at working precision (its continued fraction does not
    /// terminate within the reliable denominator range).
    pub fn new(omega: f64, dc_coeff: f64, dc_power: f64) -> Result<Self, TorusError> {
        if !(omega > 0.0 && omega < 1.0) {
            return Err(TorusError::InvalidFrequency(format!(
                "omega must lie in (0,1), got {omega}"
            )));
        }
        if !(dc_coeff > 0.0) {
            return Err(TorusError::InvalidFrequency(format!(
                "dc_coeff must be > 0, got {dc_coeff}"
            )));
        }
        if !(dc_power >= 1.0) {
            return Err(TorusError::InvalidFrequency(format!(
                "dc_power must be >= 1, got {dc_power}"
            )));
        }
        continued_fraction(omega, 30)?;
        Ok(Frequency {
            omega,
            dc_coeff,
            dc_power,
        })
    }

    /// Skips the irrationality probe. Intended for controlled experiments
    /// with rational test frequencies.
    pub fn new_unchecked(omega: f64, dc_coeff: f64, dc_power: f64) -> Self {
        Frequency {
            omega,
            dc_coeff,
            dc_power,
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn dc_coeff(&self) -> f64 {
        self.dc_coeff
    }

    pub fn dc_power(&self) -> f64 {
        self.dc_power
    }
}

/// One continued-fraction convergent p/q with err = |ω − p/q|.
#[derive(Debug, Clone, Copy)]
pub struct Convergent {
    pub p: i128,
    pub q: i128,
    pub err: f64,
}

/// Largest denominator for which |ω − p/q| is still resolvable in f64.
const MAX_RELIABLE_Q: i128 = 10_000_000;
/// Remainder below this means the expansion terminated (rational input).
const TERMINATION_EPS: f64 = 1e-14;

/// Standard continued-fraction convergents of ω ∈ (0,1).
///
/// Returns up to `depth` convergents; the list is truncated early (without
/// error) once denominators exceed the range where the error values stay
/// trustworthy in double precision. A vanishing remainder before that is
/// reported as `RationalInput`.
pub fn continued_fraction(omega: f64, depth: usize) -> Result<Vec<Convergent>, TorusError> {
    if !(omega > 0.0 && omega < 1.0) {
        return Err(TorusError::InvalidFrequency(format!(
            "omega must lie in (0,1), got {omega}"
        )));
    }
    if depth == 0 {
        return Err(TorusError::InvalidFrequency("depth must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(depth);
    // h_{-1}/k_{-1} = 1/0, h_0/k_0 = 0/1 (a_0 = 0 since omega < 1).
    let (mut h_prev, mut h): (i128, i128) = (1, 0);
    let (mut k_prev, mut k): (i128, i128) = (0, 1);
    let mut r = omega;
    for step in 1..=depth {
        if r < TERMINATION_EPS {
            return Err(TorusError::RationalInput { omega, step });
        }
        let inv = 1.0 / r;
        let a = inv.floor() as i128;
        r = inv - inv.floor();
        let h_next = a * h + h_prev;
        let k_next = a * k + k_prev;
        if k_next > MAX_RELIABLE_Q {
            break;
        }
        h_prev = h;
        h = h_next;
        k_prev = k;
        k = k_next;
        out.push(Convergent {
            p: h,
            q: k,
            err: convergent_error(omega, h, k),
        });
    }
    Ok(out)
}

/// |ω − p/q| computed through an exact product so the cancellation
/// ω·q − p does not destroy the small result.
fn convergent_error(omega: f64, p: i128, q: i128) -> f64 {
    let (hi, lo) = two_product(omega, q as f64);
    (((hi - p as f64) + lo) / q as f64).abs()
}

#[derive(Debug, Clone, Copy)]
pub struct DiophantineWitness {
    pub k: u64,
    /// ‖kω‖·k^A / a; values ≤ 1 violate the condition.
    pub ratio: f64,
    pub dist: f64,
}

#[derive(Debug, Clone)]
pub struct DiophantineReport {
    pub pass: bool,
    pub k_checked: u64,
    /// Smallest violating k, when any.
    pub first_violation: Option<DiophantineWitness>,
    /// Worst (smallest) ratio seen, reported even on pass for tuning.
    pub worst: DiophantineWitness,
}

/// Brute-force check of ‖kω‖ > a·|k|^(−A) for 0 < k ≤ k_max.
pub fn diophantine_check(freq: &Frequency, k_max: u64) -> DiophantineReport {
    assert!(k_max >= 1, "k_max must be >= 1");
    let zero = TorusPoint::new(0.0);
    let mut first_violation = None;
    let mut worst = DiophantineWitness {
        k: 0,
        ratio: f64::INFINITY,
        dist: f64::NAN,
    };
    for k in 1..=k_max {
        let dist = orbit_point(zero, freq.omega, k as i64).dist_to_zero();
        let ratio = dist * (k as f64).powf(freq.dc_power) / freq.dc_coeff;
        if ratio < worst.ratio {
            worst = DiophantineWitness { k, ratio, dist };
        }
        if ratio <= 1.0 && first_violation.is_none() {
            first_violation = Some(DiophantineWitness { k, ratio, dist });
        }
    }
    DiophantineReport {
        pass: first_violation.is_none(),
        k_checked: k_max,
        first_violation,
        worst,
    }
}

/// x₀ + nω for n ∈ [n_lo, n_hi], each point recomputed from n·ω directly.
pub fn orbit(x0: TorusPoint, freq: &Frequency, n_lo: i64, n_hi: i64) -> Vec<TorusPoint> {
    assert!(n_lo <= n_hi, "orbit range must satisfy n_lo <= n_hi");
    (n_lo..=n_hi)
        .map(|n| orbit_point(x0, freq.omega, n))
        .collect()
}

/// Fejér-type weighted sum Σ_{|m|<M} ((M−|m|)/M²)·u_m over samples indexed
/// by m ∈ (−M, M). The integer weights sum to exactly M².
pub fn weighted_average(u_values: &[f64], m: usize) -> Result<f64, TorusError> {
    if m == 0 {
        return Err(TorusError::LengthMismatch {
            m,
            expected: 0,
            got: u_values.len(),
        });
    }
    let expected = 2 * m - 1;
    if u_values.len() != expected {
        return Err(TorusError::LengthMismatch {
            m,
            expected,
            got: u_values.len(),
        });
    }
    let center = m as i64 - 1;
    let mut acc = 0.0;
    for (i, &u) in u_values.iter().enumerate() {
        let shift = i as i64 - center;
        let weight = (m as i64 - shift.abs()) as f64;
        acc += weight * u;
    }
    Ok(acc / (m * m) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const GOLDEN: f64 = 0.618_033_988_749_894_9; // (√5 − 1)/2

    #[test]
    fn torus_dist_examples() {
        assert_eq!(torus_dist(0.25), 0.25);
        assert_eq!(torus_dist(0.75), 0.25);
        assert!((torus_dist(3.9) - 0.1).abs() < 1e-12);
        assert_eq!(torus_dist(0.0), 0.0);
    }

    #[test]
    fn wrap_stays_half_open() {
        for &x in &[-1e-17, 1.0 - 1e-17, -0.0, 5.0, -5.25, 1e9 + 0.5] {
            let w = TorusPoint::new(x).value();
            assert!((0.0..1.0).contains(&w), "wrap({x}) = {w}");
        }
    }

    #[test]
    fn torus_dist_symmetry_and_periodicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let x: f64 = rng.random_range(-10.0..10.0);
            assert!((torus_dist(x) - torus_dist(-x)).abs() < 1e-12);
            assert!((torus_dist(x + 1.0) - torus_dist(x)).abs() < 1e-9);
            assert!(torus_dist(x) <= 0.5);
        }
    }

    #[test]
    fn torus_dist_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10_000 {
            let x: f64 = rng.random_range(-2.0..2.0);
            let y: f64 = rng.random_range(-2.0..2.0);
            assert!(torus_dist(x + y) <= torus_dist(x) + torus_dist(y) + 1e-12);
        }
    }

    #[test]
    fn golden_mean_convergents_are_fibonacci() {
        let cf = continued_fraction(GOLDEN, 5).unwrap();
        let qs: Vec<i128> = cf.iter().map(|c| c.q).collect();
        assert_eq!(qs, vec![1, 2, 3, 5, 8]);
    }

    #[test]
    fn sqrt2_minus_one_convergents() {
        let omega = std::f64::consts::SQRT_2 - 1.0;
        let cf = continued_fraction(omega, 4).unwrap();
        let qs: Vec<i128> = cf.iter().map(|c| c.q).collect();
        assert_eq!(qs, vec![2, 5, 12, 29]);
    }

    #[test]
    fn rational_input_is_rejected() {
        match continued_fraction(1.0 / 3.0, 5) {
            Err(TorusError::RationalInput { .. }) => {}
            other => panic!("expected RationalInput, got {other:?}"),
        }
        assert!(Frequency::new(0.5, 0.1, 2.0).is_err());
    }

    #[test]
    fn convergent_invariants() {
        for &omega in &[GOLDEN, std::f64::consts::SQRT_2 - 1.0, 0.3183098861837907] {
            let cf = continued_fraction(omega, 12).unwrap();
            for w in cf.windows(2) {
                assert!(w[1].q > w[0].q, "denominators must increase");
            }
            for c in &cf {
                assert!(c.err < 1.0 / (c.q * c.q) as f64, "err {} vs 1/q^2 for q={}", c.err, c.q);
            }
            // Signed residuals alternate.
            let signed: Vec<f64> = cf
                .iter()
                .map(|c| {
                    let (hi, lo) = two_product(omega, c.q as f64);
                    ((hi - c.p as f64) + lo) / c.q as f64
                })
                .collect();
            for w in signed.windows(2) {
                assert!(w[0] * w[1] < 0.0, "residuals must alternate in sign");
            }
        }
    }

    #[test]
    fn recurrence_of_denominators() {
        // q_{k+1} = a_{k+1} q_k + q_{k-1} with all partial quotients 1 for the
        // golden mean and 2 for √2 − 1.
        let cf = continued_fraction(GOLDEN, 10).unwrap();
        for i in 2..cf.len() {
            assert_eq!(cf[i].q, cf[i - 1].q + cf[i - 2].q);
        }
        let cf = continued_fraction(std::f64::consts::SQRT_2 - 1.0, 8).unwrap();
        for i in 2..cf.len() {
            assert_eq!(cf[i].q, 2 * cf[i - 1].q + cf[i - 2].q);
        }
    }

    #[test]
    fn diophantine_golden_mean() {
        // lim q‖qω‖ = 1/√5 ≈ 0.447 for the golden mean, so a = 0.2 passes
        // and a = 0.5 must fail somewhere.
        let pass = diophantine_check(&Frequency::new(GOLDEN, 0.2, 1.0).unwrap(), 1000);
        assert!(pass.pass, "worst ratio {:?}", pass.worst);
        assert!(pass.worst.ratio.is_finite());

        let fail = diophantine_check(&Frequency::new(GOLDEN, 0.5, 1.0).unwrap(), 1000);
        assert!(!fail.pass);
        let witness = fail.first_violation.unwrap();
        assert!(witness.ratio <= 1.0);
        // Independent recomputation of the violating distance.
        let direct = torus_dist(witness.k as f64 * GOLDEN);
        assert!((witness.dist - direct).abs() < 1e-9);
    }

    #[test]
    fn diophantine_vacuous_as_coeff_vanishes() {
        let freq = Frequency::new(GOLDEN, 1e-18, 2.0).unwrap();
        assert!(diophantine_check(&freq, 500).pass);
    }

    #[test]
    fn orbit_examples() {
        let freq = Frequency::new_unchecked(0.5, 0.1, 2.0);
        let pts = orbit(TorusPoint::new(0.0), &freq, 0, 3);
        let values: Vec<f64> = pts.iter().map(|p| p.value()).collect();
        assert_eq!(values, vec![0.0, 0.5, 0.0, 0.5]);

        let freq = Frequency::new(GOLDEN, 0.1, 2.0).unwrap();
        let pts = orbit(TorusPoint::new(0.1), &freq, 0, 1);
        assert!((pts[0].value() - 0.1).abs() < 1e-15);
        assert!((pts[1].value() - 0.718_033_988_7).abs() < 1e-9);

        let single = orbit(TorusPoint::new(0.37), &freq, 0, 0);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].value(), 0.37);
    }

    /// Exact fractional part of n·ω where ω is taken as the dyadic rational
    /// its f64 bits represent: n·m mod 2^s over u128.
    fn exact_orbit_from_zero(omega: f64, n: u64) -> f64 {
        let bits = omega.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i64;
        assert!(exp != 0, "subnormal omega not expected in tests");
        let mantissa = (bits & ((1u64 << 52) - 1)) | (1u64 << 52);
        let shift = 1075 - exp; // omega = mantissa / 2^shift
        assert!((0..=127).contains(&shift));
        let prod = mantissa as u128 * n as u128;
        let frac = prod & ((1u128 << shift) - 1);
        frac as f64 / (1u128 << shift) as f64
    }

    #[test]
    fn orbit_has_no_cumulative_drift() {
        let freq = Frequency::new(GOLDEN, 0.1, 2.0).unwrap();
        let tol = 2f64.powi(-50);
        for &n in &[1u64, 17, 1_000, 99_991, 1_000_000] {
            let got = orbit_point(TorusPoint::new(0.0), freq.omega(), n as i64).value();
            let want = exact_orbit_from_zero(freq.omega(), n);
            let diff = torus_dist(got - want);
            assert!(diff < tol, "n={n}: got {got}, want {want}, diff {diff:e}");
        }
    }

    #[test]
    fn weighted_average_examples() {
        assert_eq!(weighted_average(&[5.0], 1).unwrap(), 5.0);
        assert_eq!(weighted_average(&[1.0, 1.0, 1.0], 2).unwrap(), 1.0);
        assert_eq!(weighted_average(&[0.0, 4.0, 0.0], 2).unwrap(), 2.0);
        match weighted_average(&[1.0, 2.0], 2) {
            Err(TorusError::LengthMismatch { expected: 3, got: 2, .. }) => {}
            other => panic!("expected LengthMismatch, got {other:?}"),
        }
    }

    #[test]
    fn fejer_weights_sum_to_one() {
        for m in 1..200usize {
            let total: i64 = (-(m as i64 - 1)..=(m as i64 - 1))
                .map(|k| m as i64 - k.abs())
                .sum();
            assert_eq!(total, (m * m) as i64);
            // Constant input is a fixed point up to rounding.
            let c = 0.734_123_9;
            let avg = weighted_average(&vec![c; 2 * m - 1], m).unwrap();
            assert!((avg - c).abs() < 1e-14);
        }
    }
}
