//! Lebesgue-measure brackets for sublevel sets on the torus via adaptive
//! dyadic bisection, and least-squares exponent fits of the sublevel
//! scaling law measure ≈ K·ε^c.

use thiserror::Error;

use crate::fit::fit_line;
use crate::functions::MeromorphicPotential;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SublevelError {
    #[error("undecided mass {undecided} exceeds 0.5 at depth {depth}")]
    DepthExceeded { undecided: f64, depth: u32 },
    #[error("depth {0} beyond the supported maximum of 24")]
    DepthTooLarge(u32),
    #[error("exponent fit needs >= 4 thresholds spanning >= 3 decades")]
    BadThresholdLadder,
    #[error("exponent fit has fewer than 2 nonzero measures")]
    InsufficientData,
}

/// Two-sided bracket for a sublevel-set measure at dyadic resolution
/// 2^(−depth). The truth (for sets that are finite interval unions resolved
/// at this depth) lies in [lower, upper].
#[derive(Debug, Clone, Copy)]
pub struct MeasureBracket {
    pub lower: f64,
    pub upper: f64,
    pub depth: u32,
}

impl MeasureBracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn resolution(&self) -> f64 {
        2f64.powi(-(self.depth as i32))
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

const MAX_DEPTH: u32 = 24;
const INITIAL_DEPTH: u32 = 6;

/// Measure of {x ∈ [0,1) : pred(x)} by adaptive dyadic bisection.
///
/// A cell is decided only when the predicate agrees at its endpoints,
/// midpoint, and the two quarter points (the depth+2 refinement); mixed or
/// disagreeing cells split until `depth`, where they join the bracket gap.
pub fn measure_where<P>(pred: P, depth: u32) -> Result<MeasureBracket, SublevelError>
where
    P: Fn(f64) -> bool,
{
    if depth > MAX_DEPTH {
        return Err(SublevelError::DepthTooLarge(depth));
    }
    let start_depth = INITIAL_DEPTH.min(depth);
    let mut inside = 0.0f64;
    let mut undecided = 0.0f64;
    let mut stack: Vec<(u64, u32)> = (0..(1u64 << start_depth))
        .rev()
        .map(|i| (i, start_depth))
        .collect();
    while let Some((index, d)) = stack.pop() {
        let len = 2f64.powi(-(d as i32));
        let x0 = index as f64 * len;
        let mut all_in = true;
        let mut all_out = true;
        for q in 0..=4 {
            let p = pred(x0 + len * q as f64 / 4.0);
            all_in &= p;
            all_out &= !p;
        }
        if all_in {
            inside += len;
        } else if all_out {
            // contributes to neither bound
        } else if d < depth {
            stack.push((2 * index + 1, d + 1));
            stack.push((2 * index, d + 1));
        } else {
            undecided += len;
        }
    }
    if undecided > 0.5 {
        return Err(SublevelError::DepthExceeded { undecided, depth });
    }
    Ok(MeasureBracket {
        lower: inside,
        upper: (inside + undecided).min(1.0),
        depth,
    })
}

/// Measure of {x : |f(x)| < threshold} for a black-box real function.
pub fn sublevel_measure<F>(f: F, threshold: f64, depth: u32) -> Result<MeasureBracket, SublevelError>
where
    F: Fn(f64) -> f64,
{
    measure_where(|x| f(x).abs() < threshold, depth)
}

/// Measure of {x : |v(x) − E| < ε} for v = g/f, evaluated through the
/// equivalent bounded test |g − Ef| < ε|f| so poles never overflow.
pub fn potential_deviation_measure(
    p: &MeromorphicPotential,
    level: f64,
    eps: f64,
    depth: u32,
) -> Result<MeasureBracket, SublevelError> {
    let g = p.g();
    let f = p.f();
    measure_where(
        |x| {
            let fv = f.eval_real(x);
            (g.eval_real(x) - level * fv).abs() < eps * fv.abs()
        },
        depth,
    )
}

/// Measure of {x : |g(x) − Ef(x)|/√(1+E²) < ε}; the test function is a trig
/// polynomial, so there are no poles to guard.
pub fn normalized_linear_measure(
    p: &MeromorphicPotential,
    level: f64,
    eps: f64,
    depth: u32,
) -> Result<MeasureBracket, SublevelError> {
    let form = p.linear_form(level);
    let inv_norm = 1.0 / level.hypot(1.0);
    measure_where(|x| form.eval_real(x).abs() * inv_norm < eps, depth)
}

/// Fitted sublevel exponent: measure ≈ K·ε^c on a log-log scale.
#[derive(Debug, Clone)]
pub struct ExponentFit {
    pub exponent: f64,
    pub r2: f64,
    /// (ε, bracket) pairs that entered the fit (midpoint > 0).
    pub samples: Vec<(f64, MeasureBracket)>,
}

/// Fit the Lojasiewicz exponent of {x : |v(x) − E| < ε} over a threshold
/// ladder with at least 4 entries spanning at least 3 decades.
pub fn lojasiewicz_fit(
    p: &MeromorphicPotential,
    level: f64,
    eps_list: &[f64],
    depth: u32,
) -> Result<ExponentFit, SublevelError> {
    validate_ladder(eps_list)?;
    let samples: Vec<(f64, MeasureBracket)> = eps_list
        .iter()
        .map(|&eps| Ok((eps, potential_deviation_measure(p, level, eps, depth)?)))
        .collect::<Result<_, SublevelError>>()?;
    fit_exponent(samples)
}

/// Fit the sublevel exponent of the normalized linear form
/// {x : |g(x) − Ef(x)|/√(1+E²) < ε}; this is the variant that stays
/// measurable uniformly in the level E.
pub fn linear_exponent_fit(
    p: &MeromorphicPotential,
    level: f64,
    eps_list: &[f64],
    depth: u32,
) -> Result<ExponentFit, SublevelError> {
    validate_ladder(eps_list)?;
    let samples: Vec<(f64, MeasureBracket)> = eps_list
        .iter()
        .map(|&eps| Ok((eps, normalized_linear_measure(p, level, eps, depth)?)))
        .collect::<Result<_, SublevelError>>()?;
    fit_exponent(samples)
}

fn validate_ladder(eps_list: &[f64]) -> Result<(), SublevelError> {
    if eps_list.len() < 4 {
        return Err(SublevelError::BadThresholdLadder);
    }
    let max = eps_list.iter().cloned().fold(f64::MIN, f64::max);
    let min = eps_list.iter().cloned().fold(f64::MAX, f64::min);
    if !(min > 0.0) || max / min < 1e3 {
        return Err(SublevelError::BadThresholdLadder);
    }
    Ok(())
}

fn fit_exponent(samples: Vec<(f64, MeasureBracket)>) -> Result<ExponentFit, SublevelError> {
    let kept: Vec<(f64, MeasureBracket)> = samples
        .into_iter()
        .filter(|(_, b)| b.midpoint() > 0.0)
        .collect();
    let xs: Vec<f64> = kept.iter().map(|(e, _)| e.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|(_, b)| b.midpoint().ln()).collect();
    let fit = fit_line(&xs, &ys).ok_or(SublevelError::InsufficientData)?;
    Ok(ExponentFit {
        exponent: fit.slope,
        r2: fit.r2,
        samples: kept,
    })
}

/// 5 logarithmically spaced thresholds per decade over [lo, hi].
pub fn eps_ladder(lo: f64, hi: f64) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo);
    let decades = (hi / lo).log10();
    let steps = (decades * 5.0).round() as usize;
    (0..=steps)
        .map(|i| lo * 10f64.powf(i as f64 / 5.0))
        .filter(|&e| e <= hi * (1.0 + 1e-12))
        .collect()
}

/// One instance of the sublevel chain inequality
///   upper{|g−Ef|<ε} ≤ upper{|v−E|<√ε} + upper{|f|<√ε} + 4·2^(−depth)
#[derive(Debug, Clone, Copy)]
pub struct ChainCheck {
    pub lhs_upper: f64,
    pub rhs_potential: f64,
    pub rhs_denominator: f64,
    pub resolution: f64,
    pub holds: bool,
}

pub fn chain_check(
    p: &MeromorphicPotential,
    level: f64,
    eps: f64,
    depth: u32,
) -> Result<ChainCheck, SublevelError> {
    let form = p.linear_form(level);
    let lhs = measure_where(|x| form.eval_real(x).abs() < eps, depth)?;
    let sqrt_eps = eps.sqrt();
    let rhs_v = potential_deviation_measure(p, level, sqrt_eps, depth)?;
    let f = p.f().clone();
    let rhs_f = sublevel_measure(move |x| f.eval_real(x), sqrt_eps, depth)?;
    let resolution = lhs.resolution();
    let holds = lhs.upper <= rhs_v.upper + rhs_f.upper + 4.0 * resolution;
    Ok(ChainCheck {
        lhs_upper: lhs.upper,
        rhs_potential: rhs_v.upper,
        rhs_denominator: rhs_f.upper,
        resolution,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::TrigPolynomial;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn maryland() -> MeromorphicPotential {
        MeromorphicPotential::maryland()
    }

    fn analytic_cos() -> MeromorphicPotential {
        let g = TrigPolynomial::from_terms(&[(1, 1.0, 0.0)]).unwrap(); // 2cos(2πx)
        MeromorphicPotential::new(g, TrigPolynomial::constant(1.0)).unwrap()
    }

    #[test]
    fn cos_edge_measure_matches_closed_form() {
        // {|2cos(2πx) − 2| < ε} = arccos(1 − ε/2)/π
        let eps = 0.01;
        let bracket = sublevel_measure(
            |x| 2.0 * (std::f64::consts::TAU * x).cos() - 2.0,
            eps,
            20,
        )
        .unwrap();
        let exact = (1.0 - eps / 2.0).acos() / PI;
        assert!(
            bracket.contains(exact),
            "bracket [{}, {}] misses {exact}",
            bracket.lower,
            bracket.upper
        );
        assert!(bracket.width() < 1e-4);
    }

    #[test]
    fn tangent_measure_matches_closed_form() {
        // {|tan(πx)| < ε} has measure 2·arctan(ε)/π; evaluated through the
        // bounded surrogate |sin(2πx)| < ε|1 + cos(2πx)|.
        let eps = 0.1;
        let bracket = potential_deviation_measure(&maryland(), 0.0, eps, 20).unwrap();
        let exact = 2.0 * eps.atan() / PI;
        assert!((exact - 0.06345).abs() < 1e-4);
        assert!(bracket.contains(exact));
        assert!(bracket.width() < 1e-4);
    }

    #[test]
    fn whole_torus_when_threshold_dominates() {
        let bracket = sublevel_measure(|x| (std::f64::consts::TAU * x).cos(), 5.0, 10).unwrap();
        assert_eq!(bracket.lower, 1.0);
        assert_eq!(bracket.upper, 1.0);

        // ε beyond ‖g‖+‖f‖ makes the normalized linear test vacuous.
        let p = maryland();
        let bracket = normalized_linear_measure(&p, 0.0, 4.0, 10).unwrap();
        assert_eq!(bracket.lower, 1.0);
    }

    #[test]
    fn sine_linear_measure_matches_closed_form() {
        // E = 0: {|sin 2πx| < ε}, two roots, measure 2·arcsin(ε)/π.
        let eps = 0.05;
        let bracket = normalized_linear_measure(&maryland(), 0.0, eps, 20).unwrap();
        let exact = 2.0 * eps.asin() / PI;
        assert!((exact - 0.03184).abs() < 1e-4);
        assert!(bracket.contains(exact));
    }

    #[test]
    fn large_level_approaches_denominator_sublevel() {
        // As E → ∞ the normalized form tends to |f| up to sign.
        let p = maryland();
        let level = 1e6;
        let eps = 0.01;
        let with_level = normalized_linear_measure(&p, level, eps, 18).unwrap();
        let f = p.f().clone();
        let direct = sublevel_measure(move |x| f.eval_real(x), eps, 18).unwrap();
        let gap = (with_level.midpoint() - direct.midpoint()).abs();
        assert!(
            gap <= with_level.width() + direct.width() + 1e-3,
            "midpoints {} vs {}",
            with_level.midpoint(),
            direct.midpoint()
        );
    }

    #[test]
    fn upper_and_lower_monotone_in_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let poly = TrigPolynomial::from_terms(&[
                (0, rng.random_range(-0.5..0.5), 0.0),
                (1, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                (2, rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)),
            ])
            .unwrap();
            let mut prev = MeasureBracket {
                lower: 0.0,
                upper: 0.0,
                depth: 0,
            };
            for i in 1..8 {
                let t = i as f64 * 0.25;
                let p = poly.clone();
                let bracket = sublevel_measure(move |x| p.eval_real(x), t, 12).unwrap();
                assert!(bracket.lower + 1e-15 >= prev.lower);
                assert!(bracket.upper + 1e-15 >= prev.upper);
                prev = bracket;
            }
        }
    }

    #[test]
    fn deeper_brackets_nest() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let poly = TrigPolynomial::from_terms(&[
                (0, rng.random_range(-0.3..0.3), 0.0),
                (1, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                (3, rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4)),
            ])
            .unwrap();
            let t = rng.random_range(0.05..1.0);
            let p0 = poly.clone();
            let coarse = sublevel_measure(move |x| p0.eval_real(x), t, 10).unwrap();
            let p1 = poly.clone();
            let fine = sublevel_measure(move |x| p1.eval_real(x), t, 12).unwrap();
            assert!(fine.lower + 1e-15 >= coarse.lower);
            assert!(fine.upper <= coarse.upper + 1e-15);
        }
    }

    #[test]
    fn lojasiewicz_exponents_for_reference_potentials() {
        let ladder = eps_ladder(1e-5, 1e-1);
        assert!(ladder.len() >= 20);

        // tan(πx) at E = 0: measure = 2·arctan(ε)/π → exponent 1.
        let fit = lojasiewicz_fit(&maryland(), 0.0, &ladder, 24).unwrap();
        assert!(
            (fit.exponent - 1.0).abs() < 0.05,
            "tan exponent {}",
            fit.exponent
        );

        // 2cos(2πx) at the band edge E = 2: square-root scaling.
        let fit = lojasiewicz_fit(&analytic_cos(), 2.0, &ladder, 24).unwrap();
        assert!(
            (fit.exponent - 0.5).abs() < 0.05,
            "edge exponent {}",
            fit.exponent
        );

        // 2cos(2πx) at the regular value E = 0: linear scaling.
        let fit = lojasiewicz_fit(&analytic_cos(), 0.0, &ladder, 24).unwrap();
        assert!(
            (fit.exponent - 1.0).abs() < 0.05,
            "interior exponent {}",
            fit.exponent
        );
    }

    #[test]
    fn exponent_band_is_stable_in_the_level() {
        // The normalized form stays measurable for all E; the fitted
        // exponent must not collapse as |E| grows.
        let p = maryland();
        let ladder = eps_ladder(1e-4, 1e-1);
        for &level in &[0.0, 1.0, -1.0, 10.0, -10.0, 100.0, -100.0, 1e4, -1e4] {
            let fit = linear_exponent_fit(&p, level, &ladder, 22).unwrap();
            assert!(
                (0.4..=1.5).contains(&fit.exponent),
                "exponent {} escapes the band at E = {level}",
                fit.exponent
            );
        }
    }

    #[test]
    fn chain_inequality_holds_for_maryland() {
        let p = maryland();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let level = rng.random_range(-3.0..3.0);
            let eps = 10f64.powf(rng.random_range(-4.0..-1.0));
            let check = chain_check(&p, level, eps, 18).unwrap();
            assert!(
                check.holds,
                "chain fails at E={level}, eps={eps}: {check:?}"
            );
        }
    }

    #[test]
    fn ladder_validation() {
        assert!(matches!(
            lojasiewicz_fit(&maryland(), 0.0, &[0.1, 0.01], 12),
            Err(SublevelError::BadThresholdLadder)
        ));
        assert!(matches!(
            lojasiewicz_fit(&maryland(), 0.0, &[0.1, 0.09, 0.08, 0.07], 12),
            Err(SublevelError::BadThresholdLadder)
        ));
    }
}
