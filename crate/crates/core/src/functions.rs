//! Real-analytic functions on 𝕋 as finite Fourier series, their extensions
//! to horizontal strips of ℂ, the meromorphic potential v = g/f, and the
//! exponentially decaying Toeplitz kernel.

use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

use crate::torus::TorusPoint;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionError {
    #[error("coefficients are not Hermitian at n = {n}")]
    NonHermitian { n: i64 },
    #[error("evaluation point has |Im z| = {im} beyond declared strip {strip}")]
    OutOfAnnulus { im: f64, strip: f64 },
    #[error("|f| = {f_abs:e} below the pole guard {f_min:e} at x = {x}")]
    PoleProximity { x: f64, f_abs: f64, f_min: f64 },
    #[error("f is identically zero")]
    ZeroDenominator,
    #[error("g is a scalar multiple of f: the potential would be constant")]
    DegeneratePotential,
    #[error("kernel decay violated at n={n}: |coeff|={value:e} >= e^(-rho|n|)={bound:e}")]
    KernelDecay { n: i64, value: f64, bound: f64 },
    #[error("kernel must have vanishing mean (coefficient at n = 0)")]
    KernelNonzeroMean,
}

/// Finite Fourier series Σ ĥ(n) e^{2πinz}, |n| ≤ degree, with Hermitian
/// coefficients so the function is real on the real torus.
#[derive(Debug, Clone)]
pub struct TrigPolynomial {
    /// index i holds ĥ(i − degree)
    coeffs: Vec<Complex64>,
    degree: usize,
    strip: f64,
}

pub const DEFAULT_STRIP: f64 = 1.0;

impl TrigPolynomial {
    /// Build from (n, re, im) triples. Mirror coefficients at −n are filled
    /// in by conjugation; when both signs are supplied they must agree.
    pub fn from_terms(terms: &[(i64, f64, f64)]) -> Result<Self, FunctionError> {
        Self::from_terms_with_strip(terms, DEFAULT_STRIP)
    }

    pub fn from_terms_with_strip(
        terms: &[(i64, f64, f64)],
        strip: f64,
    ) -> Result<Self, FunctionError> {
        let degree = terms.iter().map(|t| t.0.unsigned_abs() as usize).max().unwrap_or(0);
        let len = 2 * degree + 1;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); len];
        let mut set = vec![false; len];
        for &(n, re, im) in terms {
            let idx = (n + degree as i64) as usize;
            let value = Complex64::new(re, im);
            if set[idx] && (coeffs[idx] - value).norm() > 1e-12 {
                return Err(FunctionError::NonHermitian { n });
            }
            coeffs[idx] = value;
            set[idx] = true;
            let mirror = (degree as i64 - n) as usize;
            let conj = value.conj();
            if set[mirror] {
                if (coeffs[mirror] - conj).norm() > 1e-12 {
                    return Err(FunctionError::NonHermitian { n });
                }
            } else {
                coeffs[mirror] = conj;
                set[mirror] = true;
            }
        }
        if coeffs[degree].im.abs() > 1e-12 {
            return Err(FunctionError::NonHermitian { n: 0 });
        }
        coeffs[degree] = Complex64::new(coeffs[degree].re, 0.0);
        Ok(TrigPolynomial {
            coeffs,
            degree,
            strip,
        })
    }

    pub fn constant(c: f64) -> Self {
        TrigPolynomial {
            coeffs: vec![Complex64::new(c, 0.0)],
            degree: 0,
            strip: DEFAULT_STRIP,
        }
    }

    /// cos(2πx): ĥ(±1) = 1/2.
    pub fn cosine() -> Self {
        Self::from_terms(&[(1, 0.5, 0.0)]).expect("hermitian by construction")
    }

    /// sin(2πx): ĥ(±1) = ∓i/2.
    pub fn sine() -> Self {
        Self::from_terms(&[(1, 0.0, -0.5)]).expect("hermitian by construction")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn strip(&self) -> f64 {
        self.strip
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.degree {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(n + self.degree as i64) as usize]
        }
    }

    /// Σ|ĥ(n)|, the scale used by the real-evaluation imaginary-part check.
    pub fn coeff_l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    /// ca·a + cb·b; real scalars preserve Hermitian symmetry.
    pub fn linear_combination(ca: f64, a: &Self, cb: f64, b: &Self) -> Self {
        let degree = a.degree.max(b.degree);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * degree + 1];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let n = i as i64 - degree as i64;
            *c = ca * a.coeff(n) + cb * b.coeff(n);
        }
        TrigPolynomial {
            coeffs,
            degree,
            strip: a.strip.min(b.strip),
        }
    }

    /// Σ ĥ(n) e^{2πinz} with the declared-strip guard.
    pub fn eval(&self, z: Complex64) -> Result<Complex64, FunctionError> {
        if z.im.abs() > self.strip {
            return Err(FunctionError::OutOfAnnulus {
                im: z.im,
                strip: self.strip,
            });
        }
        Ok(self.eval_unchecked(z))
    }

    pub fn eval_unchecked(&self, z: Complex64) -> Complex64 {
        let w = (Complex64::i() * TAU * z).exp();
        let w_inv = 1.0 / w;
        // walk outward from n = 0 so |n| stays small for low-degree series
        let mut acc = self.coeff(0);
        let mut pos = Complex64::new(1.0, 0.0);
        let mut neg = Complex64::new(1.0, 0.0);
        for n in 1..=self.degree as i64 {
            pos *= w;
            neg *= w_inv;
            acc += self.coeff(n) * pos + self.coeff(-n) * neg;
        }
        acc
    }

    /// Value at real x through the explicitly real cosine/sine form.
    pub fn eval_real(&self, x: f64) -> f64 {
        let mut acc = self.coeff(0).re;
        for n in 1..=self.degree as i64 {
            let c = self.coeff(n);
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            let (s, co) = (TAU * n as f64 * x).sin_cos();
            acc += 2.0 * (c.re * co - c.im * s);
        }
        acc
    }

    /// Max of |h(x ± ir)| over a uniform grid, inflated by the Bernstein-type
    /// allowance 1 + 2π·degree/grid so the result upper-bounds the true sup.
    pub fn sup_norm_annulus(&self, r: f64, grid: usize) -> f64 {
        let grid = grid.max(256);
        let mut max = 0.0f64;
        for j in 0..grid {
            let x = j as f64 / grid as f64;
            let up = self.eval_unchecked(Complex64::new(x, r)).norm();
            let down = self.eval_unchecked(Complex64::new(x, -r)).norm();
            max = max.max(up).max(down);
        }
        max * (1.0 + TAU * self.degree as f64 / grid as f64)
    }
}

/// A zero of a trig polynomial on [0,1) with its detected multiplicity
/// parity (1 = sign change, 2 = touching zero).
#[derive(Debug, Clone, Copy)]
pub struct TorusZero {
    pub point: TorusPoint,
    pub multiplicity: u32,
}

const ZERO_REFINE_TARGET: f64 = 1e-12;
const REFINE_ITERS: usize = 200;

/// All real zeros of f on [0,1): sign-change bisection plus a
/// local-minimum scan (for touching zeros), each refined to |f| < 10⁻¹².
pub fn zeros_on_torus(f: &TrigPolynomial, tol: f64) -> Vec<TorusZero> {
    let samples = 10 * f.degree() + 64;
    let values: Vec<f64> = (0..samples)
        .map(|i| f.eval_real(i as f64 / samples as f64))
        .collect();
    let h = 1.0 / samples as f64;
    let mut zeros: Vec<TorusZero> = Vec::new();

    let push = |x: f64, multiplicity: u32, zeros: &mut Vec<TorusZero>| {
        let p = TorusPoint::new(x);
        let min_sep = 0.25 * h;
        if zeros.iter().all(|z| z.point.dist(p) > min_sep) {
            zeros.push(TorusZero {
                point: p,
                multiplicity,
            });
        }
    };

    for i in 0..samples {
        let x0 = i as f64 * h;
        let x1 = x0 + h;
        let v0 = values[i];
        let v1 = values[(i + 1) % samples];
        if v0 == 0.0 {
            push(x0, parity_at(f, x0, h), &mut zeros);
            continue;
        }
        if v0 * v1 < 0.0 {
            let x = bisect_sign_change(f, x0, x1, v0);
            push(x, 1, &mut zeros);
        } else if v0.abs() < tol || is_local_min(&values, i) {
            // candidate touching zero: minimize |f| on the 3-cell neighborhood
            let (xm, fm) = minimize_abs(f, x0 - h, x1 + h);
            if fm < ZERO_REFINE_TARGET {
                push(xm, parity_at(f, xm, h), &mut zeros);
            }
        }
    }
    zeros.sort_by(|a, b| a.point.value().total_cmp(&b.point.value()));
    zeros
}

fn is_local_min(values: &[f64], i: usize) -> bool {
    let n = values.len();
    let prev = values[(i + n - 1) % n].abs();
    let here = values[i].abs();
    let next = values[(i + 1) % n].abs();
    here <= prev && here <= next
}

fn parity_at(f: &TrigPolynomial, x: f64, h: f64) -> u32 {
    let left = f.eval_real(x - 0.5 * h);
    let right = f.eval_real(x + 0.5 * h);
    if left * right > 0.0 {
        2
    } else {
        1
    }
}

fn bisect_sign_change(f: &TrigPolynomial, mut lo: f64, mut hi: f64, f_lo: f64) -> f64 {
    let mut sign_lo = f_lo.signum();
    for _ in 0..REFINE_ITERS {
        let mid = 0.5 * (lo + hi);
        let fm = f.eval_real(mid);
        if fm == 0.0 || (hi - lo) < f64::EPSILON {
            return mid;
        }
        if fm.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
        sign_lo = f.eval_real(lo).signum();
    }
    0.5 * (lo + hi)
}

/// Golden-section minimization of |f| on [lo, hi].
fn minimize_abs(f: &TrigPolynomial, lo: f64, hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f.eval_real(c).abs();
    let mut fd = f.eval_real(d).abs();
    for _ in 0..REFINE_ITERS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f.eval_real(c).abs();
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f.eval_real(d).abs();
        }
        if b - a < 1e-15 {
            break;
        }
    }
    let x = 0.5 * (a + b);
    (x, f.eval_real(x).abs())
}

/// The singular potential v = g/f with the zero set of f precomputed.
#[derive(Debug, Clone)]
pub struct MeromorphicPotential {
    g: TrigPolynomial,
    f: TrigPolynomial,
    f_zeros: Vec<TorusZero>,
}

impl MeromorphicPotential {
    pub fn new(g: TrigPolynomial, f: TrigPolynomial) -> Result<Self, FunctionError> {
        if f.coeff_l1() == 0.0 {
            return Err(FunctionError::ZeroDenominator);
        }
        if proportional(&g, &f) {
            return Err(FunctionError::DegeneratePotential);
        }
        let f_zeros = zeros_on_torus(&f, 1e-10);
        Ok(MeromorphicPotential { g, f, f_zeros })
    }

    pub fn g(&self) -> &TrigPolynomial {
        &self.g
    }

    pub fn f(&self) -> &TrigPolynomial {
        &self.f
    }

    pub fn f_zeros(&self) -> &[TorusZero] {
        &self.f_zeros
    }

    /// g − E·f as a trig polynomial.
    pub fn linear_form(&self, level: f64) -> TrigPolynomial {
        TrigPolynomial::linear_combination(1.0, &self.g, -level, &self.f)
    }

    /// g(x)/f(x), guarded against poles by f_min.
    pub fn eval(&self, x: TorusPoint, f_min: f64) -> Result<f64, FunctionError> {
        let fv = self.f.eval_real(x.value());
        if fv.abs() < f_min {
            return Err(FunctionError::PoleProximity {
                x: x.value(),
                f_abs: fv.abs(),
                f_min,
            });
        }
        Ok(self.g.eval_real(x.value()) / fv)
    }

    /// The canonical singular example: v = tan(πx) = sin(2πx)/(1 + cos(2πx)).
    pub fn maryland() -> Self {
        let g = TrigPolynomial::sine();
        let f = TrigPolynomial::from_terms(&[(0, 1.0, 0.0), (1, 0.5, 0.0)])
            .expect("hermitian by construction");
        MeromorphicPotential::new(g, f).expect("nondegenerate by construction")
    }
}

fn proportional(g: &TrigPolynomial, f: &TrigPolynomial) -> bool {
    // g = λ f for some complex λ; probe λ from f's largest coefficient.
    let degree = g.degree().max(f.degree());
    let mut best = (0.0f64, 0i64);
    for n in -(degree as i64)..=degree as i64 {
        if f.coeff(n).norm() > best.0 {
            best = (f.coeff(n).norm(), n);
        }
    }
    if best.0 == 0.0 {
        return false;
    }
    let lambda = g.coeff(best.1) / f.coeff(best.1);
    let scale = g.coeff_l1() + f.coeff_l1();
    (-(degree as i64)..=degree as i64)
        .all(|n| (g.coeff(n) - lambda * f.coeff(n)).norm() <= 1e-12 * scale.max(1.0))
}

/// Exponentially decaying Toeplitz symbol: coefficients φ̂(n) with
/// |φ̂(n)| < e^{−ρ|n|}, φ̂(0) = 0, and Hermitian symmetry.
#[derive(Debug, Clone)]
pub struct ToeplitzKernel {
    coeffs: Vec<Complex64>,
    cutoff: usize,
    rho: f64,
}

impl ToeplitzKernel {
    pub fn from_terms(terms: &[(i64, f64, f64)], rho: f64) -> Result<Self, FunctionError> {
        assert!(rho > 0.0, "decay rate must be positive");
        let poly = TrigPolynomial::from_terms(terms)?;
        let cutoff = poly.degree();
        if poly.coeff(0).norm() != 0.0 {
            return Err(FunctionError::KernelNonzeroMean);
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * cutoff + 1];
        for n in 0..=cutoff as i64 {
            // Hermitian symmetry gives |φ̂(−n)| = |φ̂(n)|, so checking n ≥ 0 covers both.
            let c = poly.coeff(n);
            let bound = (-rho * n as f64).exp();
            if c.norm() >= bound {
                return Err(FunctionError::KernelDecay {
                    n,
                    value: c.norm(),
                    bound,
                });
            }
            coeffs[(cutoff as i64 + n) as usize] = c;
            coeffs[(cutoff as i64 - n) as usize] = c.conj();
        }
        Ok(ToeplitzKernel {
            coeffs,
            cutoff,
            rho,
        })
    }

    /// Geometric kernel c·e^{−ρ|n|} for 1 ≤ |n| ≤ cutoff; requires 0 < c < 1.
    pub fn geometric(scale: f64, rho: f64, cutoff: usize) -> Result<Self, FunctionError> {
        let terms: Vec<(i64, f64, f64)> = (1..=cutoff as i64)
            .map(|n| (n, scale * (-rho * n as f64).exp(), 0.0))
            .collect();
        Self::from_terms(&terms, rho)
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.cutoff {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(n + self.cutoff as i64) as usize]
        }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Σ|φ̂(n)| over stored coefficients.
    pub fn coeff_l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    /// The stored coefficients as a real even sequence (index = |n|),
    /// or None when any coefficient has an imaginary part.
    pub fn real_even(&self) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(self.cutoff + 1);
        for n in 0..=self.cutoff as i64 {
            let c = self.coeff(n);
            if c.im != 0.0 {
                return None;
            }
            out.push(c.re);
        }
        Some(out)
    }
}

/// Σ_{|n|>m} e^{−ρ|n|} = 2e^{−ρ(m+1)}/(1−e^{−ρ}): upper bound for the
/// coupling mass discarded beyond a truncation radius m.
pub fn kernel_tail_bound(rho: f64, m: usize) -> f64 {
    let q = (-rho).exp();
    2.0 * q.powi(m as i32 + 1) / (1.0 - q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let cos = TrigPolynomial::cosine();
        assert!((cos.eval(Complex64::new(0.0, 0.0)).unwrap().re - 1.0).abs() < 1e-14);

        // cos at purely imaginary argument is cosh.
        let y = 0.07;
        let got = cos.eval(Complex64::new(0.0, y)).unwrap();
        assert!((got.re - (TAU * y).cosh()).abs() < 1e-12);
        assert!(got.im.abs() < 1e-12);

        let sin = TrigPolynomial::sine();
        assert!((sin.eval(Complex64::new(0.25, 0.0)).unwrap().re - 1.0).abs() < 1e-14);

        match cos.eval(Complex64::new(0.0, 2.0 * DEFAULT_STRIP)) {
            Err(FunctionError::OutOfAnnulus { .. }) => {}
            other => panic!("expected OutOfAnnulus, got {other:?}"),
        }
    }

    #[test]
    fn real_eval_is_real_and_matches_complex_path() {
        let h = TrigPolynomial::from_terms(&[(0, 0.3, 0.0), (1, 0.2, -0.4), (3, -0.1, 0.05)])
            .unwrap();
        let scale = h.coeff_l1();
        for i in 0..257 {
            let x = i as f64 / 257.0;
            let z = h.eval(Complex64::new(x, 0.0)).unwrap();
            assert!(z.im.abs() < 1e-12 * scale);
            assert!((z.re - h.eval_real(x)).abs() < 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn mean_value_recovers_zeroth_coefficient() {
        let h = TrigPolynomial::from_terms(&[(0, 0.77, 0.0), (1, 0.2, -0.4), (2, 0.11, 0.3)])
            .unwrap();
        let avg: f64 = (0..64).map(|i| h.eval_real(i as f64 / 64.0)).sum::<f64>() / 64.0;
        assert!((avg - 0.77).abs() < 1e-10);
    }

    #[test]
    fn non_hermitian_rejected() {
        match TrigPolynomial::from_terms(&[(0, 1.0, 0.5)]) {
            Err(FunctionError::NonHermitian { n: 0 }) => {}
            other => panic!("expected NonHermitian, got {other:?}"),
        }
        match TrigPolynomial::from_terms(&[(1, 1.0, 0.0), (-1, 0.5, 0.0)]) {
            Err(FunctionError::NonHermitian { .. }) => {}
            other => panic!("expected NonHermitian, got {other:?}"),
        }
        // Consistent mirror pair is fine.
        assert!(TrigPolynomial::from_terms(&[(1, 0.0, -0.5), (-1, 0.0, 0.5)]).is_ok());
    }

    #[test]
    fn potential_examples() {
        let v = MeromorphicPotential::maryland();
        // tan(πx) = sin(2πx)/(1+cos(2πx))
        let got = v.eval(TorusPoint::new(0.25), 1e-8).unwrap();
        assert!((got - 1.0).abs() < 1e-12);

        let got = v.eval(TorusPoint::new(0.125), 1e-8).unwrap();
        assert!((got - (std::f64::consts::PI / 8.0).tan()).abs() < 1e-12);
        assert!((got - 0.414_213_56).abs() < 1e-7);

        match v.eval(TorusPoint::new(0.5), 1e-8) {
            Err(FunctionError::PoleProximity { .. }) => {}
            other => panic!("expected PoleProximity, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_potential_rejected() {
        let f = TrigPolynomial::cosine();
        let g = TrigPolynomial::linear_combination(2.5, &TrigPolynomial::cosine(), 0.0, &f);
        match MeromorphicPotential::new(g, f) {
            Err(FunctionError::DegeneratePotential) => {}
            other => panic!("expected DegeneratePotential, got {other:?}"),
        }
    }

    #[test]
    fn zeros_examples() {
        // 1 + cos(2πx): touching zero at 0.5.
        let f = TrigPolynomial::from_terms(&[(0, 1.0, 0.0), (1, 0.5, 0.0)]).unwrap();
        let zs = zeros_on_torus(&f, 1e-10);
        assert_eq!(zs.len(), 1);
        assert!((zs[0].point.value() - 0.5).abs() < 1e-7);
        assert_eq!(zs[0].multiplicity, 2);
        assert!(f.eval_real(zs[0].point.value()).abs() < 1e-12);

        // cos(2πx): simple zeros at 0.25 and 0.75.
        let zs = zeros_on_torus(&TrigPolynomial::cosine(), 1e-10);
        assert_eq!(zs.len(), 2);
        assert!((zs[0].point.value() - 0.25).abs() < 1e-11);
        assert!((zs[1].point.value() - 0.75).abs() < 1e-11);
        assert!(zs.iter().all(|z| z.multiplicity == 1));

        // 2 + cos(2πx): strictly positive.
        let f = TrigPolynomial::from_terms(&[(0, 2.0, 0.0), (1, 0.5, 0.0)]).unwrap();
        assert!(zeros_on_torus(&f, 1e-10).is_empty());
    }

    #[test]
    fn sup_norm_examples() {
        let cos = TrigPolynomial::cosine();
        let grid = 4096;
        let safety = 1.0 + TAU / grid as f64;
        let flat = cos.sup_norm_annulus(0.0, grid);
        assert!((flat - safety).abs() < 1e-3);
        assert!(flat >= 1.0);

        let lifted = cos.sup_norm_annulus(0.1, grid);
        let want = (0.2 * std::f64::consts::PI).cosh();
        assert!((lifted - want * safety).abs() < 1e-3);
        assert!((want - 1.2040).abs() < 1e-3);

        let c = TrigPolynomial::constant(-3.25);
        assert!((c.sup_norm_annulus(0.3, grid) - 3.25 * 1.0).abs() < 1e-12);
    }

    #[test]
    fn sup_norm_monotone_in_strip_height() {
        let h = TrigPolynomial::from_terms(&[(1, 0.4, 0.1), (2, -0.2, 0.3)]).unwrap();
        let mut prev = 0.0;
        for i in 0..12 {
            let r = i as f64 * 0.05;
            let cur = h.sup_norm_annulus(r, 1024);
            assert!(cur + 1e-12 >= prev);
            prev = cur;
        }
    }

    #[test]
    fn kernel_construction_and_tail() {
        // Decay violation: |coeff| = 1 at n = 3 against e^{-3}.
        match ToeplitzKernel::from_terms(&[(3, 1.0, 0.0)], 1.0) {
            Err(FunctionError::KernelDecay { n: 3, .. }) => {}
            other => panic!("expected KernelDecay, got {other:?}"),
        }
        match ToeplitzKernel::from_terms(&[(0, 0.2, 0.0), (1, 0.1, 0.0)], 1.0) {
            Err(FunctionError::KernelNonzeroMean) => {}
            other => panic!("expected KernelNonzeroMean, got {other:?}"),
        }
        let k = ToeplitzKernel::geometric(0.5, 1.0, 8).unwrap();
        assert_eq!(k.cutoff(), 8);
        assert!(k.real_even().is_some());
        assert!((k.coeff(3).re - 0.5 * (-3.0f64).exp()).abs() < 1e-15);

        assert!((kernel_tail_bound(1.0, 0) - 1.163_953_4).abs() < 1e-6);
        assert!((kernel_tail_bound(2.0_f64.ln(), 3) - 0.25).abs() < 1e-14);
        assert!(kernel_tail_bound(50.0, 2) < 1e-60);
    }

    #[test]
    fn complex_kernel_detected() {
        let k = ToeplitzKernel::from_terms(&[(1, 0.1, 0.05)], 1.0).unwrap();
        assert!(k.real_even().is_none());
    }
}
