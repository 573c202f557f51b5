//! Finite windows of the long-range operator, the diagonal×bounded
//! factorization H−E = F·B, log-domain pivoted determinants, Green's
//! functions with decay fits, determinant averages, large-deviation scans,
//! and the good-shift search.
//!
//! Every inversion and determinant here acts on B, whose entries stay
//! bounded uniformly in the energy; the unbounded potential only ever
//! appears through the diagonal factor F and its bounded inverse.

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::fit::fit_line;
use crate::functions::{zeros_on_torus, FunctionError, MeromorphicPotential, ToeplitzKernel};
use crate::torus::{orbit_point, weighted_average, Frequency, TorusPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("orbit point {x} at offset {index} has |f| = {f_abs:e} below the pole guard {f_min:e}")]
    PoleProximity {
        index: i64,
        x: f64,
        f_abs: f64,
        f_min: f64,
    },
    #[error("window is numerically singular at this energy")]
    SingularWindow,
    #[error("decay fit has only {usable} usable pairs (needs >= 10)")]
    InsufficientData { usable: usize },
    #[error("every shift in the search range is singular or pole-blocked")]
    AllSingular,
    #[error("kernel has complex coefficients; the real-matrix pipeline needs a real even kernel")]
    ComplexKernel,
    #[error("coupling must satisfy 0 <= eps < 1, got {0}")]
    BadCoupling(f64),
    #[error(transparent)]
    Function(#[from] FunctionError),
}

/// The full model: potential pair, Toeplitz kernel, coupling, frequency.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    potential: MeromorphicPotential,
    kernel: ToeplitzKernel,
    kernel_real: Vec<f64>,
    coupling: f64,
    freq: Frequency,
    f_min: f64,
    f_sup: f64,
    g_sup: f64,
}

pub const DEFAULT_F_MIN: f64 = 1e-8;

impl OperatorSpec {
    pub fn new(
        potential: MeromorphicPotential,
        kernel: ToeplitzKernel,
        coupling: f64,
        freq: Frequency,
    ) -> Result<Self, SpectralError> {
        if !(0.0..1.0).contains(&coupling) {
            return Err(SpectralError::BadCoupling(coupling));
        }
        let kernel_real = kernel.real_even().ok_or(SpectralError::ComplexKernel)?;
        let f_sup = potential.f().sup_norm_annulus(0.0, 2048);
        let g_sup = potential.g().sup_norm_annulus(0.0, 2048);
        Ok(OperatorSpec {
            potential,
            kernel,
            kernel_real,
            coupling,
            freq,
            f_min: DEFAULT_F_MIN,
            f_sup,
            g_sup,
        })
    }

    pub fn with_f_min(mut self, f_min: f64) -> Self {
        self.f_min = f_min;
        self
    }

    pub fn potential(&self) -> &MeromorphicPotential {
        &self.potential
    }

    pub fn kernel(&self) -> &ToeplitzKernel {
        &self.kernel
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn freq(&self) -> &Frequency {
        &self.freq
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    /// Grid sup-norm upper bound for |f| (with Bernstein allowance).
    pub fn f_sup(&self) -> f64 {
        self.f_sup
    }

    /// Grid sup-norm upper bound for |g|.
    pub fn g_sup(&self) -> f64 {
        self.g_sup
    }

    fn kernel_coeff(&self, offset: i64) -> f64 {
        let k = offset.unsigned_abs() as usize;
        if k < self.kernel_real.len() {
            self.kernel_real[k]
        } else {
            0.0
        }
    }
}

/// An integer interval [lo, hi], both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexWindow {
    lo: i64,
    hi: i64,
}

impl IndexWindow {
    pub fn new(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi, "window must satisfy lo <= hi");
        IndexWindow { lo, hi }
    }

    pub fn from_size(lo: i64, size: usize) -> Self {
        assert!(size >= 1);
        IndexWindow {
            lo,
            hi: lo + size as i64 - 1,
        }
    }

    /// Symmetric window [−half, half].
    pub fn symmetric(half: usize) -> Self {
        IndexWindow {
            lo: -(half as i64),
            hi: half as i64,
        }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn size(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn contains(&self, k: i64) -> bool {
        self.lo <= k && k <= self.hi
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }
}

struct OrbitValues {
    f: Vec<f64>,
    g: Vec<f64>,
}

fn orbit_values(spec: &OperatorSpec, x: TorusPoint, window: IndexWindow) -> OrbitValues {
    let omega = spec.freq.omega();
    let n = window.size();
    let mut f = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    for k in window.indices() {
        let point = orbit_point(x, omega, k).value();
        f.push(spec.potential.f().eval_real(point));
        g.push(spec.potential.g().eval_real(point));
    }
    OrbitValues { f, g }
}

fn guarded_orbit_values(
    spec: &OperatorSpec,
    x: TorusPoint,
    window: IndexWindow,
) -> Result<OrbitValues, SpectralError> {
    let values = orbit_values(spec, x, window);
    for (offset, &fv) in values.f.iter().enumerate() {
        if fv.abs() < spec.f_min {
            let index = window.lo + offset as i64;
            return Err(SpectralError::PoleProximity {
                index,
                x: orbit_point(x, spec.freq.omega(), index).value(),
                f_abs: fv.abs(),
                f_min: spec.f_min,
            });
        }
    }
    Ok(values)
}

/// The dense window matrix H_w − E with diagonal v(x+nω) − E and
/// off-diagonal ε·φ̂(n−n′).
pub fn build_window(
    spec: &OperatorSpec,
    x: TorusPoint,
    window: IndexWindow,
    energy: f64,
) -> Result<DMatrix<f64>, SpectralError> {
    let values = guarded_orbit_values(spec, x, window)?;
    let n = window.size();
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            h[(i, j)] = if i == j {
                values.g[i] / values.f[i] - energy
            } else {
                spec.coupling * spec.kernel_coeff(i as i64 - j as i64)
            };
        }
    }
    Ok(h)
}

/// The factor pair of a window: diagonal F and bounded-entry B with
/// F·B = H − E.
#[derive(Debug, Clone)]
pub struct FactorPair {
    /// Diagonal of F: √(1+E²)/f(x+nω).
    pub scale_diag: Vec<f64>,
    /// B: diagonal (g−Ef)/√(1+E²), off-diagonal (ε/√(1+E²))·f(x+nω)·φ̂(n−n′).
    pub bounded: DMatrix<f64>,
    pub energy: f64,
    pub phase: TorusPoint,
    /// (ε/√(1+E²))·|f(x+nω)| per row; feeds the path majorant.
    row_coupling: Vec<f64>,
}

pub fn factorize(
    spec: &OperatorSpec,
    x: TorusPoint,
    window: IndexWindow,
    energy: f64,
) -> Result<FactorPair, SpectralError> {
    let values = guarded_orbit_values(spec, x, window)?;
    Ok(factor_from_values(spec, &values, x, energy))
}

fn factor_from_values(
    spec: &OperatorSpec,
    values: &OrbitValues,
    phase: TorusPoint,
    energy: f64,
) -> FactorPair {
    let n = values.f.len();
    let scale = 1.0f64.hypot(energy);
    let inv_scale = 1.0 / scale;
    let eps_scaled = spec.coupling * inv_scale;
    let mut bounded = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            bounded[(i, j)] = if i == j {
                (values.g[i] - energy * values.f[i]) * inv_scale
            } else {
                eps_scaled * values.f[i] * spec.kernel_coeff(i as i64 - j as i64)
            };
        }
    }
    let scale_diag = values.f.iter().map(|&fv| scale / fv).collect();
    let row_coupling = values.f.iter().map(|&fv| eps_scaled * fv.abs()).collect();
    FactorPair {
        scale_diag,
        bounded,
        energy,
        phase,
        row_coupling,
    }
}

/// max |F·B − (H−E)| over entries; the factorization identity holds to a few
/// ulps of the entry scale.
pub fn reconstruction_residual(pair: &FactorPair, h_minus_e: &DMatrix<f64>) -> f64 {
    let n = pair.scale_diag.len();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let product = pair.scale_diag[i] * pair.bounded[(i, j)];
            worst = worst.max((product - h_minus_e[(i, j)]).abs());
        }
    }
    worst
}

/// Pivots smaller than this in magnitude mark the window as singular.
const SINGULAR_FLOOR: f64 = 1e-300;

/// Row-pivoted LU in log domain: the determinant is carried as
/// (Σ log|pivot|, sign) so nothing under- or overflows for any window size.
pub(crate) struct LuFactors {
    n: usize,
    /// column-major packed LU (unit lower, upper including diagonal)
    data: Vec<f64>,
    ipiv: Vec<usize>,
    pub logabs: f64,
    pub sign: i8,
}

pub(crate) fn lu_decompose(n: usize, mut data: Vec<f64>) -> LuFactors {
    debug_assert_eq!(data.len(), n * n);
    let mut ipiv = Vec::with_capacity(n);
    let mut sign = 1i8;
    let mut logabs = 0.0f64;
    for k in 0..n {
        let mut piv_row = k;
        let mut piv_abs = data[k * n + k].abs();
        for i in k + 1..n {
            let a = data[k * n + i].abs();
            if a > piv_abs {
                piv_abs = a;
                piv_row = i;
            }
        }
        if !(piv_abs >= SINGULAR_FLOOR) {
            return LuFactors {
                n,
                data,
                ipiv,
                logabs: f64::NEG_INFINITY,
                sign: 0,
            };
        }
        if piv_row != k {
            for j in 0..n {
                data.swap(j * n + k, j * n + piv_row);
            }
            sign = -sign;
        }
        ipiv.push(piv_row);
        let piv = data[k * n + k];
        if piv < 0.0 {
            sign = -sign;
        }
        logabs += piv_abs.ln();
        let inv_piv = 1.0 / piv;
        for i in k + 1..n {
            data[k * n + i] *= inv_piv;
        }
        for j in k + 1..n {
            let (head, tail) = data.split_at_mut(j * n);
            let ukj = tail[k];
            if ukj != 0.0 {
                let col_k = &head[k * n + k + 1..k * n + n];
                let col_j = &mut tail[k + 1..n];
                for (cj, ck) in col_j.iter_mut().zip(col_k) {
                    *cj -= ck * ukj;
                }
            }
        }
    }
    LuFactors {
        n,
        data,
        ipiv,
        logabs,
        sign,
    }
}

impl LuFactors {
    /// Solve A·x = b in place. Caller must have checked sign != 0.
    pub(crate) fn solve_in_place(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        debug_assert!(self.sign != 0);
        let n = self.n;
        for (k, &p) in self.ipiv.iter().enumerate() {
            b.swap(k, p);
        }
        for k in 0..n {
            let yk = b[k];
            if yk != 0.0 {
                for i in k + 1..n {
                    b[i] -= self.data[k * n + i] * yk;
                }
            }
        }
        for k in (0..n).rev() {
            b[k] /= self.data[k * n + k];
            let xk = b[k];
            if xk != 0.0 {
                for i in 0..k {
                    b[i] -= self.data[k * n + i] * xk;
                }
            }
        }
    }
}

fn lu_of_matrix(m: &DMatrix<f64>) -> LuFactors {
    lu_decompose(m.nrows(), m.as_slice().to_vec())
}

/// (log|det|, sign) of a dense matrix. Singular windows come back as
/// (−∞, 0); the empty matrix follows the det(∅) = 1 convention.
pub fn logdet(matrix: &DMatrix<f64>) -> (f64, i8) {
    let lu = lu_of_matrix(matrix);
    (lu.logabs, lu.sign)
}

/// Σ_i log‖row_i‖₂, the Hadamard ceiling for log|det|.
pub fn hadamard_log_bound(matrix: &DMatrix<f64>) -> f64 {
    (0..matrix.nrows())
        .map(|i| {
            matrix
                .row(i)
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
                .ln()
        })
        .sum()
}

/// Exponential decay fitted to the off-diagonal of a Green matrix:
/// log|G(n,n′)| ≈ −rate·|n−n′| + offset.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    /// Positive values mean decay away from the diagonal.
    pub rate: f64,
    /// Intercept of the fit at |n−n′| = 0.
    pub offset: f64,
    pub r2: f64,
}

pub const DEFAULT_DECAY_FRAC: f64 = 0.1;
const DECAY_LOG_FLOOR: f64 = 1e-300;

/// Least squares of log|G(n,n′)| against |n−n′| over pairs with
/// |n−n′| ≥ frac·N and |G| above the representable floor.
pub fn decay_fit(green: &DMatrix<f64>, frac: f64) -> Result<DecayFit, SpectralError> {
    assert!(frac > 0.0 && frac < 1.0, "frac must lie in (0,1)");
    let n = green.nrows();
    let min_dist = (frac * n as f64).ceil().max(1.0) as usize;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let d = i.abs_diff(j);
            if d < min_dist {
                continue;
            }
            let val = green[(i, j)].abs();
            if val > DECAY_LOG_FLOOR {
                xs.push(d as f64);
                ys.push(val.ln());
            }
        }
    }
    if xs.len() < 10 {
        return Err(SpectralError::InsufficientData { usable: xs.len() });
    }
    let fit = fit_line(&xs, &ys).ok_or(SpectralError::InsufficientData { usable: xs.len() })?;
    Ok(DecayFit {
        rate: -fit.slope,
        offset: fit.intercept,
        r2: fit.r2,
    })
}

/// A window's Green matrix with its determinant and decay diagnostics.
#[derive(Debug, Clone)]
pub struct GreenResult {
    pub green: DMatrix<f64>,
    pub logdet_bounded: f64,
    pub det_sign: i8,
    pub max_entry: f64,
    /// None when too few off-diagonal entries are representable (e.g. ε = 0).
    pub decay: Option<DecayFit>,
}

/// G = B⁻¹·F⁻¹ solved column-wise through the bounded factor; the diagonal
/// F⁻¹ = f(x+nω)/√(1+E²) never blows up, poles included.
pub fn green(
    spec: &OperatorSpec,
    x: TorusPoint,
    window: IndexWindow,
    energy: f64,
) -> Result<GreenResult, SpectralError> {
    let pair = factorize(spec, x, window, energy)?;
    green_from_pair(&pair)
}

/// Green function through the bounded factorization with no pole guard:
/// near-pole windows stay numerically benign on this route (tiny f scales
/// the resolvent column back down), so only exactly singular windows fail.
pub(crate) fn green_unguarded(
    spec: &OperatorSpec,
    x: TorusPoint,
    window: IndexWindow,
    energy: f64,
) -> Result<GreenResult, SpectralError> {
    let values = orbit_values(spec, x, window);
    let pair = factor_from_values(spec, &values, x, energy);
    green_from_pair(&pair)
}

pub fn green_from_pair(pair: &FactorPair) -> Result<GreenResult, SpectralError> {
    let n = pair.scale_diag.len();
    let lu = lu_of_matrix(&pair.bounded);
    if lu.sign == 0 {
        return Err(SpectralError::SingularWindow);
    }
    let mut green = DMatrix::zeros(n, n);
    let mut column = vec![0.0f64; n];
    for j in 0..n {
        column.fill(0.0);
        column[j] = 1.0 / pair.scale_diag[j];
        lu.solve_in_place(&mut column);
        for i in 0..n {
            green[(i, j)] = column[i];
        }
    }
    let max_entry = green.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let decay = match decay_fit(&green, DEFAULT_DECAY_FRAC) {
        Ok(fit) => Some(fit),
        Err(SpectralError::InsufficientData { .. }) => None,
        Err(other) => return Err(other),
    };
    Ok(GreenResult {
        green,
        logdet_bounded: lu.logabs,
        det_sign: lu.sign,
        max_entry,
        decay,
    })
}

/// Worst margin of the decay template |G(n,n′)| < e^{−c0(|n−n′| − slack)}:
/// max over pairs of log|G| + c0·(|n−n′| − slack). Negative means the
/// template holds everywhere.
pub fn decay_template_margin(green: &DMatrix<f64>, c0: f64, slack: f64) -> (f64, (usize, usize)) {
    let n = green.nrows();
    let mut worst = f64::NEG_INFINITY;
    let mut arg = (0, 0);
    for j in 0..n {
        for i in 0..n {
            let d = i.abs_diff(j) as f64;
            let margin = green[(i, j)].abs().ln() + c0 * (d - slack);
            if margin > worst {
                worst = margin;
                arg = (i, j);
            }
        }
    }
    (worst, arg)
}

/// Relative error of the Cramer identity |B⁻¹(n,n′)| = |det minor|/|det B|,
/// with the minor determinant computed by an independent factorization of
/// the deleted matrix.
pub fn cramer_check(
    spec: &OperatorSpec,
    x: TorusPoint,
    window: IndexWindow,
    energy: f64,
    row: usize,
    col: usize,
) -> Result<f64, SpectralError> {
    let pair = factorize(spec, x, window, energy)?;
    let n = window.size();
    assert!(row < n && col < n);
    let lu = lu_of_matrix(&pair.bounded);
    if lu.sign == 0 {
        return Err(SpectralError::SingularWindow);
    }
    let mut column = vec![0.0f64; n];
    column[col] = 1.0;
    lu.solve_in_place(&mut column);
    let inverse_entry = column[row].abs();

    // |B⁻¹(row, col)| = |det of B with row `col` and column `row` deleted| / |det B|
    let minor = pair.bounded.clone().remove_row(col).remove_column(row);
    let (minor_logabs, minor_sign) = logdet(&minor);
    let ratio = if minor_sign == 0 {
        0.0
    } else {
        (minor_logabs - lu.logabs).exp()
    };
    let scale = inverse_entry.max(ratio);
    if scale < 1e-300 {
        return Ok(0.0);
    }
    Ok((inverse_entry - ratio).abs() / scale)
}

/// Closed-form geometric-series ceiling for |det minor(n,n′)| coming from
/// the path expansion: C_sub·q^dist/(1−q) with q = (1+2ε_b)e^{−ρ}.
/// None when q ≥ 1 (the tail does not converge at this coupling).
pub fn minor_path_majorant(spec: &OperatorSpec, pair: &FactorPair, dist: usize) -> Option<f64> {
    let eps_b = pair.row_coupling.iter().cloned().fold(0.0f64, f64::max);
    let q = (1.0 + 2.0 * eps_b) * (-spec.kernel.rho()).exp();
    if q >= 1.0 {
        return None;
    }
    let n = pair.scale_diag.len();
    let mut log_c_sub = 0.0f64;
    for i in 0..n {
        let row_sum: f64 = (0..n).map(|j| pair.bounded[(i, j)].abs()).sum();
        log_c_sub += row_sum.max(1.0).ln();
    }
    Some((log_c_sub + dist as f64 * q.ln() - (1.0 - q).ln()).exp())
}

/// Midpoint quadrature of ∫ log(|g−Ef|/√(1+E²)) dx with three dyadic
/// refinement levels inside distance 2⁻⁶ of each zero of g−Ef; the log
/// singularities are integrable so refinement caps the error.
pub fn normalized_log_integral(p: &MeromorphicPotential, level: f64, x_grid: usize) -> f64 {
    let form = p.linear_form(level);
    let inv_scale = 1.0 / 1.0f64.hypot(level);
    let zeros = zeros_on_torus(&form, 1e-9);
    let near_zero = |x: f64| {
        zeros
            .iter()
            .any(|z| z.point.dist(TorusPoint::new(x)) < 0.015625 + 0.5 / x_grid as f64)
    };
    let h = 1.0 / x_grid as f64;
    let mut acc = 0.0f64;
    for i in 0..x_grid {
        let x0 = i as f64 * h;
        let mid = x0 + 0.5 * h;
        if near_zero(mid) {
            // 3 dyadic levels -> 8 midpoint subcells
            let sub = h / 8.0;
            for k in 0..8 {
                let xm = x0 + (k as f64 + 0.5) * sub;
                let val = (form.eval_real(xm).abs() * inv_scale).ln();
                if val.is_finite() {
                    acc += val * sub;
                }
            }
        } else {
            acc += (form.eval_real(mid).abs() * inv_scale).ln() * h;
        }
    }
    acc
}

#[derive(Debug, Clone, Copy)]
pub struct AvgDetReport {
    /// Grid average of (1/N)·log|det B_N(x,E)|.
    pub lhs: f64,
    /// ∫ log(|g−Ef|/√(1+E²)) dx.
    pub rhs: f64,
    pub margin: f64,
    /// Grid points dropped by the pole guard or as numerically singular.
    pub skipped: usize,
}

/// Compares the determinant average against the potential's log integral.
pub fn avg_logdet_check(
    spec: &OperatorSpec,
    energy: f64,
    n: usize,
    x_grid: usize,
) -> Result<AvgDetReport, SpectralError> {
    assert!(x_grid >= 256, "x_grid must be >= 256");
    let window = IndexWindow::from_size(0, n);
    let samples: Vec<Option<f64>> = (0..x_grid)
        .into_par_iter()
        .map(|i| {
            let x = TorusPoint::new((i as f64 + 0.5) / x_grid as f64);
            match factorize(spec, x, window, energy) {
                Ok(pair) => {
                    let (logabs, sign) = logdet(&pair.bounded);
                    (sign != 0).then_some(logabs / n as f64)
                }
                Err(_) => None,
            }
        })
        .collect();
    let skipped = samples.iter().filter(|s| s.is_none()).count();
    let kept: Vec<f64> = samples.into_iter().flatten().collect();
    if kept.is_empty() {
        return Err(SpectralError::AllSingular);
    }
    let lhs = kept.iter().sum::<f64>() / kept.len() as f64;
    let rhs = normalized_log_integral(&spec.potential, energy, x_grid);
    Ok(AvgDetReport {
        lhs,
        rhs,
        margin: lhs - rhs,
        skipped,
    })
}

/// Empirical deviation statistics for the Fejér-weighted ergodic average of
/// u(x) = (1/N)·log(|det B_N(x,E)| + C̃^{−N}).
#[derive(Debug, Clone, Copy)]
pub struct DeviationReport {
    pub window: usize,
    pub weight_radius: usize,
    pub threshold: f64,
    /// Fraction of grid phases whose weighted average strays from the mean
    /// by more than the threshold.
    pub bad_fraction: f64,
    /// Grid mean of u, the û(0) proxy.
    pub mean: f64,
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Scan of the large-deviation set at radius `weight_radius` (the M of the
/// Fejér weights) over a uniform phase grid.
pub fn ldt_scan(
    spec: &OperatorSpec,
    energy: f64,
    n: usize,
    weight_radius: usize,
    x_grid: usize,
    threshold: f64,
) -> Result<DeviationReport, SpectralError> {
    assert!(weight_radius >= 1 && n >= 1 && x_grid >= 1);
    let scale = 1.0f64.hypot(energy);
    let inv_scale = 1.0 / scale;
    let eps_scaled = spec.coupling * inv_scale;
    // regularization floor C̃^{-N} with C̃ > 10·(C_{f,g}+1)
    let c_fg = (-normalized_log_integral(&spec.potential, energy, 1024)).max(0.0);
    let floor_log = -(n as f64) * (10.0 * (c_fg + 1.0) + 1.0).ln();

    let m = weight_radius as i64;
    let omega = spec.freq.omega();
    let span_lo = -(m - 1);
    let span_hi = m - 1 + n as i64 - 1;

    let per_point: Vec<(f64, f64)> = (0..x_grid)
        .into_par_iter()
        .map(|i| {
            let x = TorusPoint::new((i as f64 + 0.5) / x_grid as f64);
            let mut f_vals = Vec::with_capacity((span_hi - span_lo + 1) as usize);
            let mut g_vals = Vec::with_capacity(f_vals.capacity());
            for k in span_lo..=span_hi {
                let point = orbit_point(x, omega, k).value();
                f_vals.push(spec.potential.f().eval_real(point));
                g_vals.push(spec.potential.g().eval_real(point));
            }
            let mut data = vec![0.0f64; n * n];
            let mut u_values = Vec::with_capacity((2 * m - 1) as usize);
            for shift in -(m - 1)..=(m - 1) {
                let base = (shift - span_lo) as usize;
                for j in 0..n {
                    for r in 0..n {
                        data[j * n + r] = if r == j {
                            (g_vals[base + r] - energy * f_vals[base + r]) * inv_scale
                        } else {
                            eps_scaled
                                * f_vals[base + r]
                                * spec.kernel_coeff(r as i64 - j as i64)
                        };
                    }
                }
                let lu = lu_decompose(n, std::mem::take(&mut data));
                u_values.push(log_add_exp(lu.logabs, floor_log) / n as f64);
                data = lu.data;
            }
            let center = u_values[(m - 1) as usize];
            let avg = weighted_average(&u_values, weight_radius)
                .expect("length 2M-1 by construction");
            (center, avg)
        })
        .collect();

    let mean = per_point.iter().map(|(u0, _)| u0).sum::<f64>() / x_grid as f64;
    let bad = per_point
        .iter()
        .filter(|(_, avg)| (avg - mean).abs() > threshold)
        .count();
    Ok(DeviationReport {
        window: n,
        weight_radius,
        threshold,
        bad_fraction: bad as f64 / x_grid as f64,
        mean,
    })
}

/// Largest |m| considered by the shift search: m² < N.
pub fn shift_range(n: usize) -> i64 {
    let mut m = (n as f64).sqrt() as i64;
    while m * m >= n as i64 {
        m -= 1;
    }
    while (m + 1) * (m + 1) < n as i64 {
        m += 1;
    }
    m.max(0)
}

/// Searches shifts |m| < √N for the window with the largest |det B| and
/// returns that window's Green function. Ties prefer small |m|, then
/// positive m; pole-blocked and singular shifts are skipped.
pub fn good_shift(
    spec: &OperatorSpec,
    x: TorusPoint,
    energy: f64,
    n: usize,
) -> Result<(i64, GreenResult), SpectralError> {
    let window = IndexWindow::from_size(0, n);
    let m_max = shift_range(n);
    let omega = spec.freq.omega();
    let mut best: Option<(i64, f64)> = None;
    for m in -m_max..=m_max {
        let phase = orbit_point(x, omega, m);
        let Ok(pair) = factorize(spec, phase, window, energy) else {
            continue;
        };
        let (logabs, sign) = logdet(&pair.bounded);
        if sign == 0 {
            continue;
        }
        let better = match best {
            None => true,
            Some((bm, bld)) => {
                logabs > bld
                    || (logabs == bld
                        && (m.abs() < bm.abs() || (m.abs() == bm.abs() && m > bm)))
            }
        };
        if better {
            best = Some((m, logabs));
        }
    }
    let (m, _) = best.ok_or(SpectralError::AllSingular)?;
    let result = green(spec, orbit_point(x, omega, m), window, energy)?;
    Ok((m, result))
}
