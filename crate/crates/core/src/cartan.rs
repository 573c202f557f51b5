//! Cartan-type lower bounds for analytic and meromorphic functions on
//! disks, the exclusion-disk system, and a grid verifier that checks the
//! bound against functions with exactly known zero/pole data.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CartanError {
    #[error("radii must satisfy 0 <= r < R (got r = {r}, R = {outer})")]
    BadRadii { r: f64, outer: f64 },
    #[error("pole at modulus {modulus} below the declared floor {floor}")]
    PoleTooClose { modulus: f64, floor: f64 },
    #[error("zero or pole at modulus {modulus} outside the disk of radius {outer}")]
    OutsideDisk { modulus: f64, outer: f64 },
    #[error("log of the sup-norm bound must be >= 0 when |f(0)| = 1, got {0}")]
    NegativeLogMax(f64),
    #[error("disk radii must lie in (0,1), got {0}")]
    BadDiskRadius(f64),
    #[error("|f(0)| = {0} deviates from 1 beyond 1e-6")]
    NormalizationError(f64),
}

/// Lower bound −2r·logM/(R−r) for a zero-free analytic function with
/// |f(0)| = 1, valid on |z| = r < R.
pub fn analytic_lower_bound(log_max: f64, outer: f64, r: f64) -> Result<f64, CartanError> {
    if !(r >= 0.0 && r < outer) {
        return Err(CartanError::BadRadii { r, outer });
    }
    if log_max < 0.0 {
        return Err(CartanError::NegativeLogMax(log_max));
    }
    Ok(-2.0 * r * log_max / (outer - r))
}

/// Declared zero/pole data of a meromorphic function on {|z| ≤ R} together
/// with the geometry of the estimate.
#[derive(Debug, Clone)]
pub struct CartanInput {
    pub zeros: Vec<Complex64>,
    pub poles: Vec<Complex64>,
    /// R: radius of the data disk, ≤ 1.
    pub outer_radius: f64,
    /// R₂ < R: radius of the region where the bound is claimed.
    pub inner_radius: f64,
    /// Radius of each zero-exclusion disk.
    pub zero_disk_radius: f64,
    /// Radius of each pole-exclusion disk (around reflected pole points).
    pub pole_disk_radius: f64,
    /// δ: lower bound for pole moduli.
    pub pole_floor: f64,
    /// log M_f(R), any upper bound for the log sup-norm on |z| = R.
    pub log_max: f64,
}

impl CartanInput {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        zeros: Vec<Complex64>,
        poles: Vec<Complex64>,
        outer_radius: f64,
        inner_radius: f64,
        zero_disk_radius: f64,
        pole_disk_radius: f64,
        pole_floor: f64,
        log_max: f64,
    ) -> Result<Self, CartanError> {
        if !(inner_radius > 0.0 && inner_radius < outer_radius && outer_radius <= 1.0) {
            return Err(CartanError::BadRadii {
                r: inner_radius,
                outer: outer_radius,
            });
        }
        for &radius in &[zero_disk_radius, pole_disk_radius] {
            if !(radius > 0.0 && radius < 1.0) {
                return Err(CartanError::BadDiskRadius(radius));
            }
        }
        if log_max < 0.0 {
            return Err(CartanError::NegativeLogMax(log_max));
        }
        for a in &zeros {
            if a.norm() >= outer_radius {
                return Err(CartanError::OutsideDisk {
                    modulus: a.norm(),
                    outer: outer_radius,
                });
            }
        }
        for b in &poles {
            if b.norm() >= outer_radius {
                return Err(CartanError::OutsideDisk {
                    modulus: b.norm(),
                    outer: outer_radius,
                });
            }
            if b.norm() < pole_floor {
                return Err(CartanError::PoleTooClose {
                    modulus: b.norm(),
                    floor: pole_floor,
                });
            }
        }
        Ok(CartanInput {
            zeros,
            poles,
            outer_radius,
            inner_radius,
            zero_disk_radius,
            pole_disk_radius,
            pole_floor,
            log_max,
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Disk {
    pub center: Complex64,
    pub radius: f64,
}

impl Disk {
    fn contains(&self, z: Complex64, margin: f64) -> bool {
        (z - self.center).norm() < self.radius + margin
    }

    fn near_boundary(&self, z: Complex64, margin: f64) -> bool {
        ((z - self.center).norm() - self.radius).abs() <= margin
    }
}

/// Exclusion disks: one per zero (centered at the zero) and one per pole
/// (centered at the reflected point R²/conj(b), which lies outside |z| ≤ R).
#[derive(Debug, Clone)]
pub struct DiskSystem {
    pub zero_disks: Vec<Disk>,
    pub pole_disks: Vec<Disk>,
}

impl DiskSystem {
    pub fn excludes(&self, z: Complex64, margin: f64) -> bool {
        self.all().any(|d| d.contains(z, margin))
    }

    pub fn near_any_boundary(&self, z: Complex64, margin: f64) -> bool {
        self.all().any(|d| d.near_boundary(z, margin))
    }

    fn all(&self) -> impl Iterator<Item = &Disk> {
        self.zero_disks.iter().chain(self.pole_disks.iter())
    }

    /// n·πH² + n′·πH′², an upper bound for the excluded area.
    pub fn total_area_bound(&self) -> f64 {
        self.all()
            .map(|d| std::f64::consts::PI * d.radius * d.radius)
            .sum()
    }
}

/// The meromorphic lower bound
///   −(2R₂/(R−R₂))·logM − n·log((R+R₂)/H) − n′·[(2R/(R−R₂))·log(1/δ) + log(R(R+R₂)/H′)]
/// valid on {|z| ≤ R₂} outside the returned disks.
pub fn meromorphic_lower_bound(input: &CartanInput) -> (f64, DiskSystem) {
    let r = input.outer_radius;
    let r2 = input.inner_radius;
    let n = input.zeros.len() as f64;
    let np = input.poles.len() as f64;

    let main = -2.0 * r2 * input.log_max / (r - r2);
    let zero_term = -n * ((r + r2) / input.zero_disk_radius).ln();
    let pole_term = -np
        * (2.0 * r / (r - r2) * (1.0 / input.pole_floor).ln()
            + (r * (r + r2) / input.pole_disk_radius).ln());

    let zero_disks = input
        .zeros
        .iter()
        .map(|&a| Disk {
            center: a,
            radius: input.zero_disk_radius,
        })
        .collect();
    let pole_disks = input
        .poles
        .iter()
        .map(|&b| Disk {
            center: r * r / b.conj(),
            radius: input.pole_disk_radius,
        })
        .collect();

    (
        main + zero_term + pole_term,
        DiskSystem {
            zero_disks,
            pole_disks,
        },
    )
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyReport {
    pub bound: f64,
    /// Grid points of {|z| ≤ R₂} that were actually tested.
    pub checked: usize,
    /// Points skipped because they fall in or hug an exclusion disk.
    pub skipped: usize,
    pub violations: usize,
    /// min over checked points of log|f(z)| − bound; ≥ 0 when the bound holds.
    pub worst_margin: f64,
}

/// Points this close to a disk boundary are not classified.
const BOUNDARY_MARGIN: f64 = 1e-6;

/// Samples grid² points of {|z| ≤ R₂} and asserts log|f(z)| ≥ bound outside
/// the exclusion disks.
pub fn verify_cartan<F>(
    func: F,
    input: &CartanInput,
    grid: usize,
) -> Result<VerifyReport, CartanError>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let at_origin = func(Complex64::new(0.0, 0.0)).norm();
    if (at_origin - 1.0).abs() > 1e-6 {
        return Err(CartanError::NormalizationError(at_origin));
    }
    let (bound, disks) = meromorphic_lower_bound(input);
    let r2 = input.inner_radius;

    let rows: Vec<(usize, usize, usize, f64)> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let y = -r2 + 2.0 * r2 * i as f64 / (grid - 1).max(1) as f64;
            let mut checked = 0;
            let mut skipped = 0;
            let mut violations = 0;
            let mut worst = f64::INFINITY;
            for j in 0..grid {
                let x = -r2 + 2.0 * r2 * j as f64 / (grid - 1).max(1) as f64;
                let z = Complex64::new(x, y);
                if z.norm() > r2 {
                    continue;
                }
                if disks.excludes(z, 0.0) || disks.near_any_boundary(z, BOUNDARY_MARGIN) {
                    skipped += 1;
                    continue;
                }
                checked += 1;
                let margin = func(z).norm().ln() - bound;
                if margin < worst {
                    worst = margin;
                }
                if margin < 0.0 {
                    violations += 1;
                }
            }
            (checked, skipped, violations, worst)
        })
        .collect();

    let mut report = VerifyReport {
        bound,
        checked: 0,
        skipped: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
    };
    for (c, s, v, w) in rows {
        report.checked += c;
        report.skipped += s;
        report.violations += v;
        report.worst_margin = report.worst_margin.min(w);
    }
    Ok(report)
}

/// A quotient of Blaschke-type factors times a zero-free exponential part,
/// normalized so |f(0)| = 1 exactly. Ground-truth zero/pole data for the
/// verifier comes straight from the construction.
#[derive(Debug, Clone)]
pub struct BlaschkeQuotient {
    zeros: Vec<Complex64>,
    poles: Vec<Complex64>,
    outer_radius: f64,
    /// coefficients of p(z) = c₁z + c₂z² in exp(p); p(0) = 0.
    smooth: [Complex64; 2],
    norm: Complex64,
}

impl BlaschkeQuotient {
    pub fn new(
        zeros: Vec<Complex64>,
        poles: Vec<Complex64>,
        outer_radius: f64,
        smooth: [Complex64; 2],
    ) -> Self {
        let mut raw0 = Complex64::new(1.0, 0.0);
        for &a in &zeros {
            raw0 *= blaschke_factor(a, outer_radius, Complex64::new(0.0, 0.0));
        }
        for &b in &poles {
            raw0 /= blaschke_factor(b, outer_radius, Complex64::new(0.0, 0.0));
        }
        BlaschkeQuotient {
            zeros,
            poles,
            outer_radius,
            smooth,
            norm: raw0,
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut value = (self.smooth[0] * z + self.smooth[1] * z * z).exp();
        for &a in &self.zeros {
            value *= blaschke_factor(a, self.outer_radius, z);
        }
        for &b in &self.poles {
            value /= blaschke_factor(b, self.outer_radius, z);
        }
        value / self.norm
    }

    /// Closed-form upper bound for log max |f| on |z| = R: the Blaschke
    /// factors have unit modulus there, so only exp(p) and the
    /// normalization contribute.
    pub fn log_max_bound(&self) -> f64 {
        let r = self.outer_radius;
        let smooth_max = self.smooth[0].norm() * r + self.smooth[1].norm() * r * r;
        (smooth_max - self.norm.norm().ln()).max(0.0)
    }
}

/// R(z−c)/(R² − conj(c)·z): vanishes at c, has unit modulus on |z| = R.
fn blaschke_factor(c: Complex64, outer_radius: f64, z: Complex64) -> Complex64 {
    outer_radius * (z - c) / (outer_radius * outer_radius - c.conj() * z)
}

/// Geometry shared by randomized verification trials.
#[derive(Debug, Clone, Copy)]
pub struct TrialConfig {
    pub max_zeros: usize,
    pub max_poles: usize,
    pub outer_radius: f64,
    pub inner_radius: f64,
    pub zero_disk_radius: f64,
    pub pole_disk_radius: f64,
    pub pole_floor: f64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            max_zeros: 3,
            max_poles: 3,
            outer_radius: 1.0,
            inner_radius: 0.5,
            zero_disk_radius: 0.05,
            pole_disk_radius: 0.05,
            pole_floor: 0.3,
        }
    }
}

/// Draw a random Blaschke-quotient sample with its matching declared data.
pub fn sample_trial<R: Rng>(rng: &mut R, config: &TrialConfig) -> (BlaschkeQuotient, CartanInput) {
    let r = config.outer_radius;
    let n_zeros = rng.random_range(0..=config.max_zeros);
    let n_poles = rng.random_range(0..=config.max_poles);
    let draw = |rng: &mut R, lo: f64| -> Complex64 {
        let modulus = rng.random_range(lo..0.95 * r);
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        Complex64::from_polar(modulus, angle)
    };
    let zeros: Vec<Complex64> = (0..n_zeros).map(|_| draw(rng, 0.05)).collect();
    let poles: Vec<Complex64> = (0..n_poles)
        .map(|_| draw(rng, config.pole_floor.max(0.05)))
        .collect();
    let smooth = [
        Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)),
        Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)),
    ];
    let quotient = BlaschkeQuotient::new(zeros.clone(), poles.clone(), r, smooth);
    let input = CartanInput::new(
        zeros,
        poles,
        r,
        config.inner_radius,
        config.zero_disk_radius,
        config.pole_disk_radius,
        config.pole_floor,
        quotient.log_max_bound(),
    )
    .expect("trial geometry is valid by construction");
    (quotient, input)
}
