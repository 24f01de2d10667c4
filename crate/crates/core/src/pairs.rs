//! Pair-distance and pair-angle distributions.
//!
//! Delta constraints are removed by a change of variables rather than by
//! binning. For the distance, `(r, r')` becomes centre of mass `R` and
//! relative vector `ρ = d (cos φ, sin φ)`:
//!
//! ```text
//! D(d) = d / <:N²:> ∫ dφ ∫ d²R rho2(R + ρ/2, R - ρ/2)
//! ```
//!
//! The `R` integral uses Gauss-Hermite nodes for the weight `e^{-2R²}` and
//! the `φ` integral a periodic trapezoid. For angles, the radial integrals
//! collapse into 2×2 moment matrices per polar angle.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{angular_factor, DensityEngine, FormVariant};
use crate::error::{Error, Result};
use crate::fock::QuantumState;
use crate::kind::StateKind;
use crate::modes::Point2D;
use crate::par::{self, IntoParallelIterator, ParallelIterator};
use crate::quadrature::{simpson, Rule};
use crate::rng::{derived_seed, stream_rng, CHUNK};
use crate::sampler::{RadialSampler, TableSampler};

/// Upper end of tabulated distances.
pub const DISTANCE_MAX: f64 = 8.0;
/// Upper end of tabulated radii.
pub const RADIUS_MAX: f64 = 6.0;
pub const DEFAULT_DISTANCE_POINTS: usize = 801;
pub const DEFAULT_ANGLE_POINTS: usize = 361;
pub const DEFAULT_TWO_ANGLE_POINTS: usize = 64;

const HERMITE_ORDER: usize = 10;
const RELATIVE_ANGLES: usize = 16;
const POLAR_ANGLES: usize = 32;
const RADIAL_ORDER: usize = 48;
const RADIAL_CUTOFF: f64 = 7.0;
const PAIR_FLOOR: f64 = 1e-14;
const ANISOTROPY_TOLERANCE: f64 = 1e-8;

/// Fixed quadrature orders behind the pair distributions.
pub const QUADRATURE_ORDERS: [(&str, usize); 4] = [
    ("distance-hermite", HERMITE_ORDER),
    ("distance-relative-angles", RELATIVE_ANGLES),
    ("angle-radial-legendre", RADIAL_ORDER),
    ("angle-polar", POLAR_ANGLES),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variable {
    /// Pair distance `d` on `[0, 8]`.
    Distance,
    /// Relative polar angle folded to `[0, π]`.
    RelAngle,
    /// Joint polar angles `(θ, ϑ)` on `[0, 2π)²`.
    TwoAngle,
    /// Radius of a single particle on `[0, 6]`.
    Radius,
}

impl Variable {
    pub fn domain(self) -> (f64, f64) {
        match self {
            Variable::Distance => (0.0, DISTANCE_MAX),
            Variable::RelAngle => (0.0, PI),
            Variable::TwoAngle => (0.0, TAU),
            Variable::Radius => (0.0, RADIUS_MAX),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variable::Distance => "distance",
            Variable::RelAngle => "relative_angle",
            Variable::TwoAngle => "theta",
            Variable::Radius => "radius",
        }
    }
}

pub type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A normalized density over one pair variable, tabulated on a uniform grid
/// and, where available, backed by an exact pointwise evaluator.
#[derive(Clone)]
pub struct PairDistribution {
    pub variable: Variable,
    /// Abscissae; for `TwoAngle` the shared per-axis grid.
    pub grid: Vec<f64>,
    /// Densities; for `TwoAngle` row-major with `θ` as the row.
    pub values: Vec<f64>,
    /// `<:N²:>` of the generating state, or 1 for analytic laws.
    pub normalization: f64,
    pub flags: Vec<String>,
    evaluator: Option<Evaluator>,
}

impl fmt::Debug for PairDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PairDistribution")
            .field("variable", &self.variable)
            .field("points", &self.grid.len())
            .field("normalization", &self.normalization)
            .field("flags", &self.flags)
            .field("evaluator", &self.evaluator.is_some())
            .finish()
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

impl PairDistribution {
    /// Tabulates `f` on `n_points` uniform points of the variable's domain.
    pub fn from_evaluator(variable: Variable, n_points: usize, normalization: f64, f: Evaluator) -> Self {
        let (lo, hi) = variable.domain();
        let grid = linspace(lo, hi, n_points);
        let values = par::map_range(grid.len(), |i| f(grid[i]));
        PairDistribution {
            variable,
            grid,
            values,
            normalization,
            flags: Vec::new(),
            evaluator: Some(f),
        }
    }

    /// A purely tabulated distribution.
    pub fn from_table(variable: Variable, grid: Vec<f64>, values: Vec<f64>, normalization: f64) -> Self {
        PairDistribution {
            variable,
            grid,
            values,
            normalization,
            flags: Vec::new(),
            evaluator: None,
        }
    }

    pub fn with_flag(mut self, flag: impl Into<String>) -> Self {
        self.flags.push(flag.into());
        self
    }

    pub fn has_evaluator(&self) -> bool {
        self.evaluator.is_some()
    }

    pub fn evaluator(&self) -> Option<Evaluator> {
        self.evaluator.clone()
    }

    /// Density at `x`: exact when an evaluator exists, otherwise linear
    /// interpolation of the table. Zero outside the domain.
    pub fn value_at(&self, x: f64) -> f64 {
        if let Some(f) = &self.evaluator {
            return f(x);
        }
        interpolate(&self.grid, &self.values, x)
    }

    /// Joint density at `(θ, ϑ)` by periodic bilinear interpolation.
    pub fn value_at2(&self, theta: f64, vartheta: f64) -> f64 {
        let n = self.grid.len();
        let h = TAU / n as f64;
        let pos = |a: f64| {
            let t = a.rem_euclid(TAU) / h;
            let i = t.floor() as usize % n;
            (i, (i + 1) % n, t - t.floor())
        };
        let (i0, i1, fi) = pos(theta);
        let (j0, j1, fj) = pos(vartheta);
        let v = |i: usize, j: usize| self.values[i * n + j];
        (1.0 - fi) * ((1.0 - fj) * v(i0, j0) + fj * v(i0, j1)) + fi * ((1.0 - fj) * v(i1, j0) + fj * v(i1, j1))
    }

    /// Total probability.
    pub fn integral(&self) -> f64 {
        match self.variable {
            Variable::TwoAngle => {
                let h = TAU / self.grid.len() as f64;
                self.values.iter().sum::<f64>() * h * h
            }
            _ => self.moment(0),
        }
    }

    /// `∫ x^k p(x) dx`, by composite Gauss-Legendre with the evaluator or
    /// by Simpson on the table.
    pub fn moment(&self, k: i32) -> f64 {
        let (lo, hi) = self.variable.domain();
        match &self.evaluator {
            Some(f) => composite_legendre(lo, hi, 16, 16, |x| x.powi(k) * f(x)),
            None => {
                let h = self.grid[1] - self.grid[0];
                let v: Vec<f64> = self.grid.iter().zip(&self.values).map(|(x, p)| x.powi(k) * p).collect();
                simpson(&v, h)
            }
        }
    }

    /// Largest deviation from `f` over the table.
    pub fn sup_diff<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.grid
            .iter()
            .zip(&self.values)
            .map(|(x, v)| (v - f(*x)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest deviation from another table on the same grid.
    pub fn sup_diff_table(&self, other: &PairDistribution) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with columns `variable,density` (or `theta,vartheta,density`).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        match self.variable {
            Variable::TwoAngle => {
                writeln!(w, "theta,vartheta,density")?;
                let n = self.grid.len();
                for i in 0..n {
                    for j in 0..n {
                        writeln!(
                            w,
                            "{:.16e},{:.16e},{:.16e}",
                            self.grid[i],
                            self.grid[j],
                            self.values[i * n + j]
                        )?;
                    }
                }
            }
            v => {
                writeln!(w, "{},density", v.name())?;
                for (x, p) in self.grid.iter().zip(&self.values) {
                    writeln!(w, "{x:.16e},{p:.16e}")?;
                }
            }
        }
        Ok(())
    }
}

fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    let n = grid.len();
    if n == 0 || x < grid[0] || x > grid[n - 1] {
        return 0.0;
    }
    let h = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    let t = (x - grid[0]) / h;
    let i = (t.floor() as usize).min(n - 2);
    let f = t - i as f64;
    (1.0 - f) * values[i] + f * values[i + 1]
}

pub(crate) fn composite_legendre<F: Fn(f64) -> f64 + Sync + Send>(
    lo: f64,
    hi: f64,
    panels: usize,
    order: usize,
    f: F,
) -> f64 {
    let w = (hi - lo) / panels as f64;
    let base = Rule::legendre(order, 0.0, w);
    par::map_range(panels, |k| {
        let a = lo + k as f64 * w;
        base.iter().map(|(x, wt)| wt * f(a + x)).sum::<f64>()
    })
    .into_iter()
    .sum()
}

fn pair_number_checked(engine: &DensityEngine) -> Result<f64> {
    let n2 = engine.pair_number();
    if n2 <= PAIR_FLOOR {
        return Err(Error::NoPairs(n2));
    }
    Ok(n2)
}

struct DistanceKernel {
    engine: DensityEngine,
    centres: Vec<(Point2D, f64)>,
    directions: Vec<(f64, f64)>,
    scale: f64,
}

impl DistanceKernel {
    fn new(engine: DensityEngine) -> Result<Self> {
        let n2 = pair_number_checked(&engine)?;
        let gh = Rule::hermite(HERMITE_ORDER);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut centres = Vec::with_capacity(gh.len() * gh.len());
        for (x, wx) in gh.iter() {
            for (y, wy) in gh.iter() {
                // d²R = dx dy / 2 with the Hermite weight divided out
                centres.push((Point2D::new(s * x, s * y), 0.5 * wx * wy * (x * x + y * y).exp()));
            }
        }
        let directions = (0..RELATIVE_ANGLES)
            .map(|k| (TAU * k as f64 / RELATIVE_ANGLES as f64).sin_cos())
            .map(|(s, c)| (c, s))
            .collect();
        Ok(DistanceKernel {
            engine,
            centres,
            directions,
            scale: TAU / RELATIVE_ANGLES as f64 / n2,
        })
    }

    fn eval(&self, d: f64) -> f64 {
        if d <= 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for &(c, s) in &self.directions {
            let (hx, hy) = (0.5 * d * c, 0.5 * d * s);
            for &(r, w) in &self.centres {
                let u = self.engine.mode_values(Point2D::new(r.x + hx, r.y + hy));
                let v = self.engine.mode_values(Point2D::new(r.x - hx, r.y - hy));
                acc += w * self.engine.rho2_values(u, v).re;
            }
        }
        d * acc * self.scale
    }
}

/// `D(d)` of a state, tabulated on `[0, 8]`.
pub fn distance_distribution(state: &QuantumState, n_points: usize) -> Result<PairDistribution> {
    distance_distribution_from(DensityEngine::new(state), n_points)
}

pub fn distance_distribution_from(engine: DensityEngine, n_points: usize) -> Result<PairDistribution> {
    let n2 = engine.pair_number();
    let kernel = Arc::new(DistanceKernel::new(engine)?);
    let f: Evaluator = Arc::new(move |d| kernel.eval(d));
    Ok(PairDistribution::from_evaluator(Variable::Distance, n_points, n2, f))
}

// Radial moment matrices M_ab(θ) = ∫ r dr r² ... = Σ_r w r conj(u_a) u_b at
// polar angle θ, with u the basis mode values.
struct AngleKernel {
    engine: DensityEngine,
    radial: Vec<(f64, f64)>,
    n2: f64,
}

impl AngleKernel {
    fn new(engine: DensityEngine) -> Result<Self> {
        let n2 = pair_number_checked(&engine)?;
        let radial = Rule::legendre(RADIAL_ORDER, 0.0, RADIAL_CUTOFF).iter().collect();
        Ok(AngleKernel { engine, radial, n2 })
    }

    fn moments(&self, theta: f64) -> [[Complex64; 2]; 2] {
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for &(r, w) in &self.radial {
            let u = self.engine.mode_values(Point2D::from_polar(r, theta));
            for a in 0..2 {
                for b in 0..2 {
                    m[a][b] += u[a].conj() * u[b] * (w * r);
                }
            }
        }
        m
    }

    // (1/N2) ∫∫ r s rho2(r e_θ, s e_ϑ) dr ds
    fn joint(&self, m1: &[[Complex64; 2]; 2], m2: &[[Complex64; 2]; 2]) -> f64 {
        let c = &self.engine.correlators().second;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..2 {
            for pp in 0..2 {
                for q in 0..2 {
                    for qq in 0..2 {
                        acc += c[p][pp][qq][q] * m1[p][q] * m2[pp][qq];
                    }
                }
            }
        }
        acc.re / self.n2
    }

    // density of Δ = ϑ - θ on [0, 2π)
    fn relative(&self, delta: f64) -> f64 {
        let h = TAU / POLAR_ANGLES as f64;
        (0..POLAR_ANGLES)
            .map(|k| {
                let t = k as f64 * h;
                self.joint(&self.moments(t), &self.moments(t + delta))
            })
            .sum::<f64>()
            * h
    }
}

/// Density of the relative polar angle folded to `[0, π]`.
///
/// Requires a rotation-invariant state; otherwise the relative angle does
/// not capture the correlations and the joint law must be used.
pub fn angle_distribution(state: &QuantumState, n_points: usize) -> Result<PairDistribution> {
    angle_distribution_from(DensityEngine::new(state), n_points)
}

pub fn angle_distribution_from(engine: DensityEngine, n_points: usize) -> Result<PairDistribution> {
    let deviation = engine.rotation_deviation();
    if deviation > ANISOTROPY_TOLERANCE {
        return Err(Error::AnisotropicState { deviation });
    }
    let n2 = engine.pair_number();
    let kernel = Arc::new(AngleKernel::new(engine)?);
    let f: Evaluator = Arc::new(move |d| {
        if !(0.0..=PI).contains(&d) {
            return 0.0;
        }
        kernel.relative(d) + kernel.relative(TAU - d)
    });
    Ok(PairDistribution::from_evaluator(Variable::RelAngle, n_points, n2, f))
}

/// Joint density of the two polar angles on an `n × n` periodic grid.
pub fn two_angle_distribution(state: &QuantumState, n_points: usize) -> Result<PairDistribution> {
    two_angle_distribution_from(DensityEngine::new(state), n_points)
}

pub fn two_angle_distribution_from(engine: DensityEngine, n_points: usize) -> Result<PairDistribution> {
    let n2 = engine.pair_number();
    let kernel = AngleKernel::new(engine)?;
    let n = n_points.max(4);
    let grid: Vec<f64> = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
    let moments: Vec<_> = grid.iter().map(|t| kernel.moments(*t)).collect();
    let values = par::map_range(n * n, |k| kernel.joint(&moments[k / n], &moments[k % n]));
    Ok(PairDistribution::from_table(Variable::TwoAngle, grid, values, n2))
}

/// Mean, second moment and local maxima of a one-dimensional distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistSummary {
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    pub local_maxima: Vec<f64>,
}

const SCAN_STEP: f64 = 1e-3;

/// Moments by quadrature and maxima by a `1e-3` scan refined by bisection
/// on the derivative.
pub fn summarize(dist: &PairDistribution) -> Result<DistSummary> {
    if dist.variable == Variable::TwoAngle {
        return Err(Error::Unsupported("summaries of the joint angle law".into()));
    }
    let norm = dist.moment(0);
    let mean = dist.moment(1) / norm;
    let second_moment = dist.moment(2) / norm;
    Ok(DistSummary {
        mean,
        second_moment,
        variance: second_moment - mean * mean,
        local_maxima: local_maxima(dist),
    })
}

fn local_maxima(dist: &PairDistribution) -> Vec<f64> {
    let (lo, hi) = dist.variable.domain();
    let n = ((hi - lo) / SCAN_STEP).round() as usize + 1;
    let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let vals = par::map_range(n, |i| dist.value_at(xs[i]));
    let peak = vals.iter().cloned().fold(0.0, f64::max);
    // rounding ripple on flat laws and in vanishing tails is not a maximum
    let eps = 1e-12 * peak;
    let mut out = Vec::new();
    for i in 1..n - 1 {
        if vals[i] > vals[i - 1] + eps && vals[i] + eps >= vals[i + 1] && vals[i] > 1e-9 * peak {
            out.push(refine_maximum(dist, xs[i - 1], xs[i + 1]));
        }
    }
    out
}

fn refine_maximum(dist: &PairDistribution, mut a: f64, mut b: f64) -> f64 {
    let h = 1e-5;
    let slope = |x: f64| dist.value_at(x + h) - dist.value_at(x - h);
    if !dist.has_evaluator() {
        return 0.5 * (a + b);
    }
    let mut sa = slope(a);
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        let sm = slope(m);
        if (sm > 0.0) == (sa > 0.0) {
            a = m;
            sa = sm;
        } else {
            b = m;
        }
        if b - a < 1e-12 {
            break;
        }
    }
    0.5 * (a + b)
}

/// The three distance laws of isotropic ring states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceLaw {
    /// `½ d³ e^{-d²/2}`, relative angle `∝ sin²`.
    Fermi,
    /// Corrected: `(d/8)(8 - 4d² + d⁴) e^{-d²/2}`, relative angle `∝ cos²`.
    /// Printed: the same without the leading `d`.
    Bose(FormVariant),
    /// `(d/16)(8 + d⁴) e^{-d²/2}`, uniform relative angle.
    Coherent,
}

impl DistanceLaw {
    pub fn eval(self, d: f64) -> f64 {
        if d < 0.0 {
            return 0.0;
        }
        let g = (-0.5 * d * d).exp();
        let d2 = d * d;
        match self {
            DistanceLaw::Fermi => 0.5 * d * d2 * g,
            DistanceLaw::Bose(FormVariant::Corrected) => d / 8.0 * (8.0 - 4.0 * d2 + d2 * d2) * g,
            DistanceLaw::Bose(FormVariant::Printed) => (8.0 - 4.0 * d2 + d2 * d2) / 8.0 * g,
            DistanceLaw::Coherent => d / 16.0 * (8.0 + d2 * d2) * g,
        }
    }
}

/// `2 E[cos 2Δ]` of the relative angle implied by the angular factor:
/// -1 for the antibunched Fermi law, +1 for the Bose pair, 0 when uniform.
pub fn exchange_weight(kind: &StateKind) -> Result<f64> {
    let n = 16;
    let h = TAU / n as f64;
    let (mut total, mut c2) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let (t, v) = (i as f64 * h, j as f64 * h);
            let a = angular_factor(kind, t, v);
            total += a;
            c2 += a * (2.0 * (t - v)).cos();
        }
    }
    if total <= PAIR_FLOOR {
        return Err(Error::NoPairs(total * h * h / (2.0 * PI * PI)));
    }
    Ok(2.0 * c2 / total)
}

/// Closed-form `D(d)` with the corrected Bose law.
pub fn closed_form_distance(kind: &StateKind, d: f64) -> Result<f64> {
    closed_form_distance_variant(kind, d, FormVariant::Corrected)
}

/// Closed-form `D(d)`. Every ring state's relative-angle law is a mix of
/// the `sin²` and `cos²` laws, so `D` is the matching mix of the Fermi and
/// Bose distance laws.
pub fn closed_form_distance_variant(kind: &StateKind, d: f64, variant: FormVariant) -> Result<f64> {
    let k = exchange_weight(kind)?;
    Ok(0.5 * (1.0 + k) * DistanceLaw::Bose(variant).eval(d) + 0.5 * (1.0 - k) * DistanceLaw::Fermi.eval(d))
}

/// Tabulated closed-form distance law for `kind`.
pub fn closed_form_distribution(kind: &StateKind, n_points: usize, variant: FormVariant) -> Result<PairDistribution> {
    let k = exchange_weight(kind)?;
    let f: Evaluator = Arc::new(move |d| {
        0.5 * (1.0 + k) * DistanceLaw::Bose(variant).eval(d) + 0.5 * (1.0 - k) * DistanceLaw::Fermi.eval(d)
    });
    let corrected = variant == FormVariant::Corrected;
    Ok(PairDistribution::from_evaluator(Variable::Distance, n_points, 1.0, f)
        .with_flag(format!("bose-form-corrected={corrected}")))
}

/// `p(r) = 2 r³ e^{-r²}`, the radial law of a particle in the ring modes.
pub fn ring_radial_density(r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else {
        2.0 * r.powi(3) * (-r * r).exp()
    }
}

/// `1 - (1 + r²) e^{-r²}`.
pub fn ring_radial_cdf(r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else {
        let r2 = r * r;
        -((-r2).exp_m1()) - r2 * (-r2).exp()
    }
}

/// Radial marginal `(r / <N>) ∫ rho1(r, θ) dθ` of a state.
pub fn radial_marginal(state: &QuantumState, n_points: usize) -> Result<PairDistribution> {
    let engine = DensityEngine::new(state);
    let n = engine.mean_number();
    if n <= PAIR_FLOOR {
        return Err(Error::NoPairs(n));
    }
    let angles = Rule::periodic(POLAR_ANGLES);
    let f: Evaluator = Arc::new(move |r| {
        if r <= 0.0 {
            return 0.0;
        }
        r * angles.integrate(|t| engine.rho1_values(engine.mode_values(Point2D::from_polar(r, t))).re) / n
    });
    Ok(PairDistribution::from_evaluator(Variable::Radius, n_points, n, f))
}

/// Radial law for the law-of-cosines composer.
#[derive(Debug, Clone)]
pub enum RadialLaw {
    /// `2 r³ e^{-r²}` sampled by exact inverse CDF.
    Ring,
    /// A tabulated radial density.
    Tabulated(PairDistribution),
}

/// Distances `√(R₁² + R₂² - 2 R₁ R₂ cos Θ)` with independent radii and the
/// relative angle drawn from `angular`.
///
/// Samples are produced in fixed chunks with one random stream each, so the
/// output depends only on `(n, seed)`.
pub fn compose_distance_samples(
    radial: &RadialLaw,
    angular: &PairDistribution,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if angular.variable != Variable::RelAngle {
        return Err(Error::Unsupported(
            "angular law must be a relative-angle distribution".into(),
        ));
    }
    let radius = match radial {
        RadialLaw::Ring => RadialSampler::ring(),
        RadialLaw::Tabulated(d) => RadialSampler::Table(TableSampler::new(&d.grid, &d.values)?),
    };
    let angle = TableSampler::new(&angular.grid, &angular.values)?;
    let seed = derived_seed(seed, "compose");
    let chunks = n.div_ceil(CHUNK);
    let out: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            use rand::Rng;
            let mut rng = stream_rng(seed, c as u64);
            let len = CHUNK.min(n - c * CHUNK);
            (0..len)
                .map(|_| {
                    let r1 = radius.sample(rng.random());
                    let r2 = radius.sample(rng.random());
                    let t = angle.sample(rng.random());
                    (r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * t.cos()).max(0.0).sqrt()
                })
                .collect()
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean_and_standard_error;

    fn kind_dist(kind: StateKind, n: usize) -> PairDistribution {
        distance_distribution(&kind.build().unwrap(), n).unwrap()
    }

    #[test]
    fn fermi_distance_law() {
        let d = kind_dist(StateKind::FermiFock, 161);
        assert!(d.sup_diff(|x| DistanceLaw::Fermi.eval(x)) < 1e-10);
        assert!((d.value_at(2.0) - 4.0 * (-2.0f64).exp()).abs() < 1e-12);
        assert!((d.value_at(2.0) - 0.5413).abs() < 1e-4);
        assert!((d.integral() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn closed_forms_normalized() {
        for law in [
            DistanceLaw::Fermi,
            DistanceLaw::Bose(FormVariant::Corrected),
            DistanceLaw::Coherent,
        ] {
            let s = composite_legendre(0.0, 12.0, 8, 24, |d| law.eval(d));
            assert!((s - 1.0).abs() < 1e-12, "{law:?}");
            let m2 = composite_legendre(0.0, 12.0, 8, 24, |d| d * d * law.eval(d));
            assert!((m2 - 4.0).abs() < 1e-12);
        }
        let printed = composite_legendre(0.0, 12.0, 8, 24, |d| DistanceLaw::Bose(FormVariant::Printed).eval(d));
        assert!((printed - 7.0 / 8.0 * (PI / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        let fermi =
            PairDistribution::from_evaluator(Variable::Distance, 101, 1.0, Arc::new(|d| DistanceLaw::Fermi.eval(d)));
        let s = summarize(&fermi).unwrap();
        assert_eq!(s.local_maxima.len(), 1);
        assert!((s.local_maxima[0] - 3f64.sqrt()).abs() < 1e-6);
        assert!((s.mean - (9.0 * PI / 8.0).sqrt()).abs() < 1e-9);
        assert!((s.second_moment - 4.0).abs() < 1e-8);

        let bose = closed_form_distribution(&StateKind::BoseFock { n: 1, m: 1 }, 101, FormVariant::Corrected).unwrap();
        let s = summarize(&bose).unwrap();
        assert!((s.mean - (121.0 * PI / 128.0).sqrt()).abs() < 1e-9);
        assert_eq!(s.local_maxima.len(), 2);
        for m in &s.local_maxima {
            let p = 8.0 - 20.0 * m * m + 9.0 * m.powi(4) - m.powi(6);
            assert!(p.abs() < 1e-8);
        }
        assert!((s.local_maxima[0] - 0.715).abs() < 1e-3);
        assert!((s.local_maxima[1] - 2.404).abs() < 1e-3);

        let coh = closed_form_distribution(&StateKind::unit_coherent(), 101, FormVariant::Corrected).unwrap();
        let s = summarize(&coh).unwrap();
        assert!((s.mean - 23.0 / 16.0 * (PI / 2.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn crossings() {
        for d2 in [4.0 - 2.0 * 2f64.sqrt(), 4.0 + 2.0 * 2f64.sqrt()] {
            let d = d2.sqrt();
            let f = DistanceLaw::Fermi.eval(d);
            let b = DistanceLaw::Bose(FormVariant::Corrected).eval(d);
            let c = DistanceLaw::Coherent.eval(d);
            assert!((f - b).abs() < 1e-12 && (f - c).abs() < 1e-12);
        }
    }

    #[test]
    fn exchange_weights() {
        assert!((exchange_weight(&StateKind::FermiFock).unwrap() + 1.0).abs() < 1e-14);
        assert!((exchange_weight(&StateKind::BoseFock { n: 1, m: 1 }).unwrap() - 1.0).abs() < 1e-14);
        assert!(exchange_weight(&StateKind::unit_coherent()).unwrap().abs() < 1e-14);
        assert!(exchange_weight(&StateKind::Noon).unwrap().abs() < 1e-14);
        assert!(matches!(
            exchange_weight(&StateKind::BoseFock { n: 1, m: 0 }),
            Err(Error::NoPairs(_))
        ));
    }

    #[test]
    fn engine_matches_closed_form_for_all_shipped() {
        for k in StateKind::shipped() {
            let d = kind_dist(k, 81);
            let dev = d.sup_diff(|x| closed_form_distance(&k, x).unwrap());
            assert!(dev < 1e-9, "{k}: {dev}");
        }
    }

    #[test]
    fn angle_laws() {
        let f = angle_distribution(&StateKind::FermiFock.build().unwrap(), 91).unwrap();
        assert!(f.sup_diff(|t| 2.0 / PI * t.sin().powi(2)) < 1e-10);
        assert!((f.integral() - 1.0).abs() < 1e-10);
        let b = angle_distribution(&StateKind::BoseFock { n: 1, m: 1 }.build().unwrap(), 91).unwrap();
        assert!(b.sup_diff(|t| 2.0 / PI * t.cos().powi(2)) < 1e-10);
        let c = angle_distribution(&StateKind::unit_coherent().build().unwrap(), 91).unwrap();
        assert!(c.sup_diff(|_| 1.0 / PI) < 1e-10);
        assert!(matches!(
            angle_distribution(&StateKind::Noon.build().unwrap(), 11),
            Err(Error::AnisotropicState { .. })
        ));
    }

    #[test]
    fn two_angle_laws() {
        let noon = two_angle_distribution(&StateKind::Noon.build().unwrap(), 32).unwrap();
        assert!((noon.integral() - 1.0).abs() < 1e-10);
        let n = noon.grid.len();
        for i in 0..n {
            for j in 0..n {
                let expected = (noon.grid[i] + noon.grid[j]).sin().powi(2) / (2.0 * PI * PI);
                assert!((noon.values[i * n + j] - expected).abs() < 1e-10);
            }
        }
        let coh = two_angle_distribution(&StateKind::unit_coherent().build().unwrap(), 16).unwrap();
        assert!(coh.values.iter().all(|v| (v - 1.0 / (4.0 * PI * PI)).abs() < 1e-10));
    }

    #[test]
    fn no_pairs() {
        let s = StateKind::BoseFock { n: 1, m: 0 }.build().unwrap();
        assert!(matches!(distance_distribution(&s, 11), Err(Error::NoPairs(_))));
    }

    #[test]
    fn radial_marginal_is_ring_law() {
        for k in [StateKind::FermiFock, StateKind::Noon] {
            let r = radial_marginal(&k.build().unwrap(), 61).unwrap();
            assert!(r.sup_diff(ring_radial_density) < 1e-12);
        }
        assert!((ring_radial_cdf(6.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn compose_examples() {
        let fermi = angle_distribution(&StateKind::FermiFock.build().unwrap(), 1001).unwrap();
        assert!(compose_distance_samples(&RadialLaw::Ring, &fermi, 0, 1)
            .unwrap()
            .is_empty());
        let s = compose_distance_samples(&RadialLaw::Ring, &fermi, 200_000, 5).unwrap();
        let (m, se) = mean_and_standard_error(&s);
        assert!((m - (9.0 * PI / 8.0).sqrt()).abs() < 3.0 * se + 1e-4);
        let again = compose_distance_samples(&RadialLaw::Ring, &fermi, 200_000, 5).unwrap();
        assert_eq!(s, again);
    }
}
