//! Reduced one- and two-particle densities.
//!
//! The engine contracts the correlator tensors of a [`QuantumState`] with the
//! mode functions of its basis. The `*_closed` functions evaluate the
//! textbook closed forms directly from mode values and serve as an
//! independent check.

use std::f64::consts::{E, PI};
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{Basis, CorrelatorSet, QuantumState, Statistics};
use crate::kind::StateKind;
use crate::modes::{ring_dipoles, ModeLabel, Point2D};
use crate::par;
use crate::quadrature::{Rule, DOMAIN_HALF_WIDTH};

/// Spacing of cached density grids.
pub const GRID_SPACING: f64 = 0.05;
/// Points per axis of cached density grids, spanning `[-6, 6]`.
pub const GRID_POINTS: usize = 241;

const IMAG_TOLERANCE: f64 = 1e-12;

/// Evaluates `rho1` and `rho2` of one state.
#[derive(Debug, Clone)]
pub struct DensityEngine {
    basis: Basis,
    statistics: Statistics,
    correlators: CorrelatorSet,
    // form[2p+p'][2q+q'] = <a†_p a†_p' a_q' a_q>
    form: [[Complex64; 4]; 4],
}

impl DensityEngine {
    pub fn new(state: &QuantumState) -> Self {
        Self::from_correlators(state.basis(), state.correlators())
    }

    pub fn from_correlators(basis: Basis, correlators: CorrelatorSet) -> Self {
        let mut form = [[Complex64::new(0.0, 0.0); 4]; 4];
        for p in 0..2 {
            for pp in 0..2 {
                for q in 0..2 {
                    for qq in 0..2 {
                        form[2 * p + pp][2 * q + qq] = correlators.second[p][pp][qq][q];
                    }
                }
            }
        }
        DensityEngine {
            basis,
            statistics: correlators.statistics,
            correlators,
            form,
        }
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn correlators(&self) -> &CorrelatorSet {
        &self.correlators
    }

    pub fn mean_number(&self) -> f64 {
        self.correlators.mean_number()
    }

    pub fn pair_number(&self) -> f64 {
        self.correlators.pair_number()
    }

    /// Values of the two basis modes at `p`.
    pub fn mode_values(&self, p: Point2D) -> [Complex64; 2] {
        let (x, y) = ring_dipoles(p);
        match self.basis {
            Basis::Dipole => [Complex64::new(x, 0.0), Complex64::new(y, 0.0)],
            Basis::Vortex => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                [Complex64::new(h * x, h * y), Complex64::new(h * x, -h * y)]
            }
        }
    }

    pub fn rho1_values(&self, u: [Complex64; 2]) -> Complex64 {
        let f = &self.correlators.first;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in 0..2 {
            for q in 0..2 {
                acc += f[p][q] * u[p].conj() * u[q];
            }
        }
        acc
    }

    /// `rho2` from mode values `u` at the first point and `v` at the second.
    pub fn rho2_values(&self, u: [Complex64; 2], v: [Complex64; 2]) -> Complex64 {
        let w = [u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1]];
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..4 {
            let mut row = Complex64::new(0.0, 0.0);
            for (f, x) in self.form[a].iter().zip(&w) {
                row += f * x;
            }
            acc += w[a].conj() * row;
        }
        acc
    }

    pub fn rho1(&self, p: Point2D) -> Result<f64> {
        real_part(self.rho1_values(self.mode_values(p)))
    }

    pub fn rho2(&self, p: Point2D, q: Point2D) -> Result<f64> {
        real_part(self.rho2_values(self.mode_values(p), self.mode_values(q)))
    }

    /// Largest relative change of `rho2` under joint rotations of a fixed set
    /// of point pairs.
    pub fn rotation_deviation(&self) -> f64 {
        let pairs: Vec<(Point2D, Point2D)> = (0..12)
            .map(|k| {
                let k = k as f64;
                (
                    Point2D::from_polar(0.4 + 0.15 * k, 0.37 * k),
                    Point2D::from_polar(1.9 - 0.1 * k, 1.1 + 0.83 * k),
                )
            })
            .collect();
        let mut scale = 0.0f64;
        let mut worst = 0.0f64;
        for (p, q) in &pairs {
            let base = self.rho2_values(self.mode_values(*p), self.mode_values(*q)).re;
            scale = scale.max(base.abs());
            for j in 1..8 {
                let a = 0.77 * j as f64;
                let rot = self
                    .rho2_values(self.mode_values(p.rotate(a)), self.mode_values(q.rotate(a)))
                    .re;
                worst = worst.max((rot - base).abs());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }
}

fn real_part(z: Complex64) -> Result<f64> {
    if z.im.abs() > IMAG_TOLERANCE * z.re.abs().max(1.0) {
        return Err(Error::AlgebraInconsistency { residue: z.im.abs() });
    }
    Ok(z.re)
}

/// One-particle density of `state` at `p`.
pub fn rho1(state: &QuantumState, p: Point2D) -> Result<f64> {
    DensityEngine::new(state).rho1(p)
}

/// Two-particle density of `state` at `(p, q)`.
pub fn rho2(state: &QuantumState, p: Point2D, q: Point2D) -> Result<f64> {
    DensityEngine::new(state).rho2(p, q)
}

/// Which version of a closed form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormVariant {
    /// As typeset in the source formulas.
    Printed,
    /// Repaired so that it agrees with the engine.
    Corrected,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct RingValues {
    left: Complex64,
    right: Complex64,
    x: Complex64,
    y: Complex64,
}

impl RingValues {
    pub(crate) fn at(p: Point2D) -> Self {
        RingValues {
            left: ModeLabel::LeftVortex.eval_unchecked(p),
            right: ModeLabel::RightVortex.eval_unchecked(p),
            x: ModeLabel::DipoleX.eval_unchecked(p),
            y: ModeLabel::DipoleY.eval_unchecked(p),
        }
    }
}

fn coherent_field(alpha_x: Complex64, alpha_y: Complex64, m: &RingValues) -> Complex64 {
    alpha_x * m.x + alpha_y * m.y
}

/// Closed-form one-particle density.
pub fn rho1_closed(kind: &StateKind, p: Point2D) -> f64 {
    let m = RingValues::at(p);
    let (l2, r2) = (m.left.norm_sqr(), m.right.norm_sqr());
    match *kind {
        StateKind::FermiFock => l2 + r2,
        StateKind::BoseFock { n, m: mm } => n as f64 * l2 + mm as f64 * r2,
        StateKind::Coherent { alpha_x, alpha_y } => coherent_field(alpha_x, alpha_y, &m).norm_sqr(),
        StateKind::Thermal { nbar_a, nbar_b } => nbar_a * l2 + nbar_b * r2,
        StateKind::Cothermal { alpha_x, alpha_y, nbar } => {
            coherent_field(alpha_x, alpha_y, &m).norm_sqr() + nbar * (m.x.norm_sqr() + m.y.norm_sqr())
        }
        StateKind::Noon => m.x.norm_sqr() + m.y.norm_sqr(),
    }
}

/// Closed-form two-particle density in the corrected form.
pub fn rho2_closed(kind: &StateKind, p: Point2D, q: Point2D) -> f64 {
    rho2_closed_variant(kind, p, q, FormVariant::Corrected)
}

/// Closed-form two-particle density.
///
/// The printed Fock forms pair same-label products,
/// `|φ⟲ φ⟲' ∓ φ⟳ φ⟳'|`, and the printed coherent form is the product of the
/// single-dipole densities. Thermal, cothermal and NOON have one form only.
pub fn rho2_closed_variant(kind: &StateKind, p: Point2D, q: Point2D, variant: FormVariant) -> f64 {
    rho2_closed_values(kind, &RingValues::at(p), &RingValues::at(q), variant)
}

pub(crate) fn rho2_closed_values(kind: &StateKind, a: &RingValues, b: &RingValues, variant: FormVariant) -> f64 {
    let printed = variant == FormVariant::Printed;
    match *kind {
        StateKind::FermiFock => {
            if printed {
                (a.left * b.left - a.right * b.right).norm_sqr()
            } else {
                (a.left * b.right - a.right * b.left).norm_sqr()
            }
        }
        StateKind::BoseFock { n, m } => {
            let (n, m) = (n as f64, m as f64);
            let mixed = if printed {
                a.left * b.left + a.right * b.right
            } else {
                a.left * b.right + a.right * b.left
            };
            n * m * mixed.norm_sqr()
                + n * (n - 1.0) * (a.left * b.left).norm_sqr()
                + m * (m - 1.0) * (a.right * b.right).norm_sqr()
        }
        StateKind::Coherent { alpha_x, alpha_y } => {
            if printed {
                (alpha_x * a.x).norm_sqr() * (alpha_y * b.y).norm_sqr()
            } else {
                coherent_field(alpha_x, alpha_y, a).norm_sqr() * coherent_field(alpha_x, alpha_y, b).norm_sqr()
            }
        }
        StateKind::Thermal { nbar_a, nbar_b } => {
            let g1 = nbar_a * a.left.norm_sqr() + nbar_b * a.right.norm_sqr();
            let g2 = nbar_a * b.left.norm_sqr() + nbar_b * b.right.norm_sqr();
            let t = nbar_a * a.left.conj() * b.left + nbar_b * a.right.conj() * b.right;
            g1 * g2 + t.norm_sqr()
        }
        StateKind::Cothermal { alpha_x, alpha_y, nbar } => {
            let c1 = coherent_field(alpha_x, alpha_y, a);
            let c2 = coherent_field(alpha_x, alpha_y, b);
            let g1 = nbar * (a.x.norm_sqr() + a.y.norm_sqr());
            let g2 = nbar * (b.x.norm_sqr() + b.y.norm_sqr());
            let t = nbar * (a.x.conj() * b.x + a.y.conj() * b.y);
            (c1.norm_sqr() + g1) * (c2.norm_sqr() + g2) + t.norm_sqr() + 2.0 * (c2.conj() * c1 * t).re
        }
        StateKind::Noon => (a.x * b.y + a.y * b.x).norm_sqr(),
    }
}

/// Angular factor `A` in `rho2 = 2 r² s² e^{-r²-s²} A(θ, ϑ) / π²`.
///
/// `∬ A dθ dϑ = 2π² <:N²:>`.
pub fn angular_factor(kind: &StateKind, theta: f64, vartheta: f64) -> f64 {
    let delta = theta - vartheta;
    match *kind {
        StateKind::FermiFock => 2.0 * delta.sin().powi(2),
        StateKind::BoseFock { n, m } => {
            let (n, m) = (n as f64, m as f64);
            0.5 * (4.0 * n * m * delta.cos().powi(2) + n * (n - 1.0) + m * (m - 1.0))
        }
        StateKind::Coherent { alpha_x, alpha_y } => {
            let f = |t: f64| (alpha_x * t.cos() + alpha_y * t.sin()).norm_sqr();
            2.0 * f(theta) * f(vartheta)
        }
        StateKind::Thermal { nbar_a, nbar_b } => {
            let s = nbar_a + nbar_b;
            0.5 * (s * s + nbar_a * nbar_a + nbar_b * nbar_b + 2.0 * nbar_a * nbar_b * (2.0 * delta).cos())
        }
        StateKind::Noon => 2.0 * (theta + vartheta).sin().powi(2),
        StateKind::Cothermal { .. } => {
            let p = Point2D::from_polar(1.0, theta);
            let q = Point2D::from_polar(1.0, vartheta);
            0.5 * PI * PI * E * E * rho2_closed(kind, p, q)
        }
    }
}

/// `rho2` in polar coordinates as a density with respect to Cartesian
/// measure; the polar Jacobian `r s` is not included.
pub fn rho2_polar(kind: &StateKind, r: f64, s: f64, theta: f64, vartheta: f64) -> f64 {
    2.0 * r * r * s * s * (-r * r - s * s).exp() * angular_factor(kind, theta, vartheta) / (PI * PI)
}

/// `rho1` sampled on the square lattice `[-6, 6]²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField1 {
    pub points: usize,
    pub spacing: f64,
    /// Row-major, `values[iy * points + ix]`.
    pub values: Vec<f64>,
    /// Trapezoid integral of the lattice values.
    pub total: f64,
}

impl DensityField1 {
    pub fn from_engine(engine: &DensityEngine) -> Result<Self> {
        Self::from_engine_with(engine, GRID_POINTS)
    }

    /// `points × points` lattice spanning `[-6, 6]²`.
    pub fn from_engine_with(engine: &DensityEngine, points: usize) -> Result<Self> {
        let points = points.max(2);
        let spacing = 2.0 * DOMAIN_HALF_WIDTH / (points - 1) as f64;
        let field = Self::from_fn(points, spacing, |p| engine.rho1_values(engine.mode_values(p)));
        let worst = field.1;
        if worst > IMAG_TOLERANCE {
            return Err(Error::AlgebraInconsistency { residue: worst });
        }
        Ok(field.0)
    }

    pub fn from_closed(kind: &StateKind) -> Self {
        Self::from_fn(GRID_POINTS, GRID_SPACING, |p| Complex64::new(rho1_closed(kind, p), 0.0)).0
    }

    fn from_fn<F>(points: usize, spacing: f64, f: F) -> (Self, f64)
    where
        F: Fn(Point2D) -> Complex64 + Sync + Send,
    {
        let origin = -0.5 * spacing * (points - 1) as f64;
        let rows = par::map_range(points, |iy| {
            let y = origin + iy as f64 * spacing;
            (0..points)
                .map(|ix| f(Point2D::new(origin + ix as f64 * spacing, y)))
                .collect::<Vec<_>>()
        });
        let worst = rows
            .iter()
            .flatten()
            .map(|z| z.im.abs() / z.re.abs().max(1.0))
            .fold(0.0, f64::max);
        let values: Vec<f64> = rows.into_iter().flatten().map(|z| z.re).collect();
        let mut field = DensityField1 {
            points,
            spacing,
            values,
            total: 0.0,
        };
        field.total = field.trapezoid_total();
        (field, worst)
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -0.5 * self.spacing * (self.points - 1) as f64 + i as f64 * self.spacing
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.points + ix]
    }

    fn trapezoid_total(&self) -> f64 {
        let n = self.points;
        let edge = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let mut s = 0.0;
        for iy in 0..n {
            for ix in 0..n {
                s += edge(ix) * edge(iy) * self.value(ix, iy);
            }
        }
        s * self.spacing * self.spacing
    }

    /// Largest pointwise difference to another field on the same lattice.
    pub fn sup_diff(&self, other: &DensityField1) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `(x, value)` along the positive x axis through the centre.
    pub fn radial_cut(&self) -> Vec<(f64, f64)> {
        let c = self.points / 2;
        (c..self.points)
            .map(|ix| (self.coordinate(ix), self.value(ix, c)))
            .collect()
    }

    /// CSV with columns `x,y,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,y,value")?;
        for iy in 0..self.points {
            for ix in 0..self.points {
                writeln!(
                    w,
                    "{:.16e},{:.16e},{:.16e}",
                    self.coordinate(ix),
                    self.coordinate(iy),
                    self.value(ix, iy)
                )?;
            }
        }
        Ok(())
    }

    /// Raw little-endian `f64` values in row-major order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Two-particle density of a state as an exact pointwise evaluator.
#[derive(Debug, Clone)]
pub struct DensityField2 {
    engine: DensityEngine,
}

impl DensityField2 {
    pub fn new(engine: DensityEngine) -> Self {
        DensityField2 { engine }
    }

    pub fn engine(&self) -> &DensityEngine {
        &self.engine
    }

    pub fn eval(&self, p: Point2D, q: Point2D) -> Result<f64> {
        self.engine.rho2(p, q)
    }

    /// `<:N²:>` from the correlators.
    pub fn normalization(&self) -> f64 {
        self.engine.pair_number()
    }

    /// `∬ rho2` by tensor Gauss-Hermite quadrature. The densities are
    /// polynomials times `e^{-r²-s²}`, so moderate orders are exact.
    pub fn integral(&self, order: usize) -> f64 {
        let rule = Rule::hermite(order);
        let vals: Vec<[Complex64; 2]> = grid_points(&rule).map(|p| self.engine.mode_values(p)).collect();
        let wts: Vec<f64> = grid_weights(&rule).collect();
        par::map_range(vals.len(), |i| {
            let mut s = 0.0;
            for j in 0..vals.len() {
                s += wts[j] * self.engine.rho2_values(vals[i], vals[j]).re;
            }
            wts[i] * s
        })
        .iter()
        .sum()
    }

    /// `∫ rho2(p, q) dq` by Gauss-Hermite quadrature.
    pub fn marginal(&self, p: Point2D, order: usize) -> f64 {
        let rule = Rule::hermite(order);
        let u = self.engine.mode_values(p);
        grid_points(&rule)
            .zip(grid_weights(&rule))
            .map(|(q, w)| w * self.engine.rho2_values(u, self.engine.mode_values(q)).re)
            .sum()
    }

    /// Values on a coarse `n⁴` lattice over `[-6, 6]²`, pair-major.
    pub fn cached(&self, n: usize) -> Vec<f64> {
        let h = 2.0 * DOMAIN_HALF_WIDTH / (n.max(2) - 1) as f64;
        let pts: Vec<[Complex64; 2]> = (0..n * n)
            .map(|k| {
                let p = Point2D::new(
                    -DOMAIN_HALF_WIDTH + (k % n) as f64 * h,
                    -DOMAIN_HALF_WIDTH + (k / n) as f64 * h,
                );
                self.engine.mode_values(p)
            })
            .collect();
        par::map_range(pts.len(), |i| {
            pts.iter()
                .map(|v| self.engine.rho2_values(pts[i], *v).re)
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect()
    }
}

// 2D tensor nodes of a Gauss-Hermite rule with the weight removed.
fn grid_points(rule: &Rule) -> impl Iterator<Item = Point2D> + '_ {
    rule.nodes
        .iter()
        .flat_map(move |&y| rule.nodes.iter().map(move |&x| Point2D::new(x, y)))
}

fn grid_weights(rule: &Rule) -> impl Iterator<Item = f64> + '_ {
    rule.iter()
        .flat_map(move |(y, wy)| rule.iter().map(move |(x, wx)| wx * wy * (x * x + y * y).exp()))
}
