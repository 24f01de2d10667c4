//! Harmonic-oscillator eigenfunctions and the two-dimensional vortex and
//! dipole modes built from them.
//!
//! Lengths are in units of the single-charge vortex radius. The named ring
//! modes are
//!
//! ```text
//! phi_left  = [phi_1(x) phi_0(y) + i phi_0(x) phi_1(y)] / sqrt(2)
//! phi_right = conj(phi_left)
//! phi_x     = phi_1(x) phi_0(y)
//! phi_y     = phi_0(x) phi_1(y)
//! ```

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{Rule, DEFAULT_ORDER, DOMAIN_HALF_WIDTH};

/// Highest supported Hermite order.
pub const MAX_ORDER: usize = 64;

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const ORIGIN: Point2D = Point2D { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point2D { x, y }
    }

    pub fn from_polar(r: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Point2D { x: r * c, y: r * s }
    }

    pub fn r(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Polar angle in `[0, 2pi)`.
    pub fn theta(&self) -> f64 {
        let t = self.y.atan2(self.x);
        if t < 0.0 {
            t + 2.0 * PI
        } else {
            t
        }
    }

    pub fn rotate(&self, alpha: f64) -> Self {
        let (s, c) = alpha.sin_cos();
        Point2D {
            x: c * self.x - s * self.y,
            y: s * self.x + c * self.y,
        }
    }

    pub fn distance(&self, other: &Point2D) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Single-particle mode identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeLabel {
    /// Charge +1 vortex, phase `e^{+i theta}`.
    LeftVortex,
    /// Charge -1 vortex, phase `e^{-i theta}`.
    RightVortex,
    /// Horizontal dipole `phi_1(x) phi_0(y)`.
    DipoleX,
    /// Vertical dipole `phi_0(x) phi_1(y)`.
    DipoleY,
    /// Product `phi_n(x) phi_m(y)`.
    HermiteProduct { n: usize, m: usize },
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeLabel::LeftVortex => write!(f, "⟲"),
            ModeLabel::RightVortex => write!(f, "⟳"),
            ModeLabel::DipoleX => write!(f, "→"),
            ModeLabel::DipoleY => write!(f, "↑"),
            ModeLabel::HermiteProduct { n, m } => write!(f, "H({n},{m})"),
        }
    }
}

fn check_order(n: usize) -> Result<()> {
    if n > MAX_ORDER {
        Err(Error::OrderTooLarge {
            order: n,
            max: MAX_ORDER,
        })
    } else {
        Ok(())
    }
}

/// Physicists' Hermite polynomial `H_n(x)` by the three-term recurrence.
pub fn hermite(n: usize, x: f64) -> Result<f64> {
    check_order(n)?;
    Ok(hermite_unchecked(n, x))
}

fn hermite_unchecked(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

// ln( sqrt(2^n n!) pi^{1/4} ) for n = 0..=MAX_ORDER
fn log_norms() -> &'static [f64; MAX_ORDER + 1] {
    static TABLE: OnceLock<[f64; MAX_ORDER + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; MAX_ORDER + 1];
        let mut ln_fact = 0.0;
        for (n, slot) in t.iter_mut().enumerate() {
            if n > 0 {
                ln_fact += (n as f64).ln();
            }
            *slot = 0.5 * (n as f64 * LN_2 + ln_fact) + 0.25 * PI.ln();
        }
        t
    })
}

/// Normalized 1D oscillator eigenfunction `phi_n(x)`.
///
/// The normalization and the Gaussian are combined in the exponent so large
/// orders do not overflow.
pub fn phi_1d(n: usize, x: f64) -> Result<f64> {
    check_order(n)?;
    Ok(phi_1d_unchecked(n, x))
}

fn phi_1d_unchecked(n: usize, x: f64) -> f64 {
    hermite_unchecked(n, x) * (-0.5 * x * x - log_norms()[n]).exp()
}

impl ModeLabel {
    pub fn validate(&self) -> Result<()> {
        if let ModeLabel::HermiteProduct { n, m } = *self {
            check_order(n)?;
            check_order(m)?;
        }
        Ok(())
    }

    /// Complex amplitude of this mode at `p`.
    pub fn eval(&self, p: Point2D) -> Result<Complex64> {
        self.validate()?;
        Ok(self.eval_unchecked(p))
    }

    pub(crate) fn eval_unchecked(&self, p: Point2D) -> Complex64 {
        match *self {
            ModeLabel::HermiteProduct { n, m } => {
                Complex64::new(phi_1d_unchecked(n, p.x) * phi_1d_unchecked(m, p.y), 0.0)
            }
            ring => {
                let (dx, dy) = ring_dipoles(p);
                match ring {
                    ModeLabel::DipoleX => Complex64::new(dx, 0.0),
                    ModeLabel::DipoleY => Complex64::new(dy, 0.0),
                    ModeLabel::LeftVortex => Complex64::new(dx, dy) * std::f64::consts::FRAC_1_SQRT_2,
                    ModeLabel::RightVortex => Complex64::new(dx, -dy) * std::f64::consts::FRAC_1_SQRT_2,
                    ModeLabel::HermiteProduct { .. } => unreachable!(),
                }
            }
        }
    }
}

// (phi_1(x) phi_0(y), phi_0(x) phi_1(y)) with a single exponential
pub(crate) fn ring_dipoles(p: Point2D) -> (f64, f64) {
    let g = RING_PREFACTOR * (-0.5 * (p.x * p.x + p.y * p.y)).exp();
    (p.x * g, p.y * g)
}

// sqrt(2/pi)
const RING_PREFACTOR: f64 = 0.797_884_560_802_865_4;

#[cfg(test)]
fn ring_dipoles_by_hermite(p: Point2D) -> (f64, f64) {
    let g0x = phi_1d_unchecked(0, p.x);
    let g0y = phi_1d_unchecked(0, p.y);
    let g1x = phi_1d_unchecked(1, p.x);
    let g1y = phi_1d_unchecked(1, p.y);
    (g1x * g0y, g0x * g1y)
}

/// Mode amplitude at a point.
pub fn mode_eval(mode: ModeLabel, p: Point2D) -> Result<Complex64> {
    mode.eval(p)
}

/// `∫ conj(phi_a) phi_b` over the evaluation domain by tensor Gauss-Legendre.
///
/// The order is raised by half until two successive estimates agree to
/// `1e-10`; failing that by order 512 reports non-convergence.
pub fn overlap(a: ModeLabel, b: ModeLabel) -> Result<Complex64> {
    overlap_with_order(a, b, DEFAULT_ORDER)
}

pub fn overlap_with_order(a: ModeLabel, b: ModeLabel, order: usize) -> Result<Complex64> {
    a.validate()?;
    b.validate()?;
    let mut order = order.max(8);
    let mut prev = tensor_overlap(a, b, order);
    let mut residual = f64::INFINITY;
    while order < 512 {
        order += order / 2;
        let next = tensor_overlap(a, b, order);
        residual = (next - prev).norm();
        if residual < 1e-10 {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureNotConverged { residual })
}

fn tensor_overlap(a: ModeLabel, b: ModeLabel, order: usize) -> Complex64 {
    let rule = Rule::legendre(order, -DOMAIN_HALF_WIDTH, DOMAIN_HALF_WIDTH);
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, wx) in rule.iter() {
        for (y, wy) in rule.iter() {
            let p = Point2D::new(x, y);
            acc += wx * wy * a.eval_unchecked(p).conj() * b.eval_unchecked(p);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    const RING: [ModeLabel; 4] = [
        ModeLabel::LeftVortex,
        ModeLabel::RightVortex,
        ModeLabel::DipoleX,
        ModeLabel::DipoleY,
    ];

    #[test]
    fn hermite_examples() {
        assert_eq!(hermite(0, 3.7).unwrap(), 1.0);
        assert_eq!(hermite(1, 1.0).unwrap(), 2.0);
        // 8x^3 - 12x at x = 2
        assert_eq!(hermite(3, 2.0).unwrap(), 40.0);
        assert!(matches!(hermite(65, 0.0), Err(Error::OrderTooLarge { .. })));
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi_1d(1, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(phi_1d(0, 0.0).unwrap(), PI.powf(-0.25), epsilon = 1e-15);
        assert_abs_diff_eq!(phi_1d(0, 0.0).unwrap(), 0.751126, epsilon = 1e-6);
        assert!(phi_1d(64, 5.5).unwrap().is_finite());
        assert!(phi_1d(70, 0.0).is_err());
    }

    #[test]
    fn phi_is_normalized() {
        let rule = Rule::legendre(96, -DOMAIN_HALF_WIDTH, DOMAIN_HALF_WIDTH);
        for n in 0..=2 {
            let norm = rule.integrate(|x| phi_1d(n, x).unwrap().powi(2));
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mode_examples() {
        assert_eq!(mode_eval(ModeLabel::LeftVortex, Point2D::ORIGIN).unwrap().norm(), 0.0);
        let v = mode_eval(ModeLabel::DipoleX, Point2D::new(1.0, 0.0)).unwrap();
        let expected = phi_1d(1, 1.0).unwrap() * phi_1d(0, 0.0).unwrap();
        assert_abs_diff_eq!(v.re, expected, epsilon = 1e-15);
        assert_abs_diff_eq!(v.re, 0.48394, epsilon = 1e-5);
        assert_abs_diff_eq!(phi_1d(1, 1.0).unwrap(), 0.644, epsilon = 5e-4);
        assert!(ModeLabel::HermiteProduct { n: 3, m: 80 }.eval(Point2D::ORIGIN).is_err());
    }

    #[test]
    fn ring_modes_match_hermite_products() {
        let p = Point2D::new(0.3, -1.2);
        let dx = ModeLabel::HermiteProduct { n: 1, m: 0 }.eval(p).unwrap();
        let dy = ModeLabel::HermiteProduct { n: 0, m: 1 }.eval(p).unwrap();
        let left = (dx + Complex64::i() * dy) * FRAC_1_SQRT_2;
        assert_abs_diff_eq!(
            (left - ModeLabel::LeftVortex.eval(p).unwrap()).norm(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!((dx - ModeLabel::DipoleX.eval(p).unwrap()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn fast_ring_path_matches_hermite_products() {
        for k in 0..50 {
            let p = Point2D::from_polar(0.13 * k as f64, 0.7 * k as f64);
            let (a, b) = ring_dipoles(p);
            let (c, d) = ring_dipoles_by_hermite(p);
            assert!((a - c).abs() < 1e-15 && (b - d).abs() < 1e-15);
        }
    }

    #[test]
    fn overlap_examples() {
        use ModeLabel::*;
        assert_abs_diff_eq!(
            (overlap(LeftVortex, LeftVortex).unwrap() - 1.0).norm(),
            0.0,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(overlap(LeftVortex, RightVortex).unwrap().norm(), 0.0, epsilon = 1e-10);
        let c = overlap(DipoleX, LeftVortex).unwrap();
        assert_abs_diff_eq!(c.re, FRAC_1_SQRT_2, epsilon = 1e-10);
        assert_abs_diff_eq!(c.im, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn orthonormality_table() {
        use ModeLabel::*;
        for a in RING {
            for b in RING {
                let s = overlap(a, b).unwrap();
                let vortex = |m| matches!(m, LeftVortex | RightVortex);
                if a == b {
                    assert!((s - 1.0).norm() < 1e-10, "{a}{b}: {s}");
                } else if vortex(a) != vortex(b) {
                    assert!((s.norm() - FRAC_1_SQRT_2).abs() < 1e-10, "{a}{b}: {s}");
                } else {
                    assert!(s.norm() < 1e-10, "{a}{b}: {s}");
                }
            }
        }
    }

    #[test]
    fn high_order_products_are_normalized() {
        let m = ModeLabel::HermiteProduct { n: 4, m: 3 };
        let s = overlap(m, m).unwrap();
        assert!((s - 1.0).norm() < 1e-10, "{s}");
    }

    proptest! {
        #[test]
        fn right_is_conjugate_of_left(x in -6.0..6.0f64, y in -6.0..6.0f64) {
            let p = Point2D::new(x, y);
            let l = ModeLabel::LeftVortex.eval(p).unwrap();
            let r = ModeLabel::RightVortex.eval(p).unwrap();
            prop_assert!((r - l.conj()).norm() < 1e-15);
            prop_assert!((l.norm() - r.norm()).abs() < 1e-15);
        }

        #[test]
        fn left_vortex_picks_up_rotation_phase(x in -4.0..4.0f64, y in -4.0..4.0f64, alpha in 0.0..6.3f64) {
            let p = Point2D::new(x, y);
            let rotated = ModeLabel::LeftVortex.eval(p.rotate(alpha)).unwrap();
            let phased = Complex64::from_polar(1.0, alpha) * ModeLabel::LeftVortex.eval(p).unwrap();
            prop_assert!((rotated - phased).norm() < 1e-12);
        }

        #[test]
        fn ladder_recurrence(n in 1usize..63, x in -6.0..6.0f64) {
            let lhs = x * phi_1d(n, x).unwrap();
            let rhs = (n as f64 / 2.0).sqrt() * phi_1d(n - 1, x).unwrap()
                + ((n + 1) as f64 / 2.0).sqrt() * phi_1d(n + 1, x).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn polar_accessors(r in 0.0..6.0f64, t in 0.0..std::f64::consts::TAU) {
            let p = Point2D::from_polar(r, t);
            prop_assert!((p.r() - r).abs() < 1e-12);
            if r > 1e-6 {
                prop_assert!((p.theta() - t).abs() < 1e-9);
            }
            prop_assert!(p.theta() >= 0.0 && p.theta() < 2.0 * PI);
        }
    }
}
