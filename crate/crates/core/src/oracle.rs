//! First-quantization cross-checks.
//!
//! The oracle writes the two-particle wavefunction of a number state as an
//! explicitly (anti)symmetrized sum over label sequences and integrates out
//! every particle but two by orthonormality of the modes. Nothing here goes
//! through the ladder-operator algebra or the density engine; the only
//! shared code is mode evaluation and quadrature nodes.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{rho1_closed, rho2_closed_values, DensityEngine, FormVariant, RingValues};
use crate::error::{Error, Result};
use crate::fock::{Statistics, TAIL_TOLERANCE};
use crate::kind::StateKind;
use crate::modes::{mode_eval, ModeLabel, Point2D};
use crate::pairs::{
    angle_distribution, distance_distribution, summarize, two_angle_distribution, DistanceLaw, DEFAULT_ANGLE_POINTS,
    DEFAULT_DISTANCE_POINTS,
};
use crate::par::{self, IntoParallelIterator, ParallelIterator};
use crate::quadrature::Rule;

/// Grid points per axis of the default cross-validation lattice.
pub const DEFAULT_RESOLUTION: usize = 61;
/// Half-width of the cross-validation lattice.
pub const GRID_HALF_WIDTH: f64 = 3.0;
/// Largest particle number handled by explicit sequence enumeration.
pub const ENUMERATION_LIMIT: usize = 10;
/// Agreement needed for a `Confirmed` verdict.
pub const CONFIRM_TOLERANCE: f64 = 1e-6;

const RADIAL_ORDER: usize = 40;
const RADIAL_MAX: f64 = 7.0;
const ANGLES: usize = 32;
const ORACLE_ANGLE_POINTS: usize = 91;
const ORACLE_TWO_ANGLE_POINTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Confirmed,
    TypoSuspected,
    ConventionDependent,
    /// The implementation disagrees with itself; never expected.
    Failed,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Confirmed => "Confirmed",
            Verdict::TypoSuspected => "Typo-suspected",
            Verdict::ConventionDependent => "Convention-dependent",
            Verdict::Failed => "Failed",
        })
    }
}

/// What a report compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    /// Second-quantized engine against the first-quantized oracle.
    EngineOracle,
    /// Engine against a closed form.
    ClosedForm,
    /// A quoted number or formula from the source text.
    PrintedClaim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub claim: String,
    pub category: Category,
    pub printed_form: String,
    pub engine_form: String,
    pub max_deviation: f64,
    pub verdict: Verdict,
    pub note: String,
}

impl DiscrepancyReport {
    fn new(
        claim: impl Into<String>,
        category: Category,
        printed: impl Into<String>,
        engine: impl Into<String>,
    ) -> Self {
        DiscrepancyReport {
            claim: claim.into(),
            category,
            printed_form: printed.into(),
            engine_form: engine.into(),
            max_deviation: 0.0,
            verdict: Verdict::Confirmed,
            note: String::new(),
        }
    }

    /// Confirmed below tolerance, otherwise `otherwise`.
    fn judged(mut self, deviation: f64, otherwise: Verdict) -> Self {
        self.max_deviation = deviation;
        self.verdict = if deviation < CONFIRM_TOLERANCE {
            Verdict::Confirmed
        } else {
            otherwise
        };
        self
    }

    fn fixed(mut self, deviation: f64, verdict: Verdict) -> Self {
        self.max_deviation = deviation;
        self.verdict = verdict;
        self
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    /// Fails the verification run.
    pub fn is_failure(&self) -> bool {
        self.verdict == Verdict::Failed
    }
}

// One group of sequences sharing the labels of particles 3..N.
#[derive(Debug, Clone)]
struct Tail {
    // (label of particle 1, label of particle 2, coefficient)
    heads: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone)]
enum Component {
    /// Explicit sum over label sequences.
    Enumerated { weight: f64, scale: f64, tails: Vec<Tail> },
    /// `c_aa |φa φa'|² + c_bb |φb φb'|² + c_ab |φa φb' + φb φa'|²`, the
    /// bosonic number-state result in closed form.
    Counted { c_aa: f64, c_bb: f64, c_ab: f64 },
}

/// First-quantized two-particle density of a number state or a mixture of
/// number states.
#[derive(Debug, Clone)]
pub struct Oracle {
    modes: [ModeLabel; 2],
    components: Vec<Component>,
    pair_number: f64,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn enumerate(n: usize, m: usize, statistics: Statistics) -> Result<Component> {
    let total = n + m;
    if statistics == Statistics::Fermi && (n > 1 || m > 1) {
        return Err(Error::PauliViolation {
            mode: if n > 1 { 'a' } else { 'b' },
            occupation: n.max(m),
        });
    }
    if total > ENUMERATION_LIMIT {
        return Err(Error::Unsupported(format!("enumeration of {total} particles")));
    }
    if total < 2 {
        return Ok(Component::Enumerated {
            weight: 1.0,
            scale: 0.0,
            tails: Vec::new(),
        });
    }
    // bit i set: particle i sits in mode b
    let mut groups: BTreeMap<u32, Vec<(usize, usize, f64)>> = BTreeMap::new();
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let sign = match statistics {
            Statistics::Bose => 1.0,
            Statistics::Fermi => {
                // inversions against the canonical order a...a b...b
                let mut inv = 0;
                for i in 0..total {
                    for j in i + 1..total {
                        if mask & (1 << i) != 0 && mask & (1 << j) == 0 {
                            inv += 1;
                        }
                    }
                }
                if inv % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        let head = ((mask & 1) as usize, ((mask >> 1) & 1) as usize, sign);
        groups.entry(mask >> 2).or_default().push(head);
    }
    let sequences = binomial(total, m);
    Ok(Component::Enumerated {
        weight: 1.0,
        scale: (total * (total - 1)) as f64 / sequences,
        tails: groups.into_values().map(|heads| Tail { heads }).collect(),
    })
}

fn counted(n: f64, m: f64) -> Component {
    Component::Counted {
        c_aa: n * (n - 1.0),
        c_bb: m * (m - 1.0),
        c_ab: n * m,
    }
}

// Geometric occupation law truncated where the tail falls below tolerance.
fn geometric(nbar: f64) -> Vec<f64> {
    if nbar <= 0.0 {
        return vec![1.0];
    }
    let q = nbar / (1.0 + nbar);
    let mut out = Vec::new();
    let mut p = 1.0 / (1.0 + nbar);
    // mass beyond the first k terms is q^k
    let mut tail = 1.0;
    while tail > TAIL_TOLERANCE {
        out.push(p);
        p *= q;
        tail *= q;
    }
    out
}

impl Oracle {
    pub fn new(kind: &StateKind) -> Result<Self> {
        kind.validate()?;
        let vortices = [ModeLabel::LeftVortex, ModeLabel::RightVortex];
        let one = |n, m, s| -> Result<Self> {
            Ok(Oracle {
                modes: vortices,
                components: vec![enumerate(n, m, s)?],
                pair_number: ((n + m) * (n + m).saturating_sub(1)) as f64,
            })
        };
        match *kind {
            StateKind::FermiFock => one(1, 1, Statistics::Fermi),
            StateKind::BoseFock { n, m } if n + m <= ENUMERATION_LIMIT => one(n, m, Statistics::Bose),
            StateKind::BoseFock { n, m } => Ok(Oracle {
                modes: vortices,
                components: vec![counted(n as f64, m as f64)],
                pair_number: ((n + m) * (n + m - 1)) as f64,
            }),
            StateKind::Noon => Ok(Oracle {
                modes: [ModeLabel::DipoleX, ModeLabel::DipoleY],
                components: vec![enumerate(1, 1, Statistics::Bose)?],
                pair_number: 2.0,
            }),
            StateKind::Thermal { nbar_a, nbar_b } => {
                // convex mixture of number states, folded into one counted term
                let (pa, pb) = (geometric(nbar_a), geometric(nbar_b));
                let (mut c_aa, mut c_bb, mut c_ab, mut pairs) = (0.0, 0.0, 0.0, 0.0);
                for (n, wa) in pa.iter().enumerate() {
                    for (m, wb) in pb.iter().enumerate() {
                        let (w, nf, mf) = (wa * wb, n as f64, m as f64);
                        c_aa += w * nf * (nf - 1.0);
                        c_bb += w * mf * (mf - 1.0);
                        c_ab += w * nf * mf;
                        pairs += w * (nf + mf) * (nf + mf - 1.0);
                    }
                }
                Ok(Oracle {
                    modes: vortices,
                    components: vec![Component::Counted { c_aa, c_bb, c_ab }],
                    pair_number: pairs,
                })
            }
            StateKind::Coherent { .. } | StateKind::Cothermal { .. } => Err(Error::Unsupported(format!(
                "{} has no definite particle number; it is checked through factorization instead",
                kind.name()
            ))),
        }
    }

    /// The same number state evaluated by the counted formula instead of
    /// enumeration.
    pub fn counted_bose(n: usize, m: usize) -> Self {
        Oracle {
            modes: [ModeLabel::LeftVortex, ModeLabel::RightVortex],
            components: vec![counted(n as f64, m as f64)],
            pair_number: ((n + m) * (n + m).saturating_sub(1)) as f64,
        }
    }

    /// `<:N²:>` implied by the wavefunction normalization.
    pub fn pair_number(&self) -> f64 {
        self.pair_number
    }

    /// Mode amplitudes at `p`.
    pub fn values(&self, p: Point2D) -> [Complex64; 2] {
        [
            mode_eval(self.modes[0], p).unwrap_or_default(),
            mode_eval(self.modes[1], p).unwrap_or_default(),
        ]
    }

    /// Two-particle density from mode amplitudes at the two points.
    pub fn rho2_values(&self, u: [Complex64; 2], v: [Complex64; 2]) -> f64 {
        self.components
            .iter()
            .map(|c| match c {
                Component::Enumerated { weight, scale, tails } => {
                    let s: f64 = tails
                        .iter()
                        .map(|t| {
                            t.heads
                                .iter()
                                .map(|&(i, j, c)| u[i] * v[j] * c)
                                .sum::<Complex64>()
                                .norm_sqr()
                        })
                        .sum();
                    weight * scale * s
                }
                Component::Counted { c_aa, c_bb, c_ab } => {
                    c_aa * (u[0] * v[0]).norm_sqr()
                        + c_bb * (u[1] * v[1]).norm_sqr()
                        + c_ab * (u[0] * v[1] + u[1] * v[0]).norm_sqr()
                }
            })
            .sum()
    }

    pub fn rho2(&self, p: Point2D, q: Point2D) -> f64 {
        self.rho2_values(self.values(p), self.values(q))
    }

    /// `∫∫ r s rho2 dr ds` at fixed polar angles, with Gauss-Legendre radii.
    fn radial_integral(&self, theta: f64, vartheta: f64, rule: &Rule) -> f64 {
        let us: Vec<_> = rule
            .nodes
            .iter()
            .map(|r| self.values(Point2D::from_polar(*r, theta)))
            .collect();
        let vs: Vec<_> = rule
            .nodes
            .iter()
            .map(|s| self.values(Point2D::from_polar(*s, vartheta)))
            .collect();
        let mut total = 0.0;
        for (i, (r, wr)) in rule.iter().enumerate() {
            for (j, (s, ws)) in rule.iter().enumerate() {
                total += wr * ws * r * s * self.rho2_values(us[i], vs[j]);
            }
        }
        total
    }

    /// Joint density of the polar angles.
    pub fn two_angle(&self, theta: f64, vartheta: f64) -> f64 {
        let rule = Rule::legendre(RADIAL_ORDER, 0.0, RADIAL_MAX);
        self.radial_integral(theta, vartheta, &rule) / self.pair_number
    }

    /// Relative angle density folded to `[0, π]`, averaging over the
    /// common rotation.
    pub fn relative_angle(&self, delta: f64) -> f64 {
        let rule = Rule::legendre(RADIAL_ORDER, 0.0, RADIAL_MAX);
        let h = TAU / ANGLES as f64;
        let mut total = 0.0;
        for k in 0..ANGLES {
            let t = k as f64 * h;
            total += self.radial_integral(t, t + delta, &rule) + self.radial_integral(t, t - delta, &rule);
        }
        total * h / self.pair_number
    }

    /// `∬ rho2` and `∬ |p - q|² rho2` by polar tensor quadrature.
    pub fn moments(&self) -> (f64, f64) {
        let rule = Rule::legendre(RADIAL_ORDER, 0.0, RADIAL_MAX);
        let h = TAU / ANGLES as f64;
        let points: Vec<(Point2D, f64)> = (0..ANGLES)
            .flat_map(|k| {
                rule.iter()
                    .map(move |(r, w)| (Point2D::from_polar(r, k as f64 * h), w * r * h))
            })
            .collect();
        let values: Vec<_> = points.iter().map(|(p, _)| self.values(*p)).collect();
        let rows: Vec<(f64, f64)> = (0..points.len())
            .into_par_iter()
            .map(|i| {
                let (p, wp) = points[i];
                let mut acc = (0.0, 0.0);
                for (j, (q, wq)) in points.iter().enumerate() {
                    let w = wp * wq * self.rho2_values(values[i], values[j]);
                    acc.0 += w;
                    acc.1 += w * (p.x - q.x).powi(2) + w * (p.y - q.y).powi(2);
                }
                acc
            })
            .collect();
        rows.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
    }
}

/// `|Ψ(p, q)|²` times the pair count, for number states and thermal
/// mixtures of them.
pub fn first_quantized_rho2(kind: &StateKind, p: Point2D, q: Point2D) -> Result<f64> {
    Ok(Oracle::new(kind)?.rho2(p, q))
}

fn lattice(resolution: usize) -> Vec<Point2D> {
    let n = resolution.max(2);
    let c = |i: usize| -GRID_HALF_WIDTH + 2.0 * GRID_HALF_WIDTH * i as f64 / (n - 1) as f64;
    (0..n * n).map(|k| Point2D::new(c(k / n), c(k % n))).collect()
}

/// Largest `|f(p, q)|` over all pairs of the lattice.
fn pair_sup<F: Fn(usize, usize) -> f64 + Sync + Send>(n: usize, f: F) -> f64 {
    par::max_range(n, |i| (0..n).map(|j| f(i, j).abs()).fold(0.0, f64::max))
}

/// Engine against oracle on `resolution⁴` point pairs of `[-3, 3]⁴`.
pub fn engine_oracle_deviation(kind: &StateKind, resolution: usize) -> Result<f64> {
    let oracle = Oracle::new(kind)?;
    let engine = DensityEngine::new(&kind.build()?);
    let pts = lattice(resolution);
    let ov: Vec<_> = pts.iter().map(|p| oracle.values(*p)).collect();
    let ev: Vec<_> = pts.iter().map(|p| engine.mode_values(*p)).collect();
    Ok(pair_sup(pts.len(), |i, j| {
        engine.rho2_values(ev[i], ev[j]).re - oracle.rho2_values(ov[i], ov[j])
    }))
}

/// `rho2 - rho1 ⊗ rho1` over the lattice.
pub fn factorization_deviation(kind: &StateKind, resolution: usize) -> Result<f64> {
    let engine = DensityEngine::new(&kind.build()?);
    let pts = lattice(resolution);
    let ev: Vec<_> = pts.iter().map(|p| engine.mode_values(*p)).collect();
    let r1: Vec<f64> = ev.iter().map(|u| engine.rho1_values(*u).re).collect();
    Ok(pair_sup(pts.len(), |i, j| {
        engine.rho2_values(ev[i], ev[j]).re - r1[i] * r1[j]
    }))
}

fn closed_rho2_deviation(kind: &StateKind, variant: FormVariant, resolution: usize) -> Result<f64> {
    let engine = DensityEngine::new(&kind.build()?);
    let pts = lattice(resolution);
    let ev: Vec<_> = pts.iter().map(|p| engine.mode_values(*p)).collect();
    let cv: Vec<_> = pts.iter().map(|p| RingValues::at(*p)).collect();
    Ok(pair_sup(pts.len(), |i, j| {
        engine.rho2_values(ev[i], ev[j]).re - rho2_closed_values(kind, &cv[i], &cv[j], variant)
    }))
}

fn closed_rho1_deviation(kind: &StateKind, resolution: usize) -> Result<f64> {
    let engine = DensityEngine::new(&kind.build()?);
    Ok(lattice(resolution)
        .iter()
        .map(|p| (engine.rho1_values(engine.mode_values(*p)).re - rho1_closed(kind, *p)).abs())
        .fold(0.0, f64::max))
}

/// Engine relative-angle law against the oracle's, on a coarse grid.
pub fn angle_law_deviation(kind: &StateKind) -> Result<f64> {
    let oracle = Oracle::new(kind)?;
    let law = angle_distribution(&kind.build()?, DEFAULT_ANGLE_POINTS)?;
    let grid: Vec<f64> = (0..ORACLE_ANGLE_POINTS)
        .map(|k| PI * k as f64 / (ORACLE_ANGLE_POINTS - 1) as f64)
        .collect();
    Ok(par::max_range(grid.len(), |k| {
        (law.value_at(grid[k]) - oracle.relative_angle(grid[k])).abs()
    }))
}

/// Engine joint angle law against the oracle's on the engine grid.
pub fn two_angle_deviation(kind: &StateKind) -> Result<f64> {
    let oracle = Oracle::new(kind)?;
    let law = two_angle_distribution(&kind.build()?, ORACLE_TWO_ANGLE_POINTS)?;
    let n = law.grid.len();
    Ok(par::max_range(n * n, |k| {
        (law.values[k] - oracle.two_angle(law.grid[k / n], law.grid[k % n])).abs()
    }))
}

fn kind_label(kind: &StateKind) -> String {
    kind.to_string()
}

/// Every check that applies to one state.
pub fn cross_validate(kind: &StateKind, resolution: usize) -> Result<Vec<DiscrepancyReport>> {
    let label = kind_label(kind);
    let mut out = Vec::new();
    let definite = kind.is_fock_sector() || matches!(kind, StateKind::Thermal { .. });

    if definite {
        let d = engine_oracle_deviation(kind, resolution)?;
        out.push(
            DiscrepancyReport::new(
                format!("rho2-engine-vs-oracle/{label}"),
                Category::EngineOracle,
                "symmetrized first-quantized |Ψ(r, r')|² times pair count",
                "Σ <a†a†aa> φ*φ*φφ",
            )
            .judged(d, Verdict::Failed)
            .note(format!("{resolution}^4 point pairs on [-3, 3]^4")),
        );
    } else if let StateKind::Coherent { .. } = kind {
        let d = factorization_deviation(kind, resolution)?;
        out.push(
            DiscrepancyReport::new(
                format!("coherent-factorization/{label}"),
                Category::EngineOracle,
                "rho2(r, r') = rho1(r) rho1(r')",
                "Σ <a†a†aa> φ*φ*φφ",
            )
            .judged(d, Verdict::Failed),
        );
    }

    let d = closed_rho1_deviation(kind, resolution)?;
    out.push(
        DiscrepancyReport::new(
            format!("rho1-closed-form/{label}"),
            Category::ClosedForm,
            rho1_form(kind),
            "Σ <a†a> φ*φ",
        )
        .judged(d, Verdict::Failed),
    );

    let printed = closed_rho2_deviation(kind, FormVariant::Printed, resolution)?;
    let corrected = closed_rho2_deviation(kind, FormVariant::Corrected, resolution)?;
    let (quoted, fixed) = rho2_forms(kind);
    let mut r = DiscrepancyReport::new(format!("rho2-closed-form/{label}"), Category::ClosedForm, quoted, fixed);
    r = if corrected >= CONFIRM_TOLERANCE {
        r.fixed(corrected, Verdict::Failed)
            .note("repaired closed form disagrees with the engine")
    } else if printed < CONFIRM_TOLERANCE {
        r.fixed(printed, Verdict::Confirmed)
    } else {
        let why = match kind {
            StateKind::Coherent { .. } => {
                "printed product of single-dipole densities is not symmetric under r <-> r'; the engine factorizes into total densities"
            }
            _ => "same-label products give θ+ϑ dependence and break rotation invariance of the number state; engine depends on θ-ϑ",
        };
        r.fixed(printed, Verdict::TypoSuspected)
            .note(format!("{why}; repaired form agrees to {corrected:.1e}"))
    };
    out.push(r);

    if matches!(kind, StateKind::Cothermal { .. }) {
        if let Some(last) = out.last_mut() {
            last.note = "supplement-approximated: displaced thermal state".into();
        }
    }

    let state = kind.build()?;
    if kind.is_fock_sector() || matches!(kind, StateKind::Thermal { .. }) {
        if matches!(kind, StateKind::Noon) {
            let d = two_angle_deviation(kind)?;
            out.push(
                DiscrepancyReport::new(
                    format!("two-angle-law/{label}"),
                    Category::EngineOracle,
                    "(2/π) sin²(θ+ϑ), up to normalization",
                    "sin²(θ+ϑ) / (2π²)",
                )
                .judged(d, Verdict::Failed),
            );
        } else {
            let d = angle_law_deviation(kind)?;
            out.push(
                DiscrepancyReport::new(
                    format!("relative-angle-law/{label}"),
                    Category::EngineOracle,
                    angle_form(kind),
                    "engine quadrature of rho2 over radii and common rotation",
                )
                .judged(d, Verdict::Failed),
            );
        }
    }

    let dist = distance_distribution(&state, DEFAULT_DISTANCE_POINTS)?;
    let summary = summarize(&dist)?;
    let closed = crate::pairs::closed_form_distance;
    let d = dist.sup_diff(|x| closed(kind, x).unwrap_or(f64::NAN));
    out.push(
        DiscrepancyReport::new(
            format!("distance-law/{label}"),
            Category::ClosedForm,
            distance_form(kind),
            "quadrature of rho2 in centre and relative coordinates",
        )
        .judged(if d.is_nan() { f64::INFINITY } else { d }, Verdict::Failed)
        .note(format!(
            "mean {:.10}, E[d²] {:.10}, variance {:.10}",
            summary.mean, summary.second_moment, summary.variance
        )),
    );

    if let Ok(oracle) = Oracle::new(kind) {
        let (norm, d2) = oracle.moments();
        let oracle_second = d2 / norm;
        out.push(
            DiscrepancyReport::new(
                format!("second-moment/{label}"),
                Category::EngineOracle,
                "E[d²] = 4",
                format!("{:.12}", summary.second_moment),
            )
            .judged((summary.second_moment - oracle_second).abs(), Verdict::Failed)
            .note(format!(
                "oracle E[d²] = {oracle_second:.12}; oracle normalization ∬|Ψ|² = {:.12}",
                norm / oracle.pair_number()
            )),
        );
    }
    Ok(out)
}

fn rho1_form(kind: &StateKind) -> &'static str {
    match kind {
        StateKind::FermiFock => "|φ_a|² + |φ_b|²",
        StateKind::BoseFock { .. } => "n|φ_a|² + m|φ_b|²",
        StateKind::Coherent { .. } => "|α_a φ_a + α_b φ_b|²",
        StateKind::Thermal { .. } => "n̄_a|φ_a|² + n̄_b|φ_b|²",
        StateKind::Cothermal { .. } => "|α·φ|² + n̄ Σ|φ|²",
        StateKind::Noon => "|φ_→|² + |φ_↑|²",
    }
}

fn rho2_forms(kind: &StateKind) -> (&'static str, &'static str) {
    match kind {
        StateKind::FermiFock => ("|φ⟲φ⟲' - φ⟳φ⟳'|²", "|φ⟲φ⟳' - φ⟳φ⟲'|²"),
        StateKind::BoseFock { .. } => (
            "n(n-1)|φ⟲φ⟲'|² + m(m-1)|φ⟳φ⟳'|² + nm|φ⟲φ⟲' + φ⟳φ⟳'|²",
            "n(n-1)|φ⟲φ⟲'|² + m(m-1)|φ⟳φ⟳'|² + nm|φ⟲φ⟳' + φ⟳φ⟲'|²",
        ),
        StateKind::Coherent { .. } => ("rho1_→(r) rho1_↑(r')", "rho1(r) rho1(r')"),
        StateKind::Thermal { .. } => (
            "rho1 rho1' + |Σ n̄_p φ*_p(r) φ_p(r')|²",
            "rho1 rho1' + |Σ n̄_p φ*_p(r) φ_p(r')|²",
        ),
        StateKind::Cothermal { .. } => ("not printed", "displaced thermal Gaussian identity"),
        StateKind::Noon => ("|φ_→φ_↑' + φ_↑φ_→'|²", "|φ_→φ_↑' + φ_↑φ_→'|²"),
    }
}

fn angle_form(kind: &StateKind) -> &'static str {
    match kind {
        StateKind::FermiFock => "(2/π) sin²Δθ",
        StateKind::BoseFock { n: 1, m: 1 } => "(2/π) cos²Δθ",
        _ => "1/π",
    }
}

fn distance_form(kind: &StateKind) -> &'static str {
    match kind {
        StateKind::FermiFock => "½ d³ e^{-d²/2}",
        StateKind::BoseFock { n: 1, m: 1 } => "(d/8)(8 - 4d² + d⁴) e^{-d²/2}",
        StateKind::Coherent { .. } | StateKind::Noon | StateKind::BoseFock { .. } => "(d/16)(8 + d⁴) e^{-d²/2}",
        _ => "exchange-weighted mix of the Fermi and Bose laws",
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Claims about the printed distance and angle laws that do not belong to
/// one state.
pub fn printed_claims() -> Result<Vec<DiscrepancyReport>> {
    let mut out = Vec::new();
    let n = DEFAULT_DISTANCE_POINTS;
    let bose = distance_distribution(&StateKind::BoseFock { n: 1, m: 1 }.build()?, n)?;
    let fermi = distance_distribution(&StateKind::FermiFock.build()?, n)?;
    let coherent = distance_distribution(&StateKind::unit_coherent().build()?, n)?;

    let printed = DistanceLaw::Bose(FormVariant::Printed);
    let d = bose.sup_diff(|x| printed.eval(x));
    let printed_mass = 7.0 / 8.0 * (PI / 2.0).sqrt();
    out.push(
        DiscrepancyReport::new(
            "bose-distance-law-d-factor",
            Category::PrintedClaim,
            "D_B(d) = ⅛(8 - 4d² + d⁴) e^{-d²/2}",
            "(d/8)(8 - 4d² + d⁴) e^{-d²/2}",
        )
        .fixed(d, Verdict::TypoSuspected)
        .note(format!(
            "printed form integrates to (7/8)√(π/2) = {printed_mass:.6} and does not vanish at d = 0, against the quoted small-d behaviour D_B ≈ d"
        )),
    );

    let ka = angle_distribution(&StateKind::FermiFock.build()?, DEFAULT_ANGLE_POINTS)?;
    let kb = angle_distribution(&StateKind::BoseFock { n: 1, m: 1 }.build()?, DEFAULT_ANGLE_POINTS)?;
    let cos2 = |x: f64| 2.0 / PI * x.cos().powi(2);
    let sin2 = |x: f64| 2.0 / PI * x.sin().powi(2);
    let as_printed = ka.sup_diff(cos2).max(kb.sup_diff(sin2));
    let swapped = ka.sup_diff(sin2).max(kb.sup_diff(cos2));
    out.push(
        DiscrepancyReport::new(
            "angle-law-labels",
            Category::PrintedClaim,
            "D_F(Δθ) = (2/π) cos²Δθ, D_B(Δθ) = (2/π) sin²Δθ",
            "D_F(Δθ) = (2/π) sin²Δθ, D_B(Δθ) = (2/π) cos²Δθ",
        )
        .fixed(as_printed, if swapped < CONFIRM_TOLERANCE { Verdict::TypoSuspected } else { Verdict::Failed })
        .note(format!(
            "labels swapped; swapped assignment agrees to {swapped:.1e} and matches the prose that fermions sit perpendicular and bosons aligned"
        )),
    );

    let at2 = [fermi.value_at(2.0), bose.value_at(2.0), coherent.value_at(2.0)];
    let e2 = (-2.0f64).exp();
    let dev = at2.iter().map(|v| (v - 3.0 * e2).abs()).fold(0.0, f64::max);
    let cross = [(4.0 - 8f64.sqrt()).sqrt(), (4.0 + 8f64.sqrt()).sqrt()];
    let cross_dev = cross
        .iter()
        .map(|x| {
            let v = [fermi.value_at(*x), bose.value_at(*x), coherent.value_at(*x)];
            (v[0] - v[1]).abs().max((v[1] - v[2]).abs())
        })
        .fold(0.0, f64::max);
    out.push(
        DiscrepancyReport::new(
            "common-value-at-diameter",
            Category::PrintedClaim,
            "D_F(2) = D_B(2) = D_coh(2) = 3/e²",
            format!("D_F(2) = {:.6}, D_B(2) = {:.6}, D_coh(2) = {:.6}", at2[0], at2[1], at2[2]),
        )
        .fixed(dev, Verdict::TypoSuspected)
        .note(format!(
            "values are 4/e², 2/e², 3/e²; the three laws cross at d² = 4 ± 2√2 (d = {:.6}, {:.6}) with spread {cross_dev:.1e}",
            cross[0], cross[1]
        )),
    );

    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for kind in [
        StateKind::FermiFock,
        StateKind::BoseFock { n: 1, m: 1 },
        StateKind::unit_coherent(),
        StateKind::Thermal {
            nbar_a: 1.0,
            nbar_b: 1.0,
        },
        StateKind::Noon,
    ] {
        let s = summarize(&distance_distribution(&kind.build()?, n)?)?;
        worst = worst.max((s.second_moment - 4.0).abs());
        parts.push(format!(
            "{}: E[d²] = {:.8}, Var = {:.6}",
            kind.name(),
            s.second_moment,
            s.variance
        ));
    }
    out.push(
        DiscrepancyReport::new(
            "variance-of-distance",
            Category::PrintedClaim,
            "Var(d) = 4",
            "E[d²] = 4",
        )
        .fixed(worst, Verdict::ConventionDependent)
        .note(format!(
            "holds for the second moment, max |E[d²] - 4| = {worst:.1e}; variances differ per state ({})",
            parts.join("; ")
        )),
    );

    let sf = summarize(&fermi)?;
    let sb = summarize(&bose)?;
    let sc = summarize(&coherent)?;
    let mean_checks = [
        ("fermi", sf.mean, (9.0 * PI / 8.0).sqrt(), "√(9π/8) ≈ 1.88"),
        ("bose", sb.mean, (121.0 * PI / 128.0).sqrt(), "√(121π/128) ≈ 1.72"),
        ("coherent", sc.mean, 23.0 / 16.0 * (PI / 2.0).sqrt(), "(23/16)√(π/2)"),
    ];
    for (name, got, want, printed) in mean_checks {
        out.push(
            DiscrepancyReport::new(
                format!("mean-distance/{name}"),
                Category::PrintedClaim,
                printed,
                format!("{got:.10}"),
            )
            .judged((got - want).abs(), Verdict::TypoSuspected),
        );
    }
    let mode = sf.local_maxima.first().copied().unwrap_or(f64::NAN);
    out.push(
        DiscrepancyReport::new(
            "most-likely-distance/fermi",
            Category::PrintedClaim,
            "√3 ≈ 1.73",
            format!("{mode:.10}"),
        )
        .judged((mode - 3f64.sqrt()).abs(), Verdict::TypoSuspected),
    );

    let stationary = |d: f64| {
        let d2 = d * d;
        8.0 - 20.0 * d2 + 9.0 * d2 * d2 - d2 * d2 * d2
    };
    let roots = [bisect(stationary, 0.5, 1.0), bisect(stationary, 2.0, 3.0)];
    let dev = if sb.local_maxima.len() == 2 {
        (sb.local_maxima[0] - roots[0])
            .abs()
            .max((sb.local_maxima[1] - roots[1]).abs())
    } else {
        f64::INFINITY
    };
    out.push(
        DiscrepancyReport::new(
            "bose-distance-maxima",
            Category::PrintedClaim,
            "≈ 0.71 and ≈ 2.4",
            format!("{:?}", sb.local_maxima),
        )
        .judged(dev, Verdict::TypoSuspected)
        .note(format!(
            "roots of 8 - 20d² + 9d⁴ - d⁶ at {:.6} and {:.6}; quoted values are rounded",
            roots[0], roots[1]
        )),
    );

    let noon = distance_distribution(&StateKind::Noon.build()?, n)?;
    out.push(
        DiscrepancyReport::new(
            "noon-distance-is-uncorrelated",
            Category::PrintedClaim,
            "D_NOON(d) = D_coh(d)",
            "quadrature of the NOON rho2",
        )
        .judged(noon.sup_diff(|x| DistanceLaw::Coherent.eval(x)), Verdict::TypoSuspected),
    );

    // Polar prefactor: ρ2 = 2r²s²e^{-r²-s²} D(θ,ϑ)/π² with D = (2/π) sin²(θ+ϑ).
    let noon_state = StateKind::Noon.build()?;
    let engine = DensityEngine::new(&noon_state);
    let mut dev = 0.0f64;
    let mut ratio = 0.0;
    for i in 1..8 {
        for j in 0..8 {
            let (r, s) = (0.5 * i as f64, 1.0);
            let (t, v) = (0.4 * j as f64, 0.3);
            let printed = 2.0 * r * r * s * s * (-r * r - s * s).exp() * (2.0 / PI) * (t + v).sin().powi(2) / (PI * PI);
            let ours = engine.rho2(Point2D::from_polar(r, t), Point2D::from_polar(s, v))?;
            dev = dev.max((printed - ours).abs());
            if printed > 1e-6 {
                ratio = ours / printed;
            }
        }
    }
    out.push(
        DiscrepancyReport::new(
            "polar-form-prefactor",
            Category::PrintedClaim,
            "2r²s²e^{-r²-s²} D(θ,ϑ)/π² with D = (2/π) sin²(θ+ϑ)",
            "2r²s²e^{-r²-s²} A(θ,ϑ)/π² with A = 2 sin²(θ+ϑ), ∬A = 2π²<:N²:>",
        )
        .fixed(dev, Verdict::ConventionDependent)
        .note(format!(
            "angular shape agrees; engine/printed ratio {ratio:.6} = π, so the printed D is normalized as a density over a different angular measure"
        )),
    );
    Ok(out)
}

/// Per-state reports for every shipped state followed by the printed claims.
pub fn verify_all(resolution: usize) -> Result<Vec<DiscrepancyReport>> {
    let mut out = Vec::new();
    for kind in StateKind::shipped() {
        out.extend(cross_validate(&kind, resolution)?);
    }
    out.extend(printed_claims()?);
    Ok(out)
}

/// Fixed-width table for terminals.
pub fn format_table(reports: &[DiscrepancyReport]) -> String {
    let width = reports
        .iter()
        .map(|r| r.claim.chars().count())
        .max()
        .unwrap_or(5)
        .max(5);
    let mut s = format!("{:<width$}  {:<20}  {:>10}  note\n", "claim", "verdict", "deviation");
    for r in reports {
        s.push_str(&format!(
            "{:<width$}  {:<20}  {:>10.3e}  {}\n",
            r.claim,
            r.verdict.to_string(),
            r.max_deviation,
            r.note
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn polar(r: f64, t: f64) -> Point2D {
        Point2D::from_polar(r, t)
    }

    #[test]
    fn fermi_vanishes_on_the_diagonal() {
        for k in 0..20 {
            let p = polar(0.2 * k as f64, 0.3 * k as f64);
            assert_eq!(first_quantized_rho2(&StateKind::FermiFock, p, p).unwrap(), 0.0);
        }
    }

    #[test]
    fn fermi_polar_law() {
        // (φ⟲φ⟳' - φ⟳φ⟲') expands to -(2i/π) r s e^{-(r²+s²)/2} sin(θ-ϑ)
        for (r, s, t, v) in [(1.0, 0.7, 0.3, 2.0), (0.4, 1.9, 4.0, 1.1), (2.2, 1.3, 5.5, 0.2)] {
            let got = first_quantized_rho2(&StateKind::FermiFock, polar(r, t), polar(s, v)).unwrap();
            let want = 4.0 / (PI * PI) * r * r * s * s * (-r * r - s * s).exp() * (t - v).sin().powi(2);
            assert!((got - want).abs() < 1e-15, "{got} {want}");
        }
    }

    #[test]
    fn noon_polar_law() {
        for (r, s, t, v) in [(1.0, 0.7, 0.3, 2.0), (0.4, 1.9, 4.0, 1.1)] {
            let got = first_quantized_rho2(&StateKind::Noon, polar(r, t), polar(s, v)).unwrap();
            let want = 4.0 / (PI * PI) * r * r * s * s * (-r * r - s * s).exp() * (t + v).sin().powi(2);
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn enumeration_matches_counted_formula() {
        let pts = [polar(0.8, 0.1), polar(1.3, 2.5), polar(0.2, 4.4)];
        for n in 0..=6 {
            for m in 0..=(ENUMERATION_LIMIT - n).min(6) {
                let e = Oracle::new(&StateKind::BoseFock { n, m }).unwrap();
                let c = Oracle::counted_bose(n, m);
                for p in pts {
                    for q in pts {
                        let (a, b) = (e.rho2(p, q), c.rho2(p, q));
                        assert!((a - b).abs() < 1e-13 * (1.0 + b.abs()), "{n},{m}: {a} {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn fermi_enumeration_rejects_double_occupation() {
        assert!(matches!(
            enumerate(2, 0, Statistics::Fermi),
            Err(Error::PauliViolation { .. })
        ));
    }

    #[test]
    fn indefinite_number_is_unsupported() {
        let p = polar(1.0, 0.0);
        assert!(matches!(
            first_quantized_rho2(&StateKind::unit_coherent(), p, p),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            first_quantized_rho2(&StateKind::unit_cothermal(), p, p),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn wavefunction_normalization() {
        for kind in [
            StateKind::FermiFock,
            StateKind::BoseFock { n: 1, m: 1 },
            StateKind::BoseFock { n: 2, m: 0 },
            StateKind::Noon,
            StateKind::Thermal {
                nbar_a: 1.0,
                nbar_b: 1.0,
            },
        ] {
            let o = Oracle::new(&kind).unwrap();
            let (norm, d2) = o.moments();
            assert!((norm / o.pair_number() - 1.0).abs() < 1e-8, "{kind}");
            assert!((d2 / norm - 4.0).abs() < 1e-8, "{kind}");
        }
    }

    #[test]
    fn thermal_mixture_weights() {
        let o = Oracle::new(&StateKind::Thermal {
            nbar_a: 1.0,
            nbar_b: 1.0,
        })
        .unwrap();
        // 2n̄_a² + 2n̄_b² + 2n̄_a n̄_b
        // truncation drops tail mass 1e-12 at occupations near 40
        assert!((o.pair_number() - 6.0).abs() < 1e-8);
    }

    #[test]
    fn fock_sector_agrees_with_engine() {
        for kind in [
            StateKind::FermiFock,
            StateKind::BoseFock { n: 1, m: 1 },
            StateKind::BoseFock { n: 2, m: 0 },
            StateKind::BoseFock { n: 3, m: 2 },
            StateKind::Noon,
            StateKind::Thermal {
                nbar_a: 1.0,
                nbar_b: 0.5,
            },
        ] {
            let d = engine_oracle_deviation(&kind, 15).unwrap();
            assert!(d < 1e-10, "{kind}: {d}");
        }
    }

    #[test]
    fn oracle_angle_laws() {
        let f = Oracle::new(&StateKind::FermiFock).unwrap();
        let b = Oracle::new(&StateKind::BoseFock { n: 1, m: 1 }).unwrap();
        for k in 0..7 {
            let d = 0.5 * k as f64;
            assert!((f.relative_angle(d) - 2.0 / PI * d.sin().powi(2)).abs() < 1e-10);
            assert!((b.relative_angle(d) - 2.0 / PI * d.cos().powi(2)).abs() < 1e-10);
        }
        let noon = Oracle::new(&StateKind::Noon).unwrap();
        assert!((noon.two_angle(0.4, 0.9) - 1.3f64.sin().powi(2) / (2.0 * PI * PI)).abs() < 1e-10);
    }

    #[test]
    fn report_json() {
        let r = DiscrepancyReport::new("x", Category::PrintedClaim, "a", "b").fixed(0.5, Verdict::TypoSuspected);
        let j = serde_json::to_string(&r).unwrap();
        assert!(j.contains("\"verdict\":\"typo-suspected\""));
    }
}
