//! Two-mode quantum states on a truncated occupation basis and their
//! normally-ordered correlators.
//!
//! Basis states are `|n_a, n_b>` with `0 <= n_a, n_b <= cutoff`, stored row
//! major with index `n_a * (cutoff + 1) + n_b`. Mode `a` is the first mode of
//! the basis (⟲ or →), mode `b` the second (⟳ or ↑).
//!
//! Fermionic sign convention: mode `a` is ordered before mode `b`, so
//! `|1,1> = a†_a a†_b |0>`. Consequently `a_b |n_a, 1> = (-1)^{n_a} |n_a, 0>`
//! and `a_a` carries no sign. Every fermionic sign in this crate follows from
//! that single choice.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::ModeLabel;

/// Tail mass a constructor may discard before renormalizing.
pub const TAIL_TOLERANCE: f64 = 1e-12;

/// Largest per-mode cutoff a dense density matrix is allowed to reach.
pub const MAX_CUTOFF: usize = 48;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Statistics {
    Bose,
    Fermi,
}

impl Statistics {
    /// Exchange sign: +1 for bosons, -1 for fermions.
    pub fn sign(self) -> f64 {
        match self {
            Statistics::Bose => 1.0,
            Statistics::Fermi => -1.0,
        }
    }
}

/// Which pair of single-particle modes the occupation numbers refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// `(⟲, ⟳)`
    Vortex,
    /// `(→, ↑)`
    Dipole,
}

impl Basis {
    pub fn modes(self) -> [ModeLabel; 2] {
        match self {
            Basis::Vortex => [ModeLabel::LeftVortex, ModeLabel::RightVortex],
            Basis::Dipole => [ModeLabel::DipoleX, ModeLabel::DipoleY],
        }
    }

    pub fn other(self) -> Basis {
        match self {
            Basis::Vortex => Basis::Dipole,
            Basis::Dipole => Basis::Vortex,
        }
    }

    /// Creation-operator transform into the other basis:
    /// `a†_source[s] = Σ_t m[s][t] a†_target[t]`.
    fn creation_transform(self) -> [[Complex64; 2]; 2] {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            // a†_⟲ = (a†_→ + i a†_↑)/√2, a†_⟳ = (a†_→ - i a†_↑)/√2
            Basis::Vortex => [[h, I * h], [h, -I * h]],
            // a†_→ = (a†_⟲ + a†_⟳)/√2, a†_↑ = -i (a†_⟲ - a†_⟳)/√2
            Basis::Dipole => [[h, h], [-I * h, I * h]],
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b] = self.modes();
        write!(f, "({a},{b})")
    }
}

/// Index arithmetic and ladder operators of a truncated two-mode space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct FockSpace {
    pub statistics: Statistics,
    pub cutoff: usize,
}

impl FockSpace {
    pub fn dim(&self) -> usize {
        (self.cutoff + 1) * (self.cutoff + 1)
    }

    pub fn index(&self, na: usize, nb: usize) -> usize {
        na * (self.cutoff + 1) + nb
    }

    pub fn occupation(&self, i: usize) -> (usize, usize) {
        (i / (self.cutoff + 1), i % (self.cutoff + 1))
    }

    // squared ladder coefficient; roots are taken once per matrix element so
    // integer-valued correlators come out exact
    fn ladder_square(&self, n: usize) -> f64 {
        match self.statistics {
            Statistics::Bose => n as f64,
            Statistics::Fermi => 1.0,
        }
    }

    // JW string for mode b
    fn b_sign(&self, na: usize) -> f64 {
        if self.statistics == Statistics::Fermi && na % 2 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    /// `a_mode |i> = c |k>` as `(sign(c) c², k)`; `None` when the result
    /// vanishes. Combine two of these with [`coef_product`].
    pub fn lower(&self, i: usize, mode: usize) -> Option<(f64, usize)> {
        let (na, nb) = self.occupation(i);
        match mode {
            0 if na > 0 => Some((self.ladder_square(na), self.index(na - 1, nb))),
            1 if nb > 0 => Some((self.b_sign(na) * self.ladder_square(nb), self.index(na, nb - 1))),
            _ => None,
        }
    }

    /// `a_second a_first |i>`, coefficient as in [`FockSpace::lower`].
    pub fn lower2(&self, i: usize, first: usize, second: usize) -> Option<(f64, usize)> {
        let (c1, k1) = self.lower(i, first)?;
        let (c2, k2) = self.lower(k1, second)?;
        Some((c1 * c2, k2))
    }
}

type Lowered = Option<(f64, usize)>;

/// `c₁ c₂` from signed squares `sign(c) c²`.
pub(crate) fn coef_product(a: f64, b: f64) -> f64 {
    let p = a * b;
    p.signum() * p.abs().sqrt()
}

/// Occupation-space raising on unbounded occupation pairs, used for basis
/// expansion. Returns `None` when Pauli exclusion kills the state.
fn raise(statistics: Statistics, (na, nb): (usize, usize), mode: usize) -> Option<(f64, (usize, usize))> {
    match (statistics, mode) {
        (Statistics::Bose, 0) => Some((((na + 1) as f64).sqrt(), (na + 1, nb))),
        (Statistics::Bose, _) => Some((((nb + 1) as f64).sqrt(), (na, nb + 1))),
        (Statistics::Fermi, 0) if na == 0 => Some((1.0, (1, nb))),
        (Statistics::Fermi, 1) if nb == 0 => {
            let s = if na % 2 == 1 { -1.0 } else { 1.0 };
            Some((s, (na, 1)))
        }
        _ => None,
    }
}

/// Expansion of `|n, m>` of `source` into occupation states of the other basis.
fn expand_number_state(
    statistics: Statistics,
    source: Basis,
    n: usize,
    m: usize,
) -> BTreeMap<(usize, usize), Complex64> {
    let t = source.creation_transform();
    let mut ket: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
    ket.insert((0, 0), Complex64::new(1.0, 0.0));
    // (a†_a)^n (a†_b)^m |0>: the b operators act first.
    let ops = std::iter::repeat_n(1, m).chain(std::iter::repeat_n(0, n));
    for s in ops {
        let mut next = BTreeMap::new();
        for (&occ, &amp) in &ket {
            for (target, &coef) in t[s].iter().enumerate() {
                if let Some((c, occ2)) = raise(statistics, occ, target) {
                    *next.entry(occ2).or_insert(ZERO) += amp * coef * c;
                }
            }
        }
        ket = next;
    }
    let norm = (ln_factorial(n) + ln_factorial(m)).mul_add(-0.5, 0.0).exp();
    ket.values_mut().for_each(|v| *v *= norm);
    ket.retain(|_, v| v.norm() > 0.0);
    ket
}

pub(crate) fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// A two-mode density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    statistics: Statistics,
    cutoff: usize,
    basis: Basis,
    matrix: Vec<Complex64>,
}

/// First- and second-order normally-ordered correlators.
///
/// `second[p][pp][qq][q] = <a†_p a†_pp a_qq a_q>`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorSet {
    pub statistics: Statistics,
    pub first: [[Complex64; 2]; 2],
    pub second: [[[[Complex64; 2]; 2]; 2]; 2],
}

impl CorrelatorSet {
    /// `<N>` as the trace of the first-order tensor.
    pub fn mean_number(&self) -> f64 {
        self.first[0][0].re + self.first[1][1].re
    }

    /// `<:N^2:> = Σ_{p,p'} <a†_p a†_p' a_p' a_p>`.
    pub fn pair_number(&self) -> f64 {
        let mut s = 0.0;
        for p in 0..2 {
            for pp in 0..2 {
                s += self.second[p][pp][pp][p].re;
            }
        }
        s
    }
}

impl QuantumState {
    /// Wraps and validates a dense matrix: dimension, Hermiticity, unit
    /// trace, positivity and the fermionic cutoff.
    pub fn from_matrix(statistics: Statistics, cutoff: usize, basis: Basis, matrix: Vec<Complex64>) -> Result<Self> {
        let state = QuantumState {
            statistics,
            cutoff,
            basis,
            matrix,
        };
        state.validate()?;
        Ok(state)
    }

    fn from_parts(statistics: Statistics, cutoff: usize, basis: Basis, matrix: Vec<Complex64>) -> Self {
        QuantumState {
            statistics,
            cutoff,
            basis,
            matrix,
        }
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.space().dim()
    }

    pub(crate) fn space(&self) -> FockSpace {
        FockSpace {
            statistics: self.statistics,
            cutoff: self.cutoff,
        }
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    /// `<n_a', n_b'| rho |n_a, n_b>`, zero outside the truncated space.
    pub fn element(&self, bra: (usize, usize), ket: (usize, usize)) -> Complex64 {
        let c = self.cutoff;
        if bra.0 > c || bra.1 > c || ket.0 > c || ket.1 > c {
            return ZERO;
        }
        let s = self.space();
        self.matrix[s.index(bra.0, bra.1) * self.dim() + s.index(ket.0, ket.1)]
    }

    pub fn trace(&self) -> Complex64 {
        let d = self.dim();
        (0..d).map(|i| self.matrix[i * d + i]).sum()
    }

    /// Probability of the occupation pair `(n_a, n_b)`.
    pub fn probability(&self, na: usize, nb: usize) -> f64 {
        self.element((na, nb), (na, nb)).re
    }

    /// Marginal occupation distribution of mode 0 or 1.
    pub fn marginal(&self, mode: usize) -> Vec<f64> {
        let s = self.space();
        let mut p = vec![0.0; self.cutoff + 1];
        for i in 0..self.dim() {
            let (na, nb) = s.occupation(i);
            p[if mode == 0 { na } else { nb }] += self.matrix[i * self.dim() + i].re;
        }
        p
    }

    pub fn mean_number(&self) -> f64 {
        let s = self.space();
        (0..self.dim())
            .map(|i| {
                let (na, nb) = s.occupation(i);
                (na + nb) as f64 * self.matrix[i * self.dim() + i].re
            })
            .sum()
    }

    /// Largest deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.matrix[i * d + j] - self.matrix[j * d + i].conj()).norm());
            }
        }
        worst
    }

    /// Checks the state invariants. Positivity is tested by a Cholesky
    /// factorization of `rho + 1e-12 I`.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.matrix.len() != d * d {
            return Err(Error::InvalidState(format!(
                "matrix has {} entries, expected {}",
                self.matrix.len(),
                d * d
            )));
        }
        if self.statistics == Statistics::Fermi && self.cutoff != 1 {
            return Err(Error::InvalidState(format!(
                "fermionic states need cutoff 1, got {}",
                self.cutoff
            )));
        }
        if self.matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite matrix entry".into()));
        }
        let herm = self.hermiticity_error();
        if herm > 1e-12 {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).norm() > 1e-10 {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        // real embedding [[A, -B], [B, A]] of A + iB has the same spectrum, doubled
        let shifted = DMatrix::<f64>::from_fn(2 * d, 2 * d, |i, j| {
            let (bi, bj) = (i / d, j / d);
            let (ii, jj) = (i % d, j % d);
            let z = 0.5 * (self.matrix[ii * d + jj] + self.matrix[jj * d + ii].conj());
            let v = match (bi, bj) {
                (0, 0) | (1, 1) => z.re,
                (0, 1) => -z.im,
                _ => z.im,
            };
            if i == j {
                v + 1e-12
            } else {
                v
            }
        });
        if shifted.cholesky().is_none() {
            return Err(Error::InvalidState("not positive semidefinite".into()));
        }
        Ok(())
    }

    /// Normally-ordered correlators by exact ladder algebra on the truncated
    /// basis. Annihilators never leave the space, so no truncation enters.
    pub fn correlators(&self) -> CorrelatorSet {
        let s = self.space();
        let d = self.dim();
        let low1: [Vec<Lowered>; 2] = [0, 1].map(|q| (0..d).map(|i| s.lower(i, q)).collect());
        // low2[q][qq][i] = a_qq a_q |i>
        let low2: [[Vec<Lowered>; 2]; 2] =
            [0, 1].map(|q| [0, 1].map(|qq| (0..d).map(|i| s.lower2(i, q, qq)).collect()));

        let mut first = [[ZERO; 2]; 2];
        let mut second = [[[[ZERO; 2]; 2]; 2]; 2];
        for i in 0..d {
            for j in 0..d {
                // tr(rho A) = Σ_ij rho_ij <j|A|i>
                let rho = self.matrix[i * d + j];
                if rho == ZERO {
                    continue;
                }
                for p in 0..2 {
                    let Some((cp, kp)) = low1[p][j] else { continue };
                    for q in 0..2 {
                        if let Some((cq, kq)) = low1[q][i] {
                            if kp == kq {
                                first[p][q] += rho * coef_product(cp, cq);
                            }
                        }
                    }
                }
                for p in 0..2 {
                    for pp in 0..2 {
                        // <a_pp a_p j| = bra side of a†_p a†_pp
                        let Some((cb, kb)) = low2[p][pp][j] else { continue };
                        for q in 0..2 {
                            for qq in 0..2 {
                                if let Some((ck, kk)) = low2[q][qq][i] {
                                    if kb == kk {
                                        second[p][pp][qq][q] += rho * coef_product(cb, ck);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        CorrelatorSet {
            statistics: self.statistics,
            first,
            second,
        }
    }

    /// Re-expresses the state in the other mode basis.
    ///
    /// The transform preserves total particle number; the per-mode cutoff
    /// grows to the largest total occupation present so no amplitude is lost.
    pub fn change_basis(&self) -> Result<QuantumState> {
        let s = self.space();
        let d = self.dim();
        let support: Vec<usize> = (0..d).filter(|&i| self.matrix[i * d + i].re > 0.0).collect();
        let max_total = support
            .iter()
            .map(|&i| {
                let (a, b) = s.occupation(i);
                a + b
            })
            .max()
            .unwrap_or(0);
        let new_cutoff = match self.statistics {
            Statistics::Fermi => 1,
            Statistics::Bose => self.cutoff.max(max_total),
        };
        if new_cutoff > MAX_CUTOFF {
            return Err(Error::CutoffOverflow {
                required: new_cutoff,
                limit: MAX_CUTOFF,
            });
        }
        let target = FockSpace {
            statistics: self.statistics,
            cutoff: new_cutoff,
        };
        let columns = self.unitary_columns(&target);
        let nd = target.dim();
        let mut out = vec![ZERO; nd * nd];
        for &i in &support {
            for &j in &support {
                let rho = self.matrix[i * d + j];
                if rho == ZERO {
                    continue;
                }
                for &(k, uki) in &columns[i] {
                    let left = uki * rho;
                    for &(l, ulj) in &columns[j] {
                        out[k * nd + l] += left * ulj.conj();
                    }
                }
            }
        }
        Ok(QuantumState::from_parts(
            self.statistics,
            new_cutoff,
            self.basis.other(),
            out,
        ))
    }

    // Column i of the basis-change unitary as (target index, amplitude) pairs.
    fn unitary_columns(&self, target: &FockSpace) -> Vec<Vec<(usize, Complex64)>> {
        let s = self.space();
        (0..self.dim())
            .map(|i| {
                let (n, m) = s.occupation(i);
                if n.max(m) > target.cutoff && self.statistics == Statistics::Fermi {
                    return Vec::new();
                }
                expand_number_state(self.statistics, self.basis, n, m)
                    .into_iter()
                    .filter(|((a, b), _)| *a <= target.cutoff && *b <= target.cutoff)
                    .map(|((a, b), v)| (target.index(a, b), v))
                    .collect()
            })
            .collect()
    }

    /// Projects onto a smaller per-mode cutoff without renormalizing.
    pub fn truncated(&self, cutoff: usize) -> QuantumState {
        let s = self.space();
        let t = FockSpace {
            statistics: self.statistics,
            cutoff,
        };
        let nd = t.dim();
        let mut m = vec![ZERO; nd * nd];
        for k in 0..nd {
            let (a, b) = t.occupation(k);
            for l in 0..nd {
                let (c, e) = t.occupation(l);
                if a.max(b).max(c).max(e) <= self.cutoff {
                    m[k * nd + l] = self.matrix[s.index(a, b) * self.dim() + s.index(c, e)];
                }
            }
        }
        QuantumState::from_parts(self.statistics, cutoff, self.basis, m)
    }

    /// Largest entrywise difference, comparing over the larger of the two
    /// truncated spaces. Statistics and basis must agree.
    pub fn max_abs_diff(&self, other: &QuantumState) -> f64 {
        if self.statistics != other.statistics || self.basis != other.basis {
            return f64::INFINITY;
        }
        let c = self.cutoff.max(other.cutoff);
        let a = self.truncated(c);
        let b = other.truncated(c);
        a.matrix
            .iter()
            .zip(&b.matrix)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&StateDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: StateDocument = serde_json::from_str(text)?;
        doc.into_state()
    }
}

/// JSON form of a [`QuantumState`]: the dense matrix as rows of `[re, im]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateDocument {
    pub statistics: Statistics,
    pub cutoff: usize,
    pub basis: Basis,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl From<&QuantumState> for StateDocument {
    fn from(s: &QuantumState) -> Self {
        let d = s.dim();
        StateDocument {
            statistics: s.statistics,
            cutoff: s.cutoff,
            basis: s.basis,
            matrix: (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| {
                            let z = s.matrix[i * d + j];
                            [z.re, z.im]
                        })
                        .collect()
                })
                .collect(),
        }
    }
}

impl StateDocument {
    pub fn into_state(self) -> Result<QuantumState> {
        let matrix = self
            .matrix
            .into_iter()
            .flatten()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        QuantumState::from_matrix(self.statistics, self.cutoff, self.basis, matrix)
    }
}

/// A two-mode pure state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    pub statistics: Statistics,
    pub cutoff: usize,
    pub basis: Basis,
    pub amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn number_state(n: usize, m: usize, statistics: Statistics, basis: Basis) -> Result<Self> {
        check_pauli(statistics, n, m)?;
        let cutoff = match statistics {
            Statistics::Fermi => 1,
            Statistics::Bose => n.max(m),
        };
        let s = FockSpace { statistics, cutoff };
        let mut amplitudes = vec![ZERO; s.dim()];
        amplitudes[s.index(n, m)] = Complex64::new(1.0, 0.0);
        Ok(PureState {
            statistics,
            cutoff,
            basis,
            amplitudes,
        })
    }

    pub fn amplitude(&self, na: usize, nb: usize) -> Complex64 {
        if na > self.cutoff || nb > self.cutoff {
            return ZERO;
        }
        let s = FockSpace {
            statistics: self.statistics,
            cutoff: self.cutoff,
        };
        self.amplitudes[s.index(na, nb)]
    }

    pub fn density(&self) -> QuantumState {
        let d = self.amplitudes.len();
        let mut m = vec![ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                m[i * d + j] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        QuantumState::from_parts(self.statistics, self.cutoff, self.basis, m)
    }

    pub fn change_basis(&self) -> Result<PureState> {
        let s = FockSpace {
            statistics: self.statistics,
            cutoff: self.cutoff,
        };
        let max_total = (0..s.dim())
            .filter(|&i| self.amplitudes[i] != ZERO)
            .map(|i| {
                let (a, b) = s.occupation(i);
                a + b
            })
            .max()
            .unwrap_or(0);
        let cutoff = match self.statistics {
            Statistics::Fermi => 1,
            Statistics::Bose => self.cutoff.max(max_total),
        };
        if cutoff > MAX_CUTOFF {
            return Err(Error::CutoffOverflow {
                required: cutoff,
                limit: MAX_CUTOFF,
            });
        }
        let t = FockSpace {
            statistics: self.statistics,
            cutoff,
        };
        let mut out = vec![ZERO; t.dim()];
        for i in 0..s.dim() {
            let c = self.amplitudes[i];
            if c == ZERO {
                continue;
            }
            let (n, m) = s.occupation(i);
            for ((a, b), v) in expand_number_state(self.statistics, self.basis, n, m) {
                out[t.index(a, b)] += c * v;
            }
        }
        Ok(PureState {
            statistics: self.statistics,
            cutoff,
            basis: self.basis.other(),
            amplitudes: out,
        })
    }
}

fn check_pauli(statistics: Statistics, n: usize, m: usize) -> Result<()> {
    if statistics == Statistics::Fermi {
        if n > 1 {
            return Err(Error::PauliViolation {
                mode: 'a',
                occupation: n,
            });
        }
        if m > 1 {
            return Err(Error::PauliViolation {
                mode: 'b',
                occupation: m,
            });
        }
    }
    Ok(())
}

/// Product number state `|n, m>`.
pub fn make_fock(n: usize, m: usize, statistics: Statistics, basis: Basis) -> Result<QuantumState> {
    Ok(PureState::number_state(n, m, statistics, basis)?.density())
}

// Truncated single-mode density matrices are (cutoff+1)^2, row major.
fn product_state(cutoff: usize, basis: Basis, ra: &[Complex64], rb: &[Complex64]) -> QuantumState {
    let n1 = cutoff + 1;
    let s = FockSpace {
        statistics: Statistics::Bose,
        cutoff,
    };
    let d = s.dim();
    let mut m = vec![ZERO; d * d];
    for na in 0..n1 {
        for nb in 0..n1 {
            let i = s.index(na, nb);
            for ma in 0..n1 {
                let a = ra[na * n1 + ma];
                if a == ZERO {
                    continue;
                }
                for mb in 0..n1 {
                    m[i * d + s.index(ma, mb)] = a * rb[nb * n1 + mb];
                }
            }
        }
    }
    let mut state = QuantumState::from_parts(Statistics::Bose, cutoff, basis, m);
    let tr = state.trace().re;
    state.matrix.iter_mut().for_each(|z| *z /= tr);
    state
}

fn truncation_check(cutoff: usize, tail: f64, required: impl FnOnce() -> usize) -> Result<()> {
    if tail > TAIL_TOLERANCE {
        Err(Error::Truncation {
            cutoff,
            tail,
            required: required(),
        })
    } else {
        Ok(())
    }
}

fn smallest_cutoff(tail_at: impl Fn(usize) -> f64) -> usize {
    (0..=4 * MAX_CUTOFF)
        .find(|&c| tail_at(c) <= TAIL_TOLERANCE)
        .unwrap_or(usize::MAX)
}

fn two_mode_tail(ta: f64, tb: f64) -> f64 {
    ta + tb - ta * tb
}

/// Poisson amplitudes `e^{-|α|²/2} α^n / √(n!)` for `n <= cutoff`.
fn coherent_amplitudes(alpha: Complex64, cutoff: usize) -> Vec<Complex64> {
    let r = alpha.norm();
    (0..=cutoff)
        .map(|n| {
            if r == 0.0 {
                return if n == 0 { Complex64::new(1.0, 0.0) } else { ZERO };
            }
            let mag = (-0.5 * r * r + n as f64 * r.ln() - 0.5 * ln_factorial(n)).exp();
            Complex64::from_polar(mag, n as f64 * alpha.arg())
        })
        .collect()
}

/// Poisson tail mass beyond `cutoff`.
pub fn poisson_tail(mean: f64, cutoff: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let mut tail = 0.0;
    let mut n = cutoff + 1;
    loop {
        let term = (-mean + n as f64 * mean.ln() - ln_factorial(n)).exp();
        tail += term;
        if (n as f64 > mean && term < 1e-18 * tail.max(1e-300)) || n > cutoff + 2000 {
            break;
        }
        n += 1;
    }
    tail
}

/// Geometric tail `τ^{cutoff+1}` with `τ = n̄/(1+n̄)`.
pub fn thermal_tail(nbar: f64, cutoff: usize) -> f64 {
    (nbar / (1.0 + nbar)).powi(cutoff as i32 + 1)
}

fn pure_single_mode(amps: &[Complex64]) -> Vec<Complex64> {
    let n = amps.len();
    let mut m = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = amps[i] * amps[j].conj();
        }
    }
    m
}

/// Product of coherent states `|α_a>|α_b>`, truncated and renormalized.
pub fn make_coherent(alpha_a: Complex64, alpha_b: Complex64, cutoff: usize, basis: Basis) -> Result<QuantumState> {
    let tail_at = |c| two_mode_tail(poisson_tail(alpha_a.norm_sqr(), c), poisson_tail(alpha_b.norm_sqr(), c));
    truncation_check(cutoff, tail_at(cutoff), || smallest_cutoff(tail_at))?;
    let ra = pure_single_mode(&coherent_amplitudes(alpha_a, cutoff));
    let rb = pure_single_mode(&coherent_amplitudes(alpha_b, cutoff));
    Ok(product_state(cutoff, basis, &ra, &rb))
}

fn thermal_single_mode(nbar: f64, cutoff: usize) -> Vec<Complex64> {
    let n1 = cutoff + 1;
    let tau = nbar / (1.0 + nbar);
    let mut m = vec![ZERO; n1 * n1];
    for n in 0..n1 {
        m[n * n1 + n] = Complex64::new((1.0 - tau) * tau.powi(n as i32), 0.0);
    }
    m
}

/// Product of thermal states with mean occupations `n̄_a`, `n̄_b`.
pub fn make_thermal(nbar_a: f64, nbar_b: f64, cutoff: usize, basis: Basis) -> Result<QuantumState> {
    if !(nbar_a >= 0.0 && nbar_b >= 0.0) {
        return Err(Error::InvalidState("thermal occupations must be non-negative".into()));
    }
    let tail_at = |c| two_mode_tail(thermal_tail(nbar_a, c), thermal_tail(nbar_b, c));
    truncation_check(cutoff, tail_at(cutoff), || smallest_cutoff(tail_at))?;
    Ok(product_state(
        cutoff,
        basis,
        &thermal_single_mode(nbar_a, cutoff),
        &thermal_single_mode(nbar_b, cutoff),
    ))
}

/// `<m|D(α)|k>` from the normally ordered displacement
/// `e^{-|α|²/2} e^{α a†} e^{-α* a}`; the intermediate sum is finite, so the
/// element is exact.
fn displacement_element(alpha: Complex64, m: usize, k: usize) -> Complex64 {
    let r2 = alpha.norm_sqr();
    let lm = ln_factorial(m);
    let lk = ln_factorial(k);
    let mut acc = ZERO;
    for j in 0..=m.min(k) {
        let log_mag = 0.5 * (lm + lk) - ln_factorial(m - j) - ln_factorial(k - j) - ln_factorial(j);
        acc += alpha.powu((m - j) as u32) * (-alpha.conj()).powu((k - j) as u32) * log_mag.exp();
    }
    acc * (-0.5 * r2).exp()
}

// Displaced thermal single-mode matrix truncated at `cutoff`, before
// renormalization, plus its missing mass.
fn displaced_thermal_single_mode(alpha: Complex64, nbar: f64, cutoff: usize) -> (Vec<Complex64>, f64) {
    let n1 = cutoff + 1;
    let tau = nbar / (1.0 + nbar);
    // thermal components beyond k_max carry < 1e-16
    let k_max = if tau == 0.0 {
        0
    } else {
        ((1e-16f64.ln() / tau.ln()).ceil() as usize).max(cutoff)
    };
    let weights: Vec<f64> = (0..=k_max).map(|k| (1.0 - tau) * tau.powi(k as i32)).collect();
    let disp: Vec<Vec<Complex64>> = (0..n1)
        .map(|m| (0..=k_max).map(|k| displacement_element(alpha, m, k)).collect())
        .collect();
    let mut rho = vec![ZERO; n1 * n1];
    for m in 0..n1 {
        for n in 0..n1 {
            rho[m * n1 + n] = weights
                .iter()
                .enumerate()
                .map(|(k, w)| disp[m][k] * disp[n][k].conj() * *w)
                .sum();
        }
    }
    let kept: f64 = (0..n1).map(|m| rho[m * n1 + m].re).sum();
    (rho, (1.0 - kept).max(0.0))
}

/// Displaced thermal state per mode: thermal occupation `n̄` shared by both
/// modes, displaced by `α_a` and `α_b`. Reduces to [`make_coherent`] at
/// `n̄ = 0` and to [`make_thermal`] at zero displacement.
pub fn make_cothermal(
    alpha_a: Complex64,
    alpha_b: Complex64,
    nbar: f64,
    cutoff: usize,
    basis: Basis,
) -> Result<QuantumState> {
    if nbar.is_nan() || nbar < 0.0 {
        return Err(Error::InvalidState("thermal occupation must be non-negative".into()));
    }
    let tail_at = |c| {
        two_mode_tail(
            displaced_thermal_single_mode(alpha_a, nbar, c).1,
            displaced_thermal_single_mode(alpha_b, nbar, c).1,
        )
    };
    let (ra, ta) = displaced_thermal_single_mode(alpha_a, nbar, cutoff);
    let (rb, tb) = displaced_thermal_single_mode(alpha_b, nbar, cutoff);
    truncation_check(cutoff, two_mode_tail(ta, tb), || smallest_cutoff(tail_at))?;
    Ok(product_state(cutoff, basis, &ra, &rb))
}

/// Smallest cutoff meeting the tail tolerance for a coherent product.
pub fn coherent_cutoff(alpha_a: Complex64, alpha_b: Complex64) -> usize {
    smallest_cutoff(|c| two_mode_tail(poisson_tail(alpha_a.norm_sqr(), c), poisson_tail(alpha_b.norm_sqr(), c)))
}

pub fn thermal_cutoff(nbar_a: f64, nbar_b: f64) -> usize {
    smallest_cutoff(|c| two_mode_tail(thermal_tail(nbar_a, c), thermal_tail(nbar_b, c)))
}

pub fn cothermal_cutoff(alpha_a: Complex64, alpha_b: Complex64, nbar: f64) -> usize {
    // cheap lower bound first, then the exact tail
    let start = coherent_cutoff(alpha_a, alpha_b).max(thermal_cutoff(nbar, nbar));
    (start..=4 * MAX_CUTOFF)
        .find(|&c| {
            two_mode_tail(
                displaced_thermal_single_mode(alpha_a, nbar, c).1,
                displaced_thermal_single_mode(alpha_b, nbar, c).1,
            ) <= TAIL_TOLERANCE
        })
        .unwrap_or(usize::MAX)
}
