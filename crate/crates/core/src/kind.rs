//! Named state families with their physical parameters.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    coherent_cutoff, cothermal_cutoff, make_coherent, make_cothermal, make_fock, make_thermal, thermal_cutoff, Basis,
    QuantumState, Statistics,
};

/// A state family and its parameters.
///
/// Fock and thermal kinds live in the vortex basis, coherent and cothermal
/// amplitudes refer to the dipole basis. `Noon` is the bosonic dipole pair
/// `|1_→, 1_↑>`, which is a two-particle NOON state of the vortices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StateKind {
    FermiFock,
    BoseFock {
        n: usize,
        m: usize,
    },
    Coherent {
        alpha_x: Complex64,
        alpha_y: Complex64,
    },
    Thermal {
        nbar_a: f64,
        nbar_b: f64,
    },
    Cothermal {
        alpha_x: Complex64,
        alpha_y: Complex64,
        nbar: f64,
    },
    Noon,
}

impl StateKind {
    /// Coherent state with the same one-particle density as the vortex pair.
    pub fn unit_coherent() -> Self {
        StateKind::Coherent {
            alpha_x: Complex64::new(0.0, 1.0),
            alpha_y: Complex64::new(1.0, 0.0),
        }
    }

    /// Cothermal state with unit mean occupation per dipole mode, split
    /// evenly between displacement and thermal noise.
    pub fn unit_cothermal() -> Self {
        let a = 0.5f64.sqrt();
        StateKind::Cothermal {
            alpha_x: Complex64::new(0.0, a),
            alpha_y: Complex64::new(a, 0.0),
            nbar: 0.5,
        }
    }

    /// The states shipped with the tool, at their reference parameters.
    pub fn shipped() -> Vec<StateKind> {
        vec![
            StateKind::FermiFock,
            StateKind::BoseFock { n: 1, m: 1 },
            StateKind::BoseFock { n: 2, m: 0 },
            StateKind::unit_coherent(),
            StateKind::Thermal {
                nbar_a: 1.0,
                nbar_b: 1.0,
            },
            StateKind::unit_cothermal(),
            StateKind::Noon,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            StateKind::FermiFock => "fermi-fock",
            StateKind::BoseFock { .. } => "bose-fock",
            StateKind::Coherent { .. } => "coherent",
            StateKind::Thermal { .. } => "thermal",
            StateKind::Cothermal { .. } => "cothermal",
            StateKind::Noon => "noon",
        }
    }

    pub fn statistics(&self) -> Statistics {
        match self {
            StateKind::FermiFock => Statistics::Fermi,
            _ => Statistics::Bose,
        }
    }

    pub fn basis(&self) -> Basis {
        match self {
            StateKind::Coherent { .. } | StateKind::Cothermal { .. } => Basis::Dipole,
            _ => Basis::Vortex,
        }
    }

    /// Definite particle number.
    pub fn is_fock_sector(&self) -> bool {
        matches!(
            self,
            StateKind::FermiFock | StateKind::BoseFock { .. } | StateKind::Noon
        )
    }

    /// Provenance flags attached to outputs for this kind.
    pub fn flags(&self) -> Vec<&'static str> {
        match self {
            StateKind::Cothermal { .. } => vec!["supplement-approximated"],
            _ => Vec::new(),
        }
    }

    /// Smallest per-mode cutoff meeting the truncation tolerance.
    pub fn cutoff(&self) -> usize {
        match *self {
            StateKind::FermiFock => 1,
            StateKind::BoseFock { n, m } => n.max(m),
            StateKind::Coherent { alpha_x, alpha_y } => coherent_cutoff(alpha_x, alpha_y),
            StateKind::Thermal { nbar_a, nbar_b } => thermal_cutoff(nbar_a, nbar_b),
            StateKind::Cothermal { alpha_x, alpha_y, nbar } => cothermal_cutoff(alpha_x, alpha_y, nbar),
            StateKind::Noon => 2,
        }
    }

    /// Density matrix at the smallest admissible cutoff.
    pub fn build(&self) -> Result<QuantumState> {
        self.build_with_cutoff(self.cutoff())
    }

    pub fn build_with_cutoff(&self, cutoff: usize) -> Result<QuantumState> {
        match *self {
            StateKind::FermiFock => make_fock(1, 1, Statistics::Fermi, Basis::Vortex),
            StateKind::BoseFock { n, m } => {
                let s = make_fock(n, m, Statistics::Bose, Basis::Vortex)?;
                Ok(if cutoff > s.cutoff() { s.truncated(cutoff) } else { s })
            }
            StateKind::Coherent { alpha_x, alpha_y } => make_coherent(alpha_x, alpha_y, cutoff, Basis::Dipole),
            StateKind::Thermal { nbar_a, nbar_b } => make_thermal(nbar_a, nbar_b, cutoff, Basis::Vortex),
            StateKind::Cothermal { alpha_x, alpha_y, nbar } => {
                make_cothermal(alpha_x, alpha_y, nbar, cutoff, Basis::Dipole)
            }
            StateKind::Noon => make_fock(1, 1, Statistics::Bose, Basis::Dipole)?.change_basis(),
        }
    }

    /// Checks parameter ranges without building the state.
    pub fn validate(&self) -> Result<()> {
        match *self {
            StateKind::Thermal { nbar_a, nbar_b } if nbar_a.is_nan() || nbar_b.is_nan() || nbar_a.min(nbar_b) < 0.0 => {
                Err(Error::InvalidState("thermal occupations must be non-negative".into()))
            }
            StateKind::Cothermal { nbar, .. } if nbar.is_nan() || nbar < 0.0 => {
                Err(Error::InvalidState("thermal occupation must be non-negative".into()))
            }
            StateKind::Coherent { alpha_x, alpha_y } | StateKind::Cothermal { alpha_x, alpha_y, .. }
                if !(alpha_x.norm().is_finite() && alpha_y.norm().is_finite()) =>
            {
                Err(Error::InvalidState("non-finite coherent amplitude".into()))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for StateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateKind::FermiFock => write!(f, "fermi-fock(1,1)"),
            StateKind::BoseFock { n, m } => write!(f, "bose-fock({n},{m})"),
            StateKind::Coherent { alpha_x, alpha_y } => write!(f, "coherent({alpha_x},{alpha_y})"),
            StateKind::Thermal { nbar_a, nbar_b } => write!(f, "thermal({nbar_a},{nbar_b})"),
            StateKind::Cothermal { alpha_x, alpha_y, nbar } => {
                write!(f, "cothermal({alpha_x},{alpha_y};{nbar})")
            }
            StateKind::Noon => write!(f, "noon"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_states_build() {
        for k in StateKind::shipped() {
            let s = k.build().unwrap();
            s.validate().unwrap();
            assert_eq!(s.statistics(), k.statistics());
        }
    }

    #[test]
    fn unit_means() {
        for k in [StateKind::unit_coherent(), StateKind::unit_cothermal()] {
            let s = k.build().unwrap();
            assert!((s.mean_number() - 2.0).abs() < 1e-10, "{k}");
        }
        let s = StateKind::Noon.build().unwrap();
        assert_eq!(s.basis(), Basis::Vortex);
        assert!((s.mean_number() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn serde_tagging() {
        let k = StateKind::BoseFock { n: 2, m: 0 };
        let j = serde_json::to_string(&k).unwrap();
        assert_eq!(j, r#"{"kind":"bose-fock","n":2,"m":0}"#);
        assert_eq!(serde_json::from_str::<StateKind>(&j).unwrap(), k);
    }
}
