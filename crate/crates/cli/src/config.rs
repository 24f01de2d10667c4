use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use vortexcorr::fock::{Basis, QuantumState};
use vortexcorr::kind::StateKind;

use crate::error::CliError;

/// Output file kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format {other:?} (expected csv, json or svg)")),
        }
    }
}

/// A complex number written as `a+bi`, `bi`, `a` or `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexArg(pub Complex64);

impl fmt::Display for ComplexArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let z = self.0;
        write!(f, "{}{:+}i", z.re, z.im)
    }
}

fn parse_real(s: &str) -> Result<f64, String> {
    match s {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => s.parse::<f64>().map_err(|_| format!("bad number {s:?}")),
    }
}

impl FromStr for ComplexArg {
    type Err = String;
    fn from_str(raw: &str) -> Result<Self, String> {
        let s: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err("empty complex number".into());
        }
        let Some(body) = s.strip_suffix(['i', 'j']) else {
            return Ok(ComplexArg(Complex64::new(
                parse_real(&s).map_err(|e| format!("{e} in {raw:?}"))?,
                0.0,
            )));
        };
        // split at the last sign that is not part of an exponent
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = Some(k);
                break;
            }
        }
        let (re, im) = match split {
            Some(k) => (parse_real(&body[..k])?, parse_real(&body[k..])?),
            None => (0.0, parse_real(body)?),
        };
        if !(re.is_finite() && im.is_finite()) {
            return Err(format!("non-finite complex number {raw:?}"));
        }
        Ok(ComplexArg(Complex64::new(re, im)))
    }
}

impl Serialize for ComplexArg {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ComplexArg {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Real(f64),
            Text(String),
            Pair([f64; 2]),
        }
        match Raw::deserialize(d)? {
            Raw::Real(x) => Ok(ComplexArg(Complex64::new(x, 0.0))),
            Raw::Pair([re, im]) => Ok(ComplexArg(Complex64::new(re, im))),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Every run parameter. Unset fields fall back to per-command defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    /// fermi-fock | bose-fock | coherent | thermal | cothermal | noon
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    /// Occupation of the ⟲ vortex (Fock states)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Occupation of the ⟳ vortex (Fock states)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Dipole → amplitude, e.g. `1`, `i`, `0.5-0.5i`
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_x: Option<ComplexArg>,
    /// Dipole ↑ amplitude
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_y: Option<ComplexArg>,
    /// Mean occupation of the ⟲ vortex (thermal)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nbar_a: Option<f64>,
    /// Mean occupation of the ⟳ vortex (thermal)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nbar_b: Option<f64>,
    /// Thermal occupation per dipole mode (cothermal)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nbar: Option<f64>,
    /// Mode basis of the state handed to the engine: vortex | dipole
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<String>,
    /// Random seed (required by `frames`)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Number of frames
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Grid resolution: lattice points, table points or points per axis
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Histogram bins
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    /// Output directory
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Comma-separated subset of csv,json,svg
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<Format>>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f),)* }
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `flags` win over `self`.
    pub fn merged(self, flags: RunConfig) -> RunConfig {
        overlay!(
            self, flags, state, n, m, alpha_x, alpha_y, nbar_a, nbar_b, nbar, basis, seed, count, grid, bins, out,
            formats
        )
    }

    pub fn formats(&self) -> Vec<Format> {
        let mut f = self
            .formats
            .clone()
            .unwrap_or_else(|| vec![Format::Csv, Format::Json, Format::Svg]);
        f.sort();
        f.dedup();
        f
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats().contains(&f)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// SHA-256 of the parameters that determine the output (not the
    /// output location).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        c.formats = Some(self.formats());
        let text = serde_json::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn kind(&self) -> Result<StateKind, CliError> {
        let name = self
            .state
            .as_deref()
            .ok_or_else(|| CliError::Config("missing --state".into()))?;
        let alpha = |a: Option<ComplexArg>, d: Complex64| a.map(|z| z.0).unwrap_or(d);
        let unused = |what: &str, set: bool| {
            if set {
                Err(CliError::Config(format!("--{what} does not apply to --state {name}")))
            } else {
                Ok(())
            }
        };
        let fock_set = self.n.is_some() || self.m.is_some();
        let alpha_set = self.alpha_x.is_some() || self.alpha_y.is_some();
        let kind = match name {
            "fermi-fock" => {
                if self.n.unwrap_or(1) != 1 || self.m.unwrap_or(1) != 1 {
                    return Err(CliError::Config(
                        "fermi-fock needs n = m = 1: two modes hold at most one fermion each and the state must carry a pair".into(),
                    ));
                }
                StateKind::FermiFock
            }
            "bose-fock" => StateKind::BoseFock {
                n: self.n.unwrap_or(1),
                m: self.m.unwrap_or(1),
            },
            "coherent" => {
                unused("n/--m", fock_set)?;
                let StateKind::Coherent { alpha_x, alpha_y } = StateKind::unit_coherent() else {
                    unreachable!()
                };
                StateKind::Coherent {
                    alpha_x: alpha(self.alpha_x, alpha_x),
                    alpha_y: alpha(self.alpha_y, alpha_y),
                }
            }
            "thermal" => {
                unused("n/--m", fock_set)?;
                StateKind::Thermal {
                    nbar_a: self.nbar_a.unwrap_or(1.0),
                    nbar_b: self.nbar_b.unwrap_or(1.0),
                }
            }
            "cothermal" => {
                unused("n/--m", fock_set)?;
                let StateKind::Cothermal { alpha_x, alpha_y, nbar } = StateKind::unit_cothermal() else {
                    unreachable!()
                };
                StateKind::Cothermal {
                    alpha_x: alpha(self.alpha_x, alpha_x),
                    alpha_y: alpha(self.alpha_y, alpha_y),
                    nbar: self.nbar.unwrap_or(nbar),
                }
            }
            "noon" => {
                unused("n/--m", fock_set)?;
                StateKind::Noon
            }
            other => {
                return Err(CliError::Config(format!(
                    "unknown state {other:?}; expected fermi-fock, bose-fock, coherent, thermal, cothermal or noon"
                )))
            }
        };
        if !matches!(kind, StateKind::Coherent { .. } | StateKind::Cothermal { .. }) {
            unused("alpha-x/--alpha-y", alpha_set)?;
        }
        if !matches!(kind, StateKind::Thermal { .. }) {
            unused("nbar-a/--nbar-b", self.nbar_a.is_some() || self.nbar_b.is_some())?;
        }
        if !matches!(kind, StateKind::Cothermal { .. }) {
            unused("nbar", self.nbar.is_some())?;
        }
        kind.validate()?;
        Ok(kind)
    }

    pub fn basis(&self) -> Result<Option<Basis>, CliError> {
        match self.basis.as_deref() {
            None => Ok(None),
            Some("vortex") => Ok(Some(Basis::Vortex)),
            Some("dipole") => Ok(Some(Basis::Dipole)),
            Some(other) => Err(CliError::Config(format!(
                "unknown basis {other:?}; expected vortex or dipole"
            ))),
        }
    }

    /// Builds the state, rotated into `--basis` when that differs from the
    /// kind's own basis.
    pub fn state(&self) -> Result<(StateKind, QuantumState), CliError> {
        let kind = self.kind()?;
        let mut state = kind.build()?;
        if let Some(b) = self.basis()? {
            if b != state.basis() {
                state = state.change_basis()?;
            }
        }
        Ok((kind, state))
    }
}
