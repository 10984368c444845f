//! Architecture template parameters.
//!
//! An [`ArchParams`] describes an `n x m` mesh of PEs together with the
//! resource sharing and pipelining (RSP) choice for one critical functional
//! unit. The base variant keeps the unit inside every PE; the shared variant
//! moves it out into `shr` instances per row and `shc` per column, optionally
//! split into pipeline stages.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::Opcode;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArchError {
    #[error("array dimensions must be positive, got {n_rows}x{m_cols}")]
    EmptyArray { n_rows: usize, m_cols: usize },
    #[error("shared configuration needs at least one instance (shr + shc >= 1)")]
    NoSharedInstances,
    #[error("pipeline depth must be at least 1")]
    ZeroStages,
    #[error("bus counts must be positive (read {read}, write {write})")]
    ZeroBuses { read: usize, write: usize },
    #[error("data width must be in 1..=32 bits, got {0}")]
    BadWidth(u32),
}

/// The shared (and possibly pipelined) critical resource.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SharedResource {
    #[serde(default = "default_resource_kind")]
    pub resource_kind: Opcode,
    /// Instances per row.
    pub shr: usize,
    /// Instances per column.
    pub shc: usize,
    /// Pipeline depth, 1 means unpipelined.
    #[serde(default = "one")]
    pub stages: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Sharing {
    /// Critical resource inside every PE.
    Base,
    Shared(SharedResource),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawArch", into = "RawArch")]
pub struct ArchParams {
    pub n_rows: usize,
    pub m_cols: usize,
    pub sharing: Sharing,
    pub read_buses_per_row: usize,
    pub write_buses_per_row: usize,
    pub data_width_bits: u32,
}

#[derive(Serialize, Deserialize)]
struct RawArch {
    n_rows: usize,
    m_cols: usize,
    #[serde(default = "base_sharing")]
    sharing: Sharing,
    #[serde(default = "two")]
    read_buses_per_row: usize,
    #[serde(default = "one")]
    write_buses_per_row: usize,
    #[serde(default = "sixteen")]
    data_width_bits: u32,
}

fn default_resource_kind() -> Opcode {
    Opcode::Mult
}
fn base_sharing() -> Sharing {
    Sharing::Base
}
fn one() -> usize {
    1
}
fn two() -> usize {
    2
}
fn sixteen() -> u32 {
    16
}

impl TryFrom<RawArch> for ArchParams {
    type Error = ArchError;

    fn try_from(raw: RawArch) -> Result<Self, Self::Error> {
        let arch = ArchParams {
            n_rows: raw.n_rows,
            m_cols: raw.m_cols,
            sharing: raw.sharing,
            read_buses_per_row: raw.read_buses_per_row,
            write_buses_per_row: raw.write_buses_per_row,
            data_width_bits: raw.data_width_bits,
        };
        arch.validate()?;
        Ok(arch)
    }
}

impl From<ArchParams> for RawArch {
    fn from(a: ArchParams) -> Self {
        RawArch {
            n_rows: a.n_rows,
            m_cols: a.m_cols,
            sharing: a.sharing,
            read_buses_per_row: a.read_buses_per_row,
            write_buses_per_row: a.write_buses_per_row,
            data_width_bits: a.data_width_bits,
        }
    }
}

impl ArchParams {
    /// Base array with default buses (2 read, 1 write) and 16-bit data.
    pub fn base(n_rows: usize, m_cols: usize) -> Self {
        ArchParams {
            n_rows,
            m_cols,
            sharing: Sharing::Base,
            read_buses_per_row: 2,
            write_buses_per_row: 1,
            data_width_bits: 16,
        }
    }

    /// Shared multipliers with default buses and width.
    pub fn shared(n_rows: usize, m_cols: usize, shr: usize, shc: usize, stages: usize) -> Self {
        ArchParams {
            sharing: Sharing::Shared(SharedResource {
                resource_kind: Opcode::Mult,
                shr,
                shc,
                stages,
            }),
            ..Self::base(n_rows, m_cols)
        }
    }

    pub fn validate(&self) -> Result<(), ArchError> {
        if self.n_rows == 0 || self.m_cols == 0 {
            return Err(ArchError::EmptyArray {
                n_rows: self.n_rows,
                m_cols: self.m_cols,
            });
        }
        if self.read_buses_per_row == 0 || self.write_buses_per_row == 0 {
            return Err(ArchError::ZeroBuses {
                read: self.read_buses_per_row,
                write: self.write_buses_per_row,
            });
        }
        if self.data_width_bits == 0 || self.data_width_bits > 32 {
            return Err(ArchError::BadWidth(self.data_width_bits));
        }
        if let Sharing::Shared(s) = self.sharing {
            if s.stages == 0 {
                return Err(ArchError::ZeroStages);
            }
            if s.shr + s.shc == 0 {
                return Err(ArchError::NoSharedInstances);
            }
        }
        Ok(())
    }

    pub fn shared_resource(&self) -> Option<&SharedResource> {
        match &self.sharing {
            Sharing::Base => None,
            Sharing::Shared(s) => Some(s),
        }
    }

    /// Pipeline depth of the critical resource (1 for the base array).
    pub fn stages(&self) -> usize {
        self.shared_resource().map_or(1, |s| s.stages)
    }

    /// Same array with the critical resource put back into every PE.
    pub fn as_base(&self) -> Self {
        ArchParams {
            sharing: Sharing::Base,
            ..*self
        }
    }

    pub fn variant_key(&self) -> VariantKey {
        match self.sharing {
            Sharing::Base => VariantKey::Base,
            Sharing::Shared(s) if s.stages <= 1 => VariantKey::Rs {
                shr: s.shr,
                shc: s.shc,
            },
            Sharing::Shared(s) => VariantKey::Rsp {
                shr: s.shr,
                shc: s.shc,
                stages: s.stages,
            },
        }
    }

    /// Whether `opcode` executes on the shared resource under this arch.
    pub fn uses_shared(&self, opcode: Opcode) -> bool {
        self.shared_resource()
            .is_some_and(|s| s.resource_kind == opcode)
    }

    /// Issue-to-result latency of `opcode` in cycles.
    pub fn latency(&self, opcode: Opcode) -> u32 {
        if self.uses_shared(opcode) {
            self.stages() as u32
        } else {
            1
        }
    }
}

/// Key into the measured array-delay table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VariantKey {
    Base,
    Rs { shr: usize, shc: usize },
    Rsp { shr: usize, shc: usize, stages: usize },
}

/// The four sharing layouts evaluated on the 8x8 prototype, in design order.
pub const REFERENCE_DESIGNS: [(usize, usize); 4] = [(1, 0), (2, 0), (2, 1), (2, 2)];

fn design_number(shr: usize, shc: usize) -> Option<usize> {
    REFERENCE_DESIGNS
        .iter()
        .position(|&d| d == (shr, shc))
        .map(|i| i + 1)
}

impl fmt::Display for VariantKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            VariantKey::Base => write!(f, "Base"),
            VariantKey::Rs { shr, shc } => match design_number(shr, shc) {
                Some(k) => write!(f, "RS#{k}"),
                None => write!(f, "RS[{shr},{shc}]"),
            },
            VariantKey::Rsp { shr, shc, stages } => match design_number(shr, shc) {
                Some(k) if stages == 2 => write!(f, "RSP#{k}"),
                _ => write!(f, "RSP[{shr},{shc}]x{stages}"),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arch_json_defaults() {
        let a: ArchParams = serde_json::from_str(r#"{"n_rows": 8, "m_cols": 8}"#).unwrap();
        assert_eq!(a, ArchParams::base(8, 8));
        let s: ArchParams = serde_json::from_str(
            r#"{"n_rows": 4, "m_cols": 4, "sharing": {"kind": "shared", "shr": 1, "shc": 0, "stages": 2}}"#,
        )
        .unwrap();
        assert_eq!(s, ArchParams::shared(4, 4, 1, 0, 2));
        let back: ArchParams = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_invalid_params() {
        let err = serde_json::from_str::<ArchParams>(
            r#"{"n_rows": 4, "m_cols": 4, "sharing": {"kind": "shared", "shr": 0, "shc": 0}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("at least one instance"), "{err}");
        assert_eq!(
            ArchParams::base(0, 3).validate(),
            Err(ArchError::EmptyArray { n_rows: 0, m_cols: 3 })
        );
        assert_eq!(
            ArchParams::shared(4, 4, 1, 0, 0).validate(),
            Err(ArchError::ZeroStages)
        );
    }

    #[test]
    fn variant_labels() {
        assert_eq!(ArchParams::base(8, 8).variant_key().to_string(), "Base");
        assert_eq!(ArchParams::shared(8, 8, 2, 1, 1).variant_key().to_string(), "RS#3");
        assert_eq!(ArchParams::shared(8, 8, 1, 0, 2).variant_key().to_string(), "RSP#1");
        assert_eq!(ArchParams::shared(8, 8, 1, 1, 1).variant_key().to_string(), "RS[1,1]");
        assert_eq!(
            ArchParams::shared(8, 8, 1, 0, 3).variant_key().to_string(),
            "RSP[1,0]x3"
        );
    }
}
