//! Hardware cost and delay model.
//!
//! Area of an RSP design is estimated from pre-synthesized component areas:
//!
//! ```text
//! n*m*(sh_pe + reg' + sw(shr,shc)) + sh_res*(n*shr + m*shc)  <  n*m*pe
//! ```
//!
//! where `reg'` is the pipeline-register area, charged only when the shared
//! resource is pipelined. Array delay is not modeled; it is looked up from
//! measured synthesis results per architecture variant.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arch::{ArchParams, Sharing, VariantKey};
use crate::scalar::Scalar;

/// Cost table shipped with the crate (PE and array synthesis figures).
pub const DEFAULT_COSTS_JSON: &str = include_str!("../data/default_costs.json");

#[derive(Debug, Error)]
pub enum CostError {
    #[error("no bus-switch area for (shr={shr}, shc={shc}) and the analytic fallback is disabled")]
    MissingSwitchArea { shr: usize, shc: usize },
    #[error("no measured array delay for {key}; known variants: {}", known.join(", "))]
    MissingDelay { key: VariantKey, known: Vec<String> },
    #[error("base area must be positive, got {0}")]
    NonPositiveBase(f64),
    #[error("invalid cost table: {0}")]
    Invalid(String),
    #[error("cost table JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Per-component areas (slices) and delays (ns).
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable<T> {
    pub pe_area: T,
    /// PE with the critical resource removed.
    pub sh_pe_area: T,
    /// Pipeline-operand registers added to each PE.
    pub reg_area: T,
    pub sh_res_area: T,
    pub sw_area: BTreeMap<(usize, usize), T>,
    pub sw_area_fallback: bool,
    pub measured_array_delay: BTreeMap<VariantKey, T>,
    pub component_delays: BTreeMap<String, T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaEstimate<T> {
    pub estimated_slices: T,
    /// `n*m*pe_area`, the all-base array.
    pub base_slices: T,
    pub satisfies_constraint: bool,
}

// ---- file format ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostTableFile {
    pub pe_area: f64,
    pub sh_pe_area: f64,
    #[serde(default = "default_reg_area")]
    pub reg_area: f64,
    pub sh_res_area: f64,
    pub sw_area: Vec<SwAreaEntry>,
    #[serde(default)]
    pub sw_area_fallback: bool,
    pub measured_array_delay: Vec<DelayEntry>,
    #[serde(default)]
    pub component_delays: BTreeMap<String, f64>,
}

fn default_reg_area() -> f64 {
    13.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwAreaEntry {
    pub shr: usize,
    pub shc: usize,
    pub slices: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantTag {
    Base,
    Rs,
    Rsp,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DelayEntry {
    pub variant: VariantTag,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub shr: usize,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub shc: usize,
    /// Pipeline depth of an `rsp` entry, 2 when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<usize>,
    pub ns: f64,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

impl DelayEntry {
    fn key(&self) -> VariantKey {
        match self.variant {
            VariantTag::Base => VariantKey::Base,
            VariantTag::Rs => VariantKey::Rs {
                shr: self.shr,
                shc: self.shc,
            },
            VariantTag::Rsp => VariantKey::Rsp {
                shr: self.shr,
                shc: self.shc,
                stages: self.stages.unwrap_or(2),
            },
        }
    }

    fn from_key(key: VariantKey, ns: f64) -> Self {
        let (variant, shr, shc, stages) = match key {
            VariantKey::Base => (VariantTag::Base, 0, 0, None),
            VariantKey::Rs { shr, shc } => (VariantTag::Rs, shr, shc, None),
            VariantKey::Rsp { shr, shc, stages } => (VariantTag::Rsp, shr, shc, Some(stages)),
        };
        DelayEntry {
            variant,
            shr,
            shc,
            stages,
            ns,
        }
    }
}

impl<T: Scalar> CostTable<T> {
    /// The embedded default table.
    pub fn default_table() -> Self {
        Self::from_json_str(DEFAULT_COSTS_JSON).expect("embedded cost table is valid")
    }

    pub fn from_json_str(s: &str) -> Result<Self, CostError> {
        let file: CostTableFile = serde_json::from_str(s)?;
        Self::from_file(&file)
    }

    pub fn from_file(file: &CostTableFile) -> Result<Self, CostError> {
        let table = CostTable {
            pe_area: T::from_f64(file.pe_area),
            sh_pe_area: T::from_f64(file.sh_pe_area),
            reg_area: T::from_f64(file.reg_area),
            sh_res_area: T::from_f64(file.sh_res_area),
            sw_area: file
                .sw_area
                .iter()
                .map(|e| ((e.shr, e.shc), T::from_f64(e.slices)))
                .collect(),
            sw_area_fallback: file.sw_area_fallback,
            measured_array_delay: file
                .measured_array_delay
                .iter()
                .map(|e| (e.key(), T::from_f64(e.ns)))
                .collect(),
            component_delays: file
                .component_delays
                .iter()
                .map(|(k, v)| (k.clone(), T::from_f64(*v)))
                .collect(),
        };
        table.validate()?;
        Ok(table)
    }

    pub fn to_file(&self) -> CostTableFile {
        CostTableFile {
            pe_area: self.pe_area.to_f64(),
            sh_pe_area: self.sh_pe_area.to_f64(),
            reg_area: self.reg_area.to_f64(),
            sh_res_area: self.sh_res_area.to_f64(),
            sw_area: self
                .sw_area
                .iter()
                .map(|(&(shr, shc), v)| SwAreaEntry {
                    shr,
                    shc,
                    slices: v.to_f64(),
                })
                .collect(),
            sw_area_fallback: self.sw_area_fallback,
            measured_array_delay: self
                .measured_array_delay
                .iter()
                .map(|(k, v)| DelayEntry::from_key(*k, v.to_f64()))
                .collect(),
            component_delays: self
                .component_delays
                .iter()
                .map(|(k, v)| (k.clone(), v.to_f64()))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), CostError> {
        let zero = T::zero();
        let positive = |name: &str, v: T| {
            if v > zero {
                Ok(())
            } else {
                Err(CostError::Invalid(format!("{name} must be positive, got {v:?}")))
            }
        };
        positive("pe_area", self.pe_area)?;
        positive("sh_pe_area", self.sh_pe_area)?;
        positive("reg_area", self.reg_area)?;
        positive("sh_res_area", self.sh_res_area)?;
        for ((shr, shc), v) in &self.sw_area {
            positive(&format!("sw_area({shr},{shc})"), *v)?;
        }
        for (k, v) in &self.measured_array_delay {
            positive(&format!("measured_array_delay[{k}]"), *v)?;
        }
        for (k, v) in &self.component_delays {
            positive(&format!("component_delays[{k}]"), *v)?;
        }
        if self.sh_pe_area >= self.pe_area {
            return Err(CostError::Invalid(
                "sh_pe_area must be smaller than pe_area".into(),
            ));
        }
        Ok(())
    }

    /// Bus-switch area for a sharing layout.
    pub fn switch_area(&self, shr: usize, shc: usize) -> Result<T, CostError> {
        if let Some(v) = self.sw_area.get(&(shr, shc)) {
            return Ok(*v);
        }
        if self.sw_area_fallback {
            if let Some(v) = self.fitted_switch_area(shr, shc) {
                return Ok(v);
            }
        }
        Err(CostError::MissingSwitchArea { shr, shc })
    }

    /// Least-squares line through the tabulated switch areas against the
    /// number of extra shared ports `shr + shc - 1`.
    fn fitted_switch_area(&self, shr: usize, shc: usize) -> Option<T> {
        let points: Vec<(f64, f64)> = self
            .sw_area
            .iter()
            .map(|(&(r, c), v)| ((r + c) as f64 - 1.0, v.to_f64()))
            .collect();
        let x = (shr + shc) as f64 - 1.0;
        let n = points.len() as f64;
        match points.len() {
            0 => None,
            1 => Some(T::from_f64(points[0].1)),
            _ => {
                let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
                let my = points.iter().map(|p| p.1).sum::<f64>() / n;
                let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
                if sxx == 0.0 {
                    return Some(T::from_f64(my));
                }
                let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
                let slope = sxy / sxx;
                Some(T::from_f64((my + slope * (x - mx)).max(0.0)))
            }
        }
    }

    pub fn known_variants(&self) -> Vec<String> {
        self.measured_array_delay
            .keys()
            .map(|k| k.to_string())
            .collect()
    }
}

impl Default for CostTable<f64> {
    fn default() -> Self {
        Self::default_table()
    }
}

/// Estimates the array area of `arch` and checks it against the all-base array.
pub fn estimate_hw_cost<T: Scalar>(
    arch: &ArchParams,
    costs: &CostTable<T>,
) -> Result<AreaEstimate<T>, CostError> {
    let n = T::from_usize(arch.n_rows);
    let m = T::from_usize(arch.m_cols);
    let cells = n * m;
    let base_slices = cells * costs.pe_area;
    let estimated_slices = match arch.sharing {
        Sharing::Base => base_slices,
        Sharing::Shared(s) => {
            let reg = if s.stages > 1 {
                costs.reg_area
            } else {
                T::zero()
            };
            let sw = costs.switch_area(s.shr, s.shc)?;
            let shared = n * T::from_usize(s.shr) + m * T::from_usize(s.shc);
            cells * (costs.sh_pe_area + reg + sw) + costs.sh_res_area * shared
        }
    };
    Ok(AreaEstimate {
        estimated_slices,
        base_slices,
        satisfies_constraint: estimated_slices < base_slices,
    })
}

/// Strict area bound: the RSP array must be smaller than the base array.
pub fn check_cost_constraint<T: Scalar>(est: &AreaEstimate<T>) -> bool {
    est.estimated_slices < est.base_slices
}

/// Measured critical-path delay of the whole array for `arch`'s variant.
pub fn lookup_array_delay<T: Scalar>(
    arch: &ArchParams,
    costs: &CostTable<T>,
) -> Result<T, CostError> {
    let key = arch.variant_key();
    costs
        .measured_array_delay
        .get(&key)
        .copied()
        .ok_or_else(|| CostError::MissingDelay {
            key,
            known: costs.known_variants(),
        })
}

/// `100 * (base - candidate) / base`, unrounded.
pub fn area_reduction_ratio<T: Scalar>(base_slices: T, candidate_slices: T) -> Result<T, CostError> {
    if base_slices <= T::zero() {
        return Err(CostError::NonPositiveBase(base_slices.to_f64()));
    }
    Ok(T::hundred() * (base_slices - candidate_slices) / base_slices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::fmt2;
    use num_rational::Rational64;

    fn table() -> CostTable<f64> {
        CostTable::default_table()
    }

    #[test]
    fn single_row_sharing_area() {
        let est = estimate_hw_cost(&ArchParams::shared(8, 8, 1, 0, 1), &table()).unwrap();
        assert_eq!(est.estimated_slices, 35264.0);
        assert_eq!(est.base_slices, 58240.0);
        assert!(est.satisfies_constraint);
    }

    #[test]
    fn full_sharing_area() {
        let est = estimate_hw_cost(&ArchParams::shared(8, 8, 2, 2, 1), &table()).unwrap();
        assert_eq!(est.estimated_slices, 48960.0);
        assert!(check_cost_constraint(&est));
    }

    #[test]
    fn formula_values_for_all_reference_designs() {
        // 64*(489 + sw) + 416*8*(shr + shc), plus 64*13 when pipelined
        let expect = [35264.0, 40128.0, 44800.0, 48960.0];
        for (&(shr, shc), want) in crate::arch::REFERENCE_DESIGNS.iter().zip(expect) {
            let rs = estimate_hw_cost(&ArchParams::shared(8, 8, shr, shc, 1), &table()).unwrap();
            assert_eq!(rs.estimated_slices, want);
            let rsp = estimate_hw_cost(&ArchParams::shared(8, 8, shr, shc, 2), &table()).unwrap();
            assert_eq!(rsp.estimated_slices, want + 64.0 * 13.0);
            assert!(rs.satisfies_constraint && rsp.satisfies_constraint);
        }
    }

    #[test]
    fn base_fails_strict_bound() {
        let est = estimate_hw_cost(&ArchParams::base(8, 8), &table()).unwrap();
        assert_eq!(est.estimated_slices, 58240.0);
        assert!(!est.satisfies_constraint);
        assert!(!check_cost_constraint(&est));
    }

    #[test]
    fn constraint_is_strict() {
        let mk = |e: f64| AreaEstimate {
            estimated_slices: e,
            base_slices: 58240.0,
            satisfies_constraint: e < 58240.0,
        };
        assert!(check_cost_constraint(&mk(35264.0)));
        assert!(!check_cost_constraint(&mk(58240.0)));
        assert!(check_cost_constraint(&mk(48960.0)));
    }

    #[test]
    fn missing_switch_area() {
        let err = estimate_hw_cost(&ArchParams::shared(8, 8, 3, 0, 1), &table()).unwrap_err();
        assert!(matches!(err, CostError::MissingSwitchArea { shr: 3, shc: 0 }));
        assert!(err.to_string().contains("shr=3"));
    }

    #[test]
    fn switch_area_fallback_fits_table() {
        let mut t = table();
        t.sw_area_fallback = true;
        // fit over x = 0..3, y = 10, 34, 55, 68 -> 12.5 + 19.5 x
        assert_eq!(t.switch_area(1, 0).unwrap(), 10.0);
        assert!((t.switch_area(1, 1).unwrap() - 32.0).abs() < 1e-9);
        assert!((t.switch_area(3, 1).unwrap() - 71.0).abs() < 1e-9);
    }

    #[test]
    fn delay_lookup() {
        let t = table();
        assert_eq!(lookup_array_delay(&ArchParams::base(8, 8), &t).unwrap(), 26.0);
        assert_eq!(
            lookup_array_delay(&ArchParams::shared(8, 8, 1, 0, 1), &t).unwrap(),
            26.85
        );
        assert_eq!(
            lookup_array_delay(&ArchParams::shared(8, 8, 2, 2, 2), &t).unwrap(),
            18.83
        );
        let err = lookup_array_delay(&ArchParams::shared(8, 8, 1, 1, 2), &t).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("RSP[1,1]x2") && msg.contains("RS#1") && msg.contains("Base"), "{msg}");
    }

    #[test]
    fn reduction_ratio() {
        assert_eq!(fmt2(area_reduction_ratio(55739.0, 33249.0).unwrap()), "40.35");
        assert_eq!(area_reduction_ratio(55739.0, 55739.0).unwrap(), 0.0);
        assert_eq!(fmt2(area_reduction_ratio(55739.0, 32446.0).unwrap()), "41.79");
        assert!(matches!(
            area_reduction_ratio(0.0, 1.0),
            Err(CostError::NonPositiveBase(_))
        ));
    }

    #[test]
    fn exact_rational_estimate() {
        let t: CostTable<Rational64> = CostTable::default_table();
        let est = estimate_hw_cost(&ArchParams::shared(8, 8, 2, 2, 1), &t).unwrap();
        assert_eq!(est.estimated_slices, Rational64::from_integer(48960));
        let r = area_reduction_ratio(Rational64::from_integer(55739), Rational64::from_integer(55739))
            .unwrap();
        assert_eq!(r, Rational64::from_integer(0));
    }

    #[test]
    fn file_round_trip() {
        let t = table();
        let json = serde_json::to_string(&t.to_file()).unwrap();
        let back: CostTable<f64> = CostTable::from_json_str(&json).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_inverted_pe_areas() {
        let mut f = table().to_file();
        f.sh_pe_area = 1000.0;
        assert!(matches!(
            CostTable::<f64>::from_file(&f),
            Err(CostError::Invalid(_))
        ));
    }
}
