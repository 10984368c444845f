use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{wrap, SimError};
use crate::kernel::{MatmulLayout, MATMUL_CONSTANT};

/// A named row-major block of words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub base_address: u64,
    pub rows: usize,
    pub cols: usize,
}

impl Region {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn address(&self, row: usize, col: usize) -> u64 {
        self.base_address + (row * self.cols + col) as u64
    }
}

/// Word-addressed data memory plus the named constants of the context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryImage {
    pub width_bits: u32,
    words: BTreeMap<u64, i64>,
    pub regions: Vec<Region>,
    pub constants: BTreeMap<String, i64>,
}

#[derive(Serialize, Deserialize)]
struct RegionFile {
    name: String,
    base_address: u64,
    rows: usize,
    cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<i64>>,
}

#[derive(Serialize, Deserialize)]
struct MemoryFile {
    width_bits: u32,
    #[serde(default)]
    regions: Vec<RegionFile>,
    #[serde(default)]
    constants: BTreeMap<String, i64>,
}

impl MemoryImage {
    pub fn new(width_bits: u32) -> Self {
        MemoryImage {
            width_bits,
            words: BTreeMap::new(),
            regions: Vec::new(),
            constants: BTreeMap::new(),
        }
    }

    pub fn read(&self, address: u64) -> Option<i64> {
        self.words.get(&address).copied()
    }

    /// Writes `value` wrapped to the memory width.
    pub fn write(&mut self, address: u64, value: i64) {
        self.words.insert(address, wrap(value as i128, self.width_bits) as i64);
    }

    pub fn words(&self) -> &BTreeMap<u64, i64> {
        &self.words
    }

    pub fn region(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.name == name)
    }

    /// Declares a region and, when given, fills it row-major.
    pub fn add_region(
        &mut self,
        name: &str,
        base_address: u64,
        rows: usize,
        cols: usize,
        values: Option<&[i64]>,
    ) -> Result<(), SimError> {
        let region = Region {
            name: name.to_string(),
            base_address,
            rows,
            cols,
        };
        if self.region(name).is_some() {
            return Err(SimError::Memory(format!("duplicate region `{name}`")));
        }
        if let Some(v) = values {
            if v.len() != region.len() {
                return Err(SimError::Memory(format!(
                    "region `{name}` is {rows}x{cols} but has {} values",
                    v.len()
                )));
            }
            for (i, &x) in v.iter().enumerate() {
                self.write(base_address + i as u64, x);
            }
        }
        self.regions.push(region);
        Ok(())
    }

    /// Region contents as rows; `None` for never-written words.
    pub fn region_rows(&self, name: &str) -> Option<Vec<Vec<Option<i64>>>> {
        let r = self.region(name)?;
        Some(
            (0..r.rows)
                .map(|i| (0..r.cols).map(|j| self.read(r.address(i, j))).collect())
                .collect(),
        )
    }

    /// Region contents with every word written, or `None`.
    pub fn region_matrix(&self, name: &str) -> Option<Vec<Vec<i64>>> {
        self.region_rows(name)?
            .into_iter()
            .map(|row| row.into_iter().collect::<Option<Vec<_>>>())
            .collect()
    }

    pub fn from_json_str(document: &str) -> Result<Self, SimError> {
        let file: MemoryFile =
            serde_json::from_str(document).map_err(|e| SimError::Memory(e.to_string()))?;
        if !(1..=32).contains(&file.width_bits) {
            return Err(SimError::Memory(format!(
                "width_bits must be in 1..=32, got {}",
                file.width_bits
            )));
        }
        let mut mem = MemoryImage::new(file.width_bits);
        for r in &file.regions {
            mem.add_region(&r.name, r.base_address, r.rows, r.cols, r.values.as_deref())?;
        }
        mem.constants = file.constants;
        Ok(mem)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Memory(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Regions whose words are all written carry their values.
    pub fn to_json(&self) -> String {
        let file = MemoryFile {
            width_bits: self.width_bits,
            regions: self
                .regions
                .iter()
                .map(|r| RegionFile {
                    name: r.name.clone(),
                    base_address: r.base_address,
                    rows: r.rows,
                    cols: r.cols,
                    values: self
                        .region_matrix(&r.name)
                        .map(|m| m.into_iter().flatten().collect()),
                })
                .collect(),
            constants: self.constants.clone(),
        };
        serde_json::to_string_pretty(&file).expect("memory image serializes")
    }
}

/// Memory for a matmul context: `X`, `Y` filled, `Z` declared, `C` bound.
pub fn matmul_memory(
    x: &[Vec<i64>],
    y: &[Vec<i64>],
    c: i64,
    width_bits: u32,
    layout: MatmulLayout,
) -> Result<MemoryImage, SimError> {
    let n = x.len();
    if y.len() != n || x.iter().chain(y).any(|row| row.len() != n) {
        return Err(SimError::Dimension(format!(
            "X and Y must both be {n}x{n}"
        )));
    }
    let flat = |m: &[Vec<i64>]| m.iter().flatten().copied().collect::<Vec<_>>();
    let mut mem = MemoryImage::new(width_bits);
    mem.add_region("X", layout.x_base, n, n, Some(&flat(x)))?;
    mem.add_region("Y", layout.y_base, n, n, Some(&flat(y)))?;
    mem.add_region("Z", layout.z_base, n, n, None)?;
    mem.constants.insert(MATMUL_CONSTANT.to_string(), c);
    Ok(mem)
}
