//! Loop-pipelined configuration contexts.
//!
//! A [`Context`] lists every operation the array issues: which PE, in which
//! cycle, for which loop iteration, reading which sources and depending on
//! which earlier operations.

pub(crate) mod io;
mod matmul;
mod validate;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{parse_context, serialize_context};
pub use matmul::{
    generate_matmul_context, generate_matmul_context_with, matmul_slot_count, MatmulLayout,
    MATMUL_CONSTANT,
};
pub use validate::{validate_context, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Opcode {
    Load,
    Store,
    Mult,
    Add,
    Sub,
    Shift,
    Abs,
    Nop,
}

impl Opcode {
    pub const ALL: [Opcode; 8] = [
        Opcode::Load,
        Opcode::Store,
        Opcode::Mult,
        Opcode::Add,
        Opcode::Sub,
        Opcode::Shift,
        Opcode::Abs,
        Opcode::Nop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Opcode::Load => "load",
            Opcode::Store => "store",
            Opcode::Mult => "mult",
            Opcode::Add => "add",
            Opcode::Sub => "sub",
            Opcode::Shift => "shift",
            Opcode::Abs => "abs",
            Opcode::Nop => "nop",
        }
    }

    /// Short mnemonic used in schedule dumps.
    pub fn symbol(self) -> &'static str {
        match self {
            Opcode::Load => "Ld",
            Opcode::Store => "St",
            Opcode::Mult => "*",
            Opcode::Add => "+",
            Opcode::Sub => "-",
            Opcode::Shift => "<<",
            Opcode::Abs => "|.|",
            Opcode::Nop => "",
        }
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OpId(pub u32);

impl fmt::Display for OpId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Zero-based PE coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pe {
    pub row: usize,
    pub col: usize,
}

impl Pe {
    pub fn new(row: usize, col: usize) -> Self {
        Pe { row, col }
    }
}

impl fmt::Display for Pe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Immediate operand: a literal, or a constant named in the configuration
/// cache and bound by the memory image at simulation time.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Immediate {
    Value(i64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operand {
    /// Output of PE `(row, col)`, resolved through the op's dependence on it.
    Reg(usize, usize),
    /// Memory word; a source for loads and the destination for stores.
    Mem(u64),
    Imm(Immediate),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Operation {
    pub id: OpId,
    pub opcode: Opcode,
    pub row: usize,
    pub col: usize,
    /// 1-based issue cycle.
    pub cycle: u32,
    pub iteration: u32,
    #[serde(default)]
    pub operands: Vec<Operand>,
    #[serde(default)]
    pub deps: Vec<OpId>,
}

impl Operation {
    pub fn pe(&self) -> Pe {
        Pe::new(self.row, self.col)
    }

    /// Deterministic priority: earlier iterations first, then row, column.
    pub fn priority_key(&self) -> (u32, usize, usize, OpId) {
        (self.iteration, self.row, self.col, self.id)
    }
}

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("ops[{index}] (id {id}): {message}")]
    MalformedOp {
        index: usize,
        id: String,
        message: String,
    },
    #[error("context: {0}")]
    Malformed(String),
    #[error("duplicate op id {0}")]
    DuplicateId(OpId),
    #[error("op {op} depends on {missing}, which is not in the context")]
    DanglingDep { op: OpId, missing: OpId },
    #[error("matrix order must be a power of two >= 1, got {0}")]
    BadOrder(usize),
    #[error("pipeline depth must be >= 1")]
    BadStages,
    #[error("context JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// A configuration context for one kernel loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Context {
    pub n_rows: usize,
    pub m_cols: usize,
    pub iteration_count: u32,
    pub critical_opcodes: BTreeSet<Opcode>,
    ops: Vec<Operation>,
    index: HashMap<OpId, usize>,
}

impl Context {
    /// Builds a context, resolving ids. Rejects duplicate and dangling ids.
    pub fn new(
        n_rows: usize,
        m_cols: usize,
        iteration_count: u32,
        critical_opcodes: BTreeSet<Opcode>,
        ops: Vec<Operation>,
    ) -> Result<Self, KernelError> {
        let mut index = HashMap::with_capacity(ops.len());
        for (i, op) in ops.iter().enumerate() {
            if index.insert(op.id, i).is_some() {
                return Err(KernelError::DuplicateId(op.id));
            }
        }
        for op in &ops {
            if let Some(missing) = op.deps.iter().find(|d| !index.contains_key(d)) {
                return Err(KernelError::DanglingDep {
                    op: op.id,
                    missing: *missing,
                });
            }
        }
        Ok(Context {
            n_rows,
            m_cols,
            iteration_count,
            critical_opcodes,
            ops,
            index,
        })
    }

    pub fn default_critical() -> BTreeSet<Opcode> {
        BTreeSet::from([Opcode::Mult])
    }

    pub fn ops(&self) -> &[Operation] {
        &self.ops
    }

    pub fn op(&self, id: OpId) -> Option<&Operation> {
        self.index.get(&id).map(|&i| &self.ops[i])
    }

    pub fn position(&self, id: OpId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Last issue cycle (0 for an empty context).
    pub fn length_cycles(&self) -> u32 {
        self.ops.iter().map(|o| o.cycle).max().unwrap_or(0)
    }

    pub fn is_critical(&self, opcode: Opcode) -> bool {
        self.critical_opcodes.contains(&opcode)
    }

    /// Same ops with issue cycles replaced (ids, deps and order unchanged).
    pub fn with_cycles(&self, cycles: &[u32]) -> Context {
        assert_eq!(cycles.len(), self.ops.len());
        let mut out = self.clone();
        for (op, &c) in out.ops.iter_mut().zip(cycles) {
            op.cycle = c;
        }
        out
    }

    /// Ops grouped by issue cycle.
    pub fn by_cycle(&self) -> BTreeMap<u32, Vec<&Operation>> {
        let mut map: BTreeMap<u32, Vec<&Operation>> = BTreeMap::new();
        for op in &self.ops {
            map.entry(op.cycle).or_default().push(op);
        }
        map
    }

    /// Per-column activity dump, one symbol per cycle `1..=cycles`.
    ///
    /// Ops of the shared/pipelined resource kind occupy `stages` cycles and
    /// are printed `1*`, `2*`, ... when `stages > 1`. Empty cells mean the
    /// column issued nothing but nops.
    pub fn column_pattern(&self, col: usize, stages: u32, cycles: u32) -> Vec<String> {
        let mut cells = vec![String::new(); cycles as usize];
        for op in self.ops.iter().filter(|o| o.col == col && o.opcode != Opcode::Nop) {
            let pipelined = stages > 1 && self.is_critical(op.opcode);
            let span = if pipelined { stages } else { 1 };
            for s in 0..span {
                let c = op.cycle + s;
                if c == 0 || c > cycles {
                    continue;
                }
                let cell = &mut cells[(c - 1) as usize];
                if cell.is_empty() {
                    *cell = if pipelined {
                        format!("{}{}", s + 1, op.opcode.symbol())
                    } else {
                        op.opcode.symbol().to_string()
                    };
                }
            }
        }
        cells
    }

    /// Tab-separated schedule table in the style of a loop-pipelining chart.
    pub fn pattern_table(&self, stages: u32, cycles: u32) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=cycles).map(|c| c.to_string()).collect();
        out.push('\t');
        out.push_str(&header.join("\t"));
        out.push('\n');
        for col in 0..self.m_cols {
            let cells = self.column_pattern(col, stages, cycles);
            out.push_str(&format!("col#{}\t{}", col + 1, cells.join("\t")));
            out.push('\n');
        }
        out
    }
}

/// Maximum number of critical-opcode issues in any single cycle.
pub fn max_critical_ops_per_cycle(ctx: &Context) -> usize {
    let mut per_cycle: HashMap<u32, usize> = HashMap::new();
    for op in ctx.ops().iter().filter(|o| ctx.is_critical(o.opcode)) {
        *per_cycle.entry(op.cycle).or_default() += 1;
    }
    per_cycle.values().copied().max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(id: u32, opcode: Opcode, row: usize, col: usize, cycle: u32, deps: &[u32]) -> Operation {
        Operation {
            id: OpId(id),
            opcode,
            row,
            col,
            cycle,
            iteration: 0,
            operands: vec![],
            deps: deps.iter().map(|&d| OpId(d)).collect(),
        }
    }

    #[test]
    fn rejects_duplicate_and_dangling_ids() {
        let dup = Context::new(
            1,
            1,
            1,
            Context::default_critical(),
            vec![op(1, Opcode::Nop, 0, 0, 1, &[]), op(1, Opcode::Nop, 0, 0, 2, &[])],
        );
        assert!(matches!(dup, Err(KernelError::DuplicateId(OpId(1)))));
        let dangling = Context::new(
            1,
            1,
            1,
            Context::default_critical(),
            vec![op(1, Opcode::Nop, 0, 0, 2, &[999])],
        );
        assert!(matches!(
            dangling,
            Err(KernelError::DanglingDep { op: OpId(1), missing: OpId(999) })
        ));
    }

    #[test]
    fn no_critical_ops_counts_zero() {
        let ctx = Context::new(
            2,
            2,
            1,
            Context::default_critical(),
            vec![
                op(1, Opcode::Abs, 0, 0, 1, &[]),
                op(2, Opcode::Add, 0, 1, 2, &[1]),
            ],
        )
        .unwrap();
        assert_eq!(max_critical_ops_per_cycle(&ctx), 0);
        assert_eq!(ctx.length_cycles(), 2);
    }

    #[test]
    fn operand_json_encoding() {
        let ops = vec![
            Operand::Reg(1, 2),
            Operand::Mem(40),
            Operand::Imm(Immediate::Value(-3)),
            Operand::Imm(Immediate::Named("C".into())),
        ];
        let s = serde_json::to_string(&ops).unwrap();
        assert_eq!(s, r#"[{"reg":[1,2]},{"mem":40},{"imm":-3},{"imm":"C"}]"#);
        let back: Vec<Operand> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, ops);
    }
}
