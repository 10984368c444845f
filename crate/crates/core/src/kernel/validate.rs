use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::{Context, OpId, Opcode, Operand, Pe};
use crate::arch::ArchParams;

/// A structural problem found in a context. Violations are data: a context
/// can have many and validation never fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    OutOfBounds { op: OpId, row: usize, col: usize },
    ReadBusOverflow { row: usize, cycle: u32, loads: usize, capacity: usize },
    WriteBusOverflow { row: usize, cycle: u32, stores: usize, capacity: usize },
    PeConflict { row: usize, col: usize, cycle: u32, ops: Vec<OpId> },
    DependenceOrder { producer: OpId, consumer: OpId },
    IterationOrder { producer: OpId, consumer: OpId },
    UnresolvedOperand { op: OpId, row: usize, col: usize },
    BadOperands { op: OpId, reason: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfBounds { op, row, col } => {
                write!(f, "op {op} at PE ({row},{col}) is outside the array")
            }
            Violation::ReadBusOverflow { row, cycle, loads, capacity } => write!(
                f,
                "row {row} cycle {cycle}: {loads} loads on {capacity} read bus(es)"
            ),
            Violation::WriteBusOverflow { row, cycle, stores, capacity } => write!(
                f,
                "row {row} cycle {cycle}: {stores} stores on {capacity} write bus(es)"
            ),
            Violation::PeConflict { row, col, cycle, ops } => write!(
                f,
                "PE ({row},{col}) issues {} ops in cycle {cycle}",
                ops.len()
            ),
            Violation::DependenceOrder { producer, consumer } => {
                write!(f, "op {consumer} is not issued after its producer {producer}")
            }
            Violation::IterationOrder { producer, consumer } => write!(
                f,
                "op {consumer} has an earlier iteration than its producer {producer}"
            ),
            Violation::UnresolvedOperand { op, row, col } => write!(
                f,
                "op {op} reads PE ({row},{col}) without depending on an op there"
            ),
            Violation::BadOperands { op, reason } => write!(f, "op {op}: {reason}"),
        }
    }
}

/// Checks bounds, bus capacity, PE exclusivity, dependence order and operand
/// wiring against `arch`. Returns every violation found (empty when legal).
pub fn validate_context(ctx: &Context, arch: &ArchParams) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut loads: BTreeMap<(u32, usize), usize> = BTreeMap::new();
    let mut stores: BTreeMap<(u32, usize), usize> = BTreeMap::new();
    let mut busy: BTreeMap<(u32, Pe), Vec<OpId>> = BTreeMap::new();

    for op in ctx.ops() {
        if op.row >= arch.n_rows || op.col >= arch.m_cols {
            out.push(Violation::OutOfBounds {
                op: op.id,
                row: op.row,
                col: op.col,
            });
        }
        match op.opcode {
            Opcode::Load => *loads.entry((op.cycle, op.row)).or_default() += 1,
            Opcode::Store => *stores.entry((op.cycle, op.row)).or_default() += 1,
            Opcode::Nop => {}
            _ => {}
        }
        if op.opcode != Opcode::Nop {
            busy.entry((op.cycle, op.pe())).or_default().push(op.id);
        }
        for dep in &op.deps {
            let producer = ctx.op(*dep).expect("deps resolved at construction");
            if producer.cycle >= op.cycle {
                out.push(Violation::DependenceOrder {
                    producer: producer.id,
                    consumer: op.id,
                });
            }
            if producer.iteration > op.iteration {
                out.push(Violation::IterationOrder {
                    producer: producer.id,
                    consumer: op.id,
                });
            }
        }
        check_operands(ctx, op, &mut out);
    }

    for (&(cycle, row), &n) in &loads {
        if n > arch.read_buses_per_row {
            out.push(Violation::ReadBusOverflow {
                row,
                cycle,
                loads: n,
                capacity: arch.read_buses_per_row,
            });
        }
    }
    for (&(cycle, row), &n) in &stores {
        if n > arch.write_buses_per_row {
            out.push(Violation::WriteBusOverflow {
                row,
                cycle,
                stores: n,
                capacity: arch.write_buses_per_row,
            });
        }
    }
    for ((cycle, pe), ops) in busy {
        if ops.len() > 1 {
            out.push(Violation::PeConflict {
                row: pe.row,
                col: pe.col,
                cycle,
                ops,
            });
        }
    }
    out
}

fn check_operands(ctx: &Context, op: &super::Operation, out: &mut Vec<Violation>) {
    let mems = op
        .operands
        .iter()
        .filter(|o| matches!(o, Operand::Mem(_)))
        .count();
    let bad = |reason: &str| Violation::BadOperands {
        op: op.id,
        reason: reason.to_string(),
    };
    match op.opcode {
        Opcode::Load => {
            if mems == 0 || mems != op.operands.len() {
                out.push(bad("load takes one or more memory operands only"));
            }
        }
        Opcode::Store => {
            if mems != 1 || op.operands.len() != 2 {
                out.push(bad("store takes one source and one memory destination"));
            }
        }
        _ => {
            if mems > 0 {
                out.push(bad("only load and store may address memory"));
            }
        }
    }
    for operand in &op.operands {
        if let Operand::Reg(row, col) = *operand {
            let wired = op.deps.iter().any(|d| {
                ctx.op(*d)
                    .is_some_and(|p| p.row == row && p.col == col)
            });
            if !wired {
                out.push(Violation::UnresolvedOperand {
                    op: op.id,
                    row,
                    col,
                });
            }
        }
    }
}
