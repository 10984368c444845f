//! Cycle-level functional simulation of contexts.
//!
//! Values flow along dependence edges: a `reg(r, c)` operand reads the result
//! of the op's latest dependence issued on PE `(r, c)`. A load result is the
//! list of words it fetched; every other result is one word held in a
//! `2 * width` bit accumulator. Stores write the low `width` bits at the end
//! of their cycle.

mod memory;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::arch::{ArchError, ArchParams};
use crate::kernel::{Context, Immediate, OpId, Opcode, Operand, Operation, Pe};
use crate::schedule::{PoolConflict, RearrangedContext, ResourcePool};

pub use memory::{matmul_memory, MemoryImage, Region};

/// What went wrong in a faulting cycle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FaultKind {
    OutOfBounds,
    ReadBus { loads: usize, capacity: usize },
    WriteBus { stores: usize, capacity: usize },
    PeBusy { ops: Vec<OpId> },
    RetireCollision { ops: Vec<OpId> },
    Uninitialized { address: u64 },
    UnboundConstant { name: String },
    NotReady { producer: OpId, ready_cycle: u32 },
    UnresolvedOperand { row: usize, col: usize },
    BadOperands { reason: String },
    Pool(PoolConflict),
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultKind::OutOfBounds => f.write_str("PE outside the array"),
            FaultKind::ReadBus { loads, capacity } => {
                write!(f, "{loads} loads on {capacity} read bus(es)")
            }
            FaultKind::WriteBus { stores, capacity } => {
                write!(f, "{stores} stores on {capacity} write bus(es)")
            }
            FaultKind::PeBusy { ops } => write!(f, "ops {ops:?} issue together"),
            FaultKind::RetireCollision { ops } => write!(f, "ops {ops:?} retire together"),
            FaultKind::Uninitialized { address } => {
                write!(f, "read of uninitialized address {address}")
            }
            FaultKind::UnboundConstant { name } => write!(f, "constant `{name}` is not bound"),
            FaultKind::NotReady {
                producer,
                ready_cycle,
            } => write!(f, "result of {producer} is not ready until cycle {ready_cycle}"),
            FaultKind::UnresolvedOperand { row, col } => {
                write!(f, "no producer on PE ({row},{col})")
            }
            FaultKind::BadOperands { reason } => f.write_str(reason),
            FaultKind::Pool(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("fault at cycle {cycle}, PE {pe}{}: {kind}", op.map(|o| format!(", op {o}")).unwrap_or_default())]
    Fault {
        cycle: u32,
        pe: Pe,
        op: Option<OpId>,
        kind: FaultKind,
    },
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error("memory is {memory} bits wide but the array datapath is {arch}")]
    WidthMismatch { memory: u32, arch: u32 },
    #[error("memory image: {0}")]
    Memory(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Two's complement wrap of `v` to `bits` bits.
pub(crate) fn wrap(v: i128, bits: u32) -> i128 {
    let shift = 128 - bits;
    (v << shift) >> shift
}

fn fault(op: &Operation, kind: FaultKind) -> SimError {
    SimError::Fault {
        cycle: op.cycle,
        pe: op.pe(),
        op: Some(op.id),
        kind,
    }
}

/// Runs `rctx` on `arch` against `mem` and returns the final memory.
pub fn simulate(
    rctx: &RearrangedContext,
    arch: &ArchParams,
    mem: &MemoryImage,
) -> Result<MemoryImage, SimError> {
    arch.validate()?;
    if mem.width_bits != arch.data_width_bits {
        return Err(SimError::WidthMismatch {
            memory: mem.width_bits,
            arch: arch.data_width_bits,
        });
    }
    let ctx = &rctx.base;
    check_pool(rctx, arch)?;

    let width = arch.data_width_bits;
    let wide = 2 * width;
    let mut out = mem.clone();
    let mut values: HashMap<OpId, Vec<i128>> = HashMap::new();
    let mut retiring: BTreeMap<(u32, Pe), Vec<OpId>> = BTreeMap::new();

    for (cycle, ops) in ctx.by_cycle() {
        check_cycle(cycle, &ops, arch)?;
        let mut pending_stores = Vec::new();
        for op in ops {
            if op.opcode == Opcode::Nop {
                continue;
            }
            match op.opcode {
                Opcode::Load => {
                    let mut words = Vec::with_capacity(op.operands.len());
                    for operand in &op.operands {
                        let Operand::Mem(address) = *operand else {
                            return Err(fault(op, bad("load reads memory operands only")));
                        };
                        let w = out
                            .read(address)
                            .ok_or(fault(op, FaultKind::Uninitialized { address }))?;
                        words.push(w as i128);
                    }
                    values.insert(op.id, words);
                }
                Opcode::Store => {
                    let (src, address) = store_operands(op)?;
                    let v = match src {
                        Operand::Mem(_) => unreachable!("checked by store_operands"),
                        other => {
                            let words = read_operand(ctx, arch, op, other, &values, &out)?;
                            single(op, &words)?
                        }
                    };
                    pending_stores.push((address, wrap(v, width) as i64));
                }
                _ => {
                    let mut args = Vec::new();
                    for operand in &op.operands {
                        args.extend(read_operand(ctx, arch, op, operand, &values, &out)?);
                    }
                    let v = compute(op, &args)?;
                    values.insert(op.id, vec![wrap(v, wide)]);
                }
            }
            let retire = op.cycle + arch.latency(op.opcode) - 1;
            let slot = retiring.entry((retire, op.pe())).or_default();
            slot.push(op.id);
            if slot.len() > 1 {
                let ops = slot.clone();
                return Err(fault(op, FaultKind::RetireCollision { ops }));
            }
        }
        for (address, v) in pending_stores {
            out.write(address, v);
        }
    }
    Ok(out)
}

fn bad(reason: &str) -> FaultKind {
    FaultKind::BadOperands {
        reason: reason.to_string(),
    }
}

fn check_pool(rctx: &RearrangedContext, arch: &ArchParams) -> Result<(), SimError> {
    if arch.shared_resource().is_none() {
        return Ok(());
    }
    if let Err(conflicts) = ResourcePool::check(arch, &rctx.base, &rctx.assignments) {
        let first = conflicts.into_iter().next().expect("non-empty on error");
        let op_id = match &first {
            PoolConflict::Unassigned { op }
            | PoolConflict::UnknownInstance { op, .. }
            | PoolConflict::OutOfScope { op, .. }
            | PoolConflict::NotShared { op } => *op,
            PoolConflict::Occupied { ops, .. } => ops.1,
        };
        let op = rctx.base.op(op_id).expect("conflict names a context op");
        return Err(fault(op, FaultKind::Pool(first)));
    }
    Ok(())
}

fn check_cycle(cycle: u32, ops: &[&Operation], arch: &ArchParams) -> Result<(), SimError> {
    let mut loads: BTreeMap<usize, usize> = BTreeMap::new();
    let mut stores: BTreeMap<usize, usize> = BTreeMap::new();
    let mut issuing: BTreeMap<Pe, Vec<OpId>> = BTreeMap::new();
    for op in ops {
        if op.row >= arch.n_rows || op.col >= arch.m_cols {
            return Err(fault(op, FaultKind::OutOfBounds));
        }
        match op.opcode {
            Opcode::Nop => continue,
            Opcode::Load => {
                let n = loads.entry(op.row).or_default();
                *n += 1;
                if *n > arch.read_buses_per_row {
                    return Err(fault(
                        op,
                        FaultKind::ReadBus {
                            loads: *n,
                            capacity: arch.read_buses_per_row,
                        },
                    ));
                }
            }
            Opcode::Store => {
                let n = stores.entry(op.row).or_default();
                *n += 1;
                if *n > arch.write_buses_per_row {
                    return Err(fault(
                        op,
                        FaultKind::WriteBus {
                            stores: *n,
                            capacity: arch.write_buses_per_row,
                        },
                    ));
                }
            }
            _ => {}
        }
        let at = issuing.entry(op.pe()).or_default();
        at.push(op.id);
        if at.len() > 1 {
            return Err(SimError::Fault {
                cycle,
                pe: op.pe(),
                op: Some(op.id),
                kind: FaultKind::PeBusy { ops: at.clone() },
            });
        }
    }
    Ok(())
}

fn store_operands(op: &Operation) -> Result<(&Operand, u64), SimError> {
    match op.operands.as_slice() {
        [src, Operand::Mem(a)] if !matches!(src, Operand::Mem(_)) => Ok((src, *a)),
        [Operand::Mem(a), src] if !matches!(src, Operand::Mem(_)) => Ok((src, *a)),
        _ => Err(fault(op, bad("store takes one source and one memory destination"))),
    }
}

fn single(op: &Operation, words: &[i128]) -> Result<i128, SimError> {
    match words {
        [v] => Ok(*v),
        _ => Err(fault(op, bad("expected a single-word source"))),
    }
}

fn read_operand(
    ctx: &Context,
    arch: &ArchParams,
    op: &Operation,
    operand: &Operand,
    values: &HashMap<OpId, Vec<i128>>,
    mem: &MemoryImage,
) -> Result<Vec<i128>, SimError> {
    match operand {
        Operand::Mem(_) => Err(fault(op, bad("only load and store may address memory"))),
        Operand::Imm(Immediate::Value(v)) => Ok(vec![*v as i128]),
        Operand::Imm(Immediate::Named(name)) => mem
            .constants
            .get(name)
            .map(|&v| vec![v as i128])
            .ok_or_else(|| fault(op, FaultKind::UnboundConstant { name: name.clone() })),
        Operand::Reg(row, col) => {
            let producer = op
                .deps
                .iter()
                .filter_map(|d| ctx.op(*d))
                .filter(|p| p.row == *row && p.col == *col)
                .max_by_key(|p| (p.cycle, p.id))
                .ok_or_else(|| fault(op, FaultKind::UnresolvedOperand { row: *row, col: *col }))?;
            let ready_cycle = producer.cycle + arch.latency(producer.opcode);
            if ready_cycle > op.cycle {
                return Err(fault(
                    op,
                    FaultKind::NotReady {
                        producer: producer.id,
                        ready_cycle,
                    },
                ));
            }
            values.get(&producer.id).cloned().ok_or_else(|| {
                fault(op, bad(&format!("producer {} has no value", producer.id)))
            })
        }
    }
}

fn compute(op: &Operation, args: &[i128]) -> Result<i128, SimError> {
    let need = |n: usize, what: &str| -> Result<(), SimError> {
        if args.len() == n {
            Ok(())
        } else {
            Err(fault(
                op,
                bad(&format!("{what} takes {n} value(s), got {}", args.len())),
            ))
        }
    };
    match op.opcode {
        Opcode::Mult => {
            if args.is_empty() {
                return Err(fault(op, bad("mult needs operands")));
            }
            // operands are at most 2*width <= 64 bits, so each product fits i128
            Ok(args.iter().skip(1).fold(args[0], |acc, &x| wrap(acc * x, 64)))
        }
        Opcode::Add => {
            if args.is_empty() {
                return Err(fault(op, bad("add needs operands")));
            }
            Ok(args.iter().sum())
        }
        Opcode::Sub => {
            need(2, "sub")?;
            Ok(args[0] - args[1])
        }
        Opcode::Shift => {
            need(2, "shift")?;
            if !(0..64).contains(&args[1]) {
                return Err(fault(op, bad("shift amount must be in 0..64")));
            }
            Ok(args[0] << args[1])
        }
        Opcode::Abs => {
            need(1, "abs")?;
            Ok(args[0].abs())
        }
        Opcode::Load | Opcode::Store | Opcode::Nop => unreachable!("handled by caller"),
    }
}

/// `Z = C * X * Y` over unbounded integers, wrapped to `width_bits`.
pub fn reference_matmul(
    x: &[Vec<i64>],
    y: &[Vec<i64>],
    c: i64,
    n: usize,
    width_bits: u32,
) -> Result<Vec<Vec<i64>>, SimError> {
    let square = |m: &[Vec<i64>]| m.len() == n && m.iter().all(|r| r.len() == n);
    if !square(x) || !square(y) {
        return Err(SimError::Dimension(format!("expected {n}x{n} operands")));
    }
    if !(1..=63).contains(&width_bits) {
        return Err(SimError::Dimension(format!("bad width {width_bits}")));
    }
    let modulus = BigInt::one() << width_bits;
    let half = BigInt::one() << (width_bits - 1);
    let to_width = |v: BigInt| -> i64 {
        let mut r = v % &modulus;
        if r < BigInt::zero() {
            r += &modulus;
        }
        if r >= half {
            r -= &modulus;
        }
        r.to_i64().expect("reduced value fits")
    };
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let sum: BigInt = (0..n)
                        .map(|k| BigInt::from(x[i][k]) * BigInt::from(y[k][j]))
                        .sum();
                    to_width(sum * BigInt::from(c))
                })
                .collect()
        })
        .collect())
}
