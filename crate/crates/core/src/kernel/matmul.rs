//! Loop-pipelined matrix multiplication `Z(i,j) = C * sum_k X(i,k) * Y(k,j)`.
//!
//! Column `j` of an `N x N` array produces output column `j`, one output row
//! per iteration, iterations back to back. PE `(k, j)` owns the `k` term.
//! Columns start one cycle apart. Each iteration occupies the slots
//!
//! ```text
//! Ld | * (stages) | + x log2(N) | *C (stages) | St
//! ```
//!
//! The adds form a butterfly so every PE of the column ends with the full
//! sum; all PEs then scale by `C` and one PE stores. The storing PE of
//! column `j` sits in row `j mod N` so stores never share a row write bus.

use serde::{Deserialize, Serialize};

use super::{Context, Immediate, KernelError, OpId, Opcode, Operand, Operation};

/// Name of the scaling constant bound by the memory image.
pub const MATMUL_CONSTANT: &str = "C";

/// Base addresses of the row-major `X`, `Y` and `Z` regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatmulLayout {
    pub x_base: u64,
    pub y_base: u64,
    pub z_base: u64,
}

impl MatmulLayout {
    /// `X`, `Y`, `Z` packed one after another from address 0.
    pub fn packed(n: usize) -> Self {
        let sq = (n * n) as u64;
        MatmulLayout {
            x_base: 0,
            y_base: sq,
            z_base: 2 * sq,
        }
    }
}

/// Slots per iteration: `4 + log2(N) + 2*(stages - 1)`.
pub fn matmul_slot_count(n: usize, stages: usize) -> u32 {
    (2 + 2 * stages + n.trailing_zeros() as usize) as u32
}

pub fn generate_matmul_context(n: usize, stages: usize) -> Result<Context, KernelError> {
    generate_matmul_context_with(n, stages, MatmulLayout::packed(n))
}

pub fn generate_matmul_context_with(
    n: usize,
    stages: usize,
    layout: MatmulLayout,
) -> Result<Context, KernelError> {
    if n == 0 || !n.is_power_of_two() {
        return Err(KernelError::BadOrder(n));
    }
    if stages == 0 {
        return Err(KernelError::BadStages);
    }
    let levels = n.trailing_zeros() as usize;
    let slots = matmul_slot_count(n, stages);
    let st = stages as u32;
    let nn = n as u64;

    let mut ops = Vec::new();
    let mut next_id = 0u32;
    let mut emit = |ops: &mut Vec<Operation>,
                    opcode: Opcode,
                    row: usize,
                    col: usize,
                    cycle: u32,
                    iteration: u32,
                    operands: Vec<Operand>,
                    deps: Vec<OpId>| {
        let id = OpId(next_id);
        next_id += 1;
        ops.push(Operation {
            id,
            opcode,
            row,
            col,
            cycle,
            iteration,
            operands,
            deps,
        });
        id
    };

    for t in 0..n {
        let iteration = t as u32;
        for c in 0..n {
            let start = 1 + c as u32 + iteration * slots;
            let ld_cycle = start;
            let mul_cycle = start + 1;
            let add_cycle = |l: usize| start + 1 + st + l as u32;
            let scale_cycle = start + 1 + st + levels as u32;
            let store_cycle = scale_cycle + st;

            let loads: Vec<OpId> = (0..n)
                .map(|k| {
                    let x = layout.x_base + t as u64 * nn + k as u64;
                    let y = layout.y_base + k as u64 * nn + c as u64;
                    emit(
                        &mut ops,
                        Opcode::Load,
                        k,
                        c,
                        ld_cycle,
                        iteration,
                        vec![Operand::Mem(x), Operand::Mem(y)],
                        vec![],
                    )
                })
                .collect();
            let mut current: Vec<OpId> = (0..n)
                .map(|k| {
                    emit(
                        &mut ops,
                        Opcode::Mult,
                        k,
                        c,
                        mul_cycle,
                        iteration,
                        vec![Operand::Reg(k, c)],
                        vec![loads[k]],
                    )
                })
                .collect();
            for l in 0..levels {
                current = (0..n)
                    .map(|k| {
                        let partner = k ^ (1 << l);
                        emit(
                            &mut ops,
                            Opcode::Add,
                            k,
                            c,
                            add_cycle(l),
                            iteration,
                            vec![Operand::Reg(k, c), Operand::Reg(partner, c)],
                            vec![current[k], current[partner]],
                        )
                    })
                    .collect();
            }
            let scaled: Vec<OpId> = (0..n)
                .map(|k| {
                    emit(
                        &mut ops,
                        Opcode::Mult,
                        k,
                        c,
                        scale_cycle,
                        iteration,
                        vec![
                            Operand::Reg(k, c),
                            Operand::Imm(Immediate::Named(MATMUL_CONSTANT.into())),
                        ],
                        vec![current[k]],
                    )
                })
                .collect();
            let store_row = c % n;
            for k in 0..n {
                if k == store_row {
                    let z = layout.z_base + t as u64 * nn + c as u64;
                    emit(
                        &mut ops,
                        Opcode::Store,
                        k,
                        c,
                        store_cycle,
                        iteration,
                        vec![Operand::Reg(k, c), Operand::Mem(z)],
                        vec![scaled[k]],
                    );
                } else {
                    emit(&mut ops, Opcode::Nop, k, c, store_cycle, iteration, vec![], vec![]);
                }
            }
        }
    }

    Context::new(n, n, n as u32, Context::default_critical(), ops)
}
