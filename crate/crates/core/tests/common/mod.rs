#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rsp_core::kernel::Immediate;
use rsp_core::sim::MemoryImage;
use rsp_core::{ArchParams, Context, OpId, Opcode, Operand, Operation};

pub const INPUT_BASE: u64 = 0;
pub const INPUT_WORDS: u64 = 64;
pub const OUTPUT_BASE: u64 = 1000;

/// A random legal context: a layered DAG on an `n x m` array whose loads read
/// an input region and whose stores write distinct output words.
pub fn random_context(seed: u64, max_dim: usize) -> Context {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_dim);
    let m = rng.gen_range(1..=max_dim);
    let length: u32 = rng.gen_range(3..=14);
    let density: f64 = rng.gen_range(0.2..0.8);
    let period: u32 = rng.gen_range(2..=6);

    let mut ops: Vec<Operation> = Vec::new();
    let mut words: HashMap<OpId, usize> = HashMap::new();
    let mut next_out = OUTPUT_BASE;

    for cycle in 1..=length {
        let mut loads = vec![0usize; n];
        let mut stores = vec![0usize; n];
        for row in 0..n {
            for col in 0..m {
                if !rng.gen_bool(density) {
                    continue;
                }
                // producers within reach: this PE or an orthogonal neighbour,
                // issued in the last three cycles
                let near: Vec<&Operation> = ops
                    .iter()
                    .filter(|o| o.cycle < cycle && o.cycle + 3 >= cycle)
                    .filter(|o| o.opcode != Opcode::Store && o.opcode != Opcode::Nop)
                    .filter(|o| o.row.abs_diff(row) + o.col.abs_diff(col) <= 1)
                    .collect();
                let singles: Vec<&Operation> =
                    near.iter().copied().filter(|o| words[&o.id] == 1).collect();

                let pick = rng.gen_range(0..10);
                let id = OpId(ops.len() as u32);
                let (opcode, operands, deps): (Opcode, Vec<Operand>, Vec<OpId>) = match pick {
                    0..=2 if loads[row] < 2 => {
                        loads[row] += 1;
                        let k = rng.gen_range(1..=2);
                        let mem = (0..k)
                            .map(|_| Operand::Mem(INPUT_BASE + rng.gen_range(0..INPUT_WORDS)))
                            .collect();
                        (Opcode::Load, mem, vec![])
                    }
                    3..=4 if !near.is_empty() => {
                        let k = rng.gen_range(1..=2.min(near.len()));
                        let chosen: Vec<&&Operation> = near.choose_multiple(&mut rng, k).collect();
                        let mut operands: Vec<Operand> =
                            chosen.iter().map(|p| Operand::Reg(p.row, p.col)).collect();
                        if k == 1 && rng.gen_bool(0.3) {
                            operands.push(Operand::Imm(Immediate::Value(rng.gen_range(-3..=3))));
                        }
                        (Opcode::Mult, operands, chosen.iter().map(|p| p.id).collect())
                    }
                    5 if !near.is_empty() => {
                        let k = rng.gen_range(1..=2.min(near.len()));
                        let chosen: Vec<&&Operation> = near.choose_multiple(&mut rng, k).collect();
                        (
                            Opcode::Add,
                            chosen.iter().map(|p| Operand::Reg(p.row, p.col)).collect(),
                            chosen.iter().map(|p| p.id).collect(),
                        )
                    }
                    6 if !singles.is_empty() => {
                        let p = singles.choose(&mut rng).unwrap();
                        let (opcode, extra) = match rng.gen_range(0..3) {
                            0 => (Opcode::Sub, Some(rng.gen_range(-5..=5))),
                            1 => (Opcode::Shift, Some(rng.gen_range(0..=3))),
                            _ => (Opcode::Abs, None),
                        };
                        let mut operands = vec![Operand::Reg(p.row, p.col)];
                        operands.extend(extra.map(|v| Operand::Imm(Immediate::Value(v))));
                        (opcode, operands, vec![p.id])
                    }
                    7..=8 if !singles.is_empty() && stores[row] < 1 => {
                        stores[row] += 1;
                        let p = singles.choose(&mut rng).unwrap();
                        let dest = next_out;
                        next_out += 1;
                        (
                            Opcode::Store,
                            vec![Operand::Reg(p.row, p.col), Operand::Mem(dest)],
                            vec![p.id],
                        )
                    }
                    _ => (Opcode::Nop, vec![], vec![]),
                };
                words.insert(
                    id,
                    if opcode == Opcode::Load {
                        operands.len()
                    } else {
                        1
                    },
                );
                let iteration = deps
                    .iter()
                    .map(|d| ops[d.0 as usize].iteration)
                    .max()
                    .unwrap_or(0)
                    .max((cycle - 1) / period);
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
            }
        }
    }
    let iterations = ops.iter().map(|o| o.iteration).max().unwrap_or(0) + 1;
    Context::new(n, m, iterations, Context::default_critical(), ops).expect("generated context is well formed")
}

/// Input words `0..64` filled from `seed`; the output region is left empty.
pub fn random_memory(seed: u64, width_bits: u32) -> MemoryImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut mem = MemoryImage::new(width_bits);
    let values: Vec<i64> = (0..INPUT_WORDS).map(|_| rng.gen_range(-40..=40)).collect();
    mem.add_region("in", INPUT_BASE, 1, INPUT_WORDS as usize, Some(&values))
        .unwrap();
    mem
}

/// Every shared configuration with up to two row and column instances and
/// up to two stages, plus the base array.
pub fn arch_lattice(n: usize, m: usize) -> Vec<ArchParams> {
    let mut out = vec![ArchParams::base(n, m)];
    for stages in 1..=2 {
        for shr in 0..=2 {
            for shc in 0..=2 {
                if shr + shc > 0 {
                    out.push(ArchParams::shared(n, m, shr, shc, stages));
                }
            }
        }
    }
    out
}

/// Independent replay of the greedy assignment rule on a fixed schedule:
/// per cycle, shared ops in (iteration, row, col, id) order take the first
/// free instance (row instances, then column instances); losers move into a
/// whole-array stall cycle. Returns the stall count and final issue cycles.
pub fn greedy_replay(
    ctx: &Context,
    kind: Opcode,
    shr: usize,
    shc: usize,
    stages: u32,
) -> (u32, BTreeMap<OpId, u32>) {
    let mut cycle: BTreeMap<OpId, u32> = ctx.ops().iter().map(|o| (o.id, o.cycle)).collect();
    // instance = (is_column, index within its line, line number)
    let mut taken: HashSet<((bool, usize, usize), u32, u32)> = HashSet::new();
    let mut stalls = 0;
    let mut t = 1;
    loop {
        let last = cycle.values().copied().max().unwrap_or(0);
        if t > last {
            break;
        }
        let mut now: Vec<&Operation> = ctx
            .ops()
            .iter()
            .filter(|o| o.opcode == kind && cycle[&o.id] == t)
            .collect();
        now.sort_by_key(|o| (o.iteration, o.row, o.col, o.id));
        let mut losers = Vec::new();
        for o in now {
            let options = (0..shr)
                .map(|j| (false, j, o.row))
                .chain((0..shc).map(|j| (true, j, o.col)));
            let mut placed = false;
            for inst in options {
                if (0..stages).all(|s| !taken.contains(&(inst, t + s, s))) {
                    for s in 0..stages {
                        taken.insert((inst, t + s, s));
                    }
                    placed = true;
                    break;
                }
            }
            if !placed {
                losers.push(o.id);
            }
        }
        if !losers.is_empty() {
            stalls += 1;
            for c in cycle.values_mut() {
                if *c > t {
                    *c += 1;
                }
            }
            for id in losers {
                cycle.insert(id, t + 1);
            }
        }
        t += 1;
    }
    (stalls, cycle)
}

/// Peak number of ops of `kind` issued in one cycle, counted directly.
pub fn peak_count(ctx: &Context, kind: Opcode) -> usize {
    let mut per: BTreeMap<u32, usize> = BTreeMap::new();
    for o in ctx.ops().iter().filter(|o| o.opcode == kind) {
        *per.entry(o.cycle).or_default() += 1;
    }
    per.values().copied().max().unwrap_or(0)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, hi: i64) -> Vec<Vec<i64>> {
    (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(0..=hi)).collect())
        .collect()
}
