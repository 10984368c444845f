//! Context rearrangement for resource sharing (RS) and resource pipelining (RP).
//!
//! Two rules drive the rearrangement:
//!
//! * RP: an op on the pipelined resource keeps its PE busy for `stages`
//!   cycles and its result arrives `stages` cycles after issue. Dependent ops
//!   and every later op on the same PE slide back by the missing cycles.
//!   Ops that do not depend on a pipelined result keep their cycle, so
//!   independent columns overlap as before.
//! * RS: in every cycle the shared instances are handed out in loop-iteration
//!   order (ties by row, then column), row instances before column instances.
//!   Ops left without an instance move into a whole-array stall cycle
//!   inserted right after, and the search repeats there.
//!
//! RP is applied first so RS sees stage-level occupancy of the expanded
//! schedule. The resulting cycle count is an upper bound: the original
//! length plus the RP latency extension plus the inserted stall cycles.

mod pool;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::arch::{ArchError, ArchParams};
use crate::kernel::io::{context_from_value, ContextDoc};
use crate::kernel::{validate_context, Context, KernelError, OpId, Opcode, Pe, Violation};

pub use pool::{Instance, InstanceId, PoolConflict, ResourcePool, Scope};

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error("{ops} op(s) need the shared resource but the configuration has no instances")]
    Infeasible { ops: usize },
    #[error("context is not legal on this array: {}", summarize(.0))]
    InvalidContext(Vec<Violation>),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("rearranged context: {0}")]
    Malformed(String),
}

fn summarize(v: &[Violation]) -> String {
    let mut s = v
        .iter()
        .take(3)
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ");
    if v.len() > 3 {
        s.push_str(&format!(" (+{} more)", v.len() - 3));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StallKind {
    Rs,
    Rp,
}

/// One inserted whole-array cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stall {
    pub inserted_at_cycle: u32,
    pub kind: StallKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RearrangedContext {
    /// The context with rescheduled issue cycles.
    pub base: Context,
    pub assignments: BTreeMap<OpId, InstanceId>,
    pub stalls: Vec<Stall>,
    pub rs_stall_count: u32,
    pub rp_stall_count: u32,
    pub rp_latency_extension: u32,
    pub total_cycles: u32,
}

impl RearrangedContext {
    /// An unchanged context (base array, nothing shared or pipelined).
    pub fn identity(ctx: &Context) -> Self {
        RearrangedContext {
            base: ctx.clone(),
            assignments: BTreeMap::new(),
            stalls: Vec::new(),
            rs_stall_count: 0,
            rp_stall_count: 0,
            rp_latency_extension: 0,
            total_cycles: ctx.length_cycles(),
        }
    }

    pub fn original_length(&self) -> u32 {
        self.total_cycles - self.rp_latency_extension - self.rs_stall_count - self.rp_stall_count
    }

    pub fn total_stalls(&self) -> u32 {
        self.rs_stall_count + self.rp_stall_count
    }

    pub fn to_json(&self) -> String {
        let doc = RearrangedDoc {
            context: ContextDoc::from(&self.base),
            assignments: self
                .assignments
                .iter()
                .map(|(&op, &instance)| AssignmentEntry { op, instance })
                .collect(),
            stalls: &self.stalls,
            rs_stall_count: self.rs_stall_count,
            rp_stall_count: self.rp_stall_count,
            rp_latency_extension: self.rp_latency_extension,
            total_cycles: self.total_cycles,
        };
        serde_json::to_string_pretty(&doc).expect("rearranged context serializes")
    }

    /// Whether a JSON document carries the rearrangement fields.
    pub fn is_rearranged_document(value: &Value) -> bool {
        value.get("total_cycles").is_some()
    }

    pub fn from_json(document: &str) -> Result<Self, ScheduleError> {
        let value: Value = serde_json::from_str(document).map_err(KernelError::from)?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<Self, ScheduleError> {
        let base = context_from_value(value)?;
        let extra: RearrangedExtra = serde_json::from_value(value.clone())
            .map_err(|e| ScheduleError::Malformed(e.to_string()))?;
        let mut assignments = BTreeMap::new();
        for a in extra.assignments {
            if base.op(a.op).is_none() {
                return Err(ScheduleError::Malformed(format!(
                    "assignment for unknown op {}",
                    a.op
                )));
            }
            assignments.insert(a.op, a.instance);
        }
        Ok(RearrangedContext {
            base,
            assignments,
            stalls: extra.stalls,
            rs_stall_count: extra.rs_stall_count,
            rp_stall_count: extra.rp_stall_count,
            rp_latency_extension: extra.rp_latency_extension,
            total_cycles: extra.total_cycles,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct AssignmentEntry {
    op: OpId,
    instance: InstanceId,
}

#[derive(Serialize)]
struct RearrangedDoc<'a> {
    #[serde(flatten)]
    context: ContextDoc<'a>,
    assignments: Vec<AssignmentEntry>,
    stalls: &'a [Stall],
    rs_stall_count: u32,
    rp_stall_count: u32,
    rp_latency_extension: u32,
    total_cycles: u32,
}

#[derive(Deserialize)]
struct RearrangedExtra {
    #[serde(default)]
    assignments: Vec<AssignmentEntry>,
    #[serde(default)]
    stalls: Vec<Stall>,
    rs_stall_count: u32,
    rp_stall_count: u32,
    rp_latency_extension: u32,
    total_cycles: u32,
}

/// Working copy of a schedule during rearrangement.
struct Work<'a> {
    ctx: &'a Context,
    arch: &'a ArchParams,
    cycles: Vec<u32>,
    stalls: Vec<Stall>,
    rs: u32,
    rp: u32,
    extension: u32,
    assignments: BTreeMap<OpId, InstanceId>,
}

impl<'a> Work<'a> {
    fn new(ctx: &'a Context, arch: &'a ArchParams) -> Result<Self, ScheduleError> {
        arch.validate()?;
        let violations = validate_context(ctx, arch);
        if !violations.is_empty() {
            return Err(ScheduleError::InvalidContext(violations));
        }
        Ok(Work {
            ctx,
            arch,
            cycles: ctx.ops().iter().map(|o| o.cycle).collect(),
            stalls: Vec::new(),
            rs: 0,
            rp: 0,
            extension: 0,
            assignments: BTreeMap::new(),
        })
    }

    fn length(&self) -> u32 {
        self.cycles.iter().copied().max().unwrap_or(0)
    }

    /// Cycles the issuing PE stays busy (and result latency) for op `i`.
    fn occupancy(&self, i: usize) -> u32 {
        self.arch.latency(self.ctx.ops()[i].opcode)
    }

    fn dep_index(&self, id: OpId) -> usize {
        self.ctx.position(id).expect("deps resolved at construction")
    }

    /// Indices ordered by current cycle, then row, column and id.
    fn order_by_cycle(&self) -> Vec<usize> {
        let ops = self.ctx.ops();
        let mut order: Vec<usize> = (0..ops.len()).collect();
        order.sort_by_key(|&i| (self.cycles[i], ops[i].row, ops[i].col, ops[i].id));
        order
    }

    /// RP rule: stretch pipelined ops and delay whatever waits on them.
    fn expand_pipelines(&mut self) {
        if self.arch.stages() <= 1 {
            return;
        }
        let before = self.length();
        let ops = self.ctx.ops();
        let order = self.order_by_cycle();
        let mut new_cycles = self.cycles.clone();
        let mut pe_delay: HashMap<Pe, u32> = HashMap::new();
        let mut pe_last: HashMap<Pe, usize> = HashMap::new();
        for i in order {
            let op = &ops[i];
            let orig = self.cycles[i];
            let pe = op.pe();
            let mut at = orig + pe_delay.get(&pe).copied().unwrap_or(0);
            if let Some(&p) = pe_last.get(&pe) {
                let busy_until = if self.cycles[p] < orig {
                    new_cycles[p] + self.occupancy(p)
                } else {
                    new_cycles[p]
                };
                at = at.max(busy_until);
            }
            for dep in &op.deps {
                let d = self.dep_index(*dep);
                at = at.max(new_cycles[d] + self.occupancy(d));
            }
            new_cycles[i] = at;
            pe_delay.insert(pe, at - orig);
            pe_last.insert(pe, i);
        }
        self.cycles = new_cycles;
        self.extension += self.length() - before;
    }

    /// Inserts a whole-array cycle after `t`, moving `deferred` into it.
    fn insert_stall(&mut self, t: u32, deferred: &[usize], kind: StallKind) {
        for c in self.cycles.iter_mut() {
            if *c > t {
                *c += 1;
            }
        }
        for &i in deferred {
            self.cycles[i] = t + 1;
        }
        self.stalls.push(Stall {
            inserted_at_cycle: t + 1,
            kind,
        });
        match kind {
            StallKind::Rs => self.rs += 1,
            StallKind::Rp => self.rp += 1,
        }
    }

    fn ops_at(&self, t: u32) -> Vec<usize> {
        let ops = self.ctx.ops();
        let mut at: Vec<usize> = (0..ops.len()).filter(|&i| self.cycles[i] == t).collect();
        at.sort_by_key(|&i| ops[i].priority_key());
        at
    }

    /// Row buses can be oversubscribed once columns slide by different
    /// amounts; excess transfers wait in whole-array RP stall cycles.
    fn resolve_buses(&mut self) {
        let ops = self.ctx.ops();
        let mut t = 1;
        while t <= self.length() {
            let mut loads: BTreeMap<usize, usize> = BTreeMap::new();
            let mut stores: BTreeMap<usize, usize> = BTreeMap::new();
            let mut deferred = Vec::new();
            for i in self.ops_at(t) {
                let op = &ops[i];
                let (used, cap) = match op.opcode {
                    Opcode::Load => (loads.entry(op.row).or_default(), self.arch.read_buses_per_row),
                    Opcode::Store => (stores.entry(op.row).or_default(), self.arch.write_buses_per_row),
                    _ => continue,
                };
                if *used < cap {
                    *used += 1;
                } else {
                    deferred.push(i);
                }
            }
            if !deferred.is_empty() {
                self.insert_stall(t, &deferred, StallKind::Rp);
            }
            t += 1;
        }
    }

    /// RS rule: hand out shared instances cycle by cycle.
    fn assign_shared(&mut self) -> Result<(), ScheduleError> {
        let Some(res) = self.arch.shared_resource() else {
            return Ok(());
        };
        let ops = self.ctx.ops();
        let needing = ops.iter().filter(|o| o.opcode == res.resource_kind).count();
        if needing == 0 {
            return Ok(());
        }
        if res.shr + res.shc == 0 {
            return Err(ScheduleError::Infeasible { ops: needing });
        }
        let mut pool = ResourcePool::for_arch(self.arch);
        let mut t = 1;
        while t <= self.length() {
            let mut deferred = Vec::new();
            for i in self.ops_at(t) {
                let op = &ops[i];
                if op.opcode != res.resource_kind {
                    continue;
                }
                let free = pool
                    .reachable(op.pe())
                    .map(|inst| inst.id)
                    .find(|&id| pool.is_free(id, t));
                match free {
                    Some(id) => {
                        pool.occupy(id, t, op.id).expect("instance checked free");
                        self.assignments.insert(op.id, id);
                    }
                    None => deferred.push(i),
                }
            }
            if !deferred.is_empty() {
                self.insert_stall(t, &deferred, StallKind::Rs);
            }
            t += 1;
        }
        Ok(())
    }

    fn finish(self) -> RearrangedContext {
        let original = self.ctx.length_cycles();
        let total_cycles = original + self.extension + self.rs + self.rp;
        debug_assert_eq!(total_cycles, self.length());
        RearrangedContext {
            base: self.ctx.with_cycles(&self.cycles),
            assignments: self.assignments,
            stalls: self.stalls,
            rs_stall_count: self.rs,
            rp_stall_count: self.rp,
            rp_latency_extension: self.extension,
            total_cycles,
        }
    }
}

/// Applies only the RS rule (instance assignment and RS stalls).
pub fn apply_rs(ctx: &Context, arch: &ArchParams) -> Result<RearrangedContext, ScheduleError> {
    let mut work = Work::new(ctx, arch)?;
    work.assign_shared()?;
    Ok(work.finish())
}

/// Applies only the RP rule (latency extension and bus-conflict RP stalls).
/// Identity when the resource is not pipelined.
pub fn apply_rp(ctx: &Context, arch: &ArchParams) -> Result<RearrangedContext, ScheduleError> {
    let mut work = Work::new(ctx, arch)?;
    if arch.stages() > 1 {
        work.expand_pipelines();
        work.resolve_buses();
    }
    Ok(work.finish())
}

/// RP expansion followed by RS assignment over the expanded schedule.
pub fn rearrange(ctx: &Context, arch: &ArchParams) -> Result<RearrangedContext, ScheduleError> {
    let mut work = Work::new(ctx, arch)?;
    if arch.stages() > 1 {
        work.expand_pipelines();
        work.resolve_buses();
    }
    work.assign_shared()?;
    Ok(work.finish())
}

/// Upper bound on the kernel's cycle count on `arch`.
pub fn estimate_cycles_upper_bound(ctx: &Context, arch: &ArchParams) -> Result<u32, ScheduleError> {
    if arch.shared_resource().is_none() {
        return Ok(ctx.length_cycles());
    }
    Ok(rearrange(ctx, arch)?.total_cycles)
}

#[cfg(test)]
mod tests;
