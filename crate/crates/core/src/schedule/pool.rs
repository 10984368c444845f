use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arch::ArchParams;
use crate::kernel::{Context, OpId, Pe};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InstanceId(pub u32);

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.0)
    }
}

/// Where a shared instance sits; it serves every PE of that row or column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Row(usize),
    Column(usize),
}

impl Scope {
    pub fn covers(self, pe: Pe) -> bool {
        match self {
            Scope::Row(r) => pe.row == r,
            Scope::Column(c) => pe.col == c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub id: InstanceId,
    pub scope: Scope,
    pub stages: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PoolConflict {
    Unassigned { op: OpId },
    UnknownInstance { op: OpId, instance: InstanceId },
    OutOfScope { op: OpId, instance: InstanceId },
    Occupied { instance: InstanceId, cycle: u32, stage: u32, ops: (OpId, OpId) },
    NotShared { op: OpId },
}

impl fmt::Display for PoolConflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PoolConflict::Unassigned { op } => write!(f, "op {op} has no shared instance"),
            PoolConflict::UnknownInstance { op, instance } => {
                write!(f, "op {op} assigned to nonexistent instance {instance}")
            }
            PoolConflict::OutOfScope { op, instance } => {
                write!(f, "op {op} cannot reach instance {instance}")
            }
            PoolConflict::Occupied { instance, cycle, stage, ops } => write!(
                f,
                "instance {instance} stage {stage} at cycle {cycle} used by both {} and {}",
                ops.0, ops.1
            ),
            PoolConflict::NotShared { op } => {
                write!(f, "op {op} does not use the shared resource but is assigned")
            }
        }
    }
}

/// Shared instances of one arch and their per-stage occupancy.
///
/// An op issued at cycle `t` holds stage `s` of its instance during cycle
/// `t + s - 1`, for `s = 1..=stages`.
#[derive(Debug, Clone, Default)]
pub struct ResourcePool {
    instances: Vec<Instance>,
    by_row: HashMap<usize, Vec<usize>>,
    by_col: HashMap<usize, Vec<usize>>,
    occupancy: HashMap<(InstanceId, u32, u32), OpId>,
}

impl ResourcePool {
    /// Row instances first (`shr` per row, row-major), then `shc` per column.
    pub fn for_arch(arch: &ArchParams) -> Self {
        let mut pool = ResourcePool::default();
        let Some(res) = arch.shared_resource() else {
            return pool;
        };
        let stages = res.stages as u32;
        for r in 0..arch.n_rows {
            for _ in 0..res.shr {
                pool.push(Scope::Row(r), stages);
            }
        }
        for c in 0..arch.m_cols {
            for _ in 0..res.shc {
                pool.push(Scope::Column(c), stages);
            }
        }
        pool
    }

    fn push(&mut self, scope: Scope, stages: u32) {
        let idx = self.instances.len();
        self.instances.push(Instance {
            id: InstanceId(idx as u32),
            scope,
            stages,
        });
        match scope {
            Scope::Row(r) => self.by_row.entry(r).or_default().push(idx),
            Scope::Column(c) => self.by_col.entry(c).or_default().push(idx),
        }
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn instance(&self, id: InstanceId) -> Option<&Instance> {
        self.instances.get(id.0 as usize)
    }

    /// Instances reachable from `pe`: its row's, then its column's.
    pub fn reachable(&self, pe: Pe) -> impl Iterator<Item = &Instance> + '_ {
        let rows = self.by_row.get(&pe.row).into_iter().flatten();
        let cols = self.by_col.get(&pe.col).into_iter().flatten();
        rows.chain(cols).map(move |&i| &self.instances[i])
    }

    pub fn is_free(&self, id: InstanceId, issue: u32) -> bool {
        let Some(inst) = self.instance(id) else {
            return false;
        };
        (1..=inst.stages).all(|s| !self.occupancy.contains_key(&(id, issue + s - 1, s)))
    }

    /// Marks every stage of `id` for an op issued at `issue`. On conflict the
    /// pool is left unchanged.
    pub fn occupy(&mut self, id: InstanceId, issue: u32, op: OpId) -> Result<(), PoolConflict> {
        let inst = *self.instance(id).ok_or(PoolConflict::UnknownInstance { op, instance: id })?;
        for s in 1..=inst.stages {
            if let Some(&other) = self.occupancy.get(&(id, issue + s - 1, s)) {
                return Err(PoolConflict::Occupied {
                    instance: id,
                    cycle: issue + s - 1,
                    stage: s,
                    ops: (other, op),
                });
            }
        }
        for s in 1..=inst.stages {
            self.occupancy.insert((id, issue + s - 1, s), op);
        }
        Ok(())
    }

    /// Op holding `stage` of `id` during `cycle`, if any.
    pub fn occupant(&self, id: InstanceId, cycle: u32, stage: u32) -> Option<OpId> {
        self.occupancy.get(&(id, cycle, stage)).copied()
    }

    /// Rebuilds the pool from a schedule and its assignments, collecting every
    /// missing, misplaced or colliding assignment.
    pub fn check(
        arch: &ArchParams,
        ctx: &Context,
        assignments: &BTreeMap<OpId, InstanceId>,
    ) -> Result<ResourcePool, Vec<PoolConflict>> {
        let mut pool = ResourcePool::for_arch(arch);
        let mut problems = Vec::new();
        for op in ctx.ops() {
            let shared = arch.uses_shared(op.opcode);
            match (shared, assignments.get(&op.id)) {
                (true, None) => problems.push(PoolConflict::Unassigned { op: op.id }),
                (false, Some(_)) => problems.push(PoolConflict::NotShared { op: op.id }),
                (false, None) => {}
                (true, Some(&inst)) => match pool.instance(inst) {
                    None => problems.push(PoolConflict::UnknownInstance {
                        op: op.id,
                        instance: inst,
                    }),
                    Some(i) if !i.scope.covers(op.pe()) => problems.push(PoolConflict::OutOfScope {
                        op: op.id,
                        instance: inst,
                    }),
                    Some(_) => {
                        if let Err(c) = pool.occupy(inst, op.cycle, op.id) {
                            problems.push(c);
                        }
                    }
                },
            }
        }
        if problems.is_empty() {
            Ok(pool)
        } else {
            Err(problems)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_layout() {
        let pool = ResourcePool::for_arch(&ArchParams::shared(4, 4, 2, 1, 1));
        assert_eq!(pool.instances().len(), 4 * 2 + 4);
        assert_eq!(pool.instances().iter().filter(|i| i.scope == Scope::Row(3)).count(), 2);
        assert_eq!(pool.instances().iter().filter(|i| i.scope == Scope::Column(0)).count(), 1);
        let reach: Vec<_> = pool.reachable(Pe::new(1, 2)).map(|i| i.scope).collect();
        assert_eq!(reach, vec![Scope::Row(1), Scope::Row(1), Scope::Column(2)]);
        assert!(ResourcePool::for_arch(&ArchParams::base(4, 4)).is_empty());
    }

    #[test]
    fn pipelined_instance_overlaps_consecutive_issues() {
        let mut pool = ResourcePool::for_arch(&ArchParams::shared(1, 1, 1, 0, 2));
        let r = InstanceId(0);
        pool.occupy(r, 5, OpId(1)).unwrap();
        // next cycle is free: stage 1 at 6 is empty while op 1 sits in stage 2
        assert!(pool.is_free(r, 6));
        pool.occupy(r, 6, OpId(2)).unwrap();
        assert_eq!(pool.occupant(r, 6, 2), Some(OpId(1)));
        assert_eq!(pool.occupant(r, 6, 1), Some(OpId(2)));
        // the pair spans cycles 5..=7
        let busy: Vec<u32> = (4..=8)
            .filter(|&c| (1..=2).any(|s| pool.occupant(r, c, s).is_some()))
            .collect();
        assert_eq!(busy, vec![5, 6, 7]);
        assert!(!pool.is_free(r, 6));
        assert!(matches!(
            pool.occupy(r, 6, OpId(3)),
            Err(PoolConflict::Occupied { stage: 1, cycle: 6, .. })
        ));
    }
}
