use super::*;
use crate::kernel::{generate_matmul_context, Operand, Operation};

fn op(id: u32, opcode: Opcode, row: usize, col: usize, cycle: u32, deps: &[u32]) -> Operation {
    let operands = match opcode {
        Opcode::Load => vec![Operand::Mem(id as u64)],
        _ => deps
            .iter()
            .map(|_| Operand::Reg(row, col))
            .take(1)
            .collect(),
    };
    Operation {
        id: OpId(id),
        opcode,
        row,
        col,
        cycle,
        iteration: 0,
        operands,
        deps: deps.iter().map(|&d| OpId(d)).collect(),
    }
}

fn ctx(n: usize, m: usize, ops: Vec<Operation>) -> Context {
    Context::new(n, m, 1, Context::default_critical(), ops).unwrap()
}

#[test]
fn base_array_is_identity() {
    let c = generate_matmul_context(4, 1).unwrap();
    let r = rearrange(&c, &ArchParams::base(4, 4)).unwrap();
    assert_eq!(r, RearrangedContext::identity(&c));
    assert_eq!(r.total_cycles, 27);
}

#[test]
fn two_row_instances_cover_matmul() {
    let c = generate_matmul_context(4, 1).unwrap();
    let r = rearrange(&c, &ArchParams::shared(4, 4, 2, 0, 1)).unwrap();
    assert_eq!(r.rs_stall_count, 0);
    assert_eq!(r.total_cycles, 27);
    assert!(ResourcePool::check(&ArchParams::shared(4, 4, 2, 0, 1), &r.base, &r.assignments).is_ok());
}

#[test]
fn one_row_instance_stalls_matmul() {
    let arch = ArchParams::shared(4, 4, 1, 0, 1);
    let c = generate_matmul_context(4, 1).unwrap();
    let r = rearrange(&c, &arch).unwrap();
    assert_eq!(r.rs_stall_count, 7);
    assert_eq!(r.total_cycles, 34);
    assert_eq!(r.base.length_cycles(), 34);
    assert!(r.stalls.iter().all(|s| s.kind == StallKind::Rs));
    assert!(ResourcePool::check(&arch, &r.base, &r.assignments).is_ok());
    assert_eq!(validate_context(&r.base, &arch), vec![]);
}

#[test]
fn pipelining_expands_to_the_two_stage_schedule() {
    let arch = ArchParams::shared(4, 4, 1, 0, 2);
    let one = generate_matmul_context(4, 1).unwrap();
    let two = generate_matmul_context(4, 2).unwrap();
    let r = apply_rp(&one, &arch).unwrap();
    assert_eq!(r.rp_latency_extension, 8);
    assert_eq!(r.total_cycles, 35);
    assert_eq!(r.base.pattern_table(2, 35), two.pattern_table(2, 35));
    let full = rearrange(&one, &arch).unwrap();
    assert_eq!(full.total_stalls(), 0);
    assert_eq!(full.total_cycles, 35);
}

#[test]
fn rs_alone_ignores_stages() {
    let one = generate_matmul_context(4, 1).unwrap();
    let r = apply_rs(&one, &ArchParams::shared(4, 4, 2, 0, 2)).unwrap();
    assert_eq!(r.rp_latency_extension, 0);
    assert_eq!(r.rp_stall_count, 0);
}

#[test]
fn independent_pipelined_ops_overlap() {
    // two independent mults in one row, one 2-stage instance: issue at 1 and 2,
    // the instance is busy for cycles 1..=3
    let c = ctx(
        1,
        2,
        vec![
            op(0, Opcode::Load, 0, 0, 1, &[]),
            op(1, Opcode::Load, 0, 1, 1, &[]),
            op(2, Opcode::Mult, 0, 0, 2, &[0]),
            op(3, Opcode::Mult, 0, 1, 2, &[1]),
        ],
    );
    let arch = ArchParams::shared(1, 2, 1, 0, 2);
    let r = rearrange(&c, &arch).unwrap();
    assert_eq!(r.rs_stall_count, 1);
    assert_eq!(r.base.op(OpId(2)).unwrap().cycle, 2);
    assert_eq!(r.base.op(OpId(3)).unwrap().cycle, 3);
    let pool = ResourcePool::check(&arch, &r.base, &r.assignments).unwrap();
    let busy: Vec<u32> = (1..=5)
        .filter(|&t| (1..=2).any(|s| pool.occupant(InstanceId(0), t, s).is_some()))
        .collect();
    assert_eq!(busy, vec![2, 3, 4]);
}

#[test]
fn dependent_pipelined_ops_wait_for_the_result() {
    let c = ctx(
        1,
        1,
        vec![
            op(0, Opcode::Load, 0, 0, 1, &[]),
            op(1, Opcode::Mult, 0, 0, 2, &[0]),
            op(2, Opcode::Mult, 0, 0, 3, &[1]),
            op(3, Opcode::Add, 0, 0, 4, &[2]),
        ],
    );
    let r = rearrange(&c, &ArchParams::shared(1, 1, 1, 0, 2)).unwrap();
    let cycles: Vec<u32> = r.base.ops().iter().map(|o| o.cycle).collect();
    assert_eq!(cycles, vec![1, 2, 4, 6]);
    assert_eq!(r.rp_latency_extension, 2);
    assert_eq!(r.total_stalls(), 0);
}

#[test]
fn no_instances_is_infeasible() {
    let c = generate_matmul_context(2, 1).unwrap();
    let mut arch = ArchParams::shared(2, 2, 1, 0, 1);
    if let crate::arch::Sharing::Shared(res) = &mut arch.sharing {
        res.shr = 0;
    }
    assert!(matches!(
        rearrange(&c, &arch),
        Err(ScheduleError::Arch(_)) | Err(ScheduleError::Infeasible { .. })
    ));
}

#[test]
fn invalid_context_is_rejected() {
    let c = generate_matmul_context(4, 1).unwrap();
    let err = rearrange(&c, &ArchParams::shared(2, 2, 1, 0, 1)).unwrap_err();
    assert!(matches!(err, ScheduleError::InvalidContext(_)));
}

#[test]
fn accounting_identity() {
    for (shr, shc, st) in [(1, 0, 1), (1, 1, 1), (2, 0, 2), (1, 0, 3), (0, 1, 2)] {
        let c = generate_matmul_context(4, 1).unwrap();
        let r = rearrange(&c, &ArchParams::shared(4, 4, shr, shc, st)).unwrap();
        assert_eq!(
            r.total_cycles,
            c.length_cycles() + r.rp_latency_extension + r.rs_stall_count + r.rp_stall_count
        );
        assert_eq!(r.total_cycles, r.base.length_cycles());
        assert_eq!(r.original_length(), 27);
    }
}

#[test]
fn json_round_trip() {
    let c = generate_matmul_context(4, 1).unwrap();
    let r = rearrange(&c, &ArchParams::shared(4, 4, 1, 0, 2)).unwrap();
    let doc = r.to_json();
    let value: Value = serde_json::from_str(&doc).unwrap();
    assert!(RearrangedContext::is_rearranged_document(&value));
    assert_eq!(RearrangedContext::from_json(&doc).unwrap(), r);
    // the rearranged document is also a plain context
    assert_eq!(crate::kernel::parse_context(&doc).unwrap(), r.base);
}
