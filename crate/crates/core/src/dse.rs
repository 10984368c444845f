//! Design-space exploration over sharing and pipelining parameters.
//!
//! Every candidate is scored on two objectives, estimated array area and
//! aggregate execution time over a kernel suite. Candidates over the area or
//! ET thresholds are rejected, the rest are Pareto-filtered and a policy
//! picks one point.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arch::{ArchParams, SharedResource, Sharing, VariantKey};
use crate::cost::{
    area_reduction_ratio, estimate_hw_cost, lookup_array_delay, AreaEstimate, CostError, CostTable,
};
use crate::kernel::{Context, Opcode};
use crate::scalar::Scalar;
use crate::schedule::{rearrange, ScheduleError};

#[derive(Debug, Error)]
pub enum DseError {
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("kernel `{kernel}`: {source}")]
    Schedule {
        kernel: String,
        #[source]
        source: ScheduleError,
    },
    #[error("base execution time must be positive, got {0}")]
    NonPositiveBaseEt(f64),
    #[error("no measured delay for sharing the {0} resource")]
    UnmeasuredKind(Opcode),
    #[error("no kernels to evaluate")]
    NoKernels,
    #[error("no feasible design: every candidate was rejected or skipped")]
    NoFeasibleDesign,
    #[error("search space: {0}")]
    InvalidSpace(String),
}

/// How per-kernel execution times combine into the performance objective.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    #[default]
    Sum,
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    #[serde(default = "default_kinds")]
    pub resource_kinds: BTreeSet<Opcode>,
    pub stage_options: BTreeSet<usize>,
    pub shr_options: BTreeSet<usize>,
    pub shc_options: BTreeSet<usize>,
    /// Strict area bound in slices; defaults to the all-base array.
    #[serde(default)]
    pub max_area: Option<f64>,
    #[serde(default = "default_et_factor")]
    pub max_total_et_factor: f64,
    #[serde(default = "eight")]
    pub n_rows: usize,
    #[serde(default = "eight")]
    pub m_cols: usize,
    #[serde(default)]
    pub aggregate: Aggregate,
}

fn default_kinds() -> BTreeSet<Opcode> {
    BTreeSet::from([Opcode::Mult])
}
fn default_et_factor() -> f64 {
    1.5
}
fn eight() -> usize {
    8
}

impl SearchSpace {
    pub fn new(stages: &[usize], shr: &[usize], shc: &[usize]) -> Self {
        SearchSpace {
            resource_kinds: default_kinds(),
            stage_options: stages.iter().copied().collect(),
            shr_options: shr.iter().copied().collect(),
            shc_options: shc.iter().copied().collect(),
            max_area: None,
            max_total_et_factor: default_et_factor(),
            n_rows: 8,
            m_cols: 8,
            aggregate: Aggregate::Sum,
        }
    }

    pub fn validate(&self) -> Result<(), DseError> {
        let empty = [
            ("resource_kinds", self.resource_kinds.is_empty()),
            ("stage_options", self.stage_options.is_empty()),
            ("shr_options", self.shr_options.is_empty()),
            ("shc_options", self.shc_options.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(DseError::InvalidSpace(format!("{name} must not be empty")));
        }
        if self.stage_options.contains(&0) {
            return Err(DseError::InvalidSpace("stage options must be positive".into()));
        }
        if self.max_area.is_some_and(|a| !(a > 0.0)) {
            return Err(DseError::InvalidSpace("max_area must be positive".into()));
        }
        if !(self.max_total_et_factor > 0.0) {
            return Err(DseError::InvalidSpace(
                "max_total_et_factor must be positive".into(),
            ));
        }
        if self.n_rows == 0 || self.m_cols == 0 {
            return Err(DseError::InvalidSpace("array dimensions must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json_str(document: &str) -> Result<Self, DseError> {
        let space: SearchSpace =
            serde_json::from_str(document).map_err(|e| DseError::InvalidSpace(e.to_string()))?;
        space.validate()?;
        Ok(space)
    }

    /// Base array of the space's dimensions with default buses and width.
    pub fn base_arch(&self) -> ArchParams {
        ArchParams::base(self.n_rows, self.m_cols)
    }
}

/// A kernel context with a display name.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub name: String,
    pub context: Context,
}

impl Kernel {
    pub fn new(name: impl Into<String>, context: Context) -> Self {
        Kernel {
            name: name.into(),
            context,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelEval<T> {
    pub kernel_name: String,
    pub cycles: u32,
    pub stalls: u32,
    pub et_ns: T,
    pub dr_percent: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateEval<T> {
    pub arch: ArchParams,
    pub area: AreaEstimate<T>,
    /// Area reduction against the base array, percent.
    pub area_reduction: T,
    pub array_delay: T,
    pub per_kernel: Vec<KernelEval<T>>,
    pub total_et: T,
}

impl<T: Scalar> CandidateEval<T> {
    pub fn label(&self) -> String {
        self.arch.variant_key().to_string()
    }

    pub fn objectives(&self) -> (T, T) {
        (self.area.estimated_slices, self.total_et)
    }
}

/// `(et, dr)` for a kernel run of `cycles` at `array_delay_ns`.
pub fn evaluate_performance<T: Scalar>(
    cycles: u32,
    array_delay_ns: T,
    base_et_ns: T,
) -> Result<(T, T), DseError> {
    if base_et_ns <= T::zero() {
        return Err(DseError::NonPositiveBaseEt(base_et_ns.to_f64()));
    }
    let et = T::from_u64(cycles as u64) * array_delay_ns;
    let dr = T::hundred() * (base_et_ns - et) / base_et_ns;
    Ok((et, dr))
}

/// Sort key giving the deterministic candidate order: Base, then
/// (kind, stages, shr, shc) ascending.
pub fn param_key(arch: &ArchParams) -> (u8, Opcode, usize, usize, usize) {
    match arch.sharing {
        Sharing::Base => (0, Opcode::Load, 0, 0, 0),
        Sharing::Shared(s) => (1, s.resource_kind, s.stages, s.shr, s.shc),
    }
}

/// Base first, then every shared combination in lexicographic order.
pub fn enumerate_candidates(space: &SearchSpace, base_arch: &ArchParams) -> Vec<ArchParams> {
    let base = base_arch.as_base();
    let mut out = vec![base];
    for &kind in &space.resource_kinds {
        for &stages in &space.stage_options {
            for &shr in &space.shr_options {
                for &shc in &space.shc_options {
                    if shr == 0 && shc == 0 {
                        continue;
                    }
                    let mut arch = base;
                    arch.sharing = Sharing::Shared(SharedResource {
                        resource_kind: kind,
                        shr,
                        shc,
                        stages,
                    });
                    out.push(arch);
                }
            }
        }
    }
    out
}

fn aggregate<T: Scalar>(how: Aggregate, ets: impl Iterator<Item = T>) -> T {
    match how {
        Aggregate::Sum => ets.fold(T::zero(), |a, b| a + b),
        Aggregate::Max => ets.fold(T::zero(), |a, b| if b > a { b } else { a }),
    }
}

fn measured_delay<T: Scalar>(arch: &ArchParams, costs: &CostTable<T>) -> Result<T, DseError> {
    if let Some(res) = arch.shared_resource() {
        if res.resource_kind != Opcode::Mult {
            return Err(DseError::UnmeasuredKind(res.resource_kind));
        }
    }
    Ok(lookup_array_delay(arch, costs)?)
}

fn cycles_and_stalls(arch: &ArchParams, kernel: &Kernel) -> Result<(u32, u32), DseError> {
    if arch.shared_resource().is_none() {
        return Ok((kernel.context.length_cycles(), 0));
    }
    let r = rearrange(&kernel.context, arch).map_err(|source| DseError::Schedule {
        kernel: kernel.name.clone(),
        source,
    })?;
    Ok((r.total_cycles, r.total_stalls()))
}

/// Base-array execution time of each kernel.
pub fn base_execution_times<T: Scalar>(
    base_arch: &ArchParams,
    kernels: &[Kernel],
    costs: &CostTable<T>,
) -> Result<Vec<T>, DseError> {
    let base = base_arch.as_base();
    let delay = measured_delay(&base, costs)?;
    Ok(kernels
        .iter()
        .map(|k| T::from_u64(k.context.length_cycles() as u64) * delay)
        .collect())
}

/// Area, delay and per-kernel performance of `arch` (sum aggregate).
pub fn evaluate_candidate<T: Scalar>(
    arch: &ArchParams,
    kernels: &[Kernel],
    costs: &CostTable<T>,
) -> Result<CandidateEval<T>, DseError> {
    let base_ets = base_execution_times(arch, kernels, costs)?;
    evaluate_against(arch, kernels, costs, &base_ets, Aggregate::Sum)
}

fn evaluate_against<T: Scalar>(
    arch: &ArchParams,
    kernels: &[Kernel],
    costs: &CostTable<T>,
    base_ets: &[T],
    how: Aggregate,
) -> Result<CandidateEval<T>, DseError> {
    if kernels.is_empty() {
        return Err(DseError::NoKernels);
    }
    let area = estimate_hw_cost(arch, costs)?;
    let area_reduction = area_reduction_ratio(area.base_slices, area.estimated_slices)?;
    let array_delay = measured_delay(arch, costs)?;
    let per_kernel = kernels
        .iter()
        .zip(base_ets)
        .map(|(k, &base_et)| {
            let (cycles, stalls) = cycles_and_stalls(arch, k)?;
            let (et_ns, dr_percent) = evaluate_performance(cycles, array_delay, base_et)?;
            Ok(KernelEval {
                kernel_name: k.name.clone(),
                cycles,
                stalls,
                et_ns,
                dr_percent,
            })
        })
        .collect::<Result<Vec<_>, DseError>>()?;
    let total_et = aggregate(how, per_kernel.iter().map(|k| k.et_ns));
    Ok(CandidateEval {
        arch: *arch,
        area,
        area_reduction,
        array_delay,
        per_kernel,
        total_et,
    })
}

fn dominates<T: PartialOrd>(a: &(T, T), b: &(T, T)) -> bool {
    a.0 <= b.0 && a.1 <= b.1 && (a.0 < b.0 || a.1 < b.1)
}

/// Indices of the non-dominated points (minimizing both coordinates), in
/// input order. Equal points are all kept.
pub fn pareto_indices<T: PartialOrd>(points: &[(T, T)]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|p| dominates(p, &points[i])))
        .collect()
}

/// Non-dominated candidates under (area, total ET), in input order.
pub fn pareto_filter<T: Scalar>(evals: &[CandidateEval<T>]) -> Vec<CandidateEval<T>> {
    let points: Vec<(T, T)> = evals.iter().map(CandidateEval::objectives).collect();
    pareto_indices(&points)
        .into_iter()
        .map(|i| evals[i].clone())
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum SelectionPolicy {
    #[default]
    MinEt,
    MinArea,
    Weighted { w_area: f64, w_et: f64 },
}

fn policy_cmp<T: Scalar>(policy: SelectionPolicy, a: &CandidateEval<T>, b: &CandidateEval<T>) -> Ordering {
    let cmp = |x: T, y: T| x.partial_cmp(&y).unwrap_or(Ordering::Equal);
    let (aa, ae) = a.objectives();
    let (ba, be) = b.objectives();
    let primary = match policy {
        SelectionPolicy::MinEt => cmp(ae, be),
        SelectionPolicy::MinArea => cmp(aa, ba),
        SelectionPolicy::Weighted { w_area, w_et } => {
            let wa = T::from_f64(w_area);
            let we = T::from_f64(w_et);
            cmp(wa * aa + we * ae, wa * ba + we * be)
        }
    };
    primary
        .then_with(|| cmp(aa, ba))
        .then_with(|| param_key(&a.arch).cmp(&param_key(&b.arch)))
}

/// The best point of `pareto` under `policy`; ties go to the smaller area,
/// then to the lexicographically smaller parameters.
pub fn select_optimal<T: Scalar>(
    pareto: &[CandidateEval<T>],
    policy: SelectionPolicy,
) -> Result<&CandidateEval<T>, DseError> {
    pareto
        .iter()
        .min_by(|a, b| policy_cmp(policy, a, b))
        .ok_or(DseError::NoFeasibleDesign)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    AreaTooLarge { limit: f64 },
    TooSlow { limit: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateRecord<T> {
    pub eval: CandidateEval<T>,
    pub verdict: Verdict,
    pub pareto: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub variant: VariantKey,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exploration<T> {
    pub kernels: Vec<String>,
    pub base_total_et: T,
    /// Every evaluated candidate, Base first.
    pub candidates: Vec<CandidateRecord<T>>,
    pub skipped: Vec<Skipped>,
    /// Index into `candidates` of the selected design.
    pub optimal: Option<usize>,
}

impl<T: Scalar> Exploration<T> {
    pub fn pareto(&self) -> Vec<&CandidateEval<T>> {
        self.candidates
            .iter()
            .filter(|c| c.pareto)
            .map(|c| &c.eval)
            .collect()
    }

    pub fn optimal(&self) -> Option<&CandidateEval<T>> {
        self.optimal.map(|i| &self.candidates[i].eval)
    }
}

/// Enumerates, evaluates (in parallel), thresholds, filters and selects.
pub fn explore<T: Scalar>(
    space: &SearchSpace,
    kernels: &[Kernel],
    costs: &CostTable<T>,
    policy: SelectionPolicy,
) -> Result<Exploration<T>, DseError> {
    space.validate()?;
    if kernels.is_empty() {
        return Err(DseError::NoKernels);
    }
    let base_arch = space.base_arch();
    let base_ets = base_execution_times(&base_arch, kernels, costs)?;
    let base_total_et = aggregate(space.aggregate, base_ets.iter().copied());
    let candidates = enumerate_candidates(space, &base_arch);

    let results: Vec<Result<CandidateEval<T>, DseError>> = candidates
        .par_iter()
        .map(|arch| evaluate_against(arch, kernels, costs, &base_ets, space.aggregate))
        .collect();

    let area_limit = match space.max_area {
        Some(a) => T::from_f64(a),
        None => T::from_usize(base_arch.n_rows * base_arch.m_cols) * costs.pe_area,
    };
    let et_limit = T::from_f64(space.max_total_et_factor) * base_total_et;

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (arch, result) in candidates.iter().zip(results) {
        match result {
            Ok(eval) => {
                let verdict = if !(eval.area.estimated_slices < area_limit) {
                    Verdict::AreaTooLarge {
                        limit: area_limit.to_f64(),
                    }
                } else if eval.total_et > et_limit {
                    Verdict::TooSlow {
                        limit: et_limit.to_f64(),
                    }
                } else {
                    Verdict::Accepted
                };
                records.push(CandidateRecord {
                    eval,
                    verdict,
                    pareto: false,
                });
            }
            Err(e @ (DseError::Cost(CostError::MissingDelay { .. }) | DseError::Cost(CostError::MissingSwitchArea { .. }) | DseError::UnmeasuredKind(_))) => {
                log::warn!("skipping {}: {e}", arch.variant_key());
                skipped.push(Skipped {
                    variant: arch.variant_key(),
                    reason: e.to_string(),
                });
            }
            Err(e) => return Err(e),
        }
    }

    let accepted: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].verdict == Verdict::Accepted)
        .collect();
    let points: Vec<(T, T)> = accepted.iter().map(|&i| records[i].eval.objectives()).collect();
    for p in pareto_indices(&points) {
        records[accepted[p]].pareto = true;
    }
    let optimal = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.pareto)
        .min_by(|(_, a), (_, b)| policy_cmp(policy, &a.eval, &b.eval))
        .map(|(i, _)| i);

    Ok(Exploration {
        kernels: kernels.iter().map(|k| k.name.clone()).collect(),
        base_total_et,
        candidates: records,
        skipped,
        optimal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::generate_matmul_context;
    use crate::scalar::fmt2;

    fn matmul4() -> Vec<Kernel> {
        vec![Kernel::new("matmul4", generate_matmul_context(4, 1).unwrap())]
    }

    #[test]
    fn performance_examples() {
        let (et, dr) = evaluate_performance(15, 26.0, 390.0).unwrap();
        assert_eq!((fmt2(et), fmt2(dr)), ("390.00".into(), "0.00".into()));
        let (et, dr) = evaluate_performance(19, 26.85, 390.0).unwrap();
        assert_eq!((fmt2(et), fmt2(dr)), ("510.15".into(), "-30.81".into()));
        let (et, dr) = evaluate_performance(39, 16.72, 1014.0).unwrap();
        assert_eq!((fmt2(et), fmt2(dr)), ("652.08".into(), "35.69".into()));
        assert!(matches!(
            evaluate_performance(1, 1.0, 0.0),
            Err(DseError::NonPositiveBaseEt(_))
        ));
    }

    #[test]
    fn enumeration_order_and_size() {
        let base = ArchParams::base(8, 8);
        let space = SearchSpace::new(&[1, 2], &[1, 2], &[0, 1, 2]);
        let c = enumerate_candidates(&space, &base);
        assert_eq!(c.len(), 13);
        assert_eq!(c[0], base);
        assert_eq!(c[1], ArchParams::shared(8, 8, 1, 0, 1));
        assert_eq!(c[12], ArchParams::shared(8, 8, 2, 2, 2));
        let keys: Vec<_> = c.iter().map(param_key).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);

        let single = SearchSpace::new(&[2], &[1], &[0]);
        assert_eq!(enumerate_candidates(&single, &base).len(), 2);
        let with_zero = SearchSpace::new(&[1], &[0, 1], &[0]);
        assert_eq!(enumerate_candidates(&with_zero, &base).len(), 2);
    }

    #[test]
    fn candidate_examples() {
        let costs = CostTable::<f64>::default_table();
        let base = evaluate_candidate(&ArchParams::base(8, 8), &matmul4(), &costs).unwrap();
        assert_eq!(base.per_kernel[0].cycles, 27);
        assert_eq!(base.per_kernel[0].et_ns, 702.0);
        assert_eq!(base.per_kernel[0].dr_percent, 0.0);

        let rsp = evaluate_candidate(&ArchParams::shared(8, 8, 1, 0, 2), &matmul4(), &costs).unwrap();
        assert_eq!(rsp.per_kernel[0].cycles, 35);
        assert_eq!(fmt2(rsp.per_kernel[0].et_ns), "585.20");
        assert_eq!(fmt2(rsp.per_kernel[0].dr_percent), "16.64");

        let rs = evaluate_candidate(&ArchParams::shared(8, 8, 2, 0, 1), &matmul4(), &costs).unwrap();
        assert_eq!(rs.per_kernel[0].cycles, 27);
        assert_eq!(fmt2(rs.per_kernel[0].et_ns), "755.19");
        assert_eq!(fmt2(rs.per_kernel[0].dr_percent), "-7.58");
    }

    #[test]
    fn pareto_basics() {
        assert_eq!(pareto_indices::<f64>(&[]), Vec::<usize>::new());
        assert_eq!(pareto_indices(&[(1.0, 1.0)]), vec![0]);
        assert_eq!(pareto_indices(&[(1.0, 2.0), (1.0, 2.0)]), vec![0, 1]);
        assert_eq!(
            pareto_indices(&[(3.0, 1.0), (1.0, 3.0), (2.0, 2.0), (3.0, 3.0)]),
            vec![0, 1, 2]
        );
    }

    #[test]
    fn selection_policies() {
        let costs = CostTable::<f64>::default_table();
        let evals: Vec<_> = [ArchParams::shared(8, 8, 1, 0, 1), ArchParams::shared(8, 8, 1, 0, 2)]
            .iter()
            .map(|a| evaluate_candidate(a, &matmul4(), &costs).unwrap())
            .collect();
        let front = pareto_filter(&evals);
        assert_eq!(front.len(), 2);
        assert_eq!(select_optimal(&front, SelectionPolicy::MinEt).unwrap().label(), "RSP#1");
        assert_eq!(select_optimal(&front, SelectionPolicy::MinArea).unwrap().label(), "RS#1");
        let w = SelectionPolicy::Weighted { w_area: 1.0, w_et: 0.0 };
        assert_eq!(select_optimal(&front, w).unwrap().label(), "RS#1");
        assert!(matches!(
            select_optimal::<f64>(&[], SelectionPolicy::MinEt),
            Err(DseError::NoFeasibleDesign)
        ));
    }

    #[test]
    fn exploration_of_reference_designs() {
        let costs = CostTable::<f64>::default_table();
        let space = SearchSpace::new(&[1, 2, 3], &[1, 2], &[0, 1, 2]);
        let x = explore(&space, &matmul4(), &costs, SelectionPolicy::MinEt).unwrap();
        // 1 base + 8 reference designs evaluated; (1,1),(1,2) and stages 3 lack delays
        assert_eq!(x.candidates.len(), 9);
        assert_eq!(x.skipped.len(), 18 - 8);
        assert_eq!(
            x.candidates[0].verdict,
            Verdict::AreaTooLarge { limit: 58240.0 }
        );
        assert!(x.candidates[1..].iter().all(|c| c.verdict == Verdict::Accepted));
        let opt = x.optimal().unwrap();
        assert_eq!(opt.label(), "RSP#1");
        for c in &x.candidates {
            assert_eq!(c.eval.total_et, c.eval.per_kernel[0].et_ns);
        }
    }

    #[test]
    fn space_json() {
        let s = SearchSpace::from_json_str(
            r#"{"stage_options": [1, 2], "shr_options": [1, 2], "shc_options": [0, 1, 2]}"#,
        )
        .unwrap();
        assert_eq!(s.n_rows, 8);
        assert_eq!(s.max_total_et_factor, 1.5);
        assert_eq!(s.resource_kinds, default_kinds());
        assert!(SearchSpace::from_json_str(
            r#"{"stage_options": [], "shr_options": [1], "shc_options": [0]}"#
        )
        .is_err());
        assert!(SearchSpace::from_json_str(
            r#"{"stage_options": [1], "shr_options": [1], "shc_options": [0], "bogus": 1}"#
        )
        .is_err());
    }
}
