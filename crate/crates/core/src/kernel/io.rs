//! JSON reading and writing of contexts.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Context, KernelError, Opcode, Operation};

#[derive(Serialize)]
pub(crate) struct ContextDoc<'a> {
    pub n_rows: usize,
    pub m_cols: usize,
    pub iteration_count: u32,
    pub critical_opcodes: &'a BTreeSet<Opcode>,
    pub ops: &'a [Operation],
}

impl<'a> From<&'a Context> for ContextDoc<'a> {
    fn from(ctx: &'a Context) -> Self {
        ContextDoc {
            n_rows: ctx.n_rows,
            m_cols: ctx.m_cols,
            iteration_count: ctx.iteration_count,
            critical_opcodes: &ctx.critical_opcodes,
            ops: ctx.ops(),
        }
    }
}

#[derive(Deserialize)]
struct Header {
    n_rows: usize,
    m_cols: usize,
    iteration_count: u32,
    #[serde(default = "Context::default_critical")]
    critical_opcodes: BTreeSet<Opcode>,
}

pub fn serialize_context(ctx: &Context) -> String {
    serde_json::to_string_pretty(&ContextDoc::from(ctx)).expect("context serializes")
}

/// Parses a context document, reporting per-op problems with index and id.
pub fn parse_context(document: &str) -> Result<Context, KernelError> {
    let value: Value = serde_json::from_str(document)?;
    context_from_value(&value)
}

pub(crate) fn context_from_value(value: &Value) -> Result<Context, KernelError> {
    let obj = value
        .as_object()
        .ok_or_else(|| KernelError::Malformed("expected a JSON object".into()))?;
    let mut header_obj = obj.clone();
    let ops_value = header_obj
        .remove("ops")
        .ok_or_else(|| KernelError::Malformed("missing field `ops`".into()))?;
    let header: Header = serde_json::from_value(Value::Object(header_obj))
        .map_err(|e| KernelError::Malformed(e.to_string()))?;
    if header.n_rows == 0 || header.m_cols == 0 {
        return Err(KernelError::Malformed(format!(
            "array dimensions must be positive, got {}x{}",
            header.n_rows, header.m_cols
        )));
    }
    if header.iteration_count == 0 {
        return Err(KernelError::Malformed(
            "iteration_count must be positive".into(),
        ));
    }
    let raw_ops = ops_value
        .as_array()
        .ok_or_else(|| KernelError::Malformed("`ops` must be an array".into()))?;
    let mut ops = Vec::with_capacity(raw_ops.len());
    for (index, raw) in raw_ops.iter().enumerate() {
        let id = raw
            .get("id")
            .map(|v| v.to_string())
            .unwrap_or_else(|| "?".into());
        let op: Operation =
            serde_json::from_value(raw.clone()).map_err(|e| KernelError::MalformedOp {
                index,
                id: id.clone(),
                message: e.to_string(),
            })?;
        if op.cycle == 0 {
            return Err(KernelError::MalformedOp {
                index,
                id,
                message: "cycle numbers start at 1".into(),
            });
        }
        ops.push(op);
    }
    Context::new(
        header.n_rows,
        header.m_cols,
        header.iteration_count,
        header.critical_opcodes,
        ops,
    )
}
