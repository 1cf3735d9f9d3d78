//! Classification of values and test cases against the constraint catalog.

use std::fmt;

use serde::Serialize;

use crate::catalog::{ConstraintCatalog, DtypeName, ParameterConstraint};
use crate::literal::Literal;
use crate::model::{materialize, Scalar, StatementKind, TestCase, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueViolation {
    Tensor,
    Structure,
    Dtype,
    Ndim,
    Range,
    Enum,
}

impl ValueViolation {
    pub fn code(self) -> &'static str {
        match self {
            ValueViolation::Tensor => "tensor-violation",
            ValueViolation::Structure => "structure-violation",
            ValueViolation::Dtype => "dtype-violation",
            ValueViolation::Ndim => "ndim-violation",
            ValueViolation::Range => "range-violation",
            ValueViolation::Enum => "enum-violation",
        }
    }
}

impl fmt::Display for ValueViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

fn scalar_fits(v: &Value, dtype: DtypeName) -> bool {
    match v {
        Value::Bool(_) => dtype == DtypeName::Bool,
        Value::Int(i) => dtype.accepts_int(*i),
        Value::Float(x) => dtype.accepts_float(*x),
        Value::Str(_) => dtype == DtypeName::String,
        _ => false,
    }
}

fn dtype_ok(v: &Value, allowed: &std::collections::BTreeSet<DtypeName>) -> bool {
    match v {
        Value::Array(a) | Value::Tensor(a) => allowed.contains(&a.dtype),
        Value::List(items) | Value::Tuple(items) => items.iter().all(|x| dtype_ok(x, allowed)),
        Value::None => false,
        scalar => allowed.iter().any(|&d| scalar_fits(scalar, d)),
    }
}

fn range_ok(v: &Value, lo: f64, hi: f64) -> bool {
    let inside = |x: f64| lo <= x && x <= hi;
    match v {
        Value::Int(i) => inside(*i as f64),
        Value::Float(x) => inside(*x),
        Value::List(items) | Value::Tuple(items) => items.iter().all(|x| range_ok(x, lo, hi)),
        Value::Array(a) | Value::Tensor(a) => a.data.iter().all(|s| match s {
            Scalar::Bool(_) => true,
            other => inside(other.as_f64()),
        }),
        _ => true,
    }
}

fn as_literal(v: &Value) -> Option<Literal> {
    Some(match v {
        Value::None => Literal::Null,
        Value::Bool(b) => Literal::Bool(*b),
        Value::Int(i) => Literal::Int(*i),
        Value::Float(x) => Literal::Float(*x),
        Value::Str(s) => Literal::Str(s.clone()),
        _ => return None,
    })
}

/// Every constraint field the value violates, in field order. Booleans are
/// not numeric for range purposes.
pub fn check_value(v: &Value, c: &ParameterConstraint) -> Vec<ValueViolation> {
    let mut out = Vec::new();
    if c.tensor_t
        .is_some_and(|t| t != matches!(v, Value::Tensor(_)))
    {
        out.push(ValueViolation::Tensor);
    }
    if let Some(kinds) = &c.structure {
        if !v.container_kind().is_some_and(|k| kinds.contains(&k)) {
            out.push(ValueViolation::Structure);
        }
    }
    if let Some(allowed) = &c.dtype {
        if !dtype_ok(v, allowed) {
            out.push(ValueViolation::Dtype);
        }
    }
    if let Some(dims) = &c.ndim {
        if !u32::try_from(v.rank()).is_ok_and(|r| dims.contains(&r)) {
            out.push(ValueViolation::Ndim);
        }
    }
    if let Some((lo, hi)) = c.range {
        if !range_ok(v, lo, hi) {
            out.push(ValueViolation::Range);
        }
    }
    if let Some(allowed) = &c.enum_values {
        let member =
            as_literal(v).is_some_and(|lit| allowed.iter().any(|a| a.loosely_equals(&lit)));
        if !member {
            out.push(ValueViolation::Enum);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamViolation {
    pub param: String,
    pub violations: Vec<ValueViolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CallCompliance {
    pub statement: usize,
    pub api: String,
    pub violations: Vec<ParamViolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplianceReport {
    pub compliant: bool,
    pub calls: Vec<CallCompliance>,
}

/// A test case is compliant iff every argument of every call to a
/// documented API satisfies its parameter's constraint.
pub fn check_test_case(
    tc: &TestCase,
    catalog: &ConstraintCatalog,
    module: &str,
) -> ComplianceReport {
    let values = materialize(tc);
    let mut calls = Vec::new();
    for (i, stmt) in tc.statements.iter().enumerate() {
        let StatementKind::Call { api, args } = &stmt.kind else {
            continue;
        };
        let mut violations = Vec::new();
        if let Some(spec) = catalog.lookup(module, api) {
            for (param, &arg) in spec.parameters.iter().zip(args) {
                if let Some(c) = spec.constraint_for(param) {
                    let found = check_value(&values[arg], c);
                    if !found.is_empty() {
                        violations.push(ParamViolation {
                            param: param.clone(),
                            violations: found,
                        });
                    }
                }
            }
        }
        calls.push(CallCompliance {
            statement: i,
            api: api.clone(),
            violations,
        });
    }
    ComplianceReport {
        compliant: calls.iter().all(|c| c.violations.is_empty()),
        calls,
    }
}
