use serde::Serialize;

use crate::catalog::DtypeName;
use crate::literal::Literal;
use crate::model::{nest, NdArray, Scalar, StatementKind, TestCase, Value};
use crate::sut::{execute_call, CallOutcome, CoverageRecorder, OutcomeKind, SutModule};

/// Outcome of interpreting one test case.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TestExecution {
    pub outcomes: Vec<CallOutcome>,
    /// Statement index of each outcome's Call.
    pub call_indices: Vec<usize>,
    pub aborted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestStatus {
    Passed,
    ExpectedFailure,
    Crashed,
}

impl TestExecution {
    pub fn status(&self) -> TestStatus {
        if self.aborted {
            TestStatus::Crashed
        } else if self.outcomes.iter().any(|o| o.kind.is_failure()) {
            TestStatus::ExpectedFailure
        } else {
            TestStatus::Passed
        }
    }

    pub fn covered(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .outcomes
            .iter()
            .flat_map(|o| o.covered.iter().copied())
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    }
}

pub(crate) fn literal_to_value(lit: &Literal) -> Value {
    match lit {
        Literal::Null => Value::None,
        Literal::Bool(b) => Value::Bool(*b),
        Literal::Int(i) => Value::Int(*i),
        Literal::Float(x) => Value::Float(*x),
        Literal::Str(s) => Value::Str(s.clone()),
    }
}

fn cast(s: Scalar, dtype: DtypeName) -> Scalar {
    if dtype == DtypeName::Bool {
        Scalar::Bool(s.as_f64() != 0.0)
    } else if dtype.is_integer() {
        match s {
            Scalar::Int(i) => Scalar::Int(i),
            other => Scalar::Int(other.as_f64() as i64),
        }
    } else {
        Scalar::Float(s.as_f64())
    }
}

/// Value of a non-call statement given the values of its predecessors.
fn build_value(tc: &TestCase, values: &[Value], i: usize) -> Option<Value> {
    Some(match &tc.statements[i].kind {
        StatementKind::Primitive { value, .. } => value.clone(),
        StatementKind::UnsignedInt { value, .. } => {
            Value::Int(i64::try_from(*value).unwrap_or(i64::MAX))
        }
        StatementKind::Enum { allowed, chosen } => literal_to_value(&allowed[*chosen]),
        StatementKind::NestedList { shape, values, .. } => nest(shape, values),
        StatementKind::DtypeLiteral { dtype } => Value::Str(dtype.as_str().to_string()),
        StatementKind::BuildArray { list, dtype } => {
            let StatementKind::NestedList {
                shape,
                values: data,
                ..
            } = &tc.statements[*list].kind
            else {
                unreachable!("invariant: BuildArray list ref")
            };
            let StatementKind::DtypeLiteral { dtype } = tc.statements[*dtype].kind else {
                unreachable!("invariant: BuildArray dtype ref")
            };
            Value::Array(NdArray {
                shape: shape.clone(),
                dtype,
                data: data.iter().map(|&s| cast(s, dtype)).collect(),
            })
        }
        StatementKind::ToTensor { array } => match &values[*array] {
            Value::Array(a) => Value::Tensor(a.clone()),
            _ => unreachable!("invariant: ToTensor array ref"),
        },
        StatementKind::Container { kind, items, .. } => Value::from_container(*kind, items.clone()),
        StatementKind::Call { .. } => return None,
    })
}

/// The value of every statement without running any call (calls yield
/// `None`).
pub fn materialize(tc: &TestCase) -> Vec<Value> {
    let mut values = Vec::with_capacity(tc.len());
    for i in 0..tc.len() {
        let v = build_value(tc, &values, i).unwrap_or(Value::None);
        values.push(v);
    }
    values
}

/// Interprets the statements in order. A crashing call stops the test case.
pub fn evaluate(tc: &TestCase, sut: &SutModule, recorder: &mut CoverageRecorder) -> TestExecution {
    recorder.aborted = false;
    let mut values: Vec<Value> = Vec::with_capacity(tc.len());
    let mut exec = TestExecution::default();
    for (i, stmt) in tc.statements.iter().enumerate() {
        let v = match &stmt.kind {
            StatementKind::Call { api, args } => {
                let argv: Vec<Value> = args.iter().map(|&a| values[a].clone()).collect();
                let outcome = match sut.function(api) {
                    Some(f) => execute_call(sut, f, &argv, recorder),
                    None => CallOutcome {
                        function: usize::MAX,
                        kind: OutcomeKind::ArityError,
                        returned: None,
                        covered: Vec::new(),
                        distances: Vec::new(),
                    },
                };
                let ret = outcome
                    .returned
                    .as_ref()
                    .map(literal_to_value)
                    .unwrap_or(Value::None);
                let crashed = outcome.kind == OutcomeKind::Crashed;
                exec.outcomes.push(outcome);
                exec.call_indices.push(i);
                if crashed {
                    exec.aborted = true;
                    break;
                }
                ret
            }
            _ => build_value(tc, &values, i).expect("non-call statement"),
        };
        values.push(v);
    }
    exec
}
