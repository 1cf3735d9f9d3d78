use std::fmt::Write;

use crate::literal::Literal;
use crate::model::{nest, StatementKind, TestCase, TestExecution, TestStatus, Value};
use crate::sut::OutcomeKind;

fn render_value(v: &Value, out: &mut String) {
    match v {
        Value::None => out.push_str("None"),
        Value::Bool(b) => out.push_str(if *b { "True" } else { "False" }),
        Value::Int(i) => write!(out, "{i}").unwrap(),
        Value::Float(x) => write!(out, "{}", Literal::Float(*x)).unwrap(),
        Value::Str(s) => write!(out, "{}", Literal::Str(s.clone())).unwrap(),
        Value::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_value(item, out);
            }
            out.push(']');
        }
        Value::Tuple(items) => {
            out.push('(');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_value(item, out);
            }
            if items.len() == 1 {
                out.push(',');
            }
            out.push(')');
        }
        Value::Array(a) | Value::Tensor(a) => {
            let ctor = if matches!(v, Value::Array(_)) {
                "np.array"
            } else {
                "to_tensor"
            };
            write!(out, "{ctor}(").unwrap();
            render_value(&nest(&a.shape, &a.data), out);
            write!(out, ", dtype=\"{}\")", a.dtype).unwrap();
        }
    }
}

fn outcome_note(kind: OutcomeKind) -> Option<String> {
    match kind {
        OutcomeKind::Returned => None,
        OutcomeKind::Raised(e) => Some(format!("raises {e:?}")),
        OutcomeKind::ArityError | OutcomeKind::TypeEvalError => Some("raises TypeError".into()),
        OutcomeKind::Crashed => Some("crashes the interpreter".into()),
    }
}

/// Renders one test case as a Python-style test function.
pub fn render_script(tc: &TestCase, exec: &TestExecution, module: &str, name: &str) -> String {
    let mut out = String::new();
    match exec.status() {
        TestStatus::Passed => {}
        TestStatus::ExpectedFailure => out.push_str("@expected_failure(strict)\n"),
        TestStatus::Crashed => out.push_str("@quarantined_crash\n"),
    }
    writeln!(out, "def {name}():").unwrap();
    if tc.is_empty() {
        out.push_str("    pass\n");
    }
    for (i, stmt) in tc.statements.iter().enumerate() {
        write!(out, "    v{i} = ").unwrap();
        match &stmt.kind {
            StatementKind::Primitive { value, .. } => render_value(value, &mut out),
            StatementKind::UnsignedInt { value, .. } => write!(out, "{value}").unwrap(),
            StatementKind::Enum { allowed, chosen } => write!(out, "{}", allowed[*chosen]).unwrap(),
            StatementKind::NestedList { shape, values, .. } => {
                render_value(&nest(shape, values), &mut out)
            }
            StatementKind::DtypeLiteral { dtype } => write!(out, "\"{dtype}\"").unwrap(),
            StatementKind::BuildArray { list, dtype } => {
                write!(out, "np.array(v{list}, dtype=v{dtype})").unwrap()
            }
            StatementKind::ToTensor { array } => write!(out, "to_tensor(v{array})").unwrap(),
            StatementKind::Container { kind, items, .. } => {
                render_value(&Value::from_container(*kind, items.clone()), &mut out)
            }
            StatementKind::Call { api, args } => {
                write!(out, "{module}.{api}(").unwrap();
                for (j, a) in args.iter().enumerate() {
                    if j > 0 {
                        out.push_str(", ");
                    }
                    write!(out, "v{a}").unwrap();
                }
                out.push(')');
                let note = exec
                    .call_indices
                    .iter()
                    .position(|&c| c == i)
                    .and_then(|k| outcome_note(exec.outcomes[k].kind));
                if let Some(note) = note {
                    write!(out, "  # {note}").unwrap();
                }
            }
        }
        out.push('\n');
    }
    out
}

/// Renders a whole module's emitted tests.
pub fn render_suite(module: &str, tests: &[(TestCase, TestExecution)]) -> String {
    let mut out = String::new();
    writeln!(out, "# Generated tests for module `{module}`.").unwrap();
    writeln!(out, "import numpy as np").unwrap();
    writeln!(
        out,
        "from harness import {module}, to_tensor, expected_failure, quarantined_crash"
    )
    .unwrap();
    for (i, (tc, exec)) in tests.iter().enumerate() {
        out.push_str("\n\n");
        out.push_str(&render_script(
            tc,
            exec,
            module,
            &format!("test_{module}_{i}"),
        ));
    }
    out
}
