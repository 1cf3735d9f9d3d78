#![allow(dead_code)]

use std::sync::Arc;

use ctgen_core::catalog::check_raw;
use ctgen_core::{DtypeName, Literal, ParameterConstraint, RawConstraint};
use proptest::prelude::*;

pub fn literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        Just(Literal::Null),
        any::<bool>().prop_map(Literal::Bool),
        (-6i64..6).prop_map(Literal::Int),
        (-12i32..12).prop_map(|h| Literal::Float(f64::from(h) / 2.0)),
        prop::sample::select(vec!["mean", "sum", "none", "a"]).prop_map(|s| Literal::Str(s.into())),
    ]
}

pub fn raw_constraint() -> impl Strategy<Value = RawConstraint> {
    let names: Vec<String> = DtypeName::ALL
        .iter()
        .map(|d| d.as_str().to_string())
        .collect();
    (
        prop::option::of(prop::sample::subsequence(names, 1..=4)),
        prop::option::of(prop::sample::subsequence(vec![0i64, 1, 2, 3, 4, 6], 1..=3)),
        prop::option::of(any::<bool>()),
        prop::option::of(prop::sample::subsequence(
            vec!["list".to_string(), "tuple".to_string()],
            1..=2,
        )),
        prop::option::of(
            (-40i32..40, 0i32..40)
                .prop_map(|(lo, w)| [f64::from(lo) / 2.0, f64::from(lo + w) / 2.0]),
        ),
        prop::option::of(prop::collection::vec(literal(), 1..4)),
        any::<bool>(),
    )
        .prop_map(
            |(dtype, ndim, tensor_t, structure, range, enum_values, optional)| RawConstraint {
                dtype,
                ndim,
                tensor_t,
                structure,
                range,
                enum_values,
                optional,
            },
        )
}

pub fn valid_constraint() -> impl Strategy<Value = Arc<ParameterConstraint>> {
    raw_constraint().prop_filter_map("contradictory constraint", |raw| {
        check_raw(&raw).ok().map(Arc::new)
    })
}

pub const NN_SUT: &str = r#"{"module": "nn", "functions": {
  "glu": {"params": ["input", "dim=-1"], "body": [
    {"if": {"cmp": [{"is_tensor": "input"}, "==", false]}, "then": [{"raise": "TypeError"}]},
    {"if": {"cmp": [{"ndim": "input"}, "==", 0]}, "then": [{"raise": "RuntimeError"}]},
    {"if": {"cmp": [{"shape": ["input", 0]}, "<", 2]}, "then": [{"raise": "ValueError"}]},
    {"return": 1}]},
  "loss": {"params": ["input", "target", "reduction=\"mean\""], "body": [
    {"if": {"cmp": [{"ndim": "input"}, "!=", {"ndim": "target"}]}, "then": [{"raise": "ValueError"}]},
    {"if": {"cmp": [{"value": "reduction"}, "==", "sum"]}, "then": [{"return": 2}]},
    {"if": {"cmp": [{"value": "reduction"}, "==", "mean"]}, "then": [{"crash": true}]},
    {"return": 3}]}
}}"#;

pub const NN_CATALOG: &str = r#"{"module": "nn", "apis": {
  "glu": {"parameters": ["input", "dim"], "constraints": {
    "input": {"dtype": ["float32", "float64"], "ndim": [1, 2, 3]},
    "dim": {"dtype": ["int64"], "range": [-3, 2], "optional": true}}},
  "loss": {"parameters": ["input", "target", "reduction"], "constraints": {
    "input": {"dtype": ["float32"], "ndim": [1, 2]},
    "target": {"dtype": ["int64"], "ndim": [1, 2], "range": [0, 4]},
    "reduction": {"enum": ["mean", "sum", "none"], "optional": true}}}
}}"#;
