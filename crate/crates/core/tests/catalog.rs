mod common;

use std::collections::BTreeMap;

use ctgen_core::catalog::check_raw;
use ctgen_core::{parse_catalog, validate_constraint, RawConstraint};
use proptest::prelude::*;
use serde_json::json;

fn document(entries: &[Vec<RawConstraint>]) -> Vec<u8> {
    let mut apis = BTreeMap::new();
    for (i, params) in entries.iter().enumerate() {
        let names: Vec<String> = (0..params.len()).map(|k| format!("p{k}")).collect();
        let constraints: BTreeMap<&str, &RawConstraint> =
            names.iter().map(String::as_str).zip(params).collect();
        apis.insert(
            format!("api{i}"),
            json!({"parameters": names, "constraints": constraints}),
        );
    }
    serde_json::to_vec(&json!({"module": "m", "apis": apis})).unwrap()
}

proptest! {
    #[test]
    fn accepted_entries_round_trip(
        entries in prop::collection::vec(prop::collection::vec(common::raw_constraint(), 1..4), 1..6)
    ) {
        let catalog = parse_catalog(&document(&entries)).unwrap();
        let docs = catalog.to_documents();
        let mut again = ctgen_core::ConstraintCatalog::default();
        for (_, doc) in &docs {
            again.merge(parse_catalog(doc.as_bytes()).unwrap());
        }
        prop_assert_eq!(again.diagnostics.rejected, 0);
        prop_assert_eq!(again.to_documents(), docs);
        prop_assert_eq!(
            catalog.diagnostics.accepted + catalog.diagnostics.rejected,
            entries.len()
        );
    }

    #[test]
    fn accepted_constraints_revalidate_clean(
        entries in prop::collection::vec(prop::collection::vec(common::raw_constraint(), 1..4), 1..6)
    ) {
        let catalog = parse_catalog(&document(&entries)).unwrap();
        for api in catalog.module("m").into_iter().flat_map(|m| m.values()) {
            for c in api.constraints.values() {
                prop_assert!(validate_constraint(&c.to_raw()).is_empty());
            }
        }
    }

    #[test]
    fn adding_an_invalid_field_never_accepts(c in common::valid_constraint(), which in 0..4usize) {
        let mut raw = c.to_raw();
        match which {
            0 => raw.range = Some([1.0, 0.0]),
            1 => raw.ndim = Some(vec![-1]),
            2 => raw.dtype = Some(vec!["complex257".into()]),
            _ => raw.enum_values = Some(Vec::new()),
        }
        prop_assert!(check_raw(&raw).is_err());
    }
}

#[test]
fn invalid_range_is_rejected_with_reason() {
    let doc = br#"{"module": "m", "apis": {
        "f": {"parameters": ["x"], "constraints": {"x": {"dtype": ["float32"], "range": [1, 0]}}},
        "g": {"parameters": ["x"], "constraints": {"x": {"dtype": ["float"]}}}}}"#;
    let catalog = parse_catalog(doc).unwrap();
    assert_eq!(catalog.diagnostics.accepted, 1);
    assert_eq!(catalog.diagnostics.rejected, 1);
    let reason = catalog.diagnostics.rejections[0].to_string();
    assert!(reason.contains("range"), "{reason}");
}
