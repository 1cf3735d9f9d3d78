//! API constraint catalogs: parsing, validation and lookup.
//!
//! A catalog file describes, per module and API, the constraints each
//! parameter must satisfy. Loading never fails on a bad *entry*; such entries
//! are dropped and recorded in [`Diagnostics`]. Only a syntactically broken
//! document is a hard [`CatalogError`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::literal::Literal;
use crate::ordered::OrderedEntries;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
}

impl From<serde_json::Error> for CatalogError {
    fn from(err: serde_json::Error) -> Self {
        CatalogError::Syntax {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

/// The closed dtype universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtypeName {
    Bool,
    Int8,
    Int16,
    Int32,
    Int64,
    Uint8,
    Uint16,
    Uint32,
    Uint64,
    Float16,
    Float32,
    Float64,
    String,
}

impl DtypeName {
    pub const ALL: [DtypeName; 13] = [
        DtypeName::Bool,
        DtypeName::Int8,
        DtypeName::Int16,
        DtypeName::Int32,
        DtypeName::Int64,
        DtypeName::Uint8,
        DtypeName::Uint16,
        DtypeName::Uint32,
        DtypeName::Uint64,
        DtypeName::Float16,
        DtypeName::Float32,
        DtypeName::Float64,
        DtypeName::String,
    ];

    /// Every dtype a tensor can carry.
    pub const NUMERIC: [DtypeName; 12] = [
        DtypeName::Bool,
        DtypeName::Int8,
        DtypeName::Int16,
        DtypeName::Int32,
        DtypeName::Int64,
        DtypeName::Uint8,
        DtypeName::Uint16,
        DtypeName::Uint32,
        DtypeName::Uint64,
        DtypeName::Float16,
        DtypeName::Float32,
        DtypeName::Float64,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DtypeName::Bool => "bool",
            DtypeName::Int8 => "int8",
            DtypeName::Int16 => "int16",
            DtypeName::Int32 => "int32",
            DtypeName::Int64 => "int64",
            DtypeName::Uint8 => "uint8",
            DtypeName::Uint16 => "uint16",
            DtypeName::Uint32 => "uint32",
            DtypeName::Uint64 => "uint64",
            DtypeName::Float16 => "float16",
            DtypeName::Float32 => "float32",
            DtypeName::Float64 => "float64",
            DtypeName::String => "string",
        }
    }

    pub fn from_canonical(name: &str) -> Option<DtypeName> {
        DtypeName::ALL.into_iter().find(|d| d.as_str() == name)
    }

    /// Resolves a catalog spelling to a canonical dtype. The flag reports
    /// whether the name was qualified by a tensor library (`torch.`, `tf.`),
    /// which implies the parameter is a tensor.
    pub fn normalize(name: &str) -> Option<(DtypeName, bool)> {
        let name = name.trim();
        let (base, tensor_qualified) = ["torch.", "tf.", "tensorflow."]
            .iter()
            .find_map(|p| name.strip_prefix(p).map(|rest| (rest, true)))
            .or_else(|| {
                ["numpy.", "np."]
                    .iter()
                    .find_map(|p| name.strip_prefix(p).map(|rest| (rest, false)))
            })
            .unwrap_or((name, false));
        let dtype = match base {
            "float" => DtypeName::Float32,
            "double" => DtypeName::Float64,
            "half" => DtypeName::Float16,
            "int" | "long" => DtypeName::Int64,
            "short" => DtypeName::Int16,
            "char" => DtypeName::Int8,
            "byte" => DtypeName::Uint8,
            "boolean" | "bool_" => DtypeName::Bool,
            "str" => DtypeName::String,
            other => DtypeName::from_canonical(other)?,
        };
        Some((dtype, tensor_qualified))
    }

    pub fn is_unsigned(self) -> bool {
        matches!(
            self,
            DtypeName::Uint8 | DtypeName::Uint16 | DtypeName::Uint32 | DtypeName::Uint64
        )
    }

    pub fn is_integer(self) -> bool {
        matches!(
            self,
            DtypeName::Int8
                | DtypeName::Int16
                | DtypeName::Int32
                | DtypeName::Int64
                | DtypeName::Uint8
                | DtypeName::Uint16
                | DtypeName::Uint32
                | DtypeName::Uint64
        )
    }

    pub fn is_float(self) -> bool {
        matches!(
            self,
            DtypeName::Float16 | DtypeName::Float32 | DtypeName::Float64
        )
    }

    /// Inclusive integer bounds. `uint64` is capped at `i64::MAX` because
    /// integer values are stored as `i64`.
    pub fn int_bounds(self) -> Option<(i64, i64)> {
        Some(match self {
            DtypeName::Int8 => (i8::MIN as i64, i8::MAX as i64),
            DtypeName::Int16 => (i16::MIN as i64, i16::MAX as i64),
            DtypeName::Int32 => (i32::MIN as i64, i32::MAX as i64),
            DtypeName::Int64 => (i64::MIN, i64::MAX),
            DtypeName::Uint8 => (0, u8::MAX as i64),
            DtypeName::Uint16 => (0, u16::MAX as i64),
            DtypeName::Uint32 => (0, u32::MAX as i64),
            DtypeName::Uint64 => (0, i64::MAX),
            _ => return None,
        })
    }

    /// Largest finite magnitude of a float dtype.
    pub fn float_max(self) -> Option<f64> {
        match self {
            DtypeName::Float16 => Some(65504.0),
            DtypeName::Float32 => Some(f32::MAX as f64),
            DtypeName::Float64 => Some(f64::MAX),
            _ => None,
        }
    }

    pub fn accepts_int(self, v: i64) -> bool {
        self.int_bounds().is_some_and(|(lo, hi)| lo <= v && v <= hi)
    }

    pub fn accepts_float(self, v: f64) -> bool {
        self.float_max()
            .is_some_and(|m| v.is_finite() && v.abs() <= m)
    }

    /// Whether a value of this dtype can lie in `range` (strings ignore
    /// ranges, booleans count as 0/1).
    pub fn admits_range(self, range: Option<(f64, f64)>) -> bool {
        let Some((lo, hi)) = range else {
            return true;
        };
        match self {
            DtypeName::String => true,
            DtypeName::Bool => (lo <= 0.0 && 0.0 <= hi) || (lo <= 1.0 && 1.0 <= hi),
            d if d.is_integer() => {
                let (dlo, dhi) = d.int_bounds().unwrap();
                lo.max(dlo as f64).ceil() <= hi.min(dhi as f64).floor()
            }
            d => {
                let m = d.float_max().unwrap();
                lo.max(-m) <= hi.min(m)
            }
        }
    }
}

impl fmt::Display for DtypeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContainerKind {
    List,
    Tuple,
}

impl ContainerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ContainerKind::List => "list",
            ContainerKind::Tuple => "tuple",
        }
    }

    fn parse(s: &str) -> Option<ContainerKind> {
        match s {
            "list" => Some(ContainerKind::List),
            "tuple" => Some(ContainerKind::Tuple),
            _ => None,
        }
    }
}

/// A parameter constraint exactly as written in a catalog file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConstraint {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dtype: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ndim: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor_t: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
    #[serde(default, rename = "enum", skip_serializing_if = "Option::is_none")]
    pub enum_values: Option<Vec<Literal>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub optional: bool,
}

/// One reason a constraint is rejected. Each names the offending field.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    UnknownDtype(String),
    EmptyDtype,
    NegativeNdim(i64),
    EmptyNdim,
    UnknownStructure(String),
    EmptyStructure,
    InvalidRange(f64, f64),
    EmptyEnum,
    EmptyConstraint,
    EnumOutsideRange(Literal),
    EnumDtypeConflict(Literal),
    EnumNdimConflict,
    EnumWithContainer,
    TensorWithStructure,
    RangeDtypeConflict,
    TensorDtypeConflict,
    StructureNdimConflict,
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::UnknownDtype(_) => "unknown-dtype",
            Violation::EmptyDtype => "empty-dtype",
            Violation::NegativeNdim(_) => "negative-ndim",
            Violation::EmptyNdim => "empty-ndim",
            Violation::UnknownStructure(_) => "unknown-structure",
            Violation::EmptyStructure => "empty-structure",
            Violation::InvalidRange(..) => "invalid-range",
            Violation::EmptyEnum => "empty-enum",
            Violation::EmptyConstraint => "empty-constraint",
            Violation::EnumOutsideRange(_) => "enum-outside-range",
            Violation::EnumDtypeConflict(_) => "enum-dtype-conflict",
            Violation::EnumNdimConflict => "enum-ndim-conflict",
            Violation::EnumWithContainer => "enum-with-container",
            Violation::TensorWithStructure => "tensor-with-structure",
            Violation::RangeDtypeConflict => "range-dtype-conflict",
            Violation::TensorDtypeConflict => "tensor-dtype-conflict",
            Violation::StructureNdimConflict => "structure-ndim-conflict",
        }
    }

    pub fn field(&self) -> &'static str {
        match self {
            Violation::UnknownDtype(_) | Violation::EmptyDtype => "dtype",
            Violation::NegativeNdim(_) | Violation::EmptyNdim => "ndim",
            Violation::UnknownStructure(_) | Violation::EmptyStructure => "structure",
            Violation::InvalidRange(..) | Violation::RangeDtypeConflict => "range",
            Violation::EmptyEnum
            | Violation::EnumOutsideRange(_)
            | Violation::EnumDtypeConflict(_)
            | Violation::EnumNdimConflict
            | Violation::EnumWithContainer => "enum",
            Violation::TensorWithStructure | Violation::TensorDtypeConflict => "tensor_t",
            Violation::StructureNdimConflict => "structure",
            Violation::EmptyConstraint => "*",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownDtype(name) => write!(f, "unknown-dtype `{name}`"),
            Violation::NegativeNdim(n) => write!(f, "negative-ndim {n}"),
            Violation::UnknownStructure(s) => write!(f, "unknown-structure `{s}`"),
            Violation::InvalidRange(lo, hi) => write!(f, "invalid range [{lo}, {hi}]"),
            Violation::EnumOutsideRange(lit) => write!(f, "enum-outside-range {lit}"),
            Violation::EnumDtypeConflict(lit) => write!(f, "enum-dtype-conflict {lit}"),
            other => f.write_str(other.code()),
        }
    }
}

/// A validated parameter constraint.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParameterConstraint {
    pub dtype: Option<BTreeSet<DtypeName>>,
    pub ndim: Option<BTreeSet<u32>>,
    pub tensor_t: Option<bool>,
    pub structure: Option<BTreeSet<ContainerKind>>,
    pub range: Option<(f64, f64)>,
    pub enum_values: Option<Vec<Literal>>,
    pub optional: bool,
}

impl ParameterConstraint {
    /// True when a compliant value must be a tensor: either demanded
    /// explicitly, or implied by a positive rank with no container or enum
    /// alternative.
    pub fn wants_tensor(&self) -> bool {
        match self.tensor_t {
            Some(t) => t,
            None => {
                self.structure.is_none()
                    && self.enum_values.is_none()
                    && self
                        .ndim
                        .as_ref()
                        .is_some_and(|n| !n.is_empty() && !n.contains(&0))
            }
        }
    }

    /// Dtypes usable for tensor elements under this constraint.
    pub fn tensor_dtypes(&self) -> Vec<DtypeName> {
        let base: Vec<DtypeName> = match &self.dtype {
            Some(set) => set.iter().copied().collect(),
            None => DtypeName::NUMERIC.to_vec(),
        };
        base.into_iter()
            .filter(|d| *d != DtypeName::String && d.admits_range(self.range))
            .collect()
    }

    /// Dtypes usable for scalar or container elements under this constraint.
    pub fn scalar_dtypes(&self) -> Option<Vec<DtypeName>> {
        self.dtype.as_ref().map(|set| {
            set.iter()
                .copied()
                .filter(|d| d.admits_range(self.range))
                .collect()
        })
    }

    pub fn to_raw(&self) -> RawConstraint {
        RawConstraint {
            dtype: self
                .dtype
                .as_ref()
                .map(|s| s.iter().map(|d| d.as_str().to_string()).collect()),
            ndim: self
                .ndim
                .as_ref()
                .map(|s| s.iter().map(|&n| n as i64).collect()),
            tensor_t: self.tensor_t,
            structure: self
                .structure
                .as_ref()
                .map(|s| s.iter().map(|k| k.as_str().to_string()).collect()),
            range: self.range.map(|(lo, hi)| [lo, hi]),
            enum_values: self.enum_values.clone(),
            optional: self.optional,
        }
    }

    /// Invariant check on an already typed constraint.
    pub fn violations(&self) -> Vec<Violation> {
        validate_constraint(&self.to_raw())
    }
}

/// Checks a raw constraint against every rule. The result is empty iff the
/// constraint is accepted.
pub fn validate_constraint(raw: &RawConstraint) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut tensor_qualified = false;

    let dtype = raw.dtype.as_ref().map(|names| {
        if names.is_empty() {
            out.push(Violation::EmptyDtype);
        }
        let mut set = BTreeSet::new();
        for name in names {
            match DtypeName::normalize(name) {
                Some((d, q)) => {
                    tensor_qualified |= q;
                    set.insert(d);
                }
                None => out.push(Violation::UnknownDtype(name.clone())),
            }
        }
        set
    });

    let ndim = raw.ndim.as_ref().map(|dims| {
        if dims.is_empty() {
            out.push(Violation::EmptyNdim);
        }
        let mut set = BTreeSet::new();
        for &n in dims {
            if n < 0 || n > u32::MAX as i64 {
                out.push(Violation::NegativeNdim(n));
            } else {
                set.insert(n as u32);
            }
        }
        set
    });

    let structure = raw.structure.as_ref().map(|kinds| {
        if kinds.is_empty() {
            out.push(Violation::EmptyStructure);
        }
        let mut set = BTreeSet::new();
        for k in kinds {
            match ContainerKind::parse(k) {
                Some(kind) => {
                    set.insert(kind);
                }
                None => out.push(Violation::UnknownStructure(k.clone())),
            }
        }
        set
    });

    let range = raw.range.and_then(|[lo, hi]| {
        if lo.is_finite() && hi.is_finite() && lo <= hi {
            Some((lo, hi))
        } else {
            out.push(Violation::InvalidRange(lo, hi));
            None
        }
    });

    if let Some(values) = &raw.enum_values {
        if values.is_empty() {
            out.push(Violation::EmptyEnum);
        }
    }

    if raw.dtype.is_none()
        && raw.ndim.is_none()
        && raw.tensor_t.is_none()
        && raw.structure.is_none()
        && raw.range.is_none()
        && raw.enum_values.is_none()
    {
        out.push(Violation::EmptyConstraint);
    }

    // Cross-field contradictions, evaluated on the parts that parsed.
    let typed = ParameterConstraint {
        dtype: dtype.filter(|s| !s.is_empty()),
        ndim: ndim.filter(|s| !s.is_empty()),
        tensor_t: raw.tensor_t.or(tensor_qualified.then_some(true)),
        structure: structure.filter(|s| !s.is_empty()),
        range,
        enum_values: raw.enum_values.clone().filter(|v| !v.is_empty()),
        optional: raw.optional,
    };

    if typed.tensor_t == Some(true) && typed.structure.is_some() {
        out.push(Violation::TensorWithStructure);
    }
    if let Some(values) = &typed.enum_values {
        if typed.tensor_t == Some(true) || typed.structure.is_some() {
            out.push(Violation::EnumWithContainer);
        }
        if typed.ndim.as_ref().is_some_and(|n| !n.contains(&0)) {
            out.push(Violation::EnumNdimConflict);
        }
        for lit in values {
            if let (Some((lo, hi)), Some(x)) = (typed.range, lit.as_f64()) {
                if x < lo || x > hi {
                    out.push(Violation::EnumOutsideRange(lit.clone()));
                }
            }
            if let Some(set) = &typed.dtype {
                if !set.iter().any(|d| literal_fits_dtype(lit, *d)) {
                    out.push(Violation::EnumDtypeConflict(lit.clone()));
                }
            }
        }
    } else if typed.wants_tensor() {
        if typed.dtype.is_some() && typed.tensor_dtypes().is_empty() {
            out.push(Violation::TensorDtypeConflict);
        }
    } else if typed
        .scalar_dtypes()
        .is_some_and(|candidates| candidates.is_empty())
    {
        out.push(Violation::RangeDtypeConflict);
    }
    if typed.structure.is_some()
        && typed
            .ndim
            .as_ref()
            .is_some_and(|n| n.iter().all(|&d| d == 0))
    {
        out.push(Violation::StructureNdimConflict);
    }
    out
}

/// Whether a literal is a scalar of the given dtype (integers may be any
/// integer dtype that represents them).
pub fn literal_fits_dtype(lit: &Literal, dtype: DtypeName) -> bool {
    match lit {
        Literal::Bool(_) => dtype == DtypeName::Bool,
        Literal::Int(i) => dtype.accepts_int(*i),
        Literal::Float(x) => dtype.accepts_float(*x),
        Literal::Str(_) => dtype == DtypeName::String,
        Literal::Null => false,
    }
}

/// Validates and converts a raw constraint.
pub fn check_raw(raw: &RawConstraint) -> Result<ParameterConstraint, Vec<Violation>> {
    let violations = validate_constraint(raw);
    if !violations.is_empty() {
        return Err(violations);
    }
    let mut tensor_qualified = false;
    let dtype = raw.dtype.as_ref().map(|names| {
        names
            .iter()
            .map(|n| {
                let (d, q) = DtypeName::normalize(n).expect("validated");
                tensor_qualified |= q;
                d
            })
            .collect()
    });
    let mut enum_values: Option<Vec<Literal>> = None;
    if let Some(values) = &raw.enum_values {
        let mut dedup: Vec<Literal> = Vec::new();
        for v in values {
            if !dedup.iter().any(|d| d.loosely_equals(v)) {
                dedup.push(v.clone());
            }
        }
        enum_values = Some(dedup);
    }
    Ok(ParameterConstraint {
        dtype,
        ndim: raw
            .ndim
            .as_ref()
            .map(|n| n.iter().map(|&d| d as u32).collect()),
        tensor_t: raw.tensor_t.or(tensor_qualified.then_some(true)),
        structure: raw
            .structure
            .as_ref()
            .map(|s| s.iter().filter_map(|k| ContainerKind::parse(k)).collect()),
        range: raw.range.map(|[lo, hi]| (lo, hi)),
        enum_values,
        optional: raw.optional,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiConstraint {
    pub api_name: String,
    pub parameters: Vec<String>,
    pub constraints: BTreeMap<String, ParameterConstraint>,
}

impl ApiConstraint {
    pub fn constraint_for(&self, param: &str) -> Option<&ParameterConstraint> {
        self.constraints.get(param)
    }

    pub fn is_optional(&self, param: &str) -> bool {
        self.constraints.get(param).is_some_and(|c| c.optional)
    }
}

/// A rejected catalog entry with its reasons.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub module: String,
    pub api: String,
    pub reasons: Vec<String>,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{}: {}",
            self.module,
            self.api,
            self.reasons.join("; ")
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub accepted: usize,
    pub rejected: usize,
    pub rejections: Vec<Rejection>,
}

#[derive(Debug, Clone, Default)]
pub struct ConstraintCatalog {
    modules: BTreeMap<String, BTreeMap<String, ApiConstraint>>,
    pub diagnostics: Diagnostics,
}

#[derive(Deserialize)]
struct CatalogDoc {
    module: String,
    apis: OrderedEntries<serde_json::Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ApiDoc {
    parameters: Vec<String>,
    #[serde(default)]
    constraints: Option<OrderedEntries<serde_json::Value>>,
}

#[derive(Serialize)]
struct ApiOut<'a> {
    parameters: &'a [String],
    constraints: BTreeMap<&'a str, RawConstraint>,
}

/// Parses one catalog document. Invalid entries are dropped and recorded in
/// the returned catalog's diagnostics.
pub fn parse_catalog(document: &[u8]) -> Result<ConstraintCatalog, CatalogError> {
    let doc: CatalogDoc = serde_json::from_slice(document)?;
    let mut catalog = ConstraintCatalog::default();
    for (api, value) in doc.apis.0 {
        catalog.admit(&doc.module, api, value);
    }
    Ok(catalog)
}

fn parse_entry(api: &str, value: serde_json::Value) -> Result<ApiConstraint, Vec<String>> {
    let entry: ApiDoc =
        serde_json::from_value(value).map_err(|e| vec![format!("malformed-entry: {e}")])?;
    let mut reasons = Vec::new();
    let mut seen = BTreeSet::new();
    for p in &entry.parameters {
        if !seen.insert(p.as_str()) {
            reasons.push(format!("duplicate-parameter `{p}`"));
        }
    }
    let mut constraints = BTreeMap::new();
    for (param, raw_value) in entry.constraints.map(|c| c.0).unwrap_or_default() {
        if !seen.contains(param.as_str()) {
            reasons.push(format!("unlisted-parameter `{param}`"));
            continue;
        }
        if constraints.contains_key(&param) {
            reasons.push(format!("duplicate-constraint `{param}`"));
            continue;
        }
        let raw: RawConstraint = match serde_json::from_value(raw_value) {
            Ok(raw) => raw,
            Err(e) => {
                reasons.push(format!("param `{param}`: malformed-constraint: {e}"));
                continue;
            }
        };
        match check_raw(&raw) {
            Ok(c) => {
                constraints.insert(param, c);
            }
            Err(violations) => {
                for v in violations {
                    reasons.push(format!("param `{param}`: {v}"));
                }
            }
        }
    }
    if reasons.is_empty() {
        Ok(ApiConstraint {
            api_name: api.to_string(),
            parameters: entry.parameters,
            constraints,
        })
    } else {
        Err(reasons)
    }
}

impl ConstraintCatalog {
    fn admit(&mut self, module: &str, api: String, value: serde_json::Value) {
        let exists = self
            .modules
            .get(module)
            .is_some_and(|apis| apis.contains_key(&api));
        let result = if exists {
            Err(vec!["duplicate-api".to_string()])
        } else {
            parse_entry(&api, value)
        };
        match result {
            Ok(entry) => {
                self.diagnostics.accepted += 1;
                self.modules
                    .entry(module.to_string())
                    .or_default()
                    .insert(api, entry);
            }
            Err(reasons) => {
                self.diagnostics.rejected += 1;
                self.diagnostics.rejections.push(Rejection {
                    module: module.to_string(),
                    api,
                    reasons,
                });
            }
        }
    }

    /// Folds another catalog into this one. An API already present is kept
    /// and the incoming duplicate is rejected.
    pub fn merge(&mut self, other: ConstraintCatalog) {
        self.diagnostics.rejected += other.diagnostics.rejected;
        self.diagnostics
            .rejections
            .extend(other.diagnostics.rejections);
        for (module, apis) in other.modules {
            for (api, entry) in apis {
                let slot = self.modules.entry(module.clone()).or_default();
                match slot.entry(api) {
                    std::collections::btree_map::Entry::Occupied(e) => {
                        self.diagnostics.rejected += 1;
                        self.diagnostics.rejections.push(Rejection {
                            module: module.clone(),
                            api: e.key().clone(),
                            reasons: vec!["duplicate-api".to_string()],
                        });
                    }
                    std::collections::btree_map::Entry::Vacant(e) => {
                        self.diagnostics.accepted += 1;
                        e.insert(entry);
                    }
                }
            }
        }
    }

    pub fn lookup(&self, module: &str, api: &str) -> Option<&ApiConstraint> {
        self.modules.get(module)?.get(api)
    }

    pub fn module(&self, module: &str) -> Option<&BTreeMap<String, ApiConstraint>> {
        self.modules.get(module)
    }

    pub fn modules(&self) -> impl Iterator<Item = &str> {
        self.modules.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.modules.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Serializes the accepted entries, one document per module.
    pub fn to_documents(&self) -> Vec<(String, String)> {
        self.modules
            .iter()
            .map(|(module, apis)| {
                let apis: BTreeMap<&str, ApiOut<'_>> = apis
                    .iter()
                    .map(|(name, api)| {
                        (
                            name.as_str(),
                            ApiOut {
                                parameters: &api.parameters,
                                constraints: api
                                    .constraints
                                    .iter()
                                    .map(|(p, c)| (p.as_str(), c.to_raw()))
                                    .collect(),
                            },
                        )
                    })
                    .collect();
                let doc = serde_json::json!({ "module": module, "apis": apis });
                (
                    module.clone(),
                    serde_json::to_string_pretty(&doc).expect("catalog serializes"),
                )
            })
            .collect()
    }
}

/// Parses a single module's catalog directly into an [`ApiConstraint`]
/// lookup, for callers that only hold one file.
pub fn lookup(catalog: &ConstraintCatalog, module: &str, api: &str) -> Option<ApiConstraint> {
    catalog.lookup(module, api).cloned()
}
