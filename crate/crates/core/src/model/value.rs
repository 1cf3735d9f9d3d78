use serde::Serialize;

use crate::catalog::{ContainerKind, DtypeName};

/// One element of a typed array or tensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Float(f64),
}

impl Scalar {
    pub fn as_f64(self) -> f64 {
        match self {
            Scalar::Bool(b) => f64::from(u8::from(b)),
            Scalar::Int(i) => i as f64,
            Scalar::Float(x) => x,
        }
    }

    pub fn fits(self, dtype: DtypeName) -> bool {
        match self {
            Scalar::Bool(_) => dtype == DtypeName::Bool,
            Scalar::Int(i) => dtype.accepts_int(i),
            Scalar::Float(x) => dtype.accepts_float(x),
        }
    }
}

/// Row-major n-dimensional data. An empty shape is a scalar holding one
/// element.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NdArray {
    pub shape: Vec<usize>,
    pub dtype: DtypeName,
    pub data: Vec<Scalar>,
}

impl NdArray {
    pub fn is_consistent(&self) -> bool {
        self.data.len() == self.shape.iter().product::<usize>()
            && self.data.iter().all(|s| s.fits(self.dtype))
    }
}

/// The runtime universe of argument values.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Value {
    None,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<Value>),
    Tuple(Vec<Value>),
    Array(NdArray),
    Tensor(NdArray),
}

impl Value {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::None => "none",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::Float(_) => "float",
            Value::Str(_) => "string",
            Value::List(_) => "list",
            Value::Tuple(_) => "tuple",
            Value::Array(_) => "array",
            Value::Tensor(_) => "tensor",
        }
    }

    pub fn container_kind(&self) -> Option<ContainerKind> {
        match self {
            Value::List(_) => Some(ContainerKind::List),
            Value::Tuple(_) => Some(ContainerKind::Tuple),
            _ => None,
        }
    }

    /// Number of dimensions: array rank, container nesting depth, 0 for
    /// everything else.
    pub fn rank(&self) -> usize {
        match self {
            Value::Array(a) | Value::Tensor(a) => a.shape.len(),
            Value::List(items) | Value::Tuple(items) => {
                1 + items.iter().map(Value::rank).max().unwrap_or(0)
            }
            _ => 0,
        }
    }

    pub fn from_container(kind: ContainerKind, items: Vec<Value>) -> Value {
        match kind {
            ContainerKind::List => Value::List(items),
            ContainerKind::Tuple => Value::Tuple(items),
        }
    }

    pub fn from_scalar(s: Scalar) -> Value {
        match s {
            Scalar::Bool(b) => Value::Bool(b),
            Scalar::Int(i) => Value::Int(i),
            Scalar::Float(x) => Value::Float(x),
        }
    }
}

/// Builds the nested-list value of row-major data with the given shape.
pub fn nest(shape: &[usize], data: &[Scalar]) -> Value {
    match shape.split_first() {
        None => Value::from_scalar(data[0]),
        Some((&n, rest)) => {
            let stride: usize = rest.iter().product();
            Value::List(
                (0..n)
                    .map(|i| nest(rest, &data[i * stride..(i + 1) * stride]))
                    .collect(),
            )
        }
    }
}
