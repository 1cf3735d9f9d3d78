//! Argument and test-case synthesis.
//!
//! A generated argument is a block of statements whose last statement is the
//! value passed to the call. Block-local references start at 0 and group ids
//! are block-local too; [`TestCase::insert_block`] rebases both.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{ConstraintCatalog, ContainerKind, DtypeName, ParameterConstraint};
use crate::model::{
    random_string, Domain, GroupTag, Provenance, Scalar, Statement, StatementKind, TestCase, Value,
};
use crate::sut::SutModule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Constrained,
    Unconstrained,
}

impl Mode {
    pub const BOTH: [Mode; 2] = [Mode::Constrained, Mode::Unconstrained];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Constrained => "constrained",
            Mode::Unconstrained => "unconstrained",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constrained" => Ok(Mode::Constrained),
            "unconstrained" => Ok(Mode::Unconstrained),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub max_ndim: u32,
    pub max_dim_size: usize,
    pub min_dim_size: usize,
    pub invalid_prob: f64,
    /// Magnitude bound for numbers drawn without a range.
    pub clamp: f64,
    pub optional_prob: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_ndim: 5,
            max_dim_size: 5,
            min_dim_size: 1,
            invalid_prob: 0.25,
            clamp: 1000.0,
            optional_prob: 0.5,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.invalid_prob) {
            return Err(format!(
                "invalid probability {} is outside [0, 1]",
                self.invalid_prob
            ));
        }
        if !(0.0..=1.0).contains(&self.optional_prob) {
            return Err(format!(
                "optional probability {} is outside [0, 1]",
                self.optional_prob
            ));
        }
        if self.max_dim_size == 0 || self.min_dim_size > self.max_dim_size {
            return Err(format!(
                "dimension sizes must satisfy min <= max and max >= 1 (got {}..{})",
                self.min_dim_size, self.max_dim_size
            ));
        }
        if !(self.clamp.is_finite() && self.clamp > 0.0) {
            return Err(format!("clamp {} must be positive and finite", self.clamp));
        }
        Ok(())
    }

    fn clamp_int(&self) -> i64 {
        self.clamp.floor().min(i64::MAX as f64) as i64
    }
}

/// A generated argument: the statements that build it and how it was made.
#[derive(Debug, Clone, PartialEq)]
pub struct Argument {
    pub statements: Vec<Statement>,
    pub provenance: Provenance,
}

fn plain(kind: StatementKind) -> Statement {
    Statement::new(kind)
}

fn finish(mut statements: Vec<Statement>, provenance: Provenance) -> Argument {
    if let Some(last) = statements.last_mut() {
        last.provenance = Some(provenance);
    }
    Argument {
        statements,
        provenance,
    }
}

fn random_shape<R: Rng + ?Sized>(ndim: u32, cfg: &GenConfig, rng: &mut R) -> Vec<usize> {
    (0..ndim)
        .map(|_| rng.gen_range(cfg.min_dim_size..=cfg.max_dim_size))
        .collect()
}

/// Picks a rank from `ndims` within `[lo, max]`. Falls back to `max` with
/// `clamped` set when nothing in the set fits.
fn pick_rank<R: Rng + ?Sized>(
    ndims: Option<&BTreeSet<u32>>,
    lo: u32,
    max: u32,
    rng: &mut R,
) -> (u32, bool) {
    let max = max.max(lo);
    match ndims {
        None => (rng.gen_range(lo..=max), false),
        Some(set) => {
            let fitting: Vec<u32> = set
                .iter()
                .copied()
                .filter(|&n| n >= lo && n <= max)
                .collect();
            match fitting.choose(rng) {
                Some(&n) => (n, false),
                None => (max, true),
            }
        }
    }
}

/// Scalar statement for a constraint demanding neither tensor nor container.
pub fn generate_primitive<R: Rng + ?Sized>(
    c: &ParameterConstraint,
    cfg: &GenConfig,
    rng: &mut R,
) -> Statement {
    if let Some(allowed) = &c.enum_values {
        return plain(StatementKind::Enum {
            allowed: allowed.clone(),
            chosen: rng.gen_range(0..allowed.len()),
        });
    }
    let domain = match c.scalar_dtypes() {
        Some(dtypes) => {
            let dtype = *dtypes
                .choose(rng)
                .expect("validated constraint admits a scalar dtype");
            if dtype.is_unsigned() {
                let Some(Domain::Int { lo, hi }) = Domain::for_dtype(dtype, c.range, cfg.clamp)
                else {
                    unreachable!("validated unsigned domain")
                };
                let (lo, hi) = (lo as u64, hi as u64);
                return plain(StatementKind::UnsignedInt {
                    value: rng.gen_range(lo..=hi),
                    lo,
                    hi,
                });
            }
            Domain::for_dtype(dtype, c.range, cfg.clamp).expect("validated domain")
        }
        None => match c.range {
            Some((lo, hi)) => Domain::Float { lo, hi },
            None => random_scalar_domain(cfg, rng),
        },
    };
    plain(StatementKind::Primitive {
        value: domain.sample(rng),
        domain: Some(domain),
    })
}

pub(crate) fn random_scalar_domain<R: Rng + ?Sized>(cfg: &GenConfig, rng: &mut R) -> Domain {
    let k = cfg.clamp_int();
    match rng.gen_range(0..4) {
        0 => Domain::Bool {
            allow_false: true,
            allow_true: true,
        },
        1 => Domain::Int { lo: -k, hi: k },
        2 => Domain::Float {
            lo: -cfg.clamp,
            hi: cfg.clamp,
        },
        _ => Domain::Str,
    }
}

/// Nested list of the given dtype. The second value is true when the
/// requested ranks all exceeded `max_ndim` and the rank was clamped.
pub fn generate_nested_list<R: Rng + ?Sized>(
    ndims: Option<&BTreeSet<u32>>,
    dtype: DtypeName,
    range: Option<(f64, f64)>,
    cfg: &GenConfig,
    rng: &mut R,
) -> (Statement, bool) {
    let (ndim, clamped) = pick_rank(ndims, 0, cfg.max_ndim, rng);
    let shape = random_shape(ndim, cfg, rng);
    let domain = Domain::for_dtype(dtype, range, cfg.clamp).expect("dtype admits range");
    let n: usize = shape.iter().product();
    let values: Vec<Scalar> = (0..n).map(|_| domain.sample_scalar(rng)).collect();
    (
        plain(StatementKind::NestedList {
            shape,
            dtype,
            values,
            domain,
        }),
        clamped,
    )
}

/// The four-statement tensor construction group. `c = None` draws an
/// arbitrary tensor.
pub fn generate_tensor_sequence<R: Rng + ?Sized>(
    c: Option<&Arc<ParameterConstraint>>,
    cfg: &GenConfig,
    rng: &mut R,
) -> (Vec<Statement>, bool) {
    let (dtype, ndims, range) = match c {
        Some(c) => {
            let dtypes = c.tensor_dtypes();
            (
                *dtypes.choose(rng).expect("validated tensor dtype"),
                c.ndim.as_ref(),
                c.range,
            )
        }
        None => (*DtypeName::NUMERIC.choose(rng).unwrap(), None, None),
    };
    let (list, clamped) = generate_nested_list(ndims, dtype, range, cfg, rng);
    let tag = GroupTag {
        id: 0,
        recipe: c.cloned(),
    };
    let statements = [
        list.kind,
        StatementKind::DtypeLiteral { dtype },
        StatementKind::BuildArray { list: 0, dtype: 1 },
        StatementKind::ToTensor { array: 2 },
    ]
    .into_iter()
    .map(|kind| Statement {
        kind,
        group: Some(tag.clone()),
        provenance: None,
    })
    .collect();
    (statements, clamped)
}

fn nested_items<R: Rng + ?Sized>(
    kind: ContainerKind,
    depth: u32,
    leaf: &Domain,
    cfg: &GenConfig,
    rng: &mut R,
) -> Vec<Value> {
    // Inner levels need at least one element or the nesting depth is lost.
    let lo = if depth > 1 {
        cfg.min_dim_size.max(1)
    } else {
        cfg.min_dim_size
    };
    let n = rng.gen_range(lo..=cfg.max_dim_size);
    (0..n)
        .map(|_| {
            if depth > 1 {
                Value::from_container(kind, nested_items(kind, depth - 1, leaf, cfg, rng))
            } else {
                leaf.sample(rng)
            }
        })
        .collect()
}

/// A list or tuple whose nesting depth and elements follow the constraint.
pub fn generate_container<R: Rng + ?Sized>(
    c: Option<&ParameterConstraint>,
    cfg: &GenConfig,
    rng: &mut R,
) -> (Statement, bool) {
    let kinds: Vec<ContainerKind> = match c.and_then(|c| c.structure.as_ref()) {
        Some(set) => set.iter().copied().collect(),
        None => vec![ContainerKind::List, ContainerKind::Tuple],
    };
    let kind = *kinds.choose(rng).unwrap();
    let (depth, clamped) = match c {
        Some(c) => match &c.ndim {
            Some(set) => pick_rank(Some(set), 1, cfg.max_ndim, rng),
            None => (1, false),
        },
        None => (rng.gen_range(1..=2), false),
    };
    let leaf = match c {
        Some(c) => match c.scalar_dtypes() {
            Some(dtypes) => {
                let dtype = *dtypes.choose(rng).expect("validated scalar dtype");
                Domain::for_dtype(dtype, c.range, cfg.clamp).expect("validated domain")
            }
            None => match c.range {
                Some((lo, hi)) => Domain::Float { lo, hi },
                None => random_scalar_domain(cfg, rng),
            },
        },
        None => random_scalar_domain(cfg, rng),
    };
    let items = nested_items(kind, depth, &leaf, cfg, rng);
    (
        plain(StatementKind::Container {
            kind,
            items,
            domain: Some(leaf),
        }),
        clamped,
    )
}

fn wants_container(c: &ParameterConstraint) -> bool {
    c.structure.is_some()
        || (c.tensor_t == Some(false)
            && c.enum_values.is_none()
            && c.ndim.as_ref().is_some_and(|n| !n.contains(&0)))
}

/// Constraint-respecting argument.
pub fn generate_valid<R: Rng + ?Sized>(
    c: &Arc<ParameterConstraint>,
    cfg: &GenConfig,
    rng: &mut R,
) -> Argument {
    let (statements, clamped) = if c.enum_values.is_some() {
        (vec![generate_primitive(c, cfg, rng)], false)
    } else if c.wants_tensor() {
        generate_tensor_sequence(Some(c), cfg, rng)
    } else if wants_container(c) {
        let (s, clamped) = generate_container(Some(c), cfg, rng);
        (vec![s], clamped)
    } else {
        (vec![generate_primitive(c, cfg, rng)], false)
    };
    let provenance = if clamped {
        Provenance::GeneratedArbitrary
    } else {
        Provenance::GeneratedValid
    };
    finish(statements, provenance)
}

/// Constraint-blind argument, uniform over none, bool, int, float, string,
/// container and tensor.
pub fn generate_arbitrary<R: Rng + ?Sized>(cfg: &GenConfig, rng: &mut R) -> Argument {
    let k = cfg.clamp_int();
    let scalar = |domain: Domain, rng: &mut R| {
        vec![plain(StatementKind::Primitive {
            value: domain.sample(rng),
            domain: Some(domain),
        })]
    };
    let statements = match rng.gen_range(0..7) {
        0 => vec![plain(StatementKind::Primitive {
            value: Value::None,
            domain: None,
        })],
        1 => scalar(
            Domain::Bool {
                allow_false: true,
                allow_true: true,
            },
            rng,
        ),
        2 => scalar(Domain::Int { lo: -k, hi: k }, rng),
        3 => scalar(
            Domain::Float {
                lo: -cfg.clamp,
                hi: cfg.clamp,
            },
            rng,
        ),
        4 => vec![plain(StatementKind::Primitive {
            value: Value::Str(random_string(rng)),
            domain: Some(Domain::Str),
        })],
        5 => vec![generate_container(None, cfg, rng).0],
        _ => generate_tensor_sequence(None, cfg, rng).0,
    };
    finish(statements, Provenance::GeneratedArbitrary)
}

/// Valid with probability `1 - invalid_prob` when a constraint exists,
/// arbitrary otherwise.
pub fn generate_argument<R: Rng + ?Sized>(
    c: Option<&Arc<ParameterConstraint>>,
    cfg: &GenConfig,
    rng: &mut R,
) -> Argument {
    match c {
        Some(c) if !rng.gen_bool(cfg.invalid_prob) => generate_valid(c, cfg, rng),
        _ => generate_arbitrary(cfg, rng),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub required: bool,
    pub constraint: Option<Arc<ParameterConstraint>>,
}

/// A callable API as seen by the generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiSpec {
    pub name: String,
    pub params: Vec<ParamSpec>,
}

/// Generates one argument block per parameter (optional parameters are
/// included with `optional_prob`; the first omission ends the argument
/// list) followed by the call.
pub fn generate_test_case<R: Rng + ?Sized>(
    api: &ApiSpec,
    cfg: &GenConfig,
    rng: &mut R,
) -> TestCase {
    let mut tc = TestCase::new();
    let mut args = Vec::new();
    for p in &api.params {
        if !p.required && !rng.gen_bool(cfg.optional_prob) {
            break;
        }
        let at = tc.len();
        args.push(insert_argument(
            &mut tc,
            at,
            p.constraint.as_ref(),
            cfg,
            rng,
        ));
    }
    tc.push(plain(StatementKind::Call {
        api: api.name.clone(),
        args,
    }));
    tc
}

/// Generates an argument block, splices it in at `at` and returns the index
/// of its producing statement.
pub fn insert_argument<R: Rng + ?Sized>(
    tc: &mut TestCase,
    at: usize,
    c: Option<&Arc<ParameterConstraint>>,
    cfg: &GenConfig,
    rng: &mut R,
) -> usize {
    let arg = generate_argument(c, cfg, rng);
    let n = arg.statements.len();
    tc.insert_block(at, arg.statements);
    at + n - 1
}

/// Everything the generator needs for one module under one mode.
#[derive(Debug, Clone)]
pub struct GenContext {
    pub cfg: GenConfig,
    pub mode: Mode,
    pub apis: Vec<ApiSpec>,
}

impl GenContext {
    /// Binds SUT signatures to catalog constraints. In unconstrained mode the
    /// catalog is ignored.
    pub fn new(
        sut: &SutModule,
        catalog: Option<&ConstraintCatalog>,
        mode: Mode,
        cfg: GenConfig,
    ) -> Self {
        let apis = sut
            .functions
            .iter()
            .map(|f| {
                let entry = match mode {
                    Mode::Constrained => catalog.and_then(|c| c.lookup(&sut.name, &f.name)),
                    Mode::Unconstrained => None,
                };
                ApiSpec {
                    name: f.name.clone(),
                    params: f
                        .params
                        .iter()
                        .map(|p| ParamSpec {
                            name: p.name.clone(),
                            required: p.default.is_none(),
                            constraint: entry
                                .and_then(|e| e.constraint_for(&p.name))
                                .map(|c| Arc::new(c.clone())),
                        })
                        .collect(),
                }
            })
            .collect();
        GenContext { cfg, mode, apis }
    }

    pub fn api(&self, name: &str) -> Option<&ApiSpec> {
        self.apis.iter().find(|a| a.name == name)
    }

    /// A fresh test case calling a uniformly chosen API.
    pub fn random_test_case<R: Rng + ?Sized>(&self, rng: &mut R) -> TestCase {
        let api = self.apis.choose(rng).expect("module has at least one API");
        generate_test_case(api, &self.cfg, rng)
    }
}
