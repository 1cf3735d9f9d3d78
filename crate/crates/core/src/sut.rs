//! Instrumented modules under test.
//!
//! A SUT file declares functions whose bodies are small validation programs
//! (guards that raise, crash or return). Every branch contributes a true and a
//! false target, every function an entry target. Execution records which
//! targets were covered and the branch distances of every evaluated
//! condition.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::literal::Literal;
use crate::model::{Scalar, Value};
use crate::ordered::OrderedEntries;

#[derive(Debug, Error)]
pub enum SutError {
    #[error("SUT syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("function `{function}` references undeclared parameter `{param}`")]
    UndeclaredParam { function: String, param: String },
    #[error("function `{function}`: {message}")]
    Signature { function: String, message: String },
    #[error("duplicate function `{0}`")]
    DuplicateFunction(String),
}

impl From<serde_json::Error> for SutError {
    fn from(err: serde_json::Error) -> Self {
        SutError::Syntax {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorKind {
    TypeError,
    ValueError,
    RuntimeError,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    IsTensor(usize),
    Ndim(usize),
    Shape(usize, u32),
    Dtype(usize),
    Value(usize),
    Len(usize),
    Structure(usize),
    Const(Literal),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn parse(op: &str) -> Option<CmpOp> {
        Some(match op {
            "==" => CmpOp::Eq,
            "!=" => CmpOp::Ne,
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cond {
    Cmp(Expr, CmpOp, Expr),
    In(Expr, Vec<Literal>),
    And(Vec<Cond>),
    Or(Vec<Cond>),
    Not(Box<Cond>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Branch {
        id: usize,
        cond: Cond,
        then_body: Vec<Node>,
        else_body: Vec<Node>,
    },
    Raise(ErrorKind),
    Crash,
    Return(Literal),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub default: Option<Literal>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SutFunction {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<Node>,
    pub entry_target: usize,
}

impl SutFunction {
    pub fn required_arity(&self) -> usize {
        self.params
            .iter()
            .take_while(|p| p.default.is_none())
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Entry,
    True,
    False,
}

/// A coverage objective.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct BranchTarget {
    pub module: String,
    pub api: String,
    /// Dotted path of the branch node inside the body, absent for entries.
    pub path: Option<String>,
    pub polarity: Polarity,
}

impl BranchTarget {
    pub fn id(&self) -> String {
        match (&self.path, self.polarity) {
            (None, _) => format!("{}.{}#entry", self.module, self.api),
            (Some(p), Polarity::True) => format!("{}.{}@{}:T", self.module, self.api, p),
            (Some(p), _) => format!("{}.{}@{}:F", self.module, self.api, p),
        }
    }
}

impl fmt::Display for BranchTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Static facts about one branch node.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchInfo {
    pub function: usize,
    pub path: String,
    /// Decisions (branch id, polarity) that must be taken, in execution
    /// order, for this node to be evaluated.
    pub requirements: Vec<(usize, bool)>,
    pub true_target: usize,
    pub false_target: usize,
}

/// What a target needs: the owning function and, for branch targets, the
/// branch id and polarity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetMeta {
    pub function: usize,
    pub branch: Option<(usize, bool)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SutModule {
    pub name: String,
    pub functions: Vec<SutFunction>,
    pub branches: Vec<BranchInfo>,
    targets: Vec<BranchTarget>,
    target_meta: Vec<TargetMeta>,
    by_name: HashMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "error", rename_all = "kebab-case")]
pub enum OutcomeKind {
    Returned,
    Raised(ErrorKind),
    Crashed,
    ArityError,
    TypeEvalError,
}

impl OutcomeKind {
    /// Outcomes that a generated test expects as a raised exception.
    pub fn is_failure(self) -> bool {
        matches!(
            self,
            OutcomeKind::Raised(_) | OutcomeKind::ArityError | OutcomeKind::TypeEvalError
        )
    }
}

/// The observable result of a single call.
#[derive(Debug, Clone, PartialEq)]
pub struct CallOutcome {
    pub function: usize,
    pub kind: OutcomeKind,
    pub returned: Option<Literal>,
    pub covered: Vec<usize>,
    /// (branch id, distance to true, distance to false) per evaluated branch.
    pub distances: Vec<(usize, f64, f64)>,
}

impl CallOutcome {
    fn distance_of(&self, branch: usize) -> Option<(f64, f64)> {
        self.distances
            .iter()
            .find(|(b, _, _)| *b == branch)
            .map(|&(_, t, f)| (t, f))
    }

    /// For an uncovered target of the called function: the approach level
    /// and the raw distance at the divergence point. `None` for targets of
    /// other functions. A divergence that was never evaluated reports an
    /// infinite distance.
    pub fn approach(&self, sut: &SutModule, target: usize) -> Option<(u32, f64)> {
        let meta = sut.target_meta[target];
        if meta.function != self.function || self.kind == OutcomeKind::ArityError {
            return None;
        }
        let (branch, polarity) = meta.branch?;
        let info = &sut.branches[branch];
        let chain = info
            .requirements
            .iter()
            .copied()
            .chain(std::iter::once((branch, polarity)));
        let total = info.requirements.len() + 1;
        for (j, (b, want)) in chain.enumerate() {
            let approach = (total - 1 - j) as u32;
            match self.distance_of(b) {
                Some((dt, df)) => {
                    let d = if want { dt } else { df };
                    if d > 0.0 {
                        return Some((approach, d));
                    }
                }
                None => return Some((approach, f64::INFINITY)),
            }
        }
        Some((0, 0.0))
    }
}

/// Tracks coverage over a run and the abort state of the current test case.
#[derive(Debug, Clone, Default)]
pub struct CoverageRecorder {
    covered: Vec<bool>,
    count: usize,
    pub aborted: bool,
}

impl CoverageRecorder {
    pub fn new(sut: &SutModule) -> Self {
        Self {
            covered: vec![false; sut.targets.len()],
            count: 0,
            aborted: false,
        }
    }

    pub fn record(&mut self, target: usize) {
        if !self.covered[target] {
            self.covered[target] = true;
            self.count += 1;
        }
    }

    pub fn is_covered(&self, target: usize) -> bool {
        self.covered[target]
    }

    pub fn covered_count(&self) -> usize {
        self.count
    }

    pub fn covered_targets(&self) -> impl Iterator<Item = usize> + '_ {
        self.covered
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.then_some(i))
    }
}

// ---------------------------------------------------------------------------
// Document schema

#[derive(Deserialize)]
struct SutDoc {
    module: String,
    functions: OrderedEntries<FunctionDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionDoc {
    params: Vec<String>,
    body: Vec<NodeDoc>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NodeDoc {
    If {
        #[serde(rename = "if")]
        cond: CondDoc,
        then: Vec<NodeDoc>,
        #[serde(rename = "else", default)]
        otherwise: Vec<NodeDoc>,
    },
    Raise {
        raise: ErrorKind,
    },
    Crash {
        #[allow(dead_code)]
        crash: bool,
    },
    Return {
        #[serde(rename = "return")]
        value: Literal,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CondDoc {
    Cmp {
        cmp: (ExprDoc, String, ExprDoc),
    },
    In {
        #[serde(rename = "in")]
        member: (ExprDoc, Vec<Literal>),
    },
    And {
        and: Vec<CondDoc>,
    },
    Or {
        or: Vec<CondDoc>,
    },
    Not {
        not: Box<CondDoc>,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ExprDoc {
    IsTensor { is_tensor: String },
    Ndim { ndim: String },
    Shape { shape: (String, u32) },
    Dtype { dtype: String },
    Value { value: String },
    Len { len: String },
    Structure { structure: String },
    Lit(Literal),
}

struct Builder<'a> {
    module: &'a str,
    function: usize,
    function_name: &'a str,
    params: &'a [Param],
    branches: Vec<BranchInfo>,
}

impl Builder<'_> {
    fn param(&self, name: &str) -> Result<usize, SutError> {
        self.params
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| SutError::UndeclaredParam {
                function: self.function_name.to_string(),
                param: name.to_string(),
            })
    }

    fn expr(&self, doc: ExprDoc) -> Result<Expr, SutError> {
        Ok(match doc {
            ExprDoc::IsTensor { is_tensor } => Expr::IsTensor(self.param(&is_tensor)?),
            ExprDoc::Ndim { ndim } => Expr::Ndim(self.param(&ndim)?),
            ExprDoc::Shape { shape: (p, axis) } => Expr::Shape(self.param(&p)?, axis),
            ExprDoc::Dtype { dtype } => Expr::Dtype(self.param(&dtype)?),
            ExprDoc::Value { value } => Expr::Value(self.param(&value)?),
            ExprDoc::Len { len } => Expr::Len(self.param(&len)?),
            ExprDoc::Structure { structure } => Expr::Structure(self.param(&structure)?),
            ExprDoc::Lit(lit) => Expr::Const(lit),
        })
    }

    fn cond(&self, doc: CondDoc) -> Result<Cond, SutError> {
        Ok(match doc {
            CondDoc::Cmp { cmp: (a, op, b) } => {
                let op = CmpOp::parse(&op).ok_or_else(|| SutError::Signature {
                    function: self.function_name.to_string(),
                    message: format!("unknown comparison operator `{op}`"),
                })?;
                Cond::Cmp(self.expr(a)?, op, self.expr(b)?)
            }
            CondDoc::In { member: (e, set) } => Cond::In(self.expr(e)?, set),
            CondDoc::And { and } => Cond::And(
                and.into_iter()
                    .map(|c| self.cond(c))
                    .collect::<Result<_, _>>()?,
            ),
            CondDoc::Or { or } => Cond::Or(
                or.into_iter()
                    .map(|c| self.cond(c))
                    .collect::<Result<_, _>>()?,
            ),
            CondDoc::Not { not } => Cond::Not(Box::new(self.cond(*not)?)),
        })
    }

    fn body(
        &mut self,
        docs: Vec<NodeDoc>,
        prefix: &str,
        inherited: &[(usize, bool)],
    ) -> Result<Vec<Node>, SutError> {
        let mut reqs = inherited.to_vec();
        let mut nodes = Vec::with_capacity(docs.len());
        for (i, doc) in docs.into_iter().enumerate() {
            let path = if prefix.is_empty() {
                i.to_string()
            } else {
                format!("{prefix}.{i}")
            };
            let node = match doc {
                NodeDoc::If {
                    cond,
                    then,
                    otherwise,
                } => {
                    let cond = self.cond(cond)?;
                    let id = self.branches.len();
                    self.branches.push(BranchInfo {
                        function: self.function,
                        path: path.clone(),
                        requirements: reqs.clone(),
                        true_target: usize::MAX,
                        false_target: usize::MAX,
                    });
                    let mut then_reqs = reqs.clone();
                    then_reqs.push((id, true));
                    let then_body = self.body(then, &format!("{path}.t"), &then_reqs)?;
                    let mut else_reqs = reqs.clone();
                    else_reqs.push((id, false));
                    let else_body = self.body(otherwise, &format!("{path}.e"), &else_reqs)?;
                    match (always_exits(&then_body), always_exits(&else_body)) {
                        (true, false) => reqs.push((id, false)),
                        (false, true) => reqs.push((id, true)),
                        _ => {}
                    }
                    Node::Branch {
                        id,
                        cond,
                        then_body,
                        else_body,
                    }
                }
                NodeDoc::Raise { raise } => Node::Raise(raise),
                NodeDoc::Crash { .. } => Node::Crash,
                NodeDoc::Return { value } => Node::Return(value),
            };
            nodes.push(node);
        }
        let _ = self.module;
        Ok(nodes)
    }
}

fn always_exits(body: &[Node]) -> bool {
    body.iter().any(|n| match n {
        Node::Raise(_) | Node::Crash | Node::Return(_) => true,
        Node::Branch {
            then_body,
            else_body,
            ..
        } => always_exits(then_body) && always_exits(else_body),
    })
}

fn parse_param(function: &str, spec: &str) -> Result<Param, SutError> {
    match spec.split_once('=') {
        None => Ok(Param {
            name: spec.trim().to_string(),
            default: None,
        }),
        Some((name, default)) => {
            let default: Literal =
                serde_json::from_str(default.trim()).map_err(|e| SutError::Signature {
                    function: function.to_string(),
                    message: format!("bad default for `{}`: {e}", name.trim()),
                })?;
            Ok(Param {
                name: name.trim().to_string(),
                default: Some(default),
            })
        }
    }
}

/// Parses a SUT document and assigns stable branch targets.
pub fn parse_sut(document: &[u8]) -> Result<SutModule, SutError> {
    let doc: SutDoc = serde_json::from_slice(document)?;
    let mut functions = Vec::new();
    let mut branches = Vec::new();
    let mut by_name = HashMap::new();

    for (fi, (name, fdoc)) in doc.functions.0.into_iter().enumerate() {
        if by_name.insert(name.clone(), fi).is_some() {
            return Err(SutError::DuplicateFunction(name));
        }
        let params = fdoc
            .params
            .iter()
            .map(|p| parse_param(&name, p))
            .collect::<Result<Vec<_>, _>>()?;
        for (i, p) in params.iter().enumerate() {
            if params[..i].iter().any(|q| q.name == p.name) {
                return Err(SutError::Signature {
                    function: name.clone(),
                    message: format!("duplicate parameter `{}`", p.name),
                });
            }
            if p.default.is_none() && params[..i].iter().any(|q| q.default.is_some()) {
                return Err(SutError::Signature {
                    function: name.clone(),
                    message: format!("required parameter `{}` follows a defaulted one", p.name),
                });
            }
        }
        let mut builder = Builder {
            module: &doc.module,
            function: fi,
            function_name: &name,
            params: &params,
            branches: std::mem::take(&mut branches),
        };
        let body = builder.body(fdoc.body, "", &[])?;
        branches = builder.branches;
        functions.push(SutFunction {
            name,
            params,
            body,
            entry_target: usize::MAX,
        });
    }

    let mut targets = Vec::new();
    let mut target_meta = Vec::new();
    for (fi, f) in functions.iter_mut().enumerate() {
        f.entry_target = targets.len();
        targets.push(BranchTarget {
            module: doc.module.clone(),
            api: f.name.clone(),
            path: None,
            polarity: Polarity::Entry,
        });
        target_meta.push(TargetMeta {
            function: fi,
            branch: None,
        });
    }
    for (bi, b) in branches.iter_mut().enumerate() {
        let api = functions[b.function].name.clone();
        for polarity in [true, false] {
            let idx = targets.len();
            targets.push(BranchTarget {
                module: doc.module.clone(),
                api: api.clone(),
                path: Some(b.path.clone()),
                polarity: if polarity {
                    Polarity::True
                } else {
                    Polarity::False
                },
            });
            target_meta.push(TargetMeta {
                function: b.function,
                branch: Some((bi, polarity)),
            });
            if polarity {
                b.true_target = idx;
            } else {
                b.false_target = idx;
            }
        }
    }

    Ok(SutModule {
        name: doc.module,
        functions,
        branches,
        targets,
        target_meta,
        by_name,
    })
}

impl SutModule {
    pub fn function(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn targets(&self) -> &[BranchTarget] {
        &self.targets
    }

    pub fn target_meta(&self, target: usize) -> TargetMeta {
        self.target_meta[target]
    }

    /// Number of decisions needed to reach a target, including its own.
    pub fn target_depth(&self, target: usize) -> usize {
        match self.target_meta[target].branch {
            None => 0,
            Some((b, _)) => self.branches[b].requirements.len() + 1,
        }
    }
}

/// All targets in stable order: entries first, then branches in document
/// order (true before false).
pub fn enumerate_targets(sut: &SutModule) -> Vec<BranchTarget> {
    sut.targets.clone()
}

// ---------------------------------------------------------------------------
// Evaluation

/// Result of evaluating an expression.
#[derive(Debug, Clone, PartialEq)]
enum Eval {
    Num(f64),
    Str(String),
    Null,
}

#[derive(Debug, Clone, Copy)]
struct TypeErr;

fn scalar_num(s: &Scalar) -> f64 {
    match s {
        Scalar::Bool(b) => f64::from(u8::from(*b)),
        Scalar::Int(i) => *i as f64,
        Scalar::Float(x) => *x,
    }
}

fn lit_eval(lit: &Literal) -> Eval {
    match lit {
        Literal::Null => Eval::Null,
        Literal::Bool(b) => Eval::Num(f64::from(u8::from(*b))),
        Literal::Int(i) => Eval::Num(*i as f64),
        Literal::Float(x) => Eval::Num(*x),
        Literal::Str(s) => Eval::Str(s.clone()),
    }
}

fn eval_expr(expr: &Expr, env: &[Value]) -> Result<Eval, TypeErr> {
    let arg = |p: &usize| &env[*p];
    Ok(match expr {
        Expr::Const(lit) => lit_eval(lit),
        Expr::IsTensor(p) => Eval::Num(f64::from(u8::from(matches!(arg(p), Value::Tensor(_))))),
        Expr::Ndim(p) => match arg(p) {
            Value::Tensor(a) | Value::Array(a) => Eval::Num(a.shape.len() as f64),
            Value::Bool(_) | Value::Int(_) | Value::Float(_) => Eval::Num(0.0),
            _ => return Err(TypeErr),
        },
        Expr::Shape(p, axis) => match arg(p) {
            Value::Tensor(a) | Value::Array(a) => {
                Eval::Num(a.shape.get(*axis as usize).map_or(-1.0, |&d| d as f64))
            }
            _ => return Err(TypeErr),
        },
        Expr::Dtype(p) => match arg(p) {
            Value::Tensor(a) | Value::Array(a) => Eval::Str(a.dtype.as_str().to_string()),
            Value::Bool(_) => Eval::Str("bool".into()),
            Value::Int(_) => Eval::Str("int64".into()),
            Value::Float(_) => Eval::Str("float64".into()),
            Value::Str(_) => Eval::Str("string".into()),
            _ => return Err(TypeErr),
        },
        Expr::Value(p) => match arg(p) {
            Value::None => Eval::Null,
            Value::Bool(b) => Eval::Num(f64::from(u8::from(*b))),
            Value::Int(i) => Eval::Num(*i as f64),
            Value::Float(x) => Eval::Num(*x),
            Value::Str(s) => Eval::Str(s.clone()),
            Value::Tensor(a) | Value::Array(a) if a.data.len() == 1 => {
                Eval::Num(scalar_num(&a.data[0]))
            }
            _ => return Err(TypeErr),
        },
        Expr::Len(p) => match arg(p) {
            Value::List(items) | Value::Tuple(items) => Eval::Num(items.len() as f64),
            Value::Str(s) => Eval::Num(s.chars().count() as f64),
            Value::Tensor(a) | Value::Array(a) if !a.shape.is_empty() => {
                Eval::Num(a.shape[0] as f64)
            }
            _ => return Err(TypeErr),
        },
        Expr::Structure(p) => Eval::Str(arg(p).kind_name().to_string()),
    })
}

/// Truth value (or type error) with the distances to either polarity.
#[derive(Debug, Clone, Copy)]
struct CondEval {
    truth: Result<bool, TypeErr>,
    to_true: f64,
    to_false: f64,
}

impl CondEval {
    fn error() -> Self {
        CondEval {
            truth: Err(TypeErr),
            to_true: 1.0,
            to_false: 1.0,
        }
    }

    /// A type error reaches neither polarity.
    fn settle(mut self) -> Self {
        if self.truth.is_err() {
            self.to_true = self.to_true.max(1.0);
            self.to_false = self.to_false.max(1.0);
        }
        self
    }

    fn bool(b: bool) -> Self {
        CondEval {
            truth: Ok(b),
            to_true: if b { 0.0 } else { 1.0 },
            to_false: if b { 1.0 } else { 0.0 },
        }
    }
}

fn equal(a: &Eval, b: &Eval) -> bool {
    a == b
}

fn compare(a: &Eval, op: CmpOp, b: &Eval) -> CondEval {
    match (a, b) {
        (Eval::Num(x), Eval::Num(y)) => {
            let (x, y) = (*x, *y);
            let (truth, to_true, to_false) = match op {
                CmpOp::Eq => (x == y, (x - y).abs(), if x == y { 1.0 } else { 0.0 }),
                CmpOp::Ne => (x != y, if x == y { 1.0 } else { 0.0 }, (x - y).abs()),
                CmpOp::Lt => (
                    x < y,
                    if x >= y { x - y + 1.0 } else { 0.0 },
                    if x < y { y - x } else { 0.0 },
                ),
                CmpOp::Le => (
                    x <= y,
                    if x > y { x - y } else { 0.0 },
                    if x <= y { y - x + 1.0 } else { 0.0 },
                ),
                CmpOp::Gt => (
                    x > y,
                    if x <= y { y - x + 1.0 } else { 0.0 },
                    if x > y { x - y } else { 0.0 },
                ),
                CmpOp::Ge => (
                    x >= y,
                    if x < y { y - x } else { 0.0 },
                    if x >= y { x - y + 1.0 } else { 0.0 },
                ),
            };
            CondEval {
                truth: Ok(truth),
                to_true,
                to_false,
            }
        }
        _ => match op {
            CmpOp::Eq => CondEval::bool(equal(a, b)),
            CmpOp::Ne => CondEval::bool(!equal(a, b)),
            _ => CondEval::error(),
        },
    }
}

fn eval_cond(cond: &Cond, env: &[Value]) -> CondEval {
    match cond {
        Cond::Cmp(a, op, b) => match (eval_expr(a, env), eval_expr(b, env)) {
            (Ok(a), Ok(b)) => compare(&a, *op, &b),
            _ => CondEval::error(),
        },
        Cond::In(e, set) => match eval_expr(e, env) {
            Ok(v) => CondEval::bool(set.iter().any(|lit| equal(&v, &lit_eval(lit)))),
            Err(_) => CondEval::error(),
        },
        Cond::And(children) => {
            let evals: Vec<CondEval> = children.iter().map(|c| eval_cond(c, env)).collect();
            let mut truth = Ok(true);
            for e in &evals {
                match e.truth {
                    Ok(true) => {}
                    other => {
                        truth = other;
                        break;
                    }
                }
            }
            CondEval {
                truth,
                to_true: evals.iter().map(|e| e.to_true).sum(),
                to_false: evals
                    .iter()
                    .map(|e| e.to_false)
                    .fold(f64::INFINITY, f64::min),
            }
            .settle()
        }
        Cond::Or(children) => {
            let evals: Vec<CondEval> = children.iter().map(|c| eval_cond(c, env)).collect();
            let mut truth = Ok(false);
            for e in &evals {
                match e.truth {
                    Ok(false) => {}
                    other => {
                        truth = other;
                        break;
                    }
                }
            }
            CondEval {
                truth,
                to_true: evals
                    .iter()
                    .map(|e| e.to_true)
                    .fold(f64::INFINITY, f64::min),
                to_false: evals.iter().map(|e| e.to_false).sum(),
            }
            .settle()
        }
        Cond::Not(inner) => {
            let e = eval_cond(inner, env);
            CondEval {
                truth: e.truth.map(|b| !b),
                to_true: e.to_false,
                to_false: e.to_true,
            }
        }
    }
}

/// Branch distance of `cond` toward `desired` in `env`. Zero iff the
/// condition evaluates to `desired`.
pub fn branch_distance(cond: &Cond, env: &[Value], desired: bool) -> f64 {
    let e = eval_cond(cond, env);
    if desired {
        e.to_true
    } else {
        e.to_false
    }
}

/// Evaluates `cond`, returning `None` on a type error.
pub fn evaluate_cond(cond: &Cond, env: &[Value]) -> Option<bool> {
    eval_cond(cond, env).truth.ok()
}

enum Flow {
    Continue,
    Return(Literal),
    Raise(ErrorKind),
    Crash,
    TypeError,
}

struct Exec<'a> {
    sut: &'a SutModule,
    env: Vec<Value>,
    covered: Vec<usize>,
    distances: Vec<(usize, f64, f64)>,
}

impl Exec<'_> {
    fn run(&mut self, body: &[Node]) -> Flow {
        for node in body {
            let flow = match node {
                Node::Branch {
                    id,
                    cond,
                    then_body,
                    else_body,
                } => {
                    let e = eval_cond(cond, &self.env);
                    self.distances.push((*id, e.to_true, e.to_false));
                    let info = &self.sut.branches[*id];
                    match e.truth {
                        Ok(true) => {
                            self.covered.push(info.true_target);
                            self.run(then_body)
                        }
                        Ok(false) => {
                            self.covered.push(info.false_target);
                            self.run(else_body)
                        }
                        Err(_) => Flow::TypeError,
                    }
                }
                Node::Raise(kind) => Flow::Raise(*kind),
                Node::Crash => Flow::Crash,
                Node::Return(lit) => Flow::Return(lit.clone()),
            };
            if !matches!(flow, Flow::Continue) {
                return flow;
            }
        }
        Flow::Continue
    }
}

fn literal_value(lit: &Literal) -> Value {
    match lit {
        Literal::Null => Value::None,
        Literal::Bool(b) => Value::Bool(*b),
        Literal::Int(i) => Value::Int(*i),
        Literal::Float(x) => Value::Float(*x),
        Literal::Str(s) => Value::Str(s.clone()),
    }
}

/// Interprets one call. Never fails: every abnormal path is an outcome kind.
pub fn execute_call(
    sut: &SutModule,
    function: usize,
    args: &[Value],
    recorder: &mut CoverageRecorder,
) -> CallOutcome {
    let f = &sut.functions[function];
    if args.len() < f.required_arity() || args.len() > f.params.len() {
        return CallOutcome {
            function,
            kind: OutcomeKind::ArityError,
            returned: None,
            covered: Vec::new(),
            distances: Vec::new(),
        };
    }
    let mut env: Vec<Value> = args.to_vec();
    for p in &f.params[args.len()..] {
        env.push(literal_value(p.default.as_ref().expect("arity checked")));
    }
    let mut exec = Exec {
        sut,
        env,
        covered: vec![f.entry_target],
        distances: Vec::new(),
    };
    let flow = exec.run(&f.body);
    let (kind, returned) = match flow {
        Flow::Continue => (OutcomeKind::Returned, Some(Literal::Null)),
        Flow::Return(lit) => (OutcomeKind::Returned, Some(lit)),
        Flow::Raise(k) => (OutcomeKind::Raised(k), None),
        Flow::Crash => (OutcomeKind::Crashed, None),
        Flow::TypeError => (OutcomeKind::TypeEvalError, None),
    };
    for &t in &exec.covered {
        recorder.record(t);
    }
    if kind == OutcomeKind::Crashed {
        recorder.aborted = true;
    }
    CallOutcome {
        function,
        kind,
        returned,
        covered: exec.covered,
        distances: exec.distances,
    }
}
