//! Test cases as ordered statement sequences.
//!
//! Every statement defines one variable; references point at earlier
//! statements by index. Tensor arguments are built by a contiguous group of
//! four statements (nested list, dtype literal, array build, tensor
//! conversion) sharing a group tag.

mod domain;
mod exec;
mod render;
mod value;

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::catalog::{ContainerKind, DtypeName, ParameterConstraint};
use crate::literal::Literal;

pub use domain::{random_string, Domain};
pub use exec::{evaluate, materialize, TestExecution, TestStatus};
pub use render::{render_script, render_suite};
pub use value::{nest, NdArray, Scalar, Value};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "stmt", rename_all = "snake_case")]
pub enum StatementKind {
    Primitive {
        value: Value,
        #[serde(skip)]
        domain: Option<Domain>,
    },
    UnsignedInt {
        value: u64,
        #[serde(skip)]
        lo: u64,
        #[serde(skip)]
        hi: u64,
    },
    Enum {
        allowed: Vec<Literal>,
        chosen: usize,
    },
    NestedList {
        shape: Vec<usize>,
        dtype: DtypeName,
        values: Vec<Scalar>,
        #[serde(skip)]
        domain: Domain,
    },
    DtypeLiteral {
        dtype: DtypeName,
    },
    BuildArray {
        list: usize,
        dtype: usize,
    },
    ToTensor {
        array: usize,
    },
    Container {
        kind: ContainerKind,
        items: Vec<Value>,
        #[serde(skip)]
        domain: Option<Domain>,
    },
    Call {
        api: String,
        args: Vec<usize>,
    },
}

impl StatementKind {
    pub fn refs(&self) -> Vec<usize> {
        match self {
            StatementKind::BuildArray { list, dtype } => vec![*list, *dtype],
            StatementKind::ToTensor { array } => vec![*array],
            StatementKind::Call { args, .. } => args.clone(),
            _ => Vec::new(),
        }
    }

    pub fn map_refs(&mut self, mut f: impl FnMut(usize) -> usize) {
        match self {
            StatementKind::BuildArray { list, dtype } => {
                *list = f(*list);
                *dtype = f(*dtype);
            }
            StatementKind::ToTensor { array } => *array = f(*array),
            StatementKind::Call { args, .. } => {
                for a in args {
                    *a = f(*a);
                }
            }
            _ => {}
        }
    }

    fn group_slot(&self) -> Option<usize> {
        match self {
            StatementKind::NestedList { .. } => Some(0),
            StatementKind::DtypeLiteral { .. } => Some(1),
            StatementKind::BuildArray { .. } => Some(2),
            StatementKind::ToTensor { .. } => Some(3),
            _ => None,
        }
    }

    /// Statements whose variable may be passed to a call.
    pub fn is_argument_producer(&self) -> bool {
        matches!(
            self,
            StatementKind::Primitive { .. }
                | StatementKind::UnsignedInt { .. }
                | StatementKind::Enum { .. }
                | StatementKind::Container { .. }
                | StatementKind::ToTensor { .. }
        )
    }

    pub fn is_call(&self) -> bool {
        matches!(self, StatementKind::Call { .. })
    }
}

/// Marks membership in a tensor-construction group. The recipe is the
/// constraint the group was generated from (`None` for an arbitrary tensor)
/// and is what crossover uses to regenerate a broken group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupTag {
    pub id: u32,
    pub recipe: Option<Arc<ParameterConstraint>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    GeneratedValid,
    GeneratedArbitrary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub kind: StatementKind,
    pub group: Option<GroupTag>,
    /// Set on the statement a call argument points at.
    pub provenance: Option<Provenance>,
}

impl Statement {
    pub fn new(kind: StatementKind) -> Self {
        Statement {
            kind,
            group: None,
            provenance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantError {
    #[error("statement {0} references {1}, which does not precede it")]
    ForwardRef(usize, usize),
    #[error("statement {0} references {1} of the wrong kind")]
    RefKind(usize, usize),
    #[error("statement {0} reaches into a tensor group from outside")]
    GroupLeak(usize),
    #[error("tensor group {0} is not a contiguous, complete sequence")]
    GroupShape(u32),
    #[error("statement {0} is a group member without a group tag")]
    Untagged(usize),
    #[error("statement {0} is malformed: {1}")]
    Malformed(usize, &'static str),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TestCase {
    pub statements: Vec<Statement>,
}

impl TestCase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn push(&mut self, stmt: Statement) -> usize {
        self.statements.push(stmt);
        self.statements.len() - 1
    }

    pub fn next_group_id(&self) -> u32 {
        self.statements
            .iter()
            .filter_map(|s| s.group.as_ref().map(|g| g.id + 1))
            .max()
            .unwrap_or(0)
    }

    pub fn call_count(&self) -> usize {
        self.statements.iter().filter(|s| s.kind.is_call()).count()
    }

    /// Indices where a block may be inserted without splitting a group.
    pub fn insertion_points(&self) -> Vec<usize> {
        (0..=self.len())
            .filter(|&i| {
                i == self.len()
                    || self.statements[i]
                        .group
                        .as_ref()
                        .is_none_or(|_| self.statements[i].kind.group_slot() == Some(0))
            })
            .collect()
    }

    /// Splices `block` (whose refs are local to the block) in at `at`,
    /// shifting later references.
    pub fn insert_block(&mut self, at: usize, block: Vec<Statement>) {
        let n = block.len();
        let gid_base = self.next_group_id();
        let mut block = block;
        for s in &mut block {
            s.kind.map_refs(|r| r + at);
            if let Some(g) = &mut s.group {
                g.id += gid_base;
            }
        }
        for s in &mut self.statements[at..] {
            s.kind.map_refs(|r| if r >= at { r + n } else { r });
        }
        self.statements.splice(at..at, block);
    }

    /// Checks every structural invariant.
    pub fn check_invariants(&self) -> Result<(), InvariantError> {
        let stmts = &self.statements;
        for (i, s) in stmts.iter().enumerate() {
            for r in s.kind.refs() {
                if r >= i {
                    return Err(InvariantError::ForwardRef(i, r));
                }
            }
            match &s.kind {
                StatementKind::BuildArray { list, dtype } => {
                    if !matches!(stmts[*list].kind, StatementKind::NestedList { .. })
                        || !matches!(stmts[*dtype].kind, StatementKind::DtypeLiteral { .. })
                    {
                        return Err(InvariantError::RefKind(i, *list));
                    }
                }
                StatementKind::ToTensor { array } => {
                    if !matches!(stmts[*array].kind, StatementKind::BuildArray { .. }) {
                        return Err(InvariantError::RefKind(i, *array));
                    }
                }
                StatementKind::Call { args, .. } => {
                    for &a in args {
                        if !stmts[a].kind.is_argument_producer() {
                            return Err(InvariantError::RefKind(i, a));
                        }
                    }
                }
                StatementKind::Enum { allowed, chosen } => {
                    if *chosen >= allowed.len() {
                        return Err(InvariantError::Malformed(i, "enum choice out of range"));
                    }
                }
                StatementKind::NestedList { shape, values, .. } => {
                    if values.len() != shape.iter().product::<usize>() {
                        return Err(InvariantError::Malformed(i, "element count"));
                    }
                }
                StatementKind::UnsignedInt { value, lo, hi } if value < lo || value > hi => {
                    return Err(InvariantError::Malformed(i, "unsigned out of bounds"));
                }
                _ => {}
            }
            match (&s.group, s.kind.group_slot()) {
                (None, Some(_)) => return Err(InvariantError::Untagged(i)),
                (Some(g), None) => return Err(InvariantError::GroupShape(g.id)),
                _ => {}
            }
        }

        let mut seen = BTreeSet::new();
        let mut i = 0;
        while i < stmts.len() {
            let Some(g) = &stmts[i].group else {
                i += 1;
                continue;
            };
            if !seen.insert(g.id) || i + 4 > stmts.len() {
                return Err(InvariantError::GroupShape(g.id));
            }
            for slot in 0..4 {
                let s = &stmts[i + slot];
                if s.kind.group_slot() != Some(slot) || s.group.as_ref().map(|t| t.id) != Some(g.id)
                {
                    return Err(InvariantError::GroupShape(g.id));
                }
            }
            let internal = matches!(
                stmts[i + 2].kind,
                StatementKind::BuildArray { list, dtype } if list == i && dtype == i + 1
            ) && matches!(stmts[i + 3].kind, StatementKind::ToTensor { array } if array == i + 2);
            if !internal {
                return Err(InvariantError::GroupShape(g.id));
            }
            i += 4;
        }

        for (i, s) in stmts.iter().enumerate() {
            if s.group.is_some() {
                continue;
            }
            for r in s.kind.refs() {
                if stmts[r].group.is_some()
                    && !matches!(stmts[r].kind, StatementKind::ToTensor { .. })
                {
                    return Err(InvariantError::GroupLeak(i));
                }
            }
        }
        Ok(())
    }
}

/// Removes statement `index`, every statement that transitively references
/// it, and every tensor group that loses a member.
pub fn remove_with_dependents(tc: &TestCase, index: usize) -> TestCase {
    let n = tc.len();
    let mut removed = vec![false; n];
    removed[index] = true;
    loop {
        let mut changed = false;
        let dead_groups: BTreeSet<u32> = tc
            .statements
            .iter()
            .zip(&removed)
            .filter(|(_, r)| **r)
            .filter_map(|(s, _)| s.group.as_ref().map(|g| g.id))
            .collect();
        for (i, s) in tc.statements.iter().enumerate() {
            if removed[i] {
                continue;
            }
            let dead = s.kind.refs().iter().any(|&r| removed[r])
                || s.group
                    .as_ref()
                    .is_some_and(|g| dead_groups.contains(&g.id));
            if dead {
                removed[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    retain(tc, &removed)
}

/// Keeps the statements not flagged in `removed`, re-indexing references.
/// Callers guarantee no kept statement references a removed one.
pub(crate) fn retain(tc: &TestCase, removed: &[bool]) -> TestCase {
    let mut new_index = vec![usize::MAX; tc.len()];
    let mut out = TestCase::new();
    for (i, s) in tc.statements.iter().enumerate() {
        if removed[i] {
            continue;
        }
        let mut s = s.clone();
        s.kind.map_refs(|r| new_index[r]);
        new_index[i] = out.push(s);
    }
    out
}
