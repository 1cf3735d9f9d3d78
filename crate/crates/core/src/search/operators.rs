use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::catalog::ParameterConstraint;
use crate::generation::{
    generate_tensor_sequence, insert_argument, random_scalar_domain, GenContext,
};
use crate::model::{
    remove_with_dependents, Domain, Provenance, Scalar, Statement, StatementKind, TestCase, Value,
};

/// Start of the tensor group that `cut` splits, if any. A cut at index `i`
/// separates statements `..i` from `i..`.
fn split_group(tc: &TestCase, cut: usize) -> Option<usize> {
    if cut == 0 || cut >= tc.len() {
        return None;
    }
    let s = &tc.statements[cut];
    match (&s.group, &s.kind) {
        (Some(_), StatementKind::NestedList { .. }) | (None, _) => None,
        (Some(_), _) => (0..cut)
            .rev()
            .find(|&i| matches!(tc.statements[i].kind, StatementKind::NestedList { .. })),
    }
}

fn fresh_group<R: Rng + ?Sized>(
    recipe: Option<&Arc<ParameterConstraint>>,
    ctx: &GenContext,
    rng: &mut R,
) -> Vec<Statement> {
    let (mut statements, clamped) = generate_tensor_sequence(recipe, &ctx.cfg, rng);
    statements[3].provenance = Some(if recipe.is_some() && !clamped {
        Provenance::GeneratedValid
    } else {
        Provenance::GeneratedArbitrary
    });
    statements
}

fn param_constraint<'a>(
    ctx: &'a GenContext,
    api: &str,
    k: usize,
) -> Option<&'a Arc<ParameterConstraint>> {
    ctx.api(api)
        .and_then(|a| a.params.get(k))
        .and_then(|p| p.constraint.as_ref())
}

/// Renumbers group ids in order of appearance.
fn renumber_groups(tc: &mut TestCase) {
    let mut ids = HashMap::new();
    for s in &mut tc.statements {
        if let Some(g) = &mut s.group {
            let next = ids.len() as u32;
            g.id = *ids.entry(g.id).or_insert(next);
        }
    }
}

fn recipe_at(tc: &TestCase, i: usize) -> Option<Arc<ParameterConstraint>> {
    tc.statements[i]
        .group
        .as_ref()
        .and_then(|g| g.recipe.clone())
}

/// `head[..ch]` followed by `tail[ct..]`. A tensor group split by either cut
/// is discarded and replaced by a regenerated group; call arguments whose
/// producer stayed behind in the other parent are regenerated in front of
/// the call.
fn splice<R: Rng + ?Sized>(
    head: &TestCase,
    ch: usize,
    tail: &TestCase,
    ct: usize,
    ctx: &GenContext,
    rng: &mut R,
) -> TestCase {
    let mut out = TestCase::new();
    match split_group(head, ch) {
        Some(s) => {
            out.statements = head.statements[..s].to_vec();
            let group = fresh_group(recipe_at(head, s).as_ref(), ctx, rng);
            out.insert_block(out.len(), group);
        }
        None => out.statements = head.statements[..ch.min(head.len())].to_vec(),
    }

    let mut map: HashMap<usize, usize> = HashMap::new();
    let mut start = ct;
    if let Some(s) = split_group(tail, ct) {
        let group = fresh_group(recipe_at(tail, s).as_ref(), ctx, rng);
        out.insert_block(out.len(), group);
        map.insert(s + 3, out.len() - 1);
        start = s + 4;
    }
    let mut gids: HashMap<u32, u32> = HashMap::new();
    for j in start..tail.len() {
        let mut stmt = tail.statements[j].clone();
        if let Some(g) = &mut stmt.group {
            let next = out.next_group_id();
            g.id = *gids.entry(g.id).or_insert(next);
        }
        if let StatementKind::Call { api, args } = &mut stmt.kind {
            for (k, a) in args.iter_mut().enumerate() {
                *a = match map.get(a) {
                    Some(&m) => m,
                    None => {
                        let c = param_constraint(ctx, api, k);
                        let at = out.len();
                        insert_argument(&mut out, at, c, &ctx.cfg, rng)
                    }
                };
            }
        } else {
            stmt.kind.map_refs(|r| map[&r]);
        }
        map.insert(j, out.push(stmt));
    }
    renumber_groups(&mut out);
    out
}

fn cut_point(len: usize, p: f64) -> usize {
    if len == 0 {
        0
    } else {
        1 + ((len - 1) as f64 * p).floor() as usize
    }
}

/// Single-point relative crossover. Both offspring satisfy the test case
/// invariants and contain at least one call.
pub fn crossover<R: Rng + ?Sized>(
    a: &TestCase,
    b: &TestCase,
    ctx: &GenContext,
    rng: &mut R,
) -> (TestCase, TestCase) {
    let p: f64 = rng.gen();
    let ca = cut_point(a.len(), p);
    let cb = cut_point(b.len(), p);
    let mut x = splice(a, ca, b, cb, ctx, rng);
    let mut y = splice(b, cb, a, ca, ctx, rng);
    ensure_call(&mut x, ctx, rng);
    ensure_call(&mut y, ctx, rng);
    drop_dead_arguments(&mut x);
    drop_dead_arguments(&mut y);
    (x, y)
}

fn ensure_call<R: Rng + ?Sized>(tc: &mut TestCase, ctx: &GenContext, rng: &mut R) {
    if tc.call_count() == 0 {
        let block = ctx.random_test_case(rng);
        tc.insert_block(tc.len(), block.statements);
    }
}

/// Removes argument producers that no statement consumes.
pub fn drop_dead_arguments(tc: &mut TestCase) {
    loop {
        let mut used = vec![false; tc.len()];
        for s in &tc.statements {
            for r in s.kind.refs() {
                used[r] = true;
            }
        }
        let dead = (0..tc.len())
            .rev()
            .find(|&i| !used[i] && tc.statements[i].kind.is_argument_producer());
        match dead {
            Some(i) => *tc = remove_with_dependents(tc, i),
            None => break,
        }
    }
}

fn fallback_domain(v: &Value, clamp: f64) -> Option<Domain> {
    let k = clamp.floor() as i64;
    match v {
        Value::Bool(_) => Some(Domain::Bool {
            allow_false: true,
            allow_true: true,
        }),
        Value::Int(_) => Some(Domain::Int { lo: -k, hi: k }),
        Value::Float(_) => Some(Domain::Float {
            lo: -clamp,
            hi: clamp,
        }),
        Value::Str(_) => Some(Domain::Str),
        _ => None,
    }
}

fn perturb_leaf<R: Rng + ?Sized>(
    items: &mut [Value],
    domain: Option<Domain>,
    clamp: f64,
    rng: &mut R,
) {
    if items.is_empty() {
        return;
    }
    let i = rng.gen_range(0..items.len());
    match &mut items[i] {
        Value::List(inner) | Value::Tuple(inner) => perturb_leaf(inner, domain, clamp, rng),
        leaf => {
            if let Some(d) = domain.or_else(|| fallback_domain(leaf, clamp)) {
                *leaf = d.perturb(leaf, rng);
            }
        }
    }
}

fn scalar_to_value(s: Scalar) -> Value {
    Value::from_scalar(s)
}

fn value_to_scalar(v: Value) -> Scalar {
    match v {
        Value::Bool(b) => Scalar::Bool(b),
        Value::Int(i) => Scalar::Int(i),
        Value::Float(x) => Scalar::Float(x),
        other => unreachable!("numeric domain produced {other:?}"),
    }
}

/// Changes statement `i` in place. Shape-carrying statements keep their
/// shape; a call gets one argument replaced, added or dropped. Returns false
/// when the statement has nothing to change.
pub fn change_statement<R: Rng + ?Sized>(
    tc: &mut TestCase,
    i: usize,
    ctx: &GenContext,
    rng: &mut R,
) -> bool {
    let clamp = ctx.cfg.clamp;
    if tc.statements[i].kind.is_call() {
        return change_call(tc, i, ctx, rng);
    }
    match &mut tc.statements[i].kind {
        StatementKind::Primitive { value, domain } => {
            match domain.or_else(|| fallback_domain(value, clamp)) {
                Some(d) => *value = d.perturb(value, rng),
                None => {
                    let d = random_scalar_domain(&ctx.cfg, rng);
                    *value = d.sample(rng);
                    *domain = Some(d);
                }
            }
            true
        }
        StatementKind::UnsignedInt { value, lo, hi } => {
            if lo == hi {
                return false;
            }
            let d = Domain::Int {
                lo: *lo as i64,
                hi: *hi as i64,
            };
            if let Value::Int(n) = d.perturb(&Value::Int(*value as i64), rng) {
                *value = n as u64;
            }
            true
        }
        StatementKind::Enum { allowed, chosen } => {
            if allowed.len() < 2 {
                return false;
            }
            let next = rng.gen_range(0..allowed.len() - 1);
            *chosen = if next >= *chosen { next + 1 } else { next };
            true
        }
        StatementKind::NestedList { values, domain, .. } => {
            let n = values.len();
            let p = 1.0 / n as f64;
            let forced = rng.gen_range(0..n);
            for (k, s) in values.iter_mut().enumerate() {
                if k == forced || rng.gen_bool(p) {
                    *s = value_to_scalar(domain.perturb(&scalar_to_value(*s), rng));
                }
            }
            true
        }
        StatementKind::Container { items, domain, .. } => {
            perturb_leaf(items, *domain, clamp, rng);
            true
        }
        StatementKind::DtypeLiteral { .. }
        | StatementKind::BuildArray { .. }
        | StatementKind::ToTensor { .. } => false,
        StatementKind::Call { .. } => unreachable!(),
    }
}

fn change_call<R: Rng + ?Sized>(
    tc: &mut TestCase,
    i: usize,
    ctx: &GenContext,
    rng: &mut R,
) -> bool {
    let StatementKind::Call { api, args } = &tc.statements[i].kind else {
        unreachable!()
    };
    let api = api.clone();
    let n = args.len();
    let Some(spec) = ctx.api(&api) else {
        return false;
    };
    let required = spec.params.iter().filter(|p| p.required).count();
    let total = spec.params.len();
    let mut choice = rng.gen_range(0..3);
    if choice == 1 && n >= total {
        choice = 0;
    }
    if choice == 2 && n <= required {
        choice = 0;
    }
    if choice == 0 && n == 0 {
        if total == 0 {
            return false;
        }
        choice = 1;
    }
    match choice {
        0 => {
            let k = rng.gen_range(0..n);
            let c = spec.params.get(k).and_then(|p| p.constraint.clone());
            let producer = insert_argument(tc, i, c.as_ref(), &ctx.cfg, rng);
            if let StatementKind::Call { args, .. } = &mut tc.statements[producer + 1].kind {
                args[k] = producer;
            }
        }
        1 => {
            let c = spec.params[n].constraint.clone();
            let producer = insert_argument(tc, i, c.as_ref(), &ctx.cfg, rng);
            if let StatementKind::Call { args, .. } = &mut tc.statements[producer + 1].kind {
                args.push(producer);
            }
        }
        _ => {
            if let StatementKind::Call { args, .. } = &mut tc.statements[i].kind {
                args.pop();
            }
        }
    }
    true
}

/// Deletion, change and insertion, each applied with probability 1/3.
/// Deletion and change visit every statement with probability 1/length.
/// A mutant longer than both `max_len` and its parent is discarded in
/// favour of the parent.
pub fn mutate<R: Rng + ?Sized>(
    tc: &TestCase,
    ctx: &GenContext,
    max_len: usize,
    rng: &mut R,
) -> TestCase {
    let mut out = tc.clone();
    let third = 1.0 / 3.0;

    if rng.gen_bool(third) && !out.is_empty() {
        let p = 1.0 / out.len() as f64;
        for i in (0..out.len()).rev() {
            if i < out.len() && rng.gen_bool(p) {
                out = remove_with_dependents(&out, i);
            }
        }
    }

    if rng.gen_bool(third) && !out.is_empty() {
        let p = 1.0 / out.len() as f64;
        for i in (0..out.len()).rev() {
            if rng.gen_bool(p) {
                change_statement(&mut out, i, ctx, rng);
            }
        }
    }

    if rng.gen_bool(third) {
        let mut prob = 0.5;
        while out.len() < max_len && rng.gen_bool(prob) {
            let block = ctx.random_test_case(rng);
            if out.len() + block.len() > max_len {
                break;
            }
            let points = out.insertion_points();
            let at = *points.choose(rng).unwrap();
            out.insert_block(at, block.statements);
            prob *= 0.5;
        }
    }

    ensure_call(&mut out, ctx, rng);
    drop_dead_arguments(&mut out);
    renumber_groups(&mut out);
    if out.len() > max_len && tc.len() < out.len() {
        return tc.clone();
    }
    out
}
