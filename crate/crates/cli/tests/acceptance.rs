//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use ctgen_core::analytics::{exact_p_value, relative_coverage, vargha_delaney_a12, Summary};
use ctgen_core::catalog::check_raw;
use ctgen_core::experiment::{
    discover, read_catalog, read_sut, results_json, run_campaign, run_once, CampaignConfig, Subject,
};
use ctgen_core::generation::generate_valid;
use ctgen_core::model::{materialize, NdArray, Provenance};
use ctgen_core::rng::seeded;
use ctgen_core::search::{change_statement, crossover, mutate};
use ctgen_core::{
    check_value, Budget, ContainerKind, DtypeName, GenConfig, GenContext, Literal, Mode,
    ParameterConstraint, RawConstraint, Scalar, SearchConfig, StatementKind, TestCase, Value,
};
use rand::seq::SliceRandom;
use rand::Rng;

const CAMPAIGN_SEEDS: u64 = 10;
const CAMPAIGN_BUDGET_S: f64 = 10.0;
const MIN_MODULES: usize = 10;
const MIN_MEAN_A12: f64 = 0.65;
const ALPHA: f64 = 0.05;
const MIN_SIGNIFICANT_SHARE: f64 = 0.5;
const MAX_WALL: Duration = Duration::from_secs(40 * 60);
const GENERATION_PAIRS: usize = 10_000;
const OPERATOR_APPLICATIONS: usize = 10_000;
const MAX_LENGTH: usize = 40;
const COVERAGE_TRIPLES: usize = 1_000;
const A12_MAX_SIDE: usize = 12;
const EXACT_MAX_TOTAL: usize = 12;
const P_TOLERANCE: f64 = 1e-12;

type Outcome = Result<String, String>;

fn corpus(sub: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(sub)
}

fn subjects() -> Vec<Subject> {
    discover(&corpus("sut"), &corpus("catalog"))
        .expect("corpus loads")
        .0
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// Campaign criteria

fn campaign(out: &Path) -> Result<(Summary, Duration), String> {
    let subjects = subjects();
    ensure(subjects.len() >= MIN_MODULES, || {
        format!("{} modules, need {MIN_MODULES}", subjects.len())
    })?;
    let cfg = CampaignConfig {
        seeds: CAMPAIGN_SEEDS,
        master_seed: 2024,
        gen: GenConfig::default(),
        budget: Budget::Seconds(CAMPAIGN_BUDGET_S),
        jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
        resume: false,
        alpha: ALPHA,
    };
    let start = Instant::now();
    let campaign = run_campaign(&subjects, &cfg, out, &|_, _| {}).map_err(|e| e.to_string())?;
    Ok((campaign.summary, start.elapsed()))
}

fn criterion_ab(summary: &Summary, wall: Duration) -> Outcome {
    let n = summary.modules.len();
    ensure(n >= MIN_MODULES, || format!("{n} modules summarised"))?;
    let significant = summary
        .modules
        .iter()
        .filter(|m| m.p_value.is_some_and(|p| p < ALPHA))
        .count();
    let share = significant as f64 / n as f64;
    let detail = format!(
        "mean A12 {:.3}, p<{ALPHA} on {significant}/{n} modules, wall {:.1} min",
        summary.mean_a12,
        wall.as_secs_f64() / 60.0
    );
    ensure(summary.mean_a12 >= MIN_MEAN_A12, || detail.clone())?;
    ensure(share >= MIN_SIGNIFICANT_SHARE, || detail.clone())?;
    ensure(wall <= MAX_WALL, || detail.clone())?;
    Ok(detail)
}

fn criterion_compliance(summary: &Summary) -> Outcome {
    let c = summary.compliance_constrained;
    let u = summary.compliance_unconstrained;
    let detail = format!(
        "compliant constrained {}/{}, unconstrained {}/{}",
        c.compliant, c.generated, u.compliant, u.generated
    );
    ensure(c.compliant > u.compliant, || detail.clone())?;
    ensure(c.non_compliant > 0 && u.non_compliant > 0, || {
        detail.clone()
    })?;
    Ok(detail)
}

// Generation validity

fn random_literal<R: Rng>(rng: &mut R) -> Literal {
    match rng.gen_range(0..5) {
        0 => Literal::Null,
        1 => Literal::Bool(rng.gen()),
        2 => Literal::Int(rng.gen_range(-6..6)),
        3 => Literal::Float(f64::from(rng.gen_range(-12..12)) / 2.0),
        _ => Literal::Str(
            ["mean", "sum", "none", "a"]
                .choose(rng)
                .unwrap()
                .to_string(),
        ),
    }
}

fn maybe<R: Rng, T>(rng: &mut R, f: impl FnOnce(&mut R) -> T) -> Option<T> {
    if rng.gen_bool(0.5) {
        Some(f(rng))
    } else {
        None
    }
}

fn subset<R: Rng, T: Clone>(rng: &mut R, items: &[T], max: usize) -> Vec<T> {
    let k = rng.gen_range(1..=max.min(items.len()));
    let mut picked: Vec<T> = items.choose_multiple(rng, k).cloned().collect();
    picked.shuffle(rng);
    picked
}

fn random_raw<R: Rng>(rng: &mut R) -> RawConstraint {
    let names: Vec<String> = DtypeName::ALL
        .iter()
        .map(|d| d.as_str().to_string())
        .collect();
    RawConstraint {
        dtype: maybe(rng, |r| subset(r, &names, 4)),
        ndim: maybe(rng, |r| subset(r, &[0, 1, 2, 3, 4, 6], 3)),
        tensor_t: maybe(rng, |r| r.gen()),
        structure: maybe(rng, |r| {
            subset(r, &["list".to_string(), "tuple".to_string()], 2)
        }),
        range: maybe(rng, |r| {
            let lo = r.gen_range(-40..40);
            let w = r.gen_range(0..40);
            [f64::from(lo) / 2.0, f64::from(lo + w) / 2.0]
        }),
        enum_values: maybe(rng, |r| {
            let n = r.gen_range(1..4);
            (0..n).map(|_| random_literal(r)).collect()
        }),
        optional: rng.gen(),
    }
}

fn value_of(statements: &[ctgen_core::Statement]) -> Value {
    let mut tc = TestCase::new();
    tc.insert_block(0, statements.to_vec());
    materialize(&tc).pop().expect("argument has a value")
}

fn criterion_generation() -> Outcome {
    let mut rng = seeded(7);
    let cfg = GenConfig::default();
    let (mut pairs, mut valid, mut rejected) = (0, 0, 0);
    while pairs < GENERATION_PAIRS {
        let raw = random_raw(&mut rng);
        let Ok(c) = check_raw(&raw) else {
            rejected += 1;
            continue;
        };
        let c = Arc::new(c);
        let seed: u64 = rng.gen();
        pairs += 1;
        let arg = generate_valid(&c, &cfg, &mut seeded(seed));
        if arg.provenance != Provenance::GeneratedValid {
            continue;
        }
        valid += 1;
        let v = value_of(&arg.statements);
        let violations = check_value(&v, &c);
        ensure(violations.is_empty(), || {
            format!("seed {seed}: {v:?} violates {violations:?} of {raw:?}")
        })?;
    }
    ensure(valid > GENERATION_PAIRS / 2, || {
        format!("only {valid} generated-valid arguments")
    })?;
    Ok(format!(
        "{valid}/{pairs} generated-valid arguments comply ({rejected} contradictory constraints skipped)"
    ))
}

// Operator invariants

fn nested_shapes(tc: &TestCase) -> Vec<Vec<usize>> {
    tc.statements
        .iter()
        .filter_map(|s| match &s.kind {
            StatementKind::NestedList { shape, .. } => Some(shape.clone()),
            _ => None,
        })
        .collect()
}

fn criterion_operators() -> Outcome {
    let subjects = subjects();
    let contexts: Vec<GenContext> = subjects
        .iter()
        .flat_map(|s| {
            [Mode::Constrained, Mode::Unconstrained]
                .map(|m| GenContext::new(&s.sut, Some(&s.catalog), m, GenConfig::default()))
        })
        .collect();
    let mut rng = seeded(11);
    let mut violations = Vec::new();
    let mut shape_checks = 0;
    let check = |tc: &TestCase, what: &str, out: &mut Vec<String>| {
        if let Err(e) = tc.check_invariants() {
            out.push(format!("{what}: {e:?}"));
        }
        if tc.call_count() == 0 {
            out.push(format!("{what}: no call"));
        }
        if what != "crossover" && tc.len() > MAX_LENGTH {
            out.push(format!("{what}: length {}", tc.len()));
        }
    };
    let mut pool: Vec<(usize, TestCase)> = Vec::new();
    for (k, ctx) in contexts.iter().enumerate() {
        for _ in 0..4 {
            pool.push((k, ctx.random_test_case(&mut rng)));
        }
    }
    for step in 0..OPERATOR_APPLICATIONS {
        let a = rng.gen_range(0..pool.len());
        let (k, parent) = pool[a].clone();
        let ctx = &contexts[k];
        match step % 3 {
            0 => {
                let mate = pool
                    .iter()
                    .filter(|(j, _)| *j == k)
                    .map(|(_, t)| t)
                    .collect::<Vec<_>>()
                    .choose(&mut rng)
                    .map(|t| (*t).clone())
                    .unwrap();
                let (x, y) = crossover(&parent, &mate, ctx, &mut rng);
                check(&x, "crossover", &mut violations);
                check(&y, "crossover", &mut violations);
                if x.len() <= MAX_LENGTH {
                    pool[a] = (k, x);
                }
            }
            1 => {
                let m = mutate(&parent, ctx, MAX_LENGTH, &mut rng);
                check(&m, "mutation", &mut violations);
                pool[a] = (k, m);
            }
            _ => {
                let lists: Vec<usize> = (0..parent.len())
                    .filter(|&i| {
                        matches!(parent.statements[i].kind, StatementKind::NestedList { .. })
                    })
                    .collect();
                let Some(&i) = lists.choose(&mut rng) else {
                    let m = mutate(&parent, ctx, MAX_LENGTH, &mut rng);
                    check(&m, "mutation", &mut violations);
                    continue;
                };
                let mut t = parent.clone();
                change_statement(&mut t, i, ctx, &mut rng);
                shape_checks += 1;
                check(&t, "change", &mut violations);
                if nested_shapes(&t) != nested_shapes(&parent) {
                    violations.push("nested list shape changed".into());
                }
            }
        }
    }
    ensure(violations.is_empty(), || {
        format!("{} violations, first: {}", violations.len(), violations[0])
    })?;
    Ok(format!(
        "{OPERATOR_APPLICATIONS} applications, 0 violations, {shape_checks} nested-list shape checks"
    ))
}

// Statistics oracles

fn a12_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let mut wins = 0.0;
    for x in xs {
        for y in ys {
            wins += if x > y {
                1.0
            } else if x == y {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / (xs.len() * ys.len()) as f64
}

fn u_of(xs: &[f64], ys: &[f64]) -> usize {
    xs.iter()
        .map(|x| ys.iter().filter(|y| x > *y).count())
        .sum()
}

/// Two-sided exact p by enumerating every split of the pooled sample.
fn exact_p_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let (n, total) = (xs.len(), pooled.len());
    let observed = u_of(xs, ys);
    let (mut le, mut ge, mut all) = (0u64, 0u64, 0u64);
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let side = |inside: bool| -> Vec<f64> {
            (0..total)
                .filter(|&i| (mask >> i & 1 == 1) == inside)
                .map(|i| pooled[i])
                .collect()
        };
        let (a, b) = (side(true), side(false));
        let u = u_of(&a, &b);
        all += 1;
        le += u64::from(u <= observed);
        ge += u64::from(u >= observed);
    }
    (2.0 * le.min(ge) as f64 / all as f64).min(1.0)
}

fn criterion_statistics() -> Outcome {
    let mut rng = seeded(5);
    for i in 0..COVERAGE_TRIPLES {
        let total = rng.gen_range(1..60);
        let mut v: Vec<f64> = (0..3)
            .map(|_| f64::from(rng.gen_range(0..=total)) / f64::from(total))
            .collect();
        if i % 10 == 0 {
            v = vec![v[0]; 3];
        }
        v.sort_by(f64::total_cmp);
        let (min, cov, max) = (v[0], v[1], v[2]);
        let expected = if min == max {
            100.0
        } else {
            100.0 * (cov - min) / (max - min)
        };
        let got = relative_coverage(cov, min, max).map_err(|e| e.to_string())?;
        ensure(got == expected, || {
            format!("relative_coverage({cov}, {min}, {max}) = {got}, want {expected}")
        })?;
    }

    let mut a12_cases = 0;
    for n in 1..=A12_MAX_SIDE {
        for m in 1..=A12_MAX_SIDE {
            let xs: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..6))).collect();
            let ys: Vec<f64> = (0..m).map(|_| f64::from(rng.gen_range(0..6))).collect();
            let got = vargha_delaney_a12(&xs, &ys).map_err(|e| e.to_string())?;
            let want = a12_oracle(&xs, &ys);
            ensure(got == want, || {
                format!("A12 {xs:?} vs {ys:?}: {got} != {want}")
            })?;
            a12_cases += 1;
        }
    }

    let mut exact_cases = 0;
    for n in 1..EXACT_MAX_TOTAL {
        for m in 1..=(EXACT_MAX_TOTAL - n) {
            let mut pooled: Vec<f64> = (0..n + m).map(|k| k as f64 * 1.5 - 3.0).collect();
            pooled.shuffle(&mut rng);
            let (xs, ys) = pooled.split_at(n);
            let got = exact_p_value(xs, ys)
                .map_err(|e| e.to_string())?
                .ok_or("no exact p")?;
            let want = exact_p_oracle(xs, ys);
            ensure((got - want).abs() <= P_TOLERANCE, || {
                format!("exact p {xs:?} vs {ys:?}: {got} != {want}")
            })?;
            exact_cases += 1;
        }
    }

    let p = exact_p_value(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0])
        .map_err(|e| e.to_string())?
        .ok_or("no exact p")?;
    ensure((p - 0.1).abs() <= P_TOLERANCE, || {
        format!("[1,2,3] vs [4,5,6] p = {p}")
    })?;
    Ok(format!(
        "{COVERAGE_TRIPLES} coverage triples, {a12_cases} A12 cases, {exact_cases} exact p cases, reference p = {p}"
    ))
}

// Compliance brute force

fn is_int_dtype(d: DtypeName) -> Option<(i128, i128)> {
    let bits = |b: u32| 1i128 << (b - 1);
    Some(match d {
        DtypeName::Int8 => (-bits(8), bits(8) - 1),
        DtypeName::Int16 => (-bits(16), bits(16) - 1),
        DtypeName::Int32 => (-bits(32), bits(32) - 1),
        DtypeName::Int64 => (-bits(64), bits(64) - 1),
        DtypeName::Uint8 => (0, 255),
        DtypeName::Uint16 => (0, 65_535),
        DtypeName::Uint32 => (0, 4_294_967_295),
        DtypeName::Uint64 => (0, i64::MAX as i128),
        _ => return None,
    })
}

fn float_limit(d: DtypeName) -> Option<f64> {
    match d {
        DtypeName::Float16 => Some(65_504.0),
        DtypeName::Float32 => Some(3.402_823_466_385_288_6e38),
        DtypeName::Float64 => Some(f64::MAX),
        _ => None,
    }
}

fn oracle_dtype(v: &Value, allowed: &BTreeSet<DtypeName>) -> bool {
    match v {
        Value::None => false,
        Value::Bool(_) => allowed.contains(&DtypeName::Bool),
        Value::Int(i) => allowed
            .iter()
            .any(|&d| is_int_dtype(d).is_some_and(|(lo, hi)| lo <= *i as i128 && *i as i128 <= hi)),
        Value::Float(x) => allowed
            .iter()
            .any(|&d| float_limit(d).is_some_and(|m| x.abs() <= m)),
        Value::Str(_) => allowed.contains(&DtypeName::String),
        Value::List(xs) | Value::Tuple(xs) => xs.iter().all(|x| oracle_dtype(x, allowed)),
        Value::Array(a) | Value::Tensor(a) => allowed.contains(&a.dtype),
    }
}

fn oracle_rank(v: &Value) -> usize {
    match v {
        Value::Array(a) | Value::Tensor(a) => a.shape.len(),
        Value::List(xs) | Value::Tuple(xs) => 1 + xs.iter().map(oracle_rank).fold(0, usize::max),
        _ => 0,
    }
}

fn oracle_in_range(v: &Value, lo: f64, hi: f64) -> bool {
    let inside = |x: f64| x >= lo && x <= hi;
    match v {
        Value::Int(i) => inside(*i as f64),
        Value::Float(x) => inside(*x),
        Value::List(xs) | Value::Tuple(xs) => xs.iter().all(|x| oracle_in_range(x, lo, hi)),
        Value::Array(a) | Value::Tensor(a) => a.data.iter().all(|s| match *s {
            Scalar::Int(i) => inside(i as f64),
            Scalar::Float(x) => inside(x),
            Scalar::Bool(_) => true,
        }),
        Value::None | Value::Bool(_) | Value::Str(_) => true,
    }
}

fn oracle_enum(v: &Value, allowed: &[Literal]) -> bool {
    allowed.iter().any(|lit| match (v, lit) {
        (Value::None, Literal::Null) => true,
        (Value::Bool(a), Literal::Bool(b)) => a == b,
        (Value::Str(a), Literal::Str(b)) => a == b,
        (Value::Int(a), Literal::Int(b)) => a == b,
        (Value::Int(a), Literal::Float(b)) => *a as f64 == *b,
        (Value::Float(a), Literal::Int(b)) => *a == *b as f64,
        (Value::Float(a), Literal::Float(b)) => a == b,
        _ => false,
    })
}

/// Per-field pass/fail in tensor, structure, dtype, ndim, range, enum order.
fn oracle(v: &Value, c: &ParameterConstraint) -> [bool; 6] {
    [
        c.tensor_t
            .is_none_or(|t| t == matches!(v, Value::Tensor(_))),
        c.structure.as_ref().is_none_or(|kinds| match v {
            Value::List(_) => kinds.contains(&ContainerKind::List),
            Value::Tuple(_) => kinds.contains(&ContainerKind::Tuple),
            _ => false,
        }),
        c.dtype.as_ref().is_none_or(|d| oracle_dtype(v, d)),
        c.ndim
            .as_ref()
            .is_none_or(|n| n.contains(&(oracle_rank(v) as u32))),
        c.range.is_none_or(|(lo, hi)| oracle_in_range(v, lo, hi)),
        c.enum_values.as_ref().is_none_or(|e| oracle_enum(v, e)),
    ]
}

fn array(shape: &[usize], dtype: DtypeName, data: Vec<Scalar>) -> NdArray {
    NdArray {
        shape: shape.to_vec(),
        dtype,
        data,
    }
}

fn small_values() -> Vec<Value> {
    use Value::*;
    vec![
        None,
        Bool(true),
        Bool(false),
        Int(-1),
        Int(0),
        Int(1),
        Int(2),
        Int(300),
        Float(0.5),
        Float(-1.0),
        Float(70_000.0),
        Str("a".into()),
        Str("mean".into()),
        List(vec![]),
        List(vec![Int(1), Int(0)]),
        List(vec![Float(0.5)]),
        List(vec![Bool(true), Int(2)]),
        Tuple(vec![Int(1), Str("a".into())]),
        Tuple(vec![Bool(false)]),
        List(vec![List(vec![Int(1)]), List(vec![Int(2)])]),
        Tuple(vec![List(vec![]), Float(-1.0)]),
        Array(array(
            &[2],
            DtypeName::Int64,
            vec![Scalar::Int(0), Scalar::Int(1)],
        )),
        Array(array(&[1, 1], DtypeName::Uint8, vec![Scalar::Int(1)])),
        Tensor(array(&[], DtypeName::Float32, vec![Scalar::Float(0.5)])),
        Tensor(array(
            &[2, 1],
            DtypeName::Int8,
            vec![Scalar::Int(-1), Scalar::Int(2)],
        )),
        Tensor(array(&[1], DtypeName::Bool, vec![Scalar::Bool(true)])),
        Tensor(array(&[0], DtypeName::Float16, vec![])),
        Tensor(array(
            &[3],
            DtypeName::Float64,
            vec![Scalar::Float(0.0), Scalar::Float(1.0), Scalar::Float(0.25)],
        )),
    ]
}

fn small_constraints() -> Vec<ParameterConstraint> {
    use DtypeName::*;
    let dtypes: Vec<Option<Vec<DtypeName>>> = vec![
        None,
        Some(vec![Int64]),
        Some(vec![Float32]),
        Some(vec![Bool]),
        Some(vec![Int8, Uint8]),
        Some(vec![String]),
        Some(vec![Float16, Int64]),
    ];
    let ndims: Vec<Option<Vec<u32>>> = vec![
        None,
        Some(vec![0]),
        Some(vec![1]),
        Some(vec![2]),
        Some(vec![0, 2]),
    ];
    let tensors = [None, Some(true), Some(false)];
    let structures: Vec<Option<Vec<ContainerKind>>> = vec![
        None,
        Some(vec![ContainerKind::List]),
        Some(vec![ContainerKind::Tuple]),
        Some(vec![ContainerKind::List, ContainerKind::Tuple]),
    ];
    let ranges = [None, Some((0.0, 1.0)), Some((-1.0, 0.5)), Some((2.0, 2.0))];
    let enums: Vec<Option<Vec<Literal>>> = vec![
        None,
        Some(vec![Literal::Int(1), Literal::Str("a".into())]),
        Some(vec![Literal::Float(0.5), Literal::Bool(true)]),
        Some(vec![Literal::Null, Literal::Float(2.0)]),
    ];
    let mut out = Vec::new();
    for d in &dtypes {
        for n in &ndims {
            for &t in &tensors {
                for s in &structures {
                    for &r in &ranges {
                        for e in &enums {
                            out.push(ParameterConstraint {
                                dtype: d.as_ref().map(|v| v.iter().copied().collect()),
                                ndim: n.as_ref().map(|v| v.iter().copied().collect()),
                                tensor_t: t,
                                structure: s.as_ref().map(|v| v.iter().copied().collect()),
                                range: r,
                                enum_values: e.clone(),
                                optional: false,
                            });
                        }
                    }
                }
            }
        }
    }
    out
}

fn criterion_brute_force() -> Outcome {
    let values = small_values();
    let constraints = small_constraints();
    let mut compliant = 0;
    for c in &constraints {
        for v in &values {
            let want = oracle(v, c);
            let got: BTreeSet<usize> = check_value(v, c).iter().map(|x| *x as usize).collect();
            let expected: BTreeSet<usize> = (0..6).filter(|&i| !want[i]).collect();
            ensure(got == expected, || {
                format!("{v:?} against {c:?}: fields {got:?}, oracle {expected:?}")
            })?;
            compliant += usize::from(expected.is_empty());
        }
    }
    Ok(format!(
        "{} values x {} constraints agree ({compliant} compliant pairs)",
        values.len(),
        constraints.len()
    ))
}

// Crash containment

fn criterion_crash() -> Outcome {
    let all = subjects();
    let crash = all
        .iter()
        .find(|s| s.sut.name == "crash_ops")
        .ok_or("crash_ops module missing")?;
    let mut quarantined = 0;
    for mode in [Mode::Constrained, Mode::Unconstrained] {
        for seed in 0..3 {
            let search = SearchConfig {
                budget: Budget::Iterations(20),
                seed,
                ..SearchConfig::default()
            };
            let run = run_once(
                &crash.sut,
                &crash.catalog,
                mode,
                &GenConfig::default(),
                &search,
            );
            let doc = results_json(&crash.sut, &run);
            let q = doc["quarantined"].as_array().ok_or("no quarantine list")?;
            let tests = doc["tests"].as_array().ok_or("no tests")?;
            if mode == Mode::Constrained {
                ensure(!q.is_empty(), || {
                    format!("{mode} seed {seed}: nothing quarantined")
                })?;
            }
            for t in tests.iter().filter(|t| t["status"] == "crashed") {
                let api = t["outcomes"]
                    .as_array()
                    .and_then(|o| o.last())
                    .map(|o| &o["api"]);
                ensure(q.iter().any(|e| Some(&e["api"]) == api), || {
                    format!("{mode} seed {seed}: crash in {api:?} not quarantined")
                })?;
            }
            for entry in q {
                let name = entry["test"].as_str().unwrap_or_default();
                let test = tests
                    .iter()
                    .find(|t| t["name"] == name)
                    .ok_or_else(|| format!("quarantined {name} missing from output"))?;
                ensure(test["status"] == "crashed", || {
                    format!("{name} is not marked crashed")
                })?;
                quarantined += 1;
            }
            ensure(run.record.covered > 0, || {
                "no coverage around the crash".into()
            })?;
        }
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let pair: Vec<Subject> = all
        .into_iter()
        .filter(|s| s.sut.name == "crash_ops" || s.sut.name == "loss")
        .collect();
    let cfg = CampaignConfig {
        seeds: 3,
        budget: Budget::Iterations(5),
        ..CampaignConfig::default()
    };
    let campaign = run_campaign(&pair, &cfg, dir.path(), &|_, _| {}).map_err(|e| e.to_string())?;
    ensure(campaign.records.len() == 12, || {
        format!("{} runs recorded", campaign.records.len())
    })?;
    ensure(campaign.summary.modules.len() == 2, || {
        "crash module dropped from summary".into()
    })?;
    Ok(format!(
        "{quarantined} crashing tests quarantined, campaign completed all 12 runs"
    ))
}

// Determinism

fn criterion_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for module in ["loss", "crash_ops", "quantize"] {
        for mode in ["constrained", "unconstrained"] {
            let outs: Vec<PathBuf> = (0..2)
                .map(|k| dir.path().join(format!("{module}_{mode}_{k}")))
                .collect();
            for out in &outs {
                let status = Command::new(env!("CARGO_BIN_EXE_ctgen"))
                    .args(["generate", "--sut"])
                    .arg(corpus("sut").join(format!("{module}.json")))
                    .arg("--catalog")
                    .arg(corpus("catalog").join(format!("{module}.json")))
                    .args([
                        "--mode",
                        mode,
                        "--seed",
                        "17",
                        "--iterations",
                        "10",
                        "--out",
                    ])
                    .arg(out)
                    .output()
                    .map_err(|e| e.to_string())?;
                ensure(status.status.success(), || {
                    String::from_utf8_lossy(&status.stderr).into_owned()
                })?;
            }
            for file in [
                format!("tests_{module}.json"),
                format!("test_{module}.txt"),
                format!("timeline_{module}.csv"),
            ] {
                let a = fs::read(outs[0].join(&file)).map_err(|e| e.to_string())?;
                let b = fs::read(outs[1].join(&file)).map_err(|e| e.to_string())?;
                ensure(a == b, || format!("{mode} {file} differs between runs"))?;
                compared += 1;
            }
        }
    }
    let sut = read_sut(&corpus("sut").join("loss.json")).map_err(|e| e.to_string())?;
    let catalog = read_catalog(&corpus("catalog").join("loss.json")).map_err(|e| e.to_string())?;
    let search = SearchConfig {
        budget: Budget::Iterations(10),
        seed: 3,
        ..SearchConfig::default()
    };
    let a = results_json(
        &sut,
        &run_once(
            &sut,
            &catalog,
            Mode::Constrained,
            &GenConfig::default(),
            &search,
        ),
    );
    let b = results_json(
        &sut,
        &run_once(
            &sut,
            &catalog,
            Mode::Constrained,
            &GenConfig::default(),
            &search,
        ),
    );
    ensure(a == b, || "in-process runs differ".into())?;
    Ok(format!(
        "{compared} output files byte-identical across repeated runs"
    ))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: u32, name: &str, outcome: Outcome| match outcome {
        Ok(detail) => println!("criterion {n} {name}: PASS ({detail})"),
        Err(why) => {
            failed += 1;
            println!("criterion {n} {name}: FAIL ({why})");
        }
    };
    report(3, "generation validity", criterion_generation());
    report(4, "operator invariants", criterion_operators());
    report(5, "statistics oracles", criterion_statistics());
    report(6, "compliance brute force", criterion_brute_force());
    report(7, "crash containment", criterion_crash());
    report(8, "determinism", criterion_determinism());

    let dir = tempfile::tempdir().expect("temp dir");
    match campaign(dir.path()) {
        Ok((summary, wall)) => {
            report(
                1,
                "constrained beats unconstrained",
                criterion_ab(&summary, wall),
            );
            report(2, "compliance totals", criterion_compliance(&summary));
        }
        Err(e) => {
            report(1, "constrained beats unconstrained", Err(e.clone()));
            report(2, "compliance totals", Err(e));
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
