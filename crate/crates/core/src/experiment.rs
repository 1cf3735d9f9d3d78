//! Single generation runs and constrained-vs-unconstrained campaigns, with
//! their on-disk artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::analytics::{summarize, ComplianceCounts, RunRecord, Summary, TimelineSample};
use crate::catalog::{parse_catalog, CatalogError, ConstraintCatalog};
use crate::compliance::{check_test_case, ComplianceReport};
use crate::generation::{GenConfig, GenContext, Mode};
use crate::model::{render_suite, TestCase, TestExecution};
use crate::rng::derive_seed;
use crate::search::{evolve, Archive, Budget, SearchConfig};
use crate::sut::{parse_sut, SutError, SutModule};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Sut { path: PathBuf, source: SutError },
    #[error("{}: {source}", path.display())]
    Catalog { path: PathBuf, source: CatalogError },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("no module has both a SUT and a catalog entry")]
    NoModules,
    #[error("invalid configuration: {0}")]
    Config(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_sut(path: &Path) -> Result<SutModule, ExperimentError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    parse_sut(&bytes).map_err(|source| ExperimentError::Sut {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_catalog(path: &Path) -> Result<ConstraintCatalog, ExperimentError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    parse_catalog(&bytes).map_err(|source| ExperimentError::Catalog {
        path: path.to_path_buf(),
        source,
    })
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Writes through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), ExperimentError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Result of one `evolve` run with compliance labels for the emitted suite.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub archive: Archive,
    pub suite: Vec<(TestCase, TestExecution)>,
    pub reports: Vec<ComplianceReport>,
}

/// Runs the search once. The catalog always labels compliance, even when
/// `mode` ignores it for generation.
pub fn run_once(
    sut: &SutModule,
    catalog: &ConstraintCatalog,
    mode: Mode,
    gen: &GenConfig,
    search: &SearchConfig,
) -> RunOutcome {
    let ctx = GenContext::new(sut, Some(catalog), mode, gen.clone());
    let archive = evolve(sut, &ctx, search);
    let suite: Vec<(TestCase, TestExecution)> = archive
        .suite()
        .iter()
        .map(|t| (t.tc.clone(), t.exec.clone()))
        .collect();
    let reports: Vec<ComplianceReport> = suite
        .iter()
        .map(|(tc, _)| check_test_case(tc, catalog, &sut.name))
        .collect();
    let compliant = reports.iter().filter(|r| r.compliant).count();
    let record = RunRecord {
        module: sut.name.clone(),
        mode,
        seed: search.seed,
        coverage: archive.coverage(),
        covered: archive.covered_count(),
        total: archive.total(),
        iterations: archive.iterations,
        evaluations: archive.evaluations,
        compliance: ComplianceCounts {
            generated: suite.len(),
            compliant,
            non_compliant: suite.len() - compliant,
        },
        quarantined: archive.quarantined.keys().cloned().collect(),
        timeline: archive
            .timeline
            .iter()
            .copied()
            .map(TimelineSample::from)
            .collect(),
    };
    RunOutcome {
        record,
        archive,
        suite,
        reports,
    }
}

fn statement_json(tc: &TestCase) -> Vec<Json> {
    tc.statements
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut v = serde_json::to_value(&s.kind).expect("statement serializes");
            let obj = v.as_object_mut().expect("tagged statement");
            obj.insert("index".into(), json!(i));
            if let Some(g) = &s.group {
                obj.insert("group".into(), json!(g.id));
            }
            if let Some(p) = s.provenance {
                obj.insert("provenance".into(), json!(p));
            }
            v
        })
        .collect()
}

/// The machine-readable result document of a run.
pub fn results_json(sut: &SutModule, run: &RunOutcome) -> Json {
    let targets = sut.targets();
    let rec = &run.record;
    let tests: Vec<Json> = run
        .suite
        .iter()
        .zip(&run.reports)
        .enumerate()
        .map(|(i, ((tc, exec), report))| {
            let outcomes: Vec<Json> = exec
                .outcomes
                .iter()
                .zip(&exec.call_indices)
                .map(|(o, &stmt)| {
                    json!({
                        "statement": stmt,
                        "api": sut.functions.get(o.function).map(|f| f.name.as_str()),
                        "outcome": o.kind,
                        "returned": o.returned,
                    })
                })
                .collect();
            let violations: Vec<_> = report
                .calls
                .iter()
                .filter(|c| !c.violations.is_empty())
                .collect();
            json!({
                "name": format!("test_{}_{i}", sut.name),
                "status": exec.status(),
                "compliant": report.compliant,
                "violations": violations,
                "covered_targets": exec.covered().iter().map(|&t| targets[t].id()).collect::<Vec<_>>(),
                "statements": statement_json(tc),
                "outcomes": outcomes,
            })
        })
        .collect();
    let quarantined: Vec<Json> = run
        .archive
        .quarantined
        .iter()
        .map(|(api, t)| {
            let index = run
                .suite
                .iter()
                .position(|(tc, _)| *tc == t.tc)
                .expect("quarantined test is in the suite");
            json!({"api": api, "test": format!("test_{}_{index}", sut.name)})
        })
        .collect();
    let uncovered: Vec<Json> = run
        .archive
        .uncovered()
        .into_iter()
        .map(|t| json!({"id": targets[t].id(), "best_fitness": run.archive.best_fitness[t]}))
        .collect();
    json!({
        "module": rec.module,
        "mode": rec.mode,
        "seed": rec.seed,
        "coverage": rec.coverage,
        "covered": rec.covered,
        "total": rec.total,
        "iterations": rec.iterations,
        "evaluations": rec.evaluations,
        "compliance": rec.compliance,
        "covered_targets": (0..targets.len())
            .filter(|&t| run.archive.is_covered(t))
            .map(|t| targets[t].id())
            .collect::<Vec<_>>(),
        "uncovered_targets": uncovered,
        "quarantined": quarantined,
        "tests": tests,
    })
}

pub fn timeline_csv(timeline: &[TimelineSample]) -> String {
    let mut out = String::from("elapsed_s,iteration,covered,total\n");
    for p in timeline {
        writeln!(
            out,
            "{:.3},{},{},{}",
            p.elapsed_s, p.iteration, p.covered, p.total
        )
        .unwrap();
    }
    out
}

fn pretty<T: Serialize>(v: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("serializable");
    bytes.push(b'\n');
    bytes
}

/// Writes `tests_<module>.json`, `test_<module>.txt` and
/// `timeline_<module>.csv` into `out`.
pub fn write_run(
    out: &Path,
    sut: &SutModule,
    run: &RunOutcome,
) -> Result<Vec<PathBuf>, ExperimentError> {
    let name = &sut.name;
    let files = [
        (
            format!("tests_{name}.json"),
            pretty(&results_json(sut, run)),
        ),
        (
            format!("test_{name}.txt"),
            render_suite(name, &run.suite).into_bytes(),
        ),
        (
            format!("timeline_{name}.csv"),
            timeline_csv(&run.record.timeline).into_bytes(),
        ),
    ];
    let mut paths = Vec::new();
    for (file, bytes) in files {
        let path = out.join(file);
        write_atomic(&path, &bytes)?;
        paths.push(path);
    }
    Ok(paths)
}

/// A module with its SUT and the catalog covering it.
#[derive(Debug, Clone)]
pub struct Subject {
    pub sut: SutModule,
    pub catalog: ConstraintCatalog,
}

/// Pairs every SUT in `sut_dir` with the merged catalogs of `catalog_dir`.
/// SUTs without a catalog entry are skipped with a diagnostic.
pub fn discover(
    sut_dir: &Path,
    catalog_dir: &Path,
) -> Result<(Vec<Subject>, Vec<String>), ExperimentError> {
    let mut catalog = ConstraintCatalog::default();
    for path in json_files(catalog_dir)? {
        catalog.merge(read_catalog(&path)?);
    }
    let mut subjects = Vec::new();
    let mut notes: Vec<String> = catalog
        .diagnostics
        .rejections
        .iter()
        .map(|r| format!("rejected catalog entry {r}"))
        .collect();
    for path in json_files(sut_dir)? {
        let sut = read_sut(&path)?;
        if catalog.module(&sut.name).is_none() {
            notes.push(format!("module `{}` has no catalog, skipped", sut.name));
            continue;
        }
        subjects.push(Subject {
            sut,
            catalog: catalog.clone(),
        });
    }
    if subjects.is_empty() {
        return Err(ExperimentError::NoModules);
    }
    Ok((subjects, notes))
}

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub seeds: u64,
    pub master_seed: u64,
    pub gen: GenConfig,
    pub budget: Budget,
    pub jobs: usize,
    pub resume: bool,
    pub alpha: f64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            seeds: 10,
            master_seed: 0,
            gen: GenConfig::default(),
            budget: Budget::Seconds(10.0),
            jobs: 1,
            resume: false,
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub records: Vec<RunRecord>,
    pub summary: Summary,
    pub computed: usize,
    pub reused: usize,
}

/// Seed of repetition `index` of `module`. Both modes share it.
pub fn run_seed(master: u64, module: &str, index: u64) -> u64 {
    derive_seed(master.wrapping_add(index), module)
}

pub fn run_path(out: &Path, module: &str, mode: Mode, index: u64) -> PathBuf {
    out.join("runs")
        .join(module)
        .join(mode.as_str())
        .join(format!("seed_{index}.json"))
}

fn load_run(path: &Path) -> Option<RunRecord> {
    let bytes = fs::read(path).ok()?;
    serde_json::from_slice(&bytes).ok()
}

/// Runs every subject in both modes for `cfg.seeds` repetitions on a pool of
/// `cfg.jobs` workers, then writes `summary.json`, `summary.csv` and one
/// timeline CSV per mode.
pub fn run_campaign(
    subjects: &[Subject],
    cfg: &CampaignConfig,
    out: &Path,
    on_run: &(dyn Fn(&RunRecord, bool) + Sync),
) -> Result<Campaign, ExperimentError> {
    cfg.gen.validate().map_err(ExperimentError::Config)?;
    if cfg.seeds == 0 {
        return Err(ExperimentError::Config(
            "at least one seed is required".into(),
        ));
    }
    let tasks: Vec<(usize, Mode, u64)> = (0..subjects.len())
        .flat_map(|s| {
            Mode::BOTH
                .into_iter()
                .flat_map(move |m| (0..cfg.seeds).map(move |i| (s, m, i)))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .map_err(|e| ExperimentError::Config(e.to_string()))?;
    let results: Vec<Result<(RunRecord, bool), ExperimentError>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(s, mode, index)| {
                let subject = &subjects[s];
                let path = run_path(out, &subject.sut.name, mode, index);
                if cfg.resume {
                    if let Some(rec) = load_run(&path) {
                        on_run(&rec, true);
                        return Ok((rec, true));
                    }
                }
                let search = SearchConfig {
                    budget: cfg.budget,
                    seed: run_seed(cfg.master_seed, &subject.sut.name, index),
                    ..SearchConfig::default()
                };
                let run = run_once(&subject.sut, &subject.catalog, mode, &cfg.gen, &search);
                write_atomic(&path, &pretty(&run.record))?;
                on_run(&run.record, false);
                Ok((run.record, false))
            })
            .collect()
    });
    let mut records = Vec::with_capacity(results.len());
    let mut reused = 0;
    for r in results {
        let (rec, was_reused) = r?;
        reused += usize::from(was_reused);
        records.push(rec);
    }
    let summary = summarize(&records, cfg.alpha);
    write_summary(out, &summary)?;
    Ok(Campaign {
        computed: records.len() - reused,
        reused,
        records,
        summary,
    })
}

pub fn summary_csv(summary: &Summary) -> String {
    let mut out = String::from(
        "module,runs,mean_coverage_constrained,mean_coverage_unconstrained,\
         relative_coverage_constrained,relative_coverage_unconstrained,a12,p_value,significant,verdict,\
         compliant_constrained,non_compliant_constrained,compliant_unconstrained,non_compliant_unconstrained\n",
    );
    for m in &summary.modules {
        let p = m.p_value.map_or("n/a".to_string(), |p| format!("{p:.6}"));
        let sig = m.significant.map_or("n/a".to_string(), |s| s.to_string());
        writeln!(
            out,
            "{},{},{:.6},{:.6},{:.3},{:.3},{:.6},{p},{sig},{},{},{},{},{}",
            m.module,
            m.runs,
            m.mean_coverage_constrained,
            m.mean_coverage_unconstrained,
            m.mean_relative_coverage_constrained,
            m.mean_relative_coverage_unconstrained,
            m.a12,
            serde_json::to_value(m.verdict).unwrap().as_str().unwrap(),
            m.compliance_constrained.compliant,
            m.compliance_constrained.non_compliant,
            m.compliance_unconstrained.compliant,
            m.compliance_unconstrained.non_compliant,
        )
        .unwrap();
    }
    out
}

pub fn mode_timeline_csv(summary: &Summary, mode: Mode) -> String {
    let mut out = String::from("second,median_coverage\n");
    for p in &summary.timeline {
        let v = match mode {
            Mode::Constrained => p.constrained,
            Mode::Unconstrained => p.unconstrained,
        };
        writeln!(out, "{},{v:.6}", p.second).unwrap();
    }
    out
}

pub fn write_summary(out: &Path, summary: &Summary) -> Result<(), ExperimentError> {
    write_atomic(&out.join("summary.json"), &pretty(summary))?;
    write_atomic(&out.join("summary.csv"), summary_csv(summary).as_bytes())?;
    for mode in Mode::BOTH {
        write_atomic(
            &out.join(format!("timeline_{mode}.csv")),
            mode_timeline_csv(summary, mode).as_bytes(),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SUT: &str = r#"{"module": "m", "functions": {"f": {"params": ["x"], "body": [
        {"if": {"cmp": [{"ndim": "x"}, "==", 2]}, "then": [{"crash": true}]},
        {"return": 0}
    ]}}}"#;
    const CATALOG: &str = r#"{"module": "m", "apis": {"f": {"parameters": ["x"],
        "constraints": {"x": {"ndim": [2], "dtype": ["float32"]}}}}}"#;

    fn subject() -> (SutModule, ConstraintCatalog) {
        (
            parse_sut(SUT.as_bytes()).unwrap(),
            parse_catalog(CATALOG.as_bytes()).unwrap(),
        )
    }

    fn iterations(n: u64, seed: u64) -> SearchConfig {
        SearchConfig {
            budget: Budget::Iterations(n),
            seed,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn crash_is_quarantined_and_run_completes() {
        let (sut, catalog) = subject();
        let run = run_once(
            &sut,
            &catalog,
            Mode::Constrained,
            &GenConfig::default(),
            &iterations(3, 1),
        );
        assert_eq!(run.record.coverage, 1.0);
        assert_eq!(run.record.quarantined, vec!["f".to_string()]);
        let doc = results_json(&sut, &run);
        assert_eq!(doc["quarantined"][0]["api"], "f");
    }

    #[test]
    fn written_outputs_are_reproducible() {
        let (sut, catalog) = subject();
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for d in &dirs {
            let run = run_once(
                &sut,
                &catalog,
                Mode::Unconstrained,
                &GenConfig::default(),
                &iterations(4, 7),
            );
            write_run(d.path(), &sut, &run).unwrap();
        }
        for f in ["tests_m.json", "test_m.txt", "timeline_m.csv"] {
            let a = fs::read(dirs[0].path().join(f)).unwrap();
            let b = fs::read(dirs[1].path().join(f)).unwrap();
            assert_eq!(a, b, "{f}");
        }
    }

    #[test]
    fn campaign_resume_reuses_runs() {
        let (sut, catalog) = subject();
        let subjects = vec![Subject { sut, catalog }];
        let out = tempfile::tempdir().unwrap();
        let cfg = CampaignConfig {
            seeds: 2,
            budget: Budget::Iterations(2),
            ..CampaignConfig::default()
        };
        let first = run_campaign(&subjects, &cfg, out.path(), &|_, _| {}).unwrap();
        assert_eq!(first.computed, 4);
        let again = run_campaign(
            &subjects,
            &CampaignConfig {
                resume: true,
                ..cfg
            },
            out.path(),
            &|_, _| {},
        )
        .unwrap();
        assert_eq!(again.reused, 4);
        assert_eq!(first.records, again.records);
        assert!(out.path().join("summary.csv").exists());
        assert!(out.path().join("timeline_constrained.csv").exists());
    }
}
