//! Many-objective evolutionary search over branch targets.
//!
//! Every target is an objective. Survival uses preference sorting (the best
//! individual per uncovered target first, then non-dominated fronts) and an
//! archive keeps the shortest test case covering each target.

mod fitness;
mod operators;
mod sorting;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::generation::GenContext;
use crate::model::{evaluate, TestCase, TestExecution};
use crate::rng::seeded;
use crate::sut::{CoverageRecorder, SutModule};

pub use fitness::{fitness, normalize};
pub use operators::{change_statement, crossover, drop_dead_arguments, mutate};
pub use sorting::{crowding_distance, non_dominated_fronts, preference_sort};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Seconds(f64),
    /// Generations after the initial population. Time stamps become the
    /// generation index so runs are reproducible byte for byte.
    Iterations(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub population: usize,
    pub tournament: usize,
    pub crossover_prob: f64,
    pub max_length: usize,
    /// Only rank targets whose enclosing decisions are already covered.
    pub lazy_targets: bool,
    pub budget: Budget,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            population: 50,
            tournament: 5,
            crossover_prob: 0.75,
            max_length: 40,
            lazy_targets: false,
            budget: Budget::Seconds(10.0),
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.population < 2 {
            return Err("population must be at least 2".into());
        }
        if self.tournament == 0 {
            return Err("tournament size must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.crossover_prob) {
            return Err("crossover probability must lie in [0, 1]".into());
        }
        if let Budget::Seconds(s) = self.budget {
            if !(s.is_finite() && s > 0.0) {
                return Err(format!("budget of {s} seconds must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimelinePoint {
    pub elapsed_s: f64,
    pub iteration: u64,
    pub covered: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchivedTest {
    pub tc: TestCase,
    pub exec: TestExecution,
}

/// Shortest covering test case per target, crash quarantine and coverage
/// timeline of one run.
#[derive(Debug, Clone)]
pub struct Archive {
    pub covering: Vec<Option<Arc<ArchivedTest>>>,
    /// Shortest crashing test case per API.
    pub quarantined: BTreeMap<String, Arc<ArchivedTest>>,
    pub timeline: Vec<TimelinePoint>,
    /// Lowest fitness observed per target.
    pub best_fitness: Vec<f64>,
    pub iterations: u64,
    pub evaluations: u64,
}

impl Archive {
    pub fn new(targets: usize) -> Self {
        Archive {
            covering: vec![None; targets],
            quarantined: BTreeMap::new(),
            timeline: Vec::new(),
            best_fitness: vec![f64::INFINITY; targets],
            iterations: 0,
            evaluations: 0,
        }
    }

    pub fn total(&self) -> usize {
        self.covering.len()
    }

    pub fn covered_count(&self) -> usize {
        self.covering.iter().filter(|c| c.is_some()).count()
    }

    pub fn coverage(&self) -> f64 {
        if self.covering.is_empty() {
            1.0
        } else {
            self.covered_count() as f64 / self.total() as f64
        }
    }

    pub fn is_covered(&self, target: usize) -> bool {
        self.covering[target].is_some()
    }

    pub fn uncovered(&self) -> Vec<usize> {
        (0..self.total()).filter(|&t| !self.is_covered(t)).collect()
    }

    /// Offers an executed test case. Returns true when it newly covered a
    /// target.
    pub fn update(&mut self, sut: &SutModule, tc: &TestCase, exec: &TestExecution) -> bool {
        let mut entry: Option<Arc<ArchivedTest>> = None;
        let mut make = || {
            entry
                .get_or_insert_with(|| {
                    Arc::new(ArchivedTest {
                        tc: tc.clone(),
                        exec: exec.clone(),
                    })
                })
                .clone()
        };
        let mut newly = false;
        for t in exec.covered() {
            match &self.covering[t] {
                None => {
                    self.covering[t] = Some(make());
                    newly = true;
                }
                Some(old) if tc.len() < old.tc.len() => self.covering[t] = Some(make()),
                Some(_) => {}
            }
        }
        if exec.aborted {
            if let Some(last) = exec.outcomes.last() {
                let api = sut.functions[last.function].name.clone();
                let shorter = self
                    .quarantined
                    .get(&api)
                    .is_none_or(|old| tc.len() < old.tc.len());
                if shorter {
                    self.quarantined.insert(api, make());
                }
            }
        }
        newly
    }

    /// Distinct archived test cases in target order, followed by quarantined
    /// crashing ones not already present.
    pub fn suite(&self) -> Vec<Arc<ArchivedTest>> {
        let mut out: Vec<Arc<ArchivedTest>> = Vec::new();
        let all = self
            .covering
            .iter()
            .flatten()
            .chain(self.quarantined.values());
        for t in all {
            if !out.iter().any(|o| Arc::ptr_eq(o, t)) {
                out.push(t.clone());
            }
        }
        out
    }
}

struct Individual {
    tc: TestCase,
    fitness: Vec<f64>,
}

struct Run<'a, R: Rng> {
    sut: &'a SutModule,
    cfg: &'a SearchConfig,
    rng: R,
    recorder: CoverageRecorder,
    archive: Archive,
    start: Instant,
}

impl<R: Rng> Run<'_, R> {
    fn clock(&self, iteration: u64) -> f64 {
        match self.cfg.budget {
            Budget::Seconds(_) => self.start.elapsed().as_secs_f64(),
            Budget::Iterations(_) => iteration as f64,
        }
    }

    fn exhausted(&self, iteration: u64) -> bool {
        match self.cfg.budget {
            Budget::Seconds(s) => self.start.elapsed().as_secs_f64() >= s,
            Budget::Iterations(n) => iteration >= n,
        }
    }

    fn sample(&mut self, iteration: u64) {
        let point = TimelinePoint {
            elapsed_s: self.clock(iteration),
            iteration,
            covered: self.archive.covered_count(),
            total: self.archive.total(),
        };
        self.archive.timeline.push(point);
    }

    fn evaluate(&mut self, tc: TestCase, iteration: u64) -> Individual {
        let exec = evaluate(&tc, self.sut, &mut self.recorder);
        self.archive.evaluations += 1;
        let fitness: Vec<f64> = (0..self.archive.total())
            .map(|t| fitness(&exec, self.sut, t))
            .collect();
        for (best, &f) in self.archive.best_fitness.iter_mut().zip(&fitness) {
            *best = best.min(f);
        }
        if self.archive.update(self.sut, &tc, &exec) {
            self.sample(iteration);
        }
        Individual { tc, fitness }
    }

    fn tournament(&mut self, rank: &[(usize, f64)]) -> usize {
        let mut best = self.rng.gen_range(0..rank.len());
        for _ in 1..self.cfg.tournament {
            let c = self.rng.gen_range(0..rank.len());
            let (rb, db) = rank[best];
            let (rc, dc) = rank[c];
            if rc < rb || (rc == rb && dc > db) {
                best = c;
            }
        }
        best
    }

    fn active_targets(&self) -> Vec<usize> {
        let mut out = self.archive.uncovered();
        if self.cfg.lazy_targets {
            let sut = self.sut;
            out.retain(|&t| match sut.target_meta(t).branch {
                None => true,
                Some((b, _)) => sut.branches[b].requirements.iter().all(|&(r, pol)| {
                    let info = &sut.branches[r];
                    self.archive.is_covered(if pol {
                        info.true_target
                    } else {
                        info.false_target
                    })
                }),
            });
        }
        out
    }

    /// Front index and crowding distance of every individual.
    fn ranking(&self, pop: &[Individual]) -> (Vec<Vec<usize>>, Vec<(usize, f64)>) {
        let fit: Vec<Vec<f64>> = pop.iter().map(|i| i.fitness.clone()).collect();
        let lengths: Vec<usize> = pop.iter().map(|i| i.tc.len()).collect();
        let uncovered = self.active_targets();
        let fronts = preference_sort(pop.len(), &fit, &lengths, &uncovered);
        let mut rank = vec![(usize::MAX, 0.0); pop.len()];
        for (r, front) in fronts.iter().enumerate() {
            let crowd = crowding_distance(front, &fit, &uncovered);
            for (k, &i) in front.iter().enumerate() {
                rank[i] = (r, crowd[k]);
            }
        }
        (fronts, rank)
    }

    fn survivors(&self, pool: Vec<Individual>) -> Vec<Individual> {
        let n = self.cfg.population;
        let (fronts, rank) = self.ranking(&pool);
        let mut keep = Vec::with_capacity(n);
        for front in fronts {
            if keep.len() + front.len() <= n {
                keep.extend(front);
            } else {
                let mut rest = front;
                rest.sort_by(|&a, &b| rank[b].1.total_cmp(&rank[a].1).then(a.cmp(&b)));
                keep.extend(rest.into_iter().take(n - keep.len()));
            }
            if keep.len() == n {
                break;
            }
        }
        keep.sort_unstable();
        let mut slots: Vec<Option<Individual>> = pool.into_iter().map(Some).collect();
        keep.into_iter().map(|i| slots[i].take().unwrap()).collect()
    }
}

/// Runs the search until every target is covered or the budget is spent.
pub fn evolve(sut: &SutModule, ctx: &GenContext, cfg: &SearchConfig) -> Archive {
    let mut run = Run {
        sut,
        cfg,
        rng: seeded(cfg.seed),
        recorder: CoverageRecorder::new(sut),
        archive: Archive::new(sut.targets().len()),
        start: Instant::now(),
    };
    run.sample(0);
    let mut population = Vec::with_capacity(cfg.population);
    for _ in 0..cfg.population {
        let tc = ctx.random_test_case(&mut run.rng);
        population.push(run.evaluate(tc, 0));
    }

    let mut iteration = 0;
    while run.archive.covered_count() < run.archive.total() && !run.exhausted(iteration) {
        iteration += 1;
        let (_, rank) = run.ranking(&population);
        let mut offspring = Vec::with_capacity(cfg.population);
        while offspring.len() < cfg.population {
            let a = run.tournament(&rank);
            let b = run.tournament(&rank);
            let (pa, pb) = (&population[a].tc, &population[b].tc);
            let (mut x, mut y) = if run.rng.gen_bool(cfg.crossover_prob) {
                crossover(pa, pb, ctx, &mut run.rng)
            } else {
                (pa.clone(), pb.clone())
            };
            x = mutate(&x, ctx, cfg.max_length, &mut run.rng);
            y = mutate(&y, ctx, cfg.max_length, &mut run.rng);
            if x.len() > cfg.max_length {
                x = pa.clone();
            }
            if y.len() > cfg.max_length {
                y = pb.clone();
            }
            offspring.push(x);
            offspring.push(y);
        }
        let mut pool = population;
        for tc in offspring {
            let ind = run.evaluate(tc, iteration);
            pool.push(ind);
        }
        population = run.survivors(pool);
        run.archive.iterations = iteration;
        if let Budget::Seconds(_) = cfg.budget {
            if run.exhausted(iteration) {
                break;
            }
        }
    }
    run.sample(iteration);
    run.archive
}
