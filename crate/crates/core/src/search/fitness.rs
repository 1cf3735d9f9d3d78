use crate::model::TestExecution;
use crate::sut::SutModule;

/// Maps a raw branch distance into [0, 1].
pub fn normalize(d: f64) -> f64 {
    if d.is_infinite() {
        1.0
    } else {
        d / (d + 1.0)
    }
}

/// Distance of an executed test case from covering `target`: 0 iff covered,
/// otherwise approach level plus normalized branch distance, taking the best
/// call. Targets of functions that were never called score their full depth
/// plus one.
pub fn fitness(exec: &TestExecution, sut: &SutModule, target: usize) -> f64 {
    let mut best = sut.target_depth(target) as f64 + 1.0;
    for o in &exec.outcomes {
        if o.covered.contains(&target) {
            return 0.0;
        }
        if let Some((level, d)) = o.approach(sut, target) {
            best = best.min(f64::from(level) + normalize(d));
        }
    }
    best
}
