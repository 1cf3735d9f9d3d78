//! Preference sorting over the uncovered targets.

use std::cmp::Ordering;

/// `a` dominates `b`: no worse on every objective, better on one.
fn dominates(a: &[f64], b: &[f64], objectives: &[usize]) -> bool {
    let mut better = false;
    for &t in objectives {
        if a[t] > b[t] {
            return false;
        }
        if a[t] < b[t] {
            better = true;
        }
    }
    better
}

/// Non-dominated fronts of `members` (indices into `fitness`).
pub fn non_dominated_fronts(
    members: &[usize],
    fitness: &[Vec<f64>],
    objectives: &[usize],
) -> Vec<Vec<usize>> {
    let n = members.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let (a, b) = (&fitness[members[i]], &fitness[members[j]]);
            if dominates(a, b, objectives) {
                dominates_list[i].push(j);
                dominated_by[j] += 1;
            } else if dominates(b, a, objectives) {
                dominates_list[j].push(i);
                dominated_by[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current.iter().map(|&i| members[i]).collect());
        current = next;
    }
    fronts
}

/// Crowding distance of each member of a front, in front order.
pub fn crowding_distance(front: &[usize], fitness: &[Vec<f64>], objectives: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut distance = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    for &t in objectives {
        order.sort_by(|&a, &b| {
            fitness[front[a]][t]
                .partial_cmp(&fitness[front[b]][t])
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let lo = fitness[front[order[0]]][t];
        let hi = fitness[front[order[n - 1]]][t];
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        if hi > lo {
            for k in 1..n - 1 {
                let gap = fitness[front[order[k + 1]]][t] - fitness[front[order[k - 1]]][t];
                distance[order[k]] += gap / (hi - lo);
            }
        }
    }
    distance
}

/// Ranks `pool` for survival. Front 0 holds, for every uncovered target, the
/// individual closest to it (shorter test cases win ties). The rest is
/// sorted into non-dominated fronts.
pub fn preference_sort(
    pool: usize,
    fitness: &[Vec<f64>],
    lengths: &[usize],
    uncovered: &[usize],
) -> Vec<Vec<usize>> {
    let mut in_first = vec![false; pool];
    let mut first = Vec::new();
    for &t in uncovered {
        let best = (0..pool).min_by(|&a, &b| {
            fitness[a][t]
                .partial_cmp(&fitness[b][t])
                .unwrap_or(Ordering::Equal)
                .then(lengths[a].cmp(&lengths[b]))
                .then(a.cmp(&b))
        });
        if let Some(b) = best {
            if !in_first[b] {
                in_first[b] = true;
                first.push(b);
            }
        }
    }
    first.sort_unstable();
    let rest: Vec<usize> = (0..pool).filter(|&i| !in_first[i]).collect();
    let mut fronts = Vec::new();
    if !first.is_empty() {
        fronts.push(first);
    }
    fronts.extend(non_dominated_fronts(&rest, fitness, uncovered));
    fronts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fronts_of_a_small_pool() {
        let fitness = vec![
            vec![0.1, 0.9],
            vec![0.9, 0.1],
            vec![0.5, 0.5],
            vec![0.6, 0.6],
            vec![1.0, 1.0],
        ];
        let fronts = non_dominated_fronts(&[0, 1, 2, 3, 4], &fitness, &[0, 1]);
        assert_eq!(fronts, vec![vec![0, 1, 2], vec![3], vec![4]]);
    }

    #[test]
    fn preference_front_takes_best_per_target() {
        let fitness = vec![
            vec![0.3, 0.9],
            vec![0.3, 0.8],
            vec![0.5, 0.5],
            vec![0.2, 0.95],
        ];
        let lengths = vec![3, 2, 4, 1];
        let fronts = preference_sort(4, &fitness, &lengths, &[0, 1]);
        assert_eq!(fronts[0], vec![2, 3]);
        assert_eq!(fronts[1], vec![1]);
        assert_eq!(fronts[2], vec![0]);
    }

    #[test]
    fn boundary_points_are_most_crowded_away() {
        let fitness = vec![
            vec![0.0, 1.0],
            vec![0.4, 0.6],
            vec![0.5, 0.5],
            vec![1.0, 0.0],
        ];
        let d = crowding_distance(&[0, 1, 2, 3], &fitness, &[0, 1]);
        assert!(d[0].is_infinite() && d[3].is_infinite());
        assert!((d[1] - 1.0).abs() < 1e-12);
        assert!((d[2] - 1.2).abs() < 1e-12);
    }
}
