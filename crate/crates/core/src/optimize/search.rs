use std::cmp::Ordering;
use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::OptimizeError;
use crate::compliance::score_outputs;
use crate::engine::Simulator;
use crate::model::Network;
use crate::scenario::{regulators, RegulatorRef, Scenario};

/// Largest cross-product that is ever enumerated exhaustively.
pub const EXHAUSTIVE_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Exhaustive,
    CoordinateDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceEntry {
    /// 1-based evaluation number at which this became the best so far.
    pub evaluation: usize,
    pub indices: Vec<usize>,
    pub outputs_within: usize,
    pub total_margin_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeResult {
    pub method: SearchMethod,
    pub regulators: Vec<RegulatorRef>,
    /// Effective position of each regulator in the returned scenario.
    pub indices: Vec<usize>,
    pub scenario: Scenario,
    pub outputs_within: usize,
    pub outputs_outside: usize,
    pub total_margin_db: f64,
    pub start_outputs_within: usize,
    /// Candidate visits charged against the budget.
    pub evaluations: usize,
    /// Successive improvements of the best candidate.
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Score {
    within: usize,
    outside: usize,
    margin: f64,
}

/// Higher count first, then higher margin. Equal scores compare `Equal`.
fn rank(a: &Score, b: &Score) -> Ordering {
    a.within.cmp(&b.within).then(a.margin.total_cmp(&b.margin))
}

/// `a` beats `b` on score, or ties and has the smaller index vector.
fn beats(a: (&Score, &[usize]), b: (&Score, &[usize])) -> bool {
    match rank(a.0, b.0) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => a.1 < b.1,
    }
}

struct Evaluator<'a, 'n> {
    sim: &'a Simulator<'n>,
    start: &'a Scenario,
    regs: &'a [RegulatorRef],
}

impl Evaluator<'_, '_> {
    fn scenario(&self, indices: &[usize]) -> Scenario {
        let mut sc = self.start.clone();
        for (r, i) in self.regs.iter().zip(indices) {
            sc.set_regulator(r, *i);
        }
        sc
    }

    fn score(&self, indices: &[usize]) -> Result<Score, OptimizeError> {
        let result = self.sim.run_outputs(&self.scenario(indices))?;
        let s = score_outputs(&result, &self.sim.network().constraints);
        Ok(Score { within: s.outputs_within, outside: s.outputs_outside, margin: s.total_margin_db })
    }
}

struct Tracker {
    evaluations: usize,
    best: Option<(Score, Vec<usize>)>,
    trace: Vec<TraceEntry>,
}

impl Tracker {
    fn visit(&mut self, score: Score, indices: &[usize]) {
        self.evaluations += 1;
        let better = match &self.best {
            None => true,
            Some((s, v)) => beats((&score, indices), (s, v)),
        };
        if better {
            self.best = Some((score, indices.to_vec()));
            self.trace.push(TraceEntry {
                evaluation: self.evaluations,
                indices: indices.to_vec(),
                outputs_within: score.within,
                total_margin_db: score.margin,
            });
        }
    }
}

/// Searches regulator positions for the most compliant outputs.
///
/// Every regulator in the network is a coordinate, in node-id then group
/// order. Spaces no larger than `budget` (and [`EXHAUSTIVE_LIMIT`]) are
/// enumerated; larger ones use coordinate descent with seeded random
/// restarts until `budget` candidate visits are spent. Unless some candidate
/// strictly beats the count of `start`, `start` is returned unchanged.
pub fn optimize_gains(
    net: &Network,
    start: &Scenario,
    budget: usize,
    seed: u64,
) -> Result<OptimizeResult, OptimizeError> {
    if budget == 0 {
        return Err(OptimizeError::ZeroBudget);
    }
    let regs = regulators(net);
    if regs.is_empty() {
        return Err(OptimizeError::NoRegulators);
    }
    start.validate(net).map_err(crate::engine::EngineError::from)?;
    let sim = Simulator::new(net)?;
    let dims: Vec<usize> = regs
        .iter()
        .map(|r| {
            let spec = &net.catalog.components[&net.nodes[&r.node].component().unwrap().component];
            spec.regulators[&r.group].len()
        })
        .collect();
    let start_idx: Vec<usize> = regs.iter().map(|r| start.regulator_index(net, r).unwrap_or(0)).collect();
    let eval = Evaluator { sim: &sim, start, regs: &regs };
    let start_score = eval.score(&start_idx)?;

    let space = dims.iter().try_fold(1u64, |acc, d| acc.checked_mul(*d as u64));
    let exhaustive = space.is_some_and(|s| s <= budget as u64 && s <= EXHAUSTIVE_LIMIT);
    let mut tracker = Tracker { evaluations: 0, best: None, trace: Vec::new() };

    if exhaustive {
        let total = space.unwrap() as usize;
        let scored: Vec<(Vec<usize>, Score)> = (0..total)
            .into_par_iter()
            .map(|k| {
                let v = unrank(k, &dims);
                eval.score(&v).map(|s| (v, s))
            })
            .collect::<Result<_, _>>()?;
        for (v, s) in &scored {
            tracker.visit(*s, v);
        }
    } else {
        coordinate_descent(&eval, &dims, &start_idx, start_score, budget, seed, space, &mut tracker)?;
    }

    let method = if exhaustive { SearchMethod::Exhaustive } else { SearchMethod::CoordinateDescent };
    let (best, best_idx) = tracker.best.expect("at least one evaluation");
    let (score, scenario, indices) = if best.within > start_score.within {
        (best, eval.scenario(&best_idx), best_idx)
    } else {
        (start_score, start.clone(), start_idx)
    };
    Ok(OptimizeResult {
        method,
        regulators: regs,
        indices,
        scenario,
        outputs_within: score.within,
        outputs_outside: score.outside,
        total_margin_db: score.margin,
        start_outputs_within: start_score.within,
        evaluations: tracker.evaluations,
        trace: tracker.trace,
    })
}

/// Index vector number `k` in lexicographic order (last coordinate fastest).
fn unrank(mut k: usize, dims: &[usize]) -> Vec<usize> {
    let mut v = vec![0; dims.len()];
    for (slot, d) in v.iter_mut().zip(dims).rev() {
        *slot = k % d;
        k /= d;
    }
    v
}

#[allow(clippy::too_many_arguments)]
fn coordinate_descent(
    eval: &Evaluator<'_, '_>,
    dims: &[usize],
    start_idx: &[usize],
    start_score: Score,
    budget: usize,
    seed: u64,
    space: Option<u64>,
    tracker: &mut Tracker,
) -> Result<(), OptimizeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cache: HashMap<Vec<usize>, Score> = HashMap::new();
    cache.insert(start_idx.to_vec(), start_score);
    tracker.visit(start_score, start_idx);

    let mut current = start_idx.to_vec();
    let mut current_score = start_score;
    'restarts: loop {
        loop {
            let mut moved = false;
            for r in 0..dims.len() {
                let remaining = budget.saturating_sub(tracker.evaluations);
                if remaining == 0 {
                    break 'restarts;
                }
                let candidates: Vec<Vec<usize>> = (0..dims[r])
                    .filter(|p| *p != current[r])
                    .take(remaining)
                    .map(|p| {
                        let mut v = current.clone();
                        v[r] = p;
                        v
                    })
                    .collect();
                let fresh: Vec<(Vec<usize>, Score)> = candidates
                    .par_iter()
                    .filter(|v| !cache.contains_key(*v))
                    .map(|v| eval.score(v).map(|s| (v.clone(), s)))
                    .collect::<Result<_, _>>()?;
                cache.extend(fresh);
                for v in &candidates {
                    let s = cache[v];
                    tracker.visit(s, v);
                    if rank(&s, &current_score) == Ordering::Greater {
                        current = v.clone();
                        current_score = s;
                        moved = true;
                    }
                }
            }
            if !moved {
                break;
            }
        }
        if tracker.evaluations >= budget || space.is_some_and(|s| cache.len() as u64 >= s) {
            break;
        }
        current = dims.iter().map(|d| rng.random_range(0..*d)).collect();
        current_score = match cache.get(&current) {
            Some(s) => *s,
            None => {
                let s = eval.score(&current)?;
                cache.insert(current.clone(), s);
                s
            }
        };
        tracker.visit(current_score, &current);
    }
    Ok(())
}
