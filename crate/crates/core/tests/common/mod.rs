//! Property checks shared by the property tests and the acceptance suite.
//! Each `*_case` function checks one concrete input; the `*_suite`
//! functions draw many inputs from a seeded generator.

#![allow(
    dead_code,
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord
)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use opportunistic_mdp::envs::grid::Grid;
use opportunistic_mdp::envs::robot::{RobotConfig, RobotEnv};
use opportunistic_mdp::envs::synthetic::{random_instance, FiniteInstance};
use opportunistic_mdp::simplex::{kl_divergence, l1_distance};
use opportunistic_mdp::{
    layer2_select, BeliefVector, LearnerConfig, Problem, Simulation, VirtualQueues,
};

pub type Check = Result<(), String>;

/// `sum_i p_i log(p_i / q_i)` with `0 log 0 = 0`, written out directly.
pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, q)| p * (p / q).ln())
        .sum()
}

/// `kl(p, q)` with `q` given by its logs, so entries of `q` that underflow
/// in linear form still count with their true size.
pub fn kl_log(p: &[f64], log_q: &[f64]) -> f64 {
    p.iter()
        .zip(log_q)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, lq)| p * (p.ln() - lq))
        .sum()
}

pub fn random_simplex_point(rng: &mut ChaCha8Rng, n: usize, allow_zeros: bool) -> Vec<f64> {
    let mut x: Vec<f64> = (0..n)
        .map(|_| {
            if allow_zeros && rng.random_bool(0.2) {
                0.0
            } else {
                -(1.0 - rng.random::<f64>()).ln()
            }
        })
        .collect();
    if x.iter().all(|&v| v == 0.0) {
        x[0] = 1.0;
    }
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= s);
    x
}

/// For the exponentiated minimizer `pi_t` of `f(pi) + alpha D(pi; prev)`,
/// every feasible `pi` satisfies
/// `f(pi_t) + alpha D(pi_t; prev) <= f(pi) + alpha D(pi; prev) - alpha D(pi; pi_t)`.
pub fn pushback_case(prev: &[f64], m: &[f64], alpha: f64, others: &[Vec<f64>]) -> Check {
    let belief = BeliefVector::from_probs(prev).map_err(|e| e.to_string())?;
    let next = belief
        .exponentiated_update(m, alpha)
        .map_err(|e| e.to_string())?;
    let pt = next.probs();
    let f = |p: &[f64]| p.iter().zip(m).map(|(a, b)| a * b).sum::<f64>();
    let lhs = f(pt) + alpha * kl(pt, prev);
    let scale = 1.0 + m.iter().map(|x| x.abs()).fold(0.0, f64::max) + alpha;
    for pi in others {
        let rhs = f(pi) + alpha * kl(pi, prev) - alpha * kl_log(pi, next.log_probs());
        if lhs > rhs + 1e-9 * scale {
            return Err(format!("pushback violated: {lhs} > {rhs} for {pi:?}"));
        }
    }
    Ok(())
}

pub fn pushback_suite(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let n = rng.random_range(2..=8);
        let prev = random_simplex_point(&mut rng, n, false);
        let alpha = 10f64.powf(rng.random_range(-1.0..3.0));
        let m: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-5.0..5.0) * alpha)
            .collect();
        let others: Vec<Vec<f64>> = (0..10)
            .map(|_| random_simplex_point(&mut rng, n, true))
            .collect();
        pushback_case(&prev, &m, alpha, &others)?;
    }
    Ok(())
}

/// Pinsker's inequality and the `log n` bound against the uniform law.
pub fn kl_bounds_case(p: &[f64], q: &[f64]) -> Check {
    let d = kl_divergence(p, q).map_err(|e| e.to_string())?;
    let l1 = l1_distance(p, q);
    if d + 1e-12 < 0.5 * l1 * l1 {
        return Err(format!("Pinsker fails: D = {d}, |p-q|_1 = {l1}"));
    }
    let n = p.len();
    let uniform = vec![1.0 / n as f64; n];
    let du = kl_divergence(p, &uniform).map_err(|e| e.to_string())?;
    if du > (n as f64).ln() + 1e-12 {
        return Err(format!("D(p; uniform) = {du} exceeds log {n}"));
    }
    Ok(())
}

pub fn kl_bounds_suite(pairs: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..pairs {
        let n = rng.random_range(1..=12);
        let p = random_simplex_point(&mut rng, n, true);
        let q = random_simplex_point(&mut rng, n, false);
        kl_bounds_case(&p, &q)?;
    }
    Ok(())
}

/// Adds `k` random constraint costs in `[-1, 1]` to an instance.
pub fn with_constraints(
    mut inst: FiniteInstance,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> FiniteInstance {
    inst.k = k;
    for per_w in &mut inst.menus {
        for menu in per_w {
            for a in menu {
                a.costs.truncate(1);
                a.costs.extend((0..k).map(|_| rng.random_range(-1.0..1.0)));
            }
        }
    }
    inst
}

/// Compares `layer2_select` with a direct scan of the dense tables.
pub fn layer2_case(inst: &FiniteInstance, q: &[f64], z: &[f64], v: f64) -> Check {
    let p = inst.build().map_err(|e| e.to_string())?;
    let queues = VirtualQueues {
        q: q.to_vec(),
        z: z.to_vec(),
    };
    for i in 0..inst.n {
        for w in 0..inst.side_probs.len() {
            let menu = &inst.menus[i][w];
            let mut best = 0;
            let mut best_score = f64::INFINITY;
            for (a, act) in menu.iter().enumerate() {
                let mut score = v * act.costs[0];
                for l in 0..inst.k {
                    score += z[l] * act.costs[l + 1];
                }
                for j in 0..inst.n {
                    score -= q[j] * act.next[j];
                }
                if score < best_score - 1e-12 {
                    best = a;
                    best_score = score;
                }
            }
            let got = layer2_select(&p, i, &w, &queues, v).map_err(|e| e.to_string())?;
            if got != best {
                let a = &menu[got];
                let mut score = v * a.costs[0];
                for l in 0..inst.k {
                    score += z[l] * a.costs[l + 1];
                }
                for j in 0..inst.n {
                    score -= q[j] * a.next[j];
                }
                if (score - best_score).abs() > 1e-9 {
                    return Err(format!("state {i}, side {w}: chose {got}, best is {best}"));
                }
            }
        }
    }
    Ok(())
}

pub fn layer2_suite(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in 0..instances {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=3);
        let acts = rng.random_range(1..=5);
        let k = rng.random_range(0..=2);
        let inst = with_constraints(random_instance(seed ^ s as u64, n, m, acts), k, &mut rng);
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let z: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..50.0)).collect();
        let v = rng.random_range(0.1..20.0);
        layer2_case(&inst, &q, &z, v)?;
    }
    Ok(())
}

/// Layer-1 objective `pi . m + alpha D(pi; prev)`.
pub fn layer1_objective(pi: &[f64], prev: &[f64], m: &[f64], alpha: f64) -> f64 {
    pi.iter().zip(m).map(|(a, b)| a * b).sum::<f64>() + alpha * kl(pi, prev)
}

/// Compares the closed-form layer-1 update on four states with the best
/// point of a simplex grid with spacing `1 / steps`.
pub fn layer1_grid_case(prev: &[f64], m: &[f64], alpha: f64, steps: usize) -> Check {
    assert_eq!(prev.len(), 4);
    let pi = BeliefVector::from_probs(prev)
        .and_then(|b| b.exponentiated_update(m, alpha))
        .map_err(|e| e.to_string())?;
    let h = 1.0 / steps as f64;
    let mut best = (f64::INFINITY, vec![]);
    for a in 0..=steps {
        for b in 0..=steps - a {
            for c in 0..=steps - a - b {
                let d = steps - a - b - c;
                let x = vec![a as f64 * h, b as f64 * h, c as f64 * h, d as f64 * h];
                let f = layer1_objective(&x, prev, m, alpha);
                if f < best.0 {
                    best = (f, x);
                }
            }
        }
    }
    let fp = layer1_objective(pi.probs(), prev, m, alpha);
    if fp > best.0 + 1e-9 * (1.0 + best.0.abs()) {
        return Err(format!("closed form {fp} worse than grid {}", best.0));
    }
    let gap = pi
        .probs()
        .iter()
        .zip(&best.1)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    if gap > 2.0 * h {
        return Err(format!(
            "closed form {:?} far from grid argmin {:?}",
            pi.probs(),
            best.1
        ));
    }
    Ok(())
}

pub fn layer1_grid_suite(instances: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..instances {
        let prev = random_simplex_point(&mut rng, 4, false);
        let alpha = rng.random_range(0.5..5.0);
        let m: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        layer1_grid_case(&prev, &m, alpha, 80)?;
    }
    Ok(())
}

/// Per-slot invariants of a run: `pi(t)` on the simplex, `Z >= 0` and
/// queue increments bounded by 1 (for `Q`) and `c_max` (for `Z`).
pub fn run_invariants<P: Problem>(
    problem: &P,
    config: LearnerConfig,
    seed: u64,
    slots: u64,
) -> Check {
    let mut sim = Simulation::new(problem, config, seed).map_err(|e| e.to_string())?;
    let c_max = problem.cost_bound();
    let mut prev = sim.state().queues.clone();
    for t in 0..slots {
        let rec = sim.step().map_err(|e| e.to_string())?;
        let total: f64 = rec.belief.iter().sum();
        if (total - 1.0).abs() > 1e-12 || rec.belief.iter().any(|p| !(*p >= 0.0)) {
            return Err(format!("slot {t}: belief off the simplex"));
        }
        let now = &sim.state().queues;
        if now.z.iter().any(|z| *z < 0.0) {
            return Err(format!("slot {t}: negative Z"));
        }
        for (a, b) in now.q.iter().zip(&prev.q) {
            if (a - b).abs() > 1.0 + 1e-12 {
                return Err(format!("slot {t}: Q jumped by {}", a - b));
            }
        }
        for (a, b) in now.z.iter().zip(&prev.z) {
            if (a - b).abs() > c_max + 1e-12 {
                return Err(format!("slot {t}: Z jumped by {}", a - b));
            }
        }
        prev = now.clone();
    }
    Ok(())
}

pub fn run_invariant_suite() -> Check {
    let power = RobotEnv::new(&RobotConfig {
        power_constraint: true,
        ..RobotConfig::default()
    })
    .map_err(|e| e.to_string())?;
    run_invariants(&power, LearnerConfig::new(5.0, 1000.0, 20_000), 3, 20_000)?;
    run_invariants(&power, LearnerConfig::new(5.0, 5.0, 5_000), 4, 5_000)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let inst = with_constraints(random_instance(8, 5, 3, 3), 2, &mut rng);
    let p = inst.build().map_err(|e| e.to_string())?;
    run_invariants(&p, LearnerConfig::new(2.0, 50.0, 20_000), 5, 20_000)
}

/// Empirical next-state frequencies of the actual system, grouped by
/// `(state, side value, action)`, agree with the transition tables within
/// five binomial standard deviations.
pub fn conditional_equivalence(seed: u64, slots: u64) -> Check {
    let inst = random_instance(seed, 4, 2, 3);
    let p = inst.build().map_err(|e| e.to_string())?;
    let mut sim = Simulation::new(&p, LearnerConfig::new(2.0, 20.0, slots), seed)
        .map_err(|e| e.to_string())?;
    let mut counts: BTreeMap<(usize, usize, usize), Vec<u64>> = BTreeMap::new();
    for _ in 0..slots {
        let rec = sim.step().map_err(|e| e.to_string())?;
        let key = (
            rec.actual_state,
            rec.side.unwrap(),
            rec.actual_action.unwrap(),
        );
        counts.entry(key).or_insert_with(|| vec![0; 4])[rec.next_state] += 1;
    }
    let mut tested = 0;
    for ((i, w, a), c) in &counts {
        let total: u64 = c.iter().sum();
        if total < 200 {
            continue;
        }
        tested += 1;
        let probs = &inst.menus[*i][*w][*a].next;
        for j in 0..4 {
            let p = probs[j];
            let freq = c[j] as f64 / total as f64;
            let sd = (p * (1.0 - p) / total as f64).sqrt();
            if (freq - p).abs() > 5.0 * sd + 1e-12 {
                return Err(format!(
                    "({i},{w},{a}) -> {j}: frequency {freq} vs {p} over {total}"
                ));
            }
        }
    }
    if tested == 0 {
        return Err("no (state, side, action) triple was visited often enough".into());
    }
    Ok(())
}

/// Shortest-path facts about the default walls.
pub fn bfs_certification() -> Check {
    let g = Grid::default();
    let facts = [(1, 16, 3), (1, 9, 10), (16, 9, 7)];
    for (a, b, d) in facts {
        if g.distance(a, b) != Some(d) {
            return Err(format!("d({a},{b}) = {:?}, expected {d}", g.distance(a, b)));
        }
    }
    if g.neighbors(12) != vec![7, 11, 17] {
        return Err(format!("neighbors(12) = {:?}", g.neighbors(12)));
    }
    if g.count_shortest_paths(1, 9) < 2 {
        return Err("expected several shortest paths from 1 to 9".into());
    }
    if !g.is_connected() {
        return Err("grid is not connected".into());
    }
    Ok(())
}
