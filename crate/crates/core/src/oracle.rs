//! Exact optimum of small unconstrained finite instances by enumeration.
//!
//! A deterministic stationary policy picks a menu index for every
//! `(state, side value)` pair. Averaging over the side law gives a Markov
//! chain `P = sum_w q_w p(w, a)` and mean costs `c = sum_w q_w c_0(w, a)`.
//! Every closed communicating class of that chain carries one stationary
//! distribution; the oracle value is the least `sum_i pi_i c_i` over all
//! policies and all closed classes.

use serde::{Deserialize, Serialize};

use crate::envs::synthetic::FiniteProblem;
use crate::error::{Error, Result};
use crate::problem::Problem;

/// Largest number of policies the oracle will enumerate.
pub const POLICY_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Least achievable long-run average objective cost.
    pub c0_star: f64,
    /// `policy[i][w]` is the menu index chosen in state `i` under side
    /// value `w`.
    pub policy: Vec<Vec<usize>>,
    /// States of the optimal closed class, ascending.
    pub class: Vec<usize>,
    /// Stationary distribution over all states, zero outside `class`.
    pub stationary: Vec<f64>,
    pub policies_evaluated: u64,
}

/// Per-state choice: one menu index per side value, with the resulting
/// averaged row and mean cost.
struct Choice {
    picks: Vec<usize>,
    row: Vec<f64>,
    cost: f64,
}

fn state_choices(problem: &FiniteProblem, i: usize) -> Vec<Choice> {
    let q = problem.side_probs();
    let m = q.len();
    let n = problem.num_states();
    let sizes: Vec<usize> = (0..m).map(|w| problem.menu(i, w).len()).collect();
    let mut picks = vec![0usize; m];
    let mut out = Vec::new();
    loop {
        let mut row = vec![0.0; n];
        let mut cost = 0.0;
        for (w, &a) in picks.iter().enumerate() {
            cost += q[w] * problem.menu(i, w)[a].costs[0];
            for &(j, p) in problem.row(i, w, a) {
                row[j] += q[w] * p;
            }
        }
        out.push(Choice {
            picks: picks.clone(),
            row,
            cost,
        });
        // Advance the last side value fastest so choices come out in
        // lexicographic order.
        let mut w = m;
        loop {
            if w == 0 {
                return out;
            }
            w -= 1;
            picks[w] += 1;
            if picks[w] < sizes[w] {
                break;
            }
            picks[w] = 0;
        }
    }
}

/// Number of deterministic stationary policies of `problem`.
pub fn policy_count(problem: &FiniteProblem) -> u128 {
    let m = problem.side_probs().len();
    let mut total: u128 = 1;
    for i in 0..problem.num_states() {
        for w in 0..m {
            total = total.saturating_mul(problem.menu(i, w).len() as u128);
        }
    }
    total
}

/// Closed communicating classes of a dense stochastic matrix, each sorted
/// ascending, ordered by smallest member.
pub fn closed_classes(p: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = p.len();
    let adj: Vec<Vec<usize>> = p
        .iter()
        .map(|row| (0..n).filter(|&j| row[j] > 0.0).collect())
        .collect();
    let comps = tarjan(&adj);
    let mut comp_of = vec![0; n];
    for (c, members) in comps.iter().enumerate() {
        for &i in members {
            comp_of[i] = c;
        }
    }
    let mut closed: Vec<Vec<usize>> = comps
        .into_iter()
        .enumerate()
        .filter(|(c, members)| {
            members
                .iter()
                .all(|&i| adj[i].iter().all(|&j| comp_of[j] == *c))
        })
        .map(|(_, mut members)| {
            members.sort_unstable();
            members
        })
        .collect();
    closed.sort_by_key(|c| c[0]);
    closed
}

fn tarjan(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        // Iterative DFS: (node, next edge position).
        let mut work = vec![(root, 0usize)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&(v, e)) = work.last() {
            if e < adj[v].len() {
                let w = adj[v][e];
                work.last_mut().expect("nonempty").1 += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    work.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Stationary distribution of the chain restricted to a closed `class`,
/// in class order. Solves `pi (P_C - I) = 0`, `sum pi = 1` by Gaussian
/// elimination with partial pivoting.
pub fn stationary_distribution(p: &[Vec<f64>], class: &[usize]) -> Result<Vec<f64>> {
    let m = class.len();
    if m == 0 {
        return Err(Error::Internal("empty class".into()));
    }
    // Row r of the system is the balance equation of class[r]; the last one
    // is replaced by normalization.
    let mut a = vec![vec![0.0; m + 1]; m];
    for r in 0..m {
        for (c, &from) in class.iter().enumerate() {
            a[r][c] = p[from][class[r]];
        }
        a[r][r] -= 1.0;
    }
    for c in 0..m {
        a[m - 1][c] = 1.0;
    }
    a[m - 1][m] = 1.0;
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("nonempty");
        if a[pivot][col].abs() < 1e-14 {
            return Err(Error::Internal("singular stationary system".into()));
        }
        a.swap(col, pivot);
        for r in 0..m {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=m {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    Ok((0..m).map(|r| a[r][m] / a[r][r]).collect())
}

/// Enumerates every deterministic stationary policy of an unconstrained
/// instance and returns the best closed-class average cost. Ties keep the
/// lexicographically first policy.
pub fn solve_unconstrained(problem: &FiniteProblem) -> Result<OracleResult> {
    if problem.num_constraints() != 0 {
        return Err(Error::Config(
            "the oracle handles only instances without constraints".into(),
        ));
    }
    let count = policy_count(problem);
    if count > POLICY_LIMIT {
        return Err(Error::InstanceTooLarge {
            policies: count,
            limit: POLICY_LIMIT,
        });
    }
    let n = problem.num_states();
    let choices: Vec<Vec<Choice>> = (0..n).map(|i| state_choices(problem, i)).collect();
    let mut sel = vec![0usize; n];
    let mut best: Option<OracleResult> = None;
    let mut evaluated = 0u64;
    let mut p = vec![vec![0.0; n]; n];
    loop {
        for i in 0..n {
            p[i].copy_from_slice(&choices[i][sel[i]].row);
        }
        for class in closed_classes(&p) {
            let pi = stationary_distribution(&p, &class)?;
            let value: f64 = class
                .iter()
                .zip(&pi)
                .map(|(&i, x)| x * choices[i][sel[i]].cost)
                .sum();
            if best.as_ref().is_none_or(|b| value < b.c0_star - 1e-12) {
                let mut stationary = vec![0.0; n];
                for (&i, &x) in class.iter().zip(&pi) {
                    stationary[i] = x;
                }
                best = Some(OracleResult {
                    c0_star: value,
                    policy: (0..n).map(|i| choices[i][sel[i]].picks.clone()).collect(),
                    class,
                    stationary,
                    policies_evaluated: 0,
                });
            }
        }
        evaluated += 1;
        let mut i = n;
        loop {
            if i == 0 {
                let mut out =
                    best.ok_or_else(|| Error::Internal("no closed class found".into()))?;
                out.policies_evaluated = evaluated;
                return Ok(out);
            }
            i -= 1;
            sel[i] += 1;
            if sel[i] < choices[i].len() {
                break;
            }
            sel[i] = 0;
        }
    }
}

/// Right-hand side of the finite-horizon bound on the time-average
/// virtual objective cost in excess of `c0_star`.
pub fn cost_bound_rhs(
    c0_star: f64,
    v: f64,
    alpha: f64,
    horizon: u64,
    n: usize,
    k: usize,
    c_max: f64,
) -> f64 {
    let t = horizon as f64;
    let b = 1.5 * (n as f64 + k as f64 * c_max * c_max);
    b * (1.0 + 1.0 / t) / v
        + v * c_max * c_max * (1.0 + 1.0 / t) / (2.0 * alpha)
        + (c0_star + c_max) / t
        + alpha * (n as f64).ln() / (v * t)
}

/// `rhs - (mean_virtual_cost - c0_star)`; nonnegative when the bound holds.
#[allow(clippy::too_many_arguments)]
pub fn check_cost_bound(
    mean_virtual_cost: f64,
    oracle: &OracleResult,
    v: f64,
    alpha: f64,
    horizon: u64,
    n: usize,
    k: usize,
    c_max: f64,
) -> f64 {
    cost_bound_rhs(oracle.c0_star, v, alpha, horizon, n, k, c_max)
        - (mean_virtual_cost - oracle.c0_star)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::synthetic::{random_instance, single_state, toggle};

    #[test]
    fn toggle_optimum_is_minus_half() {
        let r = solve_unconstrained(&toggle().build().unwrap()).unwrap();
        assert!((r.c0_star + 0.5).abs() < 1e-12);
        assert_eq!(r.class, vec![0]);
        assert_eq!(r.policy[0], vec![0, 0]);
        assert_eq!(r.policies_evaluated, 16);
    }

    #[test]
    fn single_state_takes_best_action_per_side_value() {
        let inst = single_state(vec![0.25, 0.75], vec![vec![0.5, -1.0], vec![0.0, 0.2]], 1.0);
        let r = solve_unconstrained(&inst.build().unwrap()).unwrap();
        assert!((r.c0_star - (-0.25 + 0.75 * 0.0)).abs() < 1e-12);
        assert_eq!(r.policy, vec![vec![1, 0]]);
    }

    #[test]
    fn constant_cost_gives_constant_optimum() {
        let mut inst = random_instance(7, 3, 2, 2);
        for per_w in &mut inst.menus {
            for menu in per_w {
                for a in menu {
                    a.costs = vec![0.3];
                }
            }
        }
        let r = solve_unconstrained(&inst.build().unwrap()).unwrap();
        assert!((r.c0_star - 0.3).abs() < 1e-12);
    }

    #[test]
    fn refuses_oversized_and_constrained_instances() {
        let big = random_instance(1, 5, 4, 3);
        assert!(matches!(
            solve_unconstrained(&big.build().unwrap()),
            Err(Error::InstanceTooLarge { .. })
        ));
        let mut c = toggle();
        c.k = 1;
        for per_w in &mut c.menus {
            for menu in per_w {
                for a in menu {
                    a.costs.push(0.0);
                }
            }
        }
        assert!(solve_unconstrained(&c.build().unwrap()).is_err());
    }

    #[test]
    fn finds_every_closed_class() {
        let p = vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.5, 0.0, 0.5, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ];
        assert_eq!(closed_classes(&p), vec![vec![0], vec![2, 3]]);
        let pi = stationary_distribution(&p, &[2, 3]).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-12 && (pi[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stationary_solution_satisfies_balance() {
        for seed in 0..30 {
            let inst = random_instance(seed, 4, 2, 2);
            let p = inst.build().unwrap();
            let r = solve_unconstrained(&p).unwrap();
            let n = 4;
            let mut chain = vec![vec![0.0; n]; n];
            for i in 0..n {
                for w in 0..2 {
                    for &(j, x) in p.row(i, w, r.policy[i][w]) {
                        chain[i][j] += p.side_probs()[w] * x;
                    }
                }
            }
            for j in 0..n {
                let inflow: f64 = (0..n).map(|i| r.stationary[i] * chain[i][j]).sum();
                assert!((inflow - r.stationary[j]).abs() < 1e-10);
            }
            for &i in &r.class {
                for j in 0..n {
                    if chain[i][j] > 0.0 {
                        assert!(r.class.contains(&j));
                    }
                }
            }
        }
    }
}
