//! Small finite instances described by explicit tables.
//!
//! JSON layout (states and side-information values are 0-based):
//!
//! ```json
//! {
//!   "n": 2, "k": 0, "c_max": 1.0,
//!   "side_probs": [0.5, 0.5],
//!   "initial_state": 0,
//!   "menus": [
//!     [ [ {"label": "stay", "costs": [0.0], "next": [1.0, 0.0]} ], ... ],
//!     ...
//!   ]
//! }
//! ```
//!
//! `menus[i][w]` lists the actions available in state `i` under side value
//! `w`; each has `k + 1` costs and a dense next-state distribution.
//! Optional `home_state` and `escort[i][w]` (a menu index) enable redirect
//! mode.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{check_row, Problem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteAction {
    #[serde(default)]
    pub label: String,
    pub costs: Vec<f64>,
    pub next: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteInstance {
    pub n: usize,
    pub k: usize,
    pub c_max: f64,
    pub side_probs: Vec<f64>,
    #[serde(default)]
    pub initial_state: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub home_state: Option<usize>,
    pub menus: Vec<Vec<Vec<FiniteAction>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escort: Option<Vec<Vec<usize>>>,
}

impl FiniteInstance {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn num_side_values(&self) -> usize {
        self.side_probs.len()
    }

    /// Validates the tables and builds the evaluable problem.
    pub fn build(&self) -> Result<FiniteProblem> {
        FiniteProblem::new(self.clone())
    }
}

/// A validated [`FiniteInstance`] with sparse transition rows.
type SparseRow = Vec<(usize, f64)>;

#[derive(Debug, Clone)]
pub struct FiniteProblem {
    instance: FiniteInstance,
    /// Sparse rows indexed `[state][side value][action]`.
    rows: Vec<Vec<Vec<SparseRow>>>,
    side_cdf: Vec<f64>,
}

impl FiniteProblem {
    pub fn new(instance: FiniteInstance) -> Result<Self> {
        let FiniteInstance { n, k, c_max, .. } = instance;
        let bad = |msg: String| Err(Error::Model(msg));
        if n == 0 {
            return bad("instance needs at least one state".into());
        }
        if !(c_max > 0.0 && c_max.is_finite()) {
            return bad(format!("c_max must be positive, got {c_max}"));
        }
        let m = instance.side_probs.len();
        if m == 0 {
            return bad("side_probs is empty".into());
        }
        if instance.side_probs.iter().any(|&q| !(q >= 0.0)) {
            return bad("side_probs has a negative entry".into());
        }
        let total: f64 = instance.side_probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("side_probs sums to {total}"));
        }
        if instance.initial_state >= n {
            return bad(format!(
                "initial_state {} out of range",
                instance.initial_state
            ));
        }
        if instance.menus.len() != n {
            return bad(format!(
                "menus lists {} states, expected {n}",
                instance.menus.len()
            ));
        }
        let mut rows = Vec::with_capacity(n);
        for (i, per_w) in instance.menus.iter().enumerate() {
            if per_w.len() != m {
                return bad(format!(
                    "state {i} has {} side entries, expected {m}",
                    per_w.len()
                ));
            }
            let mut state_rows = Vec::with_capacity(m);
            for (w, menu) in per_w.iter().enumerate() {
                if menu.is_empty() {
                    return bad(format!("empty menu for state {i}, side value {w}"));
                }
                let mut menu_rows = Vec::with_capacity(menu.len());
                for (a, act) in menu.iter().enumerate() {
                    let ctx = format!("state {i}, side value {w}, action {a}");
                    if act.costs.len() != k + 1 {
                        return bad(format!("{ctx}: expected {} costs", k + 1));
                    }
                    if act.costs.iter().any(|c| !(c.abs() <= c_max)) {
                        return bad(format!("{ctx}: cost exceeds c_max"));
                    }
                    if act.next.len() != n {
                        return bad(format!("{ctx}: next has {} entries", act.next.len()));
                    }
                    let row: Vec<(usize, f64)> = act
                        .next
                        .iter()
                        .enumerate()
                        .filter(|(_, &p)| p != 0.0)
                        .map(|(j, &p)| (j, p))
                        .collect();
                    check_row(&row, n).map_err(|e| Error::Model(format!("{ctx}: {e}")))?;
                    menu_rows.push(row);
                }
                state_rows.push(menu_rows);
            }
            rows.push(state_rows);
        }
        if let Some(h) = instance.home_state {
            if h >= n {
                return bad(format!("home_state {h} out of range"));
            }
        }
        if let Some(esc) = &instance.escort {
            if esc.len() != n || esc.iter().any(|e| e.len() != m) {
                return bad("escort table has the wrong shape".into());
            }
            for (i, per_w) in esc.iter().enumerate() {
                for (w, &a) in per_w.iter().enumerate() {
                    if a >= instance.menus[i][w].len() {
                        return bad(format!("escort action {a} not in menu of state {i}"));
                    }
                }
            }
        }
        let mut acc = 0.0;
        let side_cdf = instance
            .side_probs
            .iter()
            .map(|q| {
                acc += q;
                acc
            })
            .collect();
        Ok(Self {
            instance,
            rows,
            side_cdf,
        })
    }

    pub fn instance(&self) -> &FiniteInstance {
        &self.instance
    }

    pub fn side_probs(&self) -> &[f64] {
        &self.instance.side_probs
    }

    pub fn menu(&self, i: usize, w: usize) -> &[FiniteAction] {
        &self.instance.menus[i][w]
    }

    pub fn row(&self, i: usize, w: usize, a: usize) -> &[(usize, f64)] {
        &self.rows[i][w][a]
    }
}

impl Problem for FiniteProblem {
    /// Index into `side_probs`.
    type Side = usize;
    /// Index into the menu of `(state, side value)`.
    type Action = usize;

    fn num_states(&self) -> usize {
        self.instance.n
    }

    fn num_constraints(&self) -> usize {
        self.instance.k
    }

    fn cost_bound(&self) -> f64 {
        self.instance.c_max
    }

    fn initial_state(&self) -> usize {
        self.instance.initial_state
    }

    fn sample_side<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let r: f64 = rng.random();
        self.side_cdf
            .iter()
            .position(|&c| c > r)
            .unwrap_or_else(|| {
                self.instance
                    .side_probs
                    .iter()
                    .rposition(|&q| q > 0.0)
                    .unwrap_or(0)
            })
    }

    fn actions(&self, i: usize, w: &usize, out: &mut Vec<usize>) {
        out.extend(0..self.instance.menus[i][*w].len());
    }

    fn costs(&self, i: usize, w: &usize, a: usize, out: &mut [f64]) {
        out.copy_from_slice(&self.instance.menus[i][*w][a].costs);
    }

    fn transitions(&self, i: usize, w: &usize, a: usize, out: &mut Vec<(usize, f64)>) {
        out.extend_from_slice(&self.rows[i][*w][a]);
    }

    fn home_state(&self) -> Option<usize> {
        self.instance.home_state
    }

    fn escort_action(&self, i: usize, w: &usize) -> Option<usize> {
        self.instance.escort.as_ref().map(|e| e[i][*w])
    }
}

fn unit(n: usize, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[j] = 1.0;
    v
}

fn act(label: &str, costs: Vec<f64>, next: Vec<f64>) -> FiniteAction {
    FiniteAction {
        label: label.into(),
        costs,
        next,
    }
}

/// Two states, `W` uniform on `{0, 1}`. `stay` keeps the state and `go`
/// toggles it. In state 0 staying earns `w` (cost `-w`); state 1 earns
/// nothing.
pub fn toggle() -> FiniteInstance {
    let menus = (0..2)
        .map(|i| {
            (0..2)
                .map(|w| {
                    let stay_cost = if i == 0 { -(w as f64) } else { 0.0 };
                    vec![
                        act("stay", vec![stay_cost], unit(2, i)),
                        act("go", vec![0.0], unit(2, 1 - i)),
                    ]
                })
                .collect()
        })
        .collect();
    FiniteInstance {
        n: 2,
        k: 0,
        c_max: 1.0,
        side_probs: vec![0.5, 0.5],
        initial_state: 0,
        home_state: Some(0),
        menus,
        escort: Some(vec![vec![0, 0], vec![1, 1]]),
    }
}

/// One state; `costs[w][a]` is the cost of action `a` under side value `w`.
pub fn single_state(side_probs: Vec<f64>, costs: Vec<Vec<f64>>, c_max: f64) -> FiniteInstance {
    let menus = vec![costs
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(a, &c)| act(&format!("a{a}"), vec![c], vec![1.0]))
                .collect()
        })
        .collect()];
    FiniteInstance {
        n: 1,
        k: 0,
        c_max,
        side_probs,
        initial_state: 0,
        home_state: None,
        menus,
        escort: None,
    }
}

/// Random instance with `n` states, `m` side values and `actions` actions
/// per `(state, side value)`. Costs are uniform on `[-1, 1]`; transition
/// rows are random with roughly half their entries zeroed.
pub fn random_instance(seed: u64, n: usize, m: usize, actions: usize) -> FiniteInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut side_probs: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let head: f64 = side_probs[..m - 1].iter().sum();
    side_probs[m - 1] = 1.0 - head;
    let random_row = |rng: &mut ChaCha8Rng| {
        let mut row: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.5) {
                    rng.random_range(0.1..1.0)
                } else {
                    0.0
                }
            })
            .collect();
        if row.iter().all(|&p| p == 0.0) {
            row[rng.random_range(0..n)] = 1.0;
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= s);
        let last = row.iter().rposition(|&p| p > 0.0).unwrap();
        let head: f64 = row[..last].iter().sum();
        row[last] = 1.0 - head;
        row
    };
    let menus = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| {
                    (0..actions)
                        .map(|a| {
                            let cost = rng.random_range(-1.0..1.0);
                            act(&format!("a{a}"), vec![cost], random_row(&mut rng))
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    FiniteInstance {
        n,
        k: 0,
        c_max: 1.0,
        side_probs,
        initial_state: 0,
        home_state: None,
        menus,
        escort: None,
    }
}
