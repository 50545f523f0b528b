//! Time-average accounting for the virtual and actual systems.
//!
//! Rewards are reported with the robot's sign convention: reward is minus
//! the objective cost `c_0`. Long sums use Neumaier compensated summation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.comp += other.comp;
    }
}

/// One row of the checkpoint CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: u64,
    pub r_virtual: f64,
    pub r_actual: f64,
    pub constraint_virtual: Vec<f64>,
    pub constraint_actual: Vec<f64>,
    /// `||J(t)|| / t`.
    pub qnorm: f64,
    pub redirect_active_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    n: usize,
    k: usize,
    slots: u64,
    virtual_cost: Vec<CompensatedSum>,
    actual_cost: Vec<CompensatedSum>,
    visits: Vec<u64>,
    virtual_occupancy: Vec<CompensatedSum>,
    balance: Vec<CompensatedSum>,
    path_length: CompensatedSum,
    redirect_slots: u64,
    checkpoint_every: u64,
    checkpoints: Vec<Checkpoint>,
}

/// Summary of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub slots: u64,
    pub r_virtual: f64,
    pub r_actual: f64,
    /// `(1/T) sum_t pi(t)^T G(t) g_l` for each constraint.
    pub constraint_virtual: Vec<f64>,
    /// `(1/T) sum_t c_{S(t),l}` for each constraint.
    pub constraint_actual: Vec<f64>,
    pub occupancy_virtual: Vec<f64>,
    pub occupancy_actual: Vec<f64>,
    /// `|(1/T) sum_t pi(t)^T Y(t) y_j|` per state.
    pub balance_residual: Vec<f64>,
    /// `(1/T) sum_{t>=1} ||pi(t) - pi(t-1)||_1`.
    pub mean_path_length: f64,
    pub redirect_slots: u64,
}

impl RunMetrics {
    /// `checkpoint_every = 0` disables periodic checkpoints.
    pub fn new(n: usize, k: usize, checkpoint_every: u64) -> Self {
        Self {
            n,
            k,
            slots: 0,
            virtual_cost: vec![CompensatedSum::default(); k + 1],
            actual_cost: vec![CompensatedSum::default(); k + 1],
            visits: vec![0; n],
            virtual_occupancy: vec![CompensatedSum::default(); n],
            balance: vec![CompensatedSum::default(); n],
            path_length: CompensatedSum::default(),
            redirect_slots: 0,
            checkpoint_every,
            checkpoints: Vec::new(),
        }
    }

    pub fn slots(&self) -> u64 {
        self.slots
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    pub fn visits(&self) -> &[u64] {
        &self.visits
    }

    /// Accounts one slot.
    ///
    /// `virtual_costs` holds `pi(t)^T G0(t)` then `pi(t)^T G(t) g_l`;
    /// `balance` holds `pi(t)^T Y(t) y_j`; `path_step` is
    /// `||pi(t) - pi(t-1)||_1` (zero at `t = 0`).
    #[allow(clippy::too_many_arguments)]
    pub fn record(
        &mut self,
        belief: &[f64],
        virtual_costs: &[f64],
        actual_state: usize,
        actual_costs: &[f64],
        balance: &[f64],
        path_step: f64,
        redirect_active: bool,
    ) {
        self.slots += 1;
        for (s, &c) in self.virtual_cost.iter_mut().zip(virtual_costs) {
            s.add(c);
        }
        for (s, &c) in self.actual_cost.iter_mut().zip(actual_costs) {
            s.add(c);
        }
        self.visits[actual_state] += 1;
        for (s, &p) in self.virtual_occupancy.iter_mut().zip(belief) {
            s.add(p);
        }
        for (s, &b) in self.balance.iter_mut().zip(balance) {
            s.add(b);
        }
        self.path_length.add(path_step);
        if redirect_active {
            self.redirect_slots += 1;
        }
    }

    /// Appends a checkpoint if the slot count is on the schedule.
    pub fn maybe_checkpoint(&mut self, queue_norm: f64) {
        if self.checkpoint_every > 0 && self.slots.is_multiple_of(self.checkpoint_every) {
            self.push_checkpoint(queue_norm);
        }
    }

    pub fn push_checkpoint(&mut self, queue_norm: f64) {
        if self.slots == 0 || self.checkpoints.last().is_some_and(|c| c.t == self.slots) {
            return;
        }
        let t = self.slots as f64;
        let avg = |v: &[CompensatedSum]| v.iter().map(|s| s.value() / t).collect::<Vec<_>>();
        let virt = avg(&self.virtual_cost);
        let act = avg(&self.actual_cost);
        self.checkpoints.push(Checkpoint {
            t: self.slots,
            r_virtual: -virt[0],
            r_actual: -act[0],
            constraint_virtual: virt[1..].to_vec(),
            constraint_actual: act[1..].to_vec(),
            qnorm: queue_norm / t,
            redirect_active_count: self.redirect_slots,
        });
    }

    /// Adds another run's totals. Checkpoint histories are not merged.
    pub fn merge(&mut self, other: &RunMetrics) -> Result<()> {
        if self.n != other.n || self.k != other.k {
            return Err(Error::Domain("merging metrics of different shapes".into()));
        }
        self.slots += other.slots;
        let merge_all = |a: &mut [CompensatedSum], b: &[CompensatedSum]| {
            a.iter_mut().zip(b).for_each(|(x, y)| x.merge(y))
        };
        merge_all(&mut self.virtual_cost, &other.virtual_cost);
        merge_all(&mut self.actual_cost, &other.actual_cost);
        merge_all(&mut self.virtual_occupancy, &other.virtual_occupancy);
        merge_all(&mut self.balance, &other.balance);
        self.path_length.merge(&other.path_length);
        for (a, b) in self.visits.iter_mut().zip(&other.visits) {
            *a += b;
        }
        self.redirect_slots += other.redirect_slots;
        self.checkpoints.clear();
        Ok(())
    }

    pub fn finalize(&self) -> Result<Report> {
        if self.slots == 0 {
            return Err(Error::EmptyRun);
        }
        let t = self.slots as f64;
        let avg = |v: &[CompensatedSum]| v.iter().map(|s| s.value() / t).collect::<Vec<_>>();
        let virt = avg(&self.virtual_cost);
        let act = avg(&self.actual_cost);
        Ok(Report {
            slots: self.slots,
            r_virtual: -virt[0],
            r_actual: -act[0],
            constraint_virtual: virt[1..].to_vec(),
            constraint_actual: act[1..].to_vec(),
            occupancy_virtual: avg(&self.virtual_occupancy),
            occupancy_actual: self.visits.iter().map(|&v| v as f64 / t).collect(),
            balance_residual: avg(&self.balance).into_iter().map(f64::abs).collect(),
            mean_path_length: self.path_length.value() / t,
            redirect_slots: self.redirect_slots,
        })
    }

    /// Slack of the global-balance bound
    /// `|(1/T) sum_{t<T} pi(t)^T Y(t) y_j| <= |Q_j(T+1)|/T + (1/T) sum_{1<=t<=T} ||pi(t)-pi(t-1)||_1`
    /// for each state `j` (right side minus left side).
    ///
    /// `next_queues` is `Q(T+1)` and `final_step` is `||pi(T) - pi(T-1)||_1`;
    /// both only need information available after slot `T - 1`.
    pub fn balance_slack(&self, next_queues: &[f64], final_step: f64) -> Result<Vec<f64>> {
        if self.slots == 0 {
            return Err(Error::EmptyRun);
        }
        let t = self.slots as f64;
        let path = (self.path_length.value() + final_step) / t;
        Ok(self
            .balance
            .iter()
            .zip(next_queues)
            .map(|(b, q)| q.abs() / t + path - (b.value() / t).abs())
            .collect())
    }

    /// Writes the checkpoint table as CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "t,r_virtual,r_actual")?;
        for l in 1..=self.k {
            write!(out, ",constraint_{l}_virtual,constraint_{l}_actual")?;
        }
        writeln!(out, ",qnorm,redirect_active_count")?;
        for c in &self.checkpoints {
            write!(out, "{},{},{}", c.t, c.r_virtual, c.r_actual)?;
            for (v, a) in c.constraint_virtual.iter().zip(&c.constraint_actual) {
                write!(out, ",{v},{a}")?;
            }
            writeln!(out, ",{},{}", c.qnorm, c.redirect_active_count)?;
        }
        Ok(())
    }
}

/// Rounds to three places past the decimal point.
pub fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Occupancy table keyed by state label, rounded to three decimals.
pub fn occupancy_json(
    labels: impl Fn(usize) -> String,
    virtual_occ: &[f64],
    actual_occ: &[f64],
) -> serde_json::Value {
    let table = |occ: &[f64]| {
        occ.iter()
            .enumerate()
            .map(|(i, &p)| (labels(i), serde_json::json!(round3(p))))
            .collect::<serde_json::Map<_, _>>()
    };
    serde_json::json!({
        "virtual": table(virtual_occ),
        "actual": table(actual_occ),
    })
}
