//! Per-slot cost and transition matrices built from the contingency actions.
//!
//! For slot `t` with actions `A_i(t)`:
//!
//! * `G0_i = c_{i,0}(W(t), A_i(t))`
//! * `Y_{i,j} = 1{i = j} - p_{i,j}(W(t), A_i(t))`
//! * `G_{i,l} = c_{i,l}(W(t), A_i(t))` for `l = 1..=k`
//!
//! `Y` is stored through the sparse transition rows. The initial matrices
//! (slot `-1`) have `G0 = -c_max`, `Y = 0` and `G = 0`; `Y = 0` is encoded
//! by identity rows so that every product is exactly zero.

use crate::problem::Problem;

#[derive(Debug, Clone, PartialEq)]
pub struct SlotMatrices {
    n: usize,
    k: usize,
    g0: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    g: Vec<f64>,
}

impl SlotMatrices {
    /// Matrices for slot `-1`.
    pub fn initial(n: usize, k: usize, c_max: f64) -> Self {
        Self {
            n,
            k,
            g0: vec![-c_max; n],
            rows: (0..n).map(|i| vec![(i, 1.0)]).collect(),
            g: vec![0.0; n * k],
        }
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    pub fn num_constraints(&self) -> usize {
        self.k
    }

    pub fn g0(&self) -> &[f64] {
        &self.g0
    }

    /// `G_{i,l}` with `l` in `1..=k`.
    pub fn g(&self, i: usize, l: usize) -> f64 {
        self.g[i * self.k + (l - 1)]
    }

    /// Sparse transition row `p_{i,.}` behind row `i` of `Y`.
    pub fn transition_row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// Rebuilds the matrices from the slot's side info and actions.
    pub fn fill<P: Problem>(
        &mut self,
        problem: &P,
        w: &P::Side,
        actions: &[P::Action],
        costs: &mut [f64],
    ) {
        for (i, &a) in actions.iter().enumerate() {
            problem.costs(i, w, a, costs);
            self.g0[i] = costs[0];
            self.g[i * self.k..(i + 1) * self.k].copy_from_slice(&costs[1..]);
            let row = &mut self.rows[i];
            row.clear();
            problem.transitions(i, w, a, row);
        }
    }

    /// `(Y q)_i = q_i - sum_j p_{i,j} q_j`.
    pub fn y_times(&self, q: &[f64], out: &mut [f64]) {
        for (i, row) in self.rows.iter().enumerate() {
            out[i] = q[i] - row.iter().map(|&(j, p)| p * q[j]).sum::<f64>();
        }
    }

    /// `(G z)_i = sum_l G_{i,l} z_l`.
    pub fn g_times(&self, z: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.g[i * self.k..(i + 1) * self.k]
                .iter()
                .zip(z)
                .map(|(g, z)| g * z)
                .sum();
        }
    }

    /// `(pi^T Y)_j = pi_j - sum_i pi_i p_{i,j}`, the net outflow of `j`.
    pub fn pi_y(&self, pi: &[f64], out: &mut [f64]) {
        out.copy_from_slice(pi);
        for (row, &w) in self.rows.iter().zip(pi) {
            for &(j, p) in row {
                out[j] -= w * p;
            }
        }
    }

    /// `(pi^T G)_l` for `l = 1..=k`, written to `out[l - 1]`.
    pub fn pi_g(&self, pi: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &w) in pi.iter().enumerate() {
            for (o, g) in out.iter_mut().zip(&self.g[i * self.k..(i + 1) * self.k]) {
                *o += w * g;
            }
        }
    }

    pub fn pi_g0(&self, pi: &[f64]) -> f64 {
        pi.iter().zip(&self.g0).map(|(p, c)| p * c).sum()
    }

    /// Dense copy of `Y`, row-major.
    pub fn dense_y(&self) -> Vec<Vec<f64>> {
        let mut y = vec![vec![0.0; self.n]; self.n];
        for (i, row) in self.rows.iter().enumerate() {
            y[i][i] = 1.0;
            for &(j, p) in row {
                y[i][j] -= p;
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_products_vanish() {
        let m = SlotMatrices::initial(3, 2, 5.0);
        let mut out = [1.0; 3];
        m.y_times(&[1.0, -2.0, 3.0], &mut out);
        assert_eq!(out, [0.0; 3]);
        let mut col = [1.0; 3];
        m.pi_y(&[0.2, 0.3, 0.5], &mut col);
        assert_eq!(col, [0.0; 3]);
        let mut gz = [1.0; 3];
        m.g_times(&[4.0, 2.0], &mut gz);
        assert_eq!(gz, [0.0; 3]);
        assert_eq!(m.pi_g0(&[0.2, 0.3, 0.5]), -5.0);
        assert!(m.dense_y().iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn products_match_dense_algebra() {
        let mut m = SlotMatrices::initial(3, 1, 1.0);
        m.rows = vec![vec![(1, 1.0)], vec![(0, 0.25), (2, 0.75)], vec![(2, 1.0)]];
        m.g = vec![0.5, -0.25, 1.0];
        let y = m.dense_y();
        for row in &y {
            assert!(row.iter().sum::<f64>().abs() < 1e-12);
        }
        let q = [2.0, -1.0, 0.5];
        let mut yq = [0.0; 3];
        m.y_times(&q, &mut yq);
        for i in 0..3 {
            let dense: f64 = (0..3).map(|j| y[i][j] * q[j]).sum();
            assert!((yq[i] - dense).abs() < 1e-15);
        }
        let pi = [0.1, 0.6, 0.3];
        let mut py = [0.0; 3];
        m.pi_y(&pi, &mut py);
        for j in 0..3 {
            let dense: f64 = (0..3).map(|i| pi[i] * y[i][j]).sum();
            assert!((py[j] - dense).abs() < 1e-15);
        }
        let mut pg = [0.0];
        m.pi_g(&pi, &mut pg);
        assert!((pg[0] - (0.05 - 0.15 + 0.3)).abs() < 1e-15);
    }
}
