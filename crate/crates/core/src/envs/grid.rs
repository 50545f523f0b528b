//! The walled 4x5 grid the robot lives on.
//!
//! Cells are numbered 1..=20 row-major, with cells 1..=5 on the first row,
//! so North subtracts 5 and South adds 5.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ROWS: usize = 4;
pub const COLS: usize = 5;
pub const CELLS: usize = ROWS * COLS;
pub const HOME_CELL: usize = 1;

/// Walls of the default layout, as pairs of adjacent cells.
pub const DEFAULT_WALLS: [(usize, usize); 7] =
    [(12, 13), (3, 8), (7, 8), (4, 9), (9, 10), (9, 14), (13, 18)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Move {
    Stay,
    North,
    South,
    West,
    East,
}

impl Move {
    pub const ALL: [Move; 5] = [Move::Stay, Move::North, Move::South, Move::West, Move::East];
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    walls: BTreeSet<(usize, usize)>,
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn raw_step(cell: usize, mv: Move) -> Option<usize> {
    let row = (cell - 1) / COLS;
    let col = (cell - 1) % COLS;
    match mv {
        Move::Stay => Some(cell),
        Move::North if row > 0 => Some(cell - COLS),
        Move::South if row + 1 < ROWS => Some(cell + COLS),
        Move::West if col > 0 => Some(cell - 1),
        Move::East if col + 1 < COLS => Some(cell + 1),
        _ => None,
    }
}

impl Grid {
    /// Builds a grid; every wall must separate two adjacent cells.
    pub fn new(walls: &[(usize, usize)]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &(a, b) in walls {
            if !(1..=CELLS).contains(&a) || !(1..=CELLS).contains(&b) {
                return Err(Error::Config(format!(
                    "wall {a}-{b} names a cell outside 1..=20"
                )));
            }
            let adjacent = Move::ALL[1..].iter().any(|&m| raw_step(a, m) == Some(b));
            if !adjacent {
                return Err(Error::Config(format!(
                    "wall {a}-{b} joins non-adjacent cells"
                )));
            }
            set.insert(ordered(a, b));
        }
        Ok(Self { walls: set })
    }

    pub fn walls(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.walls.iter().copied()
    }

    /// Cell reached by `mv`, or `None` when the move leaves the grid or
    /// crosses a wall.
    pub fn step(&self, cell: usize, mv: Move) -> Option<usize> {
        let next = raw_step(cell, mv)?;
        if next != cell && self.walls.contains(&ordered(cell, next)) {
            return None;
        }
        Some(next)
    }

    pub fn neighbors(&self, cell: usize) -> Vec<usize> {
        let mut out: Vec<usize> = Move::ALL[1..]
            .iter()
            .filter_map(|&m| self.step(cell, m))
            .collect();
        out.sort_unstable();
        out
    }

    /// BFS hop counts from `from`; index by cell number (entry 0 unused).
    pub fn distances_from(&self, from: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; CELLS + 1];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(c) = queue.pop_front() {
            let d = dist[c].unwrap();
            for nb in self.neighbors(c) {
                if dist[nb].is_none() {
                    dist[nb] = Some(d + 1);
                    queue.push_back(nb);
                }
            }
        }
        dist
    }

    pub fn distance(&self, from: usize, to: usize) -> Option<usize> {
        self.distances_from(from)[to]
    }

    pub fn is_connected(&self) -> bool {
        self.distances_from(HOME_CELL)[1..]
            .iter()
            .all(Option::is_some)
    }

    /// First move of a shortest path from `from` to `to`, preferring moves
    /// in [`Move::ALL`] order. `None` if already there or unreachable.
    pub fn move_toward(&self, from: usize, to: usize) -> Option<Move> {
        let dist = self.distances_from(to);
        let here = dist[from]?;
        if here == 0 {
            return None;
        }
        Move::ALL[1..].iter().copied().find(|&m| {
            self.step(from, m)
                .is_some_and(|c| dist[c] == Some(here - 1))
        })
    }

    /// A shortest path as a list of cells, both ends included.
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let mut path = vec![from];
        let mut cell = from;
        self.distance(from, to)?;
        while let Some(m) = self.move_toward(cell, to) {
            cell = self.step(cell, m)?;
            path.push(cell);
        }
        Some(path)
    }

    /// Number of distinct shortest paths between two cells.
    pub fn count_shortest_paths(&self, from: usize, to: usize) -> u64 {
        let dist = self.distances_from(from);
        let Some(target) = dist[to] else { return 0 };
        let mut ways = [0u64; CELLS + 1];
        ways[from] = 1;
        let mut cells: Vec<usize> = (1..=CELLS).filter(|&c| dist[c].is_some()).collect();
        cells.sort_by_key(|&c| dist[c]);
        for c in cells {
            let d = dist[c].unwrap();
            if d >= target {
                continue;
            }
            for nb in self.neighbors(c) {
                if dist[nb] == Some(d + 1) {
                    ways[nb] += ways[c];
                }
            }
        }
        ways[to]
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self::new(&DEFAULT_WALLS).expect("default walls are valid")
    }
}
