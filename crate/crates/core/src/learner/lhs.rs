use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{AtgError, Result};
use crate::model::ActionKind;

/// Latin hypercube over one action's parameter box, drawn without
/// replacement and refilled with a fresh pairing after each cycle.
#[derive(Clone, Debug)]
pub struct LhsGrid {
    kind: ActionKind,
    strata: usize,
    unused: Vec<Vec<usize>>,
    rng: ChaCha8Rng,
    cycles_completed: u64,
}

impl LhsGrid {
    pub fn new(kind: ActionKind, strata: usize, seed: u64) -> Result<Self> {
        if strata == 0 {
            return Err(AtgError::config("lhs_strata", "must be at least 1"));
        }
        let mut grid = Self {
            kind,
            strata,
            unused: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            cycles_completed: 0,
        };
        grid.refill();
        Ok(grid)
    }

    fn refill(&mut self) {
        let dim = self.kind.param_dim();
        if dim == 0 {
            self.unused = vec![Vec::new()];
            return;
        }
        let perms: Vec<Vec<usize>> = (0..dim)
            .map(|_| {
                let mut p: Vec<usize> = (0..self.strata).collect();
                p.shuffle(&mut self.rng);
                p
            })
            .collect();
        self.unused = (0..self.strata)
            .map(|m| perms.iter().map(|p| p[m]).collect())
            .collect();
    }

    pub fn kind(&self) -> ActionKind {
        self.kind
    }

    pub fn strata(&self) -> usize {
        self.strata
    }

    /// Cells in one full cycle.
    pub fn cycle_len(&self) -> usize {
        if self.kind.param_dim() == 0 {
            1
        } else {
            self.strata
        }
    }

    pub fn unused_cells(&self) -> &[Vec<usize>] {
        &self.unused
    }

    /// Cells left before the grid refills (a drained grid counts as full).
    pub fn remaining(&self) -> usize {
        if self.unused.is_empty() {
            self.cycle_len()
        } else {
            self.unused.len()
        }
    }

    pub fn cycles_completed(&self) -> u64 {
        self.cycles_completed
    }

    /// Draws `ρ` uniformly inside a uniformly chosen unused cell.
    pub fn draw(&mut self) -> Vec<f64> {
        if self.unused.is_empty() {
            self.refill();
        }
        let idx = self.rng.random_range(0..self.unused.len());
        let cell = self.unused.swap_remove(idx);
        if self.unused.is_empty() {
            self.cycles_completed += 1;
        }
        let n = self.strata as f64;
        cell.iter()
            .zip(self.kind.bounds())
            .map(|(&c, &(lo, hi))| {
                let u: f64 = self.rng.random();
                let x = lo + (c as f64 + u) * (hi - lo) / n;
                x.min(hi)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn four_orbit_draws_cover_quarters() {
        let mut g = LhsGrid::new(ActionKind::Orbit, 4, 3).unwrap();
        let mut quarters: Vec<usize> = (0..4)
            .map(|_| ((g.draw()[0] + PI) / (PI / 2.0)).floor() as usize)
            .collect();
        quarters.sort();
        assert_eq!(quarters, vec![0, 1, 2, 3]);
        assert_eq!(g.cycles_completed(), 1);
        let fifth = g.draw();
        assert!((-PI..=PI).contains(&fifth[0]));
        assert_eq!(g.unused_cells().len(), 3);
    }

    #[test]
    fn grasp_cycle_is_latin() {
        let g = LhsGrid::new(ActionKind::Grasp, 4, 8).unwrap();
        assert_eq!(g.unused_cells().len(), 4);
        for d in 0..3 {
            let mut col: Vec<usize> = g.unused_cells().iter().map(|c| c[d]).collect();
            col.sort();
            assert_eq!(col, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn release_has_one_empty_cell() {
        let mut g = LhsGrid::new(ActionKind::Release, 16, 0).unwrap();
        assert_eq!(g.unused_cells(), &[Vec::<usize>::new()]);
        assert!(g.draw().is_empty());
        assert_eq!(g.cycles_completed(), 1);
    }

    #[test]
    fn zero_strata_rejected() {
        assert!(LhsGrid::new(ActionKind::Orbit, 0, 0).is_err());
    }
}
