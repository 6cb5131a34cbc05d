//! The throttle-target ladder and the bandit's action space.

/// Default ladder of admissible throttle-ratio targets.
pub const DEFAULT_LADDER: [f64; 9] = [0.00, 0.02, 0.04, 0.06, 0.10, 0.15, 0.20, 0.25, 0.30];

/// Sorted throttle-ratio targets `r_1 < ... < r_L`.
#[derive(Debug, Clone)]
pub struct ThrottleLadder {
    targets: Vec<f64>,
}

impl ThrottleLadder {
    pub fn new(targets: Vec<f64>) -> Result<Self, String> {
        if targets.is_empty() {
            return Err("ladder must not be empty".into());
        }
        if targets.len() > u8::MAX as usize {
            return Err("ladder too long".into());
        }
        if targets.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err("ladder targets must be finite and >= 0".into());
        }
        if targets.windows(2).any(|w| w[0] >= w[1]) {
            return Err("ladder targets must be strictly increasing".into());
        }
        Ok(Self { targets })
    }

    pub fn len(&self) -> u8 {
        self.targets.len() as u8
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn max_target(&self) -> f64 {
        *self.targets.last().unwrap()
    }

    /// Target at a 1-based rung index.
    pub fn target(&self, index: u8) -> f64 {
        self.targets[index as usize - 1]
    }
}

impl Default for ThrottleLadder {
    fn default() -> Self {
        Self::new(DEFAULT_LADDER.to_vec()).unwrap()
    }
}

/// One bandit action: a pair of 1-based ladder indices, the first for the
/// high-usage service group and the second for the low-usage group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionPair {
    pub i: u8,
    pub j: u8,
}

impl ActionPair {
    pub fn new(i: u8, j: u8) -> Self {
        debug_assert!(i >= 1 && j >= 1);
        Self { i, j }
    }

    /// All `L^2` actions, in (i, j) order.
    pub fn all(ladder_len: u8) -> impl Iterator<Item = ActionPair> {
        (1..=ladder_len).flat_map(move |i| (1..=ladder_len).map(move |j| ActionPair { i, j }))
    }

    /// Dense index in `0..L^2`.
    pub fn flat_index(&self, ladder_len: u8) -> usize {
        (self.i as usize - 1) * ladder_len as usize + (self.j as usize - 1)
    }

    /// The up-to-four single-step neighbors, in the fixed order
    /// `(i, j-1), (i, j+1), (i-1, j), (i+1, j)`; out-of-range slots are
    /// `None`.
    pub fn neighbors(&self, ladder_len: u8) -> [Option<ActionPair>; 4] {
        let (i, j) = (self.i, self.j);
        [
            (j > 1).then(|| ActionPair::new(i, j - 1)),
            (j < ladder_len).then(|| ActionPair::new(i, j + 1)),
            (i > 1).then(|| ActionPair::new(i - 1, j)),
            (i < ladder_len).then(|| ActionPair::new(i + 1, j)),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_ladder_endpoints_map_to_targets() {
        let ladder = ThrottleLadder::default();
        assert_eq!(ladder.len(), 9);
        assert_eq!(ladder.target(1), 0.00);
        assert_eq!(ladder.target(9), 0.30);
        assert_eq!(ladder.target(5), 0.10);
    }

    #[test]
    fn ladder_rejects_unsorted_or_negative_targets() {
        assert!(ThrottleLadder::new(vec![0.0, 0.0]).is_err());
        assert!(ThrottleLadder::new(vec![0.2, 0.1]).is_err());
        assert!(ThrottleLadder::new(vec![-0.1, 0.1]).is_err());
        assert!(ThrottleLadder::new(vec![]).is_err());
    }

    #[test]
    fn action_space_has_81_actions() {
        assert_eq!(ActionPair::all(9).count(), 81);
        let flats: Vec<usize> = ActionPair::all(9).map(|a| a.flat_index(9)).collect();
        assert_eq!(flats, (0..81).collect::<Vec<_>>());
    }

    #[test]
    fn interior_action_has_four_neighbors_and_corner_has_two() {
        let interior = ActionPair::new(3, 5).neighbors(9);
        assert!(interior.iter().all(|n| n.is_some()));
        assert_eq!(interior[0], Some(ActionPair::new(3, 4)));
        assert_eq!(interior[1], Some(ActionPair::new(3, 6)));
        assert_eq!(interior[2], Some(ActionPair::new(2, 5)));
        assert_eq!(interior[3], Some(ActionPair::new(4, 5)));

        let corner = ActionPair::new(1, 1).neighbors(9);
        assert_eq!(corner.iter().flatten().count(), 2);
    }
}
