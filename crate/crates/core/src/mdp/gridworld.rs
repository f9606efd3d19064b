//! Grid navigation diagnostic: a 6x6 grid, start at (1, 1), goal at (6, 6),
//! cheap rewards along one monotone route and expensive rewards elsewhere.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TabularMdp;
use crate::error::{Error, Result};
use crate::rng::derive;

/// 1-based `(x, y)` grid coordinate; `x` grows to the right, `y` upwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    fn adjacent(self, other: Cell) -> bool {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y) == 1
    }
}

/// Action indices of the grid MDP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridAction {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
}

impl GridAction {
    pub const ALL: [GridAction; 4] = [
        GridAction::Up,
        GridAction::Down,
        GridAction::Left,
        GridAction::Right,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(a: usize) -> Option<Self> {
        Self::ALL.get(a).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridworldSpec {
    pub width: usize,
    pub height: usize,
    pub start: Cell,
    pub goal: Cell,
    pub route: Vec<Cell>,
    pub on_route_reward_range: [f64; 2],
    pub off_route_reward_range: [f64; 2],
    pub gamma: f64,
    /// Minimum optimal-action advantage required at every non-goal route
    /// state; reward draws failing it (or not making the route optimal) are
    /// redrawn from the next seeded stream.
    #[serde(default = "default_route_margin")]
    pub route_margin: f64,
    pub seed: u64,
}

pub const GRIDWORLD_GAMMA: f64 = 0.9;
pub const ROUTE_MARGIN: f64 = 0.02;
const MAX_REWARD_DRAWS: u64 = 10_000;

fn default_route_margin() -> f64 {
    ROUTE_MARGIN
}

impl GridworldSpec {
    /// 6x6 layout with a seeded random right/up staircase route.
    pub fn standard(seed: u64) -> Self {
        let (width, height) = (6, 6);
        let mut moves: Vec<(usize, usize)> = vec![(1, 0); width - 1];
        moves.extend(vec![(0, 1); height - 1]);
        moves.shuffle(&mut derive(seed, 0));
        let mut cell = Cell::new(1, 1);
        let mut route = vec![cell];
        for (dx, dy) in moves {
            cell = Cell::new(cell.x + dx, cell.y + dy);
            route.push(cell);
        }
        Self {
            width,
            height,
            start: Cell::new(1, 1),
            goal: Cell::new(width, height),
            route,
            on_route_reward_range: [-0.1, 0.0],
            off_route_reward_range: [-1.0, -0.1],
            gamma: GRIDWORLD_GAMMA,
            route_margin: ROUTE_MARGIN,
            seed,
        }
    }

    pub fn n_states(&self) -> usize {
        self.width * self.height
    }

    pub fn state_of(&self, cell: Cell) -> usize {
        (cell.y - 1) * self.width + (cell.x - 1)
    }

    pub fn cell_of(&self, state: usize) -> Cell {
        Cell::new(state % self.width + 1, state / self.width + 1)
    }

    pub fn goal_state(&self) -> usize {
        self.state_of(self.goal)
    }

    /// Route states in order, start first and goal last.
    pub fn route_states(&self) -> Vec<usize> {
        self.route.iter().map(|&c| self.state_of(c)).collect()
    }

    pub fn on_route(&self, state: usize) -> bool {
        self.route.contains(&self.cell_of(state))
    }

    /// Action that moves along the route from route index `i` to `i + 1`.
    pub fn route_action(&self, i: usize) -> Option<GridAction> {
        let (a, b) = (self.route.get(i)?, self.route.get(i + 1)?);
        Some(match (b.x as isize - a.x as isize, b.y as isize - a.y as isize) {
            (0, 1) => GridAction::Up,
            (0, -1) => GridAction::Down,
            (-1, 0) => GridAction::Left,
            _ => GridAction::Right,
        })
    }

    pub fn step_cell(&self, cell: Cell, action: GridAction) -> Cell {
        let Cell { x, y } = cell;
        match action {
            GridAction::Up if y < self.height => Cell::new(x, y + 1),
            GridAction::Down if y > 1 => Cell::new(x, y - 1),
            GridAction::Left if x > 1 => Cell::new(x - 1, y),
            GridAction::Right if x < self.width => Cell::new(x + 1, y),
            _ => cell,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |why: alloc::string::String| Err(Error::InvalidGridworld(why));
        if self.width == 0 || self.height == 0 {
            return bad(format!("empty grid {}x{}", self.width, self.height));
        }
        let in_bounds = |c: &Cell| c.x >= 1 && c.x <= self.width && c.y >= 1 && c.y <= self.height;
        if !in_bounds(&self.start) || !in_bounds(&self.goal) {
            return bad("start or goal outside the grid".into());
        }
        if let Some(c) = self.route.iter().find(|c| !in_bounds(c)) {
            return bad(format!("route cell ({}, {}) outside the grid", c.x, c.y));
        }
        if self.route.first() != Some(&self.start) || self.route.last() != Some(&self.goal) {
            return bad("route must start at start and end at goal".into());
        }
        for w in self.route.windows(2) {
            let monotone = w[1].x >= w[0].x && w[1].y >= w[0].y;
            if !w[0].adjacent(w[1]) || !monotone {
                return bad(format!(
                    "route step ({}, {}) -> ({}, {}) is not a right/up move",
                    w[0].x, w[0].y, w[1].x, w[1].y
                ));
            }
        }
        for (name, r) in [
            ("on-route", self.on_route_reward_range),
            ("off-route", self.off_route_reward_range),
        ] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                return bad(format!("{name} reward range [{}, {}] is invalid", r[0], r[1]));
            }
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma {} outside [0, 1)", self.gamma));
        }
        if self.route_margin.is_nan() || self.route_margin < 0.0 {
            return bad(format!("route margin {} is negative", self.route_margin));
        }
        Ok(())
    }

    /// One per-state reward draw (the goal gets 0) from seeded stream `draw`.
    pub fn state_rewards(&self, draw: u64) -> Vec<f64> {
        let mut rng = derive(self.seed, 1 + draw);
        let goal = self.goal_state();
        (0..self.n_states())
            .map(|s| {
                let [lo, hi] = if self.on_route(s) {
                    self.on_route_reward_range
                } else {
                    self.off_route_reward_range
                };
                // one draw per state regardless of role keeps streams aligned
                let u: f64 = rng.gen();
                if s == goal {
                    0.0
                } else {
                    lo + (hi - lo) * u
                }
            })
            .collect()
    }
}

/// Deterministic 4-action grid MDP; walls keep the agent in place, the goal
/// is absorbing with reward 0 and every other state pays its drawn reward for
/// all actions.
///
/// Reward draws are repeated (deterministically, from successive streams of
/// `spec.seed`) until the greedy optimal policy walks the route with an
/// action advantage of at least `spec.route_margin` at every route state.
pub fn build_gridworld(spec: &GridworldSpec) -> Result<TabularMdp> {
    spec.validate()?;
    for draw in 0..MAX_REWARD_DRAWS {
        let rewards = spec.state_rewards(draw);
        if route_is_optimal(spec, &rewards) {
            return assemble(spec, &rewards);
        }
    }
    Err(Error::InvalidGridworld(format!(
        "no reward draw in {MAX_REWARD_DRAWS} made the route optimal with margin {}",
        spec.route_margin
    )))
}

/// Route optimality check on the deterministic grid dynamics directly.
fn route_is_optimal(spec: &GridworldSpec, state_reward: &[f64]) -> bool {
    let n = spec.n_states();
    let goal = spec.goal_state();
    let next: Vec<[usize; 4]> = (0..n)
        .map(|s| GridAction::ALL.map(|a| spec.state_of(spec.step_cell(spec.cell_of(s), a))))
        .collect();
    let q = |v: &[f64], s: usize, a: usize| state_reward[s] + spec.gamma * v[next[s][a]];
    let mut v = vec![0.0; n];
    loop {
        let mut diff: f64 = 0.0;
        for s in (0..n).filter(|&s| s != goal) {
            let best = (0..4).map(|a| q(&v, s, a)).fold(f64::NEG_INFINITY, f64::max);
            diff = diff.max((best - v[s]).abs());
            v[s] = best;
        }
        if spec.gamma * diff <= 1e-12 {
            break;
        }
    }
    let route = spec.route_states();
    route[..route.len() - 1].iter().enumerate().all(|(i, &s)| {
        let Some(action) = spec.route_action(i) else {
            return false;
        };
        let target = q(&v, s, action.index());
        let runner_up = (0..4)
            .filter(|&a| a != action.index())
            .map(|a| q(&v, s, a))
            .fold(f64::NEG_INFINITY, f64::max);
        target - runner_up >= spec.route_margin.max(1e-9)
    })
}

fn assemble(spec: &GridworldSpec, state_reward: &[f64]) -> Result<TabularMdp> {
    let n = spec.n_states();
    let n_actions = GridAction::ALL.len();
    let goal = spec.goal_state();
    let mut transition = vec![0.0; n * n_actions * n];
    let mut reward = vec![0.0; n * n_actions];
    for s in 0..n {
        for action in GridAction::ALL {
            let a = action.index();
            let next = if s == goal {
                goal
            } else {
                spec.state_of(spec.step_cell(spec.cell_of(s), action))
            };
            transition[(s * n_actions + a) * n + next] = 1.0;
            reward[s * n_actions + a] = state_reward[s];
        }
    }
    let mut initial = vec![0.0; n];
    initial[spec.state_of(spec.start)] = 1.0;
    let lo = spec.on_route_reward_range[0]
        .min(spec.off_route_reward_range[0])
        .min(0.0);
    let hi = spec.on_route_reward_range[1]
        .max(spec.off_route_reward_range[1])
        .max(0.0);
    TabularMdp::with_reward_bounds(n, n_actions, transition, reward, spec.gamma, initial, (lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_route_is_a_staircase() {
        for seed in 0..20 {
            let spec = GridworldSpec::standard(seed);
            spec.validate().unwrap();
            assert_eq!(spec.route.len(), 11);
        }
    }

    #[test]
    fn rejects_non_monotone_route() {
        let mut spec = GridworldSpec::standard(0);
        spec.route.swap(3, 4);
        assert!(matches!(
            build_gridworld(&spec),
            Err(Error::InvalidGridworld(_))
        ));
        let mut spec = GridworldSpec::standard(0);
        spec.route.pop();
        assert!(build_gridworld(&spec).is_err());
    }

    #[test]
    fn reward_split_by_route() {
        let spec = GridworldSpec::standard(5);
        let mdp = build_gridworld(&spec).unwrap();
        assert_eq!((mdp.n_states(), mdp.n_actions()), (36, 4));
        let mut on = 0;
        let mut off = 0;
        for s in 0..36 {
            let r = mdp.reward(s, 0);
            for a in 1..4 {
                assert_eq!(mdp.reward(s, a), r);
            }
            if spec.on_route(s) {
                assert!((-0.1..=0.0).contains(&r));
                on += 1;
            } else {
                assert!((-1.0..=-0.1).contains(&r));
                off += 1;
            }
        }
        assert_eq!((on, off), (spec.route.len(), 36 - spec.route.len()));
        let goal = spec.goal_state();
        for a in 0..4 {
            assert_eq!(mdp.next_dist(goal, a)[goal], 1.0);
            assert_eq!(mdp.reward(goal, a), 0.0);
        }
    }

    #[test]
    fn same_seed_same_rewards() {
        let a = build_gridworld(&GridworldSpec::standard(9)).unwrap();
        let b = build_gridworld(&GridworldSpec::standard(9)).unwrap();
        assert_eq!(a.reward_table(), b.reward_table());
    }

    #[test]
    fn walls_self_loop() {
        let spec = GridworldSpec::standard(0);
        let mdp = build_gridworld(&spec).unwrap();
        let start = spec.state_of(Cell::new(1, 1));
        assert_eq!(mdp.next_dist(start, GridAction::Left.index())[start], 1.0);
        assert_eq!(mdp.next_dist(start, GridAction::Down.index())[start], 1.0);
        let right = spec.state_of(Cell::new(2, 1));
        assert_eq!(mdp.next_dist(start, GridAction::Right.index())[right], 1.0);
    }

    #[test]
    fn optimal_policy_walks_the_route_with_margin() {
        use crate::solvers::value_iteration;
        for seed in 0..10 {
            let spec = GridworldSpec::standard(seed);
            let mdp = build_gridworld(&spec).unwrap();
            let (vf, pi) = value_iteration(&mdp, 1e-12, 100_000).unwrap();
            let route = spec.route_states();
            for (i, &s) in route[..route.len() - 1].iter().enumerate() {
                let a = spec.route_action(i).unwrap().index();
                assert_eq!(pi.act(s), a, "seed {seed} route index {i}");
                for b in (0..4).filter(|&b| b != a) {
                    assert!(vf.q(s, a) - vf.q(s, b) >= ROUTE_MARGIN - 1e-9);
                }
            }
        }
    }

    #[test]
    fn impossible_margin_is_reported() {
        let mut spec = GridworldSpec::standard(0);
        spec.route_margin = 10.0;
        assert!(matches!(build_gridworld(&spec), Err(Error::InvalidGridworld(_))));
    }
}
