#![allow(dead_code)]

use std::sync::OnceLock;

use intergen::econ::EconomyParams;
use intergen::ergodic::{invariant, ErgodicDistribution, DEFAULT_BINS};
use intergen::planner::{solve, PlannerSolution, SolverConfig};

pub fn example1() -> &'static PlannerSolution {
    static S: OnceLock<PlannerSolution> = OnceLock::new();
    S.get_or_init(|| solve(&EconomyParams::example1(), &SolverConfig::default()).unwrap())
}

pub fn three_state() -> &'static PlannerSolution {
    static S: OnceLock<PlannerSolution> = OnceLock::new();
    S.get_or_init(|| solve(&EconomyParams::three_state(), &SolverConfig::default()).unwrap())
}

pub fn example1_dist() -> &'static ErgodicDistribution {
    static D: OnceLock<ErgodicDistribution> = OnceLock::new();
    D.get_or_init(|| invariant(example1(), DEFAULT_BINS, 1e-8).unwrap())
}

pub fn three_state_dist() -> &'static ErgodicDistribution {
    static D: OnceLock<ErgodicDistribution> = OnceLock::new();
    D.get_or_init(|| invariant(three_state(), DEFAULT_BINS, 1e-8).unwrap())
}

/// Promise after n consecutive state-2 draws from the state-1 reset point.
pub fn ladder_promise(sol: &PlannerSolution, n: usize) -> f64 {
    use intergen::policy::PromisePolicy;
    let mut w = sol.decide(0, sol.omega0[0]).promises[1];
    for _ in 0..n {
        w = sol.decide(1, w).promises[1];
    }
    w
}
