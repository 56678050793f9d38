//! Benchmark fixtures shared by the criterion targets.

use paraopt::{
    build_propagator, make_heat_problem, AffinePropagator, LinearControlProblem, ObjectiveKind,
    PropagatorKind, TimeDecomposition,
};

/// Heat problem on an `n × n` grid with `l_hat` unknown intervals, ten fine
/// steps and one coarse step per interval.
pub struct HeatFixture {
    pub problem: LinearControlProblem,
    pub decomp: TimeDecomposition,
    pub fine: AffinePropagator,
    pub coarse: AffinePropagator,
}

impl HeatFixture {
    pub fn new(n: usize, l_hat: usize, objective: ObjectiveKind) -> Self {
        let problem = make_heat_problem(n, 0.05, 2.0, objective).expect("heat problem");
        let intervals = match objective {
            ObjectiveKind::Tracking => l_hat + 1,
            ObjectiveKind::TerminalCost => l_hat,
        };
        let decomp = TimeDecomposition::new(objective, 2.0, intervals, 10, 1).expect("decomposition");
        let fine = build_propagator(&problem, &decomp, PropagatorKind::ie(10)).expect("fine");
        let coarse = build_propagator(&problem, &decomp, PropagatorKind::ie(1)).expect("coarse");
        HeatFixture { problem, decomp, fine, coarse }
    }
}
