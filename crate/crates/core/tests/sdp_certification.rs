mod common;

use ris_twr::sdp::{self, ConstraintMatrix, SdpProblem, Sense, SolverConfig};
use ris_twr::linalg::{CMat, C64};

#[test]
fn phase_sdps_satisfy_kkt() {
    let (count, failures, worst, dominance) = common::certification_suite(20, 101);
    assert_eq!(failures, 0, "{failures}/{count} failed, worst KKT {worst:e}, dominance {dominance}");
}

#[test]
fn dense_and_low_rank_rows_agree() {
    for seed in 0..5 {
        let ch = common::physical_instance(seed, 2, 3, 3);
        let a = common::certify_phase_sdp(&ch, false, 0, 0);
        let b = common::certify_phase_sdp(&ch, true, 0, 0);
        assert!(a.optimal && b.optimal);
        assert!(a.worst_kkt() < 1e-6 && b.worst_kkt() < 1e-6);
    }
}

#[test]
fn diagonal_instance_has_known_optimum() {
    // max t, diag(X) = 1, tr(E11 X) ≥ t, tr(E22 X) ≥ t  gives t = 1.
    let mut p = SdpProblem::new(3, true);
    for j in 0..2 {
        let mut m = CMat::zeros(3, 3);
        m[(j, j)] = C64::from(1.0);
        p.push(ConstraintMatrix::Dense(m), Sense::Geq, 0.0, 1.0);
    }
    let s = sdp::solve(&p, &SolverConfig::default()).unwrap();
    assert!((s.t_opt - 1.0).abs() < 1e-6, "{}", s.t_opt);
}
