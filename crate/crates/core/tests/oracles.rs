mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ris_twr::multi::gsm_ob;
use ris_twr::single::{gsm_single, sum_single, OptConfig};

#[test]
fn single_antenna_designs_near_grid_optimum() {
    let pw = common::unit_power();
    let cfg = OptConfig::default();
    for seed in 0..6 {
        let ch = common::unit_instance(500 + seed, 1, 2);
        let best = common::single_grid_optimum(&ch, &pw, 180);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sum = sum_single(&ch, &pw, &cfg, &mut rng).unwrap();
        let gsm = gsm_single(&ch, &pw, &cfg, &mut rng).unwrap();
        let phi: Vec<_> = gsm.phi.phi().iter().copied().collect();
        let direct = common::single_min_snr(&ch, &phi, &pw);
        assert!((direct - gsm.min_snr).abs() <= 1e-9 * direct, "evaluator mismatch");
        assert!(sum.min_snr >= 0.95 * best && gsm.min_snr >= 0.95 * best, "{} {} {best}", sum.min_snr, gsm.min_snr);
    }
}

#[test]
fn joint_design_near_grid_optimum() {
    let pw = common::unit_power();
    let cfg = OptConfig::default();
    let ch = common::unit_instance(900, 2, 2);
    let best = common::joint_grid_optimum(&ch, &pw, 18, 10, 2, &cfg);
    let d = gsm_ob(&ch, &pw, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert!(d.min_snr >= 0.95 * best, "{} vs {best}", d.min_snr);
}
