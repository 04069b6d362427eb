//! Region projection against clip-pattern enumeration; bound search on
//! linear surrogates against the LP optimum over the region.

mod common;

use common::projection_by_enumeration;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uc_screen_core::lp::{solve_lp, LpProblem, LpStatus, Relation, Sense};
use uc_screen_core::pga::{project_box_level, CostSurrogate};
use uc_screen_core::{project_region, run_pga, LoadRegion, LoadVector, PgaConfig, Result};

pub struct Linear {
    pub c: Vec<f64>,
    pub offset: f64,
}

impl CostSurrogate for Linear {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn value(&self, load: &[f64]) -> Result<f64> {
        Ok(self.offset + self.c.iter().zip(load).map(|(a, b)| a * b).sum::<f64>())
    }
    fn gradient(&self, _load: &[f64]) -> Result<Vec<f64>> {
        Ok(self.c.clone())
    }
}

fn lp_max_over_region(c: &[f64], region: &LoadRegion) -> f64 {
    let (lo, hi) = region.box_bounds();
    let mut p = LpProblem::new(Sense::Max, c.to_vec());
    p.bounds = lo.into_iter().zip(hi).collect();
    p.add(vec![1.0; c.len()], Relation::Eq, region.level);
    let sol = solve_lp(&p).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    sol.objective_value
}

#[test]
fn projection_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for case in 0..100 {
        let n = rng.gen_range(1..=6);
        let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|l| l + rng.gen_range(0.0..6.0)).collect();
        let level = rng.gen_range(lo.iter().sum::<f64>()..=hi.iter().sum::<f64>());
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..15.0)).collect();
        let got = project_box_level(&v, &lo, &hi, level).unwrap();
        let want = projection_by_enumeration(&v, &lo, &hi, level).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-7, "case {case}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn pga_on_linear_surrogate_reaches_the_lp_maximum() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for case in 0..20 {
        let n = rng.gen_range(2..=8);
        let nominal = LoadVector::new((0..n).map(|_| rng.gen_range(5.0..50.0)).collect()).unwrap();
        let region = LoadRegion::around(nominal, rng.gen_range(0.05..1.0)).unwrap();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let model = Linear { c: c.clone(), offset: 100.0 };
        let res = run_pga(&model, &region, &PgaConfig { seed: case, ..Default::default() }).unwrap();
        let want = 100.0 + lp_max_over_region(&c, &region);
        assert!((res.bound - want).abs() <= 1e-6 * want.abs(), "case {case}: {} vs {want}", res.bound);
        assert!(region.contains(res.argmax_load.as_slice(), 1e-9));
    }
}

proptest! {
    #[test]
    fn projection_is_idempotent_and_feasible(
        nominal in prop::collection::vec(0.0f64..100.0, 1..10),
        r in 0.0f64..1.0,
        shift in prop::collection::vec(-200.0f64..200.0, 10),
    ) {
        let region = LoadRegion::around(LoadVector::new(nominal.clone()).unwrap(), r).unwrap();
        let v: Vec<f64> = nominal.iter().zip(&shift).map(|(a, b)| a + b).collect();
        let once = project_region(&v, &region).unwrap();
        prop_assert!(region.contains(once.as_slice(), 1e-9));
        let twice = project_region(once.as_slice(), &region).unwrap();
        for (a, b) in once.as_slice().iter().zip(twice.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }
}
