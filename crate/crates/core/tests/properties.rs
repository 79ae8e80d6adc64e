use proptest::prelude::*;

use pmtune_core::diagnostics::{compute_ct, iat_obm};
use pmtune_core::dist::{logsumexp, mean_var};
use pmtune_core::estimators::{exact_loglik, IsModel};
use pmtune_core::kernel::{
    first_coordinate, log_accept, run_chain, Kernel, LimitingKernel, LimitingKernelSpec,
    PseudoMarginalKernel, PseudoMarginalTarget, RandomWalkProposal,
};
use pmtune_core::linalg::{CovarianceMatrix, Matrix};
use pmtune_core::models::{toy_simulate, ToyModel};
use pmtune_core::RngStream;

fn ar1(rho: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = RngStream::new(seed, 0);
    let s = (1.0 - rho * rho).sqrt();
    let mut x = 0.0;
    (0..n)
        .map(|_| {
            x = rho * x + s * rng.std_normal();
            x
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn logsumexp_shifts(v in prop::collection::vec(-50.0f64..50.0, 1..20), c in -100.0f64..100.0) {
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        prop_assert!((logsumexp(&shifted) - logsumexp(&v) - c).abs() < 1e-12 * (1.0 + c.abs()));
    }

    #[test]
    fn iat_is_affine_invariant(seed in 0u64..1000, a in prop::sample::select(vec![-3.0, -0.5, 0.01, 2.0, 40.0]), c in -10.0f64..10.0) {
        let x = ar1(0.6, 5_000, seed);
        let y: Vec<f64> = x.iter().map(|v| a * v + c).collect();
        let (ix, iy) = (iat_obm(&x, None).unwrap().iat, iat_obm(&y, None).unwrap().iat);
        prop_assert!((ix - iy).abs() <= 1e-9 * ix);
    }

    #[test]
    fn ct_decreases_in_sigma(iat in 1.0f64..500.0, s in 0.05f64..4.0, ds in 1e-3f64..1.0) {
        prop_assert!(compute_ct(iat, s + ds).unwrap() < compute_ct(iat, s).unwrap());
    }

    #[test]
    fn log_accept_is_capped(r in -20.0f64..20.0, z1 in -5.0f64..5.0, z0 in -5.0f64..5.0) {
        let a = log_accept(r, 0.0, z1, z0);
        prop_assert!(a <= 0.0);
        prop_assert_eq!(a, (r + z1 - z0).min(0.0));
        prop_assert_eq!(log_accept(f64::NEG_INFINITY, 0.0, z1, z0), f64::NEG_INFINITY);
    }

    #[test]
    fn rejections_leave_state_untouched(d in 1usize..6, sigma in 0.0f64..3.0, seed in 0u64..10_000) {
        let mut k = LimitingKernel::new(LimitingKernelSpec::new(d, 2.4, sigma).unwrap()).unwrap();
        let mut rng = RngStream::new(seed, 1);
        let mut state = k.stationary_init(&mut rng);
        for _ in 0..200 {
            let before = state.clone();
            if !k.step(&mut state, &mut rng).unwrap() {
                prop_assert_eq!(state.theta.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                                before.theta.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
                prop_assert_eq!(state.z.to_bits(), before.z.to_bits());
                prop_assert_eq!(state.log_post_hat.to_bits(), before.log_post_hat.to_bits());
            }
        }
    }

    #[test]
    fn streams_are_pure_functions_of_their_key(seed in any::<u64>(), i in any::<u64>(), j in any::<u64>()) {
        let mut a = RngStream::indexed(seed, &[i, j]);
        let mut b = RngStream::indexed(seed, &[i, j]);
        for _ in 0..16 {
            prop_assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
    }
}

#[test]
fn stationary_moments_persist() {
    // started at stationarity, the law of (θ̃, z) must not drift
    let sigma = 1.2;
    let spec = LimitingKernelSpec::new(2, 2.2, sigma).unwrap();
    let reps = 20_000;
    for k in [10, 100] {
        let mut th = Vec::with_capacity(reps);
        let mut zs = Vec::with_capacity(reps);
        for r in 0..reps as u64 {
            let mut kernel = LimitingKernel::new(spec.clone()).unwrap();
            let mut rng = RngStream::indexed(77, &[k as u64, r]);
            let mut s = kernel.stationary_init(&mut rng);
            for _ in 0..k {
                kernel.step(&mut s, &mut rng).unwrap();
            }
            th.push(s.theta[0]);
            zs.push(s.z);
        }
        let (mt, vt) = mean_var(&th);
        let (mz, vz) = mean_var(&zs);
        let se = |v: f64| (v / reps as f64).sqrt();
        assert!(mt.abs() < 4.0 * se(vt), "k={k}: mean θ {mt}");
        assert!(
            (mz - 0.5 * sigma * sigma).abs() < 4.0 * se(vz),
            "k={k}: mean z {mz}"
        );
        // var of a sample variance ≈ 2v²/n
        assert!(
            (vt - 1.0).abs() < 4.0 * (2.0 / reps as f64).sqrt(),
            "k={k}: var θ {vt}"
        );
        assert!(
            (vz - sigma * sigma).abs() < 4.0 * sigma * sigma * (2.0 / reps as f64).sqrt(),
            "k={k}: var z {vz}"
        );
    }
}

struct ExactToy(ToyModel);

impl PseudoMarginalTarget for ExactToy {
    fn dim(&self) -> usize {
        1
    }
    fn log_prior(&self, theta: &[f64]) -> f64 {
        self.0.log_prior(theta)
    }
    fn log_likelihood_estimate(
        &self,
        theta: &[f64],
        _rng: &mut RngStream,
    ) -> pmtune_core::Result<f64> {
        Ok(exact_loglik(&self.0, theta).unwrap())
    }
}

#[test]
fn exact_toy_chain_matches_ideal_random_walk() {
    // RWM on a Gaussian target with step sd 2 × posterior sd accepts with
    // probability (2/π)·atan(1) = 1/2
    let t = 50;
    let y = toy_simulate(0.5, t, &mut RngStream::new(12, 0));
    let model = ToyModel::new(y, 1e10).unwrap();
    let (mean, var) = model.posterior();
    let cov = CovarianceMatrix::new(Matrix::diagonal(&[var])).unwrap();
    let mut k =
        PseudoMarginalKernel::new(ExactToy(model), RandomWalkProposal::new(2.0, cov).unwrap())
            .unwrap();
    let mut rng = RngStream::new(12, 1);
    let init = k.initialize(&[mean], &mut rng).unwrap();
    let tr = run_chain(init, &mut k, 100_000, 1000, &mut rng, first_coordinate).unwrap();
    assert!(
        (tr.acceptance_rate() - 0.5).abs() < 0.03,
        "{}",
        tr.acceptance_rate()
    );
}
