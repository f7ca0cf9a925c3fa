use erc_core::capacity::{ipc, memory_capacity, CapacityOptions, MemoryOptions};
use erc_core::dynamics::{
    rk4_step, uniform_inputs, DriveSequence, EsnSpec, LorenzForm, OdeKind, OdeSpec, StateVector,
    SystemSpec,
};
use erc_core::ensemble::{
    ensemble_observe, time_invariance_check, trial_rng, EnsembleConfig, FeatureMatrix, Observable,
    ObservationFn, ObserveOptions,
};
use erc_core::lyapunov::{max_lyapunov, LyapunovConfig};
use erc_core::readout::fit_and_score;

fn esn(nodes: usize, rho: f64, noise: f64, seed: u64) -> SystemSpec {
    let mut rng = trial_rng(seed, 0);
    SystemSpec::Esn(EsnSpec::random(nodes, rho, 0.1, noise, &mut rng).unwrap())
}

fn drive(len: usize, seed: u64) -> Vec<f64> {
    uniform_inputs(len, 0.0, 1.0, &mut trial_rng(seed, u64::MAX as usize))
}

fn averaged(spec: &SystemSpec, trials: usize, u: &[f64], washout: usize) -> FeatureMatrix {
    let cfg = EnsembleConfig::uniform(trials, 11, true);
    let obs = Observable::all_identity(spec.dim());
    let avg = ensemble_observe(spec, &cfg, u, washout, &obs, &ObserveOptions::default()).unwrap();
    FeatureMatrix::from_unnamed(avg.means).unwrap()
}

fn mc(features: &FeatureMatrix, u: &[f64]) -> f64 {
    let opts = MemoryOptions {
        tau_max: 20,
        surrogates: 20,
        ..MemoryOptions::default()
    };
    memory_capacity(features, u, &opts).unwrap().mc
}

#[test]
fn averaging_recovers_memory_lost_to_noise() {
    let (washout, len) = (200, 2200);
    let u = drive(len, 3);
    let clean = mc(
        &averaged(&esn(20, 0.9, 0.0, 1), 1, &u, washout),
        &u[washout..],
    );
    let noisy_spec = esn(20, 0.9, 0.05, 1);
    let single = mc(&averaged(&noisy_spec, 1, &u, washout), &u[washout..]);
    let ensemble = mc(&averaged(&noisy_spec, 300, &u, washout), &u[washout..]);
    assert!(single < 0.7 * clean, "single {single} clean {clean}");
    assert!(
        ensemble > single + 0.5 * (clean - single),
        "ensemble {ensemble} single {single} clean {clean}"
    );
}

#[test]
fn averages_do_not_depend_on_thread_count() {
    let spec = esn(10, 0.9, 0.1, 2);
    let u = drive(600, 4);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| averaged(&spec, 64, &u, 100))
    };
    let (a, b) = (run(1), run(4));
    for j in 0..a.ncols() {
        let same = a
            .column(j)
            .iter()
            .zip(b.column(j))
            .all(|(x, y)| x.to_bits() == y.to_bits());
        assert!(same, "column {j} differs");
    }
}

#[test]
fn repeated_block_gives_matching_averages() {
    let spec = esn(10, 0.8, 0.2, 5);
    let mut u = drive(900, 6);
    u.copy_within(300..500, 600);
    let cfg = EnsembleConfig::uniform(400, 7, true);
    let obs = Observable::new(0, ObservationFn::identity());
    let r = time_invariance_check(&spec, &cfg, obs, &u, 400..500, 700..800, 100).unwrap();
    assert!(r.max_deviation <= 5.0 * r.standard_error(), "{r:?}");
}

#[test]
fn esn_capacity_is_within_rank_and_readout_learns_delay() {
    let spec = esn(12, 0.9, 0.0, 8);
    let u = drive(4100, 9);
    let x = averaged(&spec, 1, &u, 100);
    let r = &u[100..];
    let opts = CapacityOptions {
        max_degree: 2,
        max_delay: 8,
        surrogates: 20,
        ..CapacityOptions::default()
    };
    let report = ipc(&x, r, &opts).unwrap();
    assert!(
        report.within_rank_bound(1e-6),
        "{} > {}",
        report.total,
        report.rank
    );
    assert!(report.ipc_total() > 2.0);

    let target: Vec<f64> = (1..r.len()).map(|t| r[t - 1]).collect();
    let rows = x.slice_rows(1..x.rows());
    let n = target.len() / 2;
    let (train, test) = (rows.slice_rows(0..n), rows.slice_rows(n..target.len()));
    let (_, fit) =
        fit_and_score((&train, &target[..n]), Some((&test, &target[n..])), 1e-8).unwrap();
    assert!(fit.test_nmse.unwrap() < 0.05, "{fit:?}");
}

#[test]
fn synchronizing_esn_has_negative_conditional_exponent() {
    let spec = esn(30, 0.94, 0.0, 10);
    let cfg = LyapunovConfig {
        total_steps: 5000,
        ..LyapunovConfig::default()
    };
    let u = drive(cfg.total_steps + cfg.transient, 12);
    let lambda = max_lyapunov(
        &spec,
        &DriveSequence::noiseless(u),
        &StateVector::zeros(30),
        &cfg,
    )
    .unwrap();
    assert!(lambda < 0.0, "{lambda}");
}

#[test]
fn lorenz_exponent_is_insensitive_to_initial_separation() {
    let spec = SystemSpec::Ode(OdeSpec::lorenz(LorenzForm::Conventional));
    let u = uniform_inputs(101_000, -1.0, 1.0, &mut trial_rng(13, 0));
    let drive = DriveSequence::noiseless(u);
    let init = StateVector::new(vec![1.0, 1.0, 20.0]);
    let at = |epsilon0| {
        let cfg = LyapunovConfig {
            total_steps: 100_000,
            epsilon0,
            ..LyapunovConfig::default()
        };
        max_lyapunov(&spec, &drive, &init, &cfg).unwrap()
    };
    for e in [1e-6, 1e-7, 1e-8] {
        let (a, b) = (at(e), at(e / 2.0));
        assert!(
            a > 0.5 && (a - b).abs() <= 0.02 * a.abs(),
            "eps {e}: {a} vs {b}"
        );
    }
}

#[test]
fn rk4_is_fourth_order_on_lorenz() {
    let spec_at = |dt| {
        OdeSpec::new(
            OdeKind::Lorenz {
                sigma: 10.0,
                rho: 28.0,
                beta: 8.0 / 3.0,
                iota: 0.0,
                form: LorenzForm::Conventional,
            },
            dt,
        )
        .unwrap()
    };
    let x0 = StateVector::new(vec![1.0, 2.0, 20.0]);
    let integrate = |dt: f64, steps: usize| {
        let spec = spec_at(dt);
        (0..steps).fold(x0.clone(), |x, _| rk4_step(&spec, &x, 0.0, 0.0).unwrap())
    };
    let reference = integrate(0.01 / 16.0, 320);
    let err = |dt: f64| {
        let steps = (0.2 / dt).round() as usize;
        let x = integrate(dt, steps);
        x.components
            .iter()
            .zip(&reference.components)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let ratio = err(0.02) / err(0.01);
    assert!((14.0..=18.0).contains(&ratio), "{ratio}");
}

#[test]
fn radial_stuart_landau_settles_on_sqrt_alpha() {
    for alpha in [0.5, 1.0, 2.0] {
        let spec = OdeSpec::new(
            OdeKind::StuartLandauRadial {
                alpha,
                beta: 1.0,
                sigma: 0.0,
            },
            0.01,
        )
        .unwrap();
        let x = (0..5000).fold(StateVector::new(vec![0.3, 0.1]), |x, _| {
            rk4_step(&spec, &x, 1.0, 0.0).unwrap()
        });
        let r = x.components[0].hypot(x.components[1]);
        assert!((r - alpha.sqrt()).abs() < 1e-6, "alpha {alpha}: r = {r}");
    }
}
