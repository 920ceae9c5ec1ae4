//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured quantities (run with `--nocapture` to see them).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use offload_sim::catalog::{HostStress, NetworkProfile, ParameterVector, StressProfile};
use offload_sim::config::ExperimentConfig;
use offload_sim::dataset::{build_dataset, read_dataset, write_dataset};
use offload_sim::estimators::{
    fit_mlr, fit_pmr, fit_rfr, ModelKind, RfrParams, DEFAULT_RIDGE_LAMBDA, DEFAULT_TERM_BUDGET,
};
use offload_sim::evaluation::{
    accuracy, cross_validate, kfold_split, mae, train_collective, train_individual, AccuracyMode,
    EvalData, Method, OffloadEstimator, TrainOptions,
};
use offload_sim::simulator::{
    run_experiment_grid, simulate_offload, StepKind,
};

fn default_data(seed: u64, eta: f64) -> (EvalData, Vec<offload_sim::simulator::OffloadTrace>) {
    let mut config = ExperimentConfig::paper_defaults();
    config.ground_truth.noise_eta = eta;
    let traces = run_experiment_grid(&config.grid(false), &config.ground_truth, seed).unwrap();
    let data = EvalData::new(build_dataset(&traces).unwrap());
    (data, traces)
}

fn quick_data(seed: u64) -> EvalData {
    let config = ExperimentConfig::paper_defaults();
    let traces = run_experiment_grid(&config.grid(true), &config.ground_truth, seed).unwrap();
    EvalData::new(build_dataset(&traces).unwrap())
}

fn random_valid_vector(rng: &mut ChaCha8Rng) -> ParameterVector {
    let mut values = [0.0; 21];
    for (i, v) in values.iter_mut().enumerate() {
        *v = match i + 1 {
            1..=5 | 7..=11 => rng.gen_range(0.0..100.0),
            6 | 12 => rng.gen_range(0.0..2e8),
            13 => rng.gen_range(10.0..500.0),
            14 | 17 => rng.gen_range(1..9) as f64,
            15 | 18 => rng.gen_range(1.0..64.0),
            16 | 19 => rng.gen_range(10.0..100.0),
            20 => rng.gen_range(3e6..1e9),
            21 => rng.gen_range(0.0..100.0),
            _ => unreachable!(),
        };
    }
    ParameterVector::from_array(values)
}

/// Criterion 1: the total of every simulated trace equals the component
/// sum within 1e-9 relative, over 10,000 randomized configurations, in
/// under ten seconds.
#[test]
fn criterion_01_timing_identity_on_random_traces() {
    let start = Instant::now();
    let config = ExperimentConfig::paper_defaults();
    let model = config.ground_truth;
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    for i in 0..10_000u64 {
        let platform = &config.platforms[(i % 2) as usize];
        let stress = StressProfile {
            cloud: HostStress {
                cpu: rng.gen_range(0.0..=0.75),
                memory: rng.gen_range(0.0..=0.75),
                disk: rng.gen_range(0.0..=0.75),
            },
            fog: HostStress {
                cpu: rng.gen_range(0.0..=0.75),
                memory: rng.gen_range(0.0..=0.75),
                disk: rng.gen_range(0.0..=0.75),
            },
        };
        let net = NetworkProfile {
            bandwidth_bps: rng.gen_range(1e7..1e9),
            latency_ms: rng.gen_range(0.0..100.0),
        };
        let image_mb = rng.gen_range(10.0..200.0);
        let trace = simulate_offload(
            &model,
            &platform.cloud,
            &platform.fog,
            &net,
            &stress,
            image_mb,
            i,
        )
        .unwrap();
        let sum: f64 = trace.timing.steps().iter().sum();
        let rel = (trace.timing.t_offload - sum).abs() / trace.timing.t_offload.abs().max(1e-300);
        assert!(rel <= 1e-9, "trace {i}: relative error {rel}");
        assert_eq!(
            trace.samples.len(),
            trace.timing.t_offload.ceil() as usize,
            "trace {i}: sample count"
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("criterion 1: PASS (10000 traces, {elapsed:?})");
}

/// Criterion 2: for every model kind, the individual estimator's total
/// equals the sum of its five component predictions within 1e-9 relative
/// on 1,000 random instances.
#[test]
fn criterion_02_im_total_is_component_sum() {
    let data = quick_data(0xC2);
    let opts = TrainOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2C2);
    let probes: Vec<ParameterVector> = (0..1000).map(|_| random_valid_vector(&mut rng)).collect();
    for kind in ModelKind::ALL {
        let estimator = train_individual(&data, kind, &opts, 2).unwrap();
        for pv in &probes {
            let prediction = estimator.predict(pv).unwrap();
            let sum: f64 = prediction.per_step.iter().sum();
            let rel = (prediction.total - sum).abs() / sum.abs().max(1e-300);
            assert!(rel <= 1e-9, "{kind}: rel {rel}");
        }
    }
    println!("criterion 2: PASS (4 kinds x 1000 instances)");
}

/// Criterion 3: component masks isolate their inputs exactly. Perturbing
/// the network parameters moves only the transfer component; perturbing
/// the cloud runtime parameters leaves transfer, load and start bit-equal.
#[test]
fn criterion_03_mask_isolation() {
    let data = quick_data(0xC3);
    let opts = TrainOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3C3);
    for kind in [ModelKind::Mlr, ModelKind::Pmr, ModelKind::Rfr, ModelKind::Svr] {
        let estimator = train_individual(&data, kind, &opts, 3).unwrap();
        for _ in 0..50 {
            let pv = random_valid_vector(&mut rng);
            let base = estimator.predict(&pv).unwrap();

            let mut net = pv;
            net.set(20, pv.value(20) * 1.5);
            net.set(21, pv.value(21) + 5.0);
            let moved = estimator.predict(&net).unwrap();
            for step in [StepKind::Commit, StepKind::Save, StepKind::Load, StepKind::Start] {
                assert_eq!(
                    base.per_step[step.index()].to_bits(),
                    moved.per_step[step.index()].to_bits(),
                    "{kind}: {step:?} moved with network perturbation"
                );
            }

            let mut cloud = pv;
            for p in 1..=6 {
                cloud.set(p, (pv.value(p) * 0.5) + 1.0);
            }
            let moved = estimator.predict(&cloud).unwrap();
            for step in [StepKind::Transfer, StepKind::Load, StepKind::Start] {
                assert_eq!(
                    base.per_step[step.index()].to_bits(),
                    moved.per_step[step.index()].to_bits(),
                    "{kind}: {step:?} moved with cloud perturbation"
                );
            }
        }
    }
    println!("criterion 3: PASS (4 kinds x 50 perturbed instances)");
}

/// Criterion 4: with no noise and linearized features available, MLR
/// recovers each step's closed form to 1e-3 s training MAE, and degree-1
/// PMR matches MLR to 1e-9.
#[test]
fn criterion_04_oracle_recovery() {
    let mut config = ExperimentConfig::paper_defaults();
    config.ground_truth.noise_eta = 0.0;
    let model = &config.ground_truth;
    let traces = run_experiment_grid(&config.grid(false), model, 0xC4).unwrap();

    // Linearizing feature per disk-bound step: image * cpu-contention /
    // effective-disk-throughput of the executing host; the duration is
    // affine in it. Transfer uses (image * 8e6 / bandwidth, latency);
    // start uses ln(1 + image).
    let mut worst_by_step = [0.0f64; 5];
    for step in StepKind::ALL {
        let mut x: Vec<Vec<f64>> = Vec::with_capacity(traces.len());
        let mut y: Vec<f64> = Vec::with_capacity(traces.len());
        for trace in &traces {
            let cfg = &trace.config;
            let (host, load) = match step {
                StepKind::Commit | StepKind::Save | StepKind::Transfer => {
                    (&cfg.cloud, &cfg.stress.cloud)
                }
                StepKind::Load | StepKind::Start => (&cfg.fog, &cfg.stress.fog),
            };
            let row = match step {
                StepKind::Commit | StepKind::Save | StepKind::Load => {
                    let d_eff = host.base_disk_throughput_mbps * (1.0 - model.disk_slope * load.disk);
                    vec![cfg.image_mb * (1.0 + model.cpu_slope * load.cpu) / d_eff]
                }
                StepKind::Transfer => vec![
                    cfg.image_mb * 8e6 / cfg.network.bandwidth_bps,
                    cfg.network.latency_ms,
                ],
                StepKind::Start => vec![(1.0 + cfg.image_mb).ln()],
            };
            x.push(row);
            y.push(trace.timing.steps()[step.index()]);
        }
        let linear = fit_mlr(&x, &y, DEFAULT_RIDGE_LAMBDA).unwrap();
        let poly = fit_pmr(&x, &y, 1, DEFAULT_RIDGE_LAMBDA, DEFAULT_TERM_BUDGET).unwrap();
        let mut abs_sum = 0.0;
        for (row, target) in x.iter().zip(&y) {
            let a = linear.predict(row).unwrap();
            let b = poly.predict(row).unwrap();
            assert!(
                (a - b).abs() <= 1e-9 * a.abs().max(1.0),
                "{step:?}: pmr(1) {b} != mlr {a}"
            );
            abs_sum += (a - target).abs();
        }
        let step_mae = abs_sum / y.len() as f64;
        worst_by_step[step.index()] = step_mae;
        assert!(step_mae <= 1e-3, "{step:?}: training mae {step_mae}");
    }
    println!(
        "criterion 4: PASS (per-step training MAE {:?})",
        worst_by_step
    );
}

/// Criterion 5: on the default ~836-instance noisy dataset, individual
/// models are at least as accurate as the collective model for MLR and
/// PMR, and RFR is the most accurate collective kind; the trend must hold
/// on at least 4 of 5 seeds, and one full 4x2 grid with 10-fold CV stays
/// under five minutes.
#[test]
fn criterion_05_qualitative_paper_trend() {
    let opts = TrainOptions::default();
    let mut passes = 0;
    let mut timed = None;
    for seed in 0..5u64 {
        let start = Instant::now();
        let (data, _) = default_data(seed, 0.05);
        let mut acc = std::collections::BTreeMap::new();
        for method in Method::ALL {
            for kind in ModelKind::ALL {
                let report =
                    cross_validate(&data, kind, method, 10, seed, &opts, AccuracyMode::Mape)
                        .unwrap();
                acc.insert((method, kind), report.accuracy_percent);
            }
        }
        let elapsed = start.elapsed();
        timed.get_or_insert(elapsed);

        let im_beats_cm_mlr = acc[&(Method::Im, ModelKind::Mlr)] >= acc[&(Method::Cm, ModelKind::Mlr)];
        let im_beats_cm_pmr = acc[&(Method::Im, ModelKind::Pmr)] >= acc[&(Method::Cm, ModelKind::Pmr)];
        let rfr_best_cm = ModelKind::ALL
            .iter()
            .all(|&k| acc[&(Method::Cm, ModelKind::Rfr)] >= acc[&(Method::Cm, k)]);
        let ok = im_beats_cm_mlr && im_beats_cm_pmr && rfr_best_cm;
        println!(
            "  seed {seed}: im>=cm(mlr) {im_beats_cm_mlr}, im>=cm(pmr) {im_beats_cm_pmr}, \
             rfr best cm {rfr_best_cm} ({elapsed:?})"
        );
        passes += usize::from(ok);
    }
    let timed = timed.unwrap();
    assert!(
        timed.as_secs_f64() < 300.0,
        "one full grid took {timed:?}, budget is 5 minutes"
    );
    assert!(passes >= 4, "trend held on only {passes}/5 seeds");
    println!("criterion 5: PASS ({passes}/5 seeds, first grid in {timed:?})");
}

/// Criterion 6: the default generate run produces 800..=900 instances and
/// a raw-data-point count within 15% of 21 * 836 * 65 = 1,141,140.
#[test]
fn criterion_06_default_scale_matches_bookkeeping() {
    let config = ExperimentConfig::paper_defaults();
    let traces = run_experiment_grid(&config.grid(false), &config.ground_truth, config.seed).unwrap();
    let dataset = build_dataset(&traces).unwrap();
    assert!(
        (800..=900).contains(&dataset.len()),
        "instances {}",
        dataset.len()
    );
    let total_samples: usize = traces.iter().map(|t| t.samples.len()).sum();
    let raw_points = 21 * total_samples;
    let reference = 1_141_140.0;
    let deviation = (raw_points as f64 - reference).abs() / reference;
    assert!(
        deviation <= 0.15,
        "raw points {raw_points} deviates {:.1}% from {reference}",
        100.0 * deviation
    );
    println!(
        "criterion 6: PASS ({} instances, {} raw points, {:.1}% off the reference)",
        dataset.len(),
        raw_points,
        100.0 * deviation
    );
}

/// Criterion 7: k-fold partitions are disjoint, covering and balanced for
/// 1,000 random (n, k, seed) triples, and leave-one-out cross validation
/// equals averaging singleton hold-outs on a small dataset within 1e-12.
#[test]
fn criterion_07_kfold_properties_and_loo_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC7);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=10_000usize);
        let k = rng.gen_range(2..=n);
        let seed = rng.gen::<u64>();
        let folds = kfold_split(n, k, seed).unwrap();
        assert_eq!(folds.len(), k);
        let sizes: Vec<usize> = folds.iter().map(|f| f.len()).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut seen = vec![false; n];
        for &i in folds.iter().flatten() {
            assert!(!seen[i], "index {i} in two folds");
            seen[i] = true;
        }
        assert!(seen.iter().all(|&s| s), "partition misses indices");
    }

    // Leave-one-out oracle equivalence on 24 instances.
    let (full, _) = default_data(0xC7, 0.05);
    let instances = full.dataset().instances()[..24].to_vec();
    let n = instances.len();
    let data = EvalData::new(offload_sim::Dataset::from_instances(instances).unwrap());
    let opts = TrainOptions::default();
    let report =
        cross_validate(&data, ModelKind::Mlr, Method::Cm, n, 9, &opts, AccuracyMode::Mape).unwrap();

    let mut mae_sum = 0.0;
    let mut acc_sum = 0.0;
    for i in 0..n {
        let keep: Vec<_> = (0..n)
            .filter(|&j| j != i)
            .map(|j| data.dataset().instances()[j])
            .collect();
        let train = offload_sim::Dataset::from_instances(keep).unwrap();
        let estimator = train_collective(&train, ModelKind::Mlr, &opts, 0).unwrap();
        let instance = &data.dataset().instances()[i];
        let p = estimator.predict(&instance.features).unwrap();
        let t = instance.targets.t_offload;
        mae_sum += (p - t).abs();
        acc_sum += 100.0 * (1.0 - (p - t).abs() / t).max(0.0);
    }
    let oracle_mae = mae_sum / n as f64;
    let oracle_acc = acc_sum / n as f64;
    assert!(
        (report.mae_seconds - oracle_mae).abs() <= 1e-12 * oracle_mae.max(1.0),
        "loo mae {} vs oracle {}",
        report.mae_seconds,
        oracle_mae
    );
    assert!(
        (report.accuracy_percent - oracle_acc).abs() <= 1e-12 * oracle_acc.max(1.0),
        "loo accuracy {} vs oracle {}",
        report.accuracy_percent,
        oracle_acc
    );
    println!("criterion 7: PASS (1000 partitions, LOO matches oracle)");
}

/// Criterion 8: metric sanity. Zero MAE iff 100 accuracy in both modes, a
/// constant-mean predictor scores zero r2 accuracy, and a uniform 10%
/// overprediction scores exactly 90.0 mape accuracy.
#[test]
fn criterion_08_metric_sanity() {
    let truths = [4.0, 9.0, 16.0, 25.0];
    assert_eq!(mae(&truths, &truths).unwrap(), 0.0);
    assert_eq!(accuracy(&truths, &truths, AccuracyMode::Mape).unwrap(), 100.0);
    assert_eq!(accuracy(&truths, &truths, AccuracyMode::R2).unwrap(), 100.0);

    // Any nonzero error drops accuracy strictly below 100 in both modes.
    let off = [4.0, 9.0, 16.0, 25.5];
    assert!(mae(&off, &truths).unwrap() > 0.0);
    assert!(accuracy(&off, &truths, AccuracyMode::Mape).unwrap() < 100.0);
    assert!(accuracy(&off, &truths, AccuracyMode::R2).unwrap() < 100.0);

    let mean = truths.iter().sum::<f64>() / truths.len() as f64;
    let constant = [mean; 4];
    assert_eq!(accuracy(&constant, &truths, AccuracyMode::R2).unwrap(), 0.0);

    // Powers-of-two truths keep every relative error exactly fl(0.1).
    let truths_exact = [10.0, 20.0, 40.0, 80.0];
    let preds = [11.0, 22.0, 44.0, 88.0];
    assert_eq!(
        accuracy(&preds, &truths_exact, AccuracyMode::Mape).unwrap(),
        90.0
    );
    println!("criterion 8: PASS");
}

/// Criterion 9: dataset CSV round-trips bit-exactly, estimator JSON
/// round-trips reproduce predictions within 1e-12, and repeated seeded
/// runs produce byte-identical files.
#[test]
fn criterion_09_serialization_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::paper_defaults();
    let grid = config.grid(true);

    let traces_a = run_experiment_grid(&grid, &config.ground_truth, 7).unwrap();
    let traces_b = run_experiment_grid(&grid, &config.ground_truth, 7).unwrap();
    let ds_a = build_dataset(&traces_a).unwrap();
    let ds_b = build_dataset(&traces_b).unwrap();
    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    write_dataset(&ds_a, &csv_a).unwrap();
    write_dataset(&ds_b, &csv_b).unwrap();
    assert_eq!(
        std::fs::read(&csv_a).unwrap(),
        std::fs::read(&csv_b).unwrap(),
        "repeated seeded runs differ"
    );

    let back = read_dataset(&csv_a).unwrap();
    for (x, y) in ds_a.instances().iter().zip(back.instances()) {
        for i in 1..=21 {
            assert_eq!(x.features.value(i).to_bits(), y.features.value(i).to_bits());
        }
        for (a, b) in x.targets.steps().iter().zip(y.targets.steps()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(x.targets.t_offload.to_bits(), y.targets.t_offload.to_bits());
    }

    let data = EvalData::new(ds_a);
    let opts = TrainOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC9);
    let probes: Vec<ParameterVector> = (0..64).map(|_| random_valid_vector(&mut rng)).collect();
    for kind in ModelKind::ALL {
        for method in Method::ALL {
            let estimator = match method {
                Method::Cm => {
                    OffloadEstimator::Cm(train_collective(data.dataset(), kind, &opts, 11).unwrap())
                }
                Method::Im => OffloadEstimator::Im(train_individual(&data, kind, &opts, 11).unwrap()),
            };
            let path = dir.path().join(format!("{method}-{kind}.json"));
            estimator.save_json(&path).unwrap();
            // Retraining and saving again yields identical bytes.
            let again = match method {
                Method::Cm => {
                    OffloadEstimator::Cm(train_collective(data.dataset(), kind, &opts, 11).unwrap())
                }
                Method::Im => OffloadEstimator::Im(train_individual(&data, kind, &opts, 11).unwrap()),
            };
            let path_again = dir.path().join(format!("{method}-{kind}-again.json"));
            again.save_json(&path_again).unwrap();
            assert_eq!(
                std::fs::read(&path).unwrap(),
                std::fs::read(&path_again).unwrap(),
                "{method} {kind}: retrained model bytes differ"
            );

            let reloaded = OffloadEstimator::load_json(&path).unwrap();
            for pv in &probes {
                let a = estimator.predict_total(pv).unwrap();
                let b = reloaded.predict_total(pv).unwrap();
                assert!(
                    (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                    "{method} {kind}: {a} vs {b}"
                );
            }
        }
    }
    println!("criterion 9: PASS");
}

/// Criterion 10: estimator oracles. The forest beats the linear model on
/// a step-function target, and every SVR fit satisfies dual feasibility:
/// the coefficients sum to zero within 1e-6 and respect the box.
#[test]
fn criterion_10_estimator_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xCA);
    let make = |rng: &mut ChaCha8Rng, n: usize| {
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()])
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| if r[0] > 0.5 { 10.0 } else { 0.0 })
            .collect();
        (x, y)
    };
    let (x_train, y_train) = make(&mut rng, 1000);
    let (x_test, y_test) = make(&mut rng, 400);
    let forest = fit_rfr(&x_train, &y_train, &RfrParams::default(), 1).unwrap();
    let linear = fit_mlr(&x_train, &y_train, DEFAULT_RIDGE_LAMBDA).unwrap();
    let forest_preds: Vec<f64> = x_test.iter().map(|r| forest.predict(r).unwrap()).collect();
    let linear_preds: Vec<f64> = x_test.iter().map(|r| linear.predict(r).unwrap()).collect();
    let forest_mae = mae(&forest_preds, &y_test).unwrap();
    let linear_mae = mae(&linear_preds, &y_test).unwrap();
    assert!(
        forest_mae < linear_mae,
        "forest {forest_mae} !< linear {linear_mae}"
    );

    // Dual feasibility on every SVR fit of the full IM/CM pipeline.
    let data = quick_data(0xCA);
    let opts = TrainOptions::default();
    let mut checked = 0;
    let mut feasibility = |model: &offload_sim::Model| {
        if let offload_sim::Model::Svr(svr) = model {
            let total: f64 = svr.coefficients.iter().sum();
            assert!(total.abs() <= 1e-6, "sum of dual coefficients {total}");
            for beta in &svr.coefficients {
                assert!(beta.abs() <= svr.c + 1e-9, "coefficient {beta} outside box");
            }
            checked += 1;
        }
    };
    let collective = train_collective(data.dataset(), ModelKind::Svr, &opts, 5).unwrap();
    feasibility(&collective.model);
    let individual = train_individual(&data, ModelKind::Svr, &opts, 5).unwrap();
    for component in &individual.components {
        feasibility(&component.model);
    }
    assert_eq!(checked, 6);
    println!(
        "criterion 10: PASS (forest {forest_mae:.3} vs linear {linear_mae:.3}, 6 feasible SVR fits)"
    );
}
