use fpsnn::config::{Convergence, DatasetKind, TrainConfig};
use fpsnn::data::{
    encode_iris, encode_yinyang, generate_yinyang, parse_iris, xor_dataset, yinyang_class, YinYangEncoding, DOT,
    IRIS_CSV,
};
use fpsnn::optim::{adam_step, sgd_step, AdamHyper, AdamState};
use fpsnn::train::{evaluate, init_network, train, Dataset, Split};

#[test]
fn adam_first_step_moves_by_eta() {
    let hyper = AdamHyper {
        eta: 0.1,
        ..AdamHyper::default()
    };
    let (p, state) = adam_step(&[0.5], &[1.0], &AdamState::new(1), &hyper).unwrap();
    assert!((p[0] - 0.4).abs() < 1e-7);
    assert_eq!(state.t, 1);
    // a second identical gradient keeps the step size at η
    let (p2, _) = adam_step(&p, &[1.0], &state, &hyper).unwrap();
    assert!((p[0] - p2[0] - 0.1).abs() < 1e-7);
    let (same, _) = adam_step(&[0.5], &[0.0], &AdamState::new(1), &hyper).unwrap();
    assert_eq!(same, vec![0.5]);
}

#[test]
fn sgd_step_and_shape_checks() {
    let mut p = vec![1.0, 2.0];
    sgd_step(&mut p, &[1.0, -2.0], 0.5).unwrap();
    assert_eq!(p, vec![0.5, 3.0]);
    assert!(sgd_step(&mut p, &[1.0], 0.5).is_err());
    assert!(AdamState::new(2).step(&mut p, &[1.0, 1.0, 1.0], &AdamHyper::default()).is_err());
}

#[test]
fn shipped_configs_carry_the_tables() {
    let xor = TrainConfig::xor();
    assert_eq!((xor.alpha, xor.beta, xor.theta, xor.t_max), (1.0, 0.99, 1.0, 2.0));
    assert_eq!(xor.hidden_sizes, vec![4]);
    assert_eq!((xor.eta, xor.gamma, xor.tau0, xor.tau1), (0.1, 0.2, 0.1, 1.0));
    assert_eq!(xor.convergence, Convergence::FullBatchAccuracy);

    let yy = TrainConfig::yinyang();
    assert_eq!((yy.alpha, yy.beta, yy.t_max, yy.t_early, yy.t_bias), (0.999, 1.0, 2.0, 0.15, Some(0.9)));
    assert_eq!(yy.hidden_sizes, vec![150]);
    assert_eq!((yy.hidden_weights_mean[0], yy.hidden_weights_stdev[0]), (1.5, 0.8));
    assert_eq!((yy.minibatch_size, yy.epochs), (Some(150), 300));
    assert_eq!((yy.eta, yy.gamma, yy.tau0, yy.tau1), (0.0005, 0.005, 0.2, 1.0));
    assert_eq!(yy.dataset, DatasetKind::YinYang);

    let iris = TrainConfig::iris();
    assert_eq!(iris.t_max, 16.0);
    for cfg in [xor, yy, iris, TrainConfig::gradcheck()] {
        assert_eq!(TrainConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
}

#[test]
fn config_rejects_unknown_and_malformed_keys() {
    assert!(TrainConfig::parse("alpha = 1.0\nwhatever = 3\n").is_err());
    assert!(TrainConfig::parse("alpha = fast\n").is_err());
    assert!(TrainConfig::parse("alpha 1.0\n").is_err());
    let cfg = TrainConfig::parse("# comment only\nseed = 7 # trailing\n").unwrap();
    assert_eq!(cfg.seed, 7);
}

#[test]
fn xor_encoding() {
    let d = xor_dataset(0.0, 2.0, true);
    assert_eq!(d[0].spikes, vec![vec![0.0], vec![0.0]]);
    assert_eq!(d[0].label, 0);
    assert_eq!(d[1].spikes, vec![vec![0.0], vec![2.0]]);
    assert_eq!(d[1].label, 1);
    assert_eq!(d.iter().map(|s| s.label).collect::<Vec<_>>(), vec![0, 1, 1, 0]);
}

#[test]
fn iris_encoding_and_dataset() {
    assert_eq!(encode_iris(4.3, 4.3, 7.9, 16.0).unwrap(), 16.0);
    assert_eq!(encode_iris(7.9, 4.3, 7.9, 16.0).unwrap(), 0.0);
    assert!(encode_iris(1.0, 2.0, 2.0, 16.0).is_err());
    let iris = parse_iris(IRIS_CSV.as_bytes()).unwrap();
    assert_eq!(iris.len(), 150);
    assert_eq!(iris.class_counts(), vec![50, 50, 50]);
    let (tr, te) = iris.stratified_split(0, 0.2);
    assert_eq!((tr.len(), te.len()), (120, 30));
    let encoded = iris.encode(16.0).unwrap();
    assert!(encoded.iter().flat_map(|s| s.spikes.iter().flatten()).all(|&t| (0.0..=16.0).contains(&t)));
}

#[test]
fn yinyang_geometry_and_generator() {
    let r = 0.5;
    // eye centres, then one point well inside each large lobe
    assert_eq!(yinyang_class(0.25, 0.5, r), DOT);
    assert_eq!(yinyang_class(0.75, 0.5, r), DOT);
    assert_ne!(yinyang_class(0.5, 0.95, r), yinyang_class(0.5, 0.05, r));

    let a = generate_yinyang(300, r, 11).unwrap();
    assert_eq!(a, generate_yinyang(300, r, 11).unwrap());
    let mut counts = [0usize; 3];
    for p in &a {
        assert!((p.x - r).hypot(p.y - r) <= r);
        assert_eq!(yinyang_class(p.x, p.y, r), p.class);
        counts[p.class] += 1;
    }
    assert!(counts.iter().all(|&c| c.abs_diff(100) <= 1));

    let enc = YinYangEncoding {
        t_early: 0.15,
        t_late: 2.0,
        t_bias: 0.9,
    };
    let s = encode_yinyang(0.0, 1.0, 1, &enc).unwrap();
    assert_eq!(s.spikes, vec![vec![0.15], vec![2.0], vec![2.0], vec![0.15], vec![0.9]]);
    assert!(encode_yinyang(1.2, 0.0, 0, &enc).is_err());
}

#[test]
fn xor_trains_to_full_accuracy() {
    let mut cfg = TrainConfig::xor();
    let data = Dataset::from_config(&cfg).unwrap();
    for seed in 0..10 {
        cfg.seed = seed;
        let out = train(&cfg, &data).unwrap();
        assert!(out.converged, "seed {seed}");
        assert_eq!(out.last(Split::Train).unwrap().accuracy, 1.0);
    }
}

#[test]
fn training_is_deterministic() {
    let mut cfg = TrainConfig::iris();
    cfg.epochs = 3;
    let data = Dataset::from_config(&cfg).unwrap();
    let a = train(&cfg, &data).unwrap();
    let b = train(&cfg, &data).unwrap();
    assert_eq!(a.net.weights(), b.net.weights());
    assert_eq!(a.history, b.history);
}

#[test]
fn yinyang_initial_loss_is_near_log3() {
    let cfg = TrainConfig::yinyang();
    let data = Dataset::from_config(&cfg).unwrap();
    let net = init_network(&cfg, data.n_inputs, data.n_classes, cfg.seed).unwrap();
    let report = evaluate(&net, &data.test[..300], &cfg).unwrap();
    assert!((1.05..=1.15).contains(&report.loss), "{}", report.loss);
}
