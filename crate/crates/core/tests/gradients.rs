use fpsnn::fpgrad::{
    assemble_system, exact_gradient, finite_diff_gradient, loss_weight_gradient, solve_firing_jacobian, FiringSystem,
};
use fpsnn::gradcheck::{check_case, random_case, relative_error, RandomLoss};
use fpsnn::losses::{first_spikes, ttfs_loss, FirstSpikes, TtfsLoss};
use fpsnn::{simulate, FiringRecord, NetworkTopology, NeuronParams, SimOptions, SpikeLabel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn single_neuron(w: f64) -> NetworkTopology {
    let p = NeuronParams::new(1.0, 2.0, 0.1875).unwrap();
    NetworkTopology::new(p, 2, &[(0, 1, w)], vec![0], vec![1]).unwrap()
}

#[test]
fn single_fire_system() {
    let net = single_neuron(1.0);
    let sim = simulate(&net, &[vec![0.0]], &SimOptions::new(10.0)).unwrap();
    let system = assemble_system(&sim.record, &sim.graph, &net).unwrap();
    assert!((system.dense_l()[0][0] - 0.375).abs() < 1e-12);
    assert!((system.dense_dv_dw()[0][0] - 0.1875).abs() < 1e-12);
    let x = solve_firing_jacobian(&system).unwrap();
    assert!((x.get(0, 0) + 0.5).abs() < 1e-12);
    let g = loss_weight_gradient(&[1.0], &x, &[0.0]).unwrap();
    assert!((g[0] + 0.5).abs() < 1e-12);
}

#[test]
fn two_by_two_forward_substitution() {
    let system = FiringSystem::from_dense(&[vec![2.0, 0.0], vec![1.0, 4.0]], &[vec![1.0], vec![1.0]]).unwrap();
    let x = solve_firing_jacobian(&system).unwrap();
    assert!((x.get(0, 0) + 0.5).abs() < 1e-15);
    assert!((x.get(1, 0) + 0.125).abs() < 1e-15);
}

#[test]
fn upper_entries_are_rejected() {
    assert!(FiringSystem::from_dense(&[vec![2.0, 1.0], vec![0.0, 4.0]], &[vec![1.0], vec![1.0]]).is_err());
}

#[test]
fn zero_jacobian_passes_direct_term_through() {
    let system = FiringSystem::from_dense(&[vec![1.0]], &[vec![0.0, 0.0]]).unwrap();
    let x = solve_firing_jacobian(&system).unwrap();
    let g = loss_weight_gradient(&[3.0], &x, &[0.25, -1.0]).unwrap();
    assert_eq!(g, vec![0.25, -1.0]);
}

#[test]
fn finite_difference_oracle() {
    let net = single_neuron(1.0);
    let opts = SimOptions::new(10.0);
    let fd = finite_diff_gradient(&net, &[vec![0.0]], &opts, |r| r.times(1)[0], 1e-6).unwrap();
    assert!((fd.grad[0] + 0.5).abs() < 1e-6);
    // After the reset V = u - (4/3)u² with u = e^{-t}, whose maximum is
    // exactly θ: at W = 1 a second fire grazes threshold, so W + h adds it.
    assert!(!fd.stable[0]);
    let nudged = net.with_weights(&[1.0 + 1e-6]).unwrap();
    assert_eq!(simulate(&nudged, &[vec![0.0]], &opts).unwrap().record.times(1).len(), 2);
    let below = single_neuron(0.9);
    let fd = finite_diff_gradient(&below, &[vec![0.0]], &opts, |r| r.times(1)[0], 1e-6).unwrap();
    assert!(fd.stable[0] && fd.order_stable[0]);
    let constant = finite_diff_gradient(&net, &[vec![0.0]], &opts, |_| 1.0, 1e-6).unwrap();
    assert_eq!(constant.grad, vec![0.0]);
}

#[test]
fn spike_adding_weight_is_flagged() {
    // peak potential 0.25·w equals θ at w = 0.75: the fire appears inside ±h
    let net = single_neuron(0.75);
    let fd = finite_diff_gradient(&net, &[vec![0.0]], &SimOptions::new(10.0), |r| r.len() as f64, 1e-6).unwrap();
    assert!(!fd.stable[0]);
}

#[test]
fn random_networks_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..40 {
        let case = random_case(&mut rng).unwrap();
        let report = check_case(&case, 1e-6).unwrap();
        assert!(report.triangular);
        assert!(report.max_rel_err_smooth <= 1e-4, "{report:?}");
    }
}

#[test]
fn prefix_solve_equals_full_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..30 {
        let case = random_case(&mut rng).unwrap();
        let sim = simulate(&case.net, &case.inputs, &case.opts).unwrap();
        let mut dldf = vec![0.0; sim.record.len()];
        dldf[0] = 1.0;
        let partial = exact_gradient(&case.net, &sim, &dldf).unwrap();
        let system = assemble_system(&sim.record, &sim.graph, &case.net).unwrap();
        let full = loss_weight_gradient(&dldf, &solve_firing_jacobian(&system).unwrap(), &vec![0.0; case.net.n_weights()])
            .unwrap();
        assert_eq!(partial.dfdw.n_fires(), 1);
        for (a, b) in partial.dldw.iter().zip(&full) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}

#[test]
fn gradient_is_permutation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..20 {
        let case = random_case(&mut rng).unwrap();
        let n = case.net.n_neurons();
        let perm: Vec<usize> = (0..n).map(|i| (i * 3 + 1) % n).collect();
        if (0..n).map(|i| perm[i]).collect::<std::collections::HashSet<_>>().len() != n {
            continue;
        }
        let moved = case.net.relabeled(&perm).unwrap();
        let a = simulate(&case.net, &case.inputs, &case.opts).unwrap();
        let b = simulate(&moved, &case.inputs, &case.opts).unwrap();
        let moved_loss = RandomLoss {
            terms: case
                .loss
                .terms
                .iter()
                .map(|&(l, c, d)| (SpikeLabel { neuron: perm[l.neuron], index: l.index }, c, d))
                .collect(),
        };
        let ga = exact_gradient(&case.net, &a, &case.loss.gradient(&a.record)).unwrap().dldw;
        let gb = exact_gradient(&moved, &b, &moved_loss.gradient(&b.record)).unwrap().dldw;
        for (x, y) in ga.iter().zip(&gb) {
            assert!(relative_error(*x, *y) < 1e-9, "{x} vs {y}");
        }
    }
}

#[test]
fn equal_first_spikes_give_log3() {
    let first = FirstSpikes {
        times: vec![1.3, 1.3, 1.3],
        silent: vec![false; 3],
        positions: vec![Some(0), Some(1), Some(2)],
        n_fires: 3,
    };
    let r = ttfs_loss(&first, 1, 0.2, 1.0, 0.0).unwrap();
    assert!((r.loss - 3f64.ln()).abs() < 1e-12);
}

#[test]
fn silent_outputs_use_sentinel_and_get_no_gradient() {
    let record = FiringRecord::from_per_neuron(vec![vec![], vec![0.7], vec![], vec![1.1]]).unwrap();
    let first = first_spikes(&record, &[1, 2, 3], 5.0);
    assert_eq!(first.times, vec![0.7, 5.0, 1.1]);
    assert_eq!(first.silent, vec![false, true, false]);
    assert_eq!(first.prediction(), Some(0));
    let r = TtfsLoss::new(0.5, 1.0, 0.1).unwrap().evaluate(&first, 2).unwrap();
    assert_eq!(r.d_first[1], 0.0);
    assert_eq!(r.d_fires.len(), 2);
    assert!(first_spikes(&FiringRecord::empty(4), &[1, 2, 3], 5.0).prediction().is_none());
}

proptest! {
    #[test]
    fn loss_gradient_matches_finite_differences(
        f in proptest::collection::vec(0.1f64..4.0, 3),
        label in 0usize..3,
        tau0 in 0.1f64..2.0,
        tau1 in 0.5f64..4.0,
        gamma in 0.0f64..0.5,
    ) {
        let first = |t: &[f64]| FirstSpikes {
            times: t.to_vec(),
            silent: vec![false; 3],
            positions: vec![Some(0), Some(1), Some(2)],
            n_fires: 3,
        };
        let loss = TtfsLoss::new(tau0, tau1, gamma).unwrap();
        let r = loss.evaluate(&first(&f), label).unwrap();
        let h = 1e-7;
        for j in 0..3 {
            let (mut up, mut down) = (f.clone(), f.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (loss.evaluate(&first(&up), label).unwrap().loss - loss.evaluate(&first(&down), label).unwrap().loss) / (2.0 * h);
            prop_assert!((fd - r.d_first[j]).abs() / r.d_first[j].abs().max(1.0) <= 1e-6, "{} vs {}", fd, r.d_first[j]);
        }
    }
}
