use deep_splitting::network::{
    Activation, BnSite, Mode, Network, NetworkArchitecture, ParameterVector, Snapshot,
};
use deep_splitting::rng::Stream;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn normals(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = Stream::root(seed).rng();
    Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
}

/// Network whose running statistics have seen a few batches.
fn trained_state(net: &Network, params: &ParameterVector, d: usize, seed: u64) -> deep_splitting::network::BatchNormState {
    let mut bn = net.fresh_batch_norm();
    for b in 0..4 {
        bn = net.forward(params, &bn, normals(32, d, seed + b).view(), Mode::Train).unwrap().bn;
    }
    bn
}

fn relative_gap(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

#[test]
fn affine_parameter_count() {
    // 10*20 + 20 + 20*20 + 20 + 20 + 1
    let arch = NetworkArchitecture::standard(10, 3, 20).without_batch_norm();
    assert_eq!(arch.affine_param_count(), 661);
    assert_eq!(arch.param_count(), 661);
    let with_bn = NetworkArchitecture::standard(10, 3, 20);
    // scale and shift for 10 + 20 + 20 + 1 normalized features
    assert_eq!(with_bn.param_count(), 661 + 2 * 51);
}

#[test]
fn zero_map() {
    let net = Network::new(NetworkArchitecture::standard(5, 3, 7)).unwrap();
    let mut params = ParameterVector::zeros(net.layout().len);
    let layout = net.layout().clone();
    for block in &layout.batch_norm {
        params.as_mut_slice()[block.scale()].fill(1.0);
    }
    let y = net.predict(&params, &net.fresh_batch_norm(), normals(9, 5, 1).view()).unwrap();
    assert!(y.iter().all(|&v| v == 0.0));
}

#[test]
fn xavier_variance() {
    let (d, l) = (100, 110);
    let net = Network::new(NetworkArchitecture::standard(d, 3, l)).unwrap();
    let params = net.init_params(Stream::root(3));
    let layout = net.layout();
    for (i, (fan_in, fan_out)) in [(d, l), (l, l), (l, 1)].into_iter().enumerate() {
        let w = &params.as_slice()[layout.affine[i].weights()];
        let var = w.iter().map(|v| v * v).sum::<f64>() / w.len() as f64;
        let target = 2.0 / (fan_in + fan_out) as f64;
        // the 110-weight output layer is too small for a 10% bound
        if w.len() > 1000 {
            assert!((var / target - 1.0).abs() < 0.1, "layer {i}: {var} vs {target}");
        }
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        assert!(w.iter().all(|v| v.abs() <= bound));
        assert!(params.as_slice()[layout.affine[i].bias()].iter().all(|&b| b == 0.0));
    }
}

#[test]
fn train_mode_needs_two_samples() {
    let net = Network::new(NetworkArchitecture::standard(2, 3, 4)).unwrap();
    let params = net.init_params(Stream::root(1));
    let x = normals(1, 2, 1);
    assert!(net.forward(&params, &net.fresh_batch_norm(), x.view(), Mode::Train).is_err());
    assert!(net.forward(&params, &net.fresh_batch_norm(), x.view(), Mode::Infer).is_ok());
}

#[test]
fn snapshot_file_round_trip() {
    let net = Network::new(NetworkArchitecture::standard(6, 3, 9)).unwrap();
    let params = net.init_params(Stream::root(12));
    let bn = trained_state(&net, &params, 6, 40);
    let snap = Snapshot::new(net, params, bn).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.snap");
    snap.save(&path).unwrap();
    let back = Snapshot::load(&path).unwrap();
    let x = normals(20, 6, 77);
    assert_eq!(snap.predict(x.view()).unwrap(), back.predict(x.view()).unwrap());
    assert_eq!(std::fs::read(&path).unwrap(), back.to_bytes());
    let mut corrupt = snap.to_bytes();
    corrupt.truncate(corrupt.len() - 3);
    assert!(Snapshot::from_bytes(&corrupt).is_err());
}

fn smooth_arch(d: usize, l: usize, activation: Activation, sites: Option<Vec<BnSite>>) -> NetworkArchitecture {
    let mut arch = NetworkArchitecture::standard(d, 3, l).with_activation(activation);
    if let Some(s) = sites {
        arch.batch_norm_sites = s;
    }
    arch
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Train-mode parameter gradient of `sum_j c_j V(x_j)` against central
    /// differences, including the batch-statistics terms.
    #[test]
    fn parameter_gradient_matches_finite_differences(seed in 0u64..10_000, logistic in any::<bool>()) {
        let act = if logistic { Activation::Logistic } else { Activation::Identity };
        let net = Network::new(smooth_arch(3, 5, act, None)).unwrap();
        let params = net.init_params(Stream::root(seed));
        let x = normals(6, 3, seed + 1);
        let c: Array1<f64> = normals(6, 1, seed + 2).column(0).to_owned();
        let bn = net.fresh_batch_norm();
        let f = |p: &ParameterVector| net.forward(p, &bn, x.view(), Mode::Train).unwrap().values.dot(&c);
        let out = net.forward(&params, &bn, x.view(), Mode::Train).unwrap();
        let grad = net.grad_params(&params, &out.cache, c.view()).unwrap();
        let h = 1e-6;
        for i in 0..params.len() {
            let mut a = params.clone();
            a.as_mut_slice()[i] += h;
            let mut b = params.clone();
            b.as_mut_slice()[i] -= h;
            let fd = (f(&a) - f(&b)) / (2.0 * h);
            prop_assert!(relative_gap(fd, grad[i], 1e-2) <= 1e-5, "param {}: fd {} vs {}", i, fd, grad[i]);
        }
    }

    /// Infer-mode input gradient against central differences with h = 1e-5.
    #[test]
    fn input_gradient_matches_finite_differences(seed in 0u64..10_000) {
        let net = Network::new(smooth_arch(4, 6, Activation::Logistic, None)).unwrap();
        let params = net.init_params(Stream::root(seed));
        let bn = trained_state(&net, &params, 4, seed + 100);
        let x = normals(5, 4, seed + 3);
        let g = net.grad_x(&params, &bn, x.view()).unwrap();
        let h = 1e-5;
        for j in 0..5 {
            for i in 0..4 {
                let mut a = x.row(j).to_owned().insert_axis(ndarray::Axis(0));
                let mut b = a.clone();
                a[[0, i]] += h;
                b[[0, i]] -= h;
                let fd = (net.predict(&params, &bn, a.view()).unwrap()[0]
                    - net.predict(&params, &bn, b.view()).unwrap()[0])
                    / (2.0 * h);
                prop_assert!(relative_gap(fd, g[[j, i]], 1e-3) <= 1e-6, "x[{},{}]: {} vs {}", j, i, fd, g[[j, i]]);
            }
        }
    }

    /// ReLU networks away from kinks: perturbations small enough that no
    /// pre-activation changes sign.
    #[test]
    fn relu_input_gradient_is_exact_locally(seed in 0u64..10_000) {
        let net = Network::new(smooth_arch(3, 8, Activation::Relu, Some(vec![]))).unwrap();
        let params = net.init_params(Stream::root(seed));
        let bn = net.fresh_batch_norm();
        let x = normals(1, 3, seed + 5);
        let g = net.grad_x(&params, &bn, x.view()).unwrap();
        let h = 1e-9;
        for i in 0..3 {
            let mut a = x.clone();
            a[[0, i]] += h;
            let fd = (net.predict(&params, &bn, a.view()).unwrap()[0] - net.predict(&params, &bn, x.view()).unwrap()[0]) / h;
            prop_assert!((fd - g[[0, i]]).abs() <= 1e-5 * g[[0, i]].abs().max(1.0));
        }
    }

    /// Train-mode normalization: every normalized feature has batch mean 0
    /// and variance 1 when its batch variance exceeds the floor.
    #[test]
    fn batch_norm_normalizes(seed in 0u64..10_000, shift in -50.0f64..50.0, scale in 0.1f64..20.0) {
        let arch = NetworkArchitecture { batch_norm_sites: vec![BnSite::Input, BnSite::Affine(2)], ..smooth_arch(3, 5, Activation::Logistic, None) };
        let net = Network::new(arch).unwrap();
        let params = net.init_params(Stream::root(seed));
        let x = normals(40, 3, seed + 9).mapv(|v| shift + scale * v);
        let y = net.forward(&params, &net.fresh_batch_norm(), x.view(), Mode::Train).unwrap().values;
        let n = y.len() as f64;
        let mean = y.sum() / n;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        prop_assert!(mean.abs() < 1e-10);
        prop_assert!((var - 1.0).abs() < 1e-10);
    }

    /// Inference does not depend on batch composition.
    #[test]
    fn infer_mode_is_row_independent(seed in 0u64..10_000, rows in 1usize..12) {
        let net = Network::new(NetworkArchitecture::standard(4, 3, 6)).unwrap();
        let params = net.init_params(Stream::root(seed));
        let bn = trained_state(&net, &params, 4, seed);
        let x = normals(rows, 4, seed + 17);
        let joint = net.predict(&params, &bn, x.view()).unwrap();
        for j in 0..rows {
            let single = net.predict(&params, &bn, x.slice(ndarray::s![j..j + 1, ..])).unwrap();
            prop_assert_eq!(single[0].to_bits(), joint[j].to_bits());
        }
    }

    /// Running statistics move only in train mode and stay nonnegative.
    #[test]
    fn running_statistics(seed in 0u64..10_000) {
        let net = Network::new(NetworkArchitecture::standard(3, 3, 4)).unwrap();
        let params = net.init_params(Stream::root(seed));
        let bn = trained_state(&net, &params, 3, seed);
        prop_assert!(bn.running_variance.iter().all(|&v| v >= 0.0));
        prop_assert!(bn.step_count.iter().all(|&c| c == 4));
        let out = net.forward(&params, &bn, normals(5, 3, seed).view(), Mode::Infer).unwrap();
        prop_assert_eq!(out.bn, bn);
    }

    #[test]
    fn layout_round_trip(d in 1usize..20, l in 1usize..20, depth in 2usize..5) {
        let arch = NetworkArchitecture::standard(d, depth, l);
        let layout = arch.layout();
        let flat: Vec<f64> = (0..layout.len).map(|i| i as f64).collect();
        let blocks = layout.decode(&flat);
        prop_assert_eq!(layout.encode(&blocks).unwrap(), flat);
    }
}
