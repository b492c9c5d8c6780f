use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_tensor(shape: Vec<usize>, r: &mut impl Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Loss with a non-trivial gradient everywhere: `sum c_i y_i + 0.5 sum y_i^2`.
fn probe_loss(n: usize, seed: u64) -> impl Fn(&Tensor) -> (f64, Tensor) {
    let mut r = rng(seed);
    let c: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    move |y: &Tensor| {
        let mut l = 0.0;
        let mut g = Vec::with_capacity(y.len());
        for (yi, ci) in y.values().iter().zip(&c) {
            l += ci * yi + 0.5 * yi * yi;
            g.push(ci + yi);
        }
        (l, Tensor::new(y.shape().to_vec(), g).unwrap())
    }
}

#[test]
fn rectifier_forward() {
    let net = Network::new(vec![3], &[LayerSpec::Rectifier], &mut rng(0)).unwrap();
    let y = net.predict(&Tensor::from_vec(vec![-1.0, 0.0, 2.0])).unwrap();
    assert_eq!(y.values(), &[0.0, 0.0, 2.0]);
}

#[test]
fn identity_conv_is_identity() {
    let spec = LayerSpec::Conv {
        in_channels: 1,
        filters: 1,
        kernel: 1,
        stride: 1,
        padding: 0,
    };
    let mut net = Network::new(vec![1, 5, 4], &[spec], &mut rng(1)).unwrap();
    net.set_flat_params(&[1.0, 0.0]).unwrap();
    let x = random_tensor(vec![1, 5, 4], &mut rng(2));
    assert_eq!(net.predict(&x).unwrap(), x);
}

#[test]
fn maxpool_takes_window_max() {
    let net = Network::new(
        vec![1, 2, 2],
        &[LayerSpec::MaxPool { size: 2, stride: 2 }],
        &mut rng(0),
    )
    .unwrap();
    let y = net
        .predict(&Tensor::new(vec![1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap())
        .unwrap();
    assert_eq!(y.shape(), &[1, 1, 1]);
    assert_eq!(y.values(), &[4.0]);
}

#[test]
fn maxpool_ties_route_to_first_index() {
    let net = Network::new(
        vec![1, 2, 2],
        &[LayerSpec::MaxPool { size: 2, stride: 2 }],
        &mut rng(0),
    )
    .unwrap();
    let acts = net
        .forward(&Tensor::new(vec![1, 2, 2], vec![5.0, 5.0, 5.0, 1.0]).unwrap())
        .unwrap();
    let (_, gin) = net
        .backward(&acts, &Tensor::new(vec![1, 1, 1], vec![1.0]).unwrap())
        .unwrap();
    assert_eq!(gin.values(), &[1.0, 0.0, 0.0, 0.0]);
}

#[test]
fn affine_linear_gradients() {
    let net = Network::new(
        vec![3],
        &[LayerSpec::Affine {
            inputs: 3,
            outputs: 1,
        }],
        &mut rng(3),
    )
    .unwrap();
    let x = Tensor::from_vec(vec![0.5, -2.0, 3.0]);
    let acts = net.forward(&x).unwrap();
    let (g, _) = net.backward(&acts, &Tensor::from_vec(vec![1.0])).unwrap();
    let p = g.layers[0].as_ref().unwrap();
    assert_eq!(p.bias.values(), &[1.0]);
    assert_eq!(p.weights.values(), x.values());
}

#[test]
fn rectifier_gates_negative_inputs() {
    let net = Network::new(vec![1], &[LayerSpec::Rectifier], &mut rng(0)).unwrap();
    let acts = net.forward(&Tensor::from_vec(vec![-3.0])).unwrap();
    let (_, gin) = net.backward(&acts, &Tensor::from_vec(vec![7.0])).unwrap();
    assert_eq!(gin.values(), &[0.0]);
}

#[test]
fn forward_rejects_wrong_input_shape() {
    let net = Network::new(vec![3], &[LayerSpec::Rectifier], &mut rng(0)).unwrap();
    let err = net.predict(&Tensor::from_vec(vec![1.0, 2.0])).unwrap_err();
    assert!(matches!(err, NumericsError::Config { .. }));
}

#[test]
fn construction_names_offending_layer() {
    let specs = [
        LayerSpec::Rectifier,
        LayerSpec::Affine {
            inputs: 4,
            outputs: 2,
        },
    ];
    match Network::new(vec![3], &specs, &mut rng(0)) {
        Err(NumericsError::Config { layer, .. }) => assert_eq!(layer, 1),
        other => panic!("expected config error, got {other:?}"),
    }
}

#[test]
fn backward_rejects_mismatched_activations() {
    let net = Network::new(
        vec![3],
        &[LayerSpec::Rectifier, LayerSpec::Rectifier],
        &mut rng(0),
    )
    .unwrap();
    let mut acts = net.forward(&Tensor::from_vec(vec![1.0, 2.0, 3.0])).unwrap();
    acts.outputs.pop();
    assert!(matches!(
        net.backward(&acts, &Tensor::from_vec(vec![1.0; 3])),
        Err(NumericsError::Consistency(_))
    ));
}

fn check_layer(input_shape: Vec<usize>, spec: LayerSpec, seed: u64) -> f64 {
    let mut r = rng(seed);
    let net = Network::new(input_shape.clone(), &[spec], &mut r).unwrap();
    // Perturb biases away from zero so every parameter matters.
    let mut net = net;
    let flat: Vec<f64> = net.flat_params().iter().map(|_| r.gen_range(-0.5..0.5)).collect();
    net.set_flat_params(&flat).unwrap();
    let x = random_tensor(input_shape, &mut r);
    let out_len = net.predict(&x).unwrap().len();
    let loss = probe_loss(out_len, seed + 100);
    grad_check(&net, &x, &loss, 20, DEFAULT_EPSILON, &mut r).unwrap()
}

#[test]
fn grad_check_every_layer_kind() {
    let cases = [
        (
            vec![2, 7, 7],
            LayerSpec::Conv {
                in_channels: 2,
                filters: 3,
                kernel: 3,
                stride: 1,
                padding: 1,
            },
        ),
        (
            vec![2, 9, 8],
            LayerSpec::Conv {
                in_channels: 2,
                filters: 2,
                kernel: 3,
                stride: 2,
                padding: 0,
            },
        ),
        (vec![2, 6, 6], LayerSpec::MaxPool { size: 2, stride: 2 }),
        (vec![1, 9, 9], LayerSpec::MaxPool { size: 3, stride: 3 }),
        (vec![10], LayerSpec::Rectifier),
        (
            vec![2, 3, 2],
            LayerSpec::Affine {
                inputs: 12,
                outputs: 5,
            },
        ),
        (vec![6], LayerSpec::Softmax),
    ];
    for (i, (shape, spec)) in cases.into_iter().enumerate() {
        let err = check_layer(shape, spec, 10 + i as u64);
        assert!(err <= 1e-4, "{} relative error {err}", spec.name());
    }
}

#[test]
fn grad_check_linear_quadratic_is_tight() {
    let mut r = rng(5);
    let net = Network::new(
        vec![4],
        &[LayerSpec::Affine {
            inputs: 4,
            outputs: 3,
        }],
        &mut r,
    )
    .unwrap();
    let x = random_tensor(vec![4], &mut r);
    let target = [0.3, -0.2, 1.0];
    let loss = |y: &Tensor| loss::squared_error(y, &target);
    let err = grad_check(&net, &x, &loss, 20, DEFAULT_EPSILON, &mut r).unwrap();
    assert!(err <= 1e-7, "{err}");
}

#[test]
fn hinge_and_softmax_heads_grad_check() {
    let mut r = rng(6);
    let net = Network::new(
        vec![5],
        &[LayerSpec::Affine {
            inputs: 5,
            outputs: 3,
        }],
        &mut r,
    )
    .unwrap();
    let x = random_tensor(vec![5], &mut r);
    let hinge = |y: &Tensor| loss::multiclass_hinge(y, 1, 1.0);
    assert!(grad_check(&net, &x, &hinge, 20, DEFAULT_EPSILON, &mut r).unwrap() <= 1e-4);

    let net = Network::new(
        vec![5],
        &[
            LayerSpec::Affine {
                inputs: 5,
                outputs: 3,
            },
            LayerSpec::Softmax,
        ],
        &mut r,
    )
    .unwrap();
    let ce = |y: &Tensor| loss::cross_entropy(y, 2);
    assert!(grad_check(&net, &x, &ce, 20, DEFAULT_EPSILON, &mut r).unwrap() <= 1e-4);
}

#[test]
fn sgd_step_examples() {
    let mut net = Network::new(
        vec![1],
        &[LayerSpec::Affine {
            inputs: 1,
            outputs: 1,
        }],
        &mut rng(0),
    )
    .unwrap();
    net.set_flat_params(&[1.0, 1.0]).unwrap();
    let mut g = Gradients::zeros_for(&net);
    g.layers[0].as_mut().unwrap().weights.values_mut()[0] = 0.5;
    let mut a = net.clone();
    let mut b = net.clone();
    a.sgd_step(&g, 0.001).unwrap();
    b.sgd_step(&g, 0.001).unwrap();
    assert_eq!(a.flat_params(), vec![0.9995, 1.0]);
    assert_eq!(a, b);

    let zero = Gradients::zeros_for(&net);
    let mut c = net.clone();
    c.sgd_step(&zero, 0.001).unwrap();
    assert_eq!(c, net);

    g.layers[0].as_mut().unwrap().bias.values_mut()[0] = f64::NAN;
    assert!(matches!(c.sgd_step(&g, 0.001), Err(NumericsError::NonFinite(_))));
    assert!(c.sgd_step(&zero, 0.0).is_err());
}

#[test]
fn backward_does_not_mutate_parameters() {
    let mut r = rng(9);
    let specs = [
        LayerSpec::Conv {
            in_channels: 1,
            filters: 2,
            kernel: 3,
            stride: 1,
            padding: 1,
        },
        LayerSpec::Rectifier,
        LayerSpec::MaxPool { size: 2, stride: 2 },
        LayerSpec::Affine {
            inputs: 18,
            outputs: 3,
        },
    ];
    let net = Network::new(vec![1, 6, 6], &specs, &mut r).unwrap();
    let before = net.clone();
    let acts = net.forward(&random_tensor(vec![1, 6, 6], &mut r)).unwrap();
    net.backward(&acts, &Tensor::from_vec(vec![1.0, -1.0, 0.5]))
        .unwrap();
    assert_eq!(net, before);
}

#[test]
fn persistence_round_trip() {
    let mut r = rng(4);
    let specs = [
        LayerSpec::Conv {
            in_channels: 1,
            filters: 2,
            kernel: 3,
            stride: 1,
            padding: 1,
        },
        LayerSpec::Rectifier,
        LayerSpec::MaxPool { size: 2, stride: 2 },
        LayerSpec::Affine {
            inputs: 8,
            outputs: 3,
        },
    ];
    let net = Network::new(vec![1, 4, 4], &specs, &mut r).unwrap();
    let mut buf = Vec::new();
    persist::write_network(&mut buf, "test", &net).unwrap();
    assert_eq!(&buf[..8], persist::MAGIC);
    let (tag, back) = persist::read_network(&mut buf.as_slice()).unwrap();
    assert_eq!(tag, "test");
    assert_eq!(back, net);

    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(persist::read_network(&mut bad.as_slice()).is_err());
    let mut truncated = buf.clone();
    truncated.pop();
    assert!(persist::read_network(&mut truncated.as_slice()).is_err());
}

fn arb_spec_and_shape() -> impl Strategy<Value = (LayerSpec, Vec<usize>)> {
    prop_oneof![
        (
            1usize..4,
            1usize..5,
            1usize..5,
            1usize..3,
            0usize..3,
            5usize..16,
            5usize..16
        )
            .prop_map(|(c, f, k, s, p, h, w)| (
                LayerSpec::Conv {
                    in_channels: c,
                    filters: f,
                    kernel: k,
                    stride: s,
                    padding: p,
                },
                vec![c, h, w]
            )),
        (1usize..4, 1usize..4, 1usize..3, 4usize..16, 4usize..16)
            .prop_map(|(c, size, s, h, w)| (LayerSpec::MaxPool { size, stride: s }, vec![c, h, w])),
        (1usize..4, 1usize..8).prop_map(|(a, b)| (LayerSpec::Rectifier, vec![a, b])),
        (1usize..4, 1usize..6, 1usize..6).prop_map(|(a, b, o)| (
            LayerSpec::Affine {
                inputs: a * b,
                outputs: o
            },
            vec![a, b]
        )),
        (1usize..9).prop_map(|n| (LayerSpec::Softmax, vec![n])),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn declared_shape_matches_produced_shape((spec, shape) in arb_spec_and_shape(), seed in 0u64..1000) {
        let mut r = rng(seed);
        let declared = spec.output_shape(&shape).unwrap();
        let net = Network::new(shape.clone(), &[spec], &mut r).unwrap();
        let y = net.predict(&random_tensor(shape, &mut r)).unwrap();
        prop_assert_eq!(y.shape(), declared.as_slice());
        prop_assert!(y.is_finite());
    }
}
