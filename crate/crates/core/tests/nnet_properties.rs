use approxrate::nnet::{network_from_json, network_to_json, parallel_compose, serial_compose, ActivationSpec, AffineStep, Network};
use proptest::prelude::*;

fn dense_step(in_dim: usize, out_dim: usize, w: &[f64], b: &[f64]) -> AffineStep {
    let edges = (0..out_dim).flat_map(|r| (0..in_dim).map(move |c| (r, c))).map(|(r, c)| (r, c, w[r * in_dim + c])).collect();
    let nodes = (0..out_dim).map(|r| (r, b[r])).collect();
    AffineStep::new(in_dim, out_dim, edges, nodes).unwrap()
}

prop_compose! {
    fn network()(order in 1u32..=3, widths in prop::collection::vec(1usize..4, 1..3))
        (weights in prop::collection::vec(-2.0f64..2.0, 64), order in Just(order), widths in Just(widths)) -> Network {
        let dims: Vec<usize> = std::iter::once(1).chain(widths).chain(std::iter::once(1)).collect();
        let mut used = 0;
        let steps = dims
            .windows(2)
            .map(|d| {
                let w = &weights[used % 32..][..d[0] * d[1]];
                let b = &weights[32 + used % 16..][..d[1]];
                used += d[0] * d[1] + d[1];
                dense_step(d[0], d[1], w, b)
            })
            .collect();
        Network::new(1, steps, ActivationSpec::relu_power(order)).unwrap()
    }
}

proptest! {
    #[test]
    fn json_round_trip_is_lossless(net in network()) {
        let back = network_from_json(&network_to_json(&net)).unwrap();
        prop_assert_eq!(back.steps(), net.steps());
        prop_assert_eq!(back.connectivity(), net.connectivity());
        prop_assert_eq!(network_to_json(&back), network_to_json(&net));
    }

    #[test]
    fn serial_compose_is_function_composition(a in network(), b in network(), x in -1.5f64..1.5) {
        prop_assume!(a.activation().order == b.activation().order);
        let c = serial_compose(&a, &b).unwrap();
        prop_assert_eq!(c.depth(), a.depth() + b.depth() - 1);
        let want = b.eval_scalar(a.eval_scalar(x).unwrap()).unwrap();
        let got = c.eval_scalar(x).unwrap();
        prop_assert!((want - got).abs() <= 1e-9 * (1.0 + want.abs()), "{} vs {}", want, got);
    }

    #[test]
    fn parallel_compose_is_linear(a in network(), c0 in -2.0f64..2.0, c1 in -2.0f64..2.0, s0 in -1.0f64..1.0, s1 in -1.0f64..1.0, x in -1.0f64..1.0) {
        let p = parallel_compose(&[a.clone(), a.clone()], &[c0, c1], &[s0, s1]).unwrap();
        let want = c0 * a.eval_scalar(x + s0).unwrap() + c1 * a.eval_scalar(x + s1).unwrap();
        let got = p.eval_scalar(x).unwrap();
        prop_assert!((want - got).abs() <= 1e-9 * (1.0 + want.abs()), "{} vs {}", want, got);
        prop_assert_eq!(p.depth(), a.depth());
    }

    #[test]
    fn affine_pre_and_post_composition(net in network(), s in 0.25f64..2.0, t in -1.0f64..1.0, x in -1.0f64..1.0) {
        let pre = net.precompose_affine(s, t).unwrap();
        let post = net.postcompose_affine(s, t).unwrap();
        let fx = net.eval_scalar(x).unwrap();
        let f_pre = net.eval_scalar(s * x + t).unwrap();
        prop_assert!((pre.eval_scalar(x).unwrap() - f_pre).abs() <= 1e-9 * (1.0 + f_pre.abs()));
        prop_assert!((post.eval_scalar(x).unwrap() - (s * fx + t)).abs() <= 1e-9 * (1.0 + fx.abs()));
        prop_assert_eq!(pre.depth(), net.depth());
    }

    #[test]
    fn connectivity_counts_nonzero_weights(net in network()) {
        prop_assert_eq!(net.connectivity(), net.weights().filter(|w| *w != 0.0).count());
    }
}

#[test]
fn malformed_json_is_rejected() {
    assert!(network_from_json("{}").is_err());
    assert!(network_from_json("not json").is_err());
    let net = Network::single_unit(ActivationSpec::relu_power(2), 1.0, 0.5, 2.0).unwrap();
    let text = network_to_json(&net).replace("\"d\": 1", "\"d\": 3");
    assert!(network_from_json(&text).is_err());
}
