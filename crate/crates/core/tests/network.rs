mod common;

use common::*;
use fgnet::network::{
    layer_automaton, measure_network, network_automaton, network_automaton_right, node_automaton,
    node_automaton_compositional,
};
use fgnet::numeric::representation_variants;
use fgnet::relations::relu;
use fgnet::{encode, eval_exact, stack, Activation, Layer, Network, Node, Rational};
use rand::seq::SliceRandom;
use rand::Rng;

fn node(w: &[&str], b: &str) -> Node {
    Node::new(w.iter().map(|c| q(c)).collect(), q(b)).unwrap()
}

fn single(v: Node, act: Activation) -> Network {
    Network::new(vec![Layer::new(vec![v], act).unwrap()]).unwrap()
}

fn vals(v: &[&str]) -> Vec<Rational> {
    v.iter().map(|s| q(s)).collect()
}

#[test]
fn evaluation_examples() {
    let n = single(node(&["1"], "0"), Activation::Relu);
    assert_eq!(eval_exact(&n, &vals(&["-2"])).unwrap(), vals(&["0"]));
    let n = single(node(&["1/2", "-1"], "1"), Activation::Relu);
    assert_eq!(eval_exact(&n, &vals(&["2", "3"])).unwrap(), vals(&["0"]));
    let n = single(node(&["3"], "-1"), Activation::Identity);
    assert_eq!(eval_exact(&n, &vals(&["1"])).unwrap(), vals(&["2"]));
    assert!(eval_exact(&n, &vals(&["1", "2"])).is_err());
}

#[test]
fn measure_examples() {
    let one = single(node(&["1"], "0"), Activation::Relu);
    assert_eq!(measure_network(&one), q("1").measure() + q("0").measure());
    let two = Network::new(vec![Layer::new(vec![node(&["1"], "0"), node(&["1"], "0")], Activation::Relu).unwrap()])
        .unwrap();
    assert_eq!(measure_network(&two), 2 * measure_network(&one));
    let mut r = rng(30);
    for _ in 0..20 {
        let net = random_network(&mut r);
        let by_hand: u64 = net
            .layers()
            .iter()
            .flat_map(|l| l.nodes())
            .map(|v| v.weights.iter().chain([&v.bias]).map(Rational::measure).sum::<u64>())
            .sum();
        assert_eq!(measure_network(&net), by_hand);
    }
}

#[test]
fn structure_is_validated() {
    assert!(Node::new(vec![], q("0")).is_err());
    assert!(Layer::new(vec![], Activation::Relu).is_err());
    assert!(Layer::new(vec![node(&["1"], "0"), node(&["1", "2"], "0")], Activation::Relu).is_err());
    let l1 = Layer::new(vec![node(&["1"], "0"), node(&["2"], "0")], Activation::Relu).unwrap();
    let l2 = Layer::new(vec![node(&["1"], "0")], Activation::Identity).unwrap();
    assert!(Network::new(vec![l1.clone(), l2]).is_err());
    assert!(Network::new(vec![]).is_err());
    let ok = Network::new(vec![l1, Layer::new(vec![node(&["1", "1"], "0")], Activation::Identity).unwrap()]).unwrap();
    assert_eq!((ok.inputs(), ok.outputs(), ok.relu_count()), (1, 1, 2));
}

#[test]
fn network_files_round_trip() {
    let text = r#"{"layers":[{"activation":"relu","weights":[["1/2","-1"],["0.25","3"]],"bias":["1","0"]},
        {"activation":"identity","weights":[["1","-1"]],"bias":["-1/3"]}]}"#;
    let net = Network::from_json(text).unwrap();
    assert_eq!((net.inputs(), net.outputs()), (2, 1));
    assert_eq!(Network::from_json(&net.to_json()).unwrap(), net);
    let bad_dims = r#"{"layers":[{"activation":"relu","weights":[["1"]],"bias":["1","0"]}]}"#;
    assert!(Network::from_json(bad_dims).is_err());
    let bad_act = r#"{"layers":[{"activation":"tanh","weights":[["1"]],"bias":["1"]}]}"#;
    assert!(Network::from_json(bad_act).is_err());
    let float = r#"{"layers":[{"activation":"relu","weights":[["1e-3"]],"bias":["1"]}]}"#;
    assert!(Network::from_json(float).is_err());
}

#[test]
fn node_examples() {
    let a = node_automaton(&node(&["1"], "0"), 2, 2, Activation::Relu).unwrap();
    let reference = relu(2, 1, 2).unwrap();
    let mut r = rng(31);
    for _ in 0..100 {
        let x = small_rational(&mut r, 6, 4);
        let y = if r.gen_bool(0.5) { x.clone().max(Rational::zero()) } else { small_rational(&mut r, 6, 4) };
        let w = random_word(&mut r, &[x, y]);
        assert_eq!(a.member(&w).unwrap(), reference.member(&w).unwrap());
    }
    let sum = node_automaton(&node(&["1", "1"], "0"), 3, 3, Activation::Relu).unwrap();
    assert!(sum.member(&words(&["1", "2", "3"])).unwrap());
    assert!(!sum.member(&words(&["1", "2", "4"])).unwrap());
    let neg = node_automaton(&node(&["-1"], "1"), 2, 2, Activation::Relu).unwrap();
    assert!(neg.member(&words(&["2", "0"])).unwrap());
    assert!(node_automaton(&node(&["1"], "0"), 2, 1, Activation::Relu).is_err());
    assert!(node_automaton(&node(&["1"], "0"), 2, 3, Activation::Relu).is_err());
}

#[test]
fn direct_nodes_match_compositional_nodes() {
    let mut r = rng(32);
    let cases = [
        (node(&["1/2", "-1"], "1"), Activation::Relu),
        (node(&["-3/4"], "1/2"), Activation::Identity),
        (node(&["2", "0"], "-1"), Activation::Relu),
        (node(&["0"], "3/2"), Activation::Relu),
    ];
    for (v, act) in cases {
        let h = v.weights.len();
        let direct = node_automaton(&v, h + 1, h + 1, act).unwrap();
        let composed = node_automaton_compositional(&v, h + 1, h + 1, act).unwrap();
        assert_fg(&direct);
        assert_fg(&composed);
        for _ in 0..60 {
            let x: Vec<Rational> = (0..h).map(|_| small_rational(&mut r, 4, 3)).collect();
            let mut values = x.clone();
            let exact = act.apply(v.affine(&x));
            values.push(if r.gen_bool(0.5) { exact } else { small_rational(&mut r, 4, 3) });
            let w = random_word(&mut r, &values);
            assert_eq!(direct.member(&w).unwrap(), composed.member(&w).unwrap(), "{v:?} at {values:?}");
        }
    }
}

#[test]
fn layer_examples() {
    let l = Layer::new(vec![node(&["1", "-1"], "0"), node(&["1/2", "1"], "-1")], Activation::Relu).unwrap();
    let a = layer_automaton(&l).unwrap();
    let mut r = rng(33);
    for _ in 0..50 {
        let x: Vec<Rational> = (0..2).map(|_| small_rational(&mut r, 6, 3)).collect();
        let y = l.eval(&x);
        let mut good = x.clone();
        good.extend(y.iter().cloned());
        assert!(a.member(&random_word(&mut r, &good)).unwrap());
        let mut bad = good.clone();
        bad[2] = &bad[2] + &q("1");
        assert!(!a.member(&random_word(&mut r, &bad)).unwrap());
    }
    let one = Layer::new(vec![node(&["2"], "1")], Activation::Relu).unwrap();
    let alone = node_automaton(&one.nodes()[0], 2, 2, Activation::Relu).unwrap();
    assert_eq!(layer_automaton(&one).unwrap(), alone);
    let parts: usize = l.nodes().iter().map(|v| node_automaton(v, 4, 3, Activation::Relu).unwrap().states()).product();
    assert!(a.states() <= parts);
}

#[test]
fn network_examples() {
    let n = single(node(&["1"], "0"), Activation::Relu);
    let a = network_automaton(&n).unwrap();
    assert!(a.member(&words(&["1", "1"])).unwrap());
    assert!(a.member(&words(&["-2", "0"])).unwrap());
    assert!(!a.member(&words(&["-2", "-2"])).unwrap());
}

#[test]
fn composition_order_does_not_matter() {
    let mut r = rng(34);
    let mut checked = 0;
    while checked < 6 {
        let net = random_network(&mut r);
        if net.layers().len() < 2 {
            continue;
        }
        let left = network_automaton(&net).unwrap();
        let right = network_automaton_right(&net).unwrap();
        assert_fg(&left);
        assert_fg(&right);
        for _ in 0..40 {
            let x: Vec<Rational> = (0..net.inputs()).map(|_| small_rational(&mut r, 4, 4)).collect();
            let mut values = x.clone();
            let y = eval_exact(&net, &x).unwrap();
            values.extend(y.into_iter().map(|v| if r.gen_bool(0.3) { v + q("1/2") } else { v }));
            let w = random_word(&mut r, &values);
            assert_eq!(left.member(&w).unwrap(), right.member(&w).unwrap(), "{net:?} at {values:?}");
        }
        checked += 1;
    }
}

#[test]
fn translation_is_closed_under_input_representations() {
    let mut r = rng(35);
    for _ in 0..6 {
        let net = random_network(&mut r);
        let a = network_automaton(&net).unwrap();
        for _ in 0..30 {
            let x: Vec<Rational> = (0..net.inputs()).map(|_| small_rational(&mut r, 4, 4)).collect();
            let y = eval_exact(&net, &x).unwrap();
            let mut tracks: Vec<_> = x.iter().chain(&y).map(encode).collect();
            let t = r.gen_range(0..net.inputs());
            tracks[t] = representation_variants(&tracks[t]).unwrap().choose(&mut r).unwrap().clone();
            assert!(a.member(&stack(&tracks).unwrap()).unwrap(), "{net:?} at {x:?}");
        }
    }
}
