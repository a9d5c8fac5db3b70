#![allow(dead_code)]

use fgnet::network::{Activation, Layer, Network, Node};
use fgnet::numeric::{encode, representation_variants, stack, Rational, UPWord};
use fgnet::Automaton;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn q(s: &str) -> Rational {
    s.parse().unwrap()
}

/// Small rational with numerator in `-num..=num` and denominator in `1..=den`.
pub fn small_rational(rng: &mut impl Rng, num: i64, den: i64) -> Rational {
    Rational::new(rng.gen_range(-num..=num), rng.gen_range(1..=den)).unwrap()
}

/// Some representation of `v`, not necessarily the canonical one.
pub fn random_repr(rng: &mut impl Rng, v: &Rational) -> UPWord {
    let mut w = encode(v);
    for _ in 0..rng.gen_range(0..3) {
        let vs = representation_variants(&w).unwrap();
        w = vs.choose(rng).unwrap().clone();
    }
    w
}

pub fn canonical(values: &[Rational]) -> UPWord {
    stack(&values.iter().map(encode).collect::<Vec<_>>()).unwrap()
}

pub fn random_word(rng: &mut impl Rng, values: &[Rational]) -> UPWord {
    stack(&values.iter().map(|v| random_repr(rng, v)).collect::<Vec<_>>()).unwrap()
}

pub fn words(values: &[&str]) -> UPWord {
    canonical(&values.iter().map(|s| q(s)).collect::<Vec<_>>())
}

pub fn assert_fg(a: &Automaton) {
    let d = a.validate_fg();
    assert!(d.is_valid(), "FG violation: {:?}", d.issues);
}

/// Tiny random network: `m, n ≤ 2`, at most two layers and three nodes.
pub fn random_network(rng: &mut impl Rng) -> Network {
    let m = rng.gen_range(1..=2);
    let layers = rng.gen_range(1..=2);
    let mut dims = vec![m];
    let mut budget = 3;
    for l in 0..layers {
        let rest = layers - l - 1;
        let max = (budget - rest).min(2);
        let n = rng.gen_range(1..=max);
        budget -= n;
        dims.push(n);
    }
    let mut out = Vec::new();
    for l in 0..layers {
        let nodes = (0..dims[l + 1])
            .map(|_| {
                let w = (0..dims[l]).map(|_| small_rational(rng, 4, 4)).collect();
                Node::new(w, small_rational(rng, 4, 4)).unwrap()
            })
            .collect();
        let act = if l + 1 == layers && rng.gen_bool(0.5) { Activation::Identity } else { Activation::Relu };
        out.push(Layer::new(nodes, act).unwrap());
    }
    Network::new(out).unwrap()
}
