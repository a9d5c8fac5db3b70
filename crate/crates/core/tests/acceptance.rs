//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::cell::RefCell;
use std::time::{Duration, Instant};

use common::*;
use fgnet::analysis::{arp_check, msr_check, orp_check, ArpProperty, LinearConstraint, MsrInstance, OrpProperty};
use fgnet::automaton::Transition;
use fgnet::network::{eval_exact, network_automaton, Activation, Layer, Network, Node};
use fgnet::numeric::{Rational, UPWord};
use fgnet::oracle::{arp_oracle, bounded_lasso_emptiness, region_enumerate, relation_oracle, Halfspace, RelationKind};
use fgnet::relations::{
    abs, add, add_raw, constant, equality, less_equal, less_than, linear, linear_leq, mult_const, not_equal, relu, Comparison,
};
use fgnet::{Automaton, Cube, LetterSet};
use rand::Rng;

const RELATION_SAMPLES: usize = 300;
const NETWORKS: usize = 20;
const INPUTS_PER_NETWORK: usize = 100;
const ANALYSIS_INSTANCES: usize = 25;
const MSR_NETWORKS: usize = 6;
const RANDOM_AUTOMATA: usize = 50;
const CHAIN_SIZES: [usize; 4] = [1_000, 10_000, 100_000, 1_000_000];
const CHAIN_REPEATS: usize = 5;
/// Largest allowed ratio between measured and fitted emptiness time.
const LINEAR_FIT_FACTOR: f64 = 2.0;
const GOLDEN_BUDGET: Duration = Duration::from_secs(1);
const RELATION_BUDGET: Duration = Duration::from_secs(60);
const TRANSLATION_BUDGET: Duration = Duration::from_secs(300);

thread_local! {
    /// Every automaton built by the criteria, checked by criterion 6.
    static PRODUCED: RefCell<Vec<(String, Automaton)>> = const { RefCell::new(Vec::new()) };
}

fn keep(label: &str, a: Automaton) -> Automaton {
    PRODUCED.with(|p| p.borrow_mut().push((label.to_string(), a.clone())));
    a
}

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn golden() -> Outcome {
    let started = Instant::now();
    let w = UPWord::from_columns(2, &["-+", "01", "10", "11", "00", "10", "..", "01"], &["10", "11"])
        .map_err(|e| e.to_string())?;
    let values = w.decode_tracks().map_err(|e| e.to_string())?;
    ensure(values == vec![q("-27/2"), q("62/3")], || format!("example word decodes to {values:?}"))?;

    let twelve_a = UPWord::single("+1100.", "0").unwrap();
    let twelve_b = UPWord::single("+1011.", "1").unwrap();
    let c12 = keep("constant 12", constant(1, 1, &q("12")).unwrap());
    ensure(c12.member(&twelve_a).unwrap() && c12.member(&twelve_b).unwrap(), || {
        "constant(12) misses a representation".into()
    })?;
    let eq = keep("equality", equality(2, 1, 2).unwrap());
    let pair = fgnet::stack(&[twelve_a, twelve_b]).unwrap();
    ensure(eq.member(&pair).unwrap(), || "equality rejects the two words for 12".into())?;

    let four_four = UPWord::from_columns(3, &["+++", "001", "000", "110", "110", "..."], &["110"]).unwrap();
    let decoded = four_four.decode_tracks().unwrap();
    ensure(decoded == vec![q("4"), q("4"), q("8")], || format!("4+4=8 word decodes to {decoded:?}"))?;
    let raw = keep("add_raw", add_raw());
    ensure(!raw.member(&four_four).unwrap(), || "auxiliary adder accepts the 4+4=8 word".into())?;
    let full = keep("add", add(3, 3, &[1, 2]).unwrap());
    ensure(full.member(&four_four).unwrap(), || "composed adder rejects the 4+4=8 word".into())?;
    let elapsed = started.elapsed();
    ensure(elapsed < GOLDEN_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("exact decodes, 12 and 4+4=8 words as expected, {elapsed:.2?}"))
}

struct RelationCase {
    name: String,
    automaton: Automaton,
    /// Track of each relation argument in the automaton.
    tracks: Vec<usize>,
    kind: RelationKind,
    sample: Box<dyn Fn(&mut rand_chacha::ChaCha8Rng) -> Vec<Rational>>,
}

fn relation_cases() -> Vec<RelationCase> {
    let mut cases = Vec::new();
    let mut push = |name: &str,
                    automaton: Automaton,
                    tracks: Vec<usize>,
                    kind: RelationKind,
                    sample: Box<dyn Fn(&mut rand_chacha::ChaCha8Rng) -> Vec<Rational>>| {
        cases.push(RelationCase { name: name.into(), automaton: keep(name, automaton), tracks, kind, sample });
    };
    let pair = |r: &mut rand_chacha::ChaCha8Rng| {
        let x = small_rational(r, 8, 4);
        let y = if r.gen_bool(0.3) { x.clone() } else { small_rational(r, 8, 4) };
        vec![x, y]
    };
    push("eq", equality(3, 3, 1).unwrap(), vec![3, 1], RelationKind::Eq, Box::new(pair));
    push("lt", less_than(2, 1, 2).unwrap(), vec![1, 2], RelationKind::Lt, Box::new(pair));
    push("leq", less_equal(2, 2, 1).unwrap(), vec![2, 1], RelationKind::Leq, Box::new(pair));
    push("neq", not_equal(2, 1, 2).unwrap(), vec![1, 2], RelationKind::Neq, Box::new(pair));
    let sum = |n: usize| {
        move |r: &mut rand_chacha::ChaCha8Rng| {
            let mut v: Vec<Rational> = (0..n).map(|_| small_rational(r, 8, 4)).collect();
            v.push(v.iter().cloned().sum());
            v
        }
    };
    push("add", add(3, 3, &[1, 2]).unwrap(), vec![1, 2, 3], RelationKind::Add, Box::new(sum(2)));
    push("add (tracks 4,2 -> 1)", add(4, 1, &[4, 2]).unwrap(), vec![4, 2, 1], RelationKind::Add, Box::new(sum(2)));
    push("add (3 summands)", add(4, 4, &[1, 2, 3]).unwrap(), vec![1, 2, 3, 4], RelationKind::Add, Box::new(sum(3)));
    let unary = |f: fn(&Rational) -> Rational| {
        move |r: &mut rand_chacha::ChaCha8Rng| {
            let x = small_rational(r, 8, 4);
            let y = f(&x);
            vec![x, y]
        }
    };
    push("relu", relu(2, 1, 2).unwrap(), vec![1, 2], RelationKind::Relu, Box::new(unary(|x| x.clone().max(Rational::zero()))));
    push("abs", abs(2, 2, 1).unwrap(), vec![2, 1], RelationKind::Abs, Box::new(unary(Rational::abs)));
    for c in ["0", "1", "2", "-1", "3", "5/2", "-7/3"] {
        let cv = q(c);
        let scale = cv.clone();
        push(
            &format!("mult {c}"),
            mult_const(2, &cv, 1, 2).unwrap(),
            vec![1, 2],
            RelationKind::Mult(cv),
            Box::new(move |r| {
                let x = small_rational(r, 8, 4);
                let y = &scale * &x;
                vec![x, y]
            }),
        );
    }
    for c in ["0", "1", "12", "-5/3", "3/4"] {
        let cv = q(c);
        let target = cv.clone();
        push(
            &format!("constant {c}"),
            constant(2, 2, &cv).unwrap(),
            vec![2],
            RelationKind::Const(cv),
            Box::new(move |r| vec![if r.gen_bool(0.5) { target.clone() } else { small_rational(r, 16, 4) }]),
        );
    }
    push(
        "linear 2x1 - x3 <= 1",
        linear_leq(3, &[(1, q("2")), (3, q("-1"))], &q("1")).unwrap(),
        vec![1, 3],
        RelationKind::LinearLeq(vec![q("2"), q("-1")], q("1")),
        Box::new(|r| vec![small_rational(r, 6, 2), small_rational(r, 6, 2)]),
    );
    push(
        "linear (direct) 2x1 - x3/3 = 1/2",
        linear(3, &[(1, q("2")), (3, q("-1/3"))], &q("1/2"), Comparison::Eq).unwrap(),
        vec![1, 3],
        RelationKind::LinearEq(vec![q("2"), q("-1/3")], q("1/2")),
        Box::new(|r| {
            let x = small_rational(r, 6, 4);
            let y = if r.gen_bool(0.6) { (q("2") * &x - q("1/2")) * q("3") } else { small_rational(r, 6, 4) };
            vec![x, y]
        }),
    );
    push(
        "linear (direct) -3x2 + x1/4 <= 2",
        linear(2, &[(2, q("-3")), (1, q("1/4"))], &q("2"), Comparison::Leq).unwrap(),
        vec![2, 1],
        RelationKind::LinearLeq(vec![q("-3"), q("1/4")], q("2")),
        Box::new(|r| vec![small_rational(r, 6, 2), small_rational(r, 6, 2)]),
    );
    push(
        "linear x/2 <= -1",
        linear_leq(1, &[(1, q("1/2"))], &q("-1")).unwrap(),
        vec![1],
        RelationKind::LinearLeq(vec![q("1/2")], q("-1")),
        Box::new(|r| vec![small_rational(r, 8, 2)]),
    );
    cases
}

fn relations() -> Outcome {
    let started = Instant::now();
    let mut r = rng(2);
    let mut total = 0;
    let cases = relation_cases();
    for case in &cases {
        let k = case.automaton.tracks();
        let (mut pos, mut neg) = (0, 0);
        for _ in 0..RELATION_SAMPLES {
            let mut tuple = (case.sample)(&mut r);
            if r.gen_bool(0.4) {
                let i = r.gen_range(0..tuple.len());
                let mut delta = small_rational(&mut r, 4, 4);
                if delta.is_zero() {
                    delta = q("1/4");
                }
                tuple[i] = tuple[i].clone() + delta;
            }
            let mut values: Vec<Rational> = (0..k).map(|_| small_rational(&mut r, 8, 4)).collect();
            for (v, &t) in tuple.iter().zip(&case.tracks) {
                values[t - 1] = v.clone();
            }
            let word = random_word(&mut r, &values);
            let expected = relation_oracle(&case.kind, &tuple).map_err(|e| e.to_string())?;
            let got = case.automaton.member(&word).map_err(|e| e.to_string())?;
            ensure(got == expected, || format!("{}: {word} ({values:?}) member={got}, oracle={expected}", case.name))?;
            if expected {
                pos += 1;
            } else {
                neg += 1;
            }
            total += 1;
        }
        ensure(pos > 0 && neg > 0, || format!("{}: one-sided sample ({pos} positive, {neg} negative)", case.name))?;
    }
    let elapsed = started.elapsed();
    ensure(elapsed < RELATION_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{} builders, {total} membership checks agree with the oracle, {elapsed:.2?}", cases.len()))
}

fn translation() -> Outcome {
    let started = Instant::now();
    let mut r = rng(3);
    let mut checks = 0;
    for n in 0..NETWORKS {
        let net = random_network(&mut r);
        let a = keep("network", network_automaton(&net).map_err(|e| e.to_string())?);
        for _ in 0..INPUTS_PER_NETWORK {
            let x: Vec<Rational> = (0..net.inputs()).map(|_| small_rational(&mut r, 4, 4)).collect();
            let y = eval_exact(&net, &x).unwrap();
            let mut values = x.clone();
            values.extend(y.iter().cloned());
            let w = random_word(&mut r, &values);
            ensure(a.member(&w).unwrap(), || format!("network {n} {net:?}: rejects {x:?} -> {y:?}"))?;
            let j = net.inputs() + r.gen_range(0..net.outputs());
            let mut delta = small_rational(&mut r, 4, 4);
            if delta.is_zero() {
                delta = q("-1/3");
            }
            values[j] = values[j].clone() + delta;
            let w = random_word(&mut r, &values);
            ensure(!a.member(&w).unwrap(), || format!("network {n} {net:?}: accepts perturbed {values:?}"))?;
            checks += 2;
        }
    }
    let elapsed = started.elapsed();
    ensure(elapsed < TRANSLATION_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("{NETWORKS} networks, {checks} membership checks, {elapsed:.2?}"))
}

fn two_output_network(r: &mut rand_chacha::ChaCha8Rng) -> Network {
    loop {
        let net = random_network(r);
        if net.outputs() == 2 {
            return net;
        }
    }
}

fn verdicts() -> Outcome {
    let mut r = rng(4);
    let (mut arp_holds, mut orp_holds) = (0, 0);
    for n in 0..ANALYSIS_INSTANCES {
        let net = two_output_network(&mut r);
        let p = ArpProperty {
            r: (0..net.inputs()).map(|_| small_rational(&mut r, 4, 2)).collect(),
            d: Rational::new(r.gen_range(0..=4), r.gen_range(1..=4)).unwrap(),
            h: r.gen_range(1..=2),
        };
        let v = arp_check(&net, &p).map_err(|e| format!("arp {n}: {e}"))?;
        let o = arp_oracle(&net, &p.r, &p.d, p.h).map_err(|e| e.to_string())?;
        ensure(v.holds == o, || format!("arp {n}: {net:?} {p:?} automaton={} oracle={o}", v.holds))?;
        ensure(v.holds == v.witness.is_none(), || format!("arp {n}: witness presence mismatch"))?;
        arp_holds += v.holds as usize;
    }
    for n in 0..ANALYSIS_INSTANCES {
        let net = random_network(&mut r);
        let (m, o) = (net.inputs(), net.outputs());
        let constraint = |r: &mut rand_chacha::ChaCha8Rng, width: usize| LinearConstraint {
            coeffs: (0..width).map(|_| small_rational(r, 2, 2)).collect(),
            bound: small_rational(r, 4, 2),
        };
        let p = OrpProperty {
            phi_in: (0..r.gen_range(1..=2)).map(|_| constraint(&mut r, m)).collect(),
            phi_out: (0..r.gen_range(0..=1)).map(|_| constraint(&mut r, o)).collect(),
        };
        let v = orp_check(&net, &p).map_err(|e| format!("orp {n}: {e}"))?;
        let to_half = |c: &LinearConstraint| Halfspace::new(c.coeffs.clone(), c.bound.clone());
        let inputs: Vec<Halfspace> = p.phi_in.iter().map(to_half).collect();
        let outputs: Vec<Halfspace> = p.phi_out.iter().map(to_half).collect();
        let expected = region_enumerate(&net, &inputs, &outputs).map_err(|e| e.to_string())?;
        ensure(v.holds == expected, || format!("orp {n}: {net:?} {p:?} automaton={} oracle={expected}", v.holds))?;
        ensure(v.holds == v.witness.is_some(), || format!("orp {n}: witness presence mismatch"))?;
        orp_holds += v.holds as usize;
    }

    let node = |w: &[&str], b: &str| Node::new(w.iter().map(|c| q(c)).collect(), q(b)).unwrap();
    let net = Network::new(vec![Layer::new(vec![node(&["1", "0"], "0")], Activation::Relu).unwrap()]).unwrap();
    let r0 = vec![q("1"), q("0")];
    let msr = |net: &Network, fixed: Vec<usize>, r: &[Rational]| {
        msr_check(net, &MsrInstance { r: r.to_vec(), fixed }).map_err(|e| e.to_string())
    };
    ensure(msr(&net, vec![1], &r0)?.holds, || "msr example {1} fails".into())?;
    let broken = msr(&net, vec![2], &r0)?;
    ensure(!broken.holds && broken.witness.as_ref().is_some_and(|w| w.input[0] != q("1")), || {
        "msr example {2} not violated with a witness differing in x1".into()
    })?;
    ensure(msr(&net, vec![1, 2], &r0)?.holds, || "msr with all inputs fixed fails".into())?;
    let mut monotone = 0;
    for _ in 0..MSR_NETWORKS {
        let net = loop {
            let n = random_network(&mut r);
            if n.inputs() == 2 && n.layers().len() == 1 {
                break n;
            }
        };
        let point: Vec<Rational> = (0..2).map(|_| small_rational(&mut r, 3, 2)).collect();
        let subsets: [Vec<usize>; 4] = [vec![], vec![1], vec![2], vec![1, 2]];
        let holds: Vec<bool> =
            subsets.iter().map(|s| msr(&net, s.clone(), &point).map(|v| v.holds)).collect::<Result<_, _>>()?;
        for (i, a) in subsets.iter().enumerate() {
            for (j, b) in subsets.iter().enumerate() {
                if a.iter().all(|x| b.contains(x)) && holds[i] {
                    ensure(holds[j], || format!("msr not monotone on {net:?} at {point:?}: {a:?} vs {b:?}"))?;
                    monotone += 1;
                }
            }
        }
        ensure(holds[3], || "msr with all inputs fixed fails".into())?;
    }
    Ok(format!(
        "arp {ANALYSIS_INSTANCES} instances ({arp_holds} hold), orp {ANALYSIS_INSTANCES} instances ({orp_holds} reachable), \
         msr examples and {monotone} superset checks"
    ))
}

fn random_automaton(r: &mut rand_chacha::ChaCha8Rng) -> Automaton {
    let states = r.gen_range(1..=12);
    let tracks = r.gen_range(1..=2);
    let accepting: Vec<bool> = (0..states).map(|_| r.gen_bool(0.5)).collect();
    let mut transitions = Vec::new();
    for from in 0..states {
        for to in 0..states {
            if accepting[from] && !accepting[to] {
                continue;
            }
            if r.gen_bool(0.3) {
                let cubes = (0..r.gen_range(1..=2))
                    .map(|_| {
                        let sets = (0..tracks)
                            .map(|_| {
                                let bits = r.gen_range(1..32u8);
                                LetterSet::parse(
                                    &"+-.01".chars().enumerate().filter(|(i, _)| bits & (1 << i) != 0).map(|(_, c)| c).collect::<String>(),
                                )
                                .unwrap()
                            })
                            .collect();
                        Cube::new(sets).unwrap()
                    })
                    .collect();
                transitions.push(Transition { from, to, cubes });
            }
        }
    }
    let acc: Vec<usize> = (0..states).filter(|&s| accepting[s]).collect();
    Automaton::from_parts(tracks, states, 0, &acc, transitions).unwrap()
}

fn chain(n: usize) -> Automaton {
    let all = || vec![Cube::uniform(1, LetterSet::ALL)];
    let mut transitions: Vec<Transition> = (0..n - 1).map(|i| Transition { from: i, to: i + 1, cubes: all() }).collect();
    transitions.push(Transition { from: n - 1, to: n - 1, cubes: all() });
    Automaton::from_parts(1, n, 0, &[n - 1], transitions).unwrap()
}

fn emptiness() -> Outcome {
    let mut r = rng(5);
    let mut empty = 0;
    for n in 0..RANDOM_AUTOMATA {
        let a = keep("random", random_automaton(&mut r));
        let oracle = bounded_lasso_emptiness(&a).map_err(|e| e.to_string())?;
        ensure(a.is_empty() == oracle, || format!("random automaton {n}: is_empty={} oracle={oracle}", a.is_empty()))?;
        if let Some(w) = a.witness() {
            ensure(a.member(&w).unwrap(), || format!("random automaton {n}: witness not accepted"))?;
        }
        empty += a.is_empty() as usize;
    }
    ensure(empty > 0 && empty < RANDOM_AUTOMATA, || format!("one-sided random sample ({empty} empty)"))?;

    let mut points = Vec::new();
    for &n in &CHAIN_SIZES {
        let a = chain(n);
        let mut best = f64::INFINITY;
        for _ in 0..CHAIN_REPEATS {
            let t = Instant::now();
            let e = a.is_empty();
            best = best.min(t.elapsed().as_secs_f64());
            ensure(!e, || format!("chain of {n} states reported empty"))?;
        }
        points.push((n as f64, best));
    }
    // Best proportional model t = b·n under the max-ratio metric: b is the
    // geometric mean of the extreme per-state costs.
    let costs: Vec<f64> = points.iter().map(|(n, t)| t / n).collect();
    let lo = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = costs.iter().copied().fold(0.0, f64::max);
    let worst = (hi / lo).sqrt();
    let timings: Vec<String> = points.iter().map(|(n, t)| format!("{n:.0}:{:.2}ms", t * 1e3)).collect();
    ensure(worst <= LINEAR_FIT_FACTOR, || format!("linear fit off by {worst:.2}x ({})", timings.join(", ")))?;
    Ok(format!(
        "{RANDOM_AUTOMATA} random automata agree ({empty} empty); chains {} fit linear within {worst:.2}x",
        timings.join(", ")
    ))
}

fn fg_discipline() -> Outcome {
    let produced = PRODUCED.with(|p| p.borrow().clone());
    for (label, a) in &produced {
        let d = a.validate_fg();
        ensure(d.is_valid(), || format!("{label}: {:?}", d.issues))?;
    }
    Ok(format!("{} automata validated", produced.len()))
}

fn size_growth() -> Outcome {
    let mut counts = Vec::new();
    for c in ["3", "5", "9", "17", "33"] {
        let a = keep("mult", mult_const(2, &q(c), 1, 2).map_err(|e| e.to_string())?);
        counts.push((c, a.stats().states));
    }
    let monotone = counts.windows(2).all(|w| w[0].1 < w[1].1);
    let shown: Vec<String> = counts.iter().map(|(c, s)| format!("c={c}:{s}")).collect();
    ensure(monotone, || format!("mult_const states not monotone: {}", shown.join(", ")))?;
    let adder = add(3, 3, &[1, 2]).unwrap().stats();
    let again = add(4, 2, &[4, 1]).unwrap();
    Ok(format!(
        "mult_const states {}; add(3,3,[1,2]) {} states/{} transitions; lifted add {} states",
        shown.join(", "),
        adder.states,
        adder.transitions,
        again.stats().states
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("1 golden values", golden),
        ("2 relation soundness", relations),
        ("3 translation correctness", translation),
        ("4 verification verdicts", verdicts),
        ("5 emptiness", emptiness),
        ("6 FG discipline", fg_discipline),
        ("7 size growth", size_growth),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let started = Instant::now();
        match run() {
            Ok(detail) => println!("criterion {name}: PASS ({detail}) [{:.2?}]", started.elapsed()),
            Err(why) => {
                failed += 1;
                println!("criterion {name}: FAIL ({why}) [{:.2?}]", started.elapsed());
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
