//! Brute-force references for testing. Nothing here builds or reuses the
//! relation automata, and the main pipeline never calls into this module.

use crate::automaton::Automaton;
use crate::error::{Error, Result};
use crate::network::{Activation, Network};
use crate::numeric::{Letter, Rational};

/// Cap on ReLU nodes for [`region_enumerate`].
pub const MAX_RELUS: usize = 12;
/// Caps for [`bounded_lasso_emptiness`].
pub const MAX_LASSO_STATES: usize = 12;
pub const MAX_LASSO_TRACKS: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RelationKind {
    Eq,
    Lt,
    Leq,
    Neq,
    /// Summands first, sum last.
    Add,
    /// `(x, relu(x))`.
    Relu,
    /// `(x, |x|)`.
    Abs,
    /// `(x, c·x)`.
    Mult(Rational),
    /// `(c)`.
    Const(Rational),
    /// `Σ c_t v_t ≤ b`.
    LinearLeq(Vec<Rational>, Rational),
    /// `Σ c_t v_t = b`.
    LinearEq(Vec<Rational>, Rational),
}

/// Truth value of a relation on exact rationals.
pub fn relation_oracle(kind: &RelationKind, values: &[Rational]) -> Result<bool> {
    let arity = |n: usize| {
        if values.len() == n {
            Ok(())
        } else {
            Err(Error::Arity(format!("{kind:?} takes {n} values, got {}", values.len())))
        }
    };
    let v = values;
    Ok(match kind {
        RelationKind::Eq => {
            arity(2)?;
            v[0] == v[1]
        }
        RelationKind::Lt => {
            arity(2)?;
            v[0] < v[1]
        }
        RelationKind::Leq => {
            arity(2)?;
            v[0] <= v[1]
        }
        RelationKind::Neq => {
            arity(2)?;
            v[0] != v[1]
        }
        RelationKind::Add => {
            if v.len() < 2 {
                return Err(Error::Arity("add needs a summand and a sum".into()));
            }
            let (sum, parts) = v.split_last().unwrap();
            parts.iter().cloned().sum::<Rational>() == *sum
        }
        RelationKind::Relu => {
            arity(2)?;
            let zero = Rational::zero();
            v[1] == if v[0] > zero { v[0].clone() } else { zero }
        }
        RelationKind::Abs => {
            arity(2)?;
            v[1] == v[0].abs()
        }
        RelationKind::Mult(c) => {
            arity(2)?;
            v[1] == c * &v[0]
        }
        RelationKind::Const(c) => {
            arity(1)?;
            v[0] == *c
        }
        RelationKind::LinearLeq(coeffs, b) => {
            arity(coeffs.len())?;
            coeffs.iter().zip(v).map(|(c, x)| c * x).sum::<Rational>() <= *b
        }
        RelationKind::LinearEq(coeffs, b) => {
            arity(coeffs.len())?;
            coeffs.iter().zip(v).map(|(c, x)| c * x).sum::<Rational>() == *b
        }
    })
}

/// `Σ coeffs_i · z_i ≤ bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Halfspace {
    pub coeffs: Vec<Rational>,
    pub bound: Rational,
}

impl Halfspace {
    pub fn new(coeffs: Vec<Rational>, bound: Rational) -> Halfspace {
        Halfspace { coeffs, bound }
    }
}

/// Affine form `lin · x + constant`.
#[derive(Clone, Debug)]
struct Affine {
    lin: Vec<Rational>,
    constant: Rational,
}

impl Affine {
    fn var(m: usize, i: usize) -> Affine {
        let mut lin = vec![Rational::zero(); m];
        lin[i] = Rational::one();
        Affine { lin, constant: Rational::zero() }
    }

    fn zero(m: usize) -> Affine {
        Affine { lin: vec![Rational::zero(); m], constant: Rational::zero() }
    }

    fn scaled_sum(terms: &[(Rational, &Affine)], constant: Rational) -> Affine {
        let m = terms.first().map_or(0, |(_, a)| a.lin.len());
        let mut out = Affine::zero(m);
        out.constant = constant;
        for (c, a) in terms {
            for (o, l) in out.lin.iter_mut().zip(&a.lin) {
                *o = o.clone() + c * l;
            }
            out.constant = out.constant.clone() + c * &a.constant;
        }
        out
    }

    /// The row `self ≤ 0`.
    fn at_most_zero(&self) -> Row {
        (self.lin.clone(), -&self.constant)
    }
}

type Row = (Vec<Rational>, Rational);

/// Feasibility of `A x ≤ b` by Fourier–Motzkin elimination.
pub fn feasible(rows: &[Halfspace]) -> bool {
    let mut rows: Vec<Row> = rows.iter().map(|h| (h.coeffs.clone(), h.bound.clone())).collect();
    let vars = rows.first().map_or(0, |r| r.0.len());
    for v in 0..vars {
        let zero = Rational::zero();
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows {
            if r.0[v] > zero {
                pos.push(r);
            } else if r.0[v] < zero {
                neg.push(r);
            } else {
                rest.push(r);
            }
        }
        for p in &pos {
            for n in &neg {
                let (a, b) = (p.0[v].clone(), -&n.0[v]);
                let coeffs = p.0.iter().zip(&n.0).map(|(x, y)| &b * x + &a * y).collect();
                let bound = &b * &p.1 + &a * &n.1;
                rest.push((coeffs, bound));
            }
        }
        rest.sort();
        rest.dedup();
        rows = rest;
    }
    rows.iter().all(|r| r.1 >= Rational::zero())
}

/// Is there an input `x` with `inputs(x)` and `outputs(N(x))` all satisfied?
/// Every ReLU activation pattern is tried; on each the network is affine.
pub fn region_enumerate(net: &Network, inputs: &[Halfspace], outputs: &[Halfspace]) -> Result<bool> {
    let relus = net.relu_count();
    if relus > MAX_RELUS {
        return Err(Error::SizeCap(format!("{relus} ReLU nodes, at most {MAX_RELUS} supported")));
    }
    let (m, n) = (net.inputs(), net.outputs());
    if inputs.iter().any(|h| h.coeffs.len() != m) || outputs.iter().any(|h| h.coeffs.len() != n) {
        return Err(Error::Arity("constraint width does not match the network".into()));
    }
    for pattern in 0u32..(1 << relus) {
        let mut rows: Vec<Halfspace> = inputs.to_vec();
        let mut values: Vec<Affine> = (0..m).map(|i| Affine::var(m, i)).collect();
        let mut bit = 0;
        for layer in net.layers() {
            let mut next = Vec::new();
            for node in layer.nodes() {
                let terms: Vec<(Rational, &Affine)> = node.weights.iter().cloned().zip(values.iter()).collect();
                let pre = Affine::scaled_sum(&terms, node.bias.clone());
                match layer.activation() {
                    Activation::Identity => next.push(pre),
                    Activation::Relu => {
                        let active = pattern & (1 << bit) != 0;
                        bit += 1;
                        if active {
                            let neg = Affine::scaled_sum(&[(-Rational::one(), &pre)], Rational::zero());
                            let (c, b) = neg.at_most_zero();
                            rows.push(Halfspace::new(c, b));
                            next.push(pre);
                        } else {
                            let (c, b) = pre.at_most_zero();
                            rows.push(Halfspace::new(c, b));
                            next.push(Affine::zero(m));
                        }
                    }
                }
            }
            values = next;
        }
        for h in outputs {
            let terms: Vec<(Rational, &Affine)> = h.coeffs.iter().cloned().zip(values.iter()).collect();
            let lhs = Affine::scaled_sum(&terms, -&h.bound);
            let (c, b) = lhs.at_most_zero();
            rows.push(Halfspace::new(c, b));
        }
        if feasible(&rows) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Does every `x` with `‖x − r‖₁ ≤ d` make output `h` (1-based) strictly
/// largest?
pub fn arp_oracle(net: &Network, r: &[Rational], d: &Rational, h: usize) -> Result<bool> {
    let (m, n) = (net.inputs(), net.outputs());
    if r.len() != m || h == 0 || h > n {
        return Err(Error::Arity("robustness instance does not match the network".into()));
    }
    for signs in 0u32..(1 << m) {
        let sigma: Vec<Rational> = (0..m)
            .map(|i| if signs & (1 << i) != 0 { -Rational::one() } else { Rational::one() })
            .collect();
        let mut inputs = Vec::new();
        for i in 0..m {
            let mut c = vec![Rational::zero(); m];
            c[i] = -&sigma[i];
            inputs.push(Halfspace::new(c, -(&sigma[i] * &r[i])));
        }
        let offset: Rational = (0..m).map(|i| &sigma[i] * &r[i]).sum();
        inputs.push(Halfspace::new(sigma.clone(), d + &offset));
        for other in (1..=n).filter(|&o| o != h) {
            let mut c = vec![Rational::zero(); n];
            c[h - 1] = Rational::one();
            c[other - 1] = -Rational::one();
            if region_enumerate(net, &inputs, &[Halfspace::new(c, Rational::zero())])? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Bounded lasso search on the explicit-letter graph: is there a prefix of
/// length ≤ |Q| to some `q ∈ F` and a cycle of length ≤ |Q| through `q`
/// inside `F`? Returns `true` when none exists.
pub fn bounded_lasso_emptiness(a: &Automaton) -> Result<bool> {
    let (n, k) = (a.states(), a.tracks());
    if n > MAX_LASSO_STATES || k > MAX_LASSO_TRACKS {
        return Err(Error::SizeCap(format!(
            "{n} states and {k} tracks, at most {MAX_LASSO_STATES} and {MAX_LASSO_TRACKS}"
        )));
    }
    let mut letters: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..k {
        letters = letters
            .into_iter()
            .flat_map(|col| {
                Letter::ALL.into_iter().map(move |l| {
                    let mut c = col.clone();
                    c.push(l);
                    c
                })
            })
            .collect();
    }
    let mut step = vec![vec![false; n]; n];
    for t in a.transitions() {
        let hit = letters.iter().any(|col| {
            t.cubes.iter().any(|cube| cube.sets().iter().zip(col).all(|(set, &l)| set.contains(l)))
        });
        if hit {
            step[t.from][t.to] = true;
        }
    }
    let post = |set: &[bool], inside_f: bool| {
        let mut out = vec![false; n];
        for p in 0..n {
            if set[p] && (!inside_f || a.is_accepting(p)) {
                for q in 0..n {
                    if step[p][q] && (!inside_f || a.is_accepting(q)) {
                        out[q] = true;
                    }
                }
            }
        }
        out
    };
    let mut reached = vec![false; n];
    let mut frontier = vec![false; n];
    frontier[a.initial()] = true;
    for _ in 0..=n {
        for q in 0..n {
            reached[q] |= frontier[q];
        }
        frontier = post(&frontier, false);
    }
    for q in (0..n).filter(|&q| reached[q] && a.is_accepting(q)) {
        let mut set = vec![false; n];
        set[q] = true;
        for _ in 0..n {
            set = post(&set, true);
            if set[q] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
