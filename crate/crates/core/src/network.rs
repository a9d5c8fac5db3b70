//! Feed-forward networks with rational weights, exact evaluation, and the
//! translation into automata over `m + n` tracks.

use serde::{Deserialize, Serialize};

use crate::automaton::{compose, intersect, intersect_all, project, saturate_leading_zeros, union, Automaton};
use crate::error::{Error, Result};
use crate::numeric::Rational;
use crate::relations::{self, lift, linear, Comparison};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, v: Rational) -> Rational {
        match self {
            Activation::Relu => v.max(Rational::zero()),
            Activation::Identity => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub weights: Vec<Rational>,
    pub bias: Rational,
}

impl Node {
    pub fn new(weights: Vec<Rational>, bias: Rational) -> Result<Node> {
        if weights.is_empty() {
            return Err(Error::Input("a node needs at least one weight".into()));
        }
        Ok(Node { weights, bias })
    }

    pub fn measure(&self) -> u64 {
        self.weights.iter().map(Rational::measure).sum::<u64>() + self.bias.measure()
    }

    /// `b + Σ c_i x_i` before activation.
    pub fn affine(&self, x: &[Rational]) -> Rational {
        self.weights.iter().zip(x).map(|(c, v)| c * v).sum::<Rational>() + &self.bias
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layer {
    nodes: Vec<Node>,
    activation: Activation,
}

impl Layer {
    pub fn new(nodes: Vec<Node>, activation: Activation) -> Result<Layer> {
        let Some(first) = nodes.first() else {
            return Err(Error::Input("a layer needs at least one node".into()));
        };
        let m = first.weights.len();
        if nodes.iter().any(|v| v.weights.len() != m) {
            return Err(Error::Arity("nodes of a layer have different input dimensions".into()));
        }
        Ok(Layer { nodes, activation })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn inputs(&self) -> usize {
        self.nodes[0].weights.len()
    }

    pub fn outputs(&self) -> usize {
        self.nodes.len()
    }

    pub fn eval(&self, x: &[Rational]) -> Vec<Rational> {
        self.nodes.iter().map(|v| self.activation.apply(v.affine(x))).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Network> {
        if layers.is_empty() {
            return Err(Error::Input("a network needs at least one layer".into()));
        }
        for (n, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::Arity(format!(
                    "layer {} has {} outputs but layer {} takes {} inputs",
                    n + 1,
                    pair[0].outputs(),
                    n + 2,
                    pair[1].inputs()
                )));
            }
        }
        Ok(Network { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn inputs(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().expect("nonempty").outputs()
    }

    pub fn relu_count(&self) -> usize {
        self.layers.iter().filter(|l| l.activation == Activation::Relu).map(Layer::outputs).sum()
    }

    pub fn from_json(text: &str) -> Result<Network> {
        let file: NetworkFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        file.into_network()
    }

    pub fn to_json(&self) -> String {
        let file = NetworkFile {
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile {
                    activation: l.activation,
                    weights: l.nodes.iter().map(|v| v.weights.iter().map(|c| c.to_string()).collect()).collect(),
                    bias: l.nodes.iter().map(|v| v.bias.to_string()).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("serialisable") + "\n"
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    activation: Activation,
    weights: Vec<Vec<String>>,
    bias: Vec<String>,
}

impl NetworkFile {
    fn into_network(self) -> Result<Network> {
        let mut layers = Vec::new();
        for (n, l) in self.layers.into_iter().enumerate() {
            if l.weights.len() != l.bias.len() {
                return Err(Error::Format(format!(
                    "layer {}: {} weight rows but {} biases",
                    n + 1,
                    l.weights.len(),
                    l.bias.len()
                )));
            }
            let nodes = l
                .weights
                .iter()
                .zip(&l.bias)
                .map(|(row, b)| {
                    let weights = row.iter().map(|c| c.parse()).collect::<Result<Vec<Rational>>>()?;
                    Node::new(weights, b.parse()?)
                })
                .collect::<Result<Vec<_>>>()?;
            layers.push(Layer::new(nodes, l.activation)?);
        }
        Network::new(layers)
    }
}

/// Exact forward pass.
pub fn eval_exact(net: &Network, x: &[Rational]) -> Result<Vec<Rational>> {
    if x.len() != net.inputs() {
        return Err(Error::Arity(format!("network takes {} inputs, got {}", net.inputs(), x.len())));
    }
    let mut v = x.to_vec();
    for l in &net.layers {
        v = l.eval(&v);
    }
    Ok(v)
}

pub fn measure_network(net: &Network) -> u64 {
    net.layers.iter().flat_map(|l| &l.nodes).map(Node::measure).sum()
}

/// `s = b + Σ c_i x_i` with inputs on tracks `1..=h` and `s` on `h+1`.
fn affine_core(v: &Node) -> Result<Automaton> {
    let h = v.weights.len();
    let s = h + 1;
    let mut next = s;
    let mut parts: Vec<(Automaton, Vec<usize>)> = Vec::new();
    let mut summands = Vec::new();
    for (n, c) in v.weights.iter().enumerate() {
        let x = n + 1;
        if c.is_zero() {
            continue;
        }
        if *c == 1 {
            summands.push(x);
        } else {
            next += 1;
            parts.push((relations::mult_const(2, c, 1, 2)?, vec![x, next]));
            summands.push(next);
        }
    }
    if !v.bias.is_zero() {
        next += 1;
        parts.push((relations::constant(1, 1, &v.bias)?, vec![next]));
        summands.push(next);
    }
    match summands.len() {
        0 => parts.push((relations::constant(1, 1, &Rational::zero())?, vec![s])),
        1 => parts.push((relations::equality(2, 1, 2)?, vec![summands[0], s])),
        n => {
            let mut map = summands.clone();
            map.push(s);
            parts.push((relations::add(n + 1, n + 1, &(1..=n).collect::<Vec<_>>())?, map));
        }
    }
    let total = next;
    let lifted = parts.iter().map(|(a, m)| lift(a, total, m)).collect::<Result<Vec<_>>>()?;
    let all = intersect_all(lifted.iter())?;
    let keep: Vec<usize> = (1..=s).collect();
    if total == s {
        return Ok(all);
    }
    Ok(saturate_leading_zeros(&project(&all, &keep)?))
}

/// Products, bias and sum on temporaries, then relu or equality.
fn node_core_compositional(v: &Node, activation: Activation) -> Result<Automaton> {
    let affine = affine_core(v)?;
    match activation {
        Activation::Identity => Ok(affine),
        Activation::Relu => compose(&affine, &relations::relu(2, 1, 2)?, 1),
    }
}

/// The same relation from carry automata: `y = t`, or `y = 0` and `t ≤ 0` for relu.
fn node_core(v: &Node, activation: Activation) -> Result<Automaton> {
    let h = v.weights.len();
    let y = h + 1;
    let inputs: Vec<(usize, Rational)> = v.weights.iter().cloned().enumerate().map(|(n, c)| (n + 1, c)).collect();
    let mut affine = inputs.clone();
    affine.push((y, -Rational::one()));
    let exact = linear(y, &affine, &-&v.bias, Comparison::Eq)?;
    if activation == Activation::Identity {
        return Ok(exact);
    }
    let negated: Vec<(usize, Rational)> = inputs.iter().map(|(t, c)| (*t, -c)).collect();
    let active = intersect(&exact, &linear(y, &negated, &v.bias, Comparison::Leq)?)?;
    let zero = intersect(
        &linear(y, &[(y, Rational::one())], &Rational::zero(), Comparison::Eq)?,
        &linear(y, &inputs, &-&v.bias, Comparison::Leq)?,
    )?;
    union(&active, &zero)
}

fn check_out(h: usize, k: usize, out: usize) -> Result<Vec<usize>> {
    if out <= h || out > k {
        return Err(Error::Arity(format!("output track {out} must lie in {}..={k}", h + 1)));
    }
    let mut map: Vec<usize> = (1..=h).collect();
    map.push(out);
    Ok(map)
}

/// `w_out = σ(b + Σ c_i w_i)` over inputs on tracks `1..=h` of a `k`-track word.
pub fn node_automaton(v: &Node, k: usize, out: usize, activation: Activation) -> Result<Automaton> {
    let map = check_out(v.weights.len(), k, out)?;
    lift(&node_core(v, activation)?, k, &map)
}

/// [`node_automaton`] through multiplication, constant and addition
/// automata on temporary tracks. Much larger; kept as a cross-check.
pub fn node_automaton_compositional(v: &Node, k: usize, out: usize, activation: Activation) -> Result<Automaton> {
    let map = check_out(v.weights.len(), k, out)?;
    lift(&node_core_compositional(v, activation)?, k, &map)
}

/// Relates layer inputs on tracks `1..=m` to outputs on `m+1..=m+n`.
pub fn layer_automaton(l: &Layer) -> Result<Automaton> {
    let (m, n) = (l.inputs(), l.outputs());
    let parts = l
        .nodes
        .iter()
        .enumerate()
        .map(|(j, v)| node_automaton(v, m + n, m + j + 1, l.activation))
        .collect::<Result<Vec<_>>>()?;
    intersect_all(parts.iter())
}

/// Composition of the layer automata, left to right.
pub fn network_automaton(net: &Network) -> Result<Automaton> {
    let mut acc = layer_automaton(&net.layers[0])?;
    for l in &net.layers[1..] {
        acc = compose(&acc, &layer_automaton(l)?, l.inputs())?;
    }
    Ok(acc)
}

/// Same relation, composing from the last layer backwards.
pub fn network_automaton_right(net: &Network) -> Result<Automaton> {
    let last = net.layers.len() - 1;
    let mut acc = layer_automaton(&net.layers[last])?;
    for l in net.layers[..last].iter().rev() {
        acc = compose(&layer_automaton(l)?, &acc, l.outputs())?;
    }
    Ok(acc)
}
