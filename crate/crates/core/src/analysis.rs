//! Robustness, output reachability and sufficient reasons, decided by
//! emptiness of product automata over the network relation.

use std::time::{Duration, Instant};

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::automaton::{
    cartesian, intersect_all, project, saturate_leading_zeros, union_all, Automaton, Stats,
};
use crate::error::{Error, Result};
use crate::network::{eval_exact, network_automaton, Network};
use crate::numeric::{Rational, UPWord};
use crate::relations::{self, lift, linear, Comparison};

/// The closed 1-norm ball of radius `d` around `r` must be classified as
/// output `h` (1-based), strictly above every other output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArpProperty {
    pub r: Vec<Rational>,
    pub d: Rational,
    pub h: usize,
}

/// `Σ coeffs_i · v_i ≤ bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearConstraint {
    pub coeffs: Vec<Rational>,
    pub bound: Rational,
}

impl LinearConstraint {
    pub fn holds(&self, v: &[Rational]) -> bool {
        self.coeffs.iter().zip(v).map(|(c, x)| c * x).sum::<Rational>() <= self.bound
    }
}

/// Is some `x ⊨ phi_in` mapped to an output satisfying `phi_out`?
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct OrpProperty {
    pub phi_in: Vec<LinearConstraint>,
    pub phi_out: Vec<LinearConstraint>,
}

/// Fixing the inputs in `fixed` (1-based) to their values in `r` forces the
/// output `N(r)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MsrInstance {
    pub r: Vec<Rational>,
    pub fixed: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub input: Vec<Rational>,
    pub output: Vec<Rational>,
    pub word: UPWord,
}

/// For robustness and sufficient reasons `holds` means the property is
/// true and a witness is a counterexample. For reachability `holds` means
/// reachable and the witness is a reaching input.
#[derive(Clone, Debug)]
pub struct AnalysisVerdict {
    pub holds: bool,
    pub witness: Option<Witness>,
    pub stats: Stats,
    pub build_time: Duration,
    pub check_time: Duration,
}

fn dims(net: &Network, what: &str, ok: bool) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Arity(format!(
            "{what} does not match a network with {} inputs and {} outputs",
            net.inputs(),
            net.outputs()
        )))
    }
}

/// `e = |r − x|` with `x` on track 1 and `e` on track 2.
fn distance_core(r: &Rational) -> Result<Automaton> {
    // x on 1, e on 2, -x on 3, r on 4, r - x on 5.
    let parts = [
        relations::mult_const(5, &Rational::from_integer(-1), 1, 3)?,
        relations::constant(5, 4, r)?,
        relations::add(5, 5, &[3, 4])?,
        relations::abs(5, 5, 2)?,
    ];
    Ok(saturate_leading_zeros(&project(&intersect_all(parts.iter())?, &[1, 2])?))
}

fn check_ball(k: usize, p: &ArpProperty) -> Result<usize> {
    let m = p.r.len();
    if m == 0 || k < m {
        return Err(Error::Arity(format!("{m} centre coordinates for {k} tracks")));
    }
    if p.d.is_negative() {
        return Err(Error::Input("negative radius".into()));
    }
    Ok(m)
}

/// Accepts `w` iff `Σ_{i≤m} |r_i − dec(w_i)| ≤ d`, as the intersection of
/// `Σ s_i (dec(w_i) − r_i) ≤ d` over all sign vectors `s`.
pub fn arp_input_automaton(k: usize, p: &ArpProperty) -> Result<Automaton> {
    let m = check_ball(k, p)?;
    let mut parts = Vec::new();
    for signs in 0..1usize << m {
        let s = |i: usize| if signs >> i & 1 == 1 { -Rational::one() } else { Rational::one() };
        let coeffs: Vec<(usize, Rational)> = (0..m).map(|i| (i + 1, s(i))).collect();
        let shift: Rational = p.r.iter().enumerate().map(|(i, r)| s(i) * r).sum();
        parts.push(linear(m, &coeffs, &(&p.d + &shift), Comparison::Leq)?);
    }
    lift(&intersect_all(parts.iter())?, k, &(1..=m).collect::<Vec<_>>())
}

/// The same ball through distance tracks `|r_i − x_i|` and the
/// compositional [`relations::linear_leq`].
pub fn arp_input_automaton_compositional(k: usize, p: &ArpProperty) -> Result<Automaton> {
    let m = check_ball(k, p)?;
    // x_i on track i, |r_i − x_i| on track m+i.
    let mut parts = Vec::new();
    for (i, r) in p.r.iter().enumerate() {
        parts.push(lift(&distance_core(r)?, 2 * m, &[i + 1, m + i + 1])?);
    }
    let ones: Vec<(usize, Rational)> = (m + 1..=2 * m).map(|t| (t, Rational::one())).collect();
    parts.push(relations::linear_leq(2 * m, &ones, &p.d)?);
    let ball = saturate_leading_zeros(&project(&intersect_all(parts.iter())?, &(1..=m).collect::<Vec<_>>())?);
    lift(&ball, k, &(1..=m).collect::<Vec<_>>())
}

fn decode_split(w: &UPWord, m: usize, n: usize) -> Result<(Vec<Rational>, Vec<Rational>)> {
    let vals = w.decode_tracks().map_err(|e| Error::Internal(format!("witness does not decode: {e}")))?;
    Ok((vals[..m].to_vec(), vals[m..m + n].to_vec()))
}

fn finish(
    a: &Automaton,
    started: Instant,
    holds_if_empty: bool,
    validate: impl FnOnce(&UPWord) -> Result<Witness>,
) -> Result<AnalysisVerdict> {
    let build_time = started.elapsed();
    let t = Instant::now();
    let word = a.witness();
    let check_time = t.elapsed();
    let holds = word.is_none() == holds_if_empty;
    let witness = word.as_ref().map(validate).transpose()?;
    Ok(AnalysisVerdict { holds, witness, stats: a.stats(), build_time, check_time })
}

pub fn arp_check(net: &Network, p: &ArpProperty) -> Result<AnalysisVerdict> {
    let (m, n) = (net.inputs(), net.outputs());
    dims(net, "robustness property", p.r.len() == m && p.h >= 1 && p.h <= n)?;
    let started = Instant::now();
    let k = m + n;
    let a = if n == 1 {
        Automaton::empty(k)
    } else {
        let beaten = (1..=n)
            .filter(|&o| o != p.h)
            .map(|o| relations::less_equal(k, m + p.h, m + o))
            .collect::<Result<Vec<_>>>()?;
        let parts = [arp_input_automaton(k, p)?, union_all(beaten.iter())?, network_automaton(net)?];
        intersect_all(parts.iter())?
    };
    finish(&a, started, true, |w| {
        let (x, y) = decode_split(w, m, n)?;
        let dist: Rational = x.iter().zip(&p.r).map(|(a, b)| (a - b).abs()).sum();
        let ok = eval_exact(net, &x)? == y
            && dist <= p.d
            && (1..=n).any(|o| o != p.h && y[p.h - 1] <= y[o - 1]);
        if !ok {
            return Err(Error::Internal(format!("robustness witness {x:?} -> {y:?} does not re-validate")));
        }
        Ok(Witness { input: x, output: y, word: w.clone() })
    })
}

fn constraint_automaton(k: usize, offset: usize, c: &LinearConstraint) -> Result<Automaton> {
    let coeffs: Vec<(usize, Rational)> =
        c.coeffs.iter().enumerate().map(|(i, v)| (offset + i + 1, v.clone())).collect();
    linear(k, &coeffs, &c.bound, Comparison::Leq)
}

pub fn orp_check(net: &Network, p: &OrpProperty) -> Result<AnalysisVerdict> {
    let (m, n) = (net.inputs(), net.outputs());
    dims(
        net,
        "reachability property",
        p.phi_in.iter().all(|c| c.coeffs.len() == m) && p.phi_out.iter().all(|c| c.coeffs.len() == n),
    )?;
    let started = Instant::now();
    let k = m + n;
    let mut parts = Vec::new();
    for c in &p.phi_in {
        parts.push(constraint_automaton(k, 0, c)?);
    }
    parts.push(network_automaton(net)?);
    for c in &p.phi_out {
        parts.push(constraint_automaton(k, m, c)?);
    }
    let a = intersect_all(parts.iter())?;
    finish(&a, started, false, |w| {
        let (x, y) = decode_split(w, m, n)?;
        let ok = eval_exact(net, &x)? == y
            && p.phi_in.iter().all(|c| c.holds(&x))
            && p.phi_out.iter().all(|c| c.holds(&y));
        if !ok {
            return Err(Error::Internal(format!("reachability witness {x:?} -> {y:?} does not re-validate")));
        }
        Ok(Witness { input: x, output: y, word: w.clone() })
    })
}

pub fn msr_check(net: &Network, p: &MsrInstance) -> Result<AnalysisVerdict> {
    msr_check_with(net, &network_automaton(net)?, p)
}

fn msr_check_with(net: &Network, a_n: &Automaton, p: &MsrInstance) -> Result<AnalysisVerdict> {
    let (m, n) = (net.inputs(), net.outputs());
    dims(net, "sufficient-reason instance", p.r.len() == m && p.fixed.iter().all(|&i| i >= 1 && i <= m))?;
    let started = Instant::now();
    let l = m + n;
    let k = 2 * l;
    let wf = relations::wf(l)?;
    // The second copy is pinned to r first so that the product stays small.
    let mut parts = vec![cartesian(&wf, a_n)?];
    for (i, r) in p.r.iter().enumerate() {
        parts.push(relations::constant(k, l + i + 1, r)?);
    }
    for &i in &p.fixed {
        parts.push(relations::equality(k, i, l + i)?);
    }
    parts.push(cartesian(a_n, &wf)?);
    let differs = (1..=n).map(|i| relations::not_equal(k, m + i, l + m + i)).collect::<Result<Vec<_>>>()?;
    parts.push(union_all(differs.iter())?);
    let a = intersect_all(parts.iter())?;
    let target = eval_exact(net, &p.r)?;
    finish(&a, started, true, |w| {
        let (x, y) = decode_split(w, m, n)?;
        let ok = eval_exact(net, &x)? == y && y != target && p.fixed.iter().all(|&i| x[i - 1] == p.r[i - 1]);
        if !ok {
            return Err(Error::Internal(format!("sufficient-reason witness {x:?} -> {y:?} does not re-validate")));
        }
        Ok(Witness { input: x, output: y, word: w.clone() })
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MsrSearch {
    /// First sufficient subset of the requested size, in lexicographic order.
    pub subset: Option<Vec<usize>>,
    /// Number of candidate subsets checked.
    pub candidates: usize,
}

pub fn msr_search(net: &Network, r: &[Rational], l: usize) -> Result<MsrSearch> {
    let m = net.inputs();
    dims(net, "sufficient-reason search", r.len() == m && l <= m)?;
    let a_n = network_automaton(net)?;
    let mut candidates = 0;
    for subset in (1..=m).combinations(l) {
        candidates += 1;
        let inst = MsrInstance { r: r.to_vec(), fixed: subset.clone() };
        if msr_check_with(net, &a_n, &inst)?.holds {
            return Ok(MsrSearch { subset: Some(subset), candidates });
        }
    }
    Ok(MsrSearch { subset: None, candidates })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Property {
    Arp(ArpProperty),
    Orp(OrpProperty),
    Msr(MsrInstance),
    MsrSearch { r: Vec<Rational>, l: usize },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum PropertyFile {
    Arp {
        r: Vec<String>,
        d: String,
        h: usize,
    },
    Orp {
        #[serde(default)]
        phi_in: Vec<ConstraintFile>,
        #[serde(default)]
        phi_out: Vec<ConstraintFile>,
    },
    Msr {
        r: Vec<String>,
        #[serde(rename = "I", default)]
        fixed: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        l: Option<usize>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintFile {
    coeffs: Vec<String>,
    bound: String,
}

fn rationals(v: &[String]) -> Result<Vec<Rational>> {
    v.iter().map(|s| s.parse()).collect()
}

fn strings(v: &[Rational]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn constraints(v: &[ConstraintFile]) -> Result<Vec<LinearConstraint>> {
    v.iter().map(|c| Ok(LinearConstraint { coeffs: rationals(&c.coeffs)?, bound: c.bound.parse()? })).collect()
}

fn constraint_files(v: &[LinearConstraint]) -> Vec<ConstraintFile> {
    v.iter().map(|c| ConstraintFile { coeffs: strings(&c.coeffs), bound: c.bound.to_string() }).collect()
}

impl Property {
    pub fn from_json(text: &str) -> Result<Property> {
        let file: PropertyFile = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        Ok(match file {
            PropertyFile::Arp { r, d, h } => Property::Arp(ArpProperty { r: rationals(&r)?, d: d.parse()?, h }),
            PropertyFile::Orp { phi_in, phi_out } => {
                Property::Orp(OrpProperty { phi_in: constraints(&phi_in)?, phi_out: constraints(&phi_out)? })
            }
            PropertyFile::Msr { r, fixed, l: Some(l) } => {
                if !fixed.is_empty() {
                    return Err(Error::Format("a sufficient-reason search takes l, not I".into()));
                }
                Property::MsrSearch { r: rationals(&r)?, l }
            }
            PropertyFile::Msr { r, fixed, l: None } => Property::Msr(MsrInstance { r: rationals(&r)?, fixed }),
        })
    }

    pub fn to_json(&self) -> String {
        let file = match self {
            Property::Arp(p) => PropertyFile::Arp { r: strings(&p.r), d: p.d.to_string(), h: p.h },
            Property::Orp(p) => {
                PropertyFile::Orp { phi_in: constraint_files(&p.phi_in), phi_out: constraint_files(&p.phi_out) }
            }
            Property::Msr(p) => PropertyFile::Msr { r: strings(&p.r), fixed: p.fixed.clone(), l: None },
            Property::MsrSearch { r, l } => PropertyFile::Msr { r: strings(r), fixed: Vec::new(), l: Some(*l) },
        };
        serde_json::to_string_pretty(&file).expect("serialisable") + "\n"
    }
}
