//! Automata for the atomic arithmetic relations over well-formed words.
//!
//! Each builder first constructs its relation on the fewest tracks possible
//! and then lifts it to `k` tracks with [`lift`]. All results accept only
//! well-formed words.

use std::sync::OnceLock;

use crate::automaton::{
    compose, embed, intersect, intersect_all, project, reduce, saturate_leading_zeros, union, with_state_budget,
    Automaton,
    Builder, Cube, LetterSet,
};
use crate::error::{Error, Result};
use crate::numeric::Rational;

const S: &str = "+-";
const B: &str = "01";

/// The three-state automaton for well-formed `k`-track words.
pub fn wf(k: usize) -> Result<Automaton> {
    if k == 0 {
        return Err(Error::Arity("wf needs at least one track".into()));
    }
    let mut b = Builder::new(k);
    let q0 = b.add_state(false);
    let q1 = b.add_state(false);
    let q2 = b.add_state(true);
    b.add_edge(q0, q1, Cube::uniform(k, LetterSet::SIGNS));
    b.add_edge(q1, q1, Cube::uniform(k, LetterSet::BITS));
    b.add_edge(q1, q2, Cube::uniform(k, LetterSet::DOT));
    b.add_edge(q2, q2, Cube::uniform(k, LetterSet::BITS));
    Ok(b.finish(q0))
}

/// Moves a small relation onto tracks `map` of a `k`-track word.
pub fn lift(core: &Automaton, k: usize, map: &[usize]) -> Result<Automaton> {
    if k == core.tracks() && map.iter().enumerate().all(|(n, &t)| t == n + 1) {
        return Ok(core.clone());
    }
    intersect(&embed(core, k, map)?, &wf(k)?)
}

fn distinct(k: usize, tracks: &[usize]) -> Result<()> {
    for (n, &t) in tracks.iter().enumerate() {
        if t == 0 || t > k {
            return Err(Error::Arity(format!("track {t} outside 1..={k}")));
        }
        if tracks[..n].contains(&t) {
            return Err(Error::Arity(format!("track {t} used twice")));
        }
    }
    Ok(())
}

fn cached(cell: &'static OnceLock<Automaton>, build: fn() -> Result<Automaton>) -> Automaton {
    cell.get_or_init(|| with_state_budget(None, build).expect("fixed relation builds")).clone()
}

fn restrict(a: Automaton) -> Result<Automaton> {
    let k = a.tracks();
    intersect(&a, &wf(k)?)
}

fn eq_core() -> Result<Automaton> {
    let mut b = Builder::new(2);
    let q: Vec<usize> = (0..9).map(|n| b.add_state(matches!(n, 3 | 4 | 6 | 8))).collect();
    b.edge(q[0], q[1], &[&["+", "+"], &["-", "-"]])
        .edge(q[0], q[7], &[&["-", "+"], &["+", "-"]])
        .edge(q[1], q[1], &[&["0", "0"], &["1", "1"]])
        .edge(q[1], q[2], &[&["0", "1"]])
        .edge(q[1], q[5], &[&["1", "0"]])
        .edge(q[1], q[4], &[&[".", "."]])
        .edge(q[4], q[4], &[&["0", "0"], &["1", "1"]])
        .edge(q[4], q[3], &[&["0", "1"]])
        .edge(q[4], q[6], &[&["1", "0"]])
        .edge(q[2], q[2], &[&["1", "0"]])
        .edge(q[2], q[3], &[&[".", "."]])
        .edge(q[3], q[3], &[&["1", "0"]])
        .edge(q[5], q[5], &[&["0", "1"]])
        .edge(q[5], q[6], &[&[".", "."]])
        .edge(q[6], q[6], &[&["0", "1"]])
        .edge(q[7], q[7], &[&["0", "0"]])
        .edge(q[7], q[8], &[&[".", "."]])
        .edge(q[8], q[8], &[&["0", "0"]]);
    restrict(b.finish(q[0]))
}

fn lt_core() -> Result<Automaton> {
    let mut b = Builder::new(2);
    let s: Vec<usize> = (0..7).map(|n| b.add_state(n == 6)).collect();
    b.edge(s[0], s[1], &[&["+", "+"]])
        .edge(s[0], s[2], &[&["-", "-"]])
        .edge(s[0], s[3], &[&["-", "+"]])
        .edge(s[1], s[1], &[&["0", "0"], &["1", "1"], &[".", "."]])
        .edge(s[1], s[4], &[&["0", "1"]])
        .edge(s[4], s[4], &[&["1", "0"], &[".", "."]])
        .edge(s[4], s[6], &[&["0", "0"], &["0", "1"], &["1", "1"]])
        .edge(s[2], s[2], &[&["0", "0"], &["1", "1"], &[".", "."]])
        .edge(s[2], s[5], &[&["1", "0"]])
        .edge(s[5], s[5], &[&["0", "1"], &[".", "."]])
        .edge(s[5], s[6], &[&["0", "0"], &["1", "0"], &["1", "1"]])
        .edge(s[3], s[3], &[&["0", "0"], &[".", "."]])
        .edge(s[3], s[6], &[&["0", "1"], &["1", "0"], &["1", "1"]])
        .edge(s[6], s[6], &[&[B, B], &[".", "."]]);
    restrict(b.finish(s[0]))
}

fn relu_core() -> Result<Automaton> {
    let mut b = Builder::new(2);
    let q: Vec<usize> = (0..11).map(|n| b.add_state(matches!(n, 3 | 4 | 6 | 8 | 10))).collect();
    let (r1, r2) = (q[9], q[10]);
    b.edge(q[0], q[1], &[&["+", "+"]])
        .edge(q[0], q[7], &[&["+", "-"]])
        .edge(q[0], r1, &[&["-", S]])
        .edge(r1, r1, &[&[B, "0"]])
        .edge(r1, r2, &[&[".", "."]])
        .edge(r2, r2, &[&[B, "0"]]);
    equality_body(&mut b, &q);
    restrict(b.finish(q[0]))
}

fn abs_core() -> Result<Automaton> {
    let mut b = Builder::new(2);
    let q: Vec<usize> = (0..9).map(|n| b.add_state(matches!(n, 3 | 4 | 6 | 8))).collect();
    b.edge(q[0], q[1], &[&["+", "+"], &["-", "+"]]).edge(q[0], q[7], &[&["+", "-"], &["-", "-"]]);
    equality_body(&mut b, &q);
    restrict(b.finish(q[0]))
}

/// Everything of the equality figure except the edges leaving `q0`.
fn equality_body(b: &mut Builder, q: &[usize]) {
    b.edge(q[1], q[1], &[&["0", "0"], &["1", "1"]])
        .edge(q[1], q[2], &[&["0", "1"]])
        .edge(q[1], q[5], &[&["1", "0"]])
        .edge(q[1], q[4], &[&[".", "."]])
        .edge(q[4], q[4], &[&["0", "0"], &["1", "1"]])
        .edge(q[4], q[3], &[&["0", "1"]])
        .edge(q[4], q[6], &[&["1", "0"]])
        .edge(q[2], q[2], &[&["1", "0"]])
        .edge(q[2], q[3], &[&[".", "."]])
        .edge(q[3], q[3], &[&["1", "0"]])
        .edge(q[5], q[5], &[&["0", "1"]])
        .edge(q[5], q[6], &[&[".", "."]])
        .edge(q[6], q[6], &[&["0", "1"]])
        .edge(q[7], q[7], &[&["0", "0"]])
        .edge(q[7], q[8], &[&[".", "."]])
        .edge(q[8], q[8], &[&["0", "0"]]);
}

/// `dec(w_i) = dec(w_j)`, across all representations.
pub fn equality(k: usize, i: usize, j: usize) -> Result<Automaton> {
    if i == j {
        return Err(Error::Arity("equality of a track with itself; use wf".into()));
    }
    distinct(k, &[i, j])?;
    static CORE: OnceLock<Automaton> = OnceLock::new();
    lift(&cached(&CORE, eq_core), k, &[i, j])
}

/// `dec(w_i) < dec(w_j)`. With `i = j` the relation is empty.
pub fn less_than(k: usize, i: usize, j: usize) -> Result<Automaton> {
    if i == j {
        distinct(k, &[i])?;
        return Ok(Automaton::empty(k));
    }
    distinct(k, &[i, j])?;
    static CORE: OnceLock<Automaton> = OnceLock::new();
    lift(&cached(&CORE, lt_core), k, &[i, j])
}

/// `dec(w_i) ≤ dec(w_j)`.
pub fn less_equal(k: usize, i: usize, j: usize) -> Result<Automaton> {
    if i == j {
        distinct(k, &[i])?;
        return wf(k);
    }
    distinct(k, &[i, j])?;
    static CORE: OnceLock<Automaton> = OnceLock::new();
    let core = cached(&CORE, || union(&less_than(2, 1, 2)?, &equality(2, 1, 2)?));
    lift(&core, k, &[i, j])
}

/// `dec(w_i) ≠ dec(w_j)`.
pub fn not_equal(k: usize, i: usize, j: usize) -> Result<Automaton> {
    if i == j {
        distinct(k, &[i])?;
        return Ok(Automaton::empty(k));
    }
    distinct(k, &[i, j])?;
    static CORE: OnceLock<Automaton> = OnceLock::new();
    let core = cached(&CORE, || union(&less_than(2, 1, 2)?, &less_than(2, 2, 1)?));
    lift(&core, k, &[i, j])
}

/// `dec(w_j) = max(0, dec(w_i))`.
pub fn relu(k: usize, i: usize, j: usize) -> Result<Automaton> {
    distinct(k, &[i, j])?;
    static CORE: OnceLock<Automaton> = OnceLock::new();
    lift(&cached(&CORE, relu_core), k, &[i, j])
}

/// `dec(w_j) = |dec(w_i)|`.
pub fn abs(k: usize, i: usize, j: usize) -> Result<Automaton> {
    distinct(k, &[i, j])?;
    static CORE: OnceLock<Automaton> = OnceLock::new();
    lift(&cached(&CORE, abs_core), k, &[i, j])
}

/// The auxiliary three-track addition automaton. It accepts some, not all,
/// representations of each true `x1 + x2 = x3`.
pub fn add_raw() -> Automaton {
    static RAW: OnceLock<Automaton> = OnceLock::new();
    cached(&RAW, || Ok(add_raw_build()))
}

fn add_raw_build() -> Automaton {
    let mut b = Builder::new(3);
    let start = b.add_state(false);
    // Each component checks `a + b = s` on magnitudes, with `s` on track
    // `perm[2]` and the summands on `perm[0]`, `perm[1]`.
    let components: [(&[&[&str]], [usize; 3]); 3] = [
        (&[&["+", "+", "+"], &["-", "-", "-"]], [0, 1, 2]),
        (&[&["+", "-", "+"], &["-", "+", "-"]], [1, 2, 0]),
        (&[&["+", "-", "-"], &["-", "+", "+"]], [0, 2, 1]),
    ];
    for (signs, perm) in components {
        let u2 = b.add_state(false);
        let u3 = b.add_state(false);
        let d2 = b.add_state(true);
        let d3 = b.add_state(true);
        b.edge(start, u2, signs);
        let col = |bits: &str| {
            let c: Vec<char> = bits.chars().collect();
            let mut sets = vec![LetterSet::EMPTY; 3];
            for (n, &t) in perm.iter().enumerate() {
                sets[t] = LetterSet::parse(&c[n].to_string()).expect("bit literal");
            }
            Cube::new(sets).expect("nonempty")
        };
        for (x2, x3) in [(u2, u3), (d2, d3)] {
            for bits in ["000", "011", "101"] {
                b.add_edge(x2, x2, col(bits));
            }
            b.add_edge(x2, x3, col("001"));
            for bits in ["010", "100", "111"] {
                b.add_edge(x3, x3, col(bits));
            }
            b.add_edge(x3, x2, col("110"));
        }
        let dots = Cube::uniform(3, LetterSet::DOT);
        b.add_edge(u2, d2, dots.clone());
        b.add_edge(u3, d3, dots);
    }
    b.finish(start)
}

fn add_core() -> Result<Automaton> {
    compose(&add_raw(), &equality(2, 1, 2)?, 1)
}

/// `dec(w_out) = Σ dec(w_t)` over `ins`.
pub fn add(k: usize, out: usize, ins: &[usize]) -> Result<Automaton> {
    if ins.is_empty() {
        return Err(Error::Arity("add needs at least one summand".into()));
    }
    let mut all = ins.to_vec();
    all.push(out);
    distinct(k, &all)?;
    let h = ins.len();
    // Core relation on tracks 1..h (summands) and h+1 (sum).
    lift(&add_nary(h)?, k, &all)
}

fn add_nary(h: usize) -> Result<Automaton> {
    static CACHE: OnceLock<std::sync::Mutex<Vec<Option<Automaton>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(Some(a)) = cache.lock().expect("cache lock").get(h) {
        return Ok(a.clone());
    }
    let a = match h {
        1 => equality(2, 1, 2)?,
        2 => {
            static CORE: OnceLock<Automaton> = OnceLock::new();
            cached(&CORE, add_core)
        }
        _ => {
            // Partial sum of the first h-1 summands on temporary track h+2.
            let k = h + 1;
            let tmp = k + 1;
            let first: Vec<usize> = (1..h).chain([tmp]).collect();
            let partial = lift(&add_nary(h - 1)?, tmp, &first)?;
            let last = lift(&add_nary(2)?, tmp, &[tmp, h, k])?;
            let both = intersect(&partial, &last)?;
            saturate_leading_zeros(&project(&both, &(1..=k).collect::<Vec<_>>())?)
        }
    };
    let mut guard = cache.lock().expect("cache lock");
    if guard.len() <= h {
        guard.resize(h + 1, None);
    }
    guard[h] = Some(a.clone());
    Ok(a)
}

/// Track `i` encodes zero.
fn zero_core() -> Result<Automaton> {
    let mut b = Builder::new(1);
    let z0 = b.add_state(false);
    let z1 = b.add_state(false);
    let z2 = b.add_state(true);
    b.edge(z0, z1, &[&[S]]).edge(z1, z1, &[&["0"]]).edge(z1, z2, &[&["."]]).edge(z2, z2, &[&["0"]]);
    Ok(b.finish(z0))
}

/// Track `i` encodes one: `+0*1.0^ω` or `+0*.1^ω`.
fn one_core() -> Result<Automaton> {
    let mut b = Builder::new(1);
    let a0 = b.add_state(false);
    let a1 = b.add_state(false);
    let a2 = b.add_state(false);
    let a3 = b.add_state(true);
    let a4 = b.add_state(true);
    b.edge(a0, a1, &[&["+"]])
        .edge(a1, a1, &[&["0"]])
        .edge(a1, a2, &[&["1"]])
        .edge(a2, a3, &[&["."]])
        .edge(a3, a3, &[&["0"]])
        .edge(a1, a4, &[&["."]])
        .edge(a4, a4, &[&["1"]]);
    Ok(b.finish(a0))
}

/// Two-track core of `y = c·x` with `x` on track 1 and `y` on track 2.
fn mult_core(c: &Rational) -> Result<Automaton> {
    if c.is_zero() {
        static Z: OnceLock<Automaton> = OnceLock::new();
        let z = cached(&Z, zero_core);
        return lift(&z, 2, &[2]);
    }
    if c.is_negative() {
        return mult_core(&c.abs())?.swap_initial_signs(1);
    }
    if !c.is_integer() {
        // n·x = d·y: x on 1, y on 2, n·x on 3, d·y on 4.
        let n = Rational::from_integer(c.numer().clone());
        let d = Rational::from_integer(c.denom().clone());
        let nx = lift(&mult_core(&n)?, 4, &[1, 3])?;
        let dy = lift(&mult_core(&d)?, 4, &[2, 4])?;
        let glue = equality(4, 3, 4)?;
        let all = intersect_all([&nx, &dy, &glue])?;
        return Ok(saturate_leading_zeros(&project(&all, &[1, 2])?));
    }
    let n = c.numer().clone();
    if n == 1.into() {
        return equality(2, 1, 2);
    }
    if n == 2.into() {
        static DOUBLE: OnceLock<Automaton> = OnceLock::new();
        return Ok(cached(&DOUBLE, || {
            // The copy of x on track 3, then y = x + copy.
            let copy = equality(3, 1, 3)?;
            let sum = add(3, 2, &[1, 3])?;
            Ok(saturate_leading_zeros(&project(&intersect(&copy, &sum)?, &[1, 2])?))
        }));
    }
    // Doubling chain: track 2+t holds 2^t·x for t = 1..m-1, then y sums the
    // set bits of c.
    let bits = n.bits() as usize;
    let k = 2 + bits - 1;
    let double = mult_core(&Rational::from_integer(2))?;
    let mut parts = Vec::new();
    let track_of = |t: usize| if t == 0 { 1 } else { 2 + t };
    for t in 1..bits {
        parts.push(lift(&double, k, &[track_of(t - 1), track_of(t)])?);
    }
    let summands: Vec<usize> = (0..bits).filter(|&t| n.bit(t as u64)).map(track_of).collect();
    parts.push(add(k, 2, &summands)?);
    let all = intersect_all(parts.iter())?;
    Ok(saturate_leading_zeros(&project(&all, &[1, 2])?))
}

/// `dec(w_j) = c · dec(w_i)`.
pub fn mult_const(k: usize, c: &Rational, i: usize, j: usize) -> Result<Automaton> {
    distinct(k, &[i, j])?;
    lift(&mult_core(c)?, k, &[i, j])
}

fn const_core(c: &Rational) -> Result<Automaton> {
    if c.is_zero() {
        static Z: OnceLock<Automaton> = OnceLock::new();
        return Ok(cached(&Z, zero_core));
    }
    static ONE: OnceLock<Automaton> = OnceLock::new();
    let one = cached(&ONE, one_core);
    if *c == 1 {
        return Ok(one);
    }
    // x with c⁻¹·x = 1.
    let inv = c.recip().expect("nonzero constant");
    let scaled = mult_core(&inv)?;
    let pinned = lift(&one, 2, &[2])?;
    Ok(saturate_leading_zeros(&project(&intersect(&scaled, &pinned)?, &[1])?))
}

/// `dec(w_i) = c`.
pub fn constant(k: usize, i: usize, c: &Rational) -> Result<Automaton> {
    distinct(k, &[i])?;
    lift(&const_core(c)?, k, &[i])
}

/// `Σ c_t · dec(w_t) ≤ b` over the listed `(track, coefficient)` pairs.
pub fn linear_leq(k: usize, coeffs: &[(usize, Rational)], b: &Rational) -> Result<Automaton> {
    let tracks: Vec<usize> = coeffs.iter().map(|(t, _)| *t).collect();
    distinct(k, &tracks)?;
    let live: Vec<(usize, &Rational)> =
        coeffs.iter().enumerate().filter(|(_, (_, c))| !c.is_zero()).map(|(n, (_, c))| (n + 1, c)).collect();
    if live.is_empty() {
        return if *b >= 0 { wf(k) } else { Ok(Automaton::empty(k)) };
    }
    let h = coeffs.len();
    // Tracks 1..h are the constrained inputs; temporaries follow.
    let mut next = h;
    let mut alloc = || {
        next += 1;
        next
    };
    let mut parts: Vec<(Automaton, Vec<usize>)> = Vec::new();
    let mut summands = Vec::new();
    for &(t, c) in &live {
        if *c == 1 {
            summands.push(t);
        } else {
            let tmp = alloc();
            parts.push((mult_core(c)?, vec![t, tmp]));
            summands.push(tmp);
        }
    }
    let sum = if summands.len() == 1 {
        summands[0]
    } else {
        let s = alloc();
        let mut map = summands.clone();
        map.push(s);
        parts.push((add_nary(summands.len())?, map));
        s
    };
    let bound = alloc();
    parts.push((const_core(b)?, vec![bound]));
    parts.push((less_equal(2, 1, 2)?, vec![sum, bound]));
    let total = next;
    let lifted: Vec<Automaton> = parts.iter().map(|(a, m)| lift(a, total, m)).collect::<Result<_>>()?;
    let all = intersect_all(lifted.iter())?;
    let core = saturate_leading_zeros(&project(&all, &(1..=h).collect::<Vec<_>>())?);
    lift(&core, k, &tracks)
}

/// Comparison used by [`linear`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparison {
    Eq,
    Leq,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Phase {
    Start,
    Int(usize, i64),
    IntTrue,
    Frac(usize, i64),
    FracTrue,
}

/// Integer coefficients and bound after clearing denominators.
fn integral(coeffs: &[Rational], b: &Rational) -> Result<(Vec<i64>, i64)> {
    use num_integer::Integer;
    use num_traits::ToPrimitive;
    let l = coeffs.iter().chain([b]).fold(num_bigint::BigInt::from(1), |acc, c| acc.lcm(c.denom()));
    let scale = |c: &Rational| {
        (c.numer() * (&l / c.denom()))
            .to_i64()
            .filter(|v| v.unsigned_abs() < 1 << 40)
            .ok_or_else(|| Error::SizeCap(format!("coefficient {c} too large after scaling")))
    };
    Ok((coeffs.iter().map(scale).collect::<Result<_>>()?, scale(b)?))
}

/// Carry automaton for `Σ a_t · x_t (= | ≤) b` on `a.len()` tracks.
///
/// After the sign column the integer part is read most significant bit first
/// with `v' = 2v + Σ a_t bit_t`; after the dot the residual `r = b - v` must
/// stay within the range of `Σ a_t · frac_t`, updated as `r' = 2r - Σ a_t bit_t`.
fn linear_core(a: &[i64], b: i64, cmp: Comparison) -> Result<Automaton> {
    let h = a.len();
    let mut builder = Builder::new(h);
    let mut ids: std::collections::HashMap<Phase, usize> = std::collections::HashMap::new();
    let mut work = Vec::new();
    let mut id = |p: Phase, builder: &mut Builder, work: &mut Vec<(Phase, usize)>| {
        *ids.entry(p).or_insert_with(|| {
            let q = builder.add_state(matches!(p, Phase::Frac(..) | Phase::FracTrue));
            work.push((p, q));
            q
        })
    };
    let signed = |signs: usize| -> Vec<i64> {
        a.iter().enumerate().map(|(t, &c)| if signs >> t & 1 == 1 { -c } else { c }).collect()
    };
    let range = |c: &[i64]| -> (i64, i64) {
        (c.iter().filter(|&&x| x < 0).sum(), c.iter().filter(|&&x| x > 0).sum())
    };
    let column = |mask: usize, on: &str, off: &str| -> Cube {
        let sets: Vec<&str> = (0..h).map(|t| if mask >> t & 1 == 1 { on } else { off }).collect();
        Cube::parse(&sets).expect("letter literals")
    };
    let dot = Cube::uniform(h, LetterSet::DOT);
    let bits = Cube::uniform(h, LetterSet::BITS);
    let frac_target = |r: i64, lo: i64, hi: i64, s: usize| -> Option<Phase> {
        match cmp {
            Comparison::Eq => (lo..=hi).contains(&r).then_some(Phase::Frac(s, r)),
            Comparison::Leq if r < lo => None,
            Comparison::Leq if r >= hi => Some(Phase::FracTrue),
            Comparison::Leq => Some(Phase::Frac(s, r)),
        }
    };
    let q0 = id(Phase::Start, &mut builder, &mut work);
    while let Some((p, from)) = work.pop() {
        match p {
            Phase::Start => {
                for s in 0..1usize << h {
                    let to = id(Phase::Int(s, 0), &mut builder, &mut work);
                    builder.add_edge(from, to, column(s, "-", "+"));
                }
            }
            Phase::IntTrue => {
                builder.add_edge(from, from, bits.clone());
                let to = id(Phase::FracTrue, &mut builder, &mut work);
                builder.add_edge(from, to, dot.clone());
            }
            Phase::FracTrue => builder.add_edge(from, from, bits.clone()),
            Phase::Int(s, v) => {
                let c = signed(s);
                let (lo, hi) = range(&c);
                let (low, high) = ((-hi).min(b - hi), (-lo).max(b - lo));
                for mask in 0..1usize << h {
                    let delta: i64 = (0..h).filter(|t| mask >> t & 1 == 1).map(|t| c[t]).sum();
                    let next = 2 * v + delta;
                    let target = if next > high {
                        None
                    } else if next < low {
                        (cmp == Comparison::Leq).then_some(Phase::IntTrue)
                    } else {
                        Some(Phase::Int(s, next))
                    };
                    if let Some(t) = target {
                        let to = id(t, &mut builder, &mut work);
                        builder.add_edge(from, to, column(mask, "1", "0"));
                    }
                }
                if let Some(t) = frac_target(b - v, lo, hi, s) {
                    let to = id(t, &mut builder, &mut work);
                    builder.add_edge(from, to, dot.clone());
                }
            }
            Phase::Frac(s, r) => {
                let c = signed(s);
                let (lo, hi) = range(&c);
                for mask in 0..1usize << h {
                    let delta: i64 = (0..h).filter(|t| mask >> t & 1 == 1).map(|t| c[t]).sum();
                    if let Some(t) = frac_target(2 * r - delta, lo, hi, s) {
                        let to = id(t, &mut builder, &mut work);
                        builder.add_edge(from, to, column(mask, "1", "0"));
                    }
                }
            }
        }
    }
    Ok(reduce(&builder.finish(q0).trim()))
}

/// `Σ c_t · dec(w_t) = b` or `≤ b`, built directly as a carry automaton.
/// Accepts the same language as the compositional constructions.
pub fn linear(k: usize, coeffs: &[(usize, Rational)], b: &Rational, cmp: Comparison) -> Result<Automaton> {
    let tracks: Vec<usize> = coeffs.iter().map(|(t, _)| *t).collect();
    distinct(k, &tracks)?;
    let live: Vec<&(usize, Rational)> = coeffs.iter().filter(|(_, c)| !c.is_zero()).collect();
    if live.is_empty() {
        let holds = match cmp {
            Comparison::Eq => b.is_zero(),
            Comparison::Leq => *b >= 0,
        };
        return if holds { wf(k) } else { Ok(Automaton::empty(k)) };
    }
    let values: Vec<Rational> = live.iter().map(|(_, c)| c.clone()).collect();
    let (a, bound) = integral(&values, b)?;
    let map: Vec<usize> = live.iter().map(|(t, _)| *t).collect();
    lift(&linear_core(&a, bound, cmp)?, k, &map)
}
