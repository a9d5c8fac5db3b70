//! Exact rationals and their encodings as ultimately periodic words.
//!
//! A single-track word has the shape `s a_{n-1} .. a_0 . b_0 b_1 ..` over the
//! alphabet `{+, -, ., 0, 1}`; a `k`-track word stacks `k` of those column by
//! column with all dots in one column. Only ultimately periodic words
//! (`prefix · period^ω`) are materialised, and those always decode to
//! rationals.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational number, always in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Self> {
        let den = den.into();
        if den.is_zero() {
            return Err(Error::Input("zero denominator".into()));
        }
        Ok(Rational(BigRational::new(num.into(), den)))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(Rational(self.0.recip()))
        }
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// Size measure: bit length of `|num|` plus bit length of `den`, with
    /// the measure of zero fixed to 1.
    pub fn measure(&self) -> u64 {
        if self.is_zero() {
            return 1;
        }
        self.numer().bits() + self.denom().bits()
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    /// Lossy conversion used for display and timing models only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Rational(r)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Accepts `"n"`, `"n/d"` and finite decimals such as `"-1.25"`.
impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Input(format!("not a rational: {s:?}"));
        let int = |t: &str| -> Result<BigInt> {
            t.parse::<BigInt>().map_err(|_| bad())
        };
        if let Some((n, d)) = s.split_once('/') {
            return Rational::new(int(n)?, int(d)?);
        }
        if let Some((whole, frac)) = s.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let negative = whole.starts_with('-');
            let digits = whole.trim_start_matches(['-', '+']);
            if !digits.bytes().all(|b| b.is_ascii_digit()) || whole.len() > digits.len() + 1 {
                return Err(bad());
            }
            let mut num: BigInt = if digits.is_empty() { BigInt::zero() } else { int(digits)? };
            let scale = BigInt::from(10u32).pow(frac.len() as u32);
            num = num * &scale + int(frac)?;
            if negative {
                num = -num;
            }
            return Rational::new(num, scale);
        }
        Ok(Rational::from_integer(int(s)?))
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $tr<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl<'a> $tr<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

/// `make_rational`: reduce `num/den`, moving the sign to the numerator.
pub fn make_rational(num: i64, den: i64) -> Result<Rational> {
    Rational::new(num, den)
}

/// The five letters of the encoding alphabet, ordered `+ < - < . < 0 < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    Plus,
    Minus,
    Dot,
    Zero,
    One,
}

impl Letter {
    pub const ALL: [Letter; 5] = [Letter::Plus, Letter::Minus, Letter::Dot, Letter::Zero, Letter::One];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Letter {
        Letter::ALL[i as usize]
    }

    pub fn to_char(self) -> char {
        match self {
            Letter::Plus => '+',
            Letter::Minus => '-',
            Letter::Dot => '.',
            Letter::Zero => '0',
            Letter::One => '1',
        }
    }

    pub fn from_char(c: char) -> Result<Letter> {
        Ok(match c {
            '+' => Letter::Plus,
            '-' | '−' => Letter::Minus,
            '.' => Letter::Dot,
            '0' => Letter::Zero,
            '1' => Letter::One,
            _ => return Err(Error::Format(format!("letter {c:?} is not in +-.01"))),
        })
    }

    pub fn is_sign(self) -> bool {
        matches!(self, Letter::Plus | Letter::Minus)
    }

    pub fn is_bit(self) -> bool {
        matches!(self, Letter::Zero | Letter::One)
    }

    fn bit(b: bool) -> Letter {
        if b {
            Letter::One
        } else {
            Letter::Zero
        }
    }
}

/// One column of a multi-track word: the letters of all tracks at a position.
pub type Column = Vec<Letter>;

/// Ultimately periodic multi-track word `prefix · period^ω`.
///
/// Equality is structural; two different words may decode to the same tuple.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UPWord {
    tracks: usize,
    prefix: Vec<Column>,
    period: Vec<Column>,
}

impl UPWord {
    pub fn new(tracks: usize, prefix: Vec<Column>, period: Vec<Column>) -> Result<Self> {
        if tracks == 0 {
            return Err(Error::Arity("a word needs at least one track".into()));
        }
        if period.is_empty() {
            return Err(Error::Format("period must be nonempty".into()));
        }
        if let Some(col) = prefix.iter().chain(&period).find(|c| c.len() != tracks) {
            return Err(Error::Arity(format!(
                "column of height {} in a {tracks}-track word",
                col.len()
            )));
        }
        Ok(UPWord { tracks, prefix, period })
    }

    /// Build from column strings, one string of `tracks` characters per column.
    pub fn from_columns<S: AsRef<str>>(tracks: usize, prefix: &[S], period: &[S]) -> Result<Self> {
        let parse = |cols: &[S]| -> Result<Vec<Column>> {
            cols.iter()
                .map(|s| s.as_ref().chars().map(Letter::from_char).collect())
                .collect()
        };
        UPWord::new(tracks, parse(prefix)?, parse(period)?)
    }

    /// Single-track word written as plain strings, e.g. `("+1011.", "1")`.
    pub fn single(prefix: &str, period: &str) -> Result<Self> {
        let parse = |s: &str| -> Result<Vec<Column>> {
            s.chars().map(|c| Letter::from_char(c).map(|l| vec![l])).collect()
        };
        UPWord::new(1, parse(prefix)?, parse(period)?)
    }

    pub fn tracks(&self) -> usize {
        self.tracks
    }

    pub fn prefix(&self) -> &[Column] {
        &self.prefix
    }

    pub fn period(&self) -> &[Column] {
        &self.period
    }

    /// Column at an arbitrary position of the infinite word.
    pub fn column(&self, pos: usize) -> &Column {
        if pos < self.prefix.len() {
            &self.prefix[pos]
        } else {
            &self.period[(pos - self.prefix.len()) % self.period.len()]
        }
    }

    pub fn column_strings(&self) -> (Vec<String>, Vec<String>) {
        let s = |cols: &[Column]| {
            cols.iter()
                .map(|c| c.iter().map(|l| l.to_char()).collect::<String>())
                .collect::<Vec<_>>()
        };
        (s(&self.prefix), s(&self.period))
    }

    /// Track `i` (1-based) as a single-track word.
    pub fn track(&self, i: usize) -> Result<UPWord> {
        if i == 0 || i > self.tracks {
            return Err(Error::Arity(format!("track {i} of a {}-track word", self.tracks)));
        }
        let pick = |cols: &[Column]| cols.iter().map(|c| vec![c[i - 1]]).collect();
        Ok(UPWord { tracks: 1, prefix: pick(&self.prefix), period: pick(&self.period) })
    }

    /// Checks the well-formedness shape and returns the dot position.
    pub fn check_well_formed(&self) -> Result<usize> {
        let first = self
            .prefix
            .first()
            .ok_or_else(|| Error::WellFormed("prefix is empty, no sign column".into()))?;
        if !first.iter().all(|l| l.is_sign()) {
            return Err(Error::WellFormed("first column is not all signs".into()));
        }
        let mut dot = None;
        for (pos, col) in self.prefix.iter().enumerate().skip(1) {
            if col.iter().all(|&l| l == Letter::Dot) {
                if dot.is_some() {
                    return Err(Error::WellFormed("more than one dot column".into()));
                }
                dot = Some(pos);
            } else if !col.iter().all(|l| l.is_bit()) {
                return Err(Error::WellFormed(format!("column {pos} mixes letters")));
            }
        }
        if !self.period.iter().all(|c| c.iter().all(|l| l.is_bit())) {
            return Err(Error::WellFormed("period contains non-bit letters".into()));
        }
        dot.ok_or_else(|| Error::WellFormed("no dot column in the prefix".into()))
    }

    pub fn is_well_formed(&self) -> bool {
        self.check_well_formed().is_ok()
    }

    /// Decode a well-formed single-track word.
    pub fn decode(&self) -> Result<Rational> {
        if self.tracks != 1 {
            return Err(Error::Arity(format!("decode needs 1 track, word has {}", self.tracks)));
        }
        let dot = self.check_well_formed()?;
        let bits = |cols: &[Column]| -> BigInt {
            let digits: Vec<u8> = cols.iter().map(|c| (c[0] == Letter::One) as u8).collect();
            BigInt::from_radix_be(num_bigint::Sign::Plus, &digits, 2).expect("binary digits")
        };
        let int = bits(&self.prefix[1..dot]);
        let frac_prefix = &self.prefix[dot + 1..];
        let a = frac_prefix.len();
        let l = self.period.len();
        // value = int + F / 2^a + P / (2^a (2^l - 1))
        let two_a = BigInt::one() << a;
        let cycle = (BigInt::one() << l) - 1u32;
        let numer = bits(frac_prefix) * &cycle + bits(&self.period);
        let frac = BigRational::new(numer, two_a * cycle);
        let mut value = BigRational::from_integer(int) + frac;
        if self.prefix[0][0] == Letter::Minus {
            value = -value;
        }
        Ok(Rational(value))
    }

    /// Decode every track of a well-formed word.
    pub fn decode_tracks(&self) -> Result<Vec<Rational>> {
        self.check_well_formed()?;
        (1..=self.tracks).map(|i| self.track(i)?.decode()).collect()
    }
}

impl fmt::Display for UPWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (prefix, period) = self.column_strings();
        if self.tracks == 1 {
            write!(f, "{}({})^w", prefix.concat(), period.concat())
        } else {
            write!(f, "[{}]([{}])^w", prefix.join(" "), period.join(" "))
        }
    }
}

/// Canonical encoding: no leading zeros, fraction by base-2 long division.
pub fn encode(q: &Rational) -> UPWord {
    let sign = if q.is_negative() { Letter::Minus } else { Letter::Plus };
    let num = q.numer().abs();
    let den = q.denom().clone();
    let (int, mut rem) = num.div_rem(&den);
    let mut prefix = vec![vec![sign]];
    if !int.is_zero() {
        let (_, digits) = int.to_radix_be(2);
        prefix.extend(digits.into_iter().map(|d| vec![Letter::bit(d == 1)]));
    }
    prefix.push(vec![Letter::Dot]);

    // With den = 2^e·d' (d' odd) and gcd(rem, den) = 1 the expansion has a
    // pre-period of exactly e bits, then repeats from the remainder reached.
    let start = den.trailing_zeros().unwrap_or(0) as usize;
    let mut frac: Vec<Letter> = Vec::new();
    let mut step = |rem: &mut BigInt| {
        *rem <<= 1u32;
        if *rem >= den {
            *rem -= &den;
            frac.push(Letter::One);
        } else {
            frac.push(Letter::Zero);
        }
    };
    for _ in 0..start {
        step(&mut rem);
    }
    let anchor = rem.clone();
    loop {
        step(&mut rem);
        if rem == anchor {
            break;
        }
    }
    prefix.extend(frac[..start].iter().map(|&l| vec![l]));
    let period = frac[start..].iter().map(|&l| vec![l]).collect();
    UPWord { tracks: 1, prefix, period }
}

fn lcm(a: usize, b: usize) -> usize {
    a / a.gcd(&b) * b
}

/// Stack well-formed words into one multi-track word with aligned dots.
pub fn stack(words: &[UPWord]) -> Result<UPWord> {
    if words.is_empty() {
        return Err(Error::Input("stack needs at least one word".into()));
    }
    let mut dots = Vec::with_capacity(words.len());
    for w in words {
        dots.push(w.check_well_formed()?);
    }
    let tracks: usize = words.iter().map(|w| w.tracks).sum();
    let int_len = dots.iter().map(|d| d - 1).max().unwrap_or(0);
    let frac_len = words
        .iter()
        .zip(&dots)
        .map(|(w, d)| w.prefix.len() - d - 1)
        .max()
        .unwrap_or(0);
    let period_len = words.iter().map(|w| w.period.len()).fold(1, lcm);

    let mut prefix: Vec<Column> = vec![Vec::with_capacity(tracks); 1 + int_len + 1 + frac_len];
    let mut period: Vec<Column> = vec![Vec::with_capacity(tracks); period_len];
    for (w, &dot) in words.iter().zip(&dots) {
        let own_int = dot - 1;
        for t in 0..w.tracks {
            prefix[0].push(w.prefix[0][t]);
            for p in 0..int_len {
                let l = if p < int_len - own_int {
                    Letter::Zero
                } else {
                    w.prefix[1 + p - (int_len - own_int)][t]
                };
                prefix[1 + p].push(l);
            }
            prefix[1 + int_len].push(Letter::Dot);
            for p in 0..frac_len + period_len {
                let l = w.column(dot + 1 + p)[t];
                if p < frac_len {
                    prefix[2 + int_len + p].push(l);
                } else {
                    period[p - frac_len].push(l);
                }
            }
        }
    }
    UPWord::new(tracks, prefix, period)
}

/// Other words with the same value as a well-formed single-track word: one
/// extra leading zero, the opposite sign for zero, and the `10^ω`/`01^ω`
/// flip. The input itself comes first.
pub fn representation_variants(w: &UPWord) -> Result<Vec<UPWord>> {
    if w.tracks != 1 {
        return Err(Error::Arity("representation variants need a single track".into()));
    }
    w.check_well_formed()?;
    let mut out = vec![w.clone()];

    let mut padded = w.clone();
    padded.prefix.insert(1, vec![Letter::Zero]);
    out.push(padded);

    let value = w.decode()?;
    if value.is_zero() {
        let mut flipped = w.clone();
        flipped.prefix[0][0] = if w.prefix[0][0] == Letter::Plus { Letter::Minus } else { Letter::Plus };
        out.push(flipped);
        return Ok(out);
    }

    let tail = if w.period.iter().all(|c| c[0] == Letter::Zero) {
        Some(Letter::Zero)
    } else if w.period.iter().all(|c| c[0] == Letter::One) {
        Some(Letter::One)
    } else {
        None
    };
    if let Some(tail) = tail {
        // Flip the last non-tail bit and every bit after it.
        let mut base = w.clone();
        let other = if tail == Letter::Zero { Letter::One } else { Letter::Zero };
        let last = |b: &UPWord| (1..b.prefix.len()).rev().find(|&p| b.prefix[p][0] == other);
        let mut pos = last(&base);
        if pos.is_none() && tail == Letter::One {
            base.prefix.insert(1, vec![Letter::Zero]);
            pos = last(&base);
        }
        if let Some(p) = pos {
            base.prefix[p][0] = tail;
            for col in base.prefix.iter_mut().skip(p + 1) {
                if col[0] != Letter::Dot {
                    col[0] = other;
                }
            }
            base.period = vec![vec![other]];
            out.push(base);
        }
    }
    Ok(out)
}

/// Bit-length measure of a list of rationals.
pub fn measure_all<'a>(values: impl IntoIterator<Item = &'a Rational>) -> u64 {
    values.into_iter().map(Rational::measure).sum()
}

impl PartialEq<i64> for Rational {
    fn eq(&self, other: &i64) -> bool {
        *self == Rational::from_integer(*other)
    }
}

impl PartialOrd<i64> for Rational {
    fn partial_cmp(&self, other: &i64) -> Option<Ordering> {
        self.partial_cmp(&Rational::from_integer(*other))
    }
}
