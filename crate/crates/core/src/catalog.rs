//! The built-in observable sets and the JSON format for user-supplied ones.
//!
//! Vector entries are symbolic tokens so that tables can be written exactly as
//! published. A token is an optional sign, an optional decimal integer
//! coefficient and a run of the letters
//!
//! * `t` for the square root of 2,
//! * `q` for `exp(2 pi i / 3)`,
//! * `g` for `q^2`,
//! * `i` for the imaginary unit,
//!
//! multiplied together. `"-2t"`, `"iq"` and `"-1"` are all valid; plain
//! integers may also be written as JSON numbers.

use std::fmt;

use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::qcore::{c, CMat, Ket, Projector, C64};
use crate::{Error, Result};

/// One exactly-specified vector component.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolicEntry {
    negative: bool,
    coeff: u64,
    /// Exponents of (t, q, i); `g` is folded into `q^2`.
    t: u32,
    q: u32,
    i: u32,
}

impl SymbolicEntry {
    pub fn int(n: i64) -> SymbolicEntry {
        SymbolicEntry {
            negative: n < 0,
            coeff: n.unsigned_abs(),
            t: 0,
            q: 0,
            i: 0,
        }
        .canonical()
    }

    pub fn parse(tok: &str) -> std::result::Result<SymbolicEntry, String> {
        let s = tok.trim();
        let mut rest = s;
        let mut negative = false;
        if let Some(r) = rest.strip_prefix('-') {
            negative = true;
            rest = r;
        } else if let Some(r) = rest.strip_prefix('+') {
            rest = r;
        }
        let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
        let letters = &rest[digits.len()..];
        if digits.is_empty() && letters.is_empty() {
            return Err(format!("malformed token {tok:?}"));
        }
        let coeff = if digits.is_empty() {
            1
        } else {
            digits
                .parse::<u64>()
                .map_err(|_| format!("malformed token {tok:?}: coefficient out of range"))?
        };
        let (mut t, mut q, mut i) = (0u32, 0u32, 0u32);
        for ch in letters.chars() {
            match ch {
                't' => t += 1,
                'q' => q += 1,
                'g' => q += 2,
                'i' => i += 1,
                _ => return Err(format!("malformed token {tok:?}: unknown symbol {ch:?}")),
            }
        }
        Ok(SymbolicEntry {
            negative,
            coeff,
            t,
            q,
            i,
        }
        .canonical())
    }

    /// Reduce powers: t^2 = 2, q^3 = 1, i^2 = -1.
    fn canonical(mut self) -> SymbolicEntry {
        if self.coeff == 0 {
            return SymbolicEntry {
                negative: false,
                coeff: 0,
                t: 0,
                q: 0,
                i: 0,
            };
        }
        self.coeff = self.coeff.saturating_mul(1u64 << (self.t / 2).min(62));
        self.t %= 2;
        self.q %= 3;
        if (self.i / 2) % 2 == 1 {
            self.negative = !self.negative;
        }
        self.i %= 2;
        self
    }

    pub fn value(&self) -> C64 {
        let mut z = c(self.coeff as f64, 0.0);
        if self.t == 1 {
            z *= std::f64::consts::SQRT_2;
        }
        match self.q {
            1 => z *= c(-0.5, 3f64.sqrt() / 2.0),
            2 => z *= c(-0.5, -(3f64.sqrt()) / 2.0),
            _ => {}
        }
        if self.i == 1 {
            z *= c(0.0, 1.0);
        }
        if self.negative {
            -z
        } else {
            z
        }
    }

    pub fn is_integer(&self) -> bool {
        self.t == 0 && self.q == 0 && self.i == 0
    }

    pub fn as_integer(&self) -> Option<i64> {
        if !self.is_integer() {
            return None;
        }
        let v = i64::try_from(self.coeff).ok()?;
        Some(if self.negative { -v } else { v })
    }

    pub fn conj(&self) -> SymbolicEntry {
        SymbolicEntry {
            negative: self.negative ^ (self.i == 1),
            coeff: self.coeff,
            t: self.t,
            q: (3 - self.q) % 3,
            i: self.i,
        }
    }

    /// Multiply by the imaginary unit.
    pub fn times_i(&self) -> SymbolicEntry {
        SymbolicEntry {
            i: self.i + 1,
            ..self.clone()
        }
        .canonical()
    }

    pub fn neg(&self) -> SymbolicEntry {
        if self.coeff == 0 {
            return self.clone();
        }
        SymbolicEntry {
            negative: !self.negative,
            ..self.clone()
        }
    }
}

impl fmt::Display for SymbolicEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = self.as_integer() {
            return write!(f, "{n}");
        }
        if self.negative {
            write!(f, "-")?;
        }
        if self.coeff != 1 {
            write!(f, "{}", self.coeff)?;
        }
        if self.t == 1 {
            write!(f, "t")?;
        }
        match self.q {
            1 => write!(f, "q")?,
            2 => write!(f, "g")?,
            _ => {}
        }
        if self.i == 1 {
            write!(f, "i")?;
        }
        Ok(())
    }
}

impl Serialize for SymbolicEntry {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.as_integer() {
            Some(n) => s.serialize_i64(n),
            None => s.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for SymbolicEntry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = SymbolicEntry;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "an integer or a symbolic token such as \"t\", \"-q\", \"2i\"")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Self::Value, E> {
                Ok(SymbolicEntry::int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Self::Value, E> {
                i64::try_from(v)
                    .map(SymbolicEntry::int)
                    .map_err(|_| E::custom("integer entry out of range"))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Self::Value, E> {
                Err(E::custom(format!("malformed token {v}: use integers or symbols")))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Self::Value, E> {
                SymbolicEntry::parse(v).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// Positive rational vertex weight; JSON accepts integers or "p/q" strings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Weight(pub Rational64);

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_integer() {
            s.serialize_i64(*self.0.numer())
        } else {
            s.serialize_str(&format!("{}/{}", self.0.numer(), self.0.denom()))
        }
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        fn check<E: de::Error>(r: Rational64) -> std::result::Result<Weight, E> {
            if r.is_positive() {
                Ok(Weight(r))
            } else {
                Err(E::custom(format!("nonpositive weight {r}")))
            }
        }
        impl<'de> Visitor<'de> for V {
            type Value = Weight;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a positive integer or a \"p/q\" string")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Weight, E> {
                check(Rational64::from_integer(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Weight, E> {
                let v = i64::try_from(v).map_err(|_| E::custom("weight out of range"))?;
                check(Rational64::from_integer(v))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Weight, E> {
                if v.fract() == 0.0 && v.abs() < 1e15 {
                    check(Rational64::from_integer(v as i64))
                } else {
                    Err(E::custom(format!("weight {v} is not exact; write it as \"p/q\"")))
                }
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Weight, E> {
                let r = match v.split_once('/') {
                    Some((a, b)) => {
                        let a: i64 = a.trim().parse().map_err(|_| E::custom(format!("bad weight {v:?}")))?;
                        let b: i64 = b.trim().parse().map_err(|_| E::custom(format!("bad weight {v:?}")))?;
                        if b == 0 {
                            return Err(E::custom(format!("bad weight {v:?}")));
                        }
                        Rational64::new(a, b)
                    }
                    None => Rational64::from_integer(
                        v.trim().parse().map_err(|_| E::custom(format!("bad weight {v:?}")))?,
                    ),
                };
                check(r)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EdgeWeightRule {
    /// `w_ij = max(w_i, w_j) + 1`
    #[default]
    MaxPlusOne,
    /// `w_ij = 2 max(w_i, w_j) + 1`
    TwiceMaxPlusOne,
}

impl EdgeWeightRule {
    pub fn apply(self, wi: Rational64, wj: Rational64) -> Rational64 {
        let m = wi.max(wj);
        match self {
            EdgeWeightRule::MaxPlusOne => m + 1,
            EdgeWeightRule::TwiceMaxPlusOne => m * 2 + 1,
        }
    }
}

/// Shape of the default witness built for a set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    /// Vertex terms minus weighted pair terms on every edge.
    #[default]
    Pairwise,
    /// Sum over the size-`dim` cliques of their single probabilities.
    CliqueSum,
}

impl WitnessKind {
    fn is_pairwise(&self) -> bool {
        *self == WitnessKind::Pairwise
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CfrCapable {
    Yes,
    Conditional,
    No,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(rename = "expected_Q")]
    pub expected_q: Weight,
    pub expected_alpha: i64,
    pub is_ks_expected: bool,
    pub is_complete_ks_expected: bool,
    pub cfr_capable: CfrCapable,
}

/// A named set of (unnormalized) vectors with witness weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorSet {
    pub name: String,
    pub dim: usize,
    pub vectors: Vec<Vec<SymbolicEntry>>,
    pub weights: Vec<Weight>,
    #[serde(default)]
    pub edge_weight_rule: EdgeWeightRule,
    /// Index groups (0-based) whose probabilities must sum to one.
    #[serde(default)]
    pub extra_constraints: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "WitnessKind::is_pairwise")]
    pub witness: WitnessKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Metadata>,
}

impl VectorSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn kets(&self) -> Vec<Ket> {
        self.vectors
            .iter()
            .map(|v| Ket::new(v.iter().map(|e| e.value()).collect()).expect("validated nonzero"))
            .collect()
    }

    pub fn projectors(&self) -> Vec<Projector> {
        self.kets().iter().map(crate::qcore::projector_from_ket).collect()
    }

    pub fn weights_rational(&self) -> Vec<Rational64> {
        self.weights.iter().map(|w| w.0).collect()
    }

    pub fn weights_f64(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.0.to_f64().unwrap()).collect()
    }

    pub fn weight_sum(&self) -> Rational64 {
        self.weights.iter().fold(Rational64::zero(), |a, w| a + w.0)
    }

    pub fn expected_q(&self) -> Option<f64> {
        self.metadata.as_ref().map(|m| m.expected_q.0.to_f64().unwrap())
    }

    /// Entrywise complex conjugate of every vector.
    pub fn conjugated(&self) -> VectorSet {
        let mut out = self.clone();
        out.name = format!("{}-conj", self.name);
        for v in &mut out.vectors {
            for e in v.iter_mut() {
                *e = e.conj();
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidInput("dim must be positive".into()));
        }
        if self.vectors.len() != self.weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} vectors but {} weights",
                self.vectors.len(),
                self.weights.len()
            )));
        }
        for (k, v) in self.vectors.iter().enumerate() {
            if v.len() != self.dim {
                return Err(Error::DimMismatch {
                    expected: self.dim,
                    found: v.len(),
                });
            }
            if v.iter().all(|e| e.coeff == 0) {
                return Err(Error::InvalidInput(format!("vector {k} is zero")));
            }
        }
        for g in &self.extra_constraints {
            if g.iter().any(|&i| i >= self.vectors.len()) || g.len() < 2 {
                return Err(Error::InvalidInput(format!("bad extra constraint {g:?}")));
            }
        }
        Ok(())
    }
}

/// Observables of the Peres-Mermin square, labelled row by row.
#[derive(Clone, Debug)]
pub struct ObservableSet {
    pub name: String,
    pub dim: usize,
    pub labels: Vec<String>,
    pub operators: Vec<CMat>,
}

impl ObservableSet {
    pub fn get(&self, label: &str) -> Option<&CMat> {
        self.labels.iter().position(|l| l == label).map(|i| &self.operators[i])
    }
}

#[derive(Clone, Debug)]
pub enum Builtin {
    Vectors(VectorSet),
    Observables(ObservableSet),
}

pub const BUILTIN_NAMES: [&str; 7] = ["bbc21", "ceg18", "peres24", "peres39", "yo13", "peres33", "pm"];

pub fn builtin(name: &str) -> Result<Builtin> {
    match name {
        "pm" => Ok(Builtin::Observables(pm_square())),
        _ => builtin_vectors(name).map(Builtin::Vectors),
    }
}

pub fn builtin_vectors(name: &str) -> Result<VectorSet> {
    let s = match name {
        "bbc21" => bbc21(),
        "ceg18" => ceg18(),
        "peres24" => peres24(),
        "peres39" => peres39(),
        "yo13" => yo13(),
        "peres33" => peres33(),
        _ => return Err(Error::UnknownSet(name.to_string())),
    };
    Ok(s)
}

/// Columns of a table given row by row as whitespace-separated tokens.
fn columns(rows: &[&str]) -> Vec<Vec<SymbolicEntry>> {
    let parsed: Vec<Vec<SymbolicEntry>> = rows
        .iter()
        .map(|r| {
            r.split_whitespace()
                .map(|t| SymbolicEntry::parse(t).expect("built-in token"))
                .collect()
        })
        .collect();
    let n = parsed[0].len();
    assert!(parsed.iter().all(|r| r.len() == n));
    (0..n).map(|j| parsed.iter().map(|r| r[j].clone()).collect()).collect()
}

fn weights(w: &[i64]) -> Vec<Weight> {
    w.iter().map(|&x| Weight(Rational64::from_integer(x))).collect()
}

fn meta(q: Rational64, alpha: i64, ks: bool, complete: bool, cfr: CfrCapable) -> Option<Metadata> {
    Some(Metadata {
        expected_q: Weight(q),
        expected_alpha: alpha,
        is_ks_expected: ks,
        is_complete_ks_expected: complete,
        cfr_capable: cfr,
    })
}

fn int(n: i64) -> Rational64 {
    Rational64::from_integer(n)
}

fn bbc21() -> VectorSet {
    let vectors = columns(&[
        "0 0 0 1 1 1 1 1 1 1 0 0 1 1 1 1 1 1 1 1 1",
        "1 1 1 0 0 0 -1 -q -g 0 1 0 1 q g 1 q g 1 q g",
        "-1 -q -g -1 -q -g 0 0 0 0 0 1 1 g q q 1 g g q 1",
    ]);
    let mut w = vec![4; 9];
    w.extend([7; 12]);
    VectorSet {
        name: "bbc21".into(),
        dim: 3,
        vectors,
        weights: weights(&w),
        edge_weight_rule: EdgeWeightRule::MaxPlusOne,
        extra_constraints: vec![],
        witness: WitnessKind::Pairwise,
        metadata: meta(int(40), 36, false, false, CfrCapable::Yes),
    }
}

fn ceg18() -> VectorSet {
    let vectors = columns(&[
        "1 0 0 0 1 1 -1 1 t 0 t -1 1 1 t 0 0 0",
        "0 1 0 0 1 -1 1 1 0 t 0 1 1 -1 0 t t 0",
        "0 0 1 0 0 t t 0 1 -1 -1 0 t 0 -1 -1 1 1",
        "0 0 0 1 0 0 0 t -1 -1 1 t 0 t -1 1 -1 1",
    ]);
    VectorSet {
        name: "ceg18".into(),
        dim: 4,
        vectors,
        weights: weights(&[1; 18]),
        edge_weight_rule: EdgeWeightRule::MaxPlusOne,
        extra_constraints: vec![],
        witness: WitnessKind::Pairwise,
        metadata: meta(Rational64::new(9, 2), 4, true, false, CfrCapable::Yes),
    }
}

const PERES24_ROWS: [&str; 4] = [
    "1 0 0 0 1 1 1 1 1 1 1 -1 1 1 0 0 1 1 0 0 1 1 0 0",
    "0 1 0 0 1 1 -1 -1 1 1 -1 1 1 -1 0 0 0 0 1 1 0 0 1 1",
    "0 0 1 0 1 -1 1 -1 1 -1 1 1 0 0 1 1 1 -1 0 0 0 0 1 -1",
    "0 0 0 1 1 -1 -1 1 -1 1 1 1 0 0 1 -1 0 0 1 -1 1 -1 0 0",
];

fn peres24() -> VectorSet {
    VectorSet {
        name: "peres24".into(),
        dim: 4,
        vectors: columns(&PERES24_ROWS),
        weights: weights(&[1; 24]),
        edge_weight_rule: EdgeWeightRule::MaxPlusOne,
        extra_constraints: vec![],
        witness: WitnessKind::Pairwise,
        metadata: meta(int(6), 5, true, true, CfrCapable::Yes),
    }
}

fn peres39() -> VectorSet {
    let vectors = columns(&[
        "1 0 0 0 1 1 1 1 1 1 1 1 1 1 0 0 1 1 0 0 1 1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0",
        "0 1 0 0 1 1 -1 -1 1 1 -1 -1 1 -1 0 0 0 0 1 1 0 0 1 1 0 1 1 1 1 1 1 1 1 0 0 0 0 1 1",
        "0 0 1 0 1 -1 1 -1 1 -1 1 -1 0 0 1 1 1 -1 0 0 0 0 1 -1 0 1 1 -1 -1 1 1 -1 -1 0 0 1 1 0 0",
        "0 0 0 1 1 -1 -1 1 -1 1 1 -1 0 0 1 -1 0 0 1 -1 1 -1 0 0 0 1 -1 1 -1 1 -1 1 -1 1 1 0 0 0 0",
        "0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 1 1 -1 -1 1 -1 1 1 -1 1 -1 1 -1 1 -1",
    ]);
    let w = [
        24, 8, 8, 8, 4, 4, 4, 4, 4, 4, 4, 4, 6, 6, 7, 7, 6, 6, 7, 7, 6, 6, 7, 7, 24, 4, 4, 4, 4, 4, 4,
        4, 4, 6, 6, 6, 6, 6, 6,
    ];
    VectorSet {
        name: "peres39".into(),
        dim: 5,
        vectors,
        weights: weights(&w),
        edge_weight_rule: EdgeWeightRule::MaxPlusOne,
        extra_constraints: vec![],
        witness: WitnessKind::CliqueSum,
        metadata: meta(int(50), 46, true, false, CfrCapable::Yes),
    }
}

fn yo13() -> VectorSet {
    let vectors = columns(&[
        "1 0 0 0 0 1 1 1 1 1 1 -1 1",
        "0 1 0 1 1 0 0 1 -1 1 1 1 -1",
        "0 0 1 1 -1 1 -1 0 0 1 -1 1 1",
    ]);
    let mut w = vec![3; 9];
    w.extend([2; 4]);
    VectorSet {
        name: "yo13".into(),
        dim: 3,
        vectors,
        weights: weights(&w),
        edge_weight_rule: EdgeWeightRule::TwiceMaxPlusOne,
        extra_constraints: vec![vec![0, 1, 2], vec![0, 3, 4], vec![1, 5, 6], vec![2, 7, 8]],
        witness: WitnessKind::Pairwise,
        metadata: meta(Rational64::new(35, 3), 11, false, false, CfrCapable::Conditional),
    }
}

const PERES33_ROWS: [&str; 3] = [
    "1 0 0 0 0 1 1 1 1 0 0 -1 1 -1 1 0 0 t t t t -1 -1 1 1 -1 -1 1 1 t t t t",
    "0 1 0 1 1 -1 1 0 0 -1 1 0 0 t t t t 0 0 -1 1 -1 1 -1 1 t t t t -1 -1 1 1",
    "0 0 1 -1 1 0 0 -1 1 t t t t 0 0 -1 1 -1 1 0 0 t t t t -1 1 -1 1 -1 1 -1 1",
];

fn peres33() -> VectorSet {
    let mut w = vec![3; 3];
    w.extend([1; 30]);
    VectorSet {
        name: "peres33".into(),
        dim: 3,
        vectors: columns(&PERES33_ROWS),
        weights: weights(&w),
        edge_weight_rule: EdgeWeightRule::MaxPlusOne,
        extra_constraints: vec![],
        witness: WitnessKind::Pairwise,
        metadata: meta(int(13), 12, true, false, CfrCapable::No),
    }
}

/// The three embedded copies of YO-13 inside Peres-33 (0-based, in YO-13 order).
pub const PERES33_YO13_COPIES: [[usize; 13]; 3] = [
    [0, 3, 4, 1, 2, 29, 32, 30, 31, 13, 12, 14, 11],
    [1, 7, 8, 0, 2, 25, 28, 26, 27, 19, 10, 20, 9],
    [2, 5, 6, 0, 1, 21, 24, 22, 23, 17, 16, 18, 15],
];

fn pauli() -> [CMat; 4] {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        CMat::from_row_slice(2, 2, &[l, o, o, l]),
        CMat::from_row_slice(2, 2, &[o, l, l, o]),
        CMat::from_row_slice(2, 2, &[o, -i, i, o]),
        CMat::from_row_slice(2, 2, &[l, o, o, -l]),
    ]
}

pub fn pm_square() -> ObservableSet {
    let [id, x, y, z] = pauli();
    let k = |a: &CMat, b: &CMat| a.kronecker(b);
    let ops = vec![
        k(&z, &id),
        k(&id, &z),
        k(&z, &z),
        k(&id, &x),
        k(&x, &id),
        k(&x, &x),
        k(&z, &x),
        k(&x, &z),
        k(&y, &y),
    ];
    let labels = ["A", "B", "C", "a", "b", "c", "alpha", "beta", "gamma"];
    ObservableSet {
        name: "pm".into(),
        dim: 4,
        labels: labels.iter().map(|s| s.to_string()).collect(),
        operators: ops,
    }
}

/// The six contexts of the square (row, row, row, column, column, column) and
/// the sign of their product.
pub const PM_CONTEXTS: [([usize; 3], i32); 6] = [
    ([0, 1, 2], 1),
    ([3, 4, 5], 1),
    ([6, 7, 8], 1),
    ([0, 3, 6], 1),
    ([1, 4, 7], 1),
    ([2, 5, 8], -1),
];

/// The 24 rank-one eigenprojectors of the admissible outcome triples, four per
/// context, in the order (+++, +--, -+-, --+) and for the last column
/// (++-, +-+, -++, ---).
pub fn pm_events() -> Vec<Projector> {
    let sq = pm_square();
    let d = 4;
    let mut out = Vec::with_capacity(24);
    for (ctx, sign) in PM_CONTEXTS {
        let outcomes: [[i32; 3]; 4] = if sign > 0 {
            [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]
        } else {
            [[1, 1, -1], [1, -1, 1], [-1, 1, 1], [-1, -1, -1]]
        };
        for o in outcomes {
            let mut p = CMat::identity(d, d);
            for (k, &idx) in ctx.iter().enumerate() {
                let half = (CMat::identity(d, d) + &sq.operators[idx] * c(o[k] as f64, 0.0)) * c(0.5, 0.0);
                p = &p * half;
            }
            out.push(Projector::new(p).expect("commuting eigenprojectors multiply to a projector"));
        }
    }
    out
}

pub fn parse(text: &str) -> Result<VectorSet> {
    let set: VectorSet = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    if set.vectors.len() != set.weights.len() {
        let (line, column) = locate_key(text, "weights");
        return Err(Error::Parse {
            line,
            column,
            message: format!("{} vectors but {} weights", set.vectors.len(), set.weights.len()),
        });
    }
    for (k, v) in set.vectors.iter().enumerate() {
        if v.len() != set.dim {
            let (line, column) = locate_vector(text, k);
            return Err(Error::Parse {
                line,
                column,
                message: format!("dimension mismatch: vector {k} has {} entries, dim is {}", v.len(), set.dim),
            });
        }
        if v.iter().all(|e| e.coeff == 0) {
            let (line, column) = locate_vector(text, k);
            return Err(Error::Parse {
                line,
                column,
                message: format!("vector {k} is zero"),
            });
        }
    }
    set.validate().map_err(|e| {
        let (line, column) = locate_key(text, "extra_constraints");
        Error::Parse {
            line,
            column,
            message: e.to_string(),
        }
    })?;
    Ok(set)
}

pub fn serialize(set: &VectorSet) -> String {
    serde_json::to_string_pretty(set).expect("vector sets serialize")
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

/// Byte offset just after the value-start of a top-level key, string-aware.
fn key_offset(text: &str, key: &str) -> Option<usize> {
    let pat = format!("\"{key}\"");
    let bytes = text.as_bytes();
    let mut depth = 0i32;
    let mut in_str = false;
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if in_str {
            if b == b'\\' {
                i += 2;
                continue;
            }
            if b == b'"' {
                in_str = false;
            }
        } else {
            match b {
                b'{' | b'[' => depth += 1,
                b'}' | b']' => depth -= 1,
                b'"' => {
                    if depth == 1 && text[i..].starts_with(&pat) {
                        let rest = &text[i + pat.len()..];
                        let colon = rest.find(':')?;
                        let after = i + pat.len() + colon + 1;
                        let ws = text[after..].len() - text[after..].trim_start().len();
                        return Some(after + ws);
                    }
                    in_str = true;
                }
                _ => {}
            }
        }
        i += 1;
    }
    None
}

fn locate_key(text: &str, key: &str) -> (usize, usize) {
    key_offset(text, key).map_or((1, 1), |o| line_col(text, o))
}

fn locate_vector(text: &str, k: usize) -> (usize, usize) {
    let Some(start) = key_offset(text, "vectors") else {
        return (1, 1);
    };
    let bytes = text.as_bytes();
    let mut depth = 0i32;
    let mut count = 0usize;
    let mut in_str = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_str {
            if b == b'"' && bytes[i - 1] != b'\\' {
                in_str = false;
            }
            continue;
        }
        match b {
            b'"' => in_str = true,
            b'[' => {
                depth += 1;
                if depth == 2 {
                    if count == k {
                        return line_col(text, i);
                    }
                    count += 1;
                }
            }
            b']' => {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
            _ => {}
        }
    }
    line_col(text, start)
}
