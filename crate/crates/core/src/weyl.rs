//! Exact arithmetic for the projective Weyl–Heisenberg group on `n` qudits of
//! prime dimension `d`.
//!
//! `W_(a,b) = Z^a X^b` with `X|j> = |j+1>` and `Z|j> = ν^j |j>`, `ν = e^{2πi/d}`.
//! Phases are kept as integers mod `d`; complex numbers appear only when a
//! phase or character is evaluated.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dense::DenseOperator;
use crate::error::{Error, Result};

/// Largest Hilbert-space dimension `d^n` the dense oracle will materialize.
pub const MAX_DENSE_DIM: usize = 1024;

pub fn is_prime(d: u32) -> bool {
    if d < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= d {
        if d % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

pub(crate) fn check_prime(d: u32) -> Result<()> {
    if is_prime(d) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("d = {d} is not prime")))
    }
}

/// `e^{2πi k/d}`.
pub fn root_of_unity(k: i64, d: u32) -> Complex64 {
    let k = k.rem_euclid(d as i64) as f64;
    Complex64::from_polar(1.0, 2.0 * PI * k / d as f64)
}

/// The scalar `ν^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhaseExponent {
    k: u32,
    d: u32,
}

impl PhaseExponent {
    pub fn new(k: i64, d: u32) -> Self {
        PhaseExponent {
            k: k.rem_euclid(d as i64) as u32,
            d,
        }
    }

    pub fn zero(d: u32) -> Self {
        PhaseExponent { k: 0, d }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn value(&self) -> Complex64 {
        root_of_unity(self.k as i64, self.d)
    }

    pub fn add(self, other: PhaseExponent) -> PhaseExponent {
        PhaseExponent::new(self.k as i64 + other.k as i64, self.d)
    }

    pub fn neg(self) -> PhaseExponent {
        PhaseExponent::new(-(self.k as i64), self.d)
    }
}

/// Label `(a, b) ∈ Z_d^{2n}` of the tensor-product Weyl operator
/// `⊗_i Z^{a_i} X^{b_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeylIndex {
    d: u32,
    a: Vec<u32>,
    b: Vec<u32>,
}

impl WeylIndex {
    pub fn new(d: u32, a: Vec<u32>, b: Vec<u32>) -> Result<Self> {
        check_prime(d)?;
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::DimensionMismatch(format!(
                "a has {} entries, b has {}",
                a.len(),
                b.len()
            )));
        }
        if let Some(x) = a.iter().chain(&b).find(|&&x| x >= d) {
            return Err(Error::InvalidArgument(format!("entry {x} not in [0, {d})")));
        }
        Ok(WeylIndex { d, a, b })
    }

    pub fn identity(d: u32, n: usize) -> Self {
        WeylIndex {
            d,
            a: vec![0; n],
            b: vec![0; n],
        }
    }

    /// Index from per-qudit digits `s_i = a_i·d + b_i`.
    pub fn from_digits(d: u32, digits: &[u32]) -> Self {
        WeylIndex {
            d,
            a: digits.iter().map(|s| s / d).collect(),
            b: digits.iter().map(|s| s % d).collect(),
        }
    }

    /// Inverse of [`WeylIndex::code`]; qudit 0 is the most significant digit.
    pub fn from_code(d: u32, n: usize, mut code: usize) -> Self {
        let q = (d * d) as usize;
        let mut digits = vec![0u32; n];
        for slot in digits.iter_mut().rev() {
            *slot = (code % q) as u32;
            code /= q;
        }
        Self::from_digits(d, &digits)
    }

    /// Parse `"a1…an|b1…bn"` with base-`d` digits.
    pub fn parse(d: u32, s: &str) -> Result<Self> {
        let (sa, sb) = s
            .split_once('|')
            .ok_or_else(|| Error::Parse(format!("Weyl index {s:?} lacks '|'")))?;
        let digit = |c: char| {
            c.to_digit(10)
                .ok_or_else(|| Error::Parse(format!("bad digit {c:?} in Weyl index {s:?}")))
        };
        let a = sa.chars().map(digit).collect::<Result<Vec<_>>>()?;
        let b = sb.chars().map(digit).collect::<Result<Vec<_>>>()?;
        Self::new(d, a, b).map_err(|e| Error::Parse(format!("Weyl index {s:?}: {e}")))
    }

    /// All `d^{2n}` indices in code order.
    pub fn all(d: u32, n: usize) -> impl Iterator<Item = WeylIndex> {
        let total = (d as usize).pow(2 * n as u32);
        (0..total).map(move |c| WeylIndex::from_code(d, n, c))
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[u32] {
        &self.a
    }

    pub fn b(&self) -> &[u32] {
        &self.b
    }

    pub fn digit(&self, i: usize) -> u32 {
        self.a[i] * self.d + self.b[i]
    }

    pub fn digits(&self) -> Vec<u32> {
        (0..self.n()).map(|i| self.digit(i)).collect()
    }

    pub fn code(&self) -> usize {
        let q = (self.d * self.d) as usize;
        (0..self.n()).fold(0, |acc, i| acc * q + self.digit(i) as usize)
    }

    pub fn is_identity(&self) -> bool {
        self.a.iter().chain(&self.b).all(|&x| x == 0)
    }

    /// Qudits on which the operator acts non-trivially.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.a[i] != 0 || self.b[i] != 0).collect()
    }

    pub fn restrict(&self, qudits: &[usize]) -> WeylIndex {
        WeylIndex {
            d: self.d,
            a: qudits.iter().map(|&q| self.a[q]).collect(),
            b: qudits.iter().map(|&q| self.b[q]).collect(),
        }
    }

    /// Label of the inverse operator up to phase.
    pub fn neg(&self) -> WeylIndex {
        let d = self.d;
        WeylIndex {
            d,
            a: self.a.iter().map(|&x| (d - x) % d).collect(),
            b: self.b.iter().map(|&x| (d - x) % d).collect(),
        }
    }

    fn check_same(&self, other: &WeylIndex) -> Result<()> {
        if self.d != other.d || self.n() != other.n() {
            return Err(Error::DimensionMismatch(format!(
                "(d, n) = ({}, {}) vs ({}, {})",
                self.d,
                self.n(),
                other.d,
                other.n()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for WeylIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in &self.a {
            write!(f, "{x}")?;
        }
        f.write_str("|")?;
        for x in &self.b {
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

impl Serialize for WeylIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Serialized form of a [`WeylIndex`]; the dimension comes from the enclosing
/// document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeylLabel(pub String);

impl<'de> Deserialize<'de> for WeylLabel {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(de).map(WeylLabel)
    }
}

impl WeylLabel {
    pub fn resolve(&self, d: u32) -> Result<WeylIndex> {
        WeylIndex::parse(d, &self.0)
    }
}

/// Product `W_1 W_2 = ν^k W_3` with `W_3 = W_(a1+a2, b1+b2)`.
///
/// From `X^b Z^a = ν^{-ab} Z^a X^b` the exponent is `k = -Σ_i b1_i a2_i`.
pub fn weyl_mul(w1: &WeylIndex, w2: &WeylIndex) -> Result<(PhaseExponent, WeylIndex)> {
    w1.check_same(w2)?;
    let d = w1.d;
    let k: i64 = -(0..w1.n())
        .map(|i| (w1.b[i] * w2.a[i]) as i64)
        .sum::<i64>();
    let sum = |x: &[u32], y: &[u32]| x.iter().zip(y).map(|(p, q)| (p + q) % d).collect();
    Ok((
        PhaseExponent::new(k, d),
        WeylIndex {
            d,
            a: sum(&w1.a, &w2.a),
            b: sum(&w1.b, &w2.b),
        },
    ))
}

/// Phase `k` with `W_1 W_2 W_1^† = ν^k W_2`, namely `k = Σ_i (a1_i b2_i − b1_i a2_i)`.
pub fn weyl_conjugate(w1: &WeylIndex, w2: &WeylIndex) -> Result<PhaseExponent> {
    w1.check_same(w2)?;
    let k: i64 = (0..w1.n())
        .map(|i| (w1.a[i] * w2.b[i]) as i64 - (w1.b[i] * w2.a[i]) as i64)
        .sum();
    Ok(PhaseExponent::new(k, w1.d))
}

/// `χ_(a,b)(a0,b0) = exp(2πi/d · (⟨b,a0⟩ − ⟨a,b0⟩))`.
pub fn character(label: &WeylIndex, arg: &WeylIndex) -> Result<Complex64> {
    label.check_same(arg)?;
    let k: i64 = (0..label.n())
        .map(|i| (label.b[i] * arg.a[i]) as i64 - (label.a[i] * arg.b[i]) as i64)
        .sum();
    Ok(root_of_unity(k, label.d))
}

/// Image and phase of `|j>` under `W`: `W|j> = phase · |image>`, digits of
/// `j` with qudit 0 most significant.
pub(crate) fn weyl_action_on_basis(w: &WeylIndex, j: usize) -> (usize, PhaseExponent) {
    let d = w.d as usize;
    let n = w.n();
    let mut rem = j;
    let mut digits = vec![0usize; n];
    for slot in digits.iter_mut().rev() {
        *slot = rem % d;
        rem /= d;
    }
    let mut k = 0i64;
    let mut image = 0usize;
    for i in 0..n {
        let shifted = (digits[i] + w.b[i] as usize) % d;
        k += (w.a[i] as usize * shifted) as i64;
        image = image * d + shifted;
    }
    (image, PhaseExponent::new(k, w.d))
}

/// Dense matrix of `⊗_i Z^{a_i} X^{b_i}`.
pub fn materialize(w: &WeylIndex) -> Result<DenseOperator> {
    let dim = dense_dim(w.d, w.n())?;
    let mut m = DenseOperator::zeros(dim, dim);
    for j in 0..dim {
        let (i, ph) = weyl_action_on_basis(w, j);
        m[(i, j)] = ph.value();
    }
    Ok(m)
}

/// `d^{-n} tr(W^† X)`.
pub fn weyl_coefficient(x: &DenseOperator, w: &WeylIndex) -> Result<Complex64> {
    let dim = dense_dim(w.d, w.n())?;
    if x.nrows() != dim || x.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, expected {dim}x{dim}",
            x.nrows(),
            x.ncols()
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..dim {
        let (i, ph) = weyl_action_on_basis(w, j);
        acc += ph.value().conj() * x[(i, j)];
    }
    Ok(acc / dim as f64)
}

pub(crate) fn dense_dim(d: u32, n: usize) -> Result<usize> {
    let dim = (d as usize)
        .checked_pow(n as u32)
        .filter(|&v| v <= MAX_DENSE_DIM)
        .ok_or_else(|| Error::SizeLimit(format!("d^n = {d}^{n} exceeds {MAX_DENSE_DIM}")))?;
    Ok(dim)
}
