use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::dense::{self, c64, DenseOperator};
use crate::error::{Error, Result};
use crate::reps::{Basis, LocalSuperOp};
use crate::weyl::{check_prime, materialize, root_of_unity, weyl_coefficient, WeylIndex};

/// Elementary Clifford gates, indexed by qudit positions within the gate's
/// support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Generator {
    /// `|j> ↦ d^{-1/2} Σ_k ν^{jk} |k>` (Hadamard at d = 2).
    Fourier(usize),
    /// `diag(1, i)` at d = 2, `|j> ↦ ν^{j(j-1)/2} |j>` for odd d.
    Phase(usize),
    /// `|j> ↦ |c·j>`, `c ≠ 0`.
    Mult(usize, u32),
    /// `|i, j> ↦ |i, i + j>` (CNOT at d = 2).
    Csum(usize, usize),
    /// `Z^a X^b`.
    Weyl(usize, u32, u32),
}

impl Generator {
    fn qudits(&self) -> Vec<usize> {
        match *self {
            Generator::Fourier(q) | Generator::Phase(q) | Generator::Mult(q, _) | Generator::Weyl(q, _, _) => vec![q],
            Generator::Csum(c, t) => vec![c, t],
        }
    }

    fn relabel(&self, map: &[usize]) -> Generator {
        match *self {
            Generator::Fourier(q) => Generator::Fourier(map[q]),
            Generator::Phase(q) => Generator::Phase(map[q]),
            Generator::Mult(q, c) => Generator::Mult(map[q], c),
            Generator::Weyl(q, a, b) => Generator::Weyl(map[q], a, b),
            Generator::Csum(c, t) => Generator::Csum(map[c], map[t]),
        }
    }

    /// Same generator acting on qudits `0` (and `1`).
    fn canonical(&self) -> Generator {
        match *self {
            Generator::Csum(_, _) => Generator::Csum(0, 1),
            g => g.relabel(&[0; 1].repeat(g.qudits()[0] + 1)),
        }
    }

    /// Unitary on the generator's own qudits, in `qudits()` order.
    fn local_unitary(&self, d: u32) -> DenseOperator {
        let du = d as usize;
        match *self {
            Generator::Fourier(_) => {
                let s = 1.0 / (d as f64).sqrt();
                DenseOperator::from_fn(du, du, |k, j| root_of_unity((j * k) as i64, d) * s)
            }
            Generator::Phase(_) => DenseOperator::from_fn(du, du, |i, j| {
                if i != j {
                    c64(0.0, 0.0)
                } else if d == 2 {
                    if j == 0 { c64(1.0, 0.0) } else { c64(0.0, 1.0) }
                } else {
                    root_of_unity((j * (j + du - 1) / 2) as i64, d)
                }
            }),
            Generator::Mult(_, c) => {
                DenseOperator::from_fn(du, du, |i, j| if i == (c as usize * j) % du { c64(1.0, 0.0) } else { c64(0.0, 0.0) })
            }
            Generator::Csum(_, _) => DenseOperator::from_fn(du * du, du * du, |r, col| {
                let (i, j) = (col / du, col % du);
                if r == i * du + (i + j) % du { c64(1.0, 0.0) } else { c64(0.0, 0.0) }
            }),
            Generator::Weyl(_, a, b) => materialize(&WeylIndex::new(d, vec![a], vec![b]).expect("valid")).expect("small"),
        }
    }

    fn validate(&self, d: u32, m: usize) -> Result<()> {
        let qs = self.qudits();
        if qs.iter().any(|&q| q >= m) || (qs.len() == 2 && qs[0] == qs[1]) {
            return Err(Error::InvalidArgument(format!("generator {self} does not fit {m} qudits")));
        }
        match *self {
            Generator::Mult(_, c) if c == 0 || c >= d => {
                Err(Error::InvalidArgument(format!("multiplier {c} is not a unit mod {d}")))
            }
            Generator::Weyl(_, a, b) if a >= d || b >= d => Err(Error::InvalidArgument(format!("{self} out of range"))),
            _ => Ok(()),
        }
    }

    /// Parses tokens `F0`/`H0`, `P0`/`S0`, `M0_2`, `CSUM0_1`/`CX0_1`/`CNOT0_1`, `X0`, `Z0`, `W0_a_b`.
    pub fn parse(tok: &str) -> Result<Generator> {
        let bad = || Error::Parse(format!("bad Clifford generator {tok:?}"));
        let split = tok.find(|c: char| c.is_ascii_digit()).ok_or_else(bad)?;
        let (name, rest) = tok.split_at(split);
        let args: Vec<u32> = rest
            .split('_')
            .map(|s| s.parse::<u32>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let q = args[0] as usize;
        Ok(match (name.to_ascii_uppercase().as_str(), args.len()) {
            ("F" | "H", 1) => Generator::Fourier(q),
            ("P" | "S", 1) => Generator::Phase(q),
            ("M", 2) => Generator::Mult(q, args[1]),
            ("CSUM" | "CX" | "CNOT", 2) => Generator::Csum(q, args[1] as usize),
            ("X", 1) => Generator::Weyl(q, 0, 1),
            ("Z", 1) => Generator::Weyl(q, 1, 0),
            ("W", 3) => Generator::Weyl(q, args[1], args[2]),
            _ => return Err(bad()),
        })
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Generator::Fourier(q) => write!(f, "F{q}"),
            Generator::Phase(q) => write!(f, "P{q}"),
            Generator::Mult(q, c) => write!(f, "M{q}_{c}"),
            Generator::Csum(c, t) => write!(f, "CSUM{c}_{t}"),
            Generator::Weyl(q, a, b) => write!(f, "W{q}_{a}_{b}"),
        }
    }
}

/// Conjugation table entry: `g W_w g^† = e^{iπ k/d} W_image`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Image {
    k: u32,
    code: u32,
}

/// Conjugation table of a generator on its own qudits, read off the dense
/// conjugation.
fn generator_table(g: &Generator, d: u32) -> Vec<Image> {
    let m = g.qudits().len();
    let u = g.local_unitary(d);
    let dim = (d as usize).pow(m as u32);
    WeylIndex::all(d, m)
        .map(|w| {
            let img = &u * materialize(&w).unwrap() * u.adjoint();
            // The image is monomial; its column 0 sits in row b' (the X part).
            let row = (0..dim).find(|&r| img[(r, 0)].norm() > 0.5).expect("monomial");
            let mut bdig = vec![0u32; m];
            let mut x = row;
            for slot in bdig.iter_mut().rev() {
                *slot = (x % d as usize) as u32;
                x /= d as usize;
            }
            let (cand, z) = (0..(d as usize).pow(m as u32))
                .map(|acode| {
                    let mut adig = vec![0u32; m];
                    let mut x = acode;
                    for slot in adig.iter_mut().rev() {
                        *slot = (x % d as usize) as u32;
                        x /= d as usize;
                    }
                    let cand = WeylIndex::new(d, adig, bdig.clone()).unwrap();
                    let z = weyl_coefficient(&img, &cand).unwrap();
                    (cand, z)
                })
                .find(|(_, z)| z.norm() > 0.5)
                .expect("Clifford image is a Weyl operator");
            let k = (z.arg() * d as f64 / PI).round() as i64;
            let k = k.rem_euclid(2 * d as i64) as u32;
            debug_assert!((Complex64::from_polar(1.0, PI * k as f64 / d as f64) - z).norm() < 1e-9);
            Image { k, code: cand.code() as u32 }
        })
        .collect()
}

fn split_code(code: usize, q: usize, len: usize) -> Vec<usize> {
    let mut v = vec![0; len];
    let mut x = code;
    for slot in v.iter_mut().rev() {
        *slot = x % q;
        x /= q;
    }
    v
}

fn join_code(digits: &[usize], q: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * q + x)
}

/// Applies a generator table (on `qs`) after an existing table over `m` qudits.
fn apply_generator(table: &mut [Image], gen: &[Image], qs: &[usize], d: u32, m: usize) {
    let q = (d * d) as usize;
    for e in table.iter_mut() {
        let mut dg = split_code(e.code as usize, q, m);
        let local = join_code(&qs.iter().map(|&i| dg[i]).collect::<Vec<_>>(), q);
        let g = gen[local];
        let gd = split_code(g.code as usize, q, qs.len());
        for (k, &i) in qs.iter().enumerate() {
            dg[i] = gd[k];
        }
        e.code = join_code(&dg, q) as u32;
        e.k = (e.k + g.k) % (2 * d);
    }
}

/// Largest conjugation table (`d^{2m}` entries) a gate may carry.
const MAX_TABLE: usize = 1 << 20;

/// Clifford unitary on `m` qudits stored by its action on Weyl labels:
/// `g W_w g^† = e^{iπ k(w)/d} W_{S w}`. Phases are multiples of `π/d` because
/// at `d = 2` conjugation can produce `±i`.
#[derive(Debug, Clone)]
pub struct CliffordGate {
    d: u32,
    m: usize,
    word: Vec<Generator>,
    table: Vec<Image>,
    symplectic: Vec<Vec<u32>>,
}

impl CliffordGate {
    pub fn identity(d: u32, m: usize) -> Result<Self> {
        Self::from_generators(d, m, Vec::new())
    }

    /// Gate applying `word` left to right.
    pub fn from_generators(d: u32, m: usize, word: Vec<Generator>) -> Result<Self> {
        check_prime(d)?;
        let q = (d * d) as usize;
        let size = q.checked_pow(m as u32).filter(|&s| s <= MAX_TABLE).ok_or_else(|| {
            Error::SizeLimit(format!("Clifford table for {m} qudits at d = {d}"))
        })?;
        for g in &word {
            g.validate(d, m)?;
        }
        let mut table: Vec<Image> = (0..size as u32).map(|c| Image { k: 0, code: c }).collect();
        let mut cache: Vec<(Generator, Vec<Image>)> = Vec::new();
        for g in &word {
            let key = g.canonical();
            let gen = match cache.iter().find(|(k, _)| *k == key) {
                Some((_, t)) => t.clone(),
                None => {
                    let t = generator_table(&key, d);
                    cache.push((key, t.clone()));
                    t
                }
            };
            apply_generator(&mut table, &gen, &g.qudits(), d, m);
        }
        let symplectic = Self::symplectic_from_table(&table, d, m);
        let gate = CliffordGate {
            d,
            m,
            word,
            table,
            symplectic,
        };
        if !gate.preserves_symplectic_form() {
            return Err(Error::InvalidArgument("action is not symplectic".into()));
        }
        if m <= 2 {
            gate.verify_dense(1e-9)?;
        }
        Ok(gate)
    }

    /// Parses a whitespace- or dot-separated generator word.
    pub fn parse(d: u32, m: usize, word: &str) -> Result<Self> {
        let gens = word
            .split(|c: char| c.is_whitespace() || c == '.')
            .filter(|t| !t.is_empty())
            .map(Generator::parse)
            .collect::<Result<Vec<_>>>()?;
        Self::from_generators(d, m, gens)
    }

    fn symplectic_from_table(table: &[Image], d: u32, m: usize) -> Vec<Vec<u32>> {
        // Column j is the image of unit vector j in the order (a_0..a_{m-1}, b_0..b_{m-1}).
        let mut s = vec![vec![0u32; 2 * m]; 2 * m];
        for j in 0..2 * m {
            let mut a = vec![0u32; m];
            let mut b = vec![0u32; m];
            if j < m {
                a[j] = 1;
            } else {
                b[j - m] = 1;
            }
            let w = WeylIndex::new(d, a, b).unwrap();
            let img = WeylIndex::from_code(d, m, table[w.code()].code as usize);
            for i in 0..m {
                s[i][j] = img.a()[i];
                s[m + i][j] = img.b()[i];
            }
        }
        s
    }

    fn preserves_symplectic_form(&self) -> bool {
        let (d, m) = (self.d as i64, self.m);
        let form = |u: &[i64], v: &[i64]| -> i64 {
            (0..m).map(|i| u[i] * v[m + i] - u[m + i] * v[i]).sum::<i64>().rem_euclid(d)
        };
        let col = |j: usize| -> Vec<i64> { (0..2 * m).map(|i| self.symplectic[i][j] as i64).collect() };
        for i in 0..2 * m {
            for j in 0..2 * m {
                let mut ei = vec![0i64; 2 * m];
                let mut ej = vec![0i64; 2 * m];
                ei[i] = 1;
                ej[j] = 1;
                if form(&col(i), &col(j)) != form(&ei, &ej) {
                    return false;
                }
            }
        }
        true
    }

    fn verify_dense(&self, tol: f64) -> Result<()> {
        let u = self.unitary();
        for w in WeylIndex::all(self.d, self.m) {
            let lhs = &u * materialize(&w)? * u.adjoint();
            let (ph, img) = self.action(&w)?;
            let rhs = materialize(&img)? * ph;
            if dense::max_abs_diff(&lhs, &rhs) > tol {
                return Err(Error::InvalidArgument(format!("conjugation table disagrees at {w}")));
            }
        }
        Ok(())
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn arity(&self) -> usize {
        self.m
    }

    pub fn word(&self) -> &[Generator] {
        &self.word
    }

    pub fn word_string(&self) -> String {
        self.word.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(" ")
    }

    /// Symplectic matrix over `Z_d` acting on `(a, b)` column vectors.
    pub fn symplectic(&self) -> &[Vec<u32>] {
        &self.symplectic
    }

    pub fn action(&self, w: &WeylIndex) -> Result<(Complex64, WeylIndex)> {
        if w.d() != self.d || w.n() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "label {w} does not match a {}-qudit gate at d = {}",
                self.m, self.d
            )));
        }
        let e = self.table[w.code()];
        Ok((
            Complex64::from_polar(1.0, PI * e.k as f64 / self.d as f64),
            WeylIndex::from_code(self.d, self.m, e.code as usize),
        ))
    }

    /// Dense unitary, the product of the generator unitaries.
    pub fn unitary(&self) -> DenseOperator {
        let d = self.d as usize;
        let mut u = dense::identity(d.pow(self.m as u32));
        for g in &self.word {
            u = dense::embed(&g.local_unitary(self.d), &g.qudits(), d, self.m) * u;
        }
        u
    }

    /// Signed-permutation superoperator in the Weyl basis.
    pub fn superop(&self) -> LocalSuperOp {
        let dim = self.table.len();
        let mut mat = DenseOperator::zeros(dim, dim);
        for (c, e) in self.table.iter().enumerate() {
            mat[(e.code as usize, c)] = Complex64::from_polar(1.0, PI * e.k as f64 / self.d as f64);
        }
        LocalSuperOp::from_matrix(Basis::Weyl, self.d, self.m, &mat).expect("square table")
    }

    /// Same gate on qudits `positions` of an `n`-qudit register.
    pub fn embed(&self, positions: &[usize], n: usize) -> Result<CliffordGate> {
        if positions.len() != self.m {
            return Err(Error::DimensionMismatch("embedding positions".into()));
        }
        CliffordGate::from_generators(self.d, n, self.word.iter().map(|g| g.relabel(positions)).collect())
    }
}

pub fn clifford_action(g: &CliffordGate, w: &WeylIndex) -> Result<(Complex64, WeylIndex)> {
    g.action(w)
}

/// A Clifford `g` with `g W_{w1} g^† ∝ W_{w2}`, found by breadth-first search
/// over generator actions on the qudits where either label is non-trivial.
pub fn solve_clifford_mapping(w1: &WeylIndex, w2: &WeylIndex) -> Result<CliffordGate> {
    if w1.d() != w2.d() || w1.n() != w2.n() {
        return Err(Error::DimensionMismatch("labels differ in (d, n)".into()));
    }
    for w in [w1, w2] {
        if w.is_identity() {
            return Err(Error::IdentityLabel(w.to_string()));
        }
    }
    let (d, n) = (w1.d(), w1.n());
    let mut support: Vec<usize> = w1.support();
    support.extend(w2.support());
    support.sort_unstable();
    support.dedup();
    let k = support.len();
    if k > 3 {
        return Err(Error::SizeLimit(format!("mapping search over {k} qudits")));
    }
    let mut gens = Vec::new();
    for q in 0..k {
        gens.push(Generator::Fourier(q));
        gens.push(Generator::Phase(q));
        for c in 2..d {
            gens.push(Generator::Mult(q, c));
        }
        for t in 0..k {
            if t != q {
                gens.push(Generator::Csum(q, t));
            }
        }
    }
    let perms: Vec<Vec<u32>> = gens
        .iter()
        .map(|g| CliffordGate::from_generators(d, k, vec![*g]).map(|c| c.table.iter().map(|e| e.code).collect()))
        .collect::<Result<_>>()?;
    let start = w1.restrict(&support).code();
    let goal = w2.restrict(&support).code();
    let size = (d as usize).pow(2 * k as u32);
    let mut prev: Vec<Option<(u32, u16)>> = vec![None; size];
    let mut seen = vec![false; size];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        if v == goal {
            break;
        }
        for (gi, p) in perms.iter().enumerate() {
            let u = p[v] as usize;
            if !seen[u] {
                seen[u] = true;
                prev[u] = Some((v as u32, gi as u16));
                queue.push_back(u);
            }
        }
    }
    if !seen[goal] {
        return Err(Error::InvalidArgument(format!("no Clifford maps {w1} to {w2}")));
    }
    let mut word = Vec::new();
    let mut v = goal;
    while let Some((p, gi)) = prev[v] {
        word.push(gens[gi as usize].relabel(&support));
        v = p as usize;
    }
    word.reverse();
    let gate = CliffordGate::from_generators(d, n, word)?;
    let (_, img) = gate.action(w1)?;
    debug_assert_eq!(&img, w2);
    Ok(gate)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(d: u32, s: &str) -> WeylIndex {
        WeylIndex::parse(d, s).unwrap()
    }

    #[test]
    fn identity_gate() {
        let g = CliffordGate::identity(3, 2).unwrap();
        let w = idx(3, "12|20");
        let (ph, img) = clifford_action(&g, &w).unwrap();
        assert!((ph - 1.0).norm() < 1e-15);
        assert_eq!(img, w);
    }

    #[test]
    fn cnot_action() {
        let g = CliffordGate::parse(2, 2, "CNOT0_1").unwrap();
        let check = |src: &str, dst: &str| {
            let (ph, img) = clifford_action(&g, &idx(2, src)).unwrap();
            assert!((ph - 1.0).norm() < 1e-12, "{src}");
            assert_eq!(img.to_string(), dst);
        };
        check("10|00", "10|00");
        check("00|01", "00|01");
        check("00|10", "00|11");
    }

    #[test]
    fn qutrit_fourier_maps_z_to_inverse_x() {
        let g = CliffordGate::parse(3, 1, "F0").unwrap();
        let (_, img) = clifford_action(&g, &idx(3, "1|0")).unwrap();
        assert_eq!(img.to_string(), "0|2");
    }

    #[test]
    fn hadamard_solves_z_to_x() {
        let g = solve_clifford_mapping(&idx(2, "1|0"), &idx(2, "0|1")).unwrap();
        assert_eq!(g.word(), &[Generator::Fourier(0)]);
        let same = solve_clifford_mapping(&idx(2, "1|0"), &idx(2, "1|0")).unwrap();
        assert!(same.word().is_empty());
        assert!(matches!(
            solve_clifford_mapping(&idx(2, "0|0"), &idx(2, "1|0")),
            Err(Error::IdentityLabel(_))
        ));
    }

    #[test]
    fn phase_gate_gives_imaginary_phase_at_d2() {
        let g = CliffordGate::parse(2, 1, "S0").unwrap();
        let (ph, img) = clifford_action(&g, &idx(2, "0|1")).unwrap();
        assert_eq!(img.to_string(), "1|1");
        assert!((ph - c64(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn parse_errors() {
        assert!(CliffordGate::parse(2, 1, "Q0").is_err());
        assert!(CliffordGate::parse(2, 1, "CNOT0_1").is_err());
        assert!(CliffordGate::parse(3, 1, "M0_0").is_err());
    }

    #[test]
    fn random_qutrit_pairs_are_solvable() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let mut pick = || loop {
                let w = WeylIndex::from_code(3, 2, rng.random_range(0..81));
                if !w.is_identity() {
                    break w;
                }
            };
            let (w1, w2) = (pick(), pick());
            let g = solve_clifford_mapping(&w1, &w2).unwrap();
            let (_, img) = g.action(&w1).unwrap();
            assert_eq!(img, w2);
        }
    }
}
