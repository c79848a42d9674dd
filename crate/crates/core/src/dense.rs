//! Dense-matrix oracle: operators, Liouville superoperators (column-stacking
//! convention, `vec(AXB) = (Bᵀ ⊗ A) vec(X)`), Kraus application and Choi checks.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type DenseOperator = DMatrix<Complex64>;

pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> DenseOperator {
    DenseOperator::identity(dim, dim)
}

pub fn kron(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
    a.kronecker(b)
}

pub fn kron_all<'a>(ops: impl IntoIterator<Item = &'a DenseOperator>) -> DenseOperator {
    ops.into_iter()
        .fold(identity(1), |acc, op| kron(&acc, op))
}

pub fn trace(a: &DenseOperator) -> Complex64 {
    a.diagonal().iter().sum()
}

pub fn max_abs_diff(a: &DenseOperator, b: &DenseOperator) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn is_hermitian(a: &DenseOperator, tol: f64) -> bool {
    a.is_square() && max_abs_diff(a, &a.adjoint()) <= tol
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &DenseOperator) -> f64 {
    let h = (a + a.adjoint()) * c64(0.5, 0.0);
    h.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn check_density(rho: &DenseOperator, tol: f64) -> Result<()> {
    if !is_hermitian(rho, tol) {
        return Err(Error::InvalidState("not Hermitian".into()));
    }
    let tr = trace(rho);
    if (tr - 1.0).norm() > tol {
        return Err(Error::InvalidState(format!("trace {tr} != 1")));
    }
    let lo = min_eigenvalue(rho);
    if lo < -tol {
        return Err(Error::InvalidState(format!("eigenvalue {lo:.3e} < 0")));
    }
    Ok(())
}

pub fn vec_op(x: &DenseOperator) -> DMatrix<Complex64> {
    let n = x.len();
    DMatrix::from_iterator(n, 1, x.iter().copied())
}

pub fn unvec(v: &DMatrix<Complex64>, dim: usize) -> DenseOperator {
    DenseOperator::from_iterator(dim, dim, v.iter().copied())
}

pub fn liouville_from_kraus(kraus: &[DenseOperator]) -> DenseOperator {
    let dim = kraus[0].nrows();
    let mut s = DenseOperator::zeros(dim * dim, dim * dim);
    for k in kraus {
        s += kron(&k.map(|z| z.conj()), k);
    }
    s
}

pub fn liouville_unitary(u: &DenseOperator) -> DenseOperator {
    liouville_from_kraus(std::slice::from_ref(u))
}

pub fn apply_liouville(s: &DenseOperator, x: &DenseOperator) -> DenseOperator {
    unvec(&(s * vec_op(x)), x.nrows())
}

/// Choi matrix `Σ_ij |i><j| ⊗ N(|i><j|)`.
pub fn choi(s: &DenseOperator) -> DenseOperator {
    let dim = (s.nrows() as f64).sqrt().round() as usize;
    let mut out = DenseOperator::zeros(dim * dim, dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut e = DenseOperator::zeros(dim, dim);
            e[(i, j)] = c64(1.0, 0.0);
            let img = apply_liouville(s, &e);
            out.view_mut((i * dim, j * dim), (dim, dim)).copy_from(&img);
        }
    }
    out
}

pub fn is_completely_positive(s: &DenseOperator, tol: f64) -> bool {
    min_eigenvalue(&choi(s)) >= -tol
}

/// `Σ_i N(|i><j|)` has trace `δ_ij` for trace-preserving maps.
pub fn is_trace_preserving(s: &DenseOperator, tol: f64) -> bool {
    let dim = (s.nrows() as f64).sqrt().round() as usize;
    let id = identity(dim);
    // vec(I)† S = vec(I)† iff TP.
    let row = vec_op(&id).adjoint() * s;
    let target = vec_op(&id).adjoint();
    max_abs_diff(&row, &target) <= tol
}

/// Splits a full basis index into the digits on `support` and the rest.
fn digits_of(mut idx: usize, d: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = idx % d;
        idx /= d;
    }
    out
}

fn index_of(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

/// `op` (acting on `support`, listed in the operator's tensor order) embedded
/// into `n` qudits.
pub fn embed(op: &DenseOperator, support: &[usize], d: usize, n: usize) -> DenseOperator {
    let dim = d.pow(n as u32);
    let mut out = DenseOperator::zeros(dim, dim);
    for col in 0..dim {
        let cd = digits_of(col, d, n);
        let local_c = index_of(&support.iter().map(|&q| cd[q]).collect::<Vec<_>>(), d);
        for local_r in 0..op.nrows() {
            let v = op[(local_r, local_c)];
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut rd = cd.clone();
            let lr = digits_of(local_r, d, support.len());
            for (k, &q) in support.iter().enumerate() {
                rd[q] = lr[k];
            }
            out[(index_of(&rd, d), col)] += v;
        }
    }
    out
}

/// Applies a Kraus map acting on `support` to an `n`-qudit density matrix.
pub fn apply_kraus(
    rho: &DenseOperator,
    kraus: &[DenseOperator],
    support: &[usize],
    d: usize,
    n: usize,
) -> DenseOperator {
    let mut out = DenseOperator::zeros(rho.nrows(), rho.ncols());
    for k in kraus {
        let big = embed(k, support, d, n);
        out += &big * rho * big.adjoint();
    }
    out
}

/// Applies a Liouville superoperator acting on `support` to an `n`-qudit
/// operator without forming the full superoperator.
pub fn apply_liouville_local(
    s: &DenseOperator,
    x: &DenseOperator,
    support: &[usize],
    d: usize,
    n: usize,
) -> DenseOperator {
    let dim = x.nrows();
    let m = support.len();
    let dl = d.pow(m as u32);
    let mut out = DenseOperator::zeros(dim, dim);
    let local = |full: usize| -> (usize, Vec<usize>) {
        let dg = digits_of(full, d, n);
        let l = index_of(&support.iter().map(|&q| dg[q]).collect::<Vec<_>>(), d);
        (l, dg)
    };
    let replace = |dg: &[usize], l: usize| -> usize {
        let mut dg = dg.to_vec();
        let ld = digits_of(l, d, m);
        for (k, &q) in support.iter().enumerate() {
            dg[q] = ld[k];
        }
        index_of(&dg, d)
    };
    for i in 0..dim {
        let (il, idg) = local(i);
        let rows_i: Vec<usize> = (0..dl).map(|k| replace(&idg, k)).collect();
        for j in 0..dim {
            let (jl, jdg) = local(j);
            let out_row = il + jl * dl;
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..dl {
                let xj = replace(&jdg, l);
                for k in 0..dl {
                    let v = s[(out_row, k + l * dl)];
                    if v != Complex64::new(0.0, 0.0) {
                        acc += v * x[(rows_i[k], xj)];
                    }
                }
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Matrix exponential.
pub fn expm(a: &DenseOperator) -> DenseOperator {
    a.clone().exp()
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    c64(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DenseOperator {
    DenseOperator::from_fn(rows, cols, |_, _| random_complex(rng))
}

/// Haar-random unitary via QR with phase correction.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DenseOperator {
    let g = random_ginibre(dim, dim, rng);
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c64(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= ph;
        }
    }
    q
}

pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DenseOperator {
    let g = random_ginibre(dim, dim, rng);
    let rho = &g * g.adjoint();
    let tr = trace(&rho);
    rho / tr
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DenseOperator {
    let g = random_ginibre(dim, dim, rng);
    (&g + g.adjoint()) * c64(0.5, 0.0)
}

/// Random CPTP map with `rank` Kraus operators, from a random isometry.
pub fn random_kraus<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Vec<DenseOperator> {
    let u = random_unitary(dim * rank, rng);
    (0..rank)
        .map(|k| u.view((k * dim, 0), (dim, dim)).into_owned())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_kraus_is_cptp() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = random_kraus(3, 2, &mut rng);
        let s = liouville_from_kraus(&k);
        assert!(is_trace_preserving(&s, 1e-10));
        assert!(is_completely_positive(&s, 1e-10));
    }

    #[test]
    fn local_application_matches_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let k = random_kraus(4, 2, &mut rng);
        let rho = random_density(8, &mut rng);
        let support = [2, 0];
        let a = apply_kraus(&rho, &k, &support, 2, 3);
        let b = apply_liouville_local(&liouville_from_kraus(&k), &rho, &support, 2, 3);
        assert!(max_abs_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn expm_of_diagonal() {
        let a = DenseOperator::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c64(0.0, 0.0),
            c64(-1.0, 0.0),
        ]));
        let e = expm(&a);
        assert!((e[(1, 1)] - (-1.0f64).exp()).norm() < 1e-14);
        assert!((e[(0, 0)] - 1.0).norm() < 1e-14);
    }
}
