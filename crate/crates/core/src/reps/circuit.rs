use std::sync::Arc;

use super::{l1_to_l1_norm, Basis, LocalSuperOp, Picture};
use crate::dense::DenseOperator;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Layer {
    pub op: Arc<LocalSuperOp>,
    /// Qudits acted on, in the operator's tensor order.
    pub support: Vec<usize>,
    pub label: String,
}

/// Channels applied in order to `n` qudits.
#[derive(Debug, Clone)]
pub struct CircuitDescription {
    d: u32,
    n: usize,
    basis: Basis,
    layers: Vec<Layer>,
}

impl CircuitDescription {
    pub fn new(d: u32, n: usize, basis: Basis) -> Self {
        CircuitDescription {
            d,
            n,
            basis,
            layers: Vec::new(),
        }
    }

    pub fn push(&mut self, op: Arc<LocalSuperOp>, support: Vec<usize>, label: impl Into<String>) -> Result<()> {
        if op.d() != self.d || op.basis() != self.basis {
            return Err(Error::DimensionMismatch("layer basis or dimension differs from circuit".into()));
        }
        if op.arity() != support.len() {
            return Err(Error::DimensionMismatch(format!(
                "operator acts on {} qudits, support lists {}",
                op.arity(),
                support.len()
            )));
        }
        let mut seen = vec![false; self.n];
        for &s in &support {
            if s >= self.n || seen[s] {
                return Err(Error::InvalidArgument(format!("support qudit {s} out of range or repeated")));
            }
            seen[s] = true;
        }
        self.layers.push(Layer {
            op,
            support,
            label: label.into(),
        });
        Ok(())
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Layers in walk order for `picture`, with adjoints in the Heisenberg
    /// picture.
    pub fn walk(&self, picture: Picture) -> Vec<(Arc<LocalSuperOp>, &[usize])> {
        match picture {
            Picture::Schrodinger => self
                .layers
                .iter()
                .map(|l| (l.op.clone(), l.support.as_slice()))
                .collect(),
            Picture::Heisenberg => self
                .layers
                .iter()
                .rev()
                .map(|l| (l.op.adjoint(), l.support.as_slice()))
                .collect(),
        }
    }
}

/// Product of layer norms. Grouping consecutive disjoint layers does not
/// change the value since the norm is multiplicative under tensor products.
pub fn circuit_norm_bound(circuit: &CircuitDescription) -> f64 {
    circuit.layers.iter().map(|l| l1_to_l1_norm(&l.op)).product()
}

/// Matrix of `mat ⊗ id`, where `mat` acts on the register slots `positions`
/// of a `total`-qudit register with `q = d²` labels per qudit.
pub(crate) fn embed_superop(mat: &DenseOperator, q: usize, positions: &[usize], total: usize) -> DenseOperator {
    let big = q.pow(total as u32);
    let m = positions.len();
    let mut out = DenseOperator::zeros(big, big);
    let mut cd = vec![0usize; total];
    for col in 0..big {
        let mut x = col;
        for slot in cd.iter_mut().rev() {
            *slot = x % q;
            x /= q;
        }
        let lc = positions.iter().fold(0, |acc, &p| acc * q + cd[p]);
        let mut rd = cd.clone();
        for lr in 0..mat.nrows() {
            let v = mat[(lr, lc)];
            if v == num_complex::Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut y = lr;
            for k in (0..m).rev() {
                rd[positions[k]] = y % q;
                y /= q;
            }
            let row = rd.iter().fold(0, |acc, &z| acc * q + z);
            out[(row, col)] = v;
        }
    }
    out
}

#[cfg(test)]
fn max_column_l1_of(m: &DenseOperator) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

struct Block {
    support: Vec<usize>,
    layers: Vec<(Arc<LocalSuperOp>, Vec<usize>)>,
}

impl Block {
    fn close(self, basis: Basis, d: u32) -> (Arc<LocalSuperOp>, Vec<usize>) {
        if self.layers.len() == 1 {
            return self.layers.into_iter().next().unwrap();
        }
        let q = (d * d) as usize;
        let total = self.support.len();
        let pos = |qs: &[usize]| -> Vec<usize> { qs.iter().map(|s| self.support.binary_search(s).unwrap()).collect() };
        let mut m = DenseOperator::identity(q.pow(total as u32), q.pow(total as u32));
        for (op, sup) in &self.layers {
            m = embed_superop(&op.matrix(), q, &pos(sup), total) * m;
        }
        let op = LocalSuperOp::from_matrix(basis, d, total, &m).expect("block shape");
        (Arc::new(op), self.support)
    }
}

/// Groups the walk for `picture` into blocks of at most `max_qudits` qudits
/// and `max_dim` matrix rows, greedily in walk order. Blocks on disjoint
/// qudits commute, so applying the returned blocks in order reproduces the
/// circuit.
///
/// With `active` set, layers that fix the identity label and never meet the
/// qudits reachable from the initial vector are dropped; a walk never leaves
/// the identity label on them.
pub fn fuse_layers(
    circuit: &CircuitDescription,
    picture: Picture,
    active: Option<&[bool]>,
    max_qudits: usize,
    max_dim: usize,
) -> Vec<(Arc<LocalSuperOp>, Vec<usize>)> {
    let q = (circuit.d * circuit.d) as usize;
    let mut reach: Option<Vec<bool>> = active.map(|a| a.to_vec());
    let mut open: Vec<Block> = Vec::new();
    let mut out = Vec::new();
    for (op, support) in circuit.walk(picture) {
        if let Some(r) = reach.as_mut() {
            let touches = support.iter().any(|&s| r[s]);
            if !touches && op.identity_fixed() {
                continue;
            }
            for &s in support {
                r[s] = true;
            }
        }
        let (hit, keep): (Vec<Block>, Vec<Block>) = open
            .into_iter()
            .partition(|b| b.support.iter().any(|s| support.contains(s)));
        open = keep;
        let mut union: Vec<usize> = support.to_vec();
        for b in &hit {
            union.extend(&b.support);
        }
        union.sort_unstable();
        union.dedup();
        let fits = union.len() <= max_qudits && q.pow(union.len() as u32) <= max_dim;
        if fits {
            let mut layers = Vec::new();
            for b in hit {
                layers.extend(b.layers);
            }
            layers.push((op, support.to_vec()));
            open.push(Block { support: union, layers });
        } else {
            for b in hit {
                out.push(b.close(circuit.basis, circuit.d));
            }
            let mut sorted = support.to_vec();
            sorted.sort_unstable();
            open.push(Block {
                support: sorted,
                layers: vec![(op, support.to_vec())],
            });
        }
    }
    for b in open {
        out.push(b.close(circuit.basis, circuit.d));
    }
    out
}

/// Tighter bound used by the planner: the product of the exact ℓ1→ℓ1 norms of
/// the blocks from [`fuse_layers`]. Never exceeds [`circuit_norm_bound`].
pub fn fused_norm_bound(
    circuit: &CircuitDescription,
    picture: Picture,
    active: Option<&[bool]>,
    max_qudits: usize,
    max_dim: usize,
) -> f64 {
    fuse_layers(circuit, picture, active, max_qudits, max_dim)
        .iter()
        .map(|(op, _)| l1_to_l1_norm(op))
        .product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::random_kraus;
    use crate::reps::{channel_to_superop, Channel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_layer(m: usize, rng: &mut ChaCha8Rng) -> Arc<LocalSuperOp> {
        let k = random_kraus(2usize.pow(m as u32), 2, rng);
        Arc::new(channel_to_superop(&Channel::Kraus(k), Basis::Weyl, 2, 3).unwrap())
    }

    #[test]
    fn empty_circuit_bound_is_one() {
        let c = CircuitDescription::new(2, 3, Basis::Weyl);
        assert_eq!(circuit_norm_bound(&c), 1.0);
        assert_eq!(fused_norm_bound(&c, Picture::Schrodinger, None, 3, 4096), 1.0);
    }

    #[test]
    fn overlapping_gates_on_a_line() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut c = CircuitDescription::new(2, 3, Basis::Weyl);
        let a = random_layer(2, &mut rng);
        let b = random_layer(2, &mut rng);
        c.push(a.clone(), vec![0, 1], "a").unwrap();
        c.push(b.clone(), vec![1, 2], "b").unwrap();
        let naive = circuit_norm_bound(&c);
        assert!((naive - l1_to_l1_norm(&a) * l1_to_l1_norm(&b)).abs() < 1e-14);
        let exact = max_column_l1_of(
            &(embed_superop(&b.matrix(), 4, &[1, 2], 3) * embed_superop(&a.matrix(), 4, &[0, 1], 3)),
        );
        let fused = fused_norm_bound(&c, Picture::Schrodinger, None, 3, 4096);
        assert!(naive >= exact - 1e-12);
        assert!((fused - exact).abs() < 1e-10);
    }

    #[test]
    fn push_validates_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut c = CircuitDescription::new(2, 2, Basis::Weyl);
        assert!(c.push(random_layer(2, &mut rng), vec![0, 0], "x").is_err());
        assert!(c.push(random_layer(2, &mut rng), vec![0, 2], "x").is_err());
        assert!(c.push(random_layer(1, &mut rng), vec![0, 1], "x").is_err());
    }
}
