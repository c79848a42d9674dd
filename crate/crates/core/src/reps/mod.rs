//! Basis representations of states, observables and channels, the ℓ1 norm
//! machinery and ℓ1-sampling oracles.

mod circuit;
mod superop;
mod vector;

use serde::{Deserialize, Serialize};

use crate::dense::{kron_all, DenseOperator};
use crate::weyl::{materialize, weyl_coefficient, WeylIndex};

pub use circuit::{circuit_norm_bound, fuse_layers, fused_norm_bound, CircuitDescription, Layer};
pub use superop::{
    adjoint_superop, channel_to_superop, column_sample, l1_to_l1_norm, Channel, LocalSuperOp,
    DEFAULT_ARITY_CAP,
};
pub use vector::{observable_to_weyl, state_to_weyl, VectorKind, WeylVector};

/// Operator basis. Both bases label elements by `(a, b)` digits per qudit;
/// for the computational basis the element is `|a><b|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    #[default]
    Weyl,
    Computational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Picture {
    #[default]
    Schrodinger,
    Heisenberg,
}

impl Basis {
    /// `tr(B^† B)`, identical for every element of the basis.
    pub fn element_norm(self, d: u32, m: usize) -> f64 {
        match self {
            Basis::Weyl => (d as f64).powi(m as i32),
            Basis::Computational => 1.0,
        }
    }

    pub fn element(self, w: &WeylIndex) -> DenseOperator {
        match self {
            Basis::Weyl => materialize(w).expect("element within dense cap"),
            Basis::Computational => {
                let d = w.d() as usize;
                let factors: Vec<DenseOperator> = (0..w.n())
                    .map(|i| {
                        let mut e = DenseOperator::zeros(d, d);
                        e[(w.a()[i] as usize, w.b()[i] as usize)] = 1.0.into();
                        e
                    })
                    .collect();
                kron_all(&factors)
            }
        }
    }

    /// Expansion coefficient `tr(B^† X) / tr(B^† B)`.
    pub fn coefficient(self, x: &DenseOperator, w: &WeylIndex) -> num_complex::Complex64 {
        match self {
            Basis::Weyl => weyl_coefficient(x, w).expect("sizes checked by caller"),
            Basis::Computational => {
                let d = w.d() as usize;
                let row = w.a().iter().fold(0, |acc, &v| acc * d + v as usize);
                let col = w.b().iter().fold(0, |acc, &v| acc * d + v as usize);
                x[(row, col)]
            }
        }
    }

    /// Whether the all-zero label is the identity operator.
    pub fn has_identity_element(self) -> bool {
        self == Basis::Weyl
    }
}
