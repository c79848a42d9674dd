use crate::dense::{c64, DenseOperator};
use crate::error::{Error, Result};
use crate::reps::{channel_to_superop, Basis, Channel, LocalSuperOp};

/// `Y(θ) = exp(-iθσ^Y/2)` on one qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationGate {
    theta: f64,
    target: usize,
}

impl RotationGate {
    pub fn new(d: u32, theta: f64, target: usize) -> Result<Self> {
        if d != 2 {
            return Err(Error::InvalidArgument(format!("Y rotations need d = 2, got {d}")));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidArgument("rotation angle is not finite".into()));
        }
        Ok(RotationGate { theta, target })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn unitary(&self) -> DenseOperator {
        let (s, c) = (self.theta / 2.0).sin_cos();
        DenseOperator::from_row_slice(2, 2, &[c64(c, 0.0), c64(-s, 0.0), c64(s, 0.0), c64(c, 0.0)])
    }
}

pub fn rotation_superop(g: &RotationGate, basis: Basis) -> LocalSuperOp {
    channel_to_superop(&Channel::Kraus(vec![g.unitary()]), basis, 2, 1).expect("single qubit")
}
