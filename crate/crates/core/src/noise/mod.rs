//! Channels and gates: Weyl-diagonal (mixed-Weyl) channels, depolarizing and
//! dephasing families, Clifford gates with their symplectic action, Y
//! rotations, twirling and the Weyl spectral gap.

mod clifford;
mod diagonal;
mod rotation;

pub use clifford::{clifford_action, solve_clifford_mapping, CliffordGate, Generator};
pub use diagonal::{
    dense_twirl, depolarizing, dephasing, local_dephasing, survival_from_depolarizing_probability, twirl,
    weyl_spectral_gap, WeylDiagonal, WeylDiagonalChannel,
};
pub use rotation::{rotation_superop, RotationGate};
