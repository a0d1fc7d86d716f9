//! Cylinder-separable simulation of qubit lattices built from diagonal
//! two-qubit gates.

pub mod bloch;
pub mod decompose;
pub mod growth;
pub mod lattice;
pub mod lp;
pub mod matter;
pub mod oracle;
pub mod statespace;
