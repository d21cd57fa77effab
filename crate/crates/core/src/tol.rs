//! Numerical tolerances shared across the crate.
//!
//! Inputs are analytically exact families evaluated in double precision, so
//! true zeros sit near 1e-16 and every threshold below is many orders of
//! magnitude away from both roundoff and genuine nonzero overlaps.

/// Entrywise Hermiticity tolerance, `max |M - M^dagger|`.
pub const HERMITIAN: f64 = 1e-12;

/// Squared-norm deviation tolerated for a ket to count as normalized.
pub const NORMALIZED: f64 = 1e-12;

/// Overlap modulus below which two local rays are orthogonal.
pub const ORTHOGONAL: f64 = 1e-9;

/// Two rays are equal when `|<u|v>| >= 1 - RAY_EQUAL`.
pub const RAY_EQUAL: f64 = 1e-9;

/// Modulus below which an amplitude is treated as zero when fixing phases.
pub const PHASE_PIVOT: f64 = 1e-9;

/// Eigenvalue cutoff for rank decisions on Gram matrices and projectors.
pub const RANK: f64 = 1e-9;

/// Convergence threshold for alternating optimisation loops.
pub const CONVERGENCE: f64 = 1e-12;

/// `numeric_extendibility` values at or below this signal an orthogonal product vector.
pub const NUMERIC_EXTENDIBLE: f64 = 1e-7;
