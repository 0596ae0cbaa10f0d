//! Coulomb-gauge numerics for 1-equivariant Schrödinger maps into S².
//!
//! The crate converts equivariant map profiles into gauge fields and back,
//! evolves the reduced (ψ⁺, ψ⁻) system with a split-step Hankel integrator,
//! and evaluates conservation laws, virial balances and symmetry checks.

pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod fixtures;
pub mod gauge;
pub mod hankel;
pub mod radial;
pub mod reconstruct;
pub mod solitons;
pub mod special;
pub mod stencil;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use radial::{
    apply_radial_inverse, apply_radial_inverse_with_parity, integrate_rdr, norm, norm_with_parity,
    NormKind, RadialField, RadialGrid, RadialInverse,
};
pub use stencil::Parity;
pub use hankel::{build_plan, default_xi_max, Direction, HankelPlan, Spectrum};
pub use gauge::{
    compatibility_residual, compute_psi0, energy, extract_fields, solve_coulomb_frame,
    solve_coulomb_frame_any_class, GaugeState, MapState, Vec3,
};
pub use solitons::{harmonic_profile, soliton_map, SolitonParams};
pub use reconstruct::{
    lp_transfer_check, rebuild_map, reconstruct, solve_gauge_from_psi_minus, LpTransferReport,
    ReconstructionReport,
};
pub use evolve::{
    compute_potentials, run, scattering_probe, strang_step, symmetry_transform, EvolutionConfig,
    MonitorSample, Potentials, Propagators, PsiPair, ScatteringReport, Snapshot, SymmetryAction,
    TrajectoryRecord,
};
pub use diagnostics::{
    decay_probe, momenta, virial_balance, virial_local_charge_residual, BalanceReport, Cutoff,
    Momenta, VirialSample, SIGMA,
};
