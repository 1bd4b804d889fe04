//! Delay-independent stability and hyperbolicity certificates for linear
//! delay differential equations with discrete delays,
//!
//!   dx/dt = A0 x(t) + sum_{k=1..m} Ak x(t - tau_k),
//!
//! together with validation tools: asymptotic continuous spectra for large
//! delays, characteristic roots at finite delays, and explicit delay families
//! on which a resonance reappears.

pub mod asymptotic;
pub mod charroots;
pub mod criteria;
pub mod linalg;
pub mod model;
pub mod resonance;

pub use asymptotic::{
    assemble_hierarchical_spectrum, branches_one_delay, branches_to_csv, default_omega_grid,
    hopf_frequencies_scalar, scalar_gamma_one_delay, scale_to_complex_plane, singular_frequencies,
    spectral_polynomial, AsymptoticBranch, AsymptoticError, BranchSample, BranchScale,
    HierarchicalSpectrum, SingularFrequency, SingularitySign,
};
pub use charroots::{
    compute_spectrum, quasipolynomial, quasipolynomial_derivative, simulate_method_of_steps,
    spectrum_to_csv, CharRootsError, DiscretizationConfig, Simulation, SpectrumReport,
};
pub use criteria::{
    certify_absolute_hyperbolicity, certify_absolute_stability,
    certify_absolute_stability_conditions, certify_scalar, check_instantaneous_stability,
    check_one_delay_radius, check_s0_nonsingular, max_abscissa_over_torus,
    singular_map_multipliers, CriteriaError, OmegaSweepConfig, OneDelayRadiusReport, TorusSweep,
    TorusSweepConfig,
};
pub use linalg::{
    determinant, eigenvalues, frobenius_norm, poly_eval, poly_roots, rank, solve_matrix,
    spectral_abscissa, spectral_radius, CMatrix, EigenSet, LinalgError, PolyRoots,
};
pub use resonance::{
    build_family, find_resonance_witness, hierarchical_delays, resonant_delays, DelaySet,
    HierarchicalDelays, ResonanceError, ResonanceFamily,
};
pub use model::{
    canonical_phase, Certificate, CharRoot, ConditionId, ConditionRecord, DdeSystem, DelayVector,
    ModelError, PhaseVector, Verdict, Witness,
};
