//! Weighted Neumann forms, spectral gaps and Poincare constants.

mod banded;
mod counterexample;
mod eigen;
mod form;
mod mesh;
mod sweep;

pub use banded::{Banded, Ldl};
pub use counterexample::{
    chi_log, chi_log_value, chi_n, chi_n_rayleigh, chi_n_value, chi_n_variance_half, eta, ChiLogReport,
    RayleighReport,
};
pub use eigen::{spectral_gap, spectral_gap_with, EigenOptions, GapResult};
pub use form::{
    assemble_interval_form, assemble_line_form, assemble_region_form, inv_weight_integral, line_extent,
    weight_integral, Conductance, DiscreteForm, Edge, Layout,
};
pub use mesh::{Mesh1d, Resolution};
pub use sweep::{fit_slope, fit_start, poincare_constant, poincare_sweep, Family, PoincareEstimate, SweepRow, SweepTable};
