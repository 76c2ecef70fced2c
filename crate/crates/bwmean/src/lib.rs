//! Distribution theory for the Bernoulli-weighted mean: exact mixture CDFs,
//! Edgeworth-type expansions with binomially-averaged correction
//! polynomials, inverse binomial moments, lattice/semi-lattice structure
//! detection, and a deterministic Monte Carlo harness.

pub mod binomial;
pub mod bwm;
pub mod cramer;
pub mod distributions;
pub mod edgeworth;
pub mod error;
pub mod montecarlo;
pub mod rng;
pub mod special;

pub use binomial::{
    bernoulli_sum, bound_o_rhs, inverse_moment, inverse_moment_coefficients,
    kl_divergence_bernoulli, kl_tail_bound, moment_power_bound_check, BinomialParams,
    CoefficientTable, MomentBoundReport,
};
pub use bwm::{
    bwm_edgeworth_cdf, bwm_edgeworth_grid, default_grid, fit_loglog_slope, mixture_cdf,
    mixture_cdf_grid, star_polynomials, sup_error, sweep_sup_error, BwmProblem, PerKMode,
    SweepRow, UniformErrorReport,
};
pub use cramer::{
    char_fn, char_fn_modulus, cramer_scan, lattice_check_1d, semilattice_search, Atom, CfTarget,
    LatticeVerdict, Rational, ScanReport, SupportSpec, Verdict,
};
pub use distributions::{
    exact_standardized_mean_cdf, format_spec, make_exponential, make_finite_discrete, make_gamma,
    make_lognormal, make_uniform, parse_spec, standardized_moments, CumulantSet,
    DistributionSpec,
};
pub use edgeworth::{
    edgeworth_polynomials, normal_cdf, normal_pdf, sample_mean_edgeworth_cdf, ExpansionSet,
    Polynomial,
};
pub use error::{Error, Result};
pub use montecarlo::{
    atom_frequency, dkw_band, empirical_cdf, mc_check, mc_compare, sample_z, EmpiricalCdf,
    McComparison, McSummary, SimConfig,
};
pub use rng::SplitMix64;
