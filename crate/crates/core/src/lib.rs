//! Simulation library for weak-value-amplified spectroscopy of a split
//! Lorentzian line.
//!
//! A two-branch emitter (splitting `delta_e`, linewidth `gamma`) entangles
//! its energy branch with a polarization degree of freedom. Post-selecting
//! the polarization close to orthogonal to the preparation trades success
//! probability for an amplified mean shift of the surviving spectrum. The
//! crate computes, numerically exactly:
//!
//! - branch lineshapes, overlaps, and post-selected spectra ([`spectral`],
//!   [`postselect`]),
//! - amplified probe shifts and the optimal post-selection parameter
//!   ([`postselect`]),
//! - degradation of the amplification under Lorentzian dephasing of the
//!   splitting ([`dephasing`]),
//! - the signal-to-noise ratio of repeated single-photon measurements
//!   under slow, exponentially correlated noise, with analytic AR(1) and
//!   Monte Carlo paths that cross-validate each other ([`noise_snr`]).
//!
//! Default unit convention: `gamma = 1` and `hbar = 1`, so energies are
//! ratios to the linewidth and times are multiples of the radiative
//! lifetime.
//!
//! ```
//! use wva_core::{optimal_delta, snr_analytic, snr_wva, PostSelection};
//! use wva_core::{SlowNoiseConfig, SpectralParams};
//!
//! // A splitting of a tenth of the linewidth, unresolved directly.
//! let params = SpectralParams::in_linewidth_units(0.1)?;
//!
//! // Post-selecting near the optimum displaces the surviving spectrum by
//! // a third of a linewidth, 3.6x the splitting itself.
//! let opt = optimal_delta(&params)?;
//! assert!((opt.max_amplification - 3.56).abs() < 0.01);
//!
//! // Under slow noise the thinned, amplified measurement beats the
//! // conventional one at the same pump rate.
//! let noise = SlowNoiseConfig::new(1.0, 1e3, 1.0, 1e6)?;
//! let sel = PostSelection::new(opt.delta_opt)?;
//! let conventional = snr_analytic(params.delta_e(), &noise, 1.0)?.snr;
//! let enhanced = snr_wva(&params, &sel, &noise)?.snr;
//! assert!(enhanced > 3.0 * conventional);
//! # Ok::<(), wva_core::Error>(())
//! ```

pub mod dephasing;
pub mod error;
pub mod noise_snr;
pub mod numerics;
pub mod postselect;
pub mod spectral;

pub use error::{Error, Result};

pub use numerics::{
    integrate_transformed, maximize_scalar, seeded_stream, OptimizerSpec, QuadratureSpec,
    Transform, RNG_ALGORITHM,
};
pub use spectral::{
    branch_overlap, branch_overlap_quadrature, lineshape_amplitude, lineshape_firstorder, Branch,
    ComplexAmplitude, EnergyGrid, SpectralParams,
};
pub use postselect::{
    mean_energy_shift, optimal_delta, postselected_amplitude, postselected_spectrum,
    postselection_probability_approx, postselection_probability_exact,
    postselection_probability_quadrature, sweep_fig1c, sweep_fig2, Fig1cRow, Fig2Cell,
    OptimalDelta, PostSelection, ShiftResult, Spectrum,
};
pub use dephasing::{
    dephased_shift, noise_pdf, optimal_amp_vs_ratio, optimal_shift_vs_gamma, DephasedShift,
    DephasingModel, GammaOptRow, MixingConvention, RatioCurve,
};
pub use noise_snr::{
    ar1_variance_of_mean, locate_knee, simulate_events, snr_analytic, snr_monte_carlo,
    snr_uncorrelated, snr_wva, snr_wva_monte_carlo, sweep_fig3, Fig3Row, NoiseEvent,
    SlowNoiseConfig, SnrMethod, SnrResult, WvaDeltaMode, ZeroEventPolicy,
};
