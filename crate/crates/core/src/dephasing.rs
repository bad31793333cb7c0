//! Probe dephasing as a Lorentzian-distributed random shift of the energy
//! splitting, mixed into the post-selected state, and the resulting
//! degradation of the optimal amplification.
//!
//! Spin-dependent noise affects only the relative phase of the two
//! branches, so the random shift is applied exclusively to the splitting,
//! never to the line center. The noise-averaged shift integrand grows
//! linearly in the shift at large noise values while the Lorentzian pdf
//! decays as `1/eps^2`, so the average converges only as a symmetric
//! principal value with a finite symmetric cutoff; the truncated-tail
//! residual is estimated and reported with every result.

use std::cell::RefCell;
use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{self, HalfLineTanRule, OptimizerSpec, QuadratureSpec, Transform};
use crate::postselect::{
    self, optimal_delta_with, probability_for_splitting, PostSelection, ShiftResult,
};
use crate::spectral::SpectralParams;

/// How the noise-shifted states are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixingConvention {
    /// Mix the normalized post-selected states weighted by the noise pdf
    /// alone (the default).
    StateAverage,
    /// Additionally weight every noise value by its own post-selection
    /// success probability and renormalize.
    ProbabilityWeighted,
}

/// Lorentzian dephasing model: noise FWHM, mixing convention, and an
/// optional explicit cutoff for the noise integral (defaults to 50x the
/// larger of the noise width and the linewidth).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingModel {
    gamma_noise: f64,
    mixing: MixingConvention,
    cutoff: Option<f64>,
}

impl DephasingModel {
    pub fn new(gamma_noise: f64, mixing: MixingConvention) -> Result<Self> {
        if !(gamma_noise >= 0.0) || !gamma_noise.is_finite() {
            return Err(Error::NonPositiveParameter { name: "noise width", value: gamma_noise });
        }
        Ok(Self { gamma_noise, mixing, cutoff: None })
    }

    pub fn with_cutoff(gamma_noise: f64, mixing: MixingConvention, cutoff: f64) -> Result<Self> {
        let mut model = Self::new(gamma_noise, mixing)?;
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::NonPositiveParameter { name: "cutoff", value: cutoff });
        }
        model.cutoff = Some(cutoff);
        Ok(model)
    }

    pub fn gamma_noise(&self) -> f64 {
        self.gamma_noise
    }

    pub fn mixing(&self) -> MixingConvention {
        self.mixing
    }

    /// Cutoff actually used for a line of the given width.
    pub fn resolved_cutoff(&self, linewidth: f64) -> f64 {
        self.cutoff.unwrap_or(50.0 * self.gamma_noise.max(linewidth))
    }

    fn checked_cutoff(&self, linewidth: f64) -> Result<f64> {
        let cutoff = self.resolved_cutoff(linewidth);
        let required = 10.0 * self.gamma_noise.max(linewidth);
        if cutoff < required {
            return Err(Error::CutoffTooSmall { cutoff, required });
        }
        Ok(cutoff)
    }
}

/// Default rule for the noise integral. The tolerance is the absolute
/// ceiling accepted for the truncated-tail residual. At the default cutoff
/// the worst corners are a few 1e-4 for the state-average convention (pure-branch
/// projection with noise as wide as the line) and just over 1e-3 for the
/// probability-weighted one near the optimum, where the success weight
/// fattens the tails; the ceiling sits above both.
pub fn noise_quadrature_spec() -> QuadratureSpec {
    QuadratureSpec {
        order: 16,
        panels: 24,
        transform: Transform::TanSubstitution,
        tolerance: 2.5e-3,
    }
}

/// Default rule for the inner shift quadrature under the noise average.
pub fn inner_shift_spec() -> QuadratureSpec {
    QuadratureSpec { order: 16, panels: 16, transform: Transform::TanSubstitution, tolerance: 1e-9 }
}

/// Noise pdf `(gamma/2pi) / (eps^2 + (gamma/2)^2)`, normalized over the
/// line. Zero noise width has no density; callers take the pure path.
pub fn noise_pdf(eps: f64, model: &DephasingModel) -> Result<f64> {
    if model.gamma_noise == 0.0 {
        return Err(Error::DegenerateNoise);
    }
    let g = model.gamma_noise;
    Ok((g / (2.0 * std::f64::consts::PI)) / (eps * eps + g * g / 4.0))
}

/// Noise-averaged probe shift with convergence diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasedShift {
    pub shift: ShiftResult,
    /// First-order estimate of the paired tail truncated by the cutoff.
    pub tail_residual: f64,
}

/// Noise-averaged mean shift at the default quadrature rules.
pub fn dephased_shift(
    params: &SpectralParams,
    sel: &PostSelection,
    model: &DephasingModel,
) -> Result<DephasedShift> {
    dephased_shift_with(params, sel, model, &noise_quadrature_spec(), &inner_shift_spec())
}

pub fn dephased_shift_with(
    params: &SpectralParams,
    sel: &PostSelection,
    model: &DephasingModel,
    eps_spec: &QuadratureSpec,
    shift_spec: &QuadratureSpec,
) -> Result<DephasedShift> {
    if model.gamma_noise == 0.0 {
        let shift = postselect::mean_energy_shift_with(
            params,
            sel,
            shift_spec,
            postselect::DEFAULT_PROBABILITY_FLOOR,
        )?;
        return Ok(DephasedShift { shift, tail_residual: 0.0 });
    }

    let gamma = params.gamma();
    let delta_e = params.delta_e();
    let delta = sel.delta();
    let cutoff = model.checked_cutoff(gamma)?;
    let scale = 0.5 * model.gamma_noise.max(gamma);
    let eps_nodes = numerics::paired_nodes(scale, Some(cutoff), eps_spec)?;

    // Noise values push the branch peaks far off center; the inner rule is
    // re-sized per splitting and memoized by panel count (scale-free terms).
    let rules: RefCell<HashMap<usize, HalfLineTanRule>> = RefCell::new(HashMap::new());
    let g = model.gamma_noise;
    let pdf = |eps: f64| (g / (2.0 * std::f64::consts::PI)) / (eps * eps + g * g / 4.0);
    let shift_at = |eps: f64| -> Result<f64> {
        // The spectrum is symmetric at delta = 0 for every noise value.
        if delta == 0.0 {
            return Ok(0.0);
        }
        let splitting = delta_e + eps;
        let panels = postselect::shift_panels(shift_spec, gamma, splitting.abs());
        let mut rules = rules.borrow_mut();
        let rule = rules.entry(panels).or_insert_with(|| {
            HalfLineTanRule::new(shift_spec.order, panels, std::f64::consts::FRAC_PI_2, true)
        });
        postselect::shift_with_rule(params, sel, splitting, rule, 0.0)
    };
    let success_at = |eps: f64| probability_for_splitting((delta_e + eps).abs(), gamma, delta);

    // One pass accumulates the paired sums: pdf * S for the state-average
    // convention, pdf * P * S and pdf * P for the renormalized one.
    let mut state_average = 0.0;
    let mut weighted_num = 0.0;
    let mut weighted_den = 0.0;
    for node in &eps_nodes {
        for eps in [node.offset, -node.offset] {
            let w = node.weight;
            let density = pdf(eps);
            let s = shift_at(eps)?;
            let p = success_at(eps);
            state_average += w * density * s;
            weighted_num += w * density * p * s;
            weighted_den += w * density * p;
        }
    }

    // First-order tail estimates from the paired integrand value at the
    // cutoff; the renormalized convention subtracts the part that cancels
    // between its numerator and denominator.
    let edge_num = pdf(cutoff) * (shift_at(cutoff)? + shift_at(-cutoff)?);
    let edge_weighted = pdf(cutoff)
        * (success_at(cutoff) * shift_at(cutoff)? + success_at(-cutoff) * shift_at(-cutoff)?);
    let edge_weight = pdf(cutoff) * (success_at(cutoff) + success_at(-cutoff));
    let weighted_shift = weighted_num / weighted_den;
    let (mean_shift, tail_residual) = match model.mixing {
        MixingConvention::StateAverage => (state_average, edge_num.abs() * cutoff),
        MixingConvention::ProbabilityWeighted => (
            weighted_shift,
            (edge_weighted - weighted_shift * edge_weight).abs() * cutoff / weighted_den,
        ),
    };
    if tail_residual > eps_spec.tolerance {
        return Err(Error::TailResidual { estimate: tail_residual, tolerance: eps_spec.tolerance });
    }

    let shift = ShiftResult {
        mean_shift,
        amplification: (delta_e > 0.0).then(|| mean_shift / delta_e),
        probability: weighted_den,
        firstorder_shift: (delta != 0.0).then(|| delta_e / (2.0 * delta)),
    };
    Ok(DephasedShift { shift, tail_residual })
}

/// Optimal post-selection and maximal shift for one noise width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaOptRow {
    pub gamma_noise: f64,
    pub delta_opt: f64,
    pub max_shift: f64,
    pub max_amplification: f64,
}

/// Maximizes the dephased shift over `delta` for each noise width. Rows
/// are computed in parallel; output order follows the input order.
pub fn optimal_shift_vs_gamma(
    params: &SpectralParams,
    mixing: MixingConvention,
    gamma_noises: &[f64],
) -> Result<Vec<GammaOptRow>> {
    if params.delta_e() == 0.0 {
        return Err(Error::NoOptimum);
    }
    gamma_noises
        .par_iter()
        .map(|&gamma_noise| optimal_row(params, mixing, gamma_noise))
        .collect()
}

fn optimal_row(
    params: &SpectralParams,
    mixing: MixingConvention,
    gamma_noise: f64,
) -> Result<GammaOptRow> {
    let delta_e = params.delta_e();
    if gamma_noise == 0.0 {
        let pure = optimal_delta_with(params, &inner_shift_spec())?;
        return Ok(GammaOptRow {
            gamma_noise,
            delta_opt: pure.delta_opt,
            max_shift: pure.max_shift,
            max_amplification: pure.max_amplification,
        });
    }
    let model = DephasingModel::new(gamma_noise, mixing)?;
    let objective = |delta: f64| {
        let sel = PostSelection::new(delta)?;
        Ok(dephased_shift(params, &sel, &model)?.shift.mean_shift)
    };
    let opt = OptimizerSpec::new(1e-9, 1.0, 1e-6, 200)?;
    let (delta_opt, max_shift) = numerics::maximize_scalar(objective, &opt)?;
    Ok(GammaOptRow { gamma_noise, delta_opt, max_shift, max_amplification: max_shift / delta_e })
}

/// Optimal-amplification curve versus the noise-to-splitting ratio for one
/// splitting value.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioCurve {
    pub delta_e: f64,
    /// `(gamma_noise / delta_e, optimal amplification)` pairs.
    pub points: Vec<(f64, f64)>,
}

/// Family of optimal-amplification curves, one per splitting, sampled on a
/// shared list of `gamma_noise / delta_e` ratios.
pub fn optimal_amp_vs_ratio(
    params_base: &SpectralParams,
    mixing: MixingConvention,
    delta_es: &[f64],
    ratios: &[f64],
) -> Result<Vec<RatioCurve>> {
    delta_es
        .iter()
        .map(|&delta_e| {
            let params = params_base.with_delta_e(delta_e)?;
            if delta_e == 0.0 {
                return Err(Error::NoOptimum);
            }
            let points: Vec<(f64, f64)> = ratios
                .par_iter()
                .map(|&ratio| {
                    let row = optimal_row(&params, mixing, ratio * delta_e)?;
                    Ok((ratio, row.max_amplification))
                })
                .collect::<Result<_>>()?;
            Ok(RatioCurve { delta_e, points })
        })
        .collect()
}
