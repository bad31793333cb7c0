//! Complex Lorentzian amplitude lineshapes, their shifted branch pairs,
//! branch overlaps, and the small-splitting first-order expansion.
//!
//! Everything works in the energy domain with `hbar = 1`. The default unit
//! convention sets the linewidth to 1, so energies are ratios to the
//! linewidth and times are in units of the radiative lifetime.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{integrate_transformed, QuadratureSpec};

/// Complex amplitude density value (units energy^-1/2).
pub type ComplexAmplitude = Complex64;

/// Physical triple defining the two shifted Lorentzian branches: central
/// energy, splitting between the branches, and linewidth (FWHM).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParams {
    e0: f64,
    delta_e: f64,
    gamma: f64,
}

/// The two energy branches of the split line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Centered at `e0 - delta_e/2`.
    Lower,
    /// Centered at `e0 + delta_e/2`.
    Upper,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Lower => -1.0,
            Branch::Upper => 1.0,
        }
    }
}

impl SpectralParams {
    pub fn new(e0: f64, delta_e: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::NonPositiveLinewidth(gamma));
        }
        if !(delta_e >= 0.0) || !delta_e.is_finite() {
            return Err(Error::NegativeSplitting(delta_e));
        }
        if !e0.is_finite() {
            return Err(Error::NonPositiveParameter { name: "central energy", value: e0 });
        }
        Ok(Self { e0, delta_e, gamma })
    }

    /// Line at the origin with unit linewidth and the given splitting.
    pub fn in_linewidth_units(delta_e: f64) -> Result<Self> {
        Self::new(0.0, delta_e, 1.0)
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn delta_e(&self) -> f64 {
        self.delta_e
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn branch_center(&self, branch: Branch) -> f64 {
        self.e0 + branch.sign() * self.delta_e / 2.0
    }

    pub fn with_delta_e(&self, delta_e: f64) -> Result<Self> {
        Self::new(self.e0, delta_e, self.gamma)
    }

    /// Lineshape amplitude of one branch at energy `e`. Infallible because
    /// the parameters were validated at construction.
    pub fn branch_amplitude(&self, e: f64, branch: Branch) -> ComplexAmplitude {
        lineshape_unchecked(e, self.branch_center(branch), self.gamma)
    }
}

/// Symmetric energy grid: an odd number of strictly increasing nodes built
/// from exactly mirrored offsets, so `node[k] + node[n-1-k]` recovers twice
/// the center without accumulating asymmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGrid {
    center: f64,
    half_width: f64,
    nodes: Vec<f64>,
}

impl EnergyGrid {
    pub fn new(center: f64, half_width: f64, n_points: usize) -> Result<Self> {
        if n_points < 3 || n_points % 2 == 0 {
            return Err(Error::EvenGridPoints(n_points));
        }
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::NonPositiveHalfWidth(half_width));
        }
        if !center.is_finite() {
            return Err(Error::NonPositiveParameter { name: "grid center", value: center });
        }
        let m = (n_points - 1) / 2;
        let step = half_width / m as f64;
        let mut nodes = vec![0.0; n_points];
        nodes[m] = center;
        for k in 1..=m {
            let offset = step * k as f64;
            nodes[m - k] = center - offset;
            nodes[m + k] = center + offset;
        }
        Ok(Self { center, half_width, nodes })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_points(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

pub(crate) fn lineshape_unchecked(e: f64, center: f64, gamma: f64) -> ComplexAmplitude {
    let amp = (gamma / (2.0 * std::f64::consts::PI)).sqrt();
    Complex64::new(amp, 0.0) / Complex64::new(e - center, gamma / 2.0)
}

/// Lorentzian amplitude lineshape `sqrt(gamma/2pi) / ((e - center) + i gamma/2)`.
/// Its squared magnitude is the unit-normalized Lorentzian of FWHM `gamma`.
pub fn lineshape_amplitude(e: f64, center: f64, gamma: f64) -> Result<ComplexAmplitude> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::NonPositiveLinewidth(gamma));
    }
    Ok(lineshape_unchecked(e, center, gamma))
}

/// First-order expansion of the shifted branch lineshape in the splitting:
/// the unshifted lineshape plus/minus
/// `sqrt(gamma/2pi) * (delta_e/2) / ((e - e0) + i gamma/2)^2`.
pub fn lineshape_firstorder(e: f64, params: &SpectralParams, branch: Branch) -> ComplexAmplitude {
    let amp = (params.gamma / (2.0 * std::f64::consts::PI)).sqrt();
    let denom = Complex64::new(e - params.e0, params.gamma / 2.0);
    let base = lineshape_unchecked(e, params.e0, params.gamma);
    let correction = Complex64::new(amp * params.delta_e / 2.0, 0.0) / (denom * denom);
    base + branch.sign() * correction
}

/// Complex overlap of the two normalized branch lineshapes,
/// `integral of conj(f_lower) * f_upper dE`. Closed form
/// `gamma / (gamma + i delta_e)`; [`branch_overlap_quadrature`] computes the
/// same integral numerically and is kept as the audit path.
pub fn branch_overlap(params: &SpectralParams) -> ComplexAmplitude {
    Complex64::new(params.gamma, 0.0) / Complex64::new(params.gamma, params.delta_e)
}

/// Direct quadrature of the overlap integral, used to audit [`branch_overlap`].
pub fn branch_overlap_quadrature(
    params: &SpectralParams,
    spec: &QuadratureSpec,
) -> Result<ComplexAmplitude> {
    let product = |e: f64| {
        params.branch_amplitude(e, Branch::Lower).conj() * params.branch_amplitude(e, Branch::Upper)
    };
    let re = integrate_transformed(|e| product(e).re, params.e0, params.gamma / 2.0, spec)?;
    let im = integrate_transformed(|e| product(e).im, params.e0, params.gamma / 2.0, spec)?;
    Ok(Complex64::new(re, im))
}
