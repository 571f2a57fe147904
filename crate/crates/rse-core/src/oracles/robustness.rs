//! Sampling check of the robustness bound `sup_{W2(ν,μ0) ≤ r} REG(ν) ≤ c·(RSE(μ0) − r)^{−q}`
//! for principal subspace estimation.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::linalg::random::gaussian_matrix;
use crate::measures::{w2_discrete_exact, EmpiricalMeasure, Measure};
use crate::problems::pca::{pca_reg, pca_rse};
use crate::spectral::bures_wasserstein;

/// How neighbours of `μ0` are generated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationFamily {
    /// Only `μ0` itself.
    Degenerate,
    /// `ν = A#μ0` with `A = I + E`, `E` a random Gaussian direction.
    CovariancePerturbation,
    /// `ν = s#μ0` for a scalar `s`.
    Scaling,
    /// Same support as an empirical `μ0`, new weights.
    Reweighting,
}

/// Parameters of a neighbourhood check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborhoodCheck {
    /// Principal subspace dimension.
    pub components: usize,
    pub radius: f64,
    /// Exponent `q` in `RSE^q ≤ c/REG`.
    pub exponent: f64,
    pub constant: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub rse0: f64,
    pub bound: f64,
    /// Members with `W2 ≤ r`, including `μ0`.
    pub accepted: usize,
    /// Members discarded for `W2 > r`.
    pub rejected: usize,
    pub max_reg: f64,
    pub max_w2: f64,
    /// Accepted members violating `REG·RSE^q ≤ c`.
    pub hypothesis_violations: usize,
    pub all_within_bound: bool,
}

fn perturbed(
    family: PerturbationFamily,
    mu0: &Measure,
    rng: &mut ChaCha20Rng,
    radius: f64,
) -> Result<(Measure, f64)> {
    let d = mu0.dim();
    let sigma = mu0.second_moment();
    // Overshoot the radius by 25% so rejection is exercised.
    let target = radius * 1.25 * rng.random::<f64>();
    match family {
        PerturbationFamily::Degenerate => Ok((mu0.clone(), 0.0)),
        PerturbationFamily::CovariancePerturbation => {
            let e = gaussian_matrix(rng, d, d);
            // The coupling x ↦ Ax has cost ‖EΣ^{1/2}‖_F², so this scale keeps W2 ≲ target.
            let size = (&e * sigma.sqrt()).norm();
            let a = DMatrix::identity(d, d) + e * (target / size.max(f64::MIN_POSITIVE));
            let nu = mu0.pushforward_linear(&a)?;
            let w2 = match (mu0, &nu) {
                (Measure::Gaussian(_), Measure::Gaussian(g)) => bures_wasserstein(&sigma, g.covariance())?,
                (Measure::Empirical(x), Measure::Empirical(y)) => w2_discrete_exact(x, y)?,
                _ => unreachable!("pushforward keeps the measure kind"),
            };
            Ok((nu, w2))
        }
        PerturbationFamily::Scaling => {
            let tr = sigma.trace().max(f64::MIN_POSITIVE);
            let s = 1.0 + if rng.random::<bool>() { 1.0 } else { -1.0 } * target / tr.sqrt();
            let s = s.max(0.0);
            let nu = mu0.scaled(s)?;
            Ok((nu, (1.0 - s).abs() * tr.sqrt()))
        }
        PerturbationFamily::Reweighting => {
            let Measure::Empirical(e) = mu0 else {
                return Err(Error::Unsupported("reweighting needs an empirical measure".into()));
            };
            let t = target / sigma.trace().max(f64::MIN_POSITIVE).sqrt();
            let w = DVector::from_fn(e.len(), |i, _| e.weights()[i] * (1.0 + t * (2.0 * rng.random::<f64>() - 1.0)).max(0.0));
            let sum = w.sum();
            if !(sum > 0.0) {
                return Ok((mu0.clone(), 0.0));
            }
            let nu: EmpiricalMeasure = e.reweighted(w / sum)?;
            let w2 = w2_discrete_exact(e, &nu)?;
            Ok((Measure::Empirical(nu), w2))
        }
    }
}

/// Samples `setup.samples` neighbours (plus `μ0`) and compares their REG with the bound.
pub fn robustness_neighborhood_check(
    family: PerturbationFamily,
    mu0: &Measure,
    setup: &NeighborhoodCheck,
) -> Result<RobustnessReport> {
    let q = setup.components;
    let rse0 = pca_rse(mu0, q)?;
    if !(setup.radius >= 0.0) || setup.radius >= rse0 {
        return Err(Error::InvalidInput(format!("radius {} must lie in [0, RSE(μ0) = {rse0})", setup.radius)));
    }
    if !(setup.exponent > 0.0 && setup.constant > 0.0) {
        return Err(Error::InvalidInput("exponent and constant must be positive".into()));
    }
    let bound = setup.constant * (rse0 - setup.radius).powf(-setup.exponent);
    let mut rng = ChaCha20Rng::seed_from_u64(setup.seed);
    let mut report = RobustnessReport {
        rse0,
        bound,
        accepted: 0,
        rejected: 0,
        max_reg: 0.0,
        max_w2: 0.0,
        hypothesis_violations: 0,
        all_within_bound: true,
    };
    let extra = if family == PerturbationFamily::Degenerate { 0 } else { setup.samples };
    for k in 0..=extra {
        let (nu, w2) = if k == 0 { (mu0.clone(), 0.0) } else { perturbed(family, mu0, &mut rng, setup.radius)? };
        if w2 > setup.radius {
            report.rejected += 1;
            continue;
        }
        report.accepted += 1;
        report.max_w2 = report.max_w2.max(w2);
        let reg = pca_reg(&nu, q)?;
        let rse = pca_rse(&nu, q)?;
        if reg.is_finite() && reg * rse.powf(setup.exponent) > setup.constant * (1.0 + 1e-12) {
            report.hypothesis_violations += 1;
        }
        report.max_reg = report.max_reg.max(reg);
        if !(reg <= bound * (1.0 + 1e-12)) {
            report.all_within_bound = false;
        }
    }
    Ok(report)
}
