//! Numeric constants of the large-`n` expansions of the mean and variance of
//! `a_r`, and their large-`r` limits.
//!
//! Everything here is scalar floating point. `c_r = F_r(rho)` and
//! `d_r = F_r'(rho)` follow from `F_r(x) = x Phi(F_{r-1}(x))` evaluated at
//! `x = rho`, so no series truncation enters. For plane trees all constants
//! are rational and [`plane_exact`] mirrors the recursions exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::weights::WeightFamily;

/// Tolerance on `|psi(tau)| / Phi(tau)` for the fundamental constant.
pub const TAU_RESIDUAL_TOL: f64 = 1e-14;

/// `tau`, `rho` and the square-root singular expansion
/// `F(x) = tau - alpha sqrt(1 - x/rho) + beta (1 - x/rho) + ...`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FundamentalConstants {
    pub tau: f64,
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `Phi''(tau)`
    pub phi2_tau: f64,
    /// `rho * Phi'(tau)`, equal to one in exact arithmetic.
    pub rho_phi_prime: f64,
    /// Sign changes of `psi(t) = Phi(t) - t Phi'(t)` seen on the scan grid.
    pub sign_changes: usize,
    /// Whether `psi'(t) = -t Phi''(t) < 0` held on the sample grid.
    pub psi_decreasing: bool,
}

/// Per-`r` constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelConstants {
    pub r: usize,
    /// `F_r(rho)`
    pub c: f64,
    /// `F_r'(rho)`
    pub d: f64,
    /// Leading coefficient of the mean.
    pub mu: f64,
    /// Leading coefficient of the variance.
    pub sigma2: f64,
    /// Constant term of the mean.
    pub kappa: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub family: String,
    pub period: usize,
    #[serde(flatten)]
    pub fundamental: FundamentalConstants,
    pub levels: Vec<LevelConstants>,
    /// `2 / (rho tau Phi''(tau))`: `1 - mu_r ~ mean_slope / r`.
    pub mean_slope: f64,
    /// `1 / (3 rho tau Phi''(tau))`: limit of `sigma_r^2`.
    pub variance_limit: f64,
}

fn psi(f: &WeightFamily, t: f64) -> Result<f64> {
    Ok(f.phi_eval(t, 0)? - t * f.phi_eval(t, 1)?)
}

/// Locate `tau` (the positive root of `Phi(t) = t Phi'(t)` below the radius of
/// `Phi`) and derive `rho`, `alpha`, `beta`.
pub fn fundamental_constants(f: &WeightFamily) -> Result<FundamentalConstants> {
    let upper = (f.radius() * (1.0 - 1e-9)).min(1e12);
    // geometric grid from upper * 2^-64 up to upper
    let grid: Vec<f64> = (0..=64).rev().map(|j| upper * 0.5f64.powi(j)).collect();
    let mut values = Vec::with_capacity(grid.len());
    for &t in &grid {
        let v = psi(f, t)?;
        if !v.is_finite() {
            break;
        }
        values.push((t, v));
    }
    let mut sign_changes = 0;
    let mut bracket = None;
    for w in values.windows(2) {
        let ((a, fa), (b, fb)) = (w[0], w[1]);
        if fa > 0.0 && fb <= 0.0 || fa <= 0.0 && fb > 0.0 {
            sign_changes += 1;
            if bracket.is_none() {
                bracket = Some((a, b));
            }
        }
    }
    let (mut lo, mut hi) = bracket.ok_or(Error::FundamentalConstantAbsent { upper })?;

    // bisection to a narrow bracket, then Newton with psi'(t) = -t Phi''(t)
    for _ in 0..200 {
        if hi - lo <= 1e-9 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if psi(f, mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut tau = 0.5 * (lo + hi);
    for _ in 0..50 {
        let value = psi(f, tau)?;
        if value.abs() <= TAU_RESIDUAL_TOL * f.phi_eval(tau, 0)? {
            break;
        }
        let slope = -tau * f.phi_eval(tau, 2)?;
        let next = tau - value / slope;
        tau = if next > lo && next < hi && next.is_finite() {
            next
        } else {
            0.5 * (lo + hi)
        };
        if psi(f, tau)? > 0.0 {
            lo = tau;
        } else {
            hi = tau;
        }
    }

    let phi = f.phi_eval(tau, 0)?;
    let phi1 = f.phi_eval(tau, 1)?;
    let phi2 = f.phi_eval(tau, 2)?;
    let phi3 = f.phi_eval(tau, 3)?;
    let rho = tau / phi;
    let alpha = (2.0 * tau / (rho * phi2)).sqrt();
    let beta = 1.0 / (rho * phi2) - tau * phi3 / (3.0 * rho * phi2 * phi2);

    let probe_top = (2.0 * tau).min(upper);
    let psi_decreasing = (1..=64)
        .map(|i| probe_top * i as f64 / 64.0)
        .all(|t| f.phi_eval(t, 2).map(|p2| -t * p2 < 0.0).unwrap_or(true));

    Ok(FundamentalConstants {
        tau,
        rho,
        alpha,
        beta,
        phi2_tau: phi2,
        rho_phi_prime: rho * phi1,
        sign_changes,
        psi_decreasing,
    })
}

/// `(c_r, d_r)` for `r = 1..=r_max` from `c_1 = rho`, `d_1 = 1`,
/// `c_r = rho Phi(c_{r-1})`, `d_r = rho Phi'(c_{r-1}) d_{r-1} + c_r / rho`.
pub fn cr_dr_with(
    f: &WeightFamily,
    consts: &FundamentalConstants,
    r_max: usize,
) -> Result<Vec<(f64, f64)>> {
    let rho = consts.rho;
    let mut out = Vec::with_capacity(r_max);
    let (mut c, mut d) = (rho, 1.0);
    for r in 1..=r_max {
        if r > 1 {
            let c_next = rho * f.phi_eval(c, 0)?;
            d = rho * f.phi_eval(c, 1)? * d + c_next / rho;
            c = c_next;
        }
        out.push((c, d));
    }
    Ok(out)
}

pub fn cr_dr(f: &WeightFamily, r_max: usize) -> Result<Vec<(f64, f64)>> {
    cr_dr_with(f, &fundamental_constants(f)?, r_max)
}

/// `mu_r`, `sigma_r^2` and `kappa_r` from `c_r`, `d_r`.
pub fn level_constants(consts: &FundamentalConstants, r: usize, c: f64, d: f64) -> LevelConstants {
    let FundamentalConstants {
        tau, rho, alpha, beta, ..
    } = *consts;
    let a2 = alpha * alpha;
    let mu = c / tau;
    let sigma2 = (4.0 * rho * tau.powi(3) * d - 4.0 * rho * tau * tau * c * d
        + (2.0 * tau * tau - a2) * c * c
        - 2.0 * tau.powi(3) * c)
        / (2.0 * tau.powi(4));
    let kappa = (rho * tau * tau * d + 3.0 * beta * tau * c - a2 * c) / (2.0 * tau.powi(3));
    LevelConstants {
        r,
        c,
        d,
        mu,
        sigma2,
        kappa,
    }
}

pub fn mu_sigma(f: &WeightFamily, r: usize) -> Result<LevelConstants> {
    if r == 0 {
        return Err(Error::InvalidArgument("r must be >= 1".into()));
    }
    let consts = fundamental_constants(f)?;
    let (c, d) = *cr_dr_with(f, &consts, r)?.last().expect("r >= 1");
    Ok(level_constants(&consts, r, c, d))
}

/// `(2 / (rho tau Phi''(tau)), 1 / (3 rho tau Phi''(tau)))`.
pub fn large_r_limits_with(consts: &FundamentalConstants) -> (f64, f64) {
    let s = consts.rho * consts.tau * consts.phi2_tau;
    (2.0 / s, 1.0 / (3.0 * s))
}

pub fn large_r_limits(f: &WeightFamily) -> Result<(f64, f64)> {
    Ok(large_r_limits_with(&fundamental_constants(f)?))
}

pub fn constants_report(f: &WeightFamily, r_max: usize) -> Result<ConstantsReport> {
    let fundamental = fundamental_constants(f)?;
    let levels = cr_dr_with(f, &fundamental, r_max)?
        .into_iter()
        .enumerate()
        .map(|(i, (c, d))| level_constants(&fundamental, i + 1, c, d))
        .collect();
    let (mean_slope, variance_limit) = large_r_limits_with(&fundamental);
    Ok(ConstantsReport {
        family: f.to_string(),
        period: f.period(),
        fundamental,
        levels,
        mean_slope,
        variance_limit,
    })
}

/// Exact rational constants for plane trees: `Phi(t) = 1/(1-t)`,
/// `tau = 1/2`, `rho = 1/4`, `alpha^2 = 1/4`, `beta = 0`.
pub mod plane_exact {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::One;

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[derive(Debug, Clone, PartialEq, Eq)]
    pub struct ExactLevel {
        pub r: usize,
        pub c: BigRational,
        pub d: BigRational,
        pub mu: BigRational,
        pub sigma2: BigRational,
        pub kappa: BigRational,
    }

    /// `(c_r, d_r)` for `r = 1..=r_max` in exact arithmetic.
    pub fn cr_dr(r_max: usize) -> Vec<(BigRational, BigRational)> {
        let rho = rat(1, 4);
        let one = BigRational::one();
        let mut out = Vec::with_capacity(r_max);
        let (mut c, mut d) = (rho.clone(), one.clone());
        for r in 1..=r_max {
            if r > 1 {
                let inv = (&one - &c).recip();
                let c_next = &rho * &inv;
                d = &rho * &inv * &inv * &d + &c_next / &rho;
                c = c_next;
            }
            out.push((c.clone(), d.clone()));
        }
        out
    }

    pub fn levels(r_max: usize) -> Vec<ExactLevel> {
        let tau = rat(1, 2);
        let rho = rat(1, 4);
        let alpha2 = rat(1, 4);
        let two = rat(2, 1);
        let four = rat(4, 1);
        let tau2 = &tau * &tau;
        let tau3 = &tau2 * &tau;
        let tau4 = &tau3 * &tau;
        cr_dr(r_max)
            .into_iter()
            .enumerate()
            .map(|(i, (c, d))| {
                let mu = &c / &tau;
                let sigma2 = (&four * &rho * &tau3 * &d - &four * &rho * &tau2 * &c * &d
                    + (&two * &tau2 - &alpha2) * &c * &c
                    - &two * &tau3 * &c)
                    / (&two * &tau4);
                // beta = 0
                let kappa = (&rho * &tau2 * &d - &alpha2 * &c) / (&two * &tau3);
                ExactLevel {
                    r: i + 1,
                    c,
                    d,
                    mu,
                    sigma2,
                    kappa,
                }
            })
            .collect()
    }
}
