//! Closed-form performance expressions for the X-duplex relay: asymptotic
//! CDF of the selected equivalent SINR, per-branch tail probabilities,
//! high-SNR outage approximation, closed-form average SER with its
//! quadrature companion, the FD error floor, and finite-SNR diversity
//! orders.
//!
//! The CDF factors into two independent antenna-branch terms; each branch
//! term is assembled from the FD tail, the exact HD tail, and the joint-tail
//! split L1/L2, all exposed individually so the assembly can be checked
//! piece by piece against Monte Carlo.
//!
//! Everything here is an asymptotic (high transmit SNR) expression except
//! the HD tail, which is exact. Probability outputs are clamped to [0, 1];
//! clamp events are counted and can be read back for diagnostics.

use crate::channel::{DerivedConstants, Modulation, SystemParams};
use crate::duplex::Scheme;
use crate::quad;
use crate::specfun::{
    bessel_k0, bessel_k1, gamma_fn, parabolic_cylinder_d_scaled, upper_incomplete_gamma_scaled,
};
use crate::{Error, Result};
use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

/// Transmit-SNR threshold (linear) above which the asymptotic expressions
/// are trusted; 20 dB.
pub const HIGH_SNR_VALIDITY_LINEAR: f64 = 100.0;

static CLAMP_EVENTS: AtomicU64 = AtomicU64::new(0);

/// Number of times an analytic probability had to be clamped into [0, 1]
/// since the last reset; nonzero counts flag operation outside the
/// asymptotic validity region.
pub fn clamp_events() -> u64 {
    CLAMP_EVENTS.load(Ordering::Relaxed)
}

pub fn reset_clamp_events() {
    CLAMP_EVENTS.store(0, Ordering::Relaxed);
}

fn clamp01(p: f64) -> f64 {
    if (0.0..=1.0).contains(&p) {
        p
    } else {
        CLAMP_EVENTS.fetch_add(1, Ordering::Relaxed);
        p.clamp(0.0, 1.0)
    }
}

/// Whether the asymptotic expressions are inside their trusted regime.
pub fn high_snr_valid(p_t: f64, sigma2: f64) -> bool {
    p_t / sigma2 >= HIGH_SNR_VALIDITY_LINEAR
}

/// The two independent antenna branches of the CDF factorization: branch A
/// works over (gamma_1, gamma_4, gamma_SI^1), branch B over
/// (gamma_2, gamma_3, gamma_SI^2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    A,
    B,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::A, Branch::B];
}

struct BranchParams {
    eta: f64,
    c: f64,
    /// lambda_sr * P_S of this branch's first hop.
    lam_sr_ps: f64,
    /// lambda_rd * P_R of this branch's second hop.
    lam_rd_pr: f64,
}

fn branch_params(branch: Branch, consts: &DerivedConstants, params: &SystemParams) -> BranchParams {
    match branch {
        Branch::A => BranchParams {
            eta: consts.eta1,
            c: consts.c1,
            lam_sr_ps: params.lambda[0] * params.p_s,
            lam_rd_pr: params.lambda[3] * params.p_r,
        },
        Branch::B => BranchParams {
            eta: consts.eta2,
            c: consts.c2,
            lam_sr_ps: params.lambda[1] * params.p_s,
            lam_rd_pr: params.lambda[2] * params.p_r,
        },
    }
}

/// Argument terms of one branch of the CDF, plus the assembled I-terms.
#[derive(Debug, Clone, Copy)]
pub struct BranchTerms {
    pub beta0: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub alpha: f64,
    /// First grouped term of this branch's CDF factor (I1 or I3).
    pub i1: f64,
    /// Second grouped term (I2 or I4).
    pub i2: f64,
}

fn check_threshold(x: f64, func: &'static str) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(
            func,
            format!("threshold must be positive and finite, got {x}"),
        ));
    }
    Ok(())
}

struct BetaSet {
    beta0: f64,
    beta1: f64,
    beta2: f64,
    beta3: f64,
    alpha: f64,
    eta: f64,
    c: f64,
}

fn beta_set(branch: Branch, x: f64, consts: &DerivedConstants, params: &SystemParams) -> BetaSet {
    let bp = branch_params(branch, consts, params);
    let t = x * x + 2.0 * x;
    let prod = bp.lam_sr_ps * bp.lam_rd_pr;
    BetaSet {
        beta0: 2.0 * ((t * t + t) / prod).sqrt(),
        beta1: 2.0 * ((x + x * x) / prod).sqrt(),
        beta2: 2.0 * ((t * t + t + (x + 1.0) * t / bp.eta) / prod).sqrt(),
        beta3: bp.c * t + (x + 1.0) / (bp.eta * bp.lam_sr_ps),
        alpha: 2.0 * bp.eta * (x * x + x) / (bp.lam_rd_pr * (1.0 + bp.eta * x).powi(2)),
        eta: bp.eta,
        c: bp.c,
    }
}

/// Argument terms and grouped I-terms of one CDF branch at threshold `x`.
pub fn branch_terms(
    branch: Branch,
    x: f64,
    consts: &DerivedConstants,
    params: &SystemParams,
) -> Result<BranchTerms> {
    check_threshold(x, "branch_terms")?;
    let b = beta_set(branch, x, consts, params);
    let e_cx = (-b.c * x).exp();
    let e_b3 = (-b.beta3).exp();
    let i1 = (b.beta1 * bessel_k1(b.beta1)? * e_cx
        + b.eta * x * b.beta2 * bessel_k1(b.beta2)? * e_b3)
        / (1.0 + b.eta * x);
    let i2 = b.alpha * (bessel_k0(b.beta1)? * e_cx - bessel_k0(b.beta2)? * e_b3);
    Ok(BranchTerms {
        beta0: b.beta0,
        beta1: b.beta1,
        beta2: b.beta2,
        beta3: b.beta3,
        alpha: b.alpha,
        i1,
        i2,
    })
}

/// High-SNR tail probability of a branch's FD SINR, Pr(gamma_fd > x).
pub fn tail_fd(
    branch: Branch,
    x: f64,
    consts: &DerivedConstants,
    params: &SystemParams,
) -> Result<f64> {
    check_threshold(x, "tail_fd")?;
    let b = beta_set(branch, x, consts, params);
    let e_cx = (-b.c * x).exp();
    let p = b.beta1 * bessel_k1(b.beta1)? * e_cx / (1.0 + b.eta * x)
        - b.alpha * bessel_k0(b.beta1)? * e_cx;
    Ok(clamp01(p))
}

/// Exact tail probability of a branch's HD SINR evaluated at the equivalent
/// threshold, Pr(gamma_hd > x^2 + 2x).
pub fn tail_hd(
    branch: Branch,
    x: f64,
    consts: &DerivedConstants,
    params: &SystemParams,
) -> Result<f64> {
    check_threshold(x, "tail_hd")?;
    let b = beta_set(branch, x, consts, params);
    let t = x * x + 2.0 * x;
    let p = b.beta0 * bessel_k1(b.beta0)? * (-b.c * t).exp();
    Ok(clamp01(p))
}

/// The two parts of the joint tail Pr(gamma_fd > x, gamma_hd > x^2 + 2x),
/// split on whether the RSI draw puts the FD constraint above or below the
/// HD one.
pub fn joint_tail_l1_l2(
    branch: Branch,
    x: f64,
    consts: &DerivedConstants,
    params: &SystemParams,
) -> Result<(f64, f64)> {
    check_threshold(x, "joint_tail_l1_l2")?;
    let b = beta_set(branch, x, consts, params);
    let t = x * x + 2.0 * x;
    let e_b3 = (-b.beta3).exp();
    let b2k1 = b.beta2 * bessel_k1(b.beta2)? * e_b3;
    let l1 = b2k1 / (1.0 + b.eta * x) - b.alpha * bessel_k0(b.beta2)? * e_b3;
    let l2 = b.beta0 * bessel_k1(b.beta0)? * (-b.c * t).exp() - b2k1;
    Ok((l1, l2))
}

fn branch_factor(
    branch: Branch,
    x: f64,
    consts: &DerivedConstants,
    params: &SystemParams,
) -> Result<f64> {
    let tf = tail_fd(branch, x, consts, params)?;
    let th = tail_hd(branch, x, consts, params)?;
    let (l1, l2) = joint_tail_l1_l2(branch, x, consts, params)?;
    Ok(1.0 - tf - th + l1 + l2)
}

fn require_identical_rsi(params: &SystemParams, func: &'static str) -> Result<()> {
    if !params.identical_rsi() {
        return Err(Error::Parameter(format!(
            "{func}: requires identical RSI channels, got lambda_rsi = {:?}",
            params.lambda_rsi
        )));
    }
    Ok(())
}

/// Asymptotic CDF of the X-duplex equivalent SINR, Pr(gamma_max < x):
/// the product of the two branch factors `1 - tail_fd - tail_hd + L1 + L2`.
pub fn cdf_xd(x: f64, consts: &DerivedConstants, params: &SystemParams) -> Result<f64> {
    check_threshold(x, "cdf_xd")?;
    require_identical_rsi(params, "cdf_xd")?;
    let p1 = branch_factor(Branch::A, x, consts, params)?;
    let p2 = branch_factor(Branch::B, x, consts, params)?;
    Ok(clamp01(p1 * p2))
}

/// High-SNR outage approximation (the CDF with `z K1(z) -> 1` and
/// `K0 -> 0`); this is also the integrand kernel of the closed-form SER.
pub fn outage_xd(x: f64, consts: &DerivedConstants, params: &SystemParams) -> Result<f64> {
    check_threshold(x, "outage_xd")?;
    require_identical_rsi(params, "outage_xd")?;
    let mut out = 1.0;
    for branch in Branch::BOTH {
        let b = beta_set(branch, x, consts, params);
        out *= 1.0 - ((-b.c * x).exp() + b.eta * x * (-b.beta3).exp()) / (1.0 + b.eta * x);
    }
    Ok(clamp01(out))
}

// ---------------------------------------------------------------------------
// SER
// ---------------------------------------------------------------------------

/// Closed form of `int_0^inf x^{v-1} (e^{-tx} + t^2 x^2 e^{-5tx/3} / 2)
/// e^{-beta x^2 - gamma x} dx`: the building block the SER expression uses
/// with the rational factor `1/(1 + t x)` replaced by its two-exponential
/// approximation.
pub fn f_helper(v: f64, beta: f64, gamma: f64, t: f64) -> Result<f64> {
    if !(beta > 0.0) || !(t > 0.0) || !(v > 0.0) {
        return Err(Error::domain(
            "f_helper",
            format!("requires v > 0, beta > 0, t > 0; got v={v}, beta={beta}, t={t}"),
        ));
    }
    let s2b = (2.0 * beta).sqrt();
    // The scaled D already carries the e^{z^2/4} factor of the closed form.
    let term1 = (2.0 * beta).powf(-0.5 * v)
        * gamma_fn(v)?
        * parabolic_cylinder_d_scaled(-v, (gamma + t) / s2b)?;
    let term2 = 0.5
        * t
        * t
        * (2.0 * beta).powf(-0.5 * v - 1.0)
        * gamma_fn(v + 2.0)?
        * parabolic_cylinder_d_scaled(-(v + 2.0), (gamma + 5.0 * t / 3.0) / s2b)?;
    Ok(term1 + term2)
}

/// The sub-terms of the closed-form SER, exposed for verification.
///
/// `s1..s5` are the five integral pieces of the SER decomposition
/// (constant, branch-1 rational part, branch-1 RSI part, branch-2 part,
/// cross part); the SER is `prefactor * (s1 - s2 - s3 - s4 + s5)`. When the
/// two RSI ratios coincide, the cross part has a removable 0/0 singularity
/// and is evaluated as the two-sided average at `eta2 = eta1 (1 +- 1e-5)`;
/// the recorded `f2_*`/`f3` terms then come from the upper perturbation.
#[derive(Debug, Clone, Copy)]
pub struct SerTerms {
    pub mu1: f64,
    /// Branch-2 counterpart of mu1.
    pub mu1_b: f64,
    pub mu2: f64,
    /// Branch-2 counterpart of mu2.
    pub mu2_b: f64,
    pub mu3: f64,
    /// eta1 F(3/2, C1, mu2, eta1) - eta2 F(3/2, C1, mu2, eta2).
    pub f2_a: f64,
    /// eta1 F(3/2, C2, mu2_b, eta1) - eta2 F(3/2, C2, mu2_b, eta2).
    pub f2_b: f64,
    /// eta1 F(5/2, C1+C2, mu3, eta1) - eta2 F(5/2, C1+C2, mu3, eta2).
    pub f2_cross: f64,
    /// sqrt(eta) e^{B/eta} Gamma(1/2, B/eta) difference, B = a2 + C1 + C2.
    pub f3: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
    pub s4: f64,
    pub s5: f64,
}

/// Relative eta gap below which the cross terms switch to the perturbed
/// evaluation.
const ETA_DEGENERATE_GAP: f64 = 1e-3;
/// Relative perturbation used for the removable-singularity evaluation.
const ETA_EPSILON: f64 = 1e-5;

struct CrossTerms {
    f2_a: f64,
    f2_b: f64,
    f2_cross: f64,
    f3: f64,
    s5: f64,
}

/// The cross part S5 of the SER decomposition at an explicit eta2; kept
/// separate so the degenerate eta2 -> eta1 limit can be taken numerically.
fn cross_terms(
    eta1: f64,
    eta2: f64,
    c1: f64,
    c2: f64,
    a2: f64,
    lam1_ps: f64,
    lam2_ps: f64,
) -> Result<CrossTerms> {
    let b = a2 + c1 + c2;
    let f3 = eta1.sqrt() * upper_incomplete_gamma_scaled(0.5, b / eta1)?
        - eta2.sqrt() * upper_incomplete_gamma_scaled(0.5, b / eta2)?;

    let inv1 = 1.0 / (lam1_ps * eta1);
    let inv2 = 1.0 / (lam2_ps * eta2);
    let mu1 = 2.0 * c1 + a2 + inv1;
    let mu1_b = 2.0 * c2 + a2 + inv2;
    let mu2 = mu1 + c2;
    let mu2_b = mu1_b + c1;
    let mu3 = 2.0 * c1 + 2.0 * c2 + a2 + inv1 + inv2;

    let f2 = |v: f64, beta: f64, gamma: f64| -> Result<f64> {
        Ok(eta1 * f_helper(v, beta, gamma, eta1)? - eta2 * f_helper(v, beta, gamma, eta2)?)
    };
    let f2_a = f2(1.5, c1, mu2)?;
    let f2_b = f2(1.5, c2, mu2_b)?;
    let f2_cross = f2(2.5, c1 + c2, mu3)?;

    let gap = eta1 - eta2;
    let s5 = PI.sqrt() / gap * f3
        + eta1 * (-inv1).exp() / gap * f2_a
        + eta2 * (-inv2).exp() / gap * f2_b
        + eta1 * eta2 * (-inv1 - inv2).exp() / gap * f2_cross;
    Ok(CrossTerms {
        f2_a,
        f2_b,
        f2_cross,
        f3,
        s5,
    })
}

/// Sub-terms of the closed-form SER at the given parameters.
pub fn ser_terms(
    consts: &DerivedConstants,
    params: &SystemParams,
    modulation: &Modulation,
) -> Result<SerTerms> {
    require_identical_rsi(params, "ser_xd")?;
    let a2 = modulation.a2;
    let (eta1, eta2) = (consts.eta1, consts.eta2);
    let (c1, c2) = (consts.c1, consts.c2);
    let lam1_ps = params.lambda[0] * params.p_s;
    let lam2_ps = params.lambda[1] * params.p_s;
    let inv1 = 1.0 / (lam1_ps * eta1);
    let inv2 = 1.0 / (lam2_ps * eta2);

    let mu1 = 2.0 * c1 + a2 + inv1;
    let mu1_b = 2.0 * c2 + a2 + inv2;

    let s1 = (PI / a2).sqrt();
    let s2 = (PI / eta1).sqrt() * upper_incomplete_gamma_scaled(0.5, (a2 + c1) / eta1)?;
    let s3 = eta1 * (-inv1).exp() * f_helper(1.5, c1, mu1, eta1)?;
    let s4 = (PI / eta2).sqrt() * upper_incomplete_gamma_scaled(0.5, (a2 + c2) / eta2)?
        + eta2 * (-inv2).exp() * f_helper(1.5, c2, mu1_b, eta2)?;

    let degenerate = (eta1 - eta2).abs() <= ETA_DEGENERATE_GAP * eta1.max(eta2);
    let cross = if degenerate {
        let hi = cross_terms(eta1, eta1 * (1.0 + ETA_EPSILON), c1, c2, a2, lam1_ps, lam2_ps)?;
        let lo = cross_terms(eta1, eta1 * (1.0 - ETA_EPSILON), c1, c2, a2, lam1_ps, lam2_ps)?;
        CrossTerms {
            s5: 0.5 * (hi.s5 + lo.s5),
            ..hi
        }
    } else {
        cross_terms(eta1, eta2, c1, c2, a2, lam1_ps, lam2_ps)?
    };

    Ok(SerTerms {
        mu1,
        mu1_b,
        mu2: mu1 + c2,
        mu2_b: mu1_b + c1,
        mu3: 2.0 * c1 + 2.0 * c2 + a2 + inv1 + inv2,
        f2_a: cross.f2_a,
        f2_b: cross.f2_b,
        f2_cross: cross.f2_cross,
        f3: cross.f3,
        s1,
        s2,
        s3,
        s4,
        s5: cross.s5,
    })
}

/// Closed-form asymptotic average SER of the X-duplex scheme.
pub fn ser_xd(
    consts: &DerivedConstants,
    params: &SystemParams,
    modulation: &Modulation,
) -> Result<f64> {
    let t = ser_terms(consts, params, modulation)?;
    let pref = modulation.a1 * modulation.a2.sqrt() / (2.0 * PI.sqrt());
    Ok(clamp01(pref * (t.s1 - t.s2 - t.s3 - t.s4 + t.s5)))
}

/// SER floor of a fixed FD mode as transmit SNR grows without bound; only
/// the RSI ratio and the modulation survive in the limit.
pub fn ser_fd_floor(eta: f64, modulation: &Modulation) -> Result<f64> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::domain(
            "ser_fd_floor",
            format!("eta must be positive, got {eta}"),
        ));
    }
    let a2 = modulation.a2;
    let value = modulation.a1 * a2.sqrt() / (2.0 * (PI * eta).sqrt())
        * gamma_fn(1.5)?
        * upper_incomplete_gamma_scaled(-0.5, a2 / eta)?;
    Ok(clamp01(value))
}

/// Average SER by direct quadrature of the CDF-form integral
/// `a1 sqrt(a2) / (2 sqrt(pi)) int_0^inf e^{-a2 x} x^{-1/2} F(x) dx`,
/// evaluated after the substitution `x = t^2` which removes the endpoint
/// singularity.
pub fn ser_quadrature<F: Fn(f64) -> f64>(cdf: F, modulation: &Modulation) -> Result<f64> {
    let a2 = modulation.a2;
    let integrand = |t: f64| 2.0 * (-a2 * t * t).exp() * cdf(t * t);
    let result = quad::integrate_to_inf(integrand, 0.0, 1e-10, 4000)?;
    Ok(modulation.a1 * a2.sqrt() / (2.0 * PI.sqrt()) * result.value)
}

// ---------------------------------------------------------------------------
// Finite-SNR diversity order
// ---------------------------------------------------------------------------

fn symmetric_setting(p_t: f64, x: f64, params: &SystemParams) -> Result<(f64, f64, f64, f64)> {
    if !(p_t > 0.0) || !p_t.is_finite() {
        return Err(Error::Parameter(format!(
            "diversity: p_t must be positive, got {p_t}"
        )));
    }
    check_threshold(x, "diversity")?;
    let [l1, l2, l3, l4] = params.lambda;
    let sym = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.max(b);
    if !(sym(l1, l2) && sym(l3, l4) && params.identical_rsi()) {
        return Err(Error::Parameter(format!(
            "diversity: requires lambda_1 = lambda_2, lambda_3 = lambda_4 and identical RSI, \
             got lambda = {:?}, lambda_rsi = {:?}",
            params.lambda, params.lambda_rsi
        )));
    }
    let c3 = 1.0 / l1 + 1.0 / l4;
    // eta is power-independent under equal power allocation.
    let eta = params.lambda_rsi[0] / l1;
    let rho1 = c3 * x;
    let rho2 = c3 * (x * x + 2.0 * x) + (x + 1.0) / (eta * l1);
    Ok((c3, eta, rho1, rho2))
}

/// Finite-SNR diversity order of the X-duplex scheme at equal transmit
/// power `p_t`: the log-log slope of the high-SNR outage product, taken
/// analytically.
pub fn diversity_xd(p_t: f64, x: f64, params: &SystemParams) -> Result<f64> {
    let (_c3, eta, rho1, rho2) = symmetric_setting(p_t, x, params)?;
    let ex = eta * x;
    let dm = (rho1 * (-rho1 / p_t).exp() + ex * rho2 * (-rho2 / p_t).exp()) / (p_t * p_t);
    // numerator p_t d/dp[2(1+ex)M - M^2] = 2 p_t M' (1+ex-M); the shared
    // factor cancels against the squared denominator. expm1 keeps
    // 1 + ex - M = (1 - e^{-rho1/p}) + ex (1 - e^{-rho2/p}) exact at high
    // power where the direct subtraction loses most of its digits.
    let gap = -(-rho1 / p_t).exp_m1() - ex * (-rho2 / p_t).exp_m1();
    Ok(2.0 * p_t * dm / gap)
}

/// Finite-SNR diversity order of the HD-A, FD-A, or hybrid baseline in the
/// same symmetric setting (high-SNR Taylor forms).
pub fn diversity_baseline(scheme: Scheme, p_t: f64, x: f64, params: &SystemParams) -> Result<f64> {
    let (c3, eta, rho1, rho2) = symmetric_setting(p_t, x, params)?;
    match scheme {
        Scheme::HdA => Ok(1.0 - c3 * (x * x + 2.0 * x) / p_t),
        Scheme::FdA => Ok((1.0 - x * c3 / p_t) / (1.0 + p_t * eta / c3)),
        Scheme::Hy => {
            let ex = eta * x;
            Ok(1.0 - (rho1 * rho1 + ex * rho2 * rho2) / (p_t * (rho1 + ex * rho2)))
        }
        other => Err(Error::Parameter(format!(
            "diversity_baseline: no closed form for scheme '{other}'"
        ))),
    }
}
