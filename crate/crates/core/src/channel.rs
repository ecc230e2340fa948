//! System parameters, derived constants, and the seeded block-fading
//! channel generator.
//!
//! All channel gains are noise-normalized: `lambda[i]` is directly the mean
//! of the exponential per-link SNR `gamma_i`, and `lambda_rsi[j]` the mean of
//! the residual self-interference SNR on antenna pair `j`. `sigma2` is kept
//! for dB bookkeeping (transmit SNR = p / sigma2) and defaults to one.

use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Static link parameters: transmit powers, noise variance, and the average
/// gains of the four data channels and two RSI channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Source transmit power (linear, noise-normalized).
    pub p_s: f64,
    /// Relay transmit power (linear).
    pub p_r: f64,
    /// Noise variance (linear); unity in every sweep this tool runs.
    pub sigma2: f64,
    /// Average gains of gamma_1..gamma_4 (source->relay A/B, relay B/A->dest).
    pub lambda: [f64; 4],
    /// Average gains of the two RSI channels gamma_SI^1, gamma_SI^2.
    pub lambda_rsi: [f64; 2],
}

impl SystemParams {
    pub fn new(
        p_s: f64,
        p_r: f64,
        sigma2: f64,
        lambda: [f64; 4],
        lambda_rsi: [f64; 2],
    ) -> Result<Self> {
        let all = [p_s, p_r, sigma2]
            .into_iter()
            .chain(lambda)
            .chain(lambda_rsi);
        for v in all {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!(
                    "SystemParams: all fields must be strictly positive and finite, got {v}"
                )));
            }
        }
        Ok(SystemParams {
            p_s,
            p_r,
            sigma2,
            lambda,
            lambda_rsi,
        })
    }

    /// Equal-power setup with identical RSI channels: `p_s = p_r = p_t`,
    /// `lambda_rsi = eta * lambda_1` on both antenna pairs, unit noise.
    pub fn equal_power(p_t: f64, lambda: [f64; 4], eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::Parameter(format!(
                "SystemParams: eta must be strictly positive, got {eta}"
            )));
        }
        let rsi = eta * lambda[0];
        SystemParams::new(p_t, p_t, 1.0, lambda, [rsi, rsi])
    }

    /// Whether the two RSI channels have the same average gain (the setting
    /// every closed-form expression assumes).
    pub fn identical_rsi(&self) -> bool {
        let (a, b) = (self.lambda_rsi[0], self.lambda_rsi[1]);
        (a - b).abs() <= 1e-12 * a.max(b)
    }
}

/// Constants derived from [`SystemParams`] that every closed-form expression
/// is written in terms of.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// RSI-to-signal ratio of branch 1, lambda_R^1 P_R / (lambda_1 P_S).
    pub eta1: f64,
    /// RSI-to-signal ratio of branch 2, lambda_R^2 P_R / (lambda_2 P_S).
    pub eta2: f64,
    /// Inverse-SNR sum of branch 1, 1/(lambda_1 P_S) + 1/(lambda_4 P_R).
    pub c1: f64,
    /// Inverse-SNR sum of branch 2, 1/(lambda_2 P_S) + 1/(lambda_3 P_R).
    pub c2: f64,
    /// Power-independent sum 1/lambda_1 + 1/lambda_4.
    pub c3: f64,
}

/// Compute the eta / C constants used by the analytic expressions.
pub fn derive_constants(params: &SystemParams) -> DerivedConstants {
    let [l1, l2, l3, l4] = params.lambda;
    DerivedConstants {
        eta1: params.lambda_rsi[0] * params.p_r / (l1 * params.p_s),
        eta2: params.lambda_rsi[1] * params.p_r / (l2 * params.p_s),
        c1: 1.0 / (l1 * params.p_s) + 1.0 / (l4 * params.p_r),
        c2: 1.0 / (l2 * params.p_s) + 1.0 / (l3 * params.p_r),
        c3: 1.0 / l1 + 1.0 / l4,
    }
}

/// Modulation-format constants `(a1, a2)` of the SER expression
/// `a1 E[Q(sqrt(2 a2 gamma))]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulation {
    pub a1: f64,
    pub a2: f64,
}

impl Modulation {
    pub fn new(a1: f64, a2: f64) -> Result<Self> {
        if !(a1 > 0.0 && a2 > 0.0) || !a1.is_finite() || !a2.is_finite() {
            return Err(Error::Parameter(format!(
                "Modulation: constants must be strictly positive, got ({a1}, {a2})"
            )));
        }
        Ok(Modulation { a1, a2 })
    }

    /// BPSK: SER = Q(sqrt(2 gamma)).
    pub fn bpsk() -> Self {
        Modulation { a1: 1.0, a2: 1.0 }
    }

    /// Gray-coded QPSK per-symbol approximation.
    pub fn qpsk() -> Self {
        Modulation { a1: 1.0, a2: 0.5 }
    }
}

impl std::str::FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Modulation::bpsk()),
            "qpsk" => Ok(Modulation::qpsk()),
            other => {
                let parts: Vec<&str> = other.split(',').collect();
                if parts.len() == 2 {
                    let a1 = parts[0].trim().parse::<f64>();
                    let a2 = parts[1].trim().parse::<f64>();
                    if let (Ok(a1), Ok(a2)) = (a1, a2) {
                        return Modulation::new(a1, a2);
                    }
                }
                Err(Error::Config(format!(
                    "unknown modulation '{other}' (expected bpsk, qpsk, or 'a1,a2')"
                )))
            }
        }
    }
}

/// One block-fading realization: the four link SNRs and two RSI SNRs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDraw {
    /// gamma_1..gamma_4.
    pub gamma: [f64; 4],
    /// gamma_SI^1, gamma_SI^2.
    pub gamma_si: [f64; 2],
}

#[inline]
fn exponential(rng: &mut impl Rng, mean: f64) -> f64 {
    // Inverse CDF; u in [0, 1) keeps the log argument strictly positive.
    let u: f64 = rng.random();
    -mean * (-u).ln_1p()
}

/// Draw one realization from an already-positioned random stream. The six
/// variates are consumed in the fixed order gamma_1..gamma_4, gamma_SI^1,
/// gamma_SI^2; that order is part of the reproducibility contract.
pub fn sample_channels(params: &SystemParams, rng: &mut impl Rng) -> ChannelDraw {
    let mut gamma = [0.0; 4];
    for (g, l) in gamma.iter_mut().zip(params.lambda) {
        *g = exponential(rng, l);
    }
    let mut gamma_si = [0.0; 2];
    for (g, l) in gamma_si.iter_mut().zip(params.lambda_rsi) {
        *g = exponential(rng, l);
    }
    ChannelDraw { gamma, gamma_si }
}

/// Counter-addressed fading generator: trial `i` always sees the same six
/// variates for a given master seed, no matter how trials are partitioned
/// across workers.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    params: SystemParams,
    template: ChaCha8Rng,
}

impl ChannelSampler {
    pub fn new(params: SystemParams, master_seed: u64) -> Self {
        let template = ChaCha8Rng::seed_from_u64(master_seed);
        ChannelSampler { params, template }
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// Realization for trial index `trial`; ChaCha streams give each trial
    /// its own substream of the master seed.
    pub fn draw(&self, trial: u64) -> ChannelDraw {
        let mut rng = self.template.clone();
        rng.set_stream(trial);
        sample_channels(&self.params, &mut rng)
    }
}
