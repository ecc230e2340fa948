//! Monte Carlo estimators: outage probability, semi-analytic SER, empirical
//! CDF, per-mode selection shares, and numeric finite-SNR diversity from
//! sweep curves.
//!
//! Trials are addressed by index — trial `i` always consumes the same six
//! variates of the master seed — and processed in fixed-size batches whose
//! partial sums are reduced in batch order. Estimates are therefore
//! bit-identical for any worker count.

use crate::channel::{ChannelSampler, Modulation, SystemParams};
use crate::duplex::{scheme_equivalent_sinr, select_mode, Mode, Scheme};
use crate::specfun::q_core;
use crate::{Error, Result};
use rayon::prelude::*;

/// Trials per work item; partial sums are accumulated per batch and folded
/// sequentially.
pub const BATCH_SIZE: u64 = 65_536;

/// One Monte Carlo estimate with its standard error and provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub trials: u64,
    pub seed: u64,
}

/// Kahan compensated accumulator; keeps batch sums stable over huge runs.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    #[inline]
    fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::Parameter("trials must be at least 1".into()));
    }
    Ok(())
}

/// Map batches of the trial range through `work` in parallel, returning the
/// per-batch results in batch order.
fn map_batches<B, F>(trials: u64, work: F) -> Vec<B>
where
    B: Send,
    F: Fn(std::ops::Range<u64>) -> B + Sync,
{
    let n_batches = trials.div_ceil(BATCH_SIZE);
    (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let lo = b * BATCH_SIZE;
            let hi = (lo + BATCH_SIZE).min(trials);
            work(lo..hi)
        })
        .collect()
}

/// Outage probability of `scheme`: the fraction of realizations whose
/// equivalent SINR falls below `threshold`.
pub fn estimate_outage(
    scheme: Scheme,
    params: &SystemParams,
    threshold: f64,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_trials(trials)?;
    let sampler = ChannelSampler::new(params.clone(), seed);
    let counts = map_batches(trials, |range| {
        let mut c = 0u64;
        for trial in range {
            let draw = sampler.draw(trial);
            if scheme_equivalent_sinr(scheme, &draw, params) < threshold {
                c += 1;
            }
        }
        c
    });
    let outages: u64 = counts.iter().sum();
    let p = outages as f64 / trials as f64;
    Ok(McEstimate {
        value: p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
        seed,
    })
}

/// Semi-analytic average SER of `scheme`: the sample mean of
/// `a1 Q(sqrt(2 a2 gamma))` over realizations, with the standard error taken
/// from the sample variance of the Q terms.
pub fn estimate_ser(
    scheme: Scheme,
    params: &SystemParams,
    modulation: &Modulation,
    trials: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_trials(trials)?;
    let sampler = ChannelSampler::new(params.clone(), seed);
    let two_a2 = 2.0 * modulation.a2;
    let sums = map_batches(trials, |range| {
        let mut q = Kahan::default();
        let mut q2 = Kahan::default();
        for trial in range {
            let draw = sampler.draw(trial);
            let gamma = scheme_equivalent_sinr(scheme, &draw, params);
            let term = q_core((two_a2 * gamma).sqrt());
            q.add(term);
            q2.add(term * term);
        }
        (q.value(), q2.value())
    });
    let (sum, sum_sq) = sums
        .iter()
        .fold((0.0, 0.0), |(a, b), (q, q2)| (a + q, b + q2));
    let n = trials as f64;
    let mean = sum / n;
    let var = if trials > 1 {
        ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        value: modulation.a1 * mean,
        std_error: modulation.a1 * (var / n).sqrt(),
        trials,
        seed,
    })
}

/// Empirical CDF of the scheme's equivalent SINR at each threshold in `xs`
/// (which must be sorted ascending).
pub fn empirical_cdf(
    scheme: Scheme,
    params: &SystemParams,
    xs: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    check_trials(trials)?;
    if xs.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Parameter(
            "empirical_cdf: thresholds must be sorted ascending".into(),
        ));
    }
    let sampler = ChannelSampler::new(params.clone(), seed);
    let n_bins = xs.len() + 1;
    let histograms = map_batches(trials, |range| {
        let mut hist = vec![0u64; n_bins];
        for trial in range {
            let draw = sampler.draw(trial);
            let gamma = scheme_equivalent_sinr(scheme, &draw, params);
            // First threshold the value lies strictly below.
            let idx = xs.partition_point(|&x| x <= gamma);
            hist[idx] += 1;
        }
        hist
    });
    let mut hist = vec![0u64; n_bins];
    for h in histograms {
        for (acc, v) in hist.iter_mut().zip(h) {
            *acc += v;
        }
    }
    // hist[i] counts gamma in [xs[i-1], xs[i]); the CDF at xs[i] is the
    // prefix sum below it.
    let mut out = Vec::with_capacity(xs.len());
    let mut below = 0u64;
    for &count in hist.iter().take(xs.len()) {
        below += count;
        out.push(below as f64 / trials as f64);
    }
    Ok(out)
}

/// Fractions of realizations in which X-duplex selection picks each of the
/// four modes, in the order FD-A, FD-B, HD-A, HD-B.
pub fn mode_fractions(params: &SystemParams, trials: u64, seed: u64) -> Result<[f64; 4]> {
    check_trials(trials)?;
    let sampler = ChannelSampler::new(params.clone(), seed);
    let counts = map_batches(trials, |range| {
        let mut c = [0u64; 4];
        for trial in range {
            let decision = select_mode(&sampler.draw(trial), params);
            let slot = Mode::ALL
                .iter()
                .position(|&m| m == decision.chosen)
                .expect("mode is one of four");
            c[slot] += 1;
        }
        c
    });
    let mut total = [0u64; 4];
    for c in counts {
        for (t, v) in total.iter_mut().zip(c) {
            *t += v;
        }
    }
    Ok(total.map(|c| c as f64 / trials as f64))
}

/// Joint per-scheme estimates from one pass over shared realizations.
#[derive(Debug, Clone)]
pub struct SchemePoint {
    pub scheme: Scheme,
    pub outage: McEstimate,
    pub ser: McEstimate,
    /// Fraction of realizations the scheme spends in a full-duplex mode.
    pub fd_fraction: f64,
}

#[derive(Clone)]
struct PointAccum {
    outages: Vec<u64>,
    q_sums: Vec<Kahan>,
    q2_sums: Vec<Kahan>,
    fd_counts: Vec<u64>,
}

impl PointAccum {
    fn new(n: usize) -> Self {
        PointAccum {
            outages: vec![0; n],
            q_sums: vec![Kahan::default(); n],
            q2_sums: vec![Kahan::default(); n],
            fd_counts: vec![0; n],
        }
    }
}

/// Evaluate every scheme on the same draws: one record per scheme, all from
/// a single pass with shared randomness. Sharing draws keeps per-trial
/// dominance exact in the output and the pass deterministic.
pub fn estimate_point(
    params: &SystemParams,
    schemes: &[Scheme],
    threshold: f64,
    modulation: &Modulation,
    trials: u64,
    seed: u64,
) -> Result<Vec<SchemePoint>> {
    check_trials(trials)?;
    if schemes.is_empty() {
        return Err(Error::Parameter("estimate_point: no schemes given".into()));
    }
    let sampler = ChannelSampler::new(params.clone(), seed);
    let two_a2 = 2.0 * modulation.a2;
    let n = schemes.len();
    let accums = map_batches(trials, |range| {
        let mut acc = PointAccum::new(n);
        for trial in range {
            let draw = sampler.draw(trial);
            // One selection pass serves every scheme; all of them read off
            // the same four per-mode SINRs.
            let decision = select_mode(&draw, params);
            let eq = &decision.eq_sinr;
            for (k, &scheme) in schemes.iter().enumerate() {
                let (gamma, uses_fd) = match scheme {
                    Scheme::Xd => (decision.gamma_max, decision.chosen.is_full_duplex()),
                    Scheme::FdA => (eq[0], true),
                    Scheme::FdB => (eq[1], true),
                    Scheme::HdA => (eq[2], false),
                    Scheme::HdB => (eq[3], false),
                    Scheme::Hy => (eq[0].max(eq[2]), eq[0] >= eq[2]),
                    Scheme::Rams => (eq[0].max(eq[1]), true),
                };
                if gamma < threshold {
                    acc.outages[k] += 1;
                }
                let q = q_core((two_a2 * gamma).sqrt());
                acc.q_sums[k].add(q);
                acc.q2_sums[k].add(q * q);
                if uses_fd {
                    acc.fd_counts[k] += 1;
                }
            }
        }
        acc
    });

    let nf = trials as f64;
    let mut points = Vec::with_capacity(n);
    for (k, &scheme) in schemes.iter().enumerate() {
        let outages: u64 = accums.iter().map(|a| a.outages[k]).sum();
        let sum: f64 = accums.iter().map(|a| a.q_sums[k].value()).sum();
        let sum_sq: f64 = accums.iter().map(|a| a.q2_sums[k].value()).sum();
        let fd: u64 = accums.iter().map(|a| a.fd_counts[k]).sum();
        let p = outages as f64 / nf;
        let mean = sum / nf;
        let var = if trials > 1 {
            ((sum_sq - sum * sum / nf) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        points.push(SchemePoint {
            scheme,
            outage: McEstimate {
                value: p,
                std_error: (p * (1.0 - p) / nf).sqrt(),
                trials,
                seed,
            },
            ser: McEstimate {
                value: modulation.a1 * mean,
                std_error: modulation.a1 * (var / nf).sqrt(),
                trials,
                seed,
            },
            fd_fraction: fd as f64 / nf,
        });
    }
    Ok(points)
}

/// A metric-versus-power curve for one scheme.
#[derive(Debug, Clone)]
pub struct SweepCurve {
    pub scheme: Scheme,
    /// (transmit power linear, metric value), strictly increasing in power.
    pub points: Vec<(f64, f64)>,
}

impl SweepCurve {
    pub fn new(scheme: Scheme, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Parameter(
                "SweepCurve: powers must be strictly increasing".into(),
            ));
        }
        Ok(SweepCurve { scheme, points })
    }
}

/// Finite-SNR diversity order by log-log differentiation of a curve:
/// central differences at interior points, one-sided at the ends.
/// Points with non-positive values cannot be log-differentiated and are
/// skipped with a diagnostic.
pub fn numeric_diversity(curve: &SweepCurve) -> Result<Vec<(f64, f64)>> {
    let usable: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|&&(p, v)| {
            if v > 0.0 {
                true
            } else {
                log::warn!(
                    "numeric_diversity: skipping p_t={p} for scheme {}: non-positive value {v}",
                    curve.scheme
                );
                false
            }
        })
        .copied()
        .collect();
    if usable.len() < 3 {
        return Err(Error::Parameter(format!(
            "numeric_diversity: need at least 3 positive points, have {}",
            usable.len()
        )));
    }
    let ln_p: Vec<f64> = usable.iter().map(|&(p, _)| p.ln()).collect();
    let ln_v: Vec<f64> = usable.iter().map(|&(_, v)| v.ln()).collect();
    let n = usable.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, hi) = match i {
            0 => (0, 1),
            i if i == n - 1 => (n - 2, n - 1),
            i => (i - 1, i + 1),
        };
        let slope = -(ln_v[hi] - ln_v[lo]) / (ln_p[hi] - ln_p[lo]);
        out.push((usable[i].0, slope));
    }
    Ok(out)
}
