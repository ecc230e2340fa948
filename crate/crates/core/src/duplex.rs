//! Per-realization SINR computation for the four relay modes, the
//! equivalent-SINR transformation that makes half-duplex comparable to
//! full-duplex, the X-duplex selection rule, and the baseline schemes.

use crate::channel::{ChannelDraw, SystemParams};
use crate::{Error, Result};

/// One of the four antenna/duplex configurations of the two-antenna relay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    FdA,
    FdB,
    HdA,
    HdB,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::FdA, Mode::FdB, Mode::HdA, Mode::HdB];

    pub fn is_full_duplex(self) -> bool {
        matches!(self, Mode::FdA | Mode::FdB)
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Mode::FdA => "fd-a",
            Mode::FdB => "fd-b",
            Mode::HdA => "hd-a",
            Mode::HdB => "hd-b",
        };
        f.write_str(s)
    }
}

/// Transmission scheme under evaluation: X-duplex joint selection, the four
/// fixed modes, hybrid duplex selection with fixed antennas, and FD-only
/// antenna selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Xd,
    FdA,
    FdB,
    HdA,
    HdB,
    Hy,
    Rams,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Xd,
        Scheme::FdA,
        Scheme::FdB,
        Scheme::HdA,
        Scheme::HdB,
        Scheme::Hy,
        Scheme::Rams,
    ];

    /// CLI / CSV vocabulary.
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Xd => "xd",
            Scheme::FdA => "fd-a",
            Scheme::FdB => "fd-b",
            Scheme::HdA => "hd-a",
            Scheme::HdB => "hd-b",
            Scheme::Hy => "hy",
            Scheme::Rams => "rams",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "xd" => Ok(Scheme::Xd),
            "fd-a" => Ok(Scheme::FdA),
            "fd-b" => Ok(Scheme::FdB),
            "hd-a" => Ok(Scheme::HdA),
            "hd-b" => Ok(Scheme::HdB),
            "hy" => Ok(Scheme::Hy),
            "rams" => Ok(Scheme::Rams),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Selection outcome for one fading realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeDecision {
    pub chosen: Mode,
    /// Raw end-to-end SINRs in the fixed order FD-A, FD-B, HD-A, HD-B.
    pub raw_sinr: [f64; 4],
    /// Equivalent SINRs on the common scale (identity for FD, sqrt(g+1)-1
    /// for HD), same order.
    pub eq_sinr: [f64; 4],
    /// Selected equivalent SINR, max of `eq_sinr`.
    pub gamma_max: f64,
    /// Interference-scaled first-hop SNR of branch A.
    pub x1: f64,
    /// Interference-scaled first-hop SNR of branch B.
    pub x2: f64,
}

#[inline]
fn first_hop(p_s: f64, gamma_sr: f64, p_r: f64, gamma_si: f64) -> f64 {
    p_s * gamma_sr / (p_r * gamma_si + 1.0)
}

#[inline]
fn fd_sinr(x: f64, p_r: f64, gamma_rd: f64) -> f64 {
    let y = p_r * gamma_rd;
    x * y / (x + y + 1.0)
}

#[inline]
fn hd_sinr(p_s: f64, gamma_sr: f64, p_r: f64, gamma_rd: f64) -> f64 {
    let a = p_s * gamma_sr;
    let b = p_r * gamma_rd;
    a * b / (a + b + 1.0)
}

/// Raw end-to-end SINR of one mode for one realization.
pub fn sinr_mode(mode: Mode, draw: &ChannelDraw, params: &SystemParams) -> f64 {
    let [g1, g2, g3, g4] = draw.gamma;
    let [s1, s2] = draw.gamma_si;
    match mode {
        Mode::FdA => fd_sinr(first_hop(params.p_s, g1, params.p_r, s1), params.p_r, g4),
        Mode::FdB => fd_sinr(first_hop(params.p_s, g2, params.p_r, s2), params.p_r, g3),
        Mode::HdA => hd_sinr(params.p_s, g1, params.p_r, g4),
        Mode::HdB => hd_sinr(params.p_s, g2, params.p_r, g3),
    }
}

#[inline]
pub(crate) fn eq_hd(raw: f64) -> f64 {
    (raw + 1.0).sqrt() - 1.0
}

/// Equivalent SINR of a half-duplex mode, sqrt(raw + 1) - 1; this is the
/// scale on which the half-rate penalty cancels out of the comparison.
pub fn equivalent_sinr_hd(raw: f64) -> Result<f64> {
    if !(raw >= 0.0) {
        return Err(Error::domain(
            "equivalent_sinr_hd",
            format!("negative SINR {raw}"),
        ));
    }
    Ok(eq_hd(raw))
}

/// Evaluate all four modes and pick the equivalent-SINR maximizer. Ties are
/// broken in the fixed order FD-A > FD-B > HD-A > HD-B (they occur with
/// probability zero under continuous fading).
pub fn select_mode(draw: &ChannelDraw, params: &SystemParams) -> ModeDecision {
    let [g1, g2, g3, g4] = draw.gamma;
    let [s1, s2] = draw.gamma_si;
    let x1 = first_hop(params.p_s, g1, params.p_r, s1);
    let x2 = first_hop(params.p_s, g2, params.p_r, s2);

    let raw_sinr = [
        fd_sinr(x1, params.p_r, g4),
        fd_sinr(x2, params.p_r, g3),
        hd_sinr(params.p_s, g1, params.p_r, g4),
        hd_sinr(params.p_s, g2, params.p_r, g3),
    ];
    let eq_sinr = [
        raw_sinr[0],
        raw_sinr[1],
        eq_hd(raw_sinr[2]),
        eq_hd(raw_sinr[3]),
    ];

    let mut chosen = Mode::FdA;
    let mut gamma_max = eq_sinr[0];
    for (mode, &gamma) in Mode::ALL.iter().zip(&eq_sinr).skip(1) {
        if gamma > gamma_max {
            gamma_max = gamma;
            chosen = *mode;
        }
    }

    ModeDecision {
        chosen,
        raw_sinr,
        eq_sinr,
        gamma_max,
        x1,
        x2,
    }
}

/// Equivalent SINR a given scheme attains on one realization.
pub fn scheme_equivalent_sinr(scheme: Scheme, draw: &ChannelDraw, params: &SystemParams) -> f64 {
    match scheme {
        Scheme::Xd => select_mode(draw, params).gamma_max,
        Scheme::FdA => sinr_mode(Mode::FdA, draw, params),
        Scheme::FdB => sinr_mode(Mode::FdB, draw, params),
        Scheme::HdA => eq_hd(sinr_mode(Mode::HdA, draw, params)),
        Scheme::HdB => eq_hd(sinr_mode(Mode::HdB, draw, params)),
        // Duplex-mode selection with the antenna assignment fixed to A.
        Scheme::Hy => {
            let fd = sinr_mode(Mode::FdA, draw, params);
            let hd = eq_hd(sinr_mode(Mode::HdA, draw, params));
            fd.max(hd)
        }
        // Antenna-pair selection restricted to the two FD configurations.
        Scheme::Rams => {
            let a = sinr_mode(Mode::FdA, draw, params);
            let b = sinr_mode(Mode::FdB, draw, params);
            a.max(b)
        }
    }
}

/// Whether `scheme` transmits full-duplex on this realization; feeds the
/// FD-selection-fraction column of the sweep output.
pub fn scheme_uses_fd(scheme: Scheme, draw: &ChannelDraw, params: &SystemParams) -> bool {
    match scheme {
        Scheme::Xd => select_mode(draw, params).chosen.is_full_duplex(),
        Scheme::FdA | Scheme::FdB | Scheme::Rams => true,
        Scheme::HdA | Scheme::HdB => false,
        Scheme::Hy => {
            sinr_mode(Mode::FdA, draw, params) >= eq_hd(sinr_mode(Mode::HdA, draw, params))
        }
    }
}
