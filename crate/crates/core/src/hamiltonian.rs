//! Interaction-picture Hamiltonians and the dissipative jump channels.
//!
//! Level energies in the rotating frame are cumulative photon detunings:
//! (0, Δ_p, Δ_p + Δ_s, Δ_p + Δ_s − Δ_w). Three-photon resonance
//! Δ_p + Δ_s − Δ_w = 0 makes |4⟩ degenerate with |1⟩. Couplings are −Ω/2.

use std::fmt;

use crate::linalg::{ComplexMatrix4, I};
use crate::scheme::{departure_rates, SchemeParams};
use num_complex::Complex64;

/// Atomic level, numbered 1..4. Stored at index `number - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    One = 1,
    Two = 2,
    Three = 3,
    Four = 4,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::One, Level::Two, Level::Three, Level::Four];

    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Option<Level> {
        match n {
            1 => Some(Level::One),
            2 => Some(Level::Two),
            3 => Some(Level::Three),
            4 => Some(Level::Four),
            _ => None,
        }
    }

    pub fn from_index(i: usize) -> Option<Level> {
        u8::try_from(i + 1).ok().and_then(Level::from_number)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JumpLabel {
    /// Pump |1⟩ → |2⟩.
    J12,
    /// Decay plus pump |2⟩ → |1⟩.
    J21,
    /// Decay |3⟩ → |2⟩.
    J32,
    /// Decay |3⟩ → |4⟩.
    J34,
}

impl JumpLabel {
    pub const ALL: [JumpLabel; 4] = [JumpLabel::J12, JumpLabel::J21, JumpLabel::J32, JumpLabel::J34];

    pub fn from_level(self) -> Level {
        match self {
            JumpLabel::J12 => Level::One,
            JumpLabel::J21 => Level::Two,
            JumpLabel::J32 | JumpLabel::J34 => Level::Three,
        }
    }

    pub fn to_level(self) -> Level {
        match self {
            JumpLabel::J12 | JumpLabel::J32 => Level::Two,
            JumpLabel::J21 => Level::One,
            JumpLabel::J34 => Level::Four,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JumpLabel::J12 => "J12",
            JumpLabel::J21 => "J21",
            JumpLabel::J32 => "J32",
            JumpLabel::J34 => "J34",
        }
    }
}

impl fmt::Display for JumpLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for JumpLabel {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        JumpLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| crate::Error::Parse(format!("unknown jump channel `{s}`")))
    }
}

/// A collapse channel C = |to⟩⟨from| with its rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpChannel {
    pub label: JumpLabel,
    pub from_level: Level,
    pub to_level: Level,
    pub rate: f64,
}

impl JumpChannel {
    pub fn collapse_operator(&self) -> ComplexMatrix4 {
        let mut c = ComplexMatrix4::zeros();
        c[(self.to_level.index(), self.from_level.index())] = Complex64::new(1.0, 0.0);
        c
    }
}

/// All four channels, zero-rate ones included.
pub fn jump_channels(p: &SchemeParams) -> [JumpChannel; 4] {
    JumpLabel::ALL.map(|label| JumpChannel {
        label,
        from_level: label.from_level(),
        to_level: label.to_level(),
        rate: match label {
            JumpLabel::J12 => p.lambda_pump,
            JumpLabel::J21 => p.gamma_21 + p.lambda_pump,
            JumpLabel::J32 => p.gamma_32,
            JumpLabel::J34 => p.gamma_34,
        },
    })
}

pub fn level_energies(p: &SchemeParams) -> [f64; 4] {
    let e2 = p.delta_p;
    let e3 = e2 + p.delta_s;
    let e4 = e3 - p.delta_w;
    [0.0, e2, e3, e4]
}

/// Hermitian interaction-picture Hamiltonian.
pub fn build_h0(p: &SchemeParams) -> ComplexMatrix4 {
    let mut h = ComplexMatrix4::zeros();
    for (k, e) in level_energies(p).into_iter().enumerate() {
        h[(k, k)] = Complex64::new(e, 0.0);
    }
    let couplings = [(0, 1, p.omega_p), (1, 2, p.omega_s), (2, 3, p.omega_w)];
    for (a, b, omega) in couplings {
        h[(a, b)] = Complex64::new(-0.5 * omega, 0.0);
        h[(b, a)] = Complex64::new(-0.5 * omega, 0.0);
    }
    h
}

/// Effective no-jump Hamiltonian H₀ − (i/2)·diag(G₁, G₂, G₃, 0).
pub fn build_h_nh(p: &SchemeParams) -> ComplexMatrix4 {
    let mut h = build_h0(p);
    for (k, g) in departure_rates(p).as_array().into_iter().enumerate() {
        h[(k, k)] -= I * (0.5 * g);
    }
    h
}

/// Whether levels `a` and `b` are linked by a chain of nonzero couplings.
pub fn coupled(p: &SchemeParams, a: Level, b: Level) -> bool {
    let links = [p.omega_p != 0.0, p.omega_s != 0.0, p.omega_w != 0.0];
    let (lo, hi) = if a.index() <= b.index() { (a.index(), b.index()) } else { (b.index(), a.index()) };
    (lo..hi).all(|k| links[k])
}
