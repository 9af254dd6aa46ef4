//! Closed-form quantum-jump statistics.
//!
//! A period that starts in |i⟩ evolves under H_NH until a jump. The chance
//! that it ends through a jump out of |j⟩ is G_j ∫₀^∞ |c_ij(τ)|² dτ with
//! c_ij(τ) = ⟨j|exp(−i H_NH τ)|i⟩. Weighting by the probability P(i) that a
//! period starts in |i⟩ gives P(i, j).
//!
//! In the weak-probe limit the start probabilities follow from a simple
//! chain Q(i/j) that ignores the probe, which is what the closed forms here
//! use. [`exact_jump_chain`] keeps the full amplitude integrals instead and is
//! the chain a trajectory simulation actually samples.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{build_h_nh, coupled, jump_channels, Level};
use crate::linalg::{basis, ComplexMatrix4, EigenDecomposition, ZERO, I};
use crate::quadrature::Gk15;
use crate::scheme::{departure_rates, validity_check, SchemeParams, ValidityReport};

/// Above this eigenvector condition number the amplitude integral is
/// evaluated by quadrature instead of the eigen-sum.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Relative accuracy requested from the quadrature path.
pub const QUADRATURE_RTOL: f64 = 1e-10;

const MAX_PANELS: usize = 4_000_000;

/// Q(i/j): probability that the next period starts in |i⟩ given that the
/// current one started in |j⟩. Stored as `q[(i-1, j-1)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalMatrix {
    pub q: Matrix4<f64>,
    /// γ₃₄ + γ₃₂ + γ₂₁ + Λ
    pub d: f64,
    /// γ₃₄ + γ₃₂ + 2(γ₂₁ + Λ)
    pub d_prime: f64,
}

/// Weak-probe chain: from |1⟩ the next jump is the pump into |2⟩; from any
/// other start the atom ends up in |2⟩ or |3⟩ and leaves through one of the
/// remaining channels with probability proportional to its rate.
pub fn q_matrix(p: &SchemeParams) -> Result<ConditionalMatrix> {
    let d = p.gamma_34 + p.gamma_32 + p.gamma_21 + p.lambda_pump;
    if !(d > 0.0) {
        return Err(Error::AllRatesZero);
    }
    let d_prime = p.gamma_34 + p.gamma_32 + 2.0 * (p.gamma_21 + p.lambda_pump);
    let tail = Vector4::new((p.gamma_21 + p.lambda_pump) / d, p.gamma_32 / d, 0.0, p.gamma_34 / d);
    let mut q = Matrix4::zeros();
    q[(1, 0)] = 1.0;
    for j in 1..4 {
        q.set_column(j, &tail);
    }
    Ok(ConditionalMatrix { q, d, d_prime })
}

/// Stationary distribution of a column-stochastic matrix.
pub fn stationary_distribution(q: &Matrix4<f64>) -> Result<[f64; 4]> {
    let a = q - Matrix4::identity();
    let sv = a.singular_values();
    let largest = sv.max().max(1.0);
    if sv.iter().filter(|&&s| s <= 1e-12 * largest).count() > 1 {
        return Err(Error::DegenerateChain);
    }
    // replace one balance equation by the normalization
    let mut m = a;
    m.set_row(0, &nalgebra::RowVector4::repeat(1.0));
    let rhs = Vector4::new(1.0, 0.0, 0.0, 0.0);
    let x = m.lu().solve(&rhs).ok_or(Error::DegenerateChain)?;
    Ok([x[0], x[1], x[2], x[3]])
}

pub fn start_probabilities(q: &ConditionalMatrix) -> Result<[f64; 4]> {
    stationary_distribution(&q.q)
}

/// P(1) = (γ₂₁+Λ)/D′, P(2) = (γ₂₁+γ₃₂+Λ)/D′, P(3) = 0, P(4) = γ₃₄/D′.
pub fn closed_form_start_probabilities(p: &SchemeParams) -> Result<[f64; 4]> {
    let cm = q_matrix(p)?;
    let dp = cm.d_prime;
    Ok([
        (p.gamma_21 + p.lambda_pump) / dp,
        (p.gamma_21 + p.gamma_32 + p.lambda_pump) / dp,
        0.0,
        p.gamma_34 / dp,
    ])
}

/// ∫₀^∞ |c_ij(τ)|² dτ in units of γ₂₁⁻¹.
///
/// Uses the eigen-sum when the eigenbasis of H_NH is well conditioned and
/// falls back to quadrature otherwise.
pub fn amplitude_integral(p: &SchemeParams, i: Level, j: Level) -> Result<f64> {
    if i != j && !coupled(p, i, j) {
        return Ok(0.0);
    }
    match EigenDecomposition::new(&build_h_nh(p)) {
        Some(eig) if eig.condition <= CONDITION_LIMIT => eigen_sum(&eig, i, j),
        _ => amplitude_integral_quadrature(p, i, j, QUADRATURE_RTOL),
    }
}

/// Eigen-sum Σ_{k,l} a_k a_l* / (i(λ_k − λ_l*)) with a_k = V[j,k] V⁻¹[k,i].
pub fn amplitude_integral_eigen(p: &SchemeParams, i: Level, j: Level) -> Result<f64> {
    let eig = EigenDecomposition::new(&build_h_nh(p)).ok_or(Error::SingularSystem)?;
    eigen_sum(&eig, i, j)
}

fn eigen_sum(eig: &EigenDecomposition, i: Level, j: Level) -> Result<f64> {
    let a: [Complex64; 4] = std::array::from_fn(|k| eig.vectors[(j.index(), k)] * eig.inverse[(k, i.index())]);
    let a_max = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if a_max == 0.0 {
        return Ok(0.0);
    }
    let scale = eig.values.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut sum = ZERO;
    for k in 0..4 {
        if a[k].norm() <= 1e-10 * a_max {
            continue;
        }
        if eig.values[k].im > -1e-14 * scale {
            return Err(Error::DivergentIntegral { from: i, to: j });
        }
        for l in 0..4 {
            if a[l].norm() <= 1e-10 * a_max {
                continue;
            }
            let z = eig.values[k] - eig.values[l].conj();
            sum += a[k] * a[l].conj() / (I * z);
        }
    }
    Ok(sum.re.max(0.0))
}

/// Composite Gauss–Kronrod quadrature of |c_ij|² along the propagated state.
///
/// Panels of fixed width are marched until the remaining integral is
/// provably below `rel_tol` times the accumulated value, using
/// ∫_T^∞ G_j |c_ij|² ≤ ‖ψ(T)‖² (or the slowest eigenvalue decay when
/// G_j = 0). The panel width is halved until the Kronrod error estimate
/// meets `rel_tol`.
pub fn amplitude_integral_quadrature(p: &SchemeParams, i: Level, j: Level, rel_tol: f64) -> Result<f64> {
    if i != j && !coupled(p, i, j) {
        return Ok(0.0);
    }
    let h = build_h_nh(p);
    let g_j = departure_rates(p).as_array()[j.index()];
    let tail_rate = if g_j > 0.0 {
        g_j
    } else {
        let slowest = nalgebra::Schur::new(h).eigenvalues().map(|ev| ev.iter().map(|z| -z.im).fold(f64::INFINITY, f64::min));
        match slowest {
            Some(k) if k > 0.0 => 2.0 * k,
            _ => return Err(Error::DivergentIntegral { from: i, to: j }),
        }
    };
    let norm1 = (0..4).map(|c| h.column(c).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let rule = Gk15::default();
    let mut width = 1.0 / norm1.max(1e-3);
    for _ in 0..8 {
        let (value, err) = march(&h, &rule, i, j, width, tail_rate, rel_tol)?;
        if err <= rel_tol * value || value == 0.0 {
            return Ok(value);
        }
        width *= 0.5;
    }
    Err(Error::QuadratureFailure { estimate: f64::NAN })
}

fn march(
    h: &ComplexMatrix4,
    rule: &Gk15,
    i: Level,
    j: Level,
    width: f64,
    tail_rate: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    let node_props: Vec<ComplexMatrix4> = rule.points(0.0, width).iter().map(|&t| (h * (-I * t)).exp()).collect();
    let step = (h * (-I * width)).exp();
    let row = j.index();
    let mut psi = basis(i.index());
    let mut total = 0.0;
    let mut err = 0.0;
    for _ in 0..MAX_PANELS {
        let values: [f64; 15] = std::array::from_fn(|k| (node_props[k].row(row) * psi)[0].norm_sqr());
        let (v, e) = rule.apply(0.0, width, &values);
        total += v;
        err += e;
        psi = step * psi;
        let tail = psi.norm_squared() / tail_rate;
        if tail <= 1e-2 * rel_tol * total || psi.norm_squared() < 1e-300 {
            return Ok((total, err + tail));
        }
    }
    Err(Error::QuadratureFailure { estimate: psi.norm_squared() / tail_rate })
}

/// P(i, j) = P(i) · G_j · ∫|c_ij|² with the closed-form P(i).
///
/// Periods never start in |3⟩ and never end in a level without a departing
/// channel, so those entries are exactly zero.
pub fn period_probability(p: &SchemeParams, i: Level, j: Level) -> Result<f64> {
    let g_j = departure_rates(p).as_array()[j.index()];
    let start = closed_form_start_probabilities(p)?[i.index()];
    if start == 0.0 || g_j == 0.0 {
        return Ok(0.0);
    }
    Ok(start * g_j * amplitude_integral(p, i, j)?)
}

/// Λ_th = γ₂₁²/(γ₃₂ − γ₂₁), above which P(2,1) > P(1,2). `None` when
/// γ₃₂ ≤ γ₂₁ and one-photon gain is impossible.
pub fn one_photon_gain_threshold(p: &SchemeParams) -> Option<f64> {
    (p.gamma_32 > p.gamma_21).then(|| p.gamma_21 * p.gamma_21 / (p.gamma_32 - p.gamma_21))
}

/// ⟨ΔN_p⟩ = P(2,1) + P(4,1) − P(1,2) − P(1,3).
pub fn mean_probe_change_semianalytic(p: &SchemeParams) -> Result<f64> {
    Ok(period_table(p)?.mean_delta_np())
}

/// Start probabilities and period probabilities for every (i, j).
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodTable {
    pub p_start: [f64; 4],
    /// `pairs[i-1][j-1]` = P(i, j).
    pub pairs: [[f64; 4]; 4],
}

impl PeriodTable {
    pub fn pair(&self, i: Level, j: Level) -> f64 {
        self.pairs[i.index()][j.index()]
    }

    pub fn mean_delta_np(&self) -> f64 {
        use Level::*;
        self.pair(Two, One) + self.pair(Four, One) - self.pair(One, Two) - self.pair(One, Three)
    }

    /// Σ_{i,j} P(i, j); one when every period ends in a jump.
    pub fn total(&self) -> f64 {
        self.pairs.iter().flatten().sum()
    }
}

fn table_from_starts(p: &SchemeParams, p_start: [f64; 4]) -> Result<PeriodTable> {
    let g = departure_rates(p).as_array();
    let mut pairs = [[0.0; 4]; 4];
    for i in Level::ALL {
        for j in Level::ALL {
            let (s, gj) = (p_start[i.index()], g[j.index()]);
            if s != 0.0 && gj != 0.0 {
                pairs[i.index()][j.index()] = s * gj * amplitude_integral(p, i, j)?;
            }
        }
    }
    Ok(PeriodTable { p_start, pairs })
}

/// Period table with the closed-form start probabilities.
pub fn period_table(p: &SchemeParams) -> Result<PeriodTable> {
    table_from_starts(p, closed_form_start_probabilities(p)?)
}

/// Jump chain with the full amplitude integrals:
/// Q(t/s) = Σ over channels k landing in t of Γ_k ∫|c_{s, from_k}|².
///
/// Column s is the distribution of the next start level given a period that
/// starts in s. Fails with [`Error::DegenerateChain`] when some reachable
/// start level can be trapped forever (for instance |4⟩ with Ω_w = 0).
pub fn exact_jump_chain(p: &SchemeParams) -> Result<Matrix4<f64>> {
    let channels = jump_channels(p);
    let mut q = Matrix4::zeros();
    for s in Level::ALL {
        if s == Level::Three {
            continue;
        }
        for ch in &channels {
            if ch.rate > 0.0 {
                q[(ch.to_level.index(), s.index())] += ch.rate * amplitude_integral(p, s, ch.from_level)?;
            }
        }
        let sum: f64 = q.column(s.index()).sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::DegenerateChain);
        }
    }
    // periods never start in |3⟩; give it the column of |2⟩ so the chain
    // stays stochastic without affecting the stationary distribution
    let col2 = q.column(1).into_owned();
    q.set_column(2, &col2);
    Ok(q)
}

/// Period table with start probabilities from [`exact_jump_chain`].
pub fn exact_period_table(p: &SchemeParams) -> Result<PeriodTable> {
    let pi = stationary_distribution(&exact_jump_chain(p)?)?;
    table_from_starts(p, pi)
}

/// Closed-form results with the validity diagnostic attached.
#[derive(Debug, Clone, PartialEq)]
pub struct SemianalyticSummary {
    pub table: PeriodTable,
    pub mean_delta_np: f64,
    pub threshold: Option<f64>,
    pub validity: ValidityReport,
}

pub fn summarize(p: &SchemeParams) -> Result<SemianalyticSummary> {
    let table = period_table(p)?;
    Ok(SemianalyticSummary {
        mean_delta_np: table.mean_delta_np(),
        table,
        threshold: one_photon_gain_threshold(p),
        validity: validity_check(p),
    })
}
