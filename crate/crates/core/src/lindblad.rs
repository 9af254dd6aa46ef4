//! Master-equation dynamics: dρ/dt = −i[H₀, ρ] + Σ_k Γ_k (C_k ρ C_k† − ½{C_k†C_k, ρ}).

use nalgebra::{SMatrix, SVector, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{build_h0, jump_channels, JumpChannel, Level};
use crate::linalg::{hermiticity_defect, ComplexMatrix4, I, ONE, ZERO};
use crate::scheme::SchemeParams;

pub type Superoperator = SMatrix<Complex64, 16, 16>;
type SuperVector = SVector<Complex64, 16>;

/// Hermitian, unit-trace 4×4 state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4(ComplexMatrix4);

impl DensityMatrix4 {
    pub const HERMITICITY_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-9;
    pub const POPULATION_TOL: f64 = 1e-10;

    /// Wraps a matrix after checking the density-matrix invariants.
    pub fn new(m: ComplexMatrix4) -> Result<Self> {
        let rho = Self(m);
        rho.check()?;
        Ok(rho)
    }

    /// Wraps without checks; intermediate integrator states use this.
    pub fn new_unchecked(m: ComplexMatrix4) -> Self {
        Self(m)
    }

    pub fn pure_level(level: Level) -> Self {
        let mut m = ComplexMatrix4::zeros();
        m[(level.index(), level.index())] = ONE;
        Self(m)
    }

    pub fn maximally_mixed() -> Self {
        Self(ComplexMatrix4::identity() * Complex64::new(0.25, 0.0))
    }

    pub fn matrix(&self) -> &ComplexMatrix4 {
        &self.0
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn element(&self, row: Level, col: Level) -> Complex64 {
        self.0[(row.index(), col.index())]
    }

    pub fn check(&self) -> Result<()> {
        let defect = hermiticity_defect(&self.0);
        if defect > Self::HERMITICITY_TOL {
            return Err(Error::InvariantViolation(format!("hermiticity defect {defect:e}")));
        }
        let drift = (self.trace() - ONE).norm();
        if drift > Self::TRACE_TOL {
            return Err(Error::InvariantViolation(format!("trace drift {drift:e}")));
        }
        for k in 0..4 {
            if self.0[(k, k)].re < -Self::POPULATION_TOL {
                return Err(Error::InvariantViolation(format!(
                    "population of level {} is {:e}",
                    k + 1,
                    self.0[(k, k)].re
                )));
            }
        }
        Ok(())
    }

    fn hermitized(m: ComplexMatrix4) -> ComplexMatrix4 {
        (m + m.adjoint()) * Complex64::new(0.5, 0.0)
    }
}

/// Generator of the master equation for one parameter set.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    h0: ComplexMatrix4,
    channels: [JumpChannel; 4],
}

impl Liouvillian {
    pub fn new(p: &SchemeParams) -> Self {
        Self { h0: build_h0(p), channels: jump_channels(p) }
    }

    pub fn apply(&self, rho: &ComplexMatrix4) -> ComplexMatrix4 {
        let mut out = (self.h0 * rho - rho * self.h0) * (-I);
        for ch in &self.channels {
            if ch.rate == 0.0 {
                continue;
            }
            let (f, t) = (ch.from_level.index(), ch.to_level.index());
            let half = 0.5 * ch.rate;
            // C ρ C† = ρ_ff |t⟩⟨t| ; C†C = |f⟩⟨f|
            out[(t, t)] += rho[(f, f)] * ch.rate;
            for k in 0..4 {
                out[(f, k)] -= rho[(f, k)] * half;
                out[(k, f)] -= rho[(k, f)] * half;
            }
        }
        out
    }

    /// Row-major vectorized form: `vec(ρ)[4a + b] = ρ_ab`.
    pub fn superoperator(&self) -> Superoperator {
        let mut l = Superoperator::zeros();
        for col in 0..16 {
            let mut e = ComplexMatrix4::zeros();
            e[(col / 4, col % 4)] = ONE;
            let image = self.apply(&e);
            for row in 0..16 {
                l[(row, col)] = image[(row / 4, row % 4)];
            }
        }
        l
    }
}

fn vectorize(m: &ComplexMatrix4) -> SuperVector {
    SuperVector::from_fn(|k, _| m[(k / 4, k % 4)])
}

fn unvectorize(v: &SuperVector) -> ComplexMatrix4 {
    ComplexMatrix4::from_fn(|a, b| v[4 * a + b])
}

/// Time derivative dρ/dt.
pub fn lindblad_rhs(rho: &DensityMatrix4, p: &SchemeParams) -> ComplexMatrix4 {
    Liouvillian::new(p).apply(rho.matrix())
}

/// Step-size and tolerance settings for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorControl {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for IntegratorControl {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, initial_step: 1e-3, min_step: 1e-13, max_step: f64::INFINITY }
    }
}

// Dormand–Prince 5(4) tableau; the generator is autonomous so the nodes are unused.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates from `rho0` over `[0, t_final]`, calling `observer` after every
/// accepted step (and once at t = 0).
pub fn evolve_observed<F>(
    rho0: &DensityMatrix4,
    p: &SchemeParams,
    t_final: f64,
    control: &IntegratorControl,
    mut observer: F,
) -> Result<DensityMatrix4>
where
    F: FnMut(f64, &DensityMatrix4),
{
    if !(t_final >= 0.0) {
        return Err(Error::InvalidParams(format!("t_final = {t_final} must be non-negative")));
    }
    p.validate()?;
    let liouvillian = Liouvillian::new(p);
    let mut y = *rho0.matrix();
    let mut t = 0.0;
    observer(t, rho0);
    if t_final == 0.0 {
        return Ok(*rho0);
    }

    let mut h = control.initial_step.min(t_final).min(control.max_step);
    let mut k = [ComplexMatrix4::zeros(); 7];
    k[0] = liouvillian.apply(&y);
    while t < t_final {
        let last = t + h >= t_final;
        if last {
            h = t_final - t;
        }
        for s in 1..7 {
            let mut stage = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                if A[s][j] != 0.0 {
                    stage += kj * Complex64::new(h * A[s][j], 0.0);
                }
            }
            k[s] = liouvillian.apply(&stage);
        }
        // With FSAL the 5th-order solution is the last stage argument.
        let mut y_new = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            if A[6][j] != 0.0 {
                y_new += kj * Complex64::new(h * A[6][j], 0.0);
            }
        }
        let mut err = 0.0f64;
        for idx in 0..16 {
            let (r, c) = (idx / 4, idx % 4);
            let mut e = ZERO;
            for (j, kj) in k.iter().enumerate() {
                e += kj[(r, c)] * E[j];
            }
            let scale = control.atol + control.rtol * y[(r, c)].norm().max(y_new[(r, c)].norm());
            err = err.max((e * h).norm() / scale);
        }

        if err <= 1.0 {
            t = if last { t_final } else { t + h };
            y = y_new;
            k[0] = k[6];
            observer(t, &DensityMatrix4(y));
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(control.max_step);
        if h < control.min_step && t < t_final {
            return Err(Error::IntegrationFailure { time: t, step: h });
        }
    }
    Ok(DensityMatrix4(y))
}

/// ρ(t_final) from an explicit adaptive Dormand–Prince integration.
pub fn evolve(
    rho0: &DensityMatrix4,
    p: &SchemeParams,
    t_final: f64,
    control: &IntegratorControl,
) -> Result<DensityMatrix4> {
    evolve_observed(rho0, p, t_final, control, |_, _| {})
}

/// States at each of the ascending `times`.
pub fn evolve_to_times(
    rho0: &DensityMatrix4,
    p: &SchemeParams,
    times: &[f64],
    control: &IntegratorControl,
) -> Result<Vec<DensityMatrix4>> {
    let mut out = Vec::with_capacity(times.len());
    let mut rho = *rho0;
    let mut t = 0.0;
    for &target in times {
        if target < t {
            return Err(Error::InvalidParams("sample times must be ascending".into()));
        }
        rho = evolve(&rho, p, target - t, control)?;
        t = target;
        out.push(rho);
    }
    Ok(out)
}

/// Relative size below which a Liouvillian singular value counts as zero.
const NULL_SINGULAR_TOL: f64 = 1e-11;

/// Unique stationary state from the 16×16 vectorized Liouvillian, with one
/// diagonal row replaced by the trace constraint.
pub fn steady_state(p: &SchemeParams) -> Result<DensityMatrix4> {
    p.validate()?;
    let dissipative = jump_channels(p).iter().any(|c| c.rate > 0.0);
    if !dissipative {
        return Err(Error::InvalidParams("steady state needs at least one nonzero rate".into()));
    }
    let l = Liouvillian::new(p).superoperator();

    let sv = SVD::new(l, false, false).singular_values;
    let smax = sv.max();
    let null_dim = sv.iter().filter(|&&s| s <= NULL_SINGULAR_TOL * smax).count();
    if null_dim > 1 {
        return Err(Error::MultipleSteadyStates { dimension: null_dim });
    }

    // Rows 4a + a sum to zero (trace preservation), so row 0 is redundant.
    let mut a = l;
    for col in 0..16 {
        a[(0, col)] = if col % 5 == 0 { ONE } else { ZERO };
    }
    let mut b = SuperVector::zeros();
    b[0] = ONE;
    let lu = a.lu();
    let mut x = lu.solve(&b).ok_or(Error::SingularSystem)?;
    // one round of iterative refinement
    let r = b - a * x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }

    let mut m = DensityMatrix4::hermitized(unvectorize(&x));
    let tr = m.trace();
    m /= tr;
    DensityMatrix4::new(m)
}

/// Largest entry of L(ρ); zero for an exact stationary state.
pub fn liouvillian_residual(rho: &DensityMatrix4, p: &SchemeParams) -> f64 {
    let l = Liouvillian::new(p).superoperator();
    (l * vectorize(rho.matrix())).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Probe response Im[ρ₁₂]/Ω_p, with ρ₁₂ = ⟨1|ρ|2⟩. Negative means
/// absorption, positive means amplification.
pub fn probe_response(rho: &DensityMatrix4, p: &SchemeParams) -> Result<f64> {
    if p.omega_p == 0.0 {
        return Err(Error::ZeroProbe);
    }
    Ok(rho.element(Level::One, Level::Two).im / p.omega_p)
}

/// Level populations clipped at zero.
pub fn populations(rho: &DensityMatrix4) -> Result<[f64; 4]> {
    let m = rho.matrix();
    let drift = (m.trace().re - 1.0).abs();
    if drift > 1e-6 {
        return Err(Error::InvariantViolation(format!("trace drift {drift:e} exceeds 1e-6")));
    }
    let mut pops = [0.0; 4];
    for (k, slot) in pops.iter_mut().enumerate() {
        *slot = m[(k, k)].re.max(0.0);
    }
    let sum: f64 = pops.iter().sum();
    if (sum - 1.0).abs() < 1e-9 {
        pops.iter_mut().for_each(|x| *x /= sum);
    }
    Ok(pops)
}

/// Largest deviation of the state from the density-matrix invariants:
/// (trace drift, hermiticity defect, most negative population).
pub fn hygiene(rho: &DensityMatrix4) -> (f64, f64, f64) {
    let m = rho.matrix();
    let min_pop = (0..4).map(|k| m[(k, k)].re).fold(f64::INFINITY, f64::min);
    ((m.trace() - ONE).norm(), hermiticity_defect(m), min_pop)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::scheme::{dimensionless_preset, hg_field_preset, HG_PUMP_US_INV};
    use approx::assert_relative_eq;

    fn rates_only() -> SchemeParams {
        SchemeParams { gamma_21: 1.0, gamma_32: 5.0, gamma_34: 10.0, lambda_pump: 0.3, ..Default::default() }
    }

    #[test]
    fn dark_level_four_is_stationary() {
        let d = lindblad_rhs(&DensityMatrix4::pure_level(Level::Four), &rates_only());
        assert_eq!(max_abs(&d), 0.0);
    }

    #[test]
    fn rate_equation_limit_from_level_three() {
        let p = rates_only();
        let d = lindblad_rhs(&DensityMatrix4::pure_level(Level::Three), &p);
        assert_relative_eq!(d[(1, 1)].re, p.gamma_32);
        assert_relative_eq!(d[(3, 3)].re, p.gamma_34);
        assert_relative_eq!(d[(2, 2)].re, -(p.gamma_32 + p.gamma_34));
        assert_eq!(d[(0, 0)].re, 0.0);
    }

    #[test]
    fn superoperator_matches_apply() {
        let p = SchemeParams { delta_p: 1.5, delta_s: -2.0, delta_w: 0.7, ..dimensionless_preset() };
        let liou = Liouvillian::new(&p);
        let rho = ComplexMatrix4::from_fn(|a, b| Complex64::new((a + 2 * b) as f64 * 0.1, a as f64 - b as f64));
        let direct = liou.apply(&rho);
        let via_super = unvectorize(&(liou.superoperator() * vectorize(&rho)));
        assert!(max_abs(&(direct - via_super)) < 1e-12);
    }

    #[test]
    fn evolve_zero_time_is_identity() {
        let rho0 = DensityMatrix4::pure_level(Level::Two);
        let out = evolve(&rho0, &dimensionless_preset(), 0.0, &IntegratorControl::default()).unwrap();
        assert_eq!(out, rho0);
    }

    #[test]
    fn evolve_rejects_negative_time() {
        let rho0 = DensityMatrix4::pure_level(Level::Two);
        assert!(evolve(&rho0, &dimensionless_preset(), -1.0, &IntegratorControl::default()).is_err());
    }

    #[test]
    fn step_underflow_reports_time() {
        let rho0 = DensityMatrix4::pure_level(Level::Two);
        let control = IntegratorControl { rtol: 1e-30, atol: 1e-300, min_step: 1e-3, ..Default::default() };
        match evolve(&rho0, &dimensionless_preset(), 1.0, &control) {
            Err(Error::IntegrationFailure { time, .. }) => assert!(time < 1.0),
            other => panic!("expected integration failure, got {other:?}"),
        }
    }

    #[test]
    fn degenerate_stationary_manifold() {
        let p = SchemeParams { gamma_21: 1.0, gamma_32: 5.0, gamma_34: 10.0, ..Default::default() };
        match steady_state(&p) {
            Err(Error::MultipleSteadyStates { dimension }) => assert!(dimension >= 2),
            other => panic!("expected degeneracy, got {other:?}"),
        }
    }

    #[test]
    fn no_weak_field_traps_population_in_level_four() {
        let p = SchemeParams { omega_w: 0.0, ..dimensionless_preset() };
        let pops = populations(&steady_state(&p).unwrap()).unwrap();
        assert!(pops[3] > 1.0 - 1e-9, "{pops:?}");
    }

    #[test]
    fn pump_turns_absorption_into_gain() {
        let (absorbing, _) = hg_field_preset().to_gamma21_units(crate::Units::UsInv).unwrap();
        let r0 = probe_response(&steady_state(&absorbing).unwrap(), &absorbing).unwrap();
        assert!(r0 < 0.0, "{r0}");

        let pumped = SchemeParams { lambda_pump: HG_PUMP_US_INV, ..hg_field_preset() };
        let (pumped, _) = pumped.to_gamma21_units(crate::Units::UsInv).unwrap();
        let rho = steady_state(&pumped).unwrap();
        let r1 = probe_response(&rho, &pumped).unwrap();
        assert!(r1 > 0.0, "{r1}");
        let pops = populations(&rho).unwrap();
        assert!(pops[1] < pops[0], "gain without inversion: {pops:?}");
    }

    #[test]
    fn real_state_has_zero_response() {
        let rho = DensityMatrix4::maximally_mixed();
        assert_eq!(probe_response(&rho, &dimensionless_preset()).unwrap(), 0.0);
        let p = SchemeParams { omega_p: 0.0, ..dimensionless_preset() };
        assert!(matches!(probe_response(&rho, &p), Err(Error::ZeroProbe)));
    }

    #[test]
    fn populations_of_mixed_state() {
        assert_eq!(populations(&DensityMatrix4::maximally_mixed()).unwrap(), [0.25; 4]);
        let bad = DensityMatrix4::new_unchecked(ComplexMatrix4::identity());
        assert!(populations(&bad).is_err());
        assert!(DensityMatrix4::new(ComplexMatrix4::identity()).is_err());
    }

    #[test]
    fn strong_weak_field_keeps_no_probe_inversion() {
        for omega_w in [20.0, 40.0, 80.0] {
            let p = SchemeParams { omega_w, ..dimensionless_preset() };
            let pops = populations(&steady_state(&p).unwrap()).unwrap();
            assert!(pops[0] > pops[1], "omega_w={omega_w}: {pops:?}");
        }
    }

    #[test]
    fn steady_state_residual_is_tiny() {
        let p = dimensionless_preset();
        let rho = steady_state(&p).unwrap();
        assert!(liouvillian_residual(&rho, &p) < 1e-10);
    }
}
