//! Fixed-step integration of the hybrid Hamilton equations.
//!
//! Two schemes are provided: a Strang splitting whose quantum sub-step is the
//! exact propagator at frozen `q` (norm-exact, second order) and classical RK4
//! on the real coordinates `(q, p, x, y)` (fourth order, norm drifts).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bracket::HybridObservable;
use crate::error::{Error, Result};
use crate::model::{ClassicalPoint, HybridHamiltonianSpec, HybridState};
use crate::scalar::{cplx, creal, Real, C};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Strang,
    Rk4,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig<T: Real> {
    pub method: Method,
    pub dt: T,
    pub t_final: T,
    pub output_stride: usize,
    /// Renormalize `w` after every RK4 step. Off by default: norm drift is a
    /// diagnostic of integrator error.
    pub renormalize: bool,
    /// Keep the global phase rate `(q dH/dq + p dH/dp) / 2` in the quantum
    /// equation instead of gauging it away.
    pub gauge_phase: bool,
}

impl<T: Real> IntegratorConfig<T> {
    pub fn new(method: Method, dt: T, t_final: T, output_stride: usize) -> Self {
        Self {
            method,
            dt,
            t_final,
            output_stride,
            renormalize: false,
            gauge_phase: false,
        }
    }

    /// Number of steps; `t_final` must be an integer multiple of `dt` and the
    /// step count a multiple of `output_stride`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::InvalidConfig(
                "dt must be positive and finite".into(),
            ));
        }
        if !(self.t_final >= T::zero()) || !self.t_final.is_finite() {
            return Err(Error::InvalidConfig(
                "t_final must be non-negative and finite".into(),
            ));
        }
        if self.output_stride == 0 {
            return Err(Error::InvalidConfig(
                "output_stride must be at least 1".into(),
            ));
        }
        if self.t_final == T::zero() {
            return Ok(0);
        }
        if self.dt > self.t_final {
            return Err(Error::InvalidConfig("dt exceeds t_final".into()));
        }
        let ratio = self.t_final / self.dt;
        let n = ratio.round();
        if (ratio - n).abs() > T::lit(1e-9) * ratio {
            return Err(Error::InvalidConfig(
                "t_final is not a multiple of dt".into(),
            ));
        }
        let n = n
            .to_usize()
            .ok_or_else(|| Error::InvalidConfig("too many steps".into()))?;
        if n % self.output_stride != 0 {
            return Err(Error::InvalidConfig(format!(
                "output_stride {} does not divide the step count {n}",
                self.output_stride
            )));
        }
        Ok(n)
    }
}

/// Recorded samples of a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<HybridState<T>>,
    pub energies: Vec<T>,
    pub norms: Vec<T>,
    /// `observables[r][j]`: value of observable `j` at record `r`.
    pub observables: Vec<Vec<T>>,
}

impl<T: Real> TrajectoryRecord<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&HybridState<T>> {
        self.states.last()
    }
}

fn kick<T: Real>(
    spec: &HybridHamiltonianSpec<T>,
    state: &mut HybridState<T>,
    tau: T,
) -> Result<()> {
    let (dhdq, _) = spec.classical_gradients(state)?;
    for (p, g) in state.classical.p.iter_mut().zip(dhdq) {
        *p -= g * tau;
    }
    Ok(())
}

fn drift<T: Real>(spec: &HybridHamiltonianSpec<T>, state: &mut HybridState<T>, tau: T) {
    let m = spec.classical().params.mass;
    let ClassicalPoint { q, p } = &mut state.classical;
    for (x, &v) in q.iter_mut().zip(p.iter()) {
        *x += v / m * tau;
    }
}

fn check_step<T: Real>(dt: T) -> Result<()> {
    if dt == T::zero() || !dt.is_finite() {
        return Err(Error::InvalidParameter(
            "step must be finite and non-zero".into(),
        ));
    }
    Ok(())
}

fn strang<T: Real>(
    spec: &HybridHamiltonianSpec<T>,
    state: &HybridState<T>,
    dt: T,
    gauge: bool,
) -> Result<HybridState<T>> {
    check_step(dt)?;
    let half = dt / T::two();
    let mut s = state.clone();
    kick(spec, &mut s, half)?;
    drift(spec, &mut s, half);
    let mut h = spec.effective_quantum_hamiltonian(&s.classical.q)?;
    if gauge {
        let g = spec.gauge_phase_term(&s)?;
        h = h.add_scaled(g, &crate::quantum::HermitianOperator::identity(h.dim()))?;
    }
    let u = h.unitary_propagator(dt, spec.hbar())?;
    s.omega = s.omega.apply_unitary(&u);
    drift(spec, &mut s, half);
    kick(spec, &mut s, half)?;
    Ok(s)
}

/// One Strang step: half kick, half drift, exact quantum step at the
/// midpoint `q`, half drift, half kick. A negative `dt` runs the scheme
/// backward; the composition is symmetric, so this inverts a forward step.
pub fn step_strang<T: Real>(
    spec: &HybridHamiltonianSpec<T>,
    state: &HybridState<T>,
    dt: T,
) -> Result<HybridState<T>> {
    strang(spec, state, dt, false)
}

struct Derivative<T: Real> {
    dq: Vec<T>,
    dp: Vec<T>,
    dw: DVector<C<T>>,
}

fn derivative<T: Real>(
    spec: &HybridHamiltonianSpec<T>,
    state: &HybridState<T>,
    gauge: bool,
) -> Result<Derivative<T>> {
    let rhs = spec.eom_rhs(state)?;
    let mut dw = rhs.domega;
    if gauge {
        let g = spec.gauge_phase_term(state)?;
        dw -= state.omega.amplitudes() * cplx(T::zero(), g / spec.hbar());
    }
    Ok(Derivative {
        dq: rhs.dq,
        dp: rhs.dp,
        dw,
    })
}

fn advance<T: Real>(base: &HybridState<T>, d: &Derivative<T>, tau: T) -> HybridState<T> {
    let q = base
        .classical
        .q
        .iter()
        .zip(&d.dq)
        .map(|(&x, &v)| x + v * tau)
        .collect();
    let p = base
        .classical
        .p
        .iter()
        .zip(&d.dp)
        .map(|(&x, &v)| x + v * tau)
        .collect();
    let w = base.omega.amplitudes() + &d.dw * creal(tau);
    HybridState::new(ClassicalPoint { q, p }, base.omega.with_amplitudes(w))
}

fn rk4<T: Real>(
    spec: &HybridHamiltonianSpec<T>,
    state: &HybridState<T>,
    dt: T,
    gauge: bool,
    renormalize: bool,
) -> Result<HybridState<T>> {
    check_step(dt)?;
    let half = dt / T::two();
    let k1 = derivative(spec, state, gauge)?;
    let k2 = derivative(spec, &advance(state, &k1, half), gauge)?;
    let k3 = derivative(spec, &advance(state, &k2, half), gauge)?;
    let k4 = derivative(spec, &advance(state, &k3, dt), gauge)?;
    let six = T::lit(6.0);
    let w = dt / six;
    let combine = |a: &[T], b: &[T], c: &[T], d: &[T], base: &[T]| -> Vec<T> {
        (0..base.len())
            .map(|i| base[i] + w * (a[i] + T::two() * b[i] + T::two() * c[i] + d[i]))
            .collect()
    };
    let q = combine(&k1.dq, &k2.dq, &k3.dq, &k4.dq, &state.classical.q);
    let p = combine(&k1.dp, &k2.dp, &k3.dp, &k4.dp, &state.classical.p);
    let two = creal(T::two());
    let dw = (&k1.dw + &k2.dw * two + &k3.dw * two + &k4.dw) * creal(w);
    let mut amps = state.omega.amplitudes() + dw;
    if renormalize {
        let n = amps.norm();
        if n > T::zero() {
            amps /= creal(n);
        }
    }
    Ok(HybridState::new(
        ClassicalPoint { q, p },
        state.omega.with_amplitudes(amps),
    ))
}

/// One classical RK4 step on `(q, p, x, y)`, without renormalization.
pub fn step_rk4<T: Real>(
    spec: &HybridHamiltonianSpec<T>,
    state: &HybridState<T>,
    dt: T,
) -> Result<HybridState<T>> {
    rk4(spec, state, dt, false, false)
}

/// One step of the configured method with the configured options.
pub fn step<T: Real>(
    spec: &HybridHamiltonianSpec<T>,
    state: &HybridState<T>,
    config: &IntegratorConfig<T>,
) -> Result<HybridState<T>> {
    match config.method {
        Method::Strang => strang(spec, state, config.dt, config.gauge_phase),
        Method::Rk4 => rk4(
            spec,
            state,
            config.dt,
            config.gauge_phase,
            config.renormalize,
        ),
    }
}

fn record<T: Real>(
    spec: &HybridHamiltonianSpec<T>,
    traj: &mut TrajectoryRecord<T>,
    t: T,
    state: &HybridState<T>,
    observables: &[HybridObservable<T>],
) -> Result<()> {
    traj.times.push(t);
    traj.energies.push(spec.hamiltonian_value(state)?);
    traj.norms.push(state.omega.norm());
    traj.observables.push(
        observables
            .iter()
            .map(|f| f.evaluate(state))
            .collect::<Result<Vec<T>>>()?,
    );
    traj.states.push(state.clone());
    Ok(())
}

/// Integrates from `t = 0` to `t_final`, recording the initial state and every
/// `output_stride`-th step. Aborts with the step index on a non-finite state.
pub fn integrate<T: Real>(
    spec: &HybridHamiltonianSpec<T>,
    initial: &HybridState<T>,
    config: &IntegratorConfig<T>,
    observables: &[HybridObservable<T>],
) -> Result<TrajectoryRecord<T>> {
    let n = config.steps()?;
    if !initial.is_finite() {
        return Err(Error::NonFinite { step: 0 });
    }
    let mut traj = TrajectoryRecord {
        times: Vec::new(),
        states: Vec::new(),
        energies: Vec::new(),
        norms: Vec::new(),
        observables: Vec::new(),
    };
    record(spec, &mut traj, T::zero(), initial, observables)?;
    let mut state = initial.clone();
    for i in 1..=n {
        state = step(spec, &state, config)?;
        if !state.is_finite() {
            return Err(Error::NonFinite { step: i });
        }
        if i % config.output_stride == 0 {
            record(
                spec,
                &mut traj,
                T::from_count(i) * config.dt,
                &state,
                observables,
            )?;
        }
    }
    Ok(traj)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConservationReport<T: Real> {
    /// `max |H(t) - H(0)| / max(|H(0)|, eps)`.
    pub max_energy_drift: T,
    /// `max | |w(t)| - 1 |`.
    pub max_norm_drift: T,
}

pub fn conservation_report<T: Real>(traj: &TrajectoryRecord<T>) -> Result<ConservationReport<T>> {
    let e0 = *traj.energies.first().ok_or(Error::Empty)?;
    let denom = e0.abs().max(T::default_epsilon());
    let max_energy_drift = traj
        .energies
        .iter()
        .fold(T::zero(), |m, &e| m.max((e - e0).abs() / denom));
    let max_norm_drift = traj
        .norms
        .iter()
        .fold(T::zero(), |m, &n| m.max((n - T::one()).abs()));
    Ok(ConservationReport {
        max_energy_drift,
        max_norm_drift,
    })
}
