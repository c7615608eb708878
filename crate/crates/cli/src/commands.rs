//! Subcommand implementations. Each returns the text it would print so the
//! binary stays a thin dispatcher.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use hybridsim_core::bracket::{
    bracket_analytic, bracket_numeric_richardson, quadraticity_test, HybridObservable,
    PhasePolynomial, ProductFunction, Quadraticity, StateFunction, DEFAULT_STEP,
};
use hybridsim_core::ensemble::{estimate_observable, evolve_ensemble, sample};
use hybridsim_core::fullspace::FockSpace;
use hybridsim_core::integrator::{integrate, IntegratorConfig, Method, TrajectoryRecord};
use hybridsim_core::model::{ClassicalPoint, HybridState};
use hybridsim_core::potential::h_osc;
use hybridsim_core::quantum::{pauli, HermitianOperator, PauliAxis, QuantumState};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{DensityConfig, Loaded, RunConfig, RENORMALIZE_WARN};
use crate::output::{fmt_f64, write_atomic, Csv};
use crate::CliError;

/// Tolerance for truncation-limited full-space checks.
pub const VERIFY_TOL: f64 = 1e-7;
/// Tolerance on the lifted fluctuation excess.
pub const CONSTRAINT_TOL: f64 = 1e-8;
/// Default Fock truncation for `verify`.
pub const DEFAULT_LEVELS: usize = 64;
/// Random points for the consistency checks, drawn with `|alpha|^2 <= 10`.
pub const VERIFY_POINTS: usize = 100;
const VERIFY_SEED: u64 = 0x005e_ed0f_c0de;
const MAX_ALPHA_SQ: f64 = 10.0;

fn load(config: &Path) -> Result<Loaded, CliError> {
    let loaded = RunConfig::load(config)?.validate()?;
    if loaded.renormalization > RENORMALIZE_WARN {
        eprintln!(
            "warning: initial omega renormalized (| |w0| - 1 | = {:.3e})",
            loaded.renormalization
        );
    }
    Ok(loaded)
}

fn trajectory_csv(loaded: &Loaded, traj: &TrajectoryRecord<f64>) -> Csv {
    let k = loaded.spec.dofs();
    let d = loaded.spec.quantum_dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=k).map(|i| format!("q{i}")));
    header.extend((1..=k).map(|i| format!("p{i}")));
    header.extend((1..=d).map(|j| format!("re_w{j}")));
    header.extend((1..=d).map(|j| format!("im_w{j}")));
    header.push("H_t".into());
    header.push("norm".into());
    header.extend(loaded.observables.iter().map(|(n, _)| n.clone()));
    let mut csv = Csv::new(&header);
    for r in 0..traj.len() {
        let s = &traj.states[r];
        let w = s.omega.amplitudes();
        let row = std::iter::once(traj.times[r])
            .chain(s.classical.q.iter().copied())
            .chain(s.classical.p.iter().copied())
            .chain(w.iter().map(|z| z.re))
            .chain(w.iter().map(|z| z.im))
            .chain([traj.energies[r], traj.norms[r]])
            .chain(traj.observables[r].iter().copied());
        csv.row(row);
    }
    csv
}

/// `hybridsim run`: integrate one trajectory and write the CSV.
pub fn run(config: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let loaded = load(config)?;
    let observables: Vec<HybridObservable<f64>> =
        loaded.observables.iter().map(|(_, o)| o.clone()).collect();
    let traj = integrate(
        &loaded.spec,
        &loaded.initial,
        &loaded.integrator,
        &observables,
    )?;
    let csv = trajectory_csv(&loaded, &traj);
    let target = out
        .map(Path::to_path_buf)
        .or(loaded.output.as_ref().map(Into::into));
    write_atomic(target.as_deref(), csv.as_str())
}

/// One PASS/FAIL line of a report.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: max residual {:.3e} (tol {:.0e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tolerance
        )
    }
}

fn random_state(rng: &mut ChaCha8Rng, d: usize) -> QuantumState<f64> {
    loop {
        let v = DVector::from_fn(d, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        if let Ok(s) = QuantumState::normalize(v) {
            return s;
        }
    }
}

/// Options of the full-space verification.
#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub levels: usize,
    /// Negate the first coupling in the full-space layer only.
    pub flip_coupling: bool,
}

/// Runs the full-space checks; returns the individual results.
pub fn verify_checks(loaded: &Loaded, opts: VerifyOptions) -> Result<Vec<Check>, CliError> {
    let spec = &loaded.spec;
    if !(spec.hbar() > 0.0) {
        return Err(CliError::Validation("verifier requires ħ>0".into()));
    }
    if spec.dofs() != 1 {
        return Err(CliError::Validation(
            "verifier supports exactly one classical degree of freedom".into(),
        ));
    }
    let params = spec.classical().params;
    let fock =
        FockSpace::new(opts.levels, params).map_err(|e| CliError::Validation(e.to_string()))?;
    let composite_spec = if opts.flip_coupling {
        spec.with_negated_coupling(0)?
    } else {
        spec.clone()
    };

    let d = spec.quantum_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED);
    let mut points = vec![loaded.initial.clone()];
    let alpha_scale = (2.0 * params.mass * params.omega * params.hbar).sqrt();
    while points.len() < VERIFY_POINTS {
        let r = (MAX_ALPHA_SQ * rng.random::<f64>()).sqrt();
        let phi = 2.0 * PI * rng.random::<f64>();
        let q = r * phi.cos() * alpha_scale / (params.mass * params.omega);
        let p = r * phi.sin() * alpha_scale;
        points.push(HybridState::new(
            ClassicalPoint::one(q, p),
            random_state(&mut rng, d),
        ));
    }

    let short = IntegratorConfig::new(Method::Strang, 0.01, 2.0, 10);
    let traj = integrate(spec, &loaded.initial, &short, &[])?;

    let mut worst: Option<(f64, usize)> = None;
    for s in points.iter().chain(&traj.states) {
        let (q, p) = (s.classical.q[0], s.classical.p[0]);
        let tail = fock.tail_weight(q, p);
        if tail > hybridsim_core::fullspace::TAIL_TOL || !tail.is_finite() {
            let suggested = fock.suggested_levels(q, p);
            if worst.is_none_or(|(_, n)| suggested > n) {
                worst = Some((tail, suggested));
            }
        }
    }
    if let Some((tail, suggested)) = worst {
        return Err(CliError::Truncation {
            levels: opts.levels,
            tail,
            suggested,
        });
    }

    let h = fock.build_composite_hamiltonian(&composite_spec)?;
    let ops = [
        fock.position(),
        fock.momentum(),
        fock.position_polynomial(&hybridsim_core::potential::Polynomial::monomial(1.0, 2)),
        fock.position_momentum_anticommutator(),
    ];
    let id = DMatrix::<Complex64>::identity(d, d);
    let (mut energy, mut effective) = (0.0_f64, 0.0_f64);
    let mut comm = [0.0_f64; 4];
    for s in &points {
        let (q, p) = (s.classical.q[0], s.classical.p[0]);
        let c = fock.compose_constrained_state(q, p, &s.omega)?;
        let full = h.quadratic_form(c.amplitudes())?;
        energy = energy.max((full - spec.hamiltonian_value_with(s, true)?).abs());

        let partial = fock.partial_expectation(&h, q, p)?;
        let scalar = h_osc(q, p, &spec.classical().potential, &params, true)?;
        let reduced = spec.effective_quantum_hamiltonian(&[q])?;
        let diff = partial.matrix() - reduced.matrix() - &id * Complex64::new(scalar, 0.0);
        effective = effective.max(diff.iter().map(|z| z.norm()).fold(0.0, f64::max));

        let h_alpha = fock.build_h_alpha(&h, q, p)?;
        for (slot, a) in comm.iter_mut().zip(&ops) {
            *slot = slot.max(fock.commutator_vanishing_check(a, &h_alpha, &c)?);
        }
    }

    let mut excess = 0.0_f64;
    for s in &traj.states {
        let c = fock.compose_constrained_state(s.classical.q[0], s.classical.p[0], &s.omega)?;
        excess = excess.max(fock.fluctuation_functional(&c)?.abs());
    }

    let check = |name, value, tolerance| Check {
        name,
        value,
        tolerance,
    };
    Ok(vec![
        check("energy-consistency", energy, VERIFY_TOL),
        check("effective-hamiltonian", effective, VERIFY_TOL),
        check("commutator-q", comm[0], VERIFY_TOL),
        check("commutator-p", comm[1], VERIFY_TOL),
        check("commutator-q2", comm[2], VERIFY_TOL),
        check("commutator-qp", comm[3], VERIFY_TOL),
        check("constraint-preservation", excess, CONSTRAINT_TOL),
    ])
}

/// `hybridsim verify`.
pub fn verify(config: &Path, opts: VerifyOptions) -> Result<String, CliError> {
    let loaded = load(config)?;
    let checks = verify_checks(&loaded, opts)?;
    let mut out = String::new();
    for c in &checks {
        writeln!(out, "{}", c.line()).unwrap();
    }
    if checks.iter().all(Check::passed) {
        Ok(out)
    } else {
        print!("{out}");
        Err(CliError::Failed("verification failed".into()))
    }
}

fn single_qubit_state(q: f64, p: f64, w: &QuantumState<f64>) -> HybridState<f64> {
    HybridState::new(ClassicalPoint::one(q, p), w.clone())
}

fn fmt_vec(v: &DVector<Complex64>) -> String {
    let cells: Vec<String> = v
        .iter()
        .map(|z| format!("({:+.6}{:+.6}i)", z.re, z.im))
        .collect();
    format!("[{}]", cells.join(", "))
}

/// `hybridsim bracket-demo`: shows that the bracket of two
/// expectation-type observables leaves the class of quadratic forms.
pub fn bracket_demo(seed: u64) -> Result<String, CliError> {
    let hbar = 1.0;
    let sz = pauli::<f64>(PauliAxis::Z, 1, 1)?;
    let f1 = HybridObservable::weighted(PhasePolynomial::q(1, 0), sz.clone())?;
    let f2 = HybridObservable::weighted(PhasePolynomial::p(1, 0), sz.clone())?;
    let b12 = bracket_analytic(&f1, &f2, hbar)?;
    let b21 = bracket_analytic(&f2, &f1, hbar)?;
    let mut out = String::new();
    writeln!(out, "f1 = q <sz>, f2 = p <sz>, hbar = {hbar}").unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..3 {
        let q: f64 = rng.sample(StandardNormal);
        let p: f64 = rng.sample(StandardNormal);
        let s = single_qubit_state(q, p, &random_state(&mut rng, 2));
        let (v12, v21) = (b12.eval(&s)?, b21.eval(&s)?);
        let numeric = bracket_numeric_richardson(&f1, &f2, &s, DEFAULT_STEP * 10.0, hbar)?;
        let zsq = sz.expectation(&s.omega)?.powi(2);
        writeln!(
            out,
            "q={} p={} w={}: {{f1,f2}}={} numeric={} <sz>^2={} {{f2,f1}}={} sum={:.1e}",
            fmt_f64(q),
            fmt_f64(p),
            fmt_vec(s.omega.amplitudes()),
            fmt_f64(v12),
            fmt_f64(numeric),
            fmt_f64(zsq),
            fmt_f64(v21),
            v12 + v21
        )
        .unwrap();
    }

    let point = ClassicalPoint::one(0.7, -0.4);
    let result = quadraticity_test(&b12, &point, 2, 64, seed)?;
    let detected = match &result {
        Quadraticity::NotQuadratic { witness, defect } => {
            writeln!(
                out,
                "{{f1,f2}}: not_quadratic (parallelogram defect {})",
                fmt_f64(*defect)
            )
            .unwrap();
            writeln!(out, "  witness w1 = {}", fmt_vec(&witness.0)).unwrap();
            writeln!(out, "  witness w2 = {}", fmt_vec(&witness.1)).unwrap();
            true
        }
        Quadraticity::Quadratic => {
            writeln!(out, "{{f1,f2}}: quadratic (unexpected)").unwrap();
            false
        }
    };

    let expectation = HybridObservable::expectation(1, sz);
    let single = quadraticity_test(&expectation, &point, 2, 64, seed)?;
    writeln!(
        out,
        "<sz>: {}",
        if single.is_quadratic() {
            "quadratic"
        } else {
            "not_quadratic"
        }
    )
    .unwrap();

    // {q, p} = 1 everywhere; on the unit sphere this is <w|I|w>.
    let q = HybridObservable::classical(2, PhasePolynomial::q(1, 0));
    let p = HybridObservable::classical(2, PhasePolynomial::p(1, 0));
    let qp: Arc<dyn StateFunction<f64>> = Arc::new(bracket_analytic(&q, &p, hbar)?);
    let s = single_qubit_state(0.7, -0.4, &random_state(&mut rng, 2));
    let value = qp.eval(&s)?;
    let identity: Arc<dyn StateFunction<f64>> = Arc::new(HybridObservable::expectation(
        1,
        HermitianOperator::identity(2),
    ));
    let lifted = ProductFunction(qp, identity);
    let control = quadraticity_test(&lifted, &point, 2, 64, seed)?;
    writeln!(
        out,
        "control {{q,p}} = {}: constant, {} as {{q,p}} <w|I|w>",
        fmt_f64(value),
        if control.is_quadratic() {
            "quadratic"
        } else {
            "not_quadratic"
        }
    )
    .unwrap();

    if detected {
        Ok(out)
    } else {
        print!("{out}");
        Err(CliError::Failed("non-closure not detected".into()))
    }
}

/// `hybridsim ensemble`: per-time means and standard errors.
pub fn ensemble(
    config: &Path,
    density: &Path,
    n: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let loaded = load(config)?;
    let density_cfg: DensityConfig = crate::config::read_json(density)?;
    let density = density_cfg.build()?;
    if density.dofs() != loaded.spec.dofs() || density.quantum_dim() != loaded.spec.quantum_dim() {
        return Err(CliError::Density(format!(
            "density has {} classical dofs and quantum dimension {}, model has {} and {}",
            density.dofs(),
            density.quantum_dim(),
            loaded.spec.dofs(),
            loaded.spec.quantum_dim()
        )));
    }
    if n == 0 {
        return Err(CliError::Validation("--n must be at least 1".into()));
    }
    let samples = sample(&density, n, seed)?;
    let trajectories = evolve_ensemble(&loaded.spec, &samples, &loaded.integrator)?;

    let k = loaded.spec.dofs();
    let d = loaded.spec.quantum_dim();
    let mut named: Vec<(String, HybridObservable<f64>)> = Vec::new();
    for i in 0..k {
        named.push((
            format!("q{}", i + 1),
            HybridObservable::classical(d, PhasePolynomial::q(k, i)),
        ));
    }
    for i in 0..k {
        named.push((
            format!("p{}", i + 1),
            HybridObservable::classical(d, PhasePolynomial::p(k, i)),
        ));
    }
    named.extend(loaded.observables.iter().cloned());

    let mut header = vec!["t".to_string()];
    let mut columns = Vec::new();
    for (name, obs) in &named {
        header.push(format!("{name}_mean"));
        header.push(format!("{name}_stderr"));
        columns.push(estimate_observable(&trajectories, obs)?);
    }
    let mut csv = Csv::new(&header);
    for (r, &t) in trajectories[0].times.iter().enumerate() {
        csv.row(std::iter::once(t).chain(columns.iter().flat_map(|c| [c.mean[r], c.stderr[r]])));
    }
    let target = out
        .map(Path::to_path_buf)
        .or(loaded.output.as_ref().map(Into::into));
    write_atomic(target.as_deref(), csv.as_str())
}
