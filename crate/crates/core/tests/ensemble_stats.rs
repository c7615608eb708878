mod common;

use common::*;
use hybridsim_core::bracket::{HybridObservable, PhasePolynomial};
use hybridsim_core::ensemble::{
    estimate_observable, evolve_ensemble, sample, ClassicalSampler, HybridDensitySpec,
    QuantumSampler,
};
use hybridsim_core::integrator::{IntegratorConfig, Method};
use hybridsim_core::model::{
    ClassicalPoint, ClassicalSector, HybridHamiltonianSpec, ReferenceModel,
};
use hybridsim_core::potential::{OscillatorParams, Polynomial};
use hybridsim_core::quantum::{pauli, PauliAxis, QuantumState};
use hybridsim_core::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;

fn gaussian(
    mean: (f64, f64),
    cov: [f64; 4],
    quantum: QuantumSampler<f64>,
) -> HybridDensitySpec<f64> {
    HybridDensitySpec {
        classical: ClassicalSampler::Gaussian {
            mean: ClassicalPoint::one(mean.0, mean.1),
            covariance: DMatrix::from_row_slice(2, 2, &cov),
        },
        quantum,
    }
}

#[test]
fn gaussian_sample_moments() {
    let n = 4000;
    let cov = [0.25, 0.05, 0.05, 0.16];
    let density = gaussian(
        (1.0, -0.5),
        cov,
        QuantumSampler::Pure(QuantumState::basis(2, 0).unwrap()),
    );
    let s = sample(&density, n, 41).unwrap();
    let qs: Vec<f64> = s.iter().map(|x| x.classical.q[0]).collect();
    let ps: Vec<f64> = s.iter().map(|x| x.classical.p[0]).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let nf = n as f64;
    assert!((mean(&qs) - 1.0).abs() < 4.0 * cov[0].sqrt() / nf.sqrt());
    assert!((mean(&ps) + 0.5).abs() < 4.0 * cov[3].sqrt() / nf.sqrt());
    let (mq, mp) = (mean(&qs), mean(&ps));
    let c: f64 = qs
        .iter()
        .zip(&ps)
        .map(|(q, p)| (q - mq) * (p - mp))
        .sum::<f64>()
        / (nf - 1.0);
    // standard error of a sample covariance is about sqrt((s_q^2 s_p^2 + c^2) / n)
    assert!((c - 0.05).abs() < 4.0 * ((cov[0] * cov[3] + 0.05 * 0.05) / nf).sqrt());
}

#[test]
fn mixture_weights_are_respected() {
    let n = 5000;
    let up = QuantumState::basis(2, 0).unwrap();
    let down = QuantumState::basis(2, 1).unwrap();
    let density = HybridDensitySpec {
        classical: ClassicalSampler::Delta(ClassicalPoint::one(0.0, 0.0)),
        quantum: QuantumSampler::Mixture(vec![(0.3, up.clone()), (0.7, down)]),
    };
    let s = sample(&density, n, 42).unwrap();
    let frac = s.iter().filter(|x| x.omega == up).count() as f64 / n as f64;
    assert!((frac - 0.3).abs() < 4.0 / (n as f64).sqrt());
}

#[test]
fn seeds_are_reproducible() {
    let density = gaussian(
        (0.0, 0.0),
        [1.0, 0.0, 0.0, 1.0],
        QuantumSampler::Pure(QuantumState::basis(2, 1).unwrap()),
    );
    assert_eq!(
        sample(&density, 50, 7).unwrap(),
        sample(&density, 50, 7).unwrap()
    );
    assert_ne!(
        sample(&density, 50, 7).unwrap(),
        sample(&density, 50, 8).unwrap()
    );
}

#[test]
fn invalid_densities_rejected() {
    let bad_cov = gaussian(
        (0.0, 0.0),
        [1.0, 2.0, 2.0, 1.0],
        QuantumSampler::Pure(QuantumState::basis(2, 0).unwrap()),
    );
    assert!(matches!(bad_cov.validate(), Err(Error::InvalidDensity(_))));
    let asym = gaussian(
        (0.0, 0.0),
        [1.0, 0.1, 0.0, 1.0],
        QuantumSampler::Pure(QuantumState::basis(2, 0).unwrap()),
    );
    assert!(matches!(asym.validate(), Err(Error::InvalidDensity(_))));
    let weights = HybridDensitySpec {
        classical: ClassicalSampler::Delta(ClassicalPoint::one(0.0, 0.0)),
        quantum: QuantumSampler::Mixture(vec![(0.5, QuantumState::basis(2, 0).unwrap())]),
    };
    assert!(matches!(weights.validate(), Err(Error::InvalidDensity(_))));
    assert!(sample(&weights, 3, 0).is_err());
}

#[test]
fn decoupled_ensemble_matches_heisenberg_picture() {
    // mean of <sz1> over a mixture, propagated in the Heisenberg picture
    // A(t) = U^+ A U with an independently computed U
    let spec = ReferenceModel::<f64>::demo().to_spec().unwrap().decoupled();
    let mut rng = rng(43);
    let (w1, w2) = (random_state(&mut rng, 4), random_state(&mut rng, 4));
    let density = gaussian(
        (0.3, 0.1),
        [0.05, 0.0, 0.0, 0.05],
        QuantumSampler::Mixture(vec![(0.25, w1.clone()), (0.75, w2.clone())]),
    );
    let n = 400;
    let samples = sample(&density, n, 44).unwrap();
    let t = 1.5;
    let cfg = IntegratorConfig::new(Method::Strang, 1e-2, t, 150);
    let trajs = evolve_ensemble(&spec, &samples, &cfg).unwrap();
    let sz1 = pauli::<f64>(PauliAxis::Z, 1, 2).unwrap();
    let est = estimate_observable(&trajs, &HybridObservable::expectation(1, sz1.clone())).unwrap();

    let u = expm(&(spec.h0().matrix() * Complex64::new(0.0, -t / spec.hbar())));
    let heis = u.adjoint() * sz1.matrix() * &u;
    // per-sample values are exact; compare the ensemble mean with the same
    // samples evaluated in the Heisenberg picture
    let exact: f64 = samples
        .iter()
        .map(|s| {
            s.omega
                .amplitudes()
                .dotc(&(&heis * s.omega.amplitudes()))
                .re
        })
        .sum::<f64>()
        / n as f64;
    assert!((est.mean[1] - exact).abs() < 1e-12);
    // and the population mean is within the statistical error
    let ev = |w: &QuantumState<f64>| w.amplitudes().dotc(&(&heis * w.amplitudes())).re;
    let population = 0.25 * ev(&w1) + 0.75 * ev(&w2);
    assert!((est.mean[1] - population).abs() < 4.0 * est.stderr[1].max(1e-12));
}

#[test]
fn harmonic_gaussian_ensemble_follows_closed_form() {
    // V = m W^2 q^2 / 2, no couplings: every sample rotates in phase space
    let (m, w) = (1.3, 0.9);
    let spec = HybridHamiltonianSpec::new(
        pauli(PauliAxis::Z, 1, 1).unwrap(),
        Vec::new(),
        ClassicalSector {
            potential: Polynomial::harmonic(m, w),
            params: OscillatorParams::new(m, w, 1.0).unwrap(),
            dofs: 1,
        },
    )
    .unwrap();
    let (q0, p0) = (0.7, -0.2);
    let density = gaussian(
        (q0, p0),
        [0.04, 0.0, 0.0, 0.09],
        QuantumSampler::Pure(QuantumState::basis(2, 0).unwrap()),
    );
    let n = 2000;
    let t = 2.0;
    let trajs = evolve_ensemble(
        &spec,
        &sample(&density, n, 45).unwrap(),
        &IntegratorConfig::new(Method::Strang, 1e-3, t, 2000),
    )
    .unwrap();
    let q = estimate_observable(
        &trajs,
        &HybridObservable::classical(2, PhasePolynomial::q(1, 0)),
    )
    .unwrap();
    let p = estimate_observable(
        &trajs,
        &HybridObservable::classical(2, PhasePolynomial::p(1, 0)),
    )
    .unwrap();
    let (c, s) = ((w * t).cos(), (w * t).sin());
    let q_mean = q0 * c + p0 / (m * w) * s;
    let p_mean = p0 * c - m * w * q0 * s;
    assert!((q.mean[1] - q_mean).abs() < 4.0 * q.stderr[1]);
    assert!((p.mean[1] - p_mean).abs() < 4.0 * p.stderr[1]);
    // variances transform linearly: var q(t) = c^2 var q + s^2 var p / (m w)^2
    let var_q = c * c * 0.04 + s * s * 0.09 / (m * w).powi(2);
    let sample_var = q.stderr[1].powi(2) * n as f64;
    assert!((sample_var - var_q).abs() < 4.0 * var_q * (2.0 / (n as f64 - 1.0)).sqrt());
}
