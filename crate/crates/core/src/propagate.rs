//! Time-evolution engines: exact eigendecomposition evolution for
//! time-independent Hamiltonians, adaptive midpoint-exponential stepping for
//! time-dependent ones, and the schedule player for digital-analog sequences.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{OperatorMatrix, StateVector, HERMITIAN_TOL};
use crate::linalg;

/// Which engine a propagation request runs on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropagatorKind {
    Eigendecomposition,
    SteppedMidpoint,
    Trotter,
}

/// Stepped-propagation settings: the fidelity tolerance two successive
/// refinements must agree to, and how many halvings may be spent getting
/// there.
#[derive(Clone, Copy, Debug)]
pub struct Propagator {
    pub kind: PropagatorKind,
    pub tolerance: f64,
    pub max_refinements: u32,
}

impl Propagator {
    /// Midpoint-exponential stepping with the given refinement tolerance.
    pub fn stepped_midpoint(tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance <= 1e-3) {
            return Err(Error::invalid(format!(
                "propagator tolerance {tolerance:e} outside (0, 1e-3]"
            )));
        }
        Ok(Propagator {
            kind: PropagatorKind::SteppedMidpoint,
            tolerance,
            max_refinements: 20,
        })
    }

    pub fn with_max_refinements(mut self, max_refinements: u32) -> Result<Self> {
        if max_refinements > 20 {
            return Err(Error::invalid("max_refinements capped at 20"));
        }
        self.max_refinements = max_refinements;
        Ok(self)
    }
}

/// Eigendecomposition of a hermitian Hamiltonian, reusable across evolution
/// times. Doubles as the ground-state oracle.
pub struct EigenPropagator {
    values: Array1<f64>,
    vectors: Array2<C64>,
}

impl EigenPropagator {
    pub fn new(h: &OperatorMatrix) -> Result<Self> {
        let dense = h.to_dense_array()?;
        let dev = h.hermiticity_deviation();
        if dev > HERMITIAN_TOL * h.max_abs().max(1.0) {
            return Err(Error::NotHermitian { max_dev: dev });
        }
        let (values, vectors) = linalg::eigh(&dense);
        Ok(EigenPropagator { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn eigenvalues(&self) -> &Array1<f64> {
        &self.values
    }

    pub fn eigenvectors(&self) -> &Array2<C64> {
        &self.vectors
    }

    /// `psi(t) = V exp(-i E t) V_dag psi0`.
    pub fn evolve(&self, psi0: &StateVector, t: f64) -> Result<StateVector> {
        if psi0.dim() != self.dim() {
            return Err(Error::dim_mismatch("evolve", self.dim(), psi0.dim()));
        }
        let vdag_psi = self.vectors.t().mapv(|x| x.conj()).dot(psi0.amplitudes());
        let phased = Array1::from_iter(
            vdag_psi
                .iter()
                .zip(self.values.iter())
                .map(|(c, &e)| c * (C64::new(0.0, -1.0) * e * t).exp()),
        );
        Ok(StateVector::new(self.vectors.dot(&phased)))
    }

    /// States at every grid time, reusing the decomposition.
    pub fn states(&self, psi0: &StateVector, t_grid: &[f64]) -> Result<Vec<StateVector>> {
        t_grid.iter().map(|&t| self.evolve(psi0, t)).collect()
    }
}

/// `psi(t) = exp(-i H t) psi0` by eigendecomposition. `H` must be hermitian.
pub fn evolve_static(h: &OperatorMatrix, psi0: &StateVector, t: f64) -> Result<StateVector> {
    EigenPropagator::new(h)?.evolve(psi0, t)
}

fn infidelity(a: &StateVector, b: &StateVector) -> f64 {
    match a.inner(b) {
        Ok(ov) => (1.0 - ov.norm_sqr()).max(0.0),
        Err(_) => 1.0,
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.len() < 2 {
        return Err(Error::invalid("time grid needs at least two points"));
    }
    for w in t_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invalid(format!(
                "time grid not strictly increasing at t = {}",
                w[0]
            )));
        }
    }
    Ok(())
}

/// One stepped pass with a fixed number of substeps per grid interval.
/// Each step applies the exponential of the interval-midpoint Hamiltonian,
/// so every step is unitary by construction.
pub fn evolve_timedep_fixed<F>(
    h_of_t: F,
    psi0: &StateVector,
    t_grid: &[f64],
    substeps: usize,
) -> Result<Vec<StateVector>>
where
    F: Fn(f64) -> Result<OperatorMatrix>,
{
    check_grid(t_grid)?;
    let mut psi = psi0.amplitudes().clone();
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(StateVector::new(psi.clone()));
    for w in t_grid.windows(2) {
        let dt = (w[1] - w[0]) / substeps as f64;
        for j in 0..substeps {
            let t_mid = w[0] + (j as f64 + 0.5) * dt;
            let h = h_of_t(t_mid)?;
            let generator = h.dense_ref()?.mapv(|x| x * C64::new(0.0, -dt));
            let u = linalg::expm(&generator);
            psi = u.dot(&psi);
        }
        out.push(StateVector::new(psi.clone()));
    }
    Ok(out)
}

/// Midpoint-exponential stepping with adaptive halving: the substep count per
/// grid interval doubles until two successive passes agree in final-state
/// fidelity within `prop.tolerance`.
pub fn evolve_timedep<F>(
    h_of_t: F,
    psi0: &StateVector,
    t_grid: &[f64],
    prop: &Propagator,
) -> Result<Vec<StateVector>>
where
    F: Fn(f64) -> Result<OperatorMatrix>,
{
    if prop.kind != PropagatorKind::SteppedMidpoint {
        return Err(Error::invalid(
            "evolve_timedep drives the stepped-midpoint engine only",
        ));
    }
    check_grid(t_grid)?;

    let mut substeps = 1usize;
    let mut previous: Option<Vec<StateVector>> = None;
    let mut residual = f64::INFINITY;
    for _ in 0..=prop.max_refinements {
        let current = evolve_timedep_fixed(&h_of_t, psi0, t_grid, substeps)?;
        if let Some(prev) = &previous {
            residual = infidelity(
                prev.last().expect("nonempty grid"),
                current.last().expect("nonempty grid"),
            );
            if residual <= prop.tolerance {
                return Ok(current);
            }
        }
        previous = Some(current);
        substeps *= 2;
    }
    Err(Error::RefinementExhausted {
        time: *t_grid.last().expect("nonempty grid"),
        achieved: residual,
        target: prop.tolerance,
        refinements: prop.max_refinements,
    })
}

/// One element of a digital-analog sequence: an analog evolution block or an
/// instantaneous digital rotation.
#[derive(Clone, Debug)]
pub enum ScheduleElement {
    Analog {
        generator: OperatorMatrix,
        duration: f64,
    },
    Rotation {
        unitary: OperatorMatrix,
    },
}

/// An ordered unit cell of schedule elements repeated `n_steps` times.
#[derive(Clone, Debug)]
pub struct TrotterSchedule {
    elements: Vec<ScheduleElement>,
    n_steps: usize,
}

impl TrotterSchedule {
    pub fn new(elements: Vec<ScheduleElement>, n_steps: usize) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::invalid("empty digital-analog schedule"));
        }
        if n_steps == 0 {
            return Err(Error::invalid("schedule repetition count must be >= 1"));
        }
        for el in &elements {
            if let ScheduleElement::Analog { duration, .. } = el {
                if *duration < 0.0 {
                    return Err(Error::invalid(format!(
                        "negative analog duration {duration}"
                    )));
                }
            }
        }
        Ok(TrotterSchedule { elements, n_steps })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn elements(&self) -> &[ScheduleElement] {
        &self.elements
    }
}

/// Apply the schedule: per repetition, each analog block contributes
/// `exp(-i H duration)` and each rotation applies as given.
pub fn trotter_evolve(schedule: &TrotterSchedule, psi0: &StateVector) -> Result<StateVector> {
    // precompute the unit-cell unitaries once
    let mut cell: Vec<Array2<C64>> = Vec::with_capacity(schedule.elements.len());
    for el in &schedule.elements {
        match el {
            ScheduleElement::Analog {
                generator,
                duration,
            } => {
                let gen = generator
                    .dense_ref()?
                    .mapv(|x| x * C64::new(0.0, -duration));
                cell.push(linalg::expm(&gen));
            }
            ScheduleElement::Rotation { unitary } => {
                cell.push(unitary.dense_ref()?.clone());
            }
        }
    }
    let mut psi = psi0.amplitudes().clone();
    for _ in 0..schedule.n_steps {
        for u in &cell {
            if u.ncols() != psi.len() {
                return Err(Error::dim_mismatch("schedule element", psi.len(), u.ncols()));
            }
            psi = u.dot(&psi);
        }
    }
    Ok(StateVector::new(psi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{embed, make_ladder, make_pauli, BasisSpec, PauliAxis, Subsystem};
    use crate::models::{
        build_h1_h2, build_jc, build_qrm, excitation_number_operator, CircuitSpec, CouplingAxis,
        QrmSpec,
    };

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn zero_time_is_identity() {
        let spec = QrmSpec::new(1.0, 1.0, 0.3, CouplingAxis::X, 6);
        let basis = spec.basis().unwrap();
        let h = build_qrm(&spec, &basis).unwrap();
        let psi0 = StateVector::basis_state(&basis, 1, 2).unwrap();
        let psi = evolve_static(&h, &psi0, 0.0).unwrap();
        assert!(infidelity(&psi0, &psi) < 1e-14);
    }

    #[test]
    fn evolve_static_rejects_non_hermitian() {
        let sp = make_pauli(PauliAxis::Plus);
        let psi0 = StateVector::new(Array1::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        assert!(matches!(
            evolve_static(&sp, &psi0, 1.0),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn jc_resonant_rabi_oscillation() {
        // from |e,0> on resonance: P_e(t) = cos^2(g t)
        let g = 0.04;
        let spec = QrmSpec::new(1.0, 1.0, g, CouplingAxis::X, 5);
        let basis = spec.basis().unwrap();
        let h = build_jc(&spec, &basis).unwrap();
        let psi0 = StateVector::basis_state(&basis, 1, 0).unwrap();
        let prop = EigenPropagator::new(&h).unwrap();
        let e0 = basis.index(1, 0);
        for k in 0..40 {
            let t = k as f64 * 2.0;
            let psi = prop.evolve(&psi0, t).unwrap();
            let p_e = psi.amplitudes()[e0].norm_sqr();
            let expected = (g * t).cos().powi(2);
            assert!(
                (p_e - expected).abs() < 1e-8,
                "t = {t}: P_e = {p_e}, expected {expected}"
            );
        }
    }

    #[test]
    fn zero_splitting_rabi_return_probability_matches_displaced_oscillator() {
        // omega0 = 0, x coupling, psi0 = |+>|0>: the boson follows a coherent
        // loop alpha(t) = (g/omega)(1 - e^{-i omega t}) per sigma_x sector, so
        // the return probability is exp(-|alpha(t)|^2).
        let (omega, g) = (1.0, 1.0);
        let n_max = 60; // >= 10 (2 g / omega)^2 + 20
        let spec = QrmSpec::new(0.0, omega, g, CouplingAxis::X, n_max);
        let basis = spec.basis().unwrap();
        let h = build_qrm(&spec, &basis).unwrap();
        let g0 = StateVector::basis_state(&basis, 0, 0).unwrap();
        let e0 = StateVector::basis_state(&basis, 1, 0).unwrap();
        let plus = StateVector::superposition(&[(c(1.0, 0.0), &g0), (c(1.0, 0.0), &e0)])
            .unwrap()
            .normalized()
            .unwrap();
        let prop = EigenPropagator::new(&h).unwrap();
        for k in 1..=8 {
            let t = k as f64 * std::f64::consts::TAU / 8.0;
            let psi = prop.evolve(&plus, t).unwrap();
            let return_prob = plus.inner(&psi).unwrap().norm_sqr();
            let alpha_sq = (g / omega).powi(2) * 2.0 * (1.0 - (omega * t).cos());
            let expected = (-alpha_sq).exp();
            assert!(
                (return_prob - expected).abs() < 1e-6,
                "t = {t}: return {return_prob}, oracle {expected}"
            );
        }
    }

    #[test]
    fn energy_is_conserved_along_static_evolution() {
        let spec = QrmSpec::new(0.8, 1.0, 1.1, CouplingAxis::Y, 14);
        let basis = spec.basis().unwrap();
        let h = build_qrm(&spec, &basis).unwrap();
        let psi0 = StateVector::basis_state(&basis, 1, 1).unwrap();
        let prop = EigenPropagator::new(&h).unwrap();
        let e_init = h.expectation(&psi0).unwrap().re;
        for t in [0.3, 1.7, 9.2] {
            let psi = prop.evolve(&psi0, t).unwrap();
            assert!((psi.norm() - 1.0).abs() < 1e-10);
            let e_t = h.expectation(&psi).unwrap().re;
            assert!((e_t - e_init).abs() < 1e-9);
        }
    }

    #[test]
    fn stepped_constant_hamiltonian_matches_static() {
        let spec = QrmSpec::new(1.0, 1.0, 0.5, CouplingAxis::X, 8);
        let basis = spec.basis().unwrap();
        let h = build_qrm(&spec, &basis).unwrap();
        let psi0 = StateVector::basis_state(&basis, 1, 0).unwrap();
        let t_grid: Vec<f64> = (0..=20).map(|k| k as f64 * 0.25).collect();
        let prop = Propagator::stepped_midpoint(1e-9).unwrap();
        let h_clone = h.clone();
        let states = evolve_timedep(move |_| Ok(h_clone.clone()), &psi0, &t_grid, &prop).unwrap();
        let exact = EigenPropagator::new(&h).unwrap();
        for (&t, psi) in t_grid.iter().zip(states.iter()) {
            let reference = exact.evolve(&psi0, t).unwrap();
            assert!(
                infidelity(&reference, psi) < 1e-9,
                "t = {t}: infidelity {}",
                infidelity(&reference, psi)
            );
        }
    }

    fn driven_two_level(t: f64) -> Result<OperatorMatrix> {
        let sz = make_pauli(PauliAxis::Z);
        let sx = make_pauli(PauliAxis::X);
        sz.add(&sx.scale(c(0.8 * (2.3 * t).cos(), 0.0)))
    }

    #[test]
    fn midpoint_stepping_is_second_order() {
        let psi0 = StateVector::new(Array1::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        let t_grid = vec![0.0, 3.0];
        let reference = evolve_timedep_fixed(driven_two_level, &psi0, &t_grid, 4096)
            .unwrap()
            .pop()
            .unwrap();
        let error_at = |substeps: usize| {
            let psi = evolve_timedep_fixed(driven_two_level, &psi0, &t_grid, substeps)
                .unwrap()
                .pop()
                .unwrap();
            infidelity(&reference, &psi).sqrt()
        };
        // halving the step reduces the state error ~4x
        let e64 = error_at(64);
        let e128 = error_at(128);
        let ratio = e64 / e128;
        assert!(
            (3.0..=5.0).contains(&ratio),
            "convergence ratio {ratio}, errors {e64:.3e}/{e128:.3e}"
        );
    }

    #[test]
    fn norm_drift_stays_at_roundoff_over_many_steps() {
        let psi0 = StateVector::new(Array1::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        let t_grid = vec![0.0, 10.0];
        let states = evolve_timedep_fixed(driven_two_level, &psi0, &t_grid, 100_000).unwrap();
        let drift = (states.last().unwrap().norm() - 1.0).abs();
        assert!(drift < 1e-10, "norm drift {drift:.3e}");
    }

    #[test]
    fn excitation_number_is_conserved_under_every_engine() {
        let spec = QrmSpec::new(1.0, 1.0, 0.07, CouplingAxis::X, 6);
        let basis = spec.basis().unwrap();
        let h = build_jc(&spec, &basis).unwrap();
        let n_exc = excitation_number_operator(&basis);
        let psi0 = StateVector::basis_state(&basis, 1, 1).unwrap();
        let expect0 = n_exc.expectation(&psi0).unwrap().re;

        let static_state = evolve_static(&h, &psi0, 7.3).unwrap();
        assert!((n_exc.expectation(&static_state).unwrap().re - expect0).abs() < 1e-9);

        let prop = Propagator::stepped_midpoint(1e-8).unwrap();
        let h_clone = h.clone();
        let stepped = evolve_timedep(move |_| Ok(h_clone.clone()), &psi0, &[0.0, 7.3], &prop)
            .unwrap()
            .pop()
            .unwrap();
        assert!((n_exc.expectation(&stepped).unwrap().re - expect0).abs() < 1e-9);

        let schedule = TrotterSchedule::new(
            vec![ScheduleElement::Analog {
                generator: h.clone(),
                duration: 7.3 / 16.0,
            }],
            16,
        )
        .unwrap();
        let trotter = trotter_evolve(&schedule, &psi0).unwrap();
        assert!((n_exc.expectation(&trotter).unwrap().re - expect0).abs() < 1e-9);
    }

    #[test]
    fn refinement_exhaustion_is_reported() {
        // an H oscillating far faster than the grid can resolve, with almost
        // no refinement budget
        let fast = |t: f64| -> Result<OperatorMatrix> {
            let sx = make_pauli(PauliAxis::X);
            Ok(sx.scale(c(50.0 * (1000.0 * t).cos(), 0.0)))
        };
        let psi0 = StateVector::new(Array1::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]));
        let prop = Propagator::stepped_midpoint(1e-12)
            .unwrap_or_else(|_| Propagator::stepped_midpoint(1e-3).unwrap());
        // 1e-12 is outside the allowed tolerance range; use the tightest legal
        // tolerance with a tiny refinement budget instead
        let prop = Propagator {
            tolerance: 1e-9,
            ..prop
        }
        .with_max_refinements(2)
        .unwrap();
        let err = evolve_timedep(fast, &psi0, &[0.0, 5.0], &prop).unwrap_err();
        assert!(matches!(err, Error::RefinementExhausted { .. }));
    }

    #[test]
    fn single_block_schedule_is_plain_evolution() {
        let spec = QrmSpec::new(0.9, 1.0, 0.4, CouplingAxis::X, 7);
        let basis = spec.basis().unwrap();
        let h = build_qrm(&spec, &basis).unwrap();
        let psi0 = StateVector::basis_state(&basis, 0, 1).unwrap();
        let schedule = TrotterSchedule::new(
            vec![ScheduleElement::Analog {
                generator: h.clone(),
                duration: 2.4,
            }],
            1,
        )
        .unwrap();
        let via_schedule = trotter_evolve(&schedule, &psi0).unwrap();
        let direct = evolve_static(&h, &psi0, 2.4).unwrap();
        assert!(infidelity(&direct, &via_schedule) < 1e-12);
    }

    fn usc_split() -> (CircuitSpec, BasisSpec) {
        let circuit = CircuitSpec {
            omega_r: 10.0,
            omega_q: 9.0,
            g: 1.0,
            omega_tilde: 9.5, // omega_r_sim = 1.0
            omega_q1: 0.5,
            omega_q2: -0.5,
            n_max: 20,
        };
        let basis = circuit.basis().unwrap();
        (circuit, basis)
    }

    fn qrm_digital_schedule(
        circuit: &CircuitSpec,
        basis: &BasisSpec,
        t_total: f64,
        n: usize,
    ) -> TrotterSchedule {
        let (h1, h2_target) = build_h1_h2(circuit, basis).unwrap();
        let _ = h2_target;
        // JC-form block for step 2, conjugated into the anti-JC block by the
        // interleaved x rotations
        let (a, _) = make_ladder(basis);
        let sz = embed(&make_pauli(PauliAxis::Z), Subsystem::Spin(0), basis).unwrap();
        let sp = embed(&make_pauli(PauliAxis::Plus), Subsystem::Spin(0), basis).unwrap();
        let a_full = embed(&a, Subsystem::Boson, basis).unwrap();
        let jc = sp.matmul(&a_full).unwrap();
        let h2_jc_form = crate::models::number_operator(basis)
            .scale(c(circuit.omega_r_sim() / 2.0, 0.0))
            .add(&sz.scale(c(circuit.omega_q2 / 2.0, 0.0)))
            .unwrap()
            .add(&jc.add(&jc.dagger()).unwrap().scale(c(circuit.g, 0.0)))
            .unwrap();

        let sx = embed(&make_pauli(PauliAxis::X), Subsystem::Spin(0), basis).unwrap();
        let rot_plus = crate::hilbert::matrix_exponential(
            &sx.scale(c(0.0, std::f64::consts::FRAC_PI_2)),
        )
        .unwrap();
        let rot_minus = crate::hilbert::matrix_exponential(
            &sx.scale(c(0.0, -std::f64::consts::FRAC_PI_2)),
        )
        .unwrap();

        let tau = t_total / n as f64;
        TrotterSchedule::new(
            vec![
                ScheduleElement::Analog {
                    generator: h1,
                    duration: tau,
                },
                ScheduleElement::Rotation { unitary: rot_plus },
                ScheduleElement::Analog {
                    generator: h2_jc_form,
                    duration: tau,
                },
                ScheduleElement::Rotation { unitary: rot_minus },
            ],
            n,
        )
        .unwrap()
    }

    #[test]
    fn rotated_schedule_equals_direct_h1_h2_product() {
        // the x rotations turn the JC-form block into the anti-JC block
        let (circuit, basis) = usc_split();
        let (h1, h2) = build_h1_h2(&circuit, &basis).unwrap();
        let psi0 = StateVector::basis_state(&basis, 0, 0).unwrap();
        let t_total = 1.0;
        let n = 8;
        let schedule = qrm_digital_schedule(&circuit, &basis, t_total, n);
        let via_rotations = trotter_evolve(&schedule, &psi0).unwrap();

        let tau = t_total / n as f64;
        let direct = TrotterSchedule::new(
            vec![
                ScheduleElement::Analog {
                    generator: h1,
                    duration: tau,
                },
                ScheduleElement::Analog {
                    generator: h2,
                    duration: tau,
                },
            ],
            n,
        )
        .unwrap();
        let via_direct = trotter_evolve(&direct, &psi0).unwrap();
        assert!(infidelity(&via_direct, &via_rotations) < 1e-12);
    }

    #[test]
    fn trotter_fidelity_improves_with_step_count() {
        // short enough that the doubling ladder is already convergent at n = 1
        let (circuit, basis) = usc_split();
        let (h1, h2) = build_h1_h2(&circuit, &basis).unwrap();
        let h_sum = h1.add(&h2).unwrap().tag_hermitian().unwrap();
        let psi0 = StateVector::basis_state(&basis, 0, 0).unwrap();
        let t_total = 0.125 * std::f64::consts::TAU / circuit.g;
        let exact = evolve_static(&h_sum, &psi0, t_total).unwrap();

        let mut last_fid = -1.0;
        for n in [1usize, 2, 4, 8, 16, 32, 64, 128] {
            let schedule = qrm_digital_schedule(&circuit, &basis, t_total, n);
            let psi = trotter_evolve(&schedule, &psi0).unwrap();
            let fid = exact.inner(&psi).unwrap().norm_sqr();
            assert!(
                fid >= last_fid - 1e-12,
                "fidelity dropped from {last_fid} to {fid} at n = {n}"
            );
            last_fid = fid;
        }
        assert!(last_fid > 0.999, "n = 128 fidelity only {last_fid}");
    }
}
