//! Observables, fidelities, phonon distributions, and the analytic
//! Jaynes-Cummings reference used by the validation suites.

use ndarray::Array1;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{BasisSpec, OperatorMatrix, StateVector, HERMITIAN_TOL};
use crate::linalg;
use crate::models::QrmSpec;

/// State overlap `|<psi|phi>|^2`, clamped to `[0, 1]`.
pub fn fidelity(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    let ov = psi.inner(phi)?;
    Ok(ov.norm_sqr().clamp(0.0, 1.0))
}

/// Phonon-number distribution `p(n) = sum_spins |amp(spins, n)|^2`.
pub fn phonon_distribution(psi: &StateVector, basis: &BasisSpec) -> Result<Vec<f64>> {
    if psi.dim() != basis.dim() {
        return Err(Error::dim_mismatch("phonon distribution", basis.dim(), psi.dim()));
    }
    let mut p = vec![0.0; basis.boson_dim()];
    for (idx, amp) in psi.amplitudes().iter().enumerate() {
        let (_, n) = basis.split(idx);
        p[n] += amp.norm_sqr();
    }
    Ok(p)
}

/// Mean phonon number of a distribution.
pub fn mean_phonon(distribution: &[f64]) -> f64 {
    distribution
        .iter()
        .enumerate()
        .map(|(n, &p)| n as f64 * p)
        .sum()
}

fn phase_fix(mut state: StateVector) -> StateVector {
    let amplitudes = state.amplitudes();
    let mut best = 0usize;
    let mut best_mag = 0.0f64;
    for (i, a) in amplitudes.iter().enumerate() {
        let m = a.norm_sqr();
        if m > best_mag {
            best_mag = m;
            best = i;
        }
    }
    let pivot = amplitudes[best];
    if pivot.norm() == 0.0 {
        return state;
    }
    let phase = pivot / pivot.norm();
    let fixed = state.amplitudes().mapv(|a| a / phase);
    state = StateVector::new(fixed);
    state
}

/// Lowest eigenpair by full diagonalization, phase-fixed so the
/// largest-magnitude amplitude is real positive.
pub fn exact_ground_state(h: &OperatorMatrix) -> Result<(f64, StateVector)> {
    exact_ground_state_resolved(h, None)
}

/// Like [`exact_ground_state`], breaking near-degeneracies (gap below
/// `1e-10` on the spectral scale) toward the even-parity combination when a
/// parity operator is supplied.
pub fn exact_ground_state_resolved(
    h: &OperatorMatrix,
    parity: Option<&OperatorMatrix>,
) -> Result<(f64, StateVector)> {
    let dense = h.to_dense_array()?;
    let dev = h.hermiticity_deviation();
    if dev > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian { max_dev: dev });
    }
    let (vals, vecs) = linalg::eigh(&dense);
    let dim = vals.len();
    let ground = StateVector::new(vecs.column(0).to_owned());
    let energy = vals[0];

    let spectral_scale = (vals[dim - 1] - vals[0]).abs().max(1.0);
    let tie = dim > 1 && (vals[1] - vals[0]).abs() < 1e-10 * spectral_scale;
    let resolved = match (tie, parity) {
        (true, Some(parity_op)) => {
            // project each degenerate candidate onto the even sector and keep
            // the larger surviving component
            let partner = StateVector::new(vecs.column(1).to_owned());
            let mut best: Option<StateVector> = None;
            let mut best_norm = -1.0;
            for candidate in [&ground, &partner] {
                let projected = StateVector::superposition(&[
                    (C64::new(0.5, 0.0), candidate),
                    (C64::new(0.5, 0.0), &parity_op.apply(candidate)?),
                ])?;
                let norm = projected.norm();
                if norm > best_norm {
                    best_norm = norm;
                    best = Some(projected);
                }
            }
            best.expect("two candidates examined").normalized()?
        }
        _ => ground,
    };
    Ok((energy, phase_fix(resolved)))
}

/// Per-time observable record of a trajectory.
#[derive(Clone, Debug, Serialize)]
pub struct ObservableRecord {
    /// `<sigma_z>` for each spin site.
    pub sigma_z: Vec<f64>,
    /// Phonon-number distribution `p(n)`.
    pub phonon: Vec<f64>,
    /// `<a_dag a>`, identical to the first moment of `phonon`.
    pub mean_phonon: f64,
    /// Z2 parity expectation.
    pub parity: f64,
    pub fidelity_vs_reference: Option<f64>,
}

/// Time grid plus per-time observables, with the provenance of whatever
/// produced it.
#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub records: Vec<ObservableRecord>,
    pub provenance: String,
}

impl Trajectory {
    /// Assemble observable records from normalized states on a time grid,
    /// optionally scoring each state against a reference trajectory.
    pub fn from_states(
        basis: &BasisSpec,
        t_grid: &[f64],
        states: &[StateVector],
        reference: Option<&[StateVector]>,
        provenance: String,
    ) -> Result<Self> {
        if states.len() != t_grid.len() {
            return Err(Error::dim_mismatch("trajectory states", t_grid.len(), states.len()));
        }
        if let Some(r) = reference {
            if r.len() != t_grid.len() {
                return Err(Error::dim_mismatch("reference states", t_grid.len(), r.len()));
            }
        }
        let mut records = Vec::with_capacity(states.len());
        for (k, state) in states.iter().enumerate() {
            if state.dim() != basis.dim() {
                return Err(Error::dim_mismatch("trajectory state", basis.dim(), state.dim()));
            }
            let norm_sq: f64 = state.amplitudes().iter().map(|a| a.norm_sqr()).sum();
            if (norm_sq - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!(
                    "trajectory state at index {k} has norm^2 = {norm_sq}, expected 1"
                )));
            }

            let mut sigma_z = vec![0.0; basis.n_spins()];
            let mut phonon = vec![0.0; basis.boson_dim()];
            let mut parity = 0.0;
            for (idx, amp) in state.amplitudes().iter().enumerate() {
                let p = amp.norm_sqr();
                if p == 0.0 {
                    continue;
                }
                let (bits, n) = basis.split(idx);
                phonon[n] += p;
                let excitations = n + (bits as u32).count_ones() as usize;
                parity += if excitations % 2 == 0 { p } else { -p };
                for (site, sz) in sigma_z.iter_mut().enumerate() {
                    *sz += if basis.spin_excited(bits, site) { p } else { -p };
                }
            }
            let fidelity_vs_reference = match reference {
                Some(r) => Some(fidelity(&r[k], state)?),
                None => None,
            };
            records.push(ObservableRecord {
                sigma_z,
                phonon: phonon.clone(),
                mean_phonon: mean_phonon(&phonon),
                parity,
                fidelity_vs_reference,
            });
        }
        Ok(Trajectory {
            t: t_grid.to_vec(),
            records,
            provenance,
        })
    }

    /// Smallest fidelity-vs-reference over the trajectory, if recorded.
    pub fn min_fidelity(&self) -> Option<f64> {
        self.records
            .iter()
            .filter_map(|r| r.fidelity_vs_reference)
            .min_by(f64::total_cmp)
    }
}

/// States under the analytic Jaynes-Cummings solution, assembled per
/// excitation manifold. The truncated top manifold (the lone `|e, n_max>`
/// state) evolves as the free phase it carries in the truncated model, so
/// this agrees with dense evolution of the built JC Hamiltonian.
pub fn jc_reference_states(
    spec: &QrmSpec,
    psi0: &StateVector,
    t_grid: &[f64],
    basis: &BasisSpec,
) -> Result<Vec<StateVector>> {
    if basis.n_spins() != 1 {
        return Err(Error::invalid("JC reference needs a single-spin basis"));
    }
    if psi0.dim() != basis.dim() {
        return Err(Error::dim_mismatch("JC reference input", basis.dim(), psi0.dim()));
    }
    let (omega0, omega, g) = (spec.omega0, spec.omega, spec.g);
    let n_max = basis.n_max();

    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let mut amps: Array1<C64> = Array1::zeros(basis.dim());

        // N = 0 manifold: |g, 0>
        let idx_g0 = basis.index(0, 0);
        amps[idx_g0] = psi0.amplitudes()[idx_g0] * (C64::new(0.0, 1.0) * (omega0 / 2.0) * t).exp();

        // top singlet: |e, n_max>
        let idx_top = basis.index(1, n_max);
        let e_top = omega0 / 2.0 + omega * n_max as f64;
        amps[idx_top] = psi0.amplitudes()[idx_top] * (C64::new(0.0, -1.0) * e_top * t).exp();

        // paired manifolds N = 1..=n_max spanned by (|g, N>, |e, N-1>)
        for n_exc in 1..=n_max {
            let idx_g = basis.index(0, n_exc);
            let idx_e = basis.index(1, n_exc - 1);
            let cg = psi0.amplitudes()[idx_g];
            let ce = psi0.amplitudes()[idx_e];
            if cg.norm_sqr() == 0.0 && ce.norm_sqr() == 0.0 {
                continue;
            }
            let diag_g = -omega0 / 2.0 + omega * n_exc as f64;
            let diag_e = omega0 / 2.0 + omega * (n_exc as f64 - 1.0);
            let mean = 0.5 * (diag_g + diag_e);
            let half_det = 0.5 * (diag_g - diag_e); // -(omega0 - omega)/2
            let coupling = g * (n_exc as f64).sqrt();
            let rabi = (half_det * half_det + coupling * coupling).sqrt();

            // exp(-i H t) = e^{-i mean t} [cos(R t) I - i sin(R t)/R (H - mean I)]
            let phase = (C64::new(0.0, -1.0) * mean * t).exp();
            let (cos_part, sinc) = if rabi == 0.0 {
                (1.0, t)
            } else {
                ((rabi * t).cos(), (rabi * t).sin() / rabi)
            };
            let m_i = C64::new(0.0, -1.0) * sinc;
            let new_g = phase * (cg * cos_part + m_i * (half_det * cg + coupling * ce));
            let new_e = phase * (ce * cos_part + m_i * (coupling * cg - half_det * ce));
            amps[idx_g] = new_g;
            amps[idx_e] = new_e;
        }
        out.push(StateVector::new(amps));
    }
    Ok(out)
}

/// Trajectory form of [`jc_reference_states`].
pub fn jc_reference_trajectory(
    spec: &QrmSpec,
    psi0: &StateVector,
    t_grid: &[f64],
    basis: &BasisSpec,
) -> Result<Trajectory> {
    let states = jc_reference_states(spec, psi0, t_grid, basis)?;
    let provenance = serde_json::to_string(&serde_json::json!({
        "model": "jc_analytic",
        "spec": spec,
    }))
    .expect("spec serializes");
    Trajectory::from_states(basis, t_grid, &states, None, provenance)
}
