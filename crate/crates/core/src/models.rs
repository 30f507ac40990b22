//! Time-independent Hamiltonian builders: quantum Rabi, Jaynes-Cummings,
//! Dicke, the circuit-QED qubit-resonator model, and its two-term
//! digital-analog split.
//!
//! All frequencies are angular frequencies. Builders return
//! hermitian-tagged [`OperatorMatrix`] values over the caller's basis.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    commutator, embed, make_ladder, make_pauli, BasisSpec, OperatorMatrix, PauliAxis, Subsystem,
};

/// Spin-boson coupling axis of the Rabi coupling term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingAxis {
    X,
    Y,
}

impl CouplingAxis {
    fn pauli(self) -> PauliAxis {
        match self {
            CouplingAxis::X => PauliAxis::X,
            CouplingAxis::Y => PauliAxis::Y,
        }
    }
}

/// Quantum Rabi model parameters: `H = (omega0/2) sigma_z + omega n + g
/// sigma_axis (a + a_dag)`.
///
/// Negative frequencies are accepted (detuning differences can produce them)
/// and flagged by [`QrmSpec::is_exotic`] instead of being rejected.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QrmSpec {
    pub omega0: f64,
    pub omega: f64,
    pub g: f64,
    pub coupling_axis: CouplingAxis,
    pub n_max: usize,
}

impl QrmSpec {
    pub fn new(omega0: f64, omega: f64, g: f64, coupling_axis: CouplingAxis, n_max: usize) -> Self {
        QrmSpec {
            omega0,
            omega,
            g,
            coupling_axis,
            n_max,
        }
    }

    /// Negative simulated frequencies are allowed but worth surfacing.
    pub fn is_exotic(&self) -> bool {
        self.omega < 0.0 || self.omega0 < 0.0
    }

    pub fn basis(&self) -> Result<BasisSpec> {
        BasisSpec::single_spin(self.n_max)
    }
}

/// Dicke model parameters: `n_spins` two-level systems coupled to one mode,
/// with per-spin splittings and couplings. The homogeneous case is the one
/// the ion compiler accepts; inhomogeneous parameters are supported for
/// direct simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DickeSpec {
    pub omega: f64,
    pub omega_q: Vec<f64>,
    pub g: Vec<f64>,
    pub n_max: usize,
}

impl DickeSpec {
    pub fn homogeneous(n_spins: usize, omega: f64, omega_q: f64, g: f64, n_max: usize) -> Result<Self> {
        if n_spins < 1 {
            return Err(Error::invalid("Dicke model needs at least one spin"));
        }
        Ok(DickeSpec {
            omega,
            omega_q: vec![omega_q; n_spins],
            g: vec![g; n_spins],
            n_max,
        })
    }

    pub fn inhomogeneous(omega: f64, omega_q: Vec<f64>, g: Vec<f64>, n_max: usize) -> Result<Self> {
        if omega_q.is_empty() || omega_q.len() != g.len() {
            return Err(Error::invalid(format!(
                "per-spin parameter lengths disagree: {} splittings, {} couplings",
                omega_q.len(),
                g.len()
            )));
        }
        Ok(DickeSpec {
            omega,
            omega_q,
            g,
            n_max,
        })
    }

    pub fn n_spins(&self) -> usize {
        self.omega_q.len()
    }

    pub fn is_homogeneous(&self) -> bool {
        let wq0 = self.omega_q[0];
        let g0 = self.g[0];
        self.omega_q.iter().all(|&w| w == wq0) && self.g.iter().all(|&g| g == g0)
    }

    pub fn basis(&self) -> Result<BasisSpec> {
        BasisSpec::new(self.n_spins(), self.n_max)
    }
}

/// Circuit-QED qubit-resonator parameters, plus the rotating-frame and
/// per-step quantities used by the digital-analog split.
///
/// `omega_q1` / `omega_q2` are the per-step qubit splittings: step `i`
/// contributes `(omega_q_i / 2) sigma_z` to its analog block, and the
/// synthesized spin frequency is `omega_q1 - omega_q2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub omega_r: f64,
    pub omega_q: f64,
    pub g: f64,
    /// Rotating-frame frequency for the interaction picture.
    pub omega_tilde: f64,
    pub omega_q1: f64,
    pub omega_q2: f64,
    pub n_max: usize,
}

impl CircuitSpec {
    /// Resonator detuning in the rotating frame.
    pub fn delta_r_tilde(&self) -> f64 {
        self.omega_r - self.omega_tilde
    }

    /// Qubit detuning in the rotating frame.
    pub fn delta_q_tilde(&self) -> f64 {
        (self.omega_q - self.omega_tilde) / 2.0
    }

    /// Mode frequency of the synthesized Rabi model.
    pub fn omega_r_sim(&self) -> f64 {
        2.0 * self.delta_r_tilde()
    }

    /// Spin frequency of the synthesized Rabi model.
    pub fn omega_q_sim(&self) -> f64 {
        self.omega_q1 - self.omega_q2
    }

    pub fn basis(&self) -> Result<BasisSpec> {
        BasisSpec::single_spin(self.n_max)
    }
}

fn require_single_spin(basis: &BasisSpec, what: &str) -> Result<()> {
    if basis.n_spins() != 1 {
        return Err(Error::invalid(format!(
            "{what} needs a single-spin basis, got {} spins",
            basis.n_spins()
        )));
    }
    Ok(())
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Full-space number operator `a_dag a`.
pub fn number_operator(basis: &BasisSpec) -> OperatorMatrix {
    let (a, a_dag) = make_ladder(basis);
    let n = a_dag.matmul(&a).expect("ladder dims agree");
    embed(&n, Subsystem::Boson, basis).expect("boson op dims agree")
}

/// Total excitation number `a_dag a + sum_m (sigma_m^z + 1)/2`, the conserved
/// charge of the Jaynes-Cummings family.
pub fn excitation_number_operator(basis: &BasisSpec) -> OperatorMatrix {
    let mut total = number_operator(basis);
    let sz = make_pauli(PauliAxis::Z);
    let eye = OperatorMatrix::identity(2);
    for site in 0..basis.n_spins() {
        let pop = sz.add(&eye).expect("2x2").scale(real(0.5));
        let lifted = embed(&pop, Subsystem::Spin(site), basis).expect("spin op dims agree");
        total = total.add(&lifted).expect("same basis");
    }
    total
}

/// Z2 parity `exp{i pi [a_dag a + sum_m (sigma_m^z + 1)/2]}`: diagonal with
/// entries `(-1)^(n + excited spins)`.
pub fn parity_operator(basis: &BasisSpec) -> OperatorMatrix {
    let dim = basis.dim();
    let mut diag = Vec::with_capacity(dim);
    for idx in 0..dim {
        let (bits, n) = basis.split(idx);
        let excitations = n + (bits as u32).count_ones() as usize;
        let sign = if excitations % 2 == 0 { 1.0 } else { -1.0 };
        diag.push(real(sign));
    }
    OperatorMatrix::diagonal(&diag)
}

/// `H = (omega0/2) sigma_z + omega a_dag a + g sigma_axis (a + a_dag)`.
pub fn build_qrm(spec: &QrmSpec, basis: &BasisSpec) -> Result<OperatorMatrix> {
    require_single_spin(basis, "quantum Rabi model")?;
    let (a, a_dag) = make_ladder(basis);
    let sz = embed(&make_pauli(PauliAxis::Z), Subsystem::Spin(0), basis)?;
    let n = number_operator(basis);
    let x = embed(&a.add(&a_dag)?, Subsystem::Boson, basis)?;
    let pauli = embed(&make_pauli(spec.coupling_axis.pauli()), Subsystem::Spin(0), basis)?;

    let h = sz
        .scale(real(spec.omega0 / 2.0))
        .add(&n.scale(real(spec.omega)))?
        .add(&pauli.matmul(&x)?.scale(real(spec.g)))?;
    h.tag_hermitian()
}

/// `H = (omega0/2) sigma_z + omega a_dag a + g (sigma_+ a + sigma_- a_dag)`.
/// Commutes with the total excitation number.
pub fn build_jc(spec: &QrmSpec, basis: &BasisSpec) -> Result<OperatorMatrix> {
    require_single_spin(basis, "Jaynes-Cummings model")?;
    let (a, _) = make_ladder(basis);
    let sz = embed(&make_pauli(PauliAxis::Z), Subsystem::Spin(0), basis)?;
    let n = number_operator(basis);
    let sp = embed(&make_pauli(PauliAxis::Plus), Subsystem::Spin(0), basis)?;
    let a_full = embed(&a, Subsystem::Boson, basis)?;

    let exchange = sp.matmul(&a_full)?;
    let coupling = exchange.add(&exchange.dagger())?.scale(real(spec.g));
    let h = sz
        .scale(real(spec.omega0 / 2.0))
        .add(&n.scale(real(spec.omega)))?
        .add(&coupling)?;
    h.tag_hermitian()
}

/// Dicke Hamiltonian: mode energy, per-spin splittings, and the
/// Tavis-Cummings plus anti-Tavis-Cummings couplings
/// `sum_m g_m (a sigma_m^+ + H.c.) + sum_m g_m (a_dag sigma_m^+ + H.c.)`.
pub fn build_dicke(spec: &DickeSpec, basis: &BasisSpec) -> Result<OperatorMatrix> {
    if basis.n_spins() != spec.n_spins() {
        return Err(Error::dim_mismatch(
            "Dicke spin count",
            spec.n_spins(),
            basis.n_spins(),
        ));
    }
    let (a, a_dag) = make_ladder(basis);
    let x_boson = embed(&a.add(&a_dag)?, Subsystem::Boson, basis)?;
    let mut h = number_operator(basis).scale(real(spec.omega));
    for (site, (&wq, &gm)) in spec.omega_q.iter().zip(spec.g.iter()).enumerate() {
        let sz = embed(&make_pauli(PauliAxis::Z), Subsystem::Spin(site), basis)?;
        h = h.add(&sz.scale(real(wq / 2.0)))?;
        // (a + a_dag)(sigma_m^+ + sigma_m^-) collects both coupling terms
        let sx = embed(&make_pauli(PauliAxis::X), Subsystem::Spin(site), basis)?;
        h = h.add(&sx.matmul(&x_boson)?.scale(real(gm)))?;
    }
    h.tag_hermitian()
}

/// Qubit-resonator Hamiltonian
/// `H = omega_r a_dag a + (omega_q/2) sigma_z + g (a_dag sigma_- + a sigma_+)`.
/// Structurally the Jaynes-Cummings builder with relabeled parameters.
pub fn build_circuit_jc(spec: &CircuitSpec, basis: &BasisSpec) -> Result<OperatorMatrix> {
    let jc = QrmSpec::new(spec.omega_q, spec.omega_r, spec.g, CouplingAxis::X, spec.n_max);
    build_jc(&jc, basis)
}

/// The two analog blocks of the digital-analog split:
///
/// ```text
/// H1 = (omega_r_sim/2) a_dag a + (omega_q1/2) sigma_z + g (a_dag sigma_- + a sigma_+)
/// H2 = (omega_r_sim/2) a_dag a - (omega_q2/2) sigma_z + g (a_dag sigma_+ + a sigma_-)
/// ```
///
/// Their sum is the x-axis Rabi model with `omega0 = omega_q1 - omega_q2`
/// and `omega = omega_r_sim`.
pub fn build_h1_h2(spec: &CircuitSpec, basis: &BasisSpec) -> Result<(OperatorMatrix, OperatorMatrix)> {
    require_single_spin(basis, "digital-analog split")?;
    let (a, a_dag) = make_ladder(basis);
    let sz = embed(&make_pauli(PauliAxis::Z), Subsystem::Spin(0), basis)?;
    let n = number_operator(basis);
    let sp = embed(&make_pauli(PauliAxis::Plus), Subsystem::Spin(0), basis)?;
    let a_full = embed(&a, Subsystem::Boson, basis)?;
    let adag_full = embed(&a_dag, Subsystem::Boson, basis)?;

    let half_mode = n.scale(real(spec.omega_r_sim() / 2.0));

    let jc = sp.matmul(&a_full)?; // sigma_+ a
    let jc_coupling = jc.add(&jc.dagger())?.scale(real(spec.g));
    let h1 = half_mode
        .add(&sz.scale(real(spec.omega_q1 / 2.0)))?
        .add(&jc_coupling)?
        .tag_hermitian()?;

    let anti = sp.matmul(&adag_full)?; // sigma_+ a_dag
    let anti_coupling = anti.add(&anti.dagger())?.scale(real(spec.g));
    let h2 = half_mode
        .add(&sz.scale(real(-spec.omega_q2 / 2.0)))?
        .add(&anti_coupling)?
        .tag_hermitian()?;

    Ok((h1, h2))
}

/// Interaction-picture residual generator `G = alpha a_dag a + beta sigma_z`.
/// Everything the experiment measures commutes with it.
pub fn interaction_picture_residual(
    alpha: f64,
    beta: f64,
    basis: &BasisSpec,
) -> Result<OperatorMatrix> {
    require_single_spin(basis, "interaction-picture residual")?;
    let sz = embed(&make_pauli(PauliAxis::Z), Subsystem::Spin(0), basis)?;
    number_operator(basis)
        .scale(real(alpha))
        .add(&sz.scale(real(beta)))?
        .tag_hermitian()
}
