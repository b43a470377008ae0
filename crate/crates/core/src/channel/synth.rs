use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::coupling::{build_coupling_matrix, CouplingModel};
use super::geometry::{array_response, path_loss_db, upa_positions, LinkGeometry, D0};
use super::scenario::Scenario;
use super::touchstone::load_touchstone;
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::multiport::{ScatteringMatrix, DEFAULT_Z0};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Link {
    Rt,
    At,
    Ra,
}

/// Where the RIS coupling block comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum CouplingSource {
    /// Parametric model anchored at the tabulated values for the scenario spacing.
    Table,
    Model(CouplingModel),
    /// A fixed block (e.g. imported from Touchstone) with its reference impedance.
    Matrix {
        s_aa: CMatrix,
        z0: f64,
    },
}

impl CouplingSource {
    /// Reads `coupling_file` when the scenario names one, otherwise uses the table.
    pub fn from_scenario(scenario: &Scenario) -> Result<Self> {
        match &scenario.coupling_file {
            None => Ok(Self::Table),
            Some(path) => {
                let data = load_touchstone(path)?;
                Ok(Self::Matrix { s_aa: data.matrix, z0: data.z0 })
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthesizedNetwork {
    pub s: ScatteringMatrix,
    pub geometry: LinkGeometry,
}

fn nlos(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    let scale = 0.5f64.sqrt();
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * scale, im * scale)
    })
}

/// One Rician transmission block scaled by its path gain.
///
/// The line-of-sight part is the outer product of the receive-side and
/// transmit-side steering vectors; the scattered part is i.i.d. `CN(0, 1)`.
pub fn rician_block(scenario: &Scenario, geometry: &LinkGeometry, link: Link, rng: &mut impl Rng) -> Result<CMatrix> {
    let lambda = scenario.wavelength;
    let d_ant = scenario.antenna_spacing_over_lambda * lambda;
    let d_ris = scenario.spacing();
    let m = scenario.m();
    let (rx_vec, tx_vec, dist, exponent) = match link {
        Link::Rt => (
            array_response(scenario.n_r, d_ant, lambda, geometry.phi_rt),
            array_response(scenario.n_t, d_ant, lambda, geometry.iota_t),
            geometry.d_rt,
            scenario.exponents.rt,
        ),
        Link::At => (
            array_response(m, d_ris, lambda, geometry.phi_t),
            array_response(scenario.n_t, d_ant, lambda, geometry.iota_a),
            geometry.d_at,
            scenario.exponents.at,
        ),
        Link::Ra => (
            array_response(scenario.n_r, d_ant, lambda, geometry.phi_ra),
            array_response(m, d_ris, lambda, geometry.iota_r),
            geometry.d_ra,
            scenario.exponents.ra,
        ),
    };
    let gain = 10f64.powf(path_loss_db(scenario.beta0_db, exponent, dist)? / 20.0);
    let kappa = scenario.rician_k;
    let los = &rx_vec * tx_vec.adjoint();
    let scattered = nlos(los.nrows(), los.ncols(), rng);
    let w_los = (kappa / (kappa + 1.0)).sqrt();
    let w_nlos = (1.0 / (kappa + 1.0)).sqrt();
    Ok((los * c(w_los, 0.0) + scattered * c(w_nlos, 0.0)) * c(gain, 0.0))
}

/// Builds the full network for one trial. Random draws happen in a fixed order:
/// receiver angle, then the RT, AT and RA scattered components.
pub fn synthesize(scenario: &Scenario, coupling: &CouplingSource, rng: &mut impl Rng) -> Result<SynthesizedNetwork> {
    scenario.validate()?;
    let angle: f64 = rng.random::<f64>() * 2.0 * PI;
    let r = scenario.rx_radius;
    let rx = [scenario.rx_center[0] + r * angle.cos(), scenario.rx_center[1] + r * angle.sin(), scenario.rx_center[2]];
    let geometry = LinkGeometry::new(scenario.tx_pos, scenario.ris_center, rx);
    if !(geometry.min_distance() > D0) {
        return Err(Error::Domain(format!(
            "device separation {} m is below the reference distance",
            geometry.min_distance()
        )));
    }
    let (n_t, m, n_r) = (scenario.n_t, scenario.m(), scenario.n_r);
    let mut s = ScatteringMatrix::zeros(n_t, m, n_r);
    s.s_rt = rician_block(scenario, &geometry, Link::Rt, rng)?;
    if scenario.direct_link_blocked {
        s.s_rt.fill(c(0.0, 0.0));
    }
    s.s_at = rician_block(scenario, &geometry, Link::At, rng)?;
    s.s_ra = rician_block(scenario, &geometry, Link::Ra, rng)?;

    let positions = || upa_positions(&scenario.ris_center, scenario.m_side_x, scenario.m_side_y, scenario.spacing());
    match coupling {
        CouplingSource::Table => {
            let mut model = CouplingModel::from_table(
                scenario.spacing_over_lambda,
                scenario.wavelength,
                scenario.interpolate_coupling,
            )?;
            model.decay_exponent = scenario.coupling_decay;
            s.s_aa = build_coupling_matrix(&model, &positions(), scenario.wavelength)?;
            s.z0 = DEFAULT_Z0;
        }
        CouplingSource::Model(model) => {
            s.s_aa = build_coupling_matrix(model, &positions(), scenario.wavelength)?;
            s.z0 = DEFAULT_Z0;
        }
        CouplingSource::Matrix { s_aa, z0 } => {
            if s_aa.shape() != (m, m) {
                return Err(Error::Dimension(format!(
                    "coupling block is {:?}, scenario has {m} elements",
                    s_aa.shape()
                )));
            }
            s.s_aa = s_aa.clone();
            s.z0 = *z0;
        }
    }
    s.validate()?;
    Ok(SynthesizedNetwork { s, geometry })
}

/// [`synthesize`] with a ChaCha8 stream seeded from `scenario.seed`.
pub fn synthesize_seeded(scenario: &Scenario) -> Result<SynthesizedNetwork> {
    let coupling = CouplingSource::from_scenario(scenario)?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    synthesize(scenario, &coupling, &mut rng)
}
