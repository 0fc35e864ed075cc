//! Random scenario generation for property checks and self-tests.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;

use crate::covmodel::{build_local_scattering_with, CovRole, ScatteringParams, ScatteringQuadrature};
use crate::linalg::db_to_linear;
use crate::sysmodel::{Powers, SystemConfig};

/// Sampling ranges for [`random_config`]. Decibel ranges are drawn uniformly.
#[derive(Debug, Clone)]
pub struct ConfigRanges {
    pub beta_db: (f64, f64),
    pub user_power_db: (f64, f64),
    pub jammer_power_db: (f64, f64),
    pub sigma_phi_deg: (f64, f64),
    pub fading_std_db: f64,
    pub block_len: usize,
    /// Extra pilot samples beyond `K`, drawn from `0..=extra_pilots`.
    pub extra_pilots: usize,
}

impl Default for ConfigRanges {
    fn default() -> Self {
        ConfigRanges {
            beta_db: (-10.0, 10.0),
            user_power_db: (-10.0, 10.0),
            jammer_power_db: (-10.0, 20.0),
            sigma_phi_deg: (5.0, 20.0),
            fading_std_db: 2.0,
            block_len: 200,
            extra_pilots: 2,
        }
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Local-scattering covariance with random angle, gain and array fading.
pub fn random_scattering<R: Rng + ?Sized>(
    rng: &mut R,
    antennas: usize,
    ranges: &ConfigRanges,
    role: CovRole,
) -> crate::covmodel::CovarianceMatrix {
    let params = ScatteringParams {
        beta: db_to_linear(uniform(rng, ranges.beta_db)),
        theta: rng.random_range(-FRAC_PI_2..FRAC_PI_2),
        sigma_phi: uniform(rng, ranges.sigma_phi_deg).to_radians(),
        fading_std: ranges.fading_std_db,
        antennas,
    };
    let fading = params.draw_fading(rng);
    let quad = ScatteringQuadrature::for_array(antennas, params.sigma_phi);
    build_local_scattering_with(&params, Some(&fading), &quad, role)
        .expect("local scattering covariance is PSD by construction")
}

/// A random valid configuration with `antennas` antennas and `users` users.
pub fn random_config<R: Rng + ?Sized>(
    rng: &mut R,
    antennas: usize,
    users: usize,
    ranges: &ConfigRanges,
) -> SystemConfig {
    let r_users = (0..users)
        .map(|k| random_scattering(rng, antennas, ranges, CovRole::User(k)))
        .collect();
    let r_jammer = random_scattering(rng, antennas, ranges, CovRole::Jammer);
    let powers = Powers {
        p_t: db_to_linear(uniform(rng, ranges.user_power_db)),
        p_d: db_to_linear(uniform(rng, ranges.user_power_db)),
        q_t: db_to_linear(uniform(rng, ranges.jammer_power_db)),
        q_d: db_to_linear(uniform(rng, ranges.jammer_power_db)),
    };
    let tau = users + rng.random_range(0..=ranges.extra_pilots);
    SystemConfig {
        antennas,
        block_len: ranges.block_len.max(tau + 1),
        tau,
        target: rng.random_range(0..users),
        powers,
        budgets: None,
        r_users,
        r_jammer,
    }
}
