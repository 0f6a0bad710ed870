//! Samplers, the oracle computed from the true laws, and the Monte Carlo driver.
//!
//! The three study settings pair the ordinarily smooth `Beta21` and the super
//! smooth log-normal with a Pareto or log-normal error; see [`Setting`].

pub mod experiment;
pub mod oracle;
pub mod rng;

use serde::{Deserialize, Serialize};

use crate::density::DensitySpec;

pub use experiment::{run_experiment, ExperimentSpec, PenaltySource, ReplicateRecord, RunMode};
pub use oracle::{
    closed_form_theta, decomposition_check, lambda, mse_bound, product_density, theta_hat_double_sum, theta_k,
    theta_k_and_bias, true_theta, variance_bound_check, Decomposition, MseBound, ThetaK, VarianceBoundCheck,
};
pub use rng::{draw_replicate, sample_error, sample_signal, sample_y, Role, Substream};

/// Signal/error pairs of the simulation study, named by the smoothness of
/// signal then error (`os` ordinary, `ss` super).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    OsOs,
    SsOs,
    OsSs,
}

impl Setting {
    pub const ALL: [Setting; 3] = [Setting::OsOs, Setting::SsOs, Setting::OsSs];

    pub fn signal(self) -> DensitySpec {
        match self {
            Setting::OsOs | Setting::OsSs => DensitySpec::Beta21,
            Setting::SsOs => DensitySpec::STANDARD_LOG_NORMAL,
        }
    }

    pub fn error(self) -> DensitySpec {
        match self {
            Setting::OsOs | Setting::SsOs => DensitySpec::Pareto1,
            Setting::OsSs => DensitySpec::STANDARD_LOG_NORMAL,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Setting::OsOs => "os-os",
            Setting::SsOs => "ss-os",
            Setting::OsSs => "os-ss",
        }
    }
}
