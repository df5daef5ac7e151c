//! The flaring model suite: state-level linear calibration, hierarchical
//! county calibration, five latent-GP time-series models, count and mixture
//! models, plus WAIC comparison, posterior predictive simulation, forecasting,
//! and percentile band summaries.

pub mod bands;
pub mod compare;
pub mod county;
pub mod data;
pub mod gmm;
pub mod gp_models;
pub mod negbin;
pub mod predictive;
pub mod state;

pub use flaretk_inference::Error;

pub use bands::{band_csv, default_band_edges, percentile_bands, BandRow};
pub use compare::{compare_models, waic, waic_from_matrix, ModelRank, Waic};
pub use county::{
    county_effects, fit_county_hierarchical, population_correlation, Parameterization,
};
pub use data::{CountyMonthly, CountyRegistry, EntitySeries, StateMonthly, DEFAULT_COUNTIES};
pub use gmm::{
    fit_gmm, fit_gmm_with, gmm_latent_enumeration_loglik, gmm_marginal_loglik, responsibilities,
    MixtureFit,
};
pub use gp_models::{
    fit_detection_count_negbin, fit_gp_series, forecast_latent, gas_capture_from_proportion,
    latent_link_samples, GpKind, MCF_PER_BOE,
};
pub use negbin::fit_negbin_counts;
pub use predictive::{count_histogram_csv, posterior_predictive, simulate_state, PredictiveKind};
pub use state::{fit_state_linear, state_point_prediction, StateFit};
