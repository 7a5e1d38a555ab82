//! Monte Carlo estimation of gradient statistics over random circuits.

mod ensemble;
mod oracle;
mod stats;
mod stream;

pub use ensemble::{run_ensemble, sample_gradients, summarize, KMode, VarianceEstimate};
pub use oracle::{mc_first_moment, mc_second_moment, MomentEstimate};
pub use stats::{
    bootstrap_variance, chunked_summary, fit_exponential, fit_through_origin, linear_fit,
    BootstrapInterval, ExponentialFit, OriginFit, Welford, BOOTSTRAP_RESAMPLES, CHUNK,
};
pub use stream::RandomStream;
