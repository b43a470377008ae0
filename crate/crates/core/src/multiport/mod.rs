//! Multiport (S-parameter) description of a transmitter / active RIS / receiver link.
//!
//! The `N = n_t + m + n_r` port network obeys `b = S a`. The transmitter ports see
//! generator waves through `Γ_T`, the receiver ports are loaded by `Γ_R`, and each
//! RIS port reflects through its active element `Γ_A` while injecting thermal noise.
//! Closed-form channels live in [`network`]; [`direct`] solves the same boundary
//! value problem as one stacked linear system and serves as the oracle.

mod direct;
mod element;
mod network;

pub use direct::{solve_network_direct, solve_network_direct_with_gamma, PortWaves};
pub use element::{
    build_gamma_a, element_reflection_exact, element_reflection_simplified, ra_reflection, ReflectionState,
};
pub use network::{
    conventional_channels, conventional_channels_with_gamma, em_channels, ensure_spectral_stability, full_model_b_r,
    full_model_terms, loop_gain_spectral_radius, loop_response, passive_channel, reduced_channels, ChannelPair,
    FullModelTerms, ModelVariant, ScatteringMatrix, Terminations, DEFAULT_Z0, SPECTRAL_MARGIN,
};
