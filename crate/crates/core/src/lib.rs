//! Travelling-wave speeds and profiles for reaction-diffusion equations with
//! saturating (flux-limited) diffusion `u_t = (a(u, u_x))_x + f(u)`.
//!
//! The core object is the flow function `V(u)` carried by a monotone travelling
//! profile at level `u`. It solves a backward Cauchy problem on `[0, 1]`
//! ([`halfplane`]); bisection on its behaviour at `u = 0` yields the minimal speeds
//! ([`speeds`]), and inverting `xi(u) = int du / g(u, V)` recovers the profile
//! ([`profile`]).

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod families;
pub mod halfplane;
pub mod io;
pub mod model;
pub mod ode;
pub mod pde;
pub mod profile;
pub mod roots;
pub mod speeds;
pub mod tolerances;

pub use families::{DegenerateFamilySpec, FamilyError, Smoothness};
pub use halfplane::{integrate_halfplane, HalfplaneError, IntegrationOptions, Mode, SpeedSolution, StartRule};
pub use model::{
    classify_flux, gamma0, load_model, lower_speed_bound, preset_config, Diffusivity, FluxClassification, FluxModel,
    LoadedModel, ModelConfig, ModelError, Phi, ReactionModel,
};
pub use pde::{measure_speed, simulate_front, InitialCondition, PdeError, SimGrid, SpeedFit, Trajectory};
pub use profile::{build_g, check_jumps, invert_profile, GMap, ProfileError, WaveProfile};
pub use speeds::{find_sigma_r, find_sigma_s, quadratic_roots, speed_report, SpeedError, SpeedReport};
