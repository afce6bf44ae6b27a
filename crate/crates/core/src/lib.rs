pub mod cli;
pub mod constants;
pub mod constructions;
pub mod error;
pub mod io;
pub mod monotone;
pub mod optimize;
pub mod radial_ivp;
pub mod shooting;
pub mod stability;

pub use constants::{Dimension, RationalConstant};
pub use error::{Error, Result};
pub use radial_ivp::{integrate, IntegratorConfig, Problem, ProfileStatus, RadialProfile};
