//! Design and analysis tools for active hysteretic oscillator networks.
//!
//! A network of unit-mass oscillators with Laplacian coupling carries one
//! nonlinear, self-exciting node. The remaining nodes adjust their damping
//! through slow rate laws driven by local amplitude estimates, which lets the
//! network switch on when triggered and reset itself afterwards.
//!
//! The crate is organized bottom-up:
//!
//! * [`network`] builds the stiffness matrix, its modal basis and the full
//!   equations of motion.
//! * [`slowflow`] holds the averaged amplitude and damping models, trigger
//!   analysis and the closed-form four-node reference.
//! * [`simulator`] integrates the delay-coupled closed loop.
//! * [`continuation`] traces equilibria and periodic orbits at frozen damping.
//! * [`io`] parses configurations and writes CSV, JSON and SVG outputs.

pub mod continuation;
pub mod error;
pub mod io;
pub mod linalg;
pub mod network;
pub mod ode;
pub mod simulator;
pub mod slowflow;

pub use error::{Error, Result};
pub use network::{build_network, modal_decompose, DampingState, ModalBasis, NetworkModel, Regime};
