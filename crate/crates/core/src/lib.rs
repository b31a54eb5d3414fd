//! Joint transmitter design for a MIMO-radar / MISO secure-communication
//! coexistence system under norm-bounded CSI errors.
//!
//! The library maximizes the worst-case secrecy rate of the communication
//! link while keeping the radar beampattern close to an ideal covariance and
//! capping the interference the base station injects into the radar receiver.
//!
//! Key pieces:
//! - dense complex linear algebra with Hermitian eigendecomposition
//!   ([`linalg`])
//! - the coexistence scenario model and error-ball sampling ([`scenario`])
//! - radar-side metrics: beampattern, ideal covariance design, INR and
//!   detection probability ([`radar`])
//! - communication-side metrics and an adversarial worst-case oracle
//!   ([`secrecy`])
//! - S-lemma LMI assembly of the robust inner problem ([`lmi`])
//! - a self-contained primal-dual interior-point conic solver ([`solver`])
//! - the two-layer design algorithm with rank-one recovery ([`algorithm`])
//! - the Monte Carlo experiment harness ([`experiments`])

pub mod algorithm;
pub mod experiments;
pub mod linalg;
pub mod lmi;
pub mod radar;
pub mod scenario;
pub mod secrecy;
pub mod solver;

pub use linalg::{CVector, HermitianMatrix, C64};
pub use scenario::{ChannelRealization, Scenario};
