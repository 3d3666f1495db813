//! Dirichlet kernel density estimation for compositional data.
//!
//! Points live on the simplex `S_d = {s ∈ [0,1]^d : ‖s‖₁ ≤ 1}`, the last
//! part of a `(d + 1)`-part composition being implicit. The estimator
//!
//! ```text
//! f̂_{n,b}(s) = (1/n) Σ_i κ_{s,b}(X_i)
//! ```
//!
//! uses the Dirichlet density `κ_{s,b}` with shapes `s/b + 1` and residual
//! shape `(1 − ‖s‖₁)/b + 1`, so it never leaks mass outside the simplex.
//!
//! ```
//! use simplex_kde::{rng::seeded, DirichletParams, KdeModel, SimplexPoint};
//! use simplex_kde::processes::gen_iid;
//!
//! let target = DirichletParams::symmetric(2, 2.0).unwrap();
//! let data = gen_iid(&target, 500, &mut seeded(1)).unwrap();
//! let model = KdeModel::fit(data, 0.05).unwrap();
//! let fhat = model.evaluate(&SimplexPoint::barycenter(2).unwrap()).unwrap();
//! assert!(fhat > 0.0);
//! ```

pub mod asymptotics;
pub mod bandwidth;
pub mod error;
pub mod hdr;
pub mod kde;
pub mod kernel;
pub mod processes;
pub mod quadrature;
pub mod rng;
pub mod simplex;
pub mod special;
pub mod verify;

pub use bandwidth::{select_bandwidth, BandwidthSelection, LscvConfig};
pub use error::{KdeError, Result};
pub use hdr::{hdr_membership, hdr_threshold, HdrResult};
pub use kde::KdeModel;
pub use kernel::{DirichletParams, KernelSpec};
pub use simplex::{CompositionSeries, ShareTable, SimplexPoint, ValidationMode};
