//! Online weighted matching with per-node deadlines.
//!
//! Four matchers over a common market model: an exact greedy baseline, its
//! postponed variant for streams where roles are unknown until each node's
//! deadline, and sketched versions of both that weigh edges through a
//! random-sign projection instead of in the full feature space. A brute-force
//! offline optimum and a price-certificate check give every run something to
//! be judged against, and the `bench` module reproduces the runtime and
//! total-weight experiments as CSV.
//!
//! All randomness (coordinates, projection signs, role coins) flows through
//! seeded ChaCha8 streams, so every result in the crate replays bit-exactly
//! from its seeds.

pub mod bench;
pub mod data;
pub mod error;
pub mod fast;
pub mod greedy;
pub mod market;
pub mod oracle;
mod postponed;
pub mod sketch;

pub use error::{Error, Result};
pub use market::{edge_weight, feasible, Instance, MatchOutcome, MatchedPair, Node, Role};
pub use sketch::{approx_distance, recommended_s, SketchMatrix, SketchedPoint};
