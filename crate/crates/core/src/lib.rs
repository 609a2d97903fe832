//! Combinatorics of the torus-action cell decomposition of genus-0 stable
//! map spaces `M̄_{0,n}(P^r, d)`: fixed-locus graphs, the surgery order on
//! them, limits of the flow, tangency boundary terms and Poincaré polynomials.

pub mod cohomology;
pub mod enumeration;
pub mod error;
pub mod flow;
pub mod gathmann;
pub mod graph;
pub mod io;
pub mod oracles;
pub mod poly;
pub mod poset;
pub mod selftest;

pub use error::{Error, Result};
