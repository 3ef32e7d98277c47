//! Effective-interval representations of one-dimensional strongly local
//! Dirichlet forms.

pub mod cantor;
pub mod catalog;
pub mod energy;
pub mod generate;
pub mod error;
pub mod family;
pub mod interval;
pub mod measure;
pub mod merge;
pub mod partition;
pub mod quad;
pub mod real;
pub mod relation;
pub mod sample;
pub mod subspace;
pub mod system;
pub mod thinned;

pub use error::{Error, Result, Verdict};
pub use interval::{Interval, Window};
pub use real::{ExtReal, Real};
