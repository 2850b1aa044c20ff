//! Random tree networks and slow reference implementations used by the
//! integration and acceptance tests.

pub mod edit;
pub mod gen;
pub mod oracle;

pub use edit::splice;
pub use gen::{random_instance, random_tree, GenConfig};
pub use oracle::{brute_force_best, oracle_levels};
