//! The discretized parameter grid, the discrete CDF family, and the two
//! policy classes built on them.

pub mod catalog;
pub mod cdf_set;
pub mod parameter_grid;
pub mod policy;

pub use catalog::{build_catalog, build_catalog_capped, catalog_size, PolicyCatalog, PolicyDescriptor, PolicyKind};
pub use cdf_set::{cdf_eval, cdf_family_size, discretize_cdf, enumerate_cdf_set, enumerate_cdf_set_capped, DiscreteCdf};
pub use parameter_grid::{enumerate_parameter_grid, enumerate_parameter_grid_capped, ParameterGrid};
pub use policy::{lp_policy_price, lv_optimal_increment, lv_policy_price, lv_price_index, Increment};
