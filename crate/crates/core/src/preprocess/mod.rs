//! Preparation of metric data before rule mining: entropy discretization,
//! SMOTE rebalancing and Spearman collinearity pruning.
//!
//! Bins are lower-exclusive and upper-inclusive everywhere: bin `i` of a
//! feature with cuts `c` is `(c[i-1], c[i]]`.

mod mdlp;
mod scheme;
mod smote;
mod spearman;

pub use mdlp::{fit_mdlp, fit_scheme, MdlpMode};
pub use scheme::{bin_interval, bin_of, discretize, DiscretizationScheme, DiscretizedData, Interval};
pub(crate) use scheme::hex;
pub use smote::{smote, Rebalanced, SmoteConfig};
pub use spearman::{ranks, spearman, spearman_prune, PruneOutcome};
