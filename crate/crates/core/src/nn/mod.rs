//! Compression of one-hidden-layer ReLU networks through tropical division.

pub mod compress;
pub mod data;
pub mod eval;
pub mod network;
pub mod params;
pub mod prune;
pub mod represent;

pub use compress::{
    all_pairs, compress_binary_maxout, compress_binary_relu, compress_multibinary, compress_multiclass, division_rows,
    maxout_quotient, relu_quotient, AffineMap, CompressedModel, Compression, MaxoutUnit, PairFeature, QuotientReport, Side,
    SideReport,
};
pub use data::{load_labels, load_samples, write_rows};
pub use eval::{evaluate_error, Classifier};
pub use network::{Activation, DenseLayer, NetworkSpec};
pub use params::{count_params, ParamShape};
pub use prune::{keep_within_budget, l1_scores, l1_structured_prune, L1Scope};
pub use represent::{
    binary_reduce, multiclass_common_denominator, qr_reduce, to_tropical_pair, CommonDenominator, QrReduction, TropicalPair,
};
