//! Small tanh networks used as parameterizations of the unresolved
//! variables, and the machinery to train them.

pub mod dataset;
pub mod io;
pub mod mlp;
pub mod parameterization;
pub mod slow;
pub mod train;

pub use dataset::{split_dataset, Dataset, Split, SplitMode};
pub use mlp::{mlp_forward, mlp_gradient, Affine, Arch, Gradient, Layer, MlpParams, Scratch};
pub use parameterization::{ExternalMap, Parameterization, ParameterizationKind};
pub use slow::{train_slow_pair, train_vanilla, FitConfig, SlowPairFit, VanillaFit};
pub use train::{normalized_mse, train, LossHistory, TrainConfig, TrainOutcome};
