//! One-vs-all sigmoid networks that map a parameter vector to a cluster label.

mod bank;
mod mlp;

pub use bank::{argmax, partition_section, train_bank, ClassifierBank, SectionGrid};
pub use mlp::{param_count, sigmoid, train_binary, Mlp, TrainSettings};

/// Hidden layer sizes used when none are configured.
pub const DEFAULT_HIDDEN: [usize; 3] = [10, 10, 10];
