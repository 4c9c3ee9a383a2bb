//! Softmax regression test problem, datasets and Fisher reconstruction.

mod dataset;
mod fisher;
mod softmax;

pub use dataset::{read_libsvm, synth_blobs, synth_blobs_with, Dataset};
pub use fisher::{fisher_from_dykaf, fisher_from_soap, fisher_reconstruct, FISHER_MAX_DIM};
pub use softmax::{softmax, SoftmaxModel, HESSIAN_MAX_DIM};
