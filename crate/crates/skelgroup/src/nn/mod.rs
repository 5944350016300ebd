//! Minimal dense tensor type and the neural network layers built on it.
//!
//! Everything is `f64` and fully deterministic: no BLAS, no threads inside a
//! single layer call, no unordered reductions. Layers come in forward /
//! backward pairs with explicit caches, which keeps the gradient flow easy to
//! audit and easy to check against finite differences (see [`gradcheck`]).

pub mod checkpoint;
pub mod gradcheck;
pub mod init;
pub mod layers;
pub mod tensor;

pub use tensor::Tensor;
