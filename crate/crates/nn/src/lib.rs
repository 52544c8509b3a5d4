//! Small, seeded neural-network toolkit shared by the generative models and
//! the learned evaluators.
//!
//! candle's own variable initializers draw from an unseeded thread RNG, so
//! every parameter here is created through [`ParamStore`], which owns a
//! seeded stream. Layers only hold tensors that alias the store's variables.

pub mod convert;
pub mod layers;
pub mod ops;
pub mod optim;
pub mod store;

pub use candle_core::{DType, Device, Result, Tensor, Var};
pub use convert::{array3_to_tensor, tensor_to_array3};
pub use layers::{Activation, Conv1d, Embedding, Gru, LayerNorm, Linear, Mlp};
pub use optim::{Adam, AdamConfig};
pub use store::ParamStore;
