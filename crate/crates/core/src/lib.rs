//! Logarithmic mathematical morphology and a trainable map of LIP-additive
//! Asplund distances.
//!
//! Images follow the Logarithmic Image Processing (LIP) model: grey levels lie
//! in `[0, M)` on an inverted scale (`0` is white). LIP-adding a constant
//! darkens an image the way a shorter exposure would; the map of Asplund
//! distances is unchanged by it, and so is the [`layer::AsplundLayer`] that
//! learns its probe.
//!
//! Module map:
//!
//! - [`lip`]: scalar LIP arithmetic and the `xi` isomorphism
//! - [`image`]: [`LipImage`] and real-valued [`Plane`] grids
//! - [`morphology`]: classical and logarithmic dilation/erosion
//! - [`asplund`]: Asplund distance and its three equivalent map forms
//! - [`layer`]: two-kernel trainable layer with exact backward pass
//! - [`training`]: losses, Adam, the training loop, evaluation and probe error
//! - [`dataset`]: IDX loading, reference probes, lighting shifts, ground truth
//! - [`checkpoint`], [`pgm`]: on-disk formats

pub mod asplund;
pub mod checkpoint;
pub mod dataset;
pub mod error;
pub mod image;
pub mod layer;
pub mod lip;
pub mod morphology;
pub mod pgm;
pub mod training;

pub use asplund::{asplund_distance, asplund_map, asplund_map_definitional, asplund_map_morphological, asplund_map_xi_form};
pub use error::{Error, Result};
pub use image::{DistanceMap, LipImage, Plane};
pub use layer::{AsplundLayer, Gradients, KernelPair};
pub use lip::{GreyLevel, DEFAULT_CEILING};
pub use morphology::Probe;
