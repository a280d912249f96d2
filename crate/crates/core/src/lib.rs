//! Constructive approximation workbench: sparse networks that approximate
//! B-splines, weight quantization with bit accounting, star-shaped cartoon
//! images with an orthogonal petal hypercube, and a wedgelet codec whose
//! distortion-rate behaviour can be measured.

pub mod nnet;
pub mod splines;
pub mod constructors;
pub mod quantizer;
pub mod cartoon;
pub mod wedgelet;
pub mod ratelab;
