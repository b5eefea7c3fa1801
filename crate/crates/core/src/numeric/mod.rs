//! Shared numerical building blocks: adaptive quadrature, hybrid root
//! finding, special functions, and a small FFT for probability convolutions.

pub mod fft;
pub mod quad;
pub mod roots;
pub mod special;

pub use quad::{integrate, QuadResult};
pub use roots::newton_bisect;
pub use special::{digamma, gamma_fn, ln_gamma};
