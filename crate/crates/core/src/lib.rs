pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod liouvillian;
pub mod localizer;
pub mod spin;
pub mod tensor;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/tensor-basis.md")]
    mod tensor_basis {}
    #[doc = include_str!("../../../book/src/liouvillian.md")]
    mod liouvillian {}
    #[doc = include_str!("../../../book/src/localizer.md")]
    mod localizer {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
}
