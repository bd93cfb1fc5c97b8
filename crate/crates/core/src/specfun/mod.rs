//! Special functions and probability kernels shared by the whole crate.

mod erf;
mod hyper;
mod kl;
pub mod quad;
mod stable;

pub use erf::{erf, erfc, erfcx, erfi, gamma, gamma_ratio, ln_erfc, ln_gamma, norm_cdf, norm_pdf, ERFI_MAX_ARG};
pub use hyper::{kummer_1f1, KUMMER_MAX_ARG};
pub use kl::{coin_loglik, kl_divergence};
pub(crate) use stable::standard_sample;
pub use stable::{k_alpha, stable_cdf_centered, stable_pdf, stable_sample, StableLawParams, StableTable};
