pub mod error;
pub mod interval;
pub mod legendre;
pub mod certificate;
pub mod cheb;
pub mod critical;
pub mod roots;
pub mod subsolution;
pub mod supersolution;
pub mod report;

pub use error::{Error, Result};
pub use interval::Interval;
pub use certificate::{GridCertificate, Verdict};
pub use report::Report;
