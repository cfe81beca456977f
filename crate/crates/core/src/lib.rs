//! Critical-point analysis of the landscape `Re Tr S` over symmetric,
//! self-dual and general unitary matrices.

pub mod commands;
pub mod domains;
pub mod error;
pub mod hessian;
pub mod landscape;
pub mod linalg;
pub mod optimizer;
pub mod report;
pub mod sampling;

pub use domains::{DomainKind, DomainPoint, LandscapeDomain, Monomial, TangentChart};
pub use error::{Error, Result};
pub use hessian::{HessianSignature, QuadraticFormDiagonal};
pub use landscape::{CriticalClass, CriticalPointSpec, TargetTransformation};
pub use sampling::SeededStream;
pub use optimizer::{AscentConfig, EscapeMode, Termination, TrialTrace};
pub use report::ReportDocument;
