//! Exact truncated-series arithmetic: hbar-graded series, Laurent jets with
//! validity windows, bivariate jets, u-polynomials, and the shift-kernel
//! calculus built on them.

pub mod bijet;
pub mod hbar;
pub mod jet;
pub mod mseries;
pub mod shift;

pub use bijet::BiJet;
pub use hbar::{s_operator, HbarSeries, UPoly};
pub use jet::Jet;
pub use mseries::{Coeff, MSeries};
pub use shift::{apply_shift_kernel, d_dx, XDeriv};
