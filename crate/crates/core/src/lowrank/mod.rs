//! Low-rank approximation: column-sampled SVD, multipass column selection,
//! CX and CUR, Nyström, two-stage column subset selection, and randomized
//! range finders.

mod column_svd;
mod cssp;
mod cur;
mod nystrom;
mod range;
mod structural;

pub use column_svd::{linear_time_svd, projection_residual, select_columns, ColumnSelection, ColumnSketchSvd};
pub use cssp::{cssp, cssp_sample_size, cssp_with, CsspMode, CsspResult, DEFAULT_CS};
pub use cur::{column_residual, cur_decompose, cx_decompose, cx_sample_size, CurFactors, CurMode, CxFactors, DEFAULT_CK};
pub use nystrom::{check_spsd, nystrom, NystromFactors};
pub use range::{
    adaptive_range_finder, factor_from_basis, posterior_error_estimate, probe_multiplier, range_finder, BasisTarget, RangeBasis,
};
pub use structural::{sampling_matrix, structural_bound_check, NormKind, StructuralCheck};

/// Default oversampling `p` for [`range_finder`].
pub const DEFAULT_OVERSAMPLE: usize = 10;
/// Default probe count for [`adaptive_range_finder`].
pub const DEFAULT_PROBES: usize = 10;
