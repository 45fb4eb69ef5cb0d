//! Distribution-fitting and statistics kernels.

mod gamma;
mod ggd;
mod mvg;
mod stats;

pub use gamma::gamma;
pub use ggd::{fit_aggd, fit_ggd, ggd_ratio, AggdParams, GgdParams, ALPHA_GRID_LEN, ALPHA_MAX, ALPHA_MIN};
pub use mvg::{fit_mvg, mvg_distance, MvgModel};
pub use stats::{exact_sum, pearson};
