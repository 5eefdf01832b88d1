//! Series coefficients `R_j`, `B_j`, `P_j` and the asymptotic counting formulas.

mod counts;
mod fugacity;
mod pcoef;
mod rtable;

pub use counts::{
    binomial_lclt, floor_beta_n, lambda_in_regime, log_count_asymptotic, log_count_binomial, log_count_fugacity,
    log_z_asymptotic, means_at, rat_to_f64_lossy, stirling_binom, stirling_log_error, structured_count, type_means,
    BinomialLclt, CountPaths, DivergingType, FixedType,
};
pub use fugacity::{
    b_order, beta_outside_regime, beta_x_form, check_beta, compute_b, f_poly, g_poly, lambda_beta, q_funcs, x_series,
    BTable, BetaXForm, LambdaBeta,
};
pub use pcoef::{compute_p, compute_p_with, PTable};
pub use rtable::{r_poly, r_poly_with, r_table, ROptions, RTable, GUARANTEED_J, MAX_J};
