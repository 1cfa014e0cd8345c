//! Asymptotic detector/decoder transfer analysis.

mod decoder_exit;
mod jfunc;
mod recursion;
mod transfer;

pub use decoder_exit::{
    decoder_exit_curve, AnalyticDecoder, CurvePoint, DecoderOutput, DecoderTransfer, ExitCurve, FeedbackInfo, GaState,
    McExitConfig,
};
pub use jfunc::{
    feedback_variance, j_function, j_inverse, mutual_info_to_variance, mutual_info_to_variance_quadrature,
    variance_to_mutual_info, JTables, McConfig, McEstimate,
};
pub use recursion::{
    decoding_threshold, decoding_threshold_with, ebn0_db_to_sigma, info_grid, run_exit_recursion, sigma_to_ebn0_db,
    tunnel_gap, write_curve_csv, ExitModel, ExitState, ExitTrajectory, FeedbackVariance, ThresholdReport,
    ThresholdWindow, TunnelGap, Verdict,
};
pub use transfer::{
    extrinsic_closed_form, f_function, lmmse_posterior_variance, lmmse_variance_transfer,
    lmmse_variance_transfer_asymptotic, Interference, LmmseTransfer,
};
