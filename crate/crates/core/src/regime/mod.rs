//! Market-regime detection on weekly FCR dynamics and the per-regime bid
//! percentile policy.

mod features;
mod hmm;
mod policy;

pub use features::{compute_features, RegimeFeatures, Standardizer, N_FEATURES, WARMUP_WEEKS};
pub use hmm::{fit_baum_welch, viterbi_path, FitConfig, FitResult, RegimeModel};
pub use policy::{optimize_bid_policy, policy_revenue, BidPolicy, PolicyWeek, FALLBACK_PERCENTILE, PERCENTILE_GRID};

pub const N_STATES: usize = 4;

/// Reporting labels in order of increasing mean FCR price.
pub const STATE_LABELS: [&str; N_STATES] = ["low-vol", "normal", "post-crisis", "crisis"];

pub fn state_label(state: usize, n_states: usize) -> String {
    if n_states == N_STATES {
        STATE_LABELS[state].to_string()
    } else {
        format!("state-{state}")
    }
}
