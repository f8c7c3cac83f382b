//! Real-time flexibility market with fair curtailment.

mod disturbance;
mod fairness;
mod market;

pub use disturbance::Disturbance;
pub use fairness::{fairness_metrics, FairnessReport, IntervalFairness};
pub use market::{
    assemble_stage2, baseline_no_flex, clear_flex_market, curtailment_cap, network_check, replay_check,
    CurtailmentPlan, FairnessMode, FlexValue, FlexibilityResult, ObjectiveBreakdown, Stage2Model, Stage2Options,
};
