//! Day-ahead energy market with equity-adjusted settlement.

mod actors;
mod duals;
mod market;
mod pricing;

pub use actors::{Actor, ActorTable, IncomeTier};
pub use duals::{perturbation_check, DualCheck};
pub use market::{
    assemble_stage1, clear_energy_market, extract_values, ClearedMarket, DispatchResult, DlmpSchedule, MarketInputs,
    Stage1Model, Stage1Options,
};
pub use pricing::{
    adjust_prices_equity, check_neutrality, compute_energy_burden, settlement_report, uniform_prices, ActorSettlement,
    AdjustedPriceTable, BurdenAverage, BurdenOrientation, BurdenPrice, BurdenTable, EquityOptions, SettlementReport,
    NEUTRALITY_TOL,
};
