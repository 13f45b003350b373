//! Forward purchase simulation, discounted customer values and customer
//! equity.

mod revenue;
mod simulate;
mod summarize;

pub use revenue::{npv, Purchase, RevenueSpec, DEFAULT_OTHER_ASP};
pub use simulate::{
    simulate_histories, ClvSamples, HistoryPlan, PurchaseProcess, DEFAULT_HISTORIES,
};
pub use summarize::{
    ce_by_draw, ce_by_stratum, clv_distribution, scale_to_population, summarize_clv, CeSummary,
    ClvDistribution, ClvSummary, Segment, Segmentation,
};
