//! Rolling-window inflation forecasts evaluated with DM tests: price-index
//! ingestion, quarterly year-on-year inflation, AR(1)/rolling-average/
//! constant forecasts, summary tables and plot data.

pub mod data;
pub mod evaluate;
pub mod forecast;
pub mod report;

pub use data::{
    load_price_index, parse_price_csv, to_quarterly_yoy, Aggregation, Growth, MonthlySeries, Quarter, QuarterlySeries,
    YearMonth,
};
pub use evaluate::{evaluate, run_pipeline, summarize, BandwidthGrids, DmCell, EmpiricalConfig, EvalReport, PairEvaluation, SummaryStats};
pub use forecast::{rolling_forecast, Ar1Mode, ForecastPanel, ForecastRow, ForecastSpec, Method};
