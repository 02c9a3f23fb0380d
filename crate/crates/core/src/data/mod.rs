//! Panel representation, lag designs, splits and the expanding-window schedule.

mod lag;
mod panel;
mod split;
mod standardize;

pub use lag::{build_lag_design, Block, LagColumn, LagDesign, PredictorSpec, DEFAULT_LAG_ORDER};
pub use panel::{
    week_range, weeks_in_year, EpiWeek, Series, SeriesPanel, DISEASE_PREFIX, ENV_PREFIX,
};
pub use split::{
    expanding_schedule, split_initial, ExpandingWindowSchedule, ScheduleStep, SplitPlan,
    DEFAULT_SPLIT_RATIO,
};
pub use standardize::{standardize_columns, ColumnStats};
pub(crate) use standardize::ZERO_VAR_REL;
