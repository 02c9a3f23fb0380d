//! Error metrics, the Diebold-Mariano test and the non-equivalence table.

mod dm;
mod metrics;
mod table;

pub use dm::{dm_test, DmResult, DM_LEVEL, DM_MIN_ROWS};
pub use metrics::{
    mape, mape_with, mase, naive_abs_errors, EvalWindow, MapeKind, MetricReport,
};
pub use table::{nonequivalence_proportion, NonEquivalence, TABLE_PAIRS};
