//! Fixtures shared by the benchmarks.

use hdcombo::synth::{generate_panel, DGPSpec};
use hdcombo::{LagDesign, PredictorSpec};

/// Full-predictor design for the first desk disease.
pub fn desk_design(n_weeks: usize, horizon: usize) -> LagDesign {
    let panel = generate_panel(&DGPSpec::desk(2024, n_weeks)).expect("desk spec is valid");
    let name = panel.disease_names()[0].clone();
    LagDesign::build(&panel, &name, horizon, PredictorSpec::C, 8).expect("panel is long enough")
}
