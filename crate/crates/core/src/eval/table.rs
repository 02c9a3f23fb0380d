use serde::{Deserialize, Serialize};

use super::dm::dm_test;
use crate::combine::Scheme;
use crate::error::{Error, Result};
use crate::models::ModelId;

/// Submodel x simple-combination pairs per cell.
pub const TABLE_PAIRS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonEquivalence {
    pub significant: usize,
    pub pairs: usize,
    pub proportion: f64,
}

/// Share of (submodel, simple combination) pairs where the combination is
/// significantly more accurate. Every registry model and every simple scheme
/// must be present; a degenerate loss differential counts as equivalent.
pub fn nonequivalence_proportion(
    submodels: &[(ModelId, &[f64])],
    combos: &[(Scheme, &[f64])],
    horizon: usize,
) -> Result<NonEquivalence> {
    let find_model = |id: ModelId| {
        submodels
            .iter()
            .find(|(m, _)| *m == id)
            .map(|(_, e)| *e)
            .ok_or_else(|| Error::MissingForecasts(format!("submodel {id}")))
    };
    let find_combo = |s: Scheme| {
        combos
            .iter()
            .find(|(c, _)| *c == s)
            .map(|(_, e)| *e)
            .ok_or_else(|| Error::MissingForecasts(format!("combination {s}")))
    };
    let mut significant = 0;
    let mut pairs = 0;
    for scheme in Scheme::SIMPLE {
        let c = find_combo(scheme)?;
        for id in ModelId::ALL {
            let m = find_model(id)?;
            pairs += 1;
            match dm_test(c, m, horizon) {
                Ok(r) if r.reject => significant += 1,
                Ok(_) | Err(Error::ZeroVarianceDifferential) => {}
                Err(e) => return Err(e),
            }
        }
    }
    debug_assert_eq!(pairs, TABLE_PAIRS);
    Ok(NonEquivalence {
        significant,
        pairs,
        proportion: significant as f64 / pairs as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_errors_give_zero() {
        let e: Vec<f64> = (0..40).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let subs: Vec<(ModelId, &[f64])> = ModelId::ALL.iter().map(|m| (*m, e.as_slice())).collect();
        let combos: Vec<(Scheme, &[f64])> = Scheme::SIMPLE.iter().map(|s| (*s, e.as_slice())).collect();
        let r = nonequivalence_proportion(&subs, &combos, 2).unwrap();
        assert_eq!((r.significant, r.pairs, r.proportion), (0, 64, 0.0));
        assert!(matches!(
            nonequivalence_proportion(&subs[1..], &combos, 2),
            Err(Error::MissingForecasts(_))
        ));
    }
}
