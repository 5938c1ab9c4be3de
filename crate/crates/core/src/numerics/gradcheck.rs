use super::ParamStore;
use crate::error::{Error, Result};

/// Per-parameter outcome of a finite-difference comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupError {
    pub name: String,
    pub numel: usize,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub groups: Vec<GroupError>,
}

impl GradCheckReport {
    pub fn max_relative_error(&self) -> f64 {
        self.groups
            .iter()
            .fold(0.0, |m, g| m.max(g.max_relative_error))
    }

    pub fn worst(&self) -> Option<&GroupError> {
        self.groups
            .iter()
            .max_by(|a, b| a.max_relative_error.total_cmp(&b.max_relative_error))
    }
}

/// Compares the gradients already accumulated in `store` against central
/// differences of `forward`, element by element.
///
/// The error for one element is `|a - n| / max(1, |a|, |n|)`. Every value is
/// restored after perturbation, so `store` is unchanged on return.
pub fn grad_check<F>(mut forward: F, store: &mut ParamStore, h: f64) -> Result<GradCheckReport>
where
    F: FnMut(&ParamStore) -> f64,
{
    if !(1e-7..=1e-3).contains(&h) {
        return Err(Error::contract(format!(
            "finite-difference step must lie in [1e-7, 1e-3], got {h}"
        )));
    }
    let base = forward(store);
    let again = forward(store);
    if base.to_bits() != again.to_bits() {
        return Err(Error::contract(format!(
            "forward is not deterministic: {base} then {again}"
        )));
    }

    let ids: Vec<_> = (0..store.len()).map(super::ParamId).collect();
    let mut groups = Vec::with_capacity(ids.len());
    for id in ids {
        let numel = store.value(id).len();
        let mut worst = 0.0f64;
        for i in 0..numel {
            let orig = store.value(id).as_slice()[i];
            store.value_mut(id).as_mut_slice()[i] = orig + h;
            let plus = forward(store);
            store.value_mut(id).as_mut_slice()[i] = orig - h;
            let minus = forward(store);
            store.value_mut(id).as_mut_slice()[i] = orig;

            let numeric = (plus - minus) / (2.0 * h);
            let analytic = store.grad(id).as_slice()[i];
            let denom = 1.0f64.max(analytic.abs()).max(numeric.abs());
            let err = (analytic - numeric).abs() / denom;
            worst = if err.is_nan() { f64::INFINITY } else { worst.max(err) };
        }
        groups.push(GroupError {
            name: store.param(id).name.clone(),
            numel,
            max_relative_error: worst,
        });
    }
    Ok(GradCheckReport { groups })
}
