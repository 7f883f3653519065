use crate::error::{Error, Result};

use super::matrix::Matrix;
use super::rng::SeededRng;

const COORDINATE_BUDGET: usize = 100;
const SUBSET_SEED: u64 = 0x6772_6164;

/// Compares analytic gradients against central finite differences.
///
/// `loss_and_grad` returns the loss and one gradient matrix per parameter.
/// Up to 100 coordinates (all, if there are fewer) are probed; the subset is
/// drawn from a fixed seed. Returns the largest
/// `|g_a - g_n| / max(1e-12, |g_a| + |g_n|)`.
pub fn gradient_check<F>(loss_and_grad: F, params: &[Matrix], epsilon: f64) -> Result<f64>
where
    F: Fn(&[Matrix]) -> (f64, Vec<Matrix>),
{
    if !(1e-7..=1e-4).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!(
            "epsilon {epsilon} outside [1e-7, 1e-4]"
        )));
    }
    let (loss, analytic) = loss_and_grad(params);
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("loss {loss}")));
    }
    if analytic.len() != params.len() {
        return Err(Error::Shape(format!(
            "{} gradients for {} parameters",
            analytic.len(),
            params.len()
        )));
    }

    let coords: Vec<(usize, usize)> = params
        .iter()
        .enumerate()
        .flat_map(|(p, m)| (0..m.as_slice().len()).map(move |k| (p, k)))
        .collect();
    let chosen: Vec<(usize, usize)> = if coords.len() <= COORDINATE_BUDGET {
        coords
    } else {
        let mut rng = SeededRng::new(SUBSET_SEED);
        rng.sample_without_replacement(coords.len(), COORDINATE_BUDGET)
            .into_iter()
            .map(|i| coords[i])
            .collect()
    };

    let mut work = params.to_vec();
    let mut worst: f64 = 0.0;
    for (p, k) in chosen {
        let orig = work[p].as_slice()[k];
        work[p].as_mut_slice()[k] = orig + epsilon;
        let (plus, _) = loss_and_grad(&work);
        work[p].as_mut_slice()[k] = orig - epsilon;
        let (minus, _) = loss_and_grad(&work);
        work[p].as_mut_slice()[k] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!("loss at perturbed coordinate ({p},{k})")));
        }
        let numeric = (plus - minus) / (2.0 * epsilon);
        let ga = analytic[p].as_slice()[k];
        let rel = (ga - numeric).abs() / (ga.abs() + numeric.abs()).max(1e-12);
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_is_exact() {
        let w = Matrix::from_fn(4, 5, |i, j| (i as f64) - 0.3 * j as f64 + 0.1);
        let err = gradient_check(
            |ps: &[Matrix]| (ps[0].sum_sq() / 2.0, vec![ps[0].clone()]),
            &[w],
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn rejects_bad_epsilon_and_nan() {
        let w = Matrix::zeros(1, 1);
        assert!(gradient_check(|_: &[Matrix]| (0.0, vec![Matrix::zeros(1, 1)]), &[w.clone()], 1e-2).is_err());
        assert!(gradient_check(|_: &[Matrix]| (f64::NAN, vec![Matrix::zeros(1, 1)]), &[w], 1e-5).is_err());
    }

    #[test]
    fn detects_wrong_gradient() {
        let w = Matrix::from_vec(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
        let err = gradient_check(
            |ps: &[Matrix]| (ps[0].sum_sq() / 2.0, vec![ps[0].scale(2.0)]),
            &[w],
            1e-5,
        )
        .unwrap();
        assert!(err > 0.3);
    }
}
