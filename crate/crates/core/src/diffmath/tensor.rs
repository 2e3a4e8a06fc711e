use ndarray::Array2;

use crate::{Error, Result};

/// Row-major dense matrix. Scalars are 1×1.
pub type Tensor2 = Array2<f64>;

/// Builds a tensor from external values, rejecting non-finite entries.
pub fn tensor_from_values(rows: usize, cols: usize, values: Vec<f64>) -> Result<Tensor2> {
    if rows * cols != values.len() {
        return Err(Error::Shape(format!(
            "{rows}x{cols} tensor needs {} values, got {}",
            rows * cols,
            values.len()
        )));
    }
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite value {} at row {} col {}",
            values[pos],
            pos / cols.max(1),
            pos % cols.max(1)
        )));
    }
    Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::Shape(e.to_string()))
}

pub fn check_same_shape(what: &str, a: &Tensor2, b: &Tensor2) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!(
            "{what}: {}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

/// `Σ (mask ⊙ (pred − target))² / max(Σ mask, 1)`.
///
/// An all-zero mask gives 0.
pub fn masked_mse(pred: &Tensor2, target: &Tensor2, mask: &Tensor2) -> Result<f64> {
    check_same_shape("masked_mse pred/target", pred, target)?;
    check_same_shape("masked_mse pred/mask", pred, mask)?;
    let mut sum = 0.0;
    for ((p, t), m) in pred.iter().zip(target.iter()).zip(mask.iter()) {
        let r = m * (p - t);
        sum += r * r;
    }
    Ok(sum / mask.sum().max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_nan_from_external_input() {
        assert!(tensor_from_values(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(tensor_from_values(1, 2, vec![1.0]).is_err());
        let t = tensor_from_values(2, 1, vec![1.0, 2.0]).unwrap();
        assert_eq!(t[[1, 0]], 2.0);
    }

    #[test]
    fn masked_mse_conventions() {
        let p = array![[1.0, 2.0], [3.0, 4.0]];
        assert_eq!(masked_mse(&p, &p, &Array2::ones((2, 2))).unwrap(), 0.0);
        let t = &p - 1.0;
        assert_eq!(masked_mse(&p, &t, &Array2::ones((2, 2))).unwrap(), 1.0);
        assert_eq!(masked_mse(&p, &t, &Array2::zeros((2, 2))).unwrap(), 0.0);
        let err = masked_mse(&p, &Array2::zeros((2, 3)), &p).unwrap_err();
        assert!(err.to_string().contains("2x2 vs 2x3"));
    }

    #[test]
    fn masked_mse_matches_scalar_loop() {
        use rand::Rng;
        let mut rng = crate::seed::rng(11);
        let pred: Tensor2 = Array2::from_shape_fn((5, 3), |_| rng.random_range(-2.0..2.0));
        let target: Tensor2 = Array2::from_shape_fn((5, 3), |_| rng.random_range(-2.0..2.0));
        let mask = Array2::from_shape_fn((5, 3), |_| if rng.random_bool(0.6) { 1.0 } else { 0.0 });
        let mut num = 0.0f64;
        let mut cnt = 0.0f64;
        for i in 0..5 {
            for j in 0..3 {
                if mask[[i, j]] == 1.0 {
                    num += (pred[[i, j]] - target[[i, j]]).powi(2);
                    cnt += 1.0;
                }
            }
        }
        let expected = num / f64::max(cnt, 1.0);
        let got = masked_mse(&pred, &target, &mask).unwrap();
        assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
    }
}
