//! Empirical characteristic functions.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::ReplicateEnsemble;

/// Default evaluation points per coordinate.
pub const DEFAULT_CF_GRID: [f64; 8] = [-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CharFunctionEstimate {
    pub points: Vec<Vec<f64>>,
    #[serde(serialize_with = "complex_pairs")]
    pub values: Vec<Complex64>,
    #[serde(rename = "R")]
    pub replicates: usize,
}

fn complex_pairs<S: serde::Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

/// (1/R) sum_r exp(i <t, x_r>), with |result| clamped to 1 against rounding.
pub(crate) fn mean_phase(args: impl Iterator<Item = f64>, replicates: usize) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for a in args {
        let (s, c) = a.sin_cos();
        re += c;
        im += s;
    }
    let z = Complex64::new(re, im) / replicates as f64;
    let norm = z.norm();
    if norm > 1.0 {
        z / norm
    } else {
        z
    }
}

/// psi_hat(t) = (1/R) sum_r exp(i <t, row_r>) at each point.
pub fn ecf<T: Real>(ensemble: &ReplicateEnsemble<T>, points: &[Vec<f64>]) -> Result<CharFunctionEstimate> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut values = Vec::with_capacity(points.len());
    for t in points {
        if t.len() != ensemble.k {
            return Err(Error::Dimension(format!(
                "point of dimension {} for a {}-column ensemble",
                t.len(),
                ensemble.k
            )));
        }
        if t.iter().all(|&x| x == 0.0) {
            values.push(Complex64::new(1.0, 0.0));
            continue;
        }
        let args = ensemble
            .rows()
            .map(|row| row.iter().zip(t).map(|(x, tj)| tj * x.as_f64()).sum::<f64>());
        values.push(mean_phase(args, ensemble.replicates));
    }
    Ok(CharFunctionEstimate {
        points: points.to_vec(),
        values,
        replicates: ensemble.replicates,
    })
}

/// Scalar-ensemble shorthand.
pub fn ecf_scalar<T: Real>(ensemble: &ReplicateEnsemble<T>, ts: &[f64]) -> Result<CharFunctionEstimate> {
    let points: Vec<Vec<f64>> = ts.iter().map(|&t| vec![t]).collect();
    ecf(ensemble, &points)
}

/// psi_hat of a single column at scalar t.
pub(crate) fn column_cf(values: &[f64], t: f64) -> Complex64 {
    if t == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    mean_phase(values.iter().map(|x| t * x), values.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Family, SequenceModel};
    use crate::sums::Window;
    use crate::weakconv::mc_normalized_sums;

    #[test]
    fn zero_sample_is_one() {
        let e = ReplicateEnsemble::from_sample(vec![0.0f64; 10]);
        let cf = ecf_scalar(&e, &[-2.0, 0.0, 1.5]).unwrap();
        assert!(cf.values.iter().all(|z| *z == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn gaussian_cf_at_one() {
        let r = 100_000;
        let e: ReplicateEnsemble<f64> =
            mc_normalized_sums(&SequenceModel::iid(Family::Normal), Window::new(0, 1), r, 3).unwrap();
        let cf = ecf_scalar(&e, &[1.0, 0.0]).unwrap();
        assert!((cf.values[0] - Complex64::new((-0.5f64).exp(), 0.0)).norm() < 3.0 / (r as f64).sqrt());
        assert_eq!(cf.values[1], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn hermitian_and_bounded() {
        let e = ReplicateEnsemble::from_rows(vec![vec![0.3f64, -1.2], vec![2.0, 0.1], vec![-0.7, 0.4]]).unwrap();
        let cf = ecf(&e, &[vec![1.0, 2.0], vec![-1.0, -2.0]]).unwrap();
        assert_eq!(cf.values[0], cf.values[1].conj());
        assert!(cf.values.iter().all(|z| z.norm() <= 1.0));
    }

    #[test]
    fn errors() {
        let e = ReplicateEnsemble::<f64>::from_sample(vec![]);
        assert!(matches!(ecf_scalar(&e, &[1.0]), Err(Error::EmptyEnsemble)));
        let e = ReplicateEnsemble::from_sample(vec![1.0f64]);
        assert!(matches!(ecf(&e, &[vec![1.0, 1.0]]), Err(Error::Dimension(_))));
    }
}
