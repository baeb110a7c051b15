use crate::data::distance;
use crate::error::{Error, Result};

fn check_dims(a: &[f64], p: &[f64], n: &[f64]) -> Result<()> {
    for other in [p, n] {
        if other.len() != a.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                actual: other.len(),
            });
        }
    }
    Ok(())
}

/// `max(|a - p| - |a - n| + margin, 0)` with Euclidean distances.
pub fn triplet_loss(a: &[f64], p: &[f64], n: &[f64], margin: f64) -> Result<f64> {
    check_dims(a, p, n)?;
    Ok((distance(a, p) - distance(a, n) + margin).max(0.0))
}

/// Loss together with its gradient with respect to each of the three
/// embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletGradient {
    pub loss: f64,
    pub anchor: Vec<f64>,
    pub positive: Vec<f64>,
    pub negative: Vec<f64>,
}

/// Gradient of [`triplet_loss`]. At the hinge (argument exactly zero) and
/// below it the gradient is zero. A zero-length difference contributes a
/// zero direction.
pub fn triplet_loss_gradient(
    a: &[f64],
    p: &[f64],
    n: &[f64],
    margin: f64,
) -> Result<TripletGradient> {
    check_dims(a, p, n)?;
    let d_ap = distance(a, p);
    let d_an = distance(a, n);
    let raw = d_ap - d_an + margin;
    let dim = a.len();
    if raw <= 0.0 {
        return Ok(TripletGradient {
            loss: 0.0,
            anchor: vec![0.0; dim],
            positive: vec![0.0; dim],
            negative: vec![0.0; dim],
        });
    }
    let unit = |from: &[f64], to: &[f64], d: f64| -> Vec<f64> {
        if d > 0.0 {
            from.iter().zip(to).map(|(x, y)| (x - y) / d).collect()
        } else {
            vec![0.0; dim]
        }
    };
    let u_ap = unit(a, p, d_ap);
    let u_an = unit(a, n, d_an);
    Ok(TripletGradient {
        loss: raw,
        anchor: u_ap.iter().zip(&u_an).map(|(x, y)| x - y).collect(),
        positive: u_ap.iter().map(|x| -x).collect(),
        negative: u_an,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn satisfied_margin_gives_zero() {
        assert_eq!(triplet_loss(&[0.0, 0.0], &[0.0, 0.0], &[1.0, 0.0], 0.5).unwrap(), 0.0);
    }

    #[test]
    fn equidistant_pair_gives_margin() {
        assert_eq!(triplet_loss(&[0.0, 0.0], &[1.0, 0.0], &[1.0, 0.0], 0.5).unwrap(), 0.5);
    }

    #[test]
    fn random_triplet_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut draw = || (0..8).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
        let (a, p, n) = (draw(), draw(), draw());
        let mut sq_ap = 0.0;
        let mut sq_an = 0.0;
        for i in 0..8 {
            sq_ap += (a[i] - p[i]).powi(2);
            sq_an += (a[i] - n[i]).powi(2);
        }
        let want = f64::max(sq_ap.sqrt() - sq_an.sqrt() + 0.2, 0.0);
        let got = triplet_loss(&a, &p, &n, 0.2).unwrap();
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        assert!(triplet_loss(&[0.0], &[0.0, 1.0], &[1.0], 0.1).is_err());
    }

    #[test]
    fn gradient_is_zero_at_hinge() {
        // |a-p| = 1, |a-n| = 1.5, margin 0.5: exactly on the hinge.
        let g = triplet_loss_gradient(&[0.0], &[1.0], &[1.5], 0.5).unwrap();
        assert_eq!(g.loss, 0.0);
        assert!(g.anchor.iter().chain(&g.positive).chain(&g.negative).all(|x| *x == 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences_on_embeddings() {
        let a = [0.1, 0.4, -0.3];
        let p = [0.9, -0.2, 0.5];
        let n = [0.3, 0.2, 0.0];
        let g = triplet_loss_gradient(&a, &p, &n, 0.2).unwrap();
        assert!(g.loss > 0.0);
        let h = 1e-6;
        for i in 0..3 {
            let mut plus = a;
            let mut minus = a;
            plus[i] += h;
            minus[i] -= h;
            let fd = (triplet_loss(&plus, &p, &n, 0.2).unwrap()
                - triplet_loss(&minus, &p, &n, 0.2).unwrap())
                / (2.0 * h);
            assert!((fd - g.anchor[i]).abs() < 1e-7);
        }
    }
}
