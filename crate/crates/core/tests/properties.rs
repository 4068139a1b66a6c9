//! Property tests over randomized polynomials, games and parameters.

use bilingame::charpoly::{char_poly, RealPolynomial};
use bilingame::dynamics::{AlgorithmKind, UpdateStyle};
use bilingame::game::{matrix_to_json, matrix_to_text, parse_matrix, BilinearGame};
use bilingame::linalg::Matrix;
use bilingame::spectral::{roots, spectral_radius};
use bilingame::stability::{r_schur, schur_closed, schur_general};
use proptest::prelude::*;

fn finite_coeff() -> impl Strategy<Value = f64> {
    (-3.0f64..3.0).prop_filter("leading must stay away from zero", |c| c.abs() > 1e-3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Every returned root is an actual root of the polynomial.
    #[test]
    fn roots_have_small_residuals(
        tail in proptest::collection::vec(-2.0f64..2.0, 1..=6),
    ) {
        let coeffs: Vec<f64> = std::iter::once(1.0).chain(tail).collect();
        let p = RealPolynomial::new(coeffs).unwrap();
        let max_coeff = p.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
        for r in roots(&p).unwrap() {
            prop_assert!(p.eval_complex(r).norm() <= 1e-7 * max_coeff.max(1.0) * 30.0);
        }
    }

    /// The spectral radius ignores overall coefficient scaling.
    #[test]
    fn radius_scale_invariant(
        tail in proptest::collection::vec(-2.0f64..2.0, 2..=5),
        scale in finite_coeff(),
    ) {
        let coeffs: Vec<f64> = std::iter::once(1.0).chain(tail).collect();
        let p = RealPolynomial::new(coeffs.clone()).unwrap();
        let q = RealPolynomial::new(coeffs.iter().map(|c| c * scale).collect()).unwrap();
        let rp = spectral_radius(&p).unwrap();
        let rq = spectral_radius(&q).unwrap();
        prop_assert!((rp - rq).abs() <= 1e-9 * (1.0 + rp));
    }

    /// Schur's determinant test agrees with the closed forms on low degrees.
    #[test]
    fn schur_general_matches_closed(
        tail in proptest::collection::vec(-2.0f64..2.0, 2..=4),
    ) {
        let coeffs: Vec<f64> = std::iter::once(1.0).chain(tail).collect();
        let p = RealPolynomial::new(coeffs).unwrap();
        let general = schur_general(&p);
        let closed = schur_closed(&p).unwrap();
        if !general.is_boundary() && !closed.is_boundary() {
            prop_assert_eq!(general.stable, closed.stable);
        }
    }

    /// If a polynomial is r-Schur stable it stays stable for larger radii.
    #[test]
    fn r_schur_monotone(
        tail in proptest::collection::vec(-1.5f64..1.5, 2..=4),
        r in 0.2f64..1.5,
        grow in 1.05f64..4.0,
    ) {
        let coeffs: Vec<f64> = std::iter::once(1.0).chain(tail).collect();
        let p = RealPolynomial::new(coeffs).unwrap();
        let v = r_schur(&p, r).unwrap();
        if v.stable && !v.is_boundary() {
            prop_assert!(r_schur(&p, r * grow).unwrap().stable);
        }
    }

    /// Matrix text and JSON round-trips are bit exact.
    #[test]
    fn matrix_io_round_trip(
        rows in 1usize..4,
        cols in 1usize..4,
        data in proptest::collection::vec(-1e6f64..1e6, 16),
    ) {
        let m = Matrix::from_fn(rows, cols, |i, j| data[(i * cols + j) % data.len()]);
        prop_assert_eq!(&parse_matrix(&matrix_to_text(&m)).unwrap(), &m);
        prop_assert_eq!(&parse_matrix(&matrix_to_json(&m)).unwrap(), &m);
    }

    /// The saddle distance is nonnegative and vanishes on the saddle set.
    #[test]
    fn saddle_distance_nonnegative(
        entries in proptest::collection::vec(-2.0f64..2.0, 9),
        x in proptest::collection::vec(-2.0f64..2.0, 3),
        y in proptest::collection::vec(-2.0f64..2.0, 3),
    ) {
        let e = Matrix::from_fn(3, 3, |i, j| entries[i * 3 + j]);
        if e.max_abs() == 0.0 {
            return Ok(());
        }
        let game = BilinearGame::from_matrix(e).unwrap();
        let d = game.saddle_distance(&x, &y).unwrap();
        prop_assert!(d.delta_sq >= 0.0);
        let zero = game.saddle_distance(&[0.0; 3], &[0.0; 3]).unwrap();
        prop_assert!(zero.delta_sq <= 1e-20);
    }

    /// Characteristic polynomials keep their template degrees and leading
    /// coefficients over the whole valid parameter range.
    #[test]
    fn char_poly_template_shapes(
        alpha in 0.01f64..2.0,
        b1 in -2.0f64..2.0,
        b2 in -2.0f64..2.0,
        sigma in 0.1f64..4.0,
    ) {
        use AlgorithmKind::*;
        use UpdateStyle::*;
        for (kind, style, degree) in [
            (Gd, Jacobi, 2),
            (Gd, GaussSeidel, 2),
            (Eg, Jacobi, 2),
            (Eg, GaussSeidel, 2),
            (Ogd, Jacobi, 4),
            (Ogd, GaussSeidel, 3),
            (Momentum, Jacobi, 4),
            (Momentum, GaussSeidel, 4),
            (Pp, Jacobi, 2),
        ] {
            let p = char_poly(kind, style, alpha, alpha, b1, b2, sigma).unwrap();
            prop_assert_eq!(p.degree(), degree);
            prop_assert!(p.coeffs()[0] != 0.0);
        }
    }
}
