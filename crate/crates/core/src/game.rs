//! Bilinear zero-sum games `min_x max_y x^T E y + b^T x + c^T y`.
//!
//! Saddle points satisfy `E y + b = 0` and `E^T x + c = 0`, so they exist
//! exactly when `b` lies in the column space of `E` and `c` in that of
//! `E^T`. For singular or rectangular `E` the convergence of first-order
//! methods is measured by the distance to the saddle set, which reduces via
//! the SVD to an ordinary game on the nonzero singular block.

use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, norm, Matrix};
use crate::util::fmt_g17;

/// Relative cutoff below which a singular value is treated as zero.
const RANK_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct BilinearGame {
    e: Matrix,
    b: Vec<f64>,
    c: Vec<f64>,
    singular: OnceLock<SingularData>,
}

/// Singular values and bases of the game matrix.
#[derive(Clone, Debug)]
pub struct SingularData {
    values: Vec<f64>,
    rank: usize,
    u: Matrix,
    v: Matrix,
}

impl SingularData {
    /// Positive singular values in descending order.
    pub fn values(&self) -> &[f64] {
        &self.values[..self.rank]
    }

    pub fn sigma_max(&self) -> f64 {
        self.values[0]
    }

    /// Smallest positive singular value.
    pub fn sigma_min(&self) -> f64 {
        self.values[self.rank - 1]
    }

    pub fn condition_number(&self) -> f64 {
        self.sigma_max() / self.sigma_min()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Full left singular basis (m by m).
    pub fn u(&self) -> &Matrix {
        &self.u
    }

    /// Full right singular basis (n by n).
    pub fn v(&self) -> &Matrix {
        &self.v
    }
}

/// Squared distance of `(x, y)` to the saddle set,
/// `|E'E y|^2 + |E E' x|^2` with `E'` the pseudo-inverse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SaddleDistance {
    pub delta_sq: f64,
}

impl BilinearGame {
    /// Validates dimensions, finiteness and (for nonzero linear terms)
    /// feasibility of the saddle equations.
    pub fn new(e: Matrix, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if b.len() != e.rows() || c.len() != e.cols() {
            return Err(Error::DimensionMismatch(format!(
                "E is {}x{}, b has length {}, c has length {}",
                e.rows(),
                e.cols(),
                b.len(),
                c.len()
            )));
        }
        if !e.all_finite() || b.iter().chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("game data"));
        }
        let game = BilinearGame { e, b, c, singular: OnceLock::new() };
        if game.b.iter().any(|v| *v != 0.0) || game.c.iter().any(|v| *v != 0.0) {
            game.check_linear_feasibility()?;
        }
        Ok(game)
    }

    /// Game with zero linear terms.
    pub fn from_matrix(e: Matrix) -> Result<Self> {
        let b = vec![0.0; e.rows()];
        let c = vec![0.0; e.cols()];
        BilinearGame::new(e, b, c)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.e
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn rows(&self) -> usize {
        self.e.rows()
    }

    pub fn cols(&self) -> usize {
        self.e.cols()
    }

    /// Feasibility test: least-squares residual of `E y = -b` and
    /// `E^T x = -c` below a scale-aware tolerance.
    fn check_linear_feasibility(&self) -> Result<()> {
        let (y_shift, x_shift) = self.solve_shifts()?;
        let ry: Vec<f64> = self
            .e
            .matvec(&y_shift)
            .iter()
            .zip(&self.b)
            .map(|(ey, b)| ey + b)
            .collect();
        let rx: Vec<f64> = self
            .e
            .transpose()
            .matvec(&x_shift)
            .iter()
            .zip(&self.c)
            .map(|(ex, c)| ex + c)
            .collect();
        let tol_b = 1e-9 * (1.0 + norm(&self.b));
        let tol_c = 1e-9 * (1.0 + norm(&self.c));
        if norm(&ry) > tol_b {
            return Err(Error::InfeasibleLinearTerms(format!(
                "b is not in the column space of E (residual {:.3e})",
                norm(&ry)
            )));
        }
        if norm(&rx) > tol_c {
            return Err(Error::InfeasibleLinearTerms(format!(
                "c is not in the column space of E^T (residual {:.3e})",
                norm(&rx)
            )));
        }
        Ok(())
    }

    /// Minimum-norm solutions of `E y = -b` and `E^T x = -c` via the SVD.
    fn solve_shifts(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let sd = self.singular_data()?;
        let r = sd.rank();
        let ub: Vec<f64> = (0..r)
            .map(|k| (0..self.rows()).map(|i| sd.u[(i, k)] * self.b[i]).sum::<f64>())
            .collect();
        let y_shift: Vec<f64> = (0..self.cols())
            .map(|j| (0..r).map(|k| -sd.v[(j, k)] * ub[k] / sd.values[k]).sum())
            .collect();
        let vc: Vec<f64> = (0..r)
            .map(|k| (0..self.cols()).map(|j| sd.v[(j, k)] * self.c[j]).sum::<f64>())
            .collect();
        let x_shift: Vec<f64> = (0..self.rows())
            .map(|i| (0..r).map(|k| -sd.u[(i, k)] * vc[k] / sd.values[k]).sum())
            .collect();
        Ok((y_shift, x_shift))
    }

    /// Singular values, rank and bases, computed on first use and cached.
    pub fn singular_data(&self) -> Result<&SingularData> {
        if let Some(sd) = self.singular.get() {
            return Ok(sd);
        }
        if self.e.max_abs() == 0.0 {
            return Err(Error::ZeroMatrix);
        }
        let decomp = linalg::svd(&self.e);
        let sigma_max = decomp.singular_values[0];
        let rank = decomp
            .singular_values
            .iter()
            .take_while(|s| **s > RANK_TOL * sigma_max)
            .count();
        let sd = SingularData {
            values: decomp.singular_values,
            rank,
            u: decomp.u,
            v: decomp.v,
        };
        Ok(self.singular.get_or_init(|| sd))
    }

    /// Squared distance of `(x, y)` to the saddle set; zero exactly when
    /// `x` is in the null space of `E^T` and `y` in the null space of `E`.
    pub fn saddle_distance(&self, x: &[f64], y: &[f64]) -> Result<SaddleDistance> {
        if x.len() != self.rows() || y.len() != self.cols() {
            return Err(Error::DimensionMismatch(format!(
                "expected x of length {}, y of length {}",
                self.rows(),
                self.cols()
            )));
        }
        let sd = self.singular_data()?;
        let r = sd.rank();
        let mut delta_sq = 0.0;
        for k in 0..r {
            let uk: f64 = (0..self.rows()).map(|i| sd.u[(i, k)] * x[i]).sum();
            let vk: f64 = (0..self.cols()).map(|j| sd.v[(j, k)] * y[j]).sum();
            delta_sq += uk * uk + vk * vk;
        }
        Ok(SaddleDistance { delta_sq })
    }

    /// Squared distance computed straight from the state vector `z = (x, y)`.
    pub fn saddle_distance_z(&self, z: &[f64]) -> Result<SaddleDistance> {
        let (x, y) = z.split_at(self.rows());
        self.saddle_distance(x, y)
    }
}

/// Result of cancelling the linear terms by translating both players.
#[derive(Clone, Debug)]
pub struct Translation {
    pub game: BilinearGame,
    pub x_shift: Vec<f64>,
    pub y_shift: Vec<f64>,
}

/// Translates `x` and `y` so the linear terms vanish: the shifts satisfy
/// `E y_shift = -b` and `E^T x_shift = -c`. In the new coordinates
/// `x' = x - x_shift`, `y' = y - y_shift` the game is `x'^T E y'`.
pub fn translate_linear_terms(game: &BilinearGame) -> Result<Translation> {
    if game.b.iter().all(|v| *v == 0.0) && game.c.iter().all(|v| *v == 0.0) {
        return Ok(Translation {
            game: game.clone(),
            x_shift: vec![0.0; game.rows()],
            y_shift: vec![0.0; game.cols()],
        });
    }
    game.check_linear_feasibility()?;
    let (y_shift, x_shift) = game.solve_shifts()?;
    let translated = BilinearGame::from_matrix(game.e.clone())?;
    Ok(Translation { game: translated, x_shift, y_shift })
}

/// The game on the nonzero singular block, together with the basis
/// transforms that map original states onto it.
#[derive(Clone, Debug)]
pub struct SingularReduction {
    /// r x r diagonal game with positive entries.
    pub game: BilinearGame,
    /// First r left singular vectors (m x r); maps x to u_r = U_r^T x.
    pub u_r: Matrix,
    /// First r right singular vectors (n x r); maps y to v_r = V_r^T y.
    pub v_r: Matrix,
}

impl SingularReduction {
    /// Projects an original state `z = (x, y)` to the reduced coordinates
    /// `(u_r, v_r)`; the reduced state norm equals the saddle distance of
    /// the original state.
    pub fn project_state(&self, z: &[f64]) -> Vec<f64> {
        let m = self.u_r.rows();
        let (x, y) = z.split_at(m);
        let mut out = self.u_r.transpose().matvec(x);
        out.extend(self.v_r.transpose().matvec(y));
        out
    }
}

/// Reduces a (possibly singular or rectangular) game to an equivalent game
/// on the diagonal matrix of its positive singular values.
pub fn reduce_singular(game: &BilinearGame) -> Result<SingularReduction> {
    let sd = game.singular_data()?;
    let r = sd.rank();
    let u_r = sd.u.block(0, 0, game.rows(), r);
    let v_r = sd.v.block(0, 0, game.cols(), r);
    let reduced = BilinearGame::from_matrix(Matrix::diag(sd.values()))?;
    Ok(SingularReduction { game: reduced, u_r, v_r })
}

// ---------------------------------------------------------------------------
// matrix and game I/O

/// Parses a matrix from either JSON nested arrays or whitespace-delimited
/// text with a `rows cols` header line.
pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        let nested: Vec<Vec<f64>> = serde_json::from_str(trimmed)?;
        return Matrix::from_rows(&nested);
    }
    let mut tokens = text.split_whitespace();
    let rows: usize = tokens
        .next()
        .ok_or_else(|| Error::ParseMatrix("missing header".into()))?
        .parse()
        .map_err(|e| Error::ParseMatrix(format!("bad row count: {e}")))?;
    let cols: usize = tokens
        .next()
        .ok_or_else(|| Error::ParseMatrix("missing column count".into()))?
        .parse()
        .map_err(|e| Error::ParseMatrix(format!("bad column count: {e}")))?;
    let mut data = Vec::with_capacity(rows * cols);
    for tok in tokens {
        data.push(
            tok.parse::<f64>()
                .map_err(|e| Error::ParseMatrix(format!("bad entry {tok:?}: {e}")))?,
        );
    }
    if data.len() != rows * cols {
        return Err(Error::ParseMatrix(format!(
            "expected {} entries, found {}",
            rows * cols,
            data.len()
        )));
    }
    Ok(Matrix::from_fn(rows, cols, |i, j| data[i * cols + j]))
}

/// Matrix as JSON nested arrays with 17 significant digits.
pub fn matrix_to_json(m: &Matrix) -> String {
    let mut out = String::from("[");
    for i in 0..m.rows() {
        if i > 0 {
            out.push(',');
        }
        out.push('[');
        for (j, v) in m.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", fmt_g17(*v));
        }
        out.push(']');
    }
    out.push(']');
    out
}

/// Matrix as whitespace-delimited text with a `rows cols` header.
pub fn matrix_to_text(m: &Matrix) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| fmt_g17(*v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Serializable game description accepted by the CLI (`e` required,
/// `b` and `c` optional).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GameFile {
    pub e: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
}

/// Loads a game from a file holding either a `GameFile` JSON object, bare
/// JSON nested arrays, or the text matrix format.
pub fn load_game(text: &str) -> Result<BilinearGame> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        let gf: GameFile = serde_json::from_str(trimmed)?;
        let e = Matrix::from_rows(&gf.e)?;
        let b = gf.b.unwrap_or_else(|| vec![0.0; e.rows()]);
        let c = gf.c.unwrap_or_else(|| vec![0.0; e.cols()]);
        return BilinearGame::new(e, b, c);
    }
    BilinearGame::from_matrix(parse_matrix(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_game_valid() {
        let g = BilinearGame::new(Matrix::diag(&[1.0]), vec![0.0], vec![0.0]).unwrap();
        assert_eq!(g.rows(), 1);
    }

    #[test]
    fn infeasible_b_rejected() {
        // E = [[1,0],[0,0]], b = (0,1) is outside range(E)
        let e = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let err = BilinearGame::new(e, vec![0.0, 1.0], vec![0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::InfeasibleLinearTerms(_)));
    }

    #[test]
    fn diagonal_singular_data() {
        let g = BilinearGame::from_matrix(Matrix::diag(&[2.0, 1.0])).unwrap();
        let sd = g.singular_data().unwrap();
        assert!((sd.sigma_max() - 2.0).abs() < 1e-12);
        assert!((sd.sigma_min() - 1.0).abs() < 1e-12);
        assert!((sd.condition_number() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_has_unit_singular_values() {
        let e = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let g = BilinearGame::from_matrix(e).unwrap();
        let sd = g.singular_data().unwrap();
        assert!((sd.sigma_max() - 1.0).abs() < 1e-12);
        assert!((sd.sigma_min() - 1.0).abs() < 1e-12);
        assert_eq!(sd.rank(), 2);
    }

    #[test]
    fn zero_matrix_errors() {
        let g = BilinearGame::from_matrix(Matrix::zeros(2, 2)).unwrap();
        assert!(matches!(g.singular_data(), Err(Error::ZeroMatrix)));
    }

    #[test]
    fn rank_two_rectangular() {
        // 5x3 built from two outer products
        let u1 = [1.0, 0.5, -0.3, 0.2, 0.9];
        let u2 = [0.1, -1.0, 0.4, 0.7, -0.2];
        let v1 = [2.0, -1.0, 0.5];
        let v2 = [0.3, 0.8, -1.1];
        let e = Matrix::from_fn(5, 3, |i, j| u1[i] * v1[j] + u2[i] * v2[j]);
        let g = BilinearGame::from_matrix(e.clone()).unwrap();
        let sd = g.singular_data().unwrap();
        assert_eq!(sd.rank(), 2);
        // cross-check against eigenvalues of E^T E (2x2 nonzero block)
        let ete = e.transpose().matmul(&e);
        // trace of E^T E equals the sum of squared singular values
        let trace: f64 = (0..3).map(|i| ete[(i, i)]).sum();
        let s: f64 = sd.values().iter().map(|v| v * v).sum();
        assert!((trace - s).abs() < 1e-9);
    }

    #[test]
    fn translate_identity_example() {
        let g = BilinearGame::new(Matrix::identity(2), vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        let t = translate_linear_terms(&g).unwrap();
        assert!((t.y_shift[0] + 1.0).abs() < 1e-12 && t.y_shift[1].abs() < 1e-12);
        assert!(t.x_shift[0].abs() < 1e-12 && (t.x_shift[1] + 1.0).abs() < 1e-12);
        assert!(t.game.b().iter().all(|v| *v == 0.0));
        assert!(t.game.c().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn translate_zero_terms_is_identity() {
        let g = BilinearGame::from_matrix(Matrix::diag(&[3.0, 1.0])).unwrap();
        let t = translate_linear_terms(&g).unwrap();
        assert!(t.x_shift.iter().all(|v| *v == 0.0));
        assert!(t.y_shift.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn translate_random_full_rank() {
        use crate::rng::SplitMix64;
        let mut rng = SplitMix64::new(3);
        for _ in 0..20 {
            let e = Matrix::from_fn(3, 3, |_, _| rng.uniform(-1.0, 1.0));
            if e.inverse().is_err() {
                continue;
            }
            let b: Vec<f64> = (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let c: Vec<f64> = (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let g = BilinearGame::new(e.clone(), b.clone(), c.clone()).unwrap();
            let t = translate_linear_terms(&g).unwrap();
            let ry: Vec<f64> = e
                .matvec(&t.y_shift)
                .iter()
                .zip(&b)
                .map(|(ey, b)| ey + b)
                .collect();
            let rx: Vec<f64> = e
                .transpose()
                .matvec(&t.x_shift)
                .iter()
                .zip(&c)
                .map(|(ex, c)| ex + c)
                .collect();
            assert!(norm(&ry) <= 1e-10 * (1.0 + norm(&b)));
            assert!(norm(&rx) <= 1e-10 * (1.0 + norm(&c)));
        }
    }

    #[test]
    fn saddle_distance_identity() {
        let g = BilinearGame::from_matrix(Matrix::identity(2)).unwrap();
        let d = g.saddle_distance(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((d.delta_sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn saddle_distance_zero_on_null_spaces() {
        // E = diag(2, 0): null(E^T) = span(e2), null(E) = span(e2)
        let g = BilinearGame::from_matrix(Matrix::diag(&[2.0, 0.0])).unwrap();
        let d = g.saddle_distance(&[0.0, 5.0], &[0.0, -3.0]).unwrap();
        assert!(d.delta_sq < 1e-20);
        // x in null(E^T) only: contribution only from the y term
        let d2 = g.saddle_distance(&[0.0, 5.0], &[4.0, 0.0]).unwrap();
        assert!((d2.delta_sq - 16.0).abs() < 1e-10);
    }

    #[test]
    fn saddle_distance_dimension_check() {
        let g = BilinearGame::from_matrix(Matrix::identity(2)).unwrap();
        assert!(g.saddle_distance(&[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn reduce_diag_with_zero() {
        let g = BilinearGame::from_matrix(Matrix::diag(&[2.0, 0.0])).unwrap();
        let red = reduce_singular(&g).unwrap();
        assert_eq!(red.game.rows(), 1);
        assert!((red.game.matrix()[(0, 0)] - 2.0).abs() < 1e-12);
        // projector keeps the first coordinate
        let z = red.project_state(&[3.0, 7.0, -4.0, 9.0]);
        assert_eq!(z.len(), 2);
        assert!((z[0].abs() - 3.0).abs() < 1e-10);
        assert!((z[1].abs() - 4.0).abs() < 1e-10);
    }

    #[test]
    fn reduce_full_rank_is_svd_diagonalization() {
        let e = Matrix::from_rows(&[vec![1.0, 0.4], vec![-0.3, 2.0]]).unwrap();
        let g = BilinearGame::from_matrix(e).unwrap();
        let red = reduce_singular(&g).unwrap();
        assert_eq!(red.game.rows(), 2);
        let sd = g.singular_data().unwrap();
        for (i, s) in sd.values().iter().enumerate() {
            assert!((red.game.matrix()[(i, i)] - s).abs() < 1e-12);
        }
    }

    #[test]
    fn pseudo_inverse_projector_agreement() {
        use crate::rng::SplitMix64;
        let mut rng = SplitMix64::new(9);
        for _ in 0..20 {
            let m = 2 + (rng.next_u64() % 3) as usize;
            let n = 2 + (rng.next_u64() % 3) as usize;
            let e = Matrix::from_fn(m, n, |_, _| rng.uniform(-1.0, 1.0));
            let g = BilinearGame::from_matrix(e.clone()).unwrap();
            let x: Vec<f64> = (0..m).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let d = g.saddle_distance(&x, &y).unwrap();
            // oracle: explicit projectors from the SVD factors
            let sd = g.singular_data().unwrap();
            let r = sd.rank();
            let ur = sd.u().block(0, 0, m, r);
            let vr = sd.v().block(0, 0, n, r);
            let px = ur.matmul(&ur.transpose()).matvec(&x);
            let py = vr.matmul(&vr.transpose()).matvec(&y);
            let oracle = linalg::dot(&px, &px) + linalg::dot(&py, &py);
            assert!((d.delta_sq - oracle).abs() <= 1e-9);
        }
    }

    #[test]
    fn matrix_text_round_trip() {
        let m = Matrix::from_rows(&[vec![1.0 / 3.0, -2.5e-17], vec![6.02e23, 0.1]]).unwrap();
        let text = matrix_to_text(&m);
        let back = parse_matrix(&text).unwrap();
        assert_eq!(back, m);
        let json = matrix_to_json(&m);
        let back2 = parse_matrix(&json).unwrap();
        assert_eq!(back2, m);
    }

    #[test]
    fn game_file_parsing() {
        let g = load_game("{\"e\": [[1.0, 0.0], [0.0, 2.0]], \"b\": [1.0, 2.0]}").unwrap();
        assert_eq!(g.b(), &[1.0, 2.0]);
        let g2 = load_game("2 2\n1 0\n0 2\n").unwrap();
        assert_eq!(g2.matrix()[(1, 1)], 2.0);
        let g3 = load_game("[[1.0, 0.0], [0.0, 2.0]]").unwrap();
        assert_eq!(g3.matrix()[(1, 1)], 2.0);
    }
}
