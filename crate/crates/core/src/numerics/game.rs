//! The "information per unit cost" ratio game.
//!
//! Given non-negative gain rows `d_j` and strictly positive costs `κ`, find the
//! action distribution `λ` maximising `min_j (λ·d_j)/(λ·κ)`. The value `t` is
//! found by bisection: `t` is achievable exactly when the zero-sum game with
//! payoff `d_j[a] − t·κ[a]` (maximiser picks the action column, minimiser the
//! row) has non-negative value. Each inner game is solved exactly with a small
//! dense simplex.

use super::NumericsError;

#[derive(Debug, Clone, PartialEq)]
pub struct RatioGame {
    pub gain_rows: Vec<Vec<f64>>,
    pub costs: Vec<f64>,
    /// Bisection tolerance on the value.
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioSolution {
    pub weights: Vec<f64>,
    pub value: f64,
    /// Some gain row is identically zero: every distribution has value 0 and
    /// the uniform one is returned.
    pub degenerate: bool,
}

impl RatioGame {
    pub fn new(gain_rows: Vec<Vec<f64>>, costs: Vec<f64>) -> Self {
        Self { gain_rows, costs, tol: 1e-6 }
    }

    fn validate(&self) -> Result<(), NumericsError> {
        let n = self.costs.len();
        if n == 0 {
            return Err(NumericsError::InvalidGame("no actions".into()));
        }
        if self.gain_rows.is_empty() {
            return Err(NumericsError::InvalidGame("no gain rows".into()));
        }
        if let Some(c) = self.costs.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(NumericsError::InvalidGame(format!("cost {c} is not positive and finite")));
        }
        for (j, row) in self.gain_rows.iter().enumerate() {
            if row.len() != n {
                return Err(NumericsError::InvalidGame(format!(
                    "gain row {j} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if row.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
                return Err(NumericsError::InvalidGame(format!("gain row {j} has a negative or non-finite entry")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(NumericsError::InvalidGame(format!("tolerance {} must be positive", self.tol)));
        }
        Ok(())
    }

    /// `min_j (λ·d_j)/(λ·κ)` for a given distribution.
    pub fn ratio_value(&self, weights: &[f64]) -> f64 {
        let spend: f64 = weights.iter().zip(&self.costs).map(|(w, c)| w * c).sum();
        self.gain_rows.iter().map(|d| dot(weights, d) / spend).fold(f64::INFINITY, f64::min)
    }
}

pub fn solve_ratio_game(game: &RatioGame) -> Result<RatioSolution, NumericsError> {
    game.validate()?;
    let n = game.costs.len();
    if game.gain_rows.iter().any(|row| row.iter().all(|&d| d == 0.0)) {
        return Ok(RatioSolution { weights: vec![1.0 / n as f64; n], value: 0.0, degenerate: true });
    }

    let mut hi = 0.0f64;
    for row in &game.gain_rows {
        for (d, c) in row.iter().zip(&game.costs) {
            hi = hi.max(d / c);
        }
    }
    let mut lo = 0.0;
    let (mut best, _) = solve_shifted_game(game, 0.0);
    while hi - lo > game.tol {
        let mid = 0.5 * (lo + hi);
        let (weights, value) = solve_shifted_game(game, mid);
        if value >= -1e-12 * hi.max(1.0) {
            lo = mid;
            best = weights;
        } else {
            hi = mid;
        }
    }
    let value = game.ratio_value(&best);
    Ok(RatioSolution { weights: best, value, degenerate: false })
}

fn solve_shifted_game(game: &RatioGame, t: f64) -> (Vec<f64>, f64) {
    let payoff: Vec<Vec<f64>> =
        game.gain_rows.iter().map(|row| row.iter().zip(&game.costs).map(|(d, c)| d - t * c).collect()).collect();
    solve_matrix_game(&payoff)
}

/// Value and optimal column strategy of `max_λ min_j Σ_a λ_a M[j][a]`.
pub(crate) fn solve_matrix_game(payoff: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let rows = payoff.len();
    let cols = payoff[0].len();
    let min_entry = payoff.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - min_entry;

    // Minimiser's LP over y ≥ 0: max Σ y_j  s.t.  Σ_j M'[j][a] y_j ≤ 1 for each a.
    // One tableau row per action, columns: y (rows), slacks (cols), rhs.
    let width = rows + cols + 1;
    let mut tab = vec![vec![0.0; width]; cols];
    for (a, tab_row) in tab.iter_mut().enumerate() {
        for j in 0..rows {
            tab_row[j] = payoff[j][a] + shift;
        }
        tab_row[rows + a] = 1.0;
        tab_row[width - 1] = 1.0;
    }
    let mut obj = vec![0.0; width];
    for o in obj.iter_mut().take(rows) {
        *o = -1.0;
    }
    let mut basis: Vec<usize> = (rows..rows + cols).collect();

    const EPS: f64 = 1e-12;
    for _ in 0..50_000 {
        // Bland's rule: lowest-index improving column
        let Some(enter) = (0..width - 1).find(|&k| obj[k] < -EPS) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for (r, tab_row) in tab.iter().enumerate() {
            let coef = tab_row[enter];
            if coef > EPS {
                let ratio = tab_row[width - 1] / coef;
                let better = ratio < best_ratio - EPS
                    || (ratio <= best_ratio + EPS && leave.is_some_and(|l| basis[r] < basis[l]));
                if better {
                    best_ratio = ratio;
                    leave = Some(r);
                }
            }
        }
        // bounded: every column of M' is strictly positive
        let leave = leave.expect("shifted game LP is bounded");
        pivot(&mut tab, &mut obj, leave, enter);
        basis[leave] = enter;
    }

    let z = obj[width - 1];
    let mut weights: Vec<f64> = (0..cols).map(|a| obj[rows + a].max(0.0) / z).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    (weights, 1.0 / z - shift)
}

fn pivot(tab: &mut [Vec<f64>], obj: &mut [f64], row: usize, col: usize) {
    let p = tab[row][col];
    for v in tab[row].iter_mut() {
        *v /= p;
    }
    let pivot_row = tab[row].clone();
    for (r, tab_row) in tab.iter_mut().enumerate() {
        if r == row {
            continue;
        }
        let f = tab_row[col];
        if f != 0.0 {
            for (v, p) in tab_row.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
        }
    }
    let f = obj[col];
    if f != 0.0 {
        for (v, p) in obj.iter_mut().zip(&pivot_row) {
            *v -= f * p;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::ratio_game_grid;

    fn solve(rows: Vec<Vec<f64>>, costs: Vec<f64>) -> RatioSolution {
        solve_ratio_game(&RatioGame::new(rows, costs)).unwrap()
    }

    #[test]
    fn single_row_picks_best_ratio() {
        let s = solve(vec![vec![2.0, 1.0]], vec![1.0, 1.0]);
        assert!((s.weights[0] - 1.0).abs() < 1e-9);
        assert!((s.value - 2.0).abs() < 1e-6);
    }

    #[test]
    fn two_orthogonal_rows() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let (w_grid, v_grid) = ratio_game_grid(&rows, &[1.0, 1.0], 1000);
        assert!((v_grid - 0.5).abs() < 1e-9 && (w_grid[0] - 0.5).abs() < 1e-9);
        let s = solve(rows, vec![1.0, 1.0]);
        assert!((s.value - 0.5).abs() < 2e-6);
        assert!((s.weights[0] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn equalising_weights() {
        let rows = vec![vec![2.0, 0.0], vec![0.0, 1.0]];
        let (_, v_grid) = ratio_game_grid(&rows, &[1.0, 1.0], 3000);
        assert!((v_grid - 2.0 / 3.0).abs() < 1e-9);
        let s = solve(rows, vec![1.0, 1.0]);
        assert!((s.value - 2.0 / 3.0).abs() < 2e-6);
        assert!((s.weights[0] - 1.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn unequal_costs() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 2.0]];
        let (w_grid, v_grid) = ratio_game_grid(&rows, &[1.0, 2.0], 3000);
        assert!((v_grid - 0.5).abs() < 1e-9 && (w_grid[0] - 2.0 / 3.0).abs() < 1e-3);
        let s = solve(rows, vec![1.0, 2.0]);
        assert!((s.value - 0.5).abs() < 2e-6);
        assert!((s.weights[0] - 2.0 / 3.0).abs() < 1e-3);
    }

    #[test]
    fn zero_row_is_degenerate() {
        let s = solve(vec![vec![0.0, 0.0], vec![1.0, 2.0]], vec![1.0, 1.0]);
        assert!(s.degenerate);
        assert_eq!(s.value, 0.0);
        assert_eq!(s.weights, vec![0.5, 0.5]);
    }

    #[test]
    fn invalid_games() {
        assert!(solve_ratio_game(&RatioGame::new(vec![], vec![1.0])).is_err());
        assert!(solve_ratio_game(&RatioGame::new(vec![vec![1.0]], vec![0.0])).is_err());
        assert!(solve_ratio_game(&RatioGame::new(vec![vec![1.0, 2.0]], vec![1.0])).is_err());
        assert!(solve_ratio_game(&RatioGame::new(vec![vec![-1.0]], vec![1.0])).is_err());
    }

    #[test]
    fn matrix_game_rock_paper_scissors() {
        let m = vec![vec![0.0, -1.0, 1.0], vec![1.0, 0.0, -1.0], vec![-1.0, 1.0, 0.0]];
        let (w, v) = solve_matrix_game(&m);
        assert!(v.abs() < 1e-12);
        for x in w {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn many_rows_large_instance() {
        // 56 rows x 4 actions, the desk-scale exploration size
        let rows: Vec<Vec<f64>> =
            (0..56).map(|j| (0..4).map(|a| ((j * 7 + a * 3) % 11) as f64 + 0.1).collect()).collect();
        let game = RatioGame::new(rows, vec![1.0, 2.0, 0.5, 3.0]);
        let s = solve_ratio_game(&game).unwrap();
        assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(s.weights.iter().all(|&w| w >= 0.0));
        assert!((game.ratio_value(&s.weights) - s.value).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn value_matches_grid_three_actions(
            d in proptest::collection::vec(proptest::collection::vec(0.0f64..5.0, 3), 1..4),
            k in proptest::collection::vec(0.2f64..3.0, 3),
        ) {
            proptest::prop_assume!(d.iter().all(|r| r.iter().any(|&x| x > 0.05)));
            let game = RatioGame::new(d.clone(), k.clone());
            let s = solve_ratio_game(&game).unwrap();
            let (_, grid) = ratio_game_grid(&d, &k, 300);
            let sum: f64 = s.weights.iter().sum();
            proptest::prop_assert!((sum - 1.0).abs() < 1e-9);
            // achieved, and never beaten by the grid beyond its resolution
            proptest::prop_assert!(game.ratio_value(&s.weights) >= s.value - game.tol);
            proptest::prop_assert!(s.value >= grid - 2.0 * game.tol, "solver {} grid {}", s.value, grid);
        }

        #[test]
        fn cost_scaling_covariance(
            d in proptest::collection::vec(proptest::collection::vec(0.1f64..5.0, 3), 1..4),
            k in proptest::collection::vec(0.2f64..3.0, 3),
            c in 0.1f64..10.0,
        ) {
            let base = solve_ratio_game(&RatioGame::new(d.clone(), k.clone())).unwrap();
            let scaled_costs: Vec<f64> = k.iter().map(|x| x * c).collect();
            let scaled = solve_ratio_game(&RatioGame::new(d, scaled_costs)).unwrap();
            proptest::prop_assert!((scaled.value * c - base.value).abs() < 1e-5 * (1.0 + c));
        }
    }
}
