//! Finite quantum games.
//!
//! Each player `i` controls a density matrix on a `d_i`-dimensional space.
//! A referee measures the joint state with a POVM `{P_ω}` and pays
//! `w_i(ω)`, so the expected payoff is `tr[(ρ_1 ⊗ … ⊗ ρ_N) W_i]` with the
//! aggregate observable `W_i = Σ_ω w_i(ω) P_ω`. Player `i` occupies tensor
//! factor `i`.

use crate::error::{Error, Result};
use crate::matrix::{
    c, frobenius, hermitian_eig, tensor_product_all, trace_product, CMatrix, DensityMatrix,
    HermitianMatrix, DENSITY_TOL,
};

#[derive(Clone, Debug)]
pub struct PovmOutcome {
    pub label: String,
    pub operator: HermitianMatrix,
    /// `w_i(ω)` for every player.
    pub payoffs: Vec<f64>,
}

/// One state per player.
#[derive(Clone, Debug, PartialEq)]
pub struct StateProfile(Vec<DensityMatrix>);

impl StateProfile {
    pub fn new(states: Vec<DensityMatrix>) -> Self {
        Self(states)
    }

    pub fn uniform(dims: &[usize]) -> Self {
        Self(
            dims.iter()
                .map(|&d| DensityMatrix::maximally_mixed(d))
                .collect(),
        )
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.0
    }

    pub fn get(&self, player: usize) -> &DensityMatrix {
        &self.0[player]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn with_state(&self, player: usize, state: DensityMatrix) -> Self {
        let mut s = self.0.clone();
        s[player] = state;
        Self(s)
    }

    /// Frobenius distance of the stacked profile.
    pub fn distance(&self, other: &StateProfile) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.distance(b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn into_inner(self) -> Vec<DensityMatrix> {
        self.0
    }
}

/// Payoff table over joint pure actions, row-major in player order.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalTable {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl ClassicalTable {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != values.len() || shape.iter().any(|&s| s == 0) {
            return Err(Error::InvalidGame(format!(
                "table of shape {shape:?} needs {n} entries, got {}",
                values.len()
            )));
        }
        Ok(Self { shape, values })
    }

    /// Two-player table from a row-major matrix.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidGame("ragged payoff matrix".into()));
        }
        Self::new(vec![rows.len(), cols], rows.concat())
    }

    pub fn negated(&self) -> Self {
        Self {
            shape: self.shape.clone(),
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuantumGame {
    player_dims: Vec<usize>,
    outcomes: Vec<PovmOutcome>,
    aggregates: Vec<HermitianMatrix>,
    zero_sum: bool,
    /// `joint_index[i][a * rest + b]`: joint index of player `i` playing `a`
    /// while the others play flat multi-index `b`.
    joint_index: Vec<Vec<usize>>,
}

impl QuantumGame {
    pub fn new(
        player_dims: Vec<usize>,
        outcomes: Vec<PovmOutcome>,
        zero_sum: bool,
    ) -> Result<Self> {
        if player_dims.is_empty() || player_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidGame(format!(
                "player dimensions must be positive, got {player_dims:?}"
            )));
        }
        if outcomes.is_empty() {
            return Err(Error::InvalidGame(
                "at least one outcome is required".into(),
            ));
        }
        let n = player_dims.len();
        let joint: usize = player_dims.iter().product();
        let mut total = CMatrix::zeros(joint, joint);
        for o in &outcomes {
            if o.operator.dim() != joint {
                return Err(Error::InvalidGame(format!(
                    "outcome {:?} acts on dimension {} but the joint space has dimension {joint}",
                    o.label,
                    o.operator.dim()
                )));
            }
            if o.payoffs.len() != n {
                return Err(Error::InvalidGame(format!(
                    "outcome {:?} lists {} payoffs for {n} players",
                    o.label,
                    o.payoffs.len()
                )));
            }
            if o.payoffs.iter().any(|w| !w.is_finite()) {
                return Err(Error::InvalidGame(format!(
                    "outcome {:?} has a non-finite payoff",
                    o.label
                )));
            }
            let min = hermitian_eig(&o.operator)?.min_eigenvalue();
            if min < -DENSITY_TOL {
                return Err(Error::InvalidGame(format!(
                    "outcome {:?} is not positive semi-definite (min eigenvalue {min:e})",
                    o.label
                )));
            }
            total += o.operator.matrix();
        }
        let resid = frobenius(&(total - CMatrix::identity(joint, joint)));
        if resid > DENSITY_TOL {
            return Err(Error::InvalidGame(format!(
                "POVM is incomplete: ||sum P - I||_F = {resid:e}"
            )));
        }
        if zero_sum {
            for o in &outcomes {
                let s: f64 = o.payoffs.iter().sum();
                let scale: f64 = o.payoffs.iter().map(|w| w.abs()).sum::<f64>().max(1.0);
                if s.abs() > 1e-10 * scale {
                    return Err(Error::InvalidGame(format!(
                        "declared zero-sum but payoffs of outcome {:?} sum to {s}",
                        o.label
                    )));
                }
            }
        }
        let aggregates = (0..n)
            .map(|i| {
                let mut w = CMatrix::zeros(joint, joint);
                for o in &outcomes {
                    w += o.operator.matrix() * c(o.payoffs[i], 0.0);
                }
                HermitianMatrix::hermitize(w)
            })
            .collect();
        let joint_index = (0..n).map(|i| joint_index_table(&player_dims, i)).collect();
        Ok(Self {
            player_dims,
            outcomes,
            aggregates,
            zero_sum,
            joint_index,
        })
    }

    /// Lifts classical payoff tables: one computational-basis projector per
    /// joint pure action.
    pub fn from_classical(tables: &[ClassicalTable]) -> Result<Self> {
        let first = tables
            .first()
            .ok_or_else(|| Error::InvalidGame("no payoff tables".into()))?;
        if tables.iter().any(|t| t.shape != first.shape) {
            return Err(Error::InvalidGame(
                "payoff tables have different shapes".into(),
            ));
        }
        if first.shape.len() != tables.len() {
            return Err(Error::InvalidGame(format!(
                "{} tables supplied for a {}-player shape",
                tables.len(),
                first.shape.len()
            )));
        }
        let dims = first.shape.clone();
        let joint: usize = dims.iter().product();
        let zero_sum = (0..joint).all(|k| tables.iter().map(|t| t.values[k]).sum::<f64>() == 0.0);
        let outcomes = (0..joint)
            .map(|k| {
                let mut diag = vec![0.0; joint];
                diag[k] = 1.0;
                PovmOutcome {
                    label: action_label(&dims, k),
                    operator: HermitianMatrix::from_real_diagonal(&diag),
                    payoffs: tables.iter().map(|t| t.values[k]).collect(),
                }
            })
            .collect();
        Self::new(dims, outcomes, zero_sum)
    }

    /// Same payoffs, measurement operators rotated to `U P_ω U†`.
    pub fn conjugated(&self, u: &CMatrix) -> Result<Self> {
        let outcomes = self
            .outcomes
            .iter()
            .map(|o| PovmOutcome {
                label: o.label.clone(),
                operator: HermitianMatrix::hermitize(u * o.operator.matrix() * u.adjoint()),
                payoffs: o.payoffs.clone(),
            })
            .collect();
        Self::new(self.player_dims.clone(), outcomes, self.zero_sum)
    }

    pub fn player_dims(&self) -> &[usize] {
        &self.player_dims
    }

    pub fn num_players(&self) -> usize {
        self.player_dims.len()
    }

    pub fn joint_dim(&self) -> usize {
        self.player_dims.iter().product()
    }

    pub fn outcomes(&self) -> &[PovmOutcome] {
        &self.outcomes
    }

    pub fn aggregate(&self, player: usize) -> &HermitianMatrix {
        &self.aggregates[player]
    }

    pub fn is_zero_sum(&self) -> bool {
        self.zero_sum
    }

    fn check_profile(&self, profile: &StateProfile) -> Result<()> {
        let dims: Vec<usize> = profile.states().iter().map(|s| s.dim()).collect();
        if dims != self.player_dims {
            return Err(Error::DimensionMismatch(format!(
                "profile dimensions {dims:?} do not match game dimensions {:?}",
                self.player_dims
            )));
        }
        Ok(())
    }

    fn check_player(&self, player: usize) -> Result<()> {
        if player >= self.num_players() {
            return Err(Error::DimensionMismatch(format!(
                "player {player} out of range for {} players",
                self.num_players()
            )));
        }
        Ok(())
    }

    pub fn joint_state(&self, profile: &StateProfile) -> Result<CMatrix> {
        self.check_profile(profile)?;
        Ok(tensor_product_all(
            profile.states().iter().map(|s| s.matrix()),
        ))
    }

    /// `tr[(ρ_1 ⊗ … ⊗ ρ_N) W_player]`.
    pub fn payoff(&self, player: usize, profile: &StateProfile) -> Result<f64> {
        self.check_player(player)?;
        let joint = self.joint_state(profile)?;
        real_trace(&joint, self.aggregates[player].matrix())
    }

    /// Outcome probabilities `tr[(⊗ρ_j) P_ω]`.
    pub fn outcome_probabilities(&self, profile: &StateProfile) -> Result<Vec<f64>> {
        let joint = self.joint_state(profile)?;
        self.outcomes
            .iter()
            .map(|o| real_trace(&joint, o.operator.matrix()))
            .collect()
    }

    /// Individual payoff gradient `V_i(ρ)` with `u_i(X; ρ_−i) = tr(X V_i)`.
    /// Reads only the opponents' states.
    pub fn gradient_field(&self, player: usize, profile: &StateProfile) -> Result<HermitianMatrix> {
        self.check_player(player)?;
        self.check_profile(profile)?;
        let di = self.player_dims[player];
        let others = tensor_product_all(
            profile
                .states()
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != player)
                .map(|(_, s)| s.matrix()),
        );
        let rest = others.nrows();
        let w = self.aggregates[player].matrix();
        let idx = &self.joint_index[player];
        let mut v = CMatrix::zeros(di, di);
        for a in 0..di {
            for a2 in a..di {
                let mut acc = c(0.0, 0.0);
                for b in 0..rest {
                    let row_b = idx[a2 * rest + b];
                    for b2 in 0..rest {
                        // V[a,a'] = Σ ρ_−i[b,b'] W[(a,b'),(a',b)]
                        acc += others[(b, b2)] * w[(idx[a * rest + b2], row_b)];
                    }
                }
                v[(a, a2)] = acc;
                v[(a2, a)] = acc.conj();
            }
        }
        Ok(HermitianMatrix::hermitize(v))
    }

    pub fn gradients(&self, profile: &StateProfile) -> Result<Vec<HermitianMatrix>> {
        (0..self.num_players())
            .map(|i| self.gradient_field(i, profile))
            .collect()
    }

    /// `Σ_i [λ_max(V_i) − tr(ρ_i V_i)]`; zero exactly at Nash equilibria.
    pub fn exploitability(&self, profile: &StateProfile) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..self.num_players() {
            let v = self.gradient_field(i, profile)?;
            let best = hermitian_eig(&v)?.max_eigenvalue();
            let realized = profile.get(i).hermitian().inner(&v);
            total += (best - realized).max(0.0);
        }
        Ok(total)
    }
}

fn real_trace(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let z = trace_product(a, b);
    if z.im.abs() > 1e-10 * (1.0 + z.re.abs()) {
        return Err(Error::NotHermitian {
            residual: z.im.abs(),
            allowed: 1e-10 * (1.0 + z.re.abs()),
        });
    }
    Ok(z.re)
}

fn joint_index_table(dims: &[usize], player: usize) -> Vec<usize> {
    let di = dims[player];
    let other_dims: Vec<usize> = dims
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != player)
        .map(|(_, &d)| d)
        .collect();
    let rest: usize = other_dims.iter().product();
    let mut table = vec![0; di * rest];
    for a in 0..di {
        for b in 0..rest {
            // digits of b over the other players, most significant first
            let mut digits = vec![0; other_dims.len()];
            let mut r = b;
            for (k, &d) in other_dims.iter().enumerate().rev() {
                digits[k] = r % d;
                r /= d;
            }
            let mut joint = 0;
            let mut next = digits.iter();
            for (j, &d) in dims.iter().enumerate() {
                let digit = if j == player {
                    a
                } else {
                    *next.next().unwrap()
                };
                joint = joint * d + digit;
            }
            table[a * rest + b] = joint;
        }
    }
    table
}

fn action_label(dims: &[usize], mut k: usize) -> String {
    let mut digits = vec![0; dims.len()];
    for (j, &d) in dims.iter().enumerate().rev() {
        digits[j] = k % d;
        k /= d;
    }
    digits
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// The two-player zero-sum game with row payoffs `[[2, 1], [-2, -1]]`;
/// (row 1, column 2) is a strict Nash equilibrium.
pub fn strict_ne_game() -> QuantumGame {
    let p1 = ClassicalTable::from_rows(&[&[2.0, 1.0], &[-2.0, -1.0]]).unwrap();
    let p2 = p1.negated();
    QuantumGame::from_classical(&[p1, p2]).unwrap()
}

/// Matching pennies lifted to qubits; the uniform profile is its unique,
/// full-rank equilibrium.
pub fn matching_pennies() -> QuantumGame {
    let p1 = ClassicalTable::from_rows(&[&[1.0, -1.0], &[-1.0, 1.0]]).unwrap();
    let p2 = p1.negated();
    QuantumGame::from_classical(&[p1, p2]).unwrap()
}
