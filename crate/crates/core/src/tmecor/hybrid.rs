use alloc::vec;
use alloc::vec::Vec;

use crate::lp::{solve_lp, LinearProgram, Relation, Sense, Status, Var};
use crate::maxmin::{solve_maxmin, MaxminError};
use crate::sequence::ConstraintSystem;

/// Optimal team distribution over the given columns.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridSolution {
    pub value: f64,
    pub sigma: Vec<f64>,
    /// Adversary plan read off the duals of the per-sequence rows.
    pub adversary_plan: Vec<f64>,
    pub iterations: usize,
}

/// `max sum_h f_A(h) v(h)` subject to one row per adversary sequence and
/// `sum sigma = 1`. Each column lists `(adversary sequence, utility)`.
pub fn hybrid_maxmin(adversary: &ConstraintSystem, columns: &[Vec<(usize, f64)>]) -> Result<HybridSolution, MaxminError> {
    let simplex = ConstraintSystem {
        num_sequences: columns.len(),
        rows: vec![(0..columns.len()).map(|p| (p, 1.0)).collect()],
        rhs: vec![1.0],
        row_infoset: vec![None],
    };
    let payoff: Vec<(usize, usize, f64)> = columns
        .iter()
        .enumerate()
        .flat_map(|(p, col)| col.iter().map(move |&(q, u)| (p, q, u)))
        .collect();
    let sol = solve_maxmin(&simplex, adversary, &payoff)?;
    Ok(HybridSolution {
        value: sol.value,
        sigma: sol.max_plan,
        adversary_plan: sol.min_plan,
        iterations: sol.iterations,
    })
}

/// `min v` subject to `v - sum_q U_h(q, p) r_A(q) >= 0` for every column
/// and `F_A r_A = f_A`. Returns the value and the adversary plan.
pub fn hybrid_minmax(adversary: &ConstraintSystem, columns: &[Vec<(usize, f64)>]) -> Result<(f64, Vec<f64>), MaxminError> {
    let mut lp = LinearProgram::new(Sense::Minimize);
    let r: Vec<Var> = (0..adversary.num_sequences).map(|_| lp.add_nonneg(0.0)).collect();
    let v = lp.add_free(1.0);
    for col in columns {
        let mut coeffs = vec![(v, 1.0)];
        coeffs.extend(col.iter().map(|&(q, u)| (r[q], -u)));
        lp.add_row(coeffs, Relation::Ge, 0.0);
    }
    for (row, &f) in adversary.rows.iter().zip(&adversary.rhs) {
        lp.add_row(row.iter().map(|&(q, c)| (r[q], c)).collect(), Relation::Eq, f);
    }
    let sol = solve_lp(&lp)?;
    if sol.status != Status::Optimal {
        return Err(MaxminError::NotOptimal(sol.status));
    }
    Ok((sol.objective, r.iter().map(|x| sol.values[x.0].max(0.0)).collect()))
}
