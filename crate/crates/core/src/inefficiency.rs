//! Price-of-uncorrelation indices.

use crate::game::GameTree;

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum InefficiencyError {
    #[error("degenerate: PoU undefined (all leaf payoffs equal {0})")]
    Degenerate(f64),
    #[error("game has no leaves")]
    NoLeaves,
}

/// Affine map `u -> (u - offset) / scale`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Normalization {
    pub offset: f64,
    pub scale: f64,
}

impl Normalization {
    pub const IDENTITY: Normalization = Normalization { offset: 0.0, scale: 1.0 };

    pub fn apply(&self, u: f64) -> f64 {
        (u - self.offset) / self.scale
    }

    pub fn invert(&self, u: f64) -> f64 {
        u * self.scale + self.offset
    }
}

/// Maps leaf payoffs onto `[0, 1]`.
pub fn normalize_payoffs(game: &GameTree) -> Result<(GameTree, Normalization), InefficiencyError> {
    let (lo, hi) = game.utility_range();
    if !lo.is_finite() {
        return Err(InefficiencyError::NoLeaves);
    }
    if hi - lo <= 0.0 {
        return Err(InefficiencyError::Degenerate(lo));
    }
    let n = Normalization { offset: lo, scale: hi - lo };
    Ok((game.map_utilities(|u| n.apply(u)), n))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoUReport {
    pub v_com: f64,
    pub v_cor: f64,
    pub v_no: f64,
    pub com_no: f64,
    pub cor_no: f64,
    pub com_cor: f64,
    /// Set when some index has a zero denominator and is reported as
    /// infinite.
    pub infinite: bool,
    pub normalization: Normalization,
}

impl PoUReport {
    /// `com_no = com_cor * cor_no` within `tol` (vacuous when infinite).
    pub fn is_consistent(&self, tol: f64) -> bool {
        self.infinite || (self.com_no - self.com_cor * self.cor_no).abs() <= tol
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }
}

/// Values at or below this count as zero denominators.
pub const ZERO_TOL: f64 = 1e-12;

/// Index ratios from values of the normalized game.
pub fn compute_pou(v_com: f64, v_cor: f64, v_no: f64) -> PoUReport {
    let mut infinite = false;
    let mut ratio = |a: f64, b: f64| {
        if b <= ZERO_TOL {
            infinite = true;
            f64::INFINITY
        } else {
            a / b
        }
    };
    let com_no = ratio(v_com, v_no);
    let cor_no = ratio(v_cor, v_no);
    let com_cor = ratio(v_com, v_cor);
    PoUReport {
        v_com,
        v_cor,
        v_no,
        com_no,
        cor_no,
        com_cor,
        infinite,
        normalization: Normalization::IDENTITY,
    }
}
