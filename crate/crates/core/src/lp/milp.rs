use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use super::simplex::{default_iteration_limit, Simplex};
use super::{LinearProgram, LpError, MPSolution, Sense, Status, INTEGRALITY_TOL};

/// Branch-and-bound settings.
#[derive(Clone, Default)]
pub struct MilpOptions<'a> {
    /// Maximum number of explored nodes; `None` means unlimited.
    pub node_limit: Option<usize>,
    /// A known feasible point used as the starting incumbent.
    pub incumbent: Option<Vec<f64>>,
    /// Polled once per node.
    pub should_stop: Option<&'a dyn Fn() -> bool>,
}

impl fmt::Debug for MilpOptions<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MilpOptions")
            .field("node_limit", &self.node_limit)
            .field("incumbent", &self.incumbent.is_some())
            .field("should_stop", &self.should_stop.is_some())
            .finish()
    }
}

struct OpenNode {
    /// Relaxation value of the parent, in maximization form.
    bound: f64,
    id: usize,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for OpenNode {}
impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenNode {
    // max-heap: larger bound first, then smaller id
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

pub fn solve_milp(lp: &LinearProgram) -> Result<MPSolution, LpError> {
    solve_milp_with(lp, &MilpOptions::default())
}

/// Best-first branch-and-bound on the binary variables, branching on the
/// most fractional one (ties to the lowest index).
pub fn solve_milp_with(lp: &LinearProgram, options: &MilpOptions<'_>) -> Result<MPSolution, LpError> {
    lp.validate()?;
    if !lp.has_binaries() {
        return Err(LpError::NoBinaries);
    }
    let relaxed = lp.relaxation();
    let mut engine = Simplex::new(&relaxed);
    let binaries: Vec<usize> = (0..lp.num_vars()).filter(|&j| lp.binary[j]).collect();
    let root_bounds: Vec<(f64, f64)> = binaries.iter().map(|&j| engine.bounds(j)).collect();
    let to_max = |min_form: f64| -min_form;
    let tol = |v: f64| 1e-9 * v.abs().max(1.0);

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    if let Some(x) = &options.incumbent {
        let integral = binaries
            .iter()
            .all(|&j| (x[j] - libm::round(x[j])).abs() <= INTEGRALITY_TOL);
        if x.len() == lp.num_vars() && integral && lp.max_violation(x) <= 1e-6 {
            let score = match lp.sense {
                Sense::Maximize => lp.evaluate(x),
                Sense::Minimize => -lp.evaluate(x),
            };
            incumbent = Some((score, x.clone()));
        }
    }

    let mut heap = BinaryHeap::new();
    heap.push(OpenNode {
        bound: f64::INFINITY,
        id: 0,
        fixings: Vec::new(),
    });
    let mut next_id = 1;
    let mut nodes = 0usize;
    let mut root_bound = f64::INFINITY;
    let mut limited = false;
    let limit = default_iteration_limit(lp);

    while let Some(node) = heap.pop() {
        if let Some((best, _)) = &incumbent {
            if node.bound <= *best + tol(*best) {
                continue;
            }
        }
        if options.node_limit.map(|l| nodes >= l).unwrap_or(false)
            || options.should_stop.map(|f| f()).unwrap_or(false)
        {
            heap.push(node);
            limited = true;
            break;
        }
        nodes += 1;
        for (k, &j) in binaries.iter().enumerate() {
            engine.set_bounds(j, root_bounds[k].0, root_bounds[k].1);
        }
        for &(j, v) in &node.fixings {
            engine.set_bounds(j, v, v);
        }
        match engine.solve(limit) {
            Status::Optimal => {}
            Status::Infeasible => continue,
            Status::Unbounded => {
                // a bounded-binary program can only be unbounded through its
                // continuous part; report it as such
                return Ok(MPSolution {
                    status: Status::Unbounded,
                    objective: match lp.sense {
                        Sense::Maximize => f64::INFINITY,
                        Sense::Minimize => f64::NEG_INFINITY,
                    },
                    values: engine.values().to_vec(),
                    duals: Vec::new(),
                    reduced_costs: Vec::new(),
                    iterations: engine.iterations,
                    nodes,
                    bound: f64::INFINITY,
                });
            }
            Status::IterationLimit => {
                limited = true;
                continue;
            }
        }
        let score = to_max(engine.min_objective());
        if node.id == 0 {
            root_bound = score;
        }
        if let Some((best, _)) = &incumbent {
            if score <= *best + tol(*best) {
                continue;
            }
        }
        let x = engine.values();
        let mut branch: Option<(usize, f64)> = None;
        for &j in &binaries {
            let frac = (x[j] - libm::round(x[j])).abs();
            if frac > INTEGRALITY_TOL && branch.map(|(_, f)| frac > f + 1e-12).unwrap_or(true) {
                branch = Some((j, frac));
            }
        }
        match branch {
            None => {
                let mut values = x.to_vec();
                for &j in &binaries {
                    values[j] = libm::round(values[j]);
                }
                incumbent = Some((score, values));
            }
            Some((j, _)) => {
                let first = if x[j] >= 0.5 { 1.0 } else { 0.0 };
                for v in [first, 1.0 - first] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, v));
                    heap.push(OpenNode {
                        bound: score,
                        id: next_id,
                        fixings,
                    });
                    next_id += 1;
                }
            }
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(f64::NEG_INFINITY, f64::max);
    let from_max = |v: f64| match lp.sense {
        Sense::Maximize => v,
        Sense::Minimize => -v,
    };
    let iterations = engine.iterations;
    Ok(match incumbent {
        Some((score, values)) => {
            let objective = lp.evaluate(&values);
            let bound = if limited {
                from_max(open_bound.max(score).min(root_bound))
            } else {
                objective
            };
            MPSolution {
                status: if limited {
                    Status::IterationLimit
                } else {
                    Status::Optimal
                },
                objective,
                values,
                duals: Vec::new(),
                reduced_costs: Vec::new(),
                iterations,
                nodes,
                bound,
            }
        }
        None => MPSolution {
            status: if limited {
                Status::IterationLimit
            } else {
                Status::Infeasible
            },
            objective: f64::NAN,
            values: Vec::new(),
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            iterations,
            nodes,
            bound: from_max(root_bound),
        },
    })
}
