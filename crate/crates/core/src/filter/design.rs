//! Numerical plateau design: derivative-free simplex search over
//! log-transformed element values with deterministic multi-start.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filter::{
    denominator_poly, plateau_metrics, LadderFilter, PlateauMetrics, PlateauSpec,
};
use crate::network::FrequencyGrid;

/// Log-uniform start ranges: capacitors in [1 fF, 1 pF], inductors in
/// [0.1 nH, 10 nH].
const C_RANGE: (f64, f64) = (1e-15, 1e-12);
const L_RANGE: (f64, f64) = (1e-10, 1e-8);

/// Weight of the quadratic hinge penalty on poles intruding below
/// omega_hi + pole_margin. Kept comparable to the flatness term so that
/// pole-pushing cannot buy its way out of a bad plateau.
const POLE_PENALTY_WEIGHT: f64 = 1.0;

/// Objective value assigned to evaluations that fail numerically.
const FAILED_EVAL: f64 = 1e12;

/// Number of independent simplex starts per call.
pub const DEFAULT_STARTS: usize = 16;

/// Result of a plateau optimization run.
#[derive(Debug, Clone)]
pub struct PlateauDesign {
    pub filter: LadderFilter,
    pub metrics: PlateauMetrics,
    /// Final objective value (mean squared log deviation plus penalties).
    pub objective: f64,
    /// True when the returned filter satisfies the plateau bounds:
    /// ripple <= 0.25, |log(mean/target)| <= log(1.3), and every resonant
    /// pole above omega_hi + pole_margin.
    pub converged: bool,
}

struct Objective<'a> {
    spec: &'a PlateauSpec,
    grid: Vec<f64>,
    z0: f64,
}

impl<'a> Objective<'a> {
    fn new(spec: &'a PlateauSpec, z0: f64) -> Result<Self> {
        let grid = FrequencyGrid::linspace(spec.omega_lo, spec.omega_hi, spec.n_grid)?
            .as_slice()
            .to_vec();
        Ok(Self { spec, grid, z0 })
    }

    fn filter_from_log(&self, log_values: &[f64]) -> Option<LadderFilter> {
        let values: Vec<f64> = log_values.iter().map(|v| v.exp()).collect();
        if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return None;
        }
        LadderFilter::new(values, self.z0).ok()
    }

    fn eval(&self, log_values: &[f64]) -> f64 {
        let Some(filter) = self.filter_from_log(log_values) else {
            return FAILED_EVAL;
        };
        let ln_target = self.spec.target_re_y.ln();
        let mut dev = 0.0;
        for &omega in &self.grid {
            match crate::filter::filter_re_admittance(&filter, omega) {
                Ok(y) if y > 0.0 && y.is_finite() => {
                    let d = y.ln() - ln_target;
                    dev += d * d;
                }
                _ => return FAILED_EVAL,
            }
        }
        dev /= self.grid.len() as f64;

        let floor = self.spec.omega_hi + self.spec.pole_margin;
        let penalty = match denominator_poly(&filter).and_then(|p| p.resonant_poles()) {
            Ok(poles) => poles
                .iter()
                .filter(|p| p.re < floor)
                .map(|p| {
                    let gap = (floor - p.re) / self.spec.omega_hi;
                    POLE_PENALTY_WEIGHT * gap * gap
                })
                .sum::<f64>(),
            Err(_) => return FAILED_EVAL,
        };
        dev + penalty
    }
}

/// Plain Nelder-Mead on `f`, starting from `x0` with per-axis `step`.
fn nelder_mead<F>(f: &F, x0: &[f64], step: f64, max_iter: usize) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let dim = x0.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..simplex.len()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        if (values[worst] - values[best]).abs() <= 1e-14 * (1.0 + values[best].abs()) {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for &idx in &order[..dim] {
            for (c, x) in centroid.iter_mut().zip(&simplex[idx]) {
                *c += x;
            }
        }
        for c in centroid.iter_mut() {
            *c /= dim as f64;
        }

        let blend = |coeff: f64, point: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(point)
                .map(|(c, p)| c + coeff * (c - p))
                .collect()
        };

        let reflected = blend(alpha, &simplex[worst]);
        let f_reflected = f(&reflected);
        if f_reflected < values[second_worst] && f_reflected >= values[best] {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
        } else if f_reflected < values[best] {
            let expanded = blend(gamma, &simplex[worst]);
            let f_expanded = f(&expanded);
            if f_expanded < f_reflected {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
        } else {
            let contracted = blend(-rho, &simplex[worst]);
            let f_contracted = f(&contracted);
            if f_contracted < values[worst] {
                simplex[worst] = contracted;
                values[worst] = f_contracted;
            } else {
                let anchor = simplex[best].clone();
                for (i, vertex) in simplex.iter_mut().enumerate() {
                    if i == best {
                        continue;
                    }
                    for (x, a) in vertex.iter_mut().zip(&anchor) {
                        *x = a + sigma * (*x - a);
                    }
                    values[i] = f(vertex);
                }
            }
        }
    }

    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    (simplex[best].clone(), values[best])
}

fn within_bounds(metrics: &PlateauMetrics, spec: &PlateauSpec) -> bool {
    let level_ok = (metrics.mean / spec.target_re_y).ln().abs() <= 1.3f64.ln();
    let ripple_ok = metrics.ripple <= 0.25;
    let poles_ok = metrics
        .min_pole_clearance
        .map_or(true, |c| c >= spec.pole_margin);
    level_ok && ripple_ok && poles_ok
}

/// Optimize an N-element ladder for a flat Re[Y] plateau over the band.
///
/// Deterministic for a fixed seed: the same seed reproduces the same
/// filter bit for bit. When no start satisfies the plateau bounds the best
/// candidate is returned with `converged == false`.
pub fn optimize_plateau(
    n_elements: usize,
    spec: &PlateauSpec,
    z0_ohms: f64,
    seed: u64,
) -> Result<PlateauDesign> {
    optimize_plateau_with_init(n_elements, spec, z0_ohms, seed, None, DEFAULT_STARTS)
}

/// As [`optimize_plateau`], with an optional warm start that is polished
/// and kept as a candidate (so a good initial filter is never degraded),
/// and an explicit multi-start budget.
pub fn optimize_plateau_with_init(
    n_elements: usize,
    spec: &PlateauSpec,
    z0_ohms: f64,
    seed: u64,
    init: Option<&LadderFilter>,
    starts: usize,
) -> Result<PlateauDesign> {
    if n_elements < 3 {
        return Err(Error::InvalidInput(format!(
            "a plateau needs at least 3 elements, got {n_elements}"
        )));
    }
    if let Some(f) = init {
        if f.order() != n_elements {
            return Err(Error::InvalidInput(format!(
                "initial filter has {} elements, expected {n_elements}",
                f.order()
            )));
        }
    }
    let objective = Objective::new(spec, z0_ohms)?;
    let eval = |x: &[f64]| objective.eval(x);
    let max_iter = 400 * n_elements;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<(Vec<f64>, f64)> = Vec::new();

    if let Some(f) = init {
        let x0: Vec<f64> = f.values().iter().map(|v| v.ln()).collect();
        // Keep the unpolished warm start as its own candidate.
        candidates.push((x0.clone(), eval(&x0)));
        candidates.push(nelder_mead(&eval, &x0, 0.02, max_iter));
    }

    for _ in 0..starts {
        let x0: Vec<f64> = (0..n_elements)
            .map(|i| {
                let (lo, hi) = if i % 2 == 0 { C_RANGE } else { L_RANGE };
                rng.gen_range(lo.ln()..hi.ln())
            })
            .collect();
        let (x1, f1) = nelder_mead(&eval, &x0, 0.3, max_iter);
        // One tighter restart from the found vertex.
        let polished = nelder_mead(&eval, &x1, 0.05, max_iter);
        candidates.push(if polished.1 < f1 { polished } else { (x1, f1) });
    }

    // Deterministic choice: prefer candidates that satisfy the plateau
    // bounds; break ties by objective, then by insertion order.
    let mut best: Option<(bool, f64, usize, LadderFilter, PlateauMetrics)> = None;
    for (idx, (x, obj)) in candidates.iter().enumerate() {
        let Some(filter) = objective.filter_from_log(x) else {
            continue;
        };
        let Ok(metrics) = plateau_metrics(&filter, spec) else {
            continue;
        };
        let ok = within_bounds(&metrics, spec);
        let better = match &best {
            None => true,
            Some((best_ok, best_obj, _, _, _)) => {
                (ok && !best_ok) || (ok == *best_ok && obj < best_obj)
            }
        };
        if better {
            best = Some((ok, *obj, idx, filter, metrics));
        }
    }

    let (converged, objective_value, _, filter, metrics) = best.ok_or_else(|| {
        Error::RootFinding("no optimizer start produced an evaluable filter".into())
    })?;
    Ok(PlateauDesign {
        filter,
        metrics,
        objective: objective_value,
        converged,
    })
}
