//! Limited-memory quasi-Newton descent on the product of the translation
//! field and the rotation field, with quaternion exponential retraction and
//! Armijo backtracking. Plain gradient descent is available as a fallback.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, ShellError};
use crate::kinematics::ShellConfiguration;
use crate::linalg::{UnitQuat, Vec3};
use crate::num::{real, to_f64, Real};

use super::assembly::assemble;
use super::ShellProblem;

/// Descent method choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Optimizer {
    /// Limited-memory quasi-Newton with the given history length.
    LBfgs { memory: usize },
    GradientDescent,
}

/// Options of [`minimize`].
#[derive(Debug, Clone)]
pub struct SolveOptions<T: Real> {
    pub max_iter: usize,
    pub grad_tol: T,
    pub optimizer: Optimizer,
    /// Number of additional randomly perturbed starts.
    pub multi_start: usize,
    /// Perturbation magnitude for multi-start (positions and rotation
    /// angles).
    pub perturbation: T,
    pub seed: u64,
    /// Starting configuration; the problem's initial configuration when
    /// absent. Prescribed boundary data is imposed either way.
    pub initial: Option<ShellConfiguration<T>>,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            max_iter: 500,
            grad_tol: real::<T>(1e-8),
            optimizer: Optimizer::LBfgs { memory: 10 },
            multi_start: 0,
            perturbation: real::<T>(1e-2),
            seed: 0,
            initial: None,
        }
    }
}

/// Result of a minimization run.
#[derive(Debug, Clone)]
pub struct MinimizeResult<T: Real> {
    pub config: ShellConfiguration<T>,
    /// Functional value per iteration, starting with the initial one;
    /// non-increasing by the line-search contract.
    pub energy_history: Vec<T>,
    pub final_energy: T,
    pub final_strain_energy: T,
    pub final_load_potential: T,
    /// Norm of the projected gradient at the final iterate.
    pub optimality_residual: T,
    pub iterations: usize,
    pub converged: bool,
}

struct DofMap {
    y_nodes: Vec<usize>,
    r_nodes: Vec<usize>,
}

impl DofMap {
    fn new<T: Real>(problem: &ShellProblem<T>) -> Self {
        let mut y_nodes = Vec::new();
        let mut r_nodes = Vec::new();
        for (n, c) in problem.constraints.iter().enumerate() {
            if c.y.is_none() {
                y_nodes.push(n);
            }
            if c.r.is_none() {
                r_nodes.push(n);
            }
        }
        DofMap { y_nodes, r_nodes }
    }

    fn dim(&self) -> usize {
        3 * (self.y_nodes.len() + self.r_nodes.len())
    }

    fn flatten<T: Real>(&self, gy: &[Vec3<T>], gr: &[Vec3<T>]) -> Vec<T> {
        let mut v = Vec::with_capacity(self.dim());
        for &n in &self.y_nodes {
            v.extend_from_slice(gy[n].as_slice());
        }
        for &n in &self.r_nodes {
            v.extend_from_slice(gr[n].as_slice());
        }
        v
    }

    /// Moves along a flat direction: positions additively, rotations by the
    /// quaternion exponential, renormalizing every updated quaternion.
    fn retract<T: Real>(&self, config: &ShellConfiguration<T>, dir: &[T], t: T) -> ShellConfiguration<T> {
        let mut out = config.clone();
        let mut k = 0;
        for &n in &self.y_nodes {
            out.y[n] += Vec3::new(dir[k], dir[k + 1], dir[k + 2]) * t;
            k += 3;
        }
        for &n in &self.r_nodes {
            let delta = Vec3::new(dir[k], dir[k + 1], dir[k + 2]) * t;
            k += 3;
            let q = *out.q[n].quaternion() * *UnitQuat::from_scaled_axis(delta).quaternion();
            out.q[n] = UnitQuat::new_normalize(q);
        }
        out
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Minimizes the total functional; the best run is returned when
/// multi-start is enabled. Runs are deterministic for a fixed seed.
pub fn minimize<T: Real>(problem: &ShellProblem<T>, options: &SolveOptions<T>) -> Result<MinimizeResult<T>> {
    let mut base = options
        .initial
        .clone()
        .unwrap_or_else(|| problem.reference.nodes.clone());
    problem.check_config(&base)?;
    problem.apply_constraints(&mut base);

    let map = DofMap::new(problem);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);

    let mut best: Option<MinimizeResult<T>> = None;
    for start in 0..=options.multi_start {
        let initial = if start == 0 {
            base.clone()
        } else {
            let mut p = base.perturbed(&mut rng, options.perturbation, options.perturbation);
            problem.apply_constraints(&mut p);
            p
        };
        let run = descend(problem, &map, initial, options)?;
        let better = match &best {
            None => true,
            Some(b) => run.final_energy < b.final_energy,
        };
        if better {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one start"))
}

fn descend<T: Real>(
    problem: &ShellProblem<T>,
    map: &DofMap,
    initial: ShellConfiguration<T>,
    options: &SolveOptions<T>,
) -> Result<MinimizeResult<T>> {
    let c1 = real::<T>(1e-4);
    let shrink = real::<T>(0.5);
    let max_backtracks = 60;

    let mut config = initial;
    let mut asm = assemble(problem, &config, true)?;
    let mut f = asm.functional();
    if !f.is_finite() {
        return Err(ShellError::NonFiniteEnergy { iteration: 0 });
    }
    let mut g = map.flatten(&asm.grad_y, &asm.grad_r);
    let mut history: VecDeque<(Vec<T>, Vec<T>, T)> = VecDeque::new();
    let memory = match options.optimizer {
        Optimizer::LBfgs { memory } => memory.max(1),
        Optimizer::GradientDescent => 0,
    };
    let mut energy_history = vec![f];
    let mut gd_step = T::one();
    let mut iterations = 0;
    let mut converged = norm(&g) <= options.grad_tol;

    while !converged && iterations < options.max_iter {
        let gnorm = norm(&g);
        if gnorm <= options.grad_tol {
            converged = true;
            break;
        }
        // search direction
        let mut dir = if memory > 0 && !history.is_empty() {
            two_loop(&history, &g)
        } else {
            g.iter().map(|x| -*x).collect::<Vec<_>>()
        };
        let mut slope = dot(&dir, &g);
        if slope >= -T::default_epsilon() * norm(&dir) * gnorm {
            // not a descent direction: restart from steepest descent
            history.clear();
            dir = g.iter().map(|x| -*x).collect();
            slope = dot(&dir, &g);
        }

        let t0 = match options.optimizer {
            Optimizer::LBfgs { .. } => T::one(),
            Optimizer::GradientDescent => {
                let t = gd_step * real::<T>(2.0);
                t.min(T::one() / (T::one() + gnorm)).max(real::<T>(1e-8))
            }
        };
        let mut t = t0;
        let mut accepted = None;
        // allowance for round-off in the functional near the noise floor;
        // acceptance still never lets the energy increase
        let round_tol = T::default_epsilon() * real::<T>(8.0) * (T::one() + f.abs());
        for _ in 0..max_backtracks {
            let cand = map.retract(&config, &dir, t);
            // a trial step that violates the rotation-interpolation
            // resolution bound is rejected like an energy increase
            let f_new = match assemble(problem, &cand, false) {
                Ok(asm) => asm.functional(),
                Err(ShellError::MeshResolution { .. }) => {
                    t *= shrink;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let armijo = f + c1 * t * slope + round_tol;
            if f_new.is_finite() && f_new <= f.min(armijo) {
                accepted = Some((cand, t));
                break;
            }
            t *= shrink;
        }
        let Some((cand, t_acc)) = accepted else {
            return Err(ShellError::LineSearchFailure {
                iteration: iterations,
                energy: to_f64(f),
                grad_norm: to_f64(gnorm),
            });
        };
        gd_step = t_acc;

        let new_asm = assemble(problem, &cand, true)?;
        let f_new = new_asm.functional();
        let g_new = map.flatten(&new_asm.grad_y, &new_asm.grad_r);
        if memory > 0 {
            let s: Vec<T> = dir.iter().map(|d| *d * t_acc).collect();
            let yv: Vec<T> = g_new.iter().zip(&g).map(|(a, b)| *a - *b).collect();
            let sy = dot(&s, &yv);
            if sy > real::<T>(1e-12) * norm(&s) * norm(&yv) {
                if history.len() == memory {
                    history.pop_front();
                }
                let rho = T::one() / sy;
                history.push_back((s, yv, rho));
            }
        }
        config = cand;
        asm = new_asm;
        f = f_new;
        g = g_new;
        energy_history.push(f);
        iterations += 1;
        converged = norm(&g) <= options.grad_tol;
    }

    Ok(MinimizeResult {
        final_energy: f,
        final_strain_energy: asm.strain_energy,
        final_load_potential: asm.load_potential(),
        optimality_residual: norm(&g),
        iterations,
        converged,
        energy_history,
        config,
    })
}

/// Two-loop recursion: approximate Newton direction from the stored
/// curvature pairs.
fn two_loop<T: Real>(history: &VecDeque<(Vec<T>, Vec<T>, T)>, g: &[T]) -> Vec<T> {
    let mut q: Vec<T> = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let alpha = *rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= alpha * *yi;
        }
        alphas.push(alpha);
    }
    let gamma = {
        let (s, y, _) = history.back().expect("nonempty history");
        dot(s, y) / dot(y, y)
    };
    for qi in q.iter_mut() {
        *qi *= gamma;
    }
    for ((s, y, rho), alpha) in history.iter().zip(alphas.into_iter().rev()) {
        let beta = *rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (alpha - beta) * *si;
        }
    }
    q.iter_mut().for_each(|x| *x = -*x);
    q
}
