//! Box-constrained derivative-free minimisers.
//!
//! Random numbers are drawn on the calling thread in a fixed order and only
//! objective evaluations run in parallel, so a seed fully determines the
//! result regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::par;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(invalid("bounds must be non-empty and of equal length"));
        }
        for (l, u) in lower.iter().zip(&upper) {
            if !l.is_finite() || !u.is_finite() || l > u {
                return Err(invalid(format!("invalid interval [{l}, {u}]")));
            }
        }
        Ok(Bounds { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn clip(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.lower)
                .zip(&self.upper)
                .all(|((v, l), u)| *v >= *l && *v <= *u)
    }

    pub fn width(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwarmConfig {
    pub particles: usize,
    pub iterations: usize,
    /// Velocity memory.
    pub inertia: f64,
    /// Pull towards the swarm's best position.
    pub alpha: f64,
    /// Pull towards the particle's own best position.
    pub beta: f64,
    /// Initial velocities are uniform in +-`init_velocity` times the box width.
    pub init_velocity: f64,
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        SwarmConfig {
            particles: 40,
            iterations: 250,
            inertia: 0.5,
            alpha: 0.05,
            beta: 1.05,
            init_velocity: 0.1,
            seed: 0,
        }
    }
}

impl SwarmConfig {
    /// Inertia 0.7 with both pulls at 1.5, a common general-purpose setting
    /// that converges far more reliably than the defaults.
    pub fn standard(particles: usize, iterations: usize, seed: u64) -> Self {
        SwarmConfig {
            particles,
            iterations,
            inertia: 0.7,
            alpha: 1.5,
            beta: 1.5,
            seed,
            ..Default::default()
        }
    }

    pub fn budget(&self) -> usize {
        self.particles * (self.iterations + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub population: usize,
    pub generations: usize,
    /// Differential weight.
    pub f: f64,
    /// Crossover probability.
    pub cr: f64,
    pub seed: u64,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            population: 30,
            generations: 200,
            f: 0.7,
            cr: 0.9,
            seed: 0,
        }
    }
}

impl DeConfig {
    pub fn budget(&self) -> usize {
        self.population * (self.generations + 1)
    }
}

/// Either optimiser, as selected on the command line or in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum OptimizerConfig {
    Pso(SwarmConfig),
    De(DeConfig),
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::Pso(SwarmConfig::default())
    }
}

impl OptimizerConfig {
    pub fn seed(&self) -> u64 {
        match self {
            OptimizerConfig::Pso(c) => c.seed,
            OptimizerConfig::De(c) => c.seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            OptimizerConfig::Pso(c) => c.seed = seed,
            OptimizerConfig::De(c) => c.seed = seed,
        }
        self
    }

    pub fn budget(&self) -> usize {
        match self {
            OptimizerConfig::Pso(c) => c.budget(),
            OptimizerConfig::De(c) => c.budget(),
        }
    }

    pub fn minimize<F, O>(&self, f: F, bounds: &Bounds, observer: O) -> Result<OptResult>
    where
        F: Fn(&[f64]) -> f64 + Sync + Send,
        O: FnMut(&IterationRecord),
    {
        match self {
            OptimizerConfig::Pso(c) => pso_minimize_observed(f, bounds, c, observer),
            OptimizerConfig::De(c) => de_minimize_observed(f, bounds, c, observer),
        }
    }
}

/// Progress of one iteration, written as one JSON line per record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub evaluations: usize,
    pub best_value: f64,
    pub best_x: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub method: String,
    pub seed: u64,
    pub budget: usize,
    pub evaluations: usize,
    pub best_x: Vec<f64>,
    pub best_value: f64,
    /// Best value after each iteration (non-increasing).
    pub history: Vec<f64>,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn evaluate_all<F>(f: &F, xs: &[Vec<f64>]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    par::map_slice(xs, |x| sanitize(f(x)))
}

pub fn pso_minimize<F>(f: F, bounds: &Bounds, cfg: &SwarmConfig) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    pso_minimize_observed(f, bounds, cfg, |_| {})
}

/// Particle swarm: `v <- w v + alpha e1 (g - x) + beta e2 (p - x)`, `x <- x + v`,
/// positions clipped to the box after every move.
pub fn pso_minimize_observed<F, O>(
    f: F,
    bounds: &Bounds,
    cfg: &SwarmConfig,
    mut observer: O,
) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
    O: FnMut(&IterationRecord),
{
    if cfg.particles == 0 {
        return Err(invalid("swarm needs at least one particle"));
    }
    let dim = bounds.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut xs: Vec<Vec<f64>> = (0..cfg.particles)
        .map(|_| {
            (0..dim)
                .map(|k| rng.gen_range(bounds.lower[k]..=bounds.upper[k]))
                .collect()
        })
        .collect();
    let mut vs: Vec<Vec<f64>> = (0..cfg.particles)
        .map(|_| {
            (0..dim)
                .map(|k| cfg.init_velocity * bounds.width(k) * rng.gen_range(-1.0..=1.0))
                .collect()
        })
        .collect();
    let mut vals = evaluate_all(&f, &xs);
    let mut evaluations = cfg.particles;
    let mut pbest = xs.clone();
    let mut pval = vals.clone();
    let (mut gi, mut gval) = (0, pval[0]);
    for (i, &v) in pval.iter().enumerate() {
        if v < gval {
            gi = i;
            gval = v;
        }
    }
    let mut gbest = pbest[gi].clone();
    let mut history = vec![gval];
    observer(&IterationRecord {
        iteration: 0,
        evaluations,
        best_value: gval,
        best_x: gbest.clone(),
    });
    for it in 1..=cfg.iterations {
        for i in 0..cfg.particles {
            for k in 0..dim {
                let e1: f64 = rng.gen();
                let e2: f64 = rng.gen();
                vs[i][k] = cfg.inertia * vs[i][k]
                    + cfg.alpha * e1 * (gbest[k] - xs[i][k])
                    + cfg.beta * e2 * (pbest[i][k] - xs[i][k]);
                xs[i][k] += vs[i][k];
            }
            bounds.clip(&mut xs[i]);
        }
        vals = evaluate_all(&f, &xs);
        evaluations += cfg.particles;
        for i in 0..cfg.particles {
            if vals[i] < pval[i] {
                pval[i] = vals[i];
                pbest[i] = xs[i].clone();
            }
        }
        for i in 0..cfg.particles {
            if pval[i] < gval {
                gval = pval[i];
                gbest = pbest[i].clone();
            }
        }
        history.push(gval);
        observer(&IterationRecord {
            iteration: it,
            evaluations,
            best_value: gval,
            best_x: gbest.clone(),
        });
    }
    Ok(OptResult {
        method: "pso".into(),
        seed: cfg.seed,
        budget: cfg.budget(),
        evaluations,
        best_x: gbest,
        best_value: gval,
        history,
    })
}

pub fn de_minimize<F>(f: F, bounds: &Bounds, cfg: &DeConfig) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    de_minimize_observed(f, bounds, cfg, |_| {})
}

/// Differential evolution, rand/1/bin with clipping.
pub fn de_minimize_observed<F, O>(
    f: F,
    bounds: &Bounds,
    cfg: &DeConfig,
    mut observer: O,
) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
    O: FnMut(&IterationRecord),
{
    if cfg.population < 4 {
        return Err(invalid(
            "differential evolution needs a population of at least 4",
        ));
    }
    let dim = bounds.dim();
    let np = cfg.population;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| {
            (0..dim)
                .map(|k| rng.gen_range(bounds.lower[k]..=bounds.upper[k]))
                .collect()
        })
        .collect();
    let mut vals = evaluate_all(&f, &pop);
    let mut evaluations = np;
    let best_of = |vals: &[f64]| {
        let mut b = 0;
        for (i, &v) in vals.iter().enumerate() {
            if v < vals[b] {
                b = i;
            }
        }
        b
    };
    let mut b = best_of(&vals);
    let mut history = vec![vals[b]];
    observer(&IterationRecord {
        iteration: 0,
        evaluations,
        best_value: vals[b],
        best_x: pop[b].clone(),
    });
    for g in 1..=cfg.generations {
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| {
                let mut pick = || loop {
                    let j = rng.gen_range(0..np);
                    if j != i {
                        break j;
                    }
                };
                let a = pick();
                let mut bb = pick();
                while bb == a {
                    bb = pick();
                }
                let mut c = pick();
                while c == a || c == bb {
                    c = pick();
                }
                let jr = rng.gen_range(0..dim);
                let mut t = pop[i].clone();
                for k in 0..dim {
                    let u: f64 = rng.gen();
                    if u < cfg.cr || k == jr {
                        t[k] = pop[a][k] + cfg.f * (pop[bb][k] - pop[c][k]);
                    }
                }
                bounds.clip(&mut t);
                t
            })
            .collect();
        let tv = evaluate_all(&f, &trials);
        evaluations += np;
        for (i, (t, v)) in trials.into_iter().zip(tv).enumerate() {
            if v <= vals[i] {
                pop[i] = t;
                vals[i] = v;
            }
        }
        b = best_of(&vals);
        history.push(vals[b]);
        observer(&IterationRecord {
            iteration: g,
            evaluations,
            best_value: vals[b],
            best_x: pop[b].clone(),
        });
    }
    Ok(OptResult {
        method: "de".into(),
        seed: cfg.seed,
        budget: cfg.budget(),
        evaluations,
        best_x: pop[b].clone(),
        best_value: vals[b],
        history,
    })
}

/// Tensor grid of `nodes^dim` points spanning `center +- radius`, plus the
/// centre itself. Returns the best point; the centre wins ties.
pub fn grid_refine<F>(
    f: F,
    center: &[f64],
    radius: &[f64],
    nodes: usize,
    bounds: Option<&Bounds>,
) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let dim = center.len();
    if radius.len() != dim || nodes == 0 {
        return Err(invalid(
            "radius must match the centre and nodes must be positive",
        ));
    }
    let total = nodes
        .checked_pow(dim as u32)
        .filter(|&n| n <= 10_000_000)
        .ok_or_else(|| invalid("refinement grid too large"))?;
    let mut points = Vec::with_capacity(total + 1);
    points.push(center.to_vec());
    for idx in 0..total {
        let mut rem = idx;
        let mut x = center.to_vec();
        for k in 0..dim {
            let j = rem % nodes;
            rem /= nodes;
            let t = if nodes == 1 {
                0.0
            } else {
                -1.0 + 2.0 * j as f64 / (nodes - 1) as f64
            };
            x[k] += t * radius[k];
        }
        if let Some(b) = bounds {
            b.clip(&mut x);
        }
        points.push(x);
    }
    let vals = evaluate_all(&f, &points);
    let mut b = 0;
    for (i, &v) in vals.iter().enumerate() {
        if v < vals[b] {
            b = i;
        }
    }
    Ok(OptResult {
        method: "grid".into(),
        seed: 0,
        budget: points.len(),
        evaluations: points.len(),
        best_x: points[b].clone(),
        best_value: vals[b],
        history: vec![vals[0], vals[b]],
    })
}

/// Repeated [`grid_refine`] with the radius shrunk by `shrink` after each pass.
pub fn grid_polish<F>(
    f: F,
    center: &[f64],
    radius: &[f64],
    nodes: usize,
    rounds: usize,
    shrink: f64,
    bounds: Option<&Bounds>,
) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let mut x = center.to_vec();
    let mut r = radius.to_vec();
    let mut evals = 0;
    let mut history = Vec::new();
    let mut best = f64::INFINITY;
    for _ in 0..rounds {
        let res = grid_refine(&f, &x, &r, nodes, bounds)?;
        evals += res.evaluations;
        if res.best_value < best || history.is_empty() {
            best = res.best_value;
            x = res.best_x;
        }
        history.push(best);
        for v in r.iter_mut() {
            *v *= shrink;
        }
    }
    Ok(OptResult {
        method: "grid-polish".into(),
        seed: 0,
        budget: evals,
        evaluations: evals,
        best_x: x,
        best_value: best,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sphere(x: &[f64]) -> f64 {
        x.iter().map(|v| (v - 0.3) * (v - 0.3)).sum()
    }

    fn box3() -> Bounds {
        Bounds::new(vec![-1.0; 3], vec![1.0; 3]).unwrap()
    }

    #[test]
    fn pso_finds_sphere_minimum() {
        let cfg = SwarmConfig {
            particles: 20,
            iterations: 200,
            inertia: 0.7,
            alpha: 1.5,
            beta: 1.5,
            ..Default::default()
        };
        let r = pso_minimize(sphere, &box3(), &cfg).unwrap();
        assert!(r.best_value < 1e-6, "{}", r.best_value);
        assert_eq!(r.evaluations, cfg.budget());
    }

    #[test]
    fn de_finds_sphere_minimum() {
        let r = de_minimize(sphere, &box3(), &DeConfig::default()).unwrap();
        assert!(r.best_value < 1e-10);
    }

    #[test]
    fn pso_single_particle_is_deterministic() {
        let cfg = SwarmConfig {
            particles: 1,
            iterations: 30,
            seed: 9,
            ..Default::default()
        };
        let a = pso_minimize(sphere, &box3(), &cfg).unwrap();
        let b = pso_minimize(sphere, &box3(), &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn tie_goes_to_first_particle() {
        let cfg = SwarmConfig {
            particles: 5,
            iterations: 0,
            seed: 3,
            ..Default::default()
        };
        let first = std::sync::Mutex::new(None);
        let r = pso_minimize_observed(
            |_| 1.0,
            &box3(),
            &cfg,
            |rec| {
                first.lock().unwrap().get_or_insert(rec.best_x.clone());
            },
        )
        .unwrap();
        // all particles tie, so particle 0 (the first draw) is reported
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x0: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        assert_eq!(r.best_x, x0);
    }

    #[test]
    fn grid_refine_keeps_centre_on_ties() {
        let r = grid_refine(|_| 0.0, &[0.1, 0.2], &[0.5, 0.5], 4, None).unwrap();
        assert_eq!(r.best_x, vec![0.1, 0.2]);
        let r = grid_refine(sphere, &[0.0], &[0.3], 3, None).unwrap();
        assert_abs_diff_eq!(r.best_x[0], 0.3, epsilon = 1e-15);
        let r = grid_refine(sphere, &[0.0], &[1.0], 1, None).unwrap();
        assert_eq!(r.evaluations, 2);
    }

    #[test]
    fn bounds_validation() {
        assert!(Bounds::new(vec![1.0], vec![0.0]).is_err());
        assert!(Bounds::new(vec![], vec![]).is_err());
        assert!(Bounds::new(vec![0.0], vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn config_json_is_tagged() {
        let c = OptimizerConfig::De(DeConfig::default());
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"method\":\"de\""));
        let back: OptimizerConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
