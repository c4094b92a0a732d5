//! NSGA-II on the unit cube: fast non-dominated sort, crowding distance,
//! SBX crossover and polynomial mutation.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng::Rng;

use super::SysidError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Nsga2Config {
    pub population: usize,
    pub eta_crossover: f64,
    pub eta_mutation: f64,
    pub p_crossover: f64,
    /// Per-gene mutation probability; `None` means 1/d.
    pub p_mutation: Option<f64>,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Self {
            population: 50,
            eta_crossover: 15.0,
            eta_mutation: 20.0,
            p_crossover: 0.9,
            p_mutation: None,
        }
    }
}

impl Nsga2Config {
    pub fn validate(&self) -> Result<(), SysidError> {
        if self.population < 4 || self.population % 2 != 0 {
            return Err(SysidError::InvalidConfig(format!(
                "NSGA-II population must be even and at least 4, got {}",
                self.population
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
}

fn objective(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (objective(x), objective(y));
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Partitions indices into successive non-dominated fronts.
pub fn non_dominated_sort(objs: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let n = objs.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && dominates(&objs[i], &objs[j]) {
                dominated_by[i].push(j);
            } else if i != j && dominates(&objs[j], &objs[i]) {
                count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                count[j] -= 1;
                if count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front` (same order).
pub fn crowding_distance(objs: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut dist = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = objs[front[0]].len();
    for k in 0..m {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| objective(objs[front[a]][k]).total_cmp(&objective(objs[front[b]][k])).then(a.cmp(&b)));
        let lo = objective(objs[front[order[0]]][k]);
        let hi = objective(objs[front[order[n - 1]]][k]);
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        let range = hi - lo;
        if !(range.is_finite() && range > 0.0) {
            continue;
        }
        for w in 1..n - 1 {
            let prev = objective(objs[front[order[w - 1]]][k]);
            let next = objective(objs[front[order[w + 1]]][k]);
            dist[order[w]] += (next - prev) / range;
        }
    }
    dist
}

/// (rank, crowding) for every individual.
fn rank_and_crowd(pop: &[Individual]) -> (Vec<usize>, Vec<f64>) {
    let objs: Vec<Vec<f64>> = pop.iter().map(|p| p.f.clone()).collect();
    let mut rank = vec![0; pop.len()];
    let mut crowd = vec![0.0; pop.len()];
    for (r, front) in non_dominated_sort(&objs).iter().enumerate() {
        for (&i, d) in front.iter().zip(crowding_distance(&objs, front)) {
            rank[i] = r;
            crowd[i] = d;
        }
    }
    (rank, crowd)
}

fn better(a: usize, b: usize, rank: &[usize], crowd: &[f64]) -> bool {
    rank[a] < rank[b] || (rank[a] == rank[b] && crowd[a] > crowd[b])
}

fn tournament(rng: &mut Rng, rank: &[usize], crowd: &[f64]) -> usize {
    let a = rng.random_range(0..rank.len());
    let b = rng.random_range(0..rank.len());
    if better(b, a, rank, crowd) {
        b
    } else {
        a
    }
}

fn sbx(p1: &[f64], p2: &[f64], eta: f64, rng: &mut Rng) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    for i in 0..p1.len() {
        if rng.random::<f64>() > 0.5 || (p1[i] - p2[i]).abs() < 1e-14 {
            continue;
        }
        let (y1, y2) = if p1[i] < p2[i] { (p1[i], p2[i]) } else { (p2[i], p1[i]) };
        let u: f64 = rng.random();
        let spread = |beta: f64| {
            let alpha = 2.0 - beta.powf(-(eta + 1.0));
            if u <= 1.0 / alpha {
                (u * alpha).powf(1.0 / (eta + 1.0))
            } else {
                (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
            }
        };
        // Bounded SBX: spread factors respect the [0, 1] box on each side.
        let bq1 = spread(1.0 + 2.0 * y1 / (y2 - y1));
        let bq2 = spread(1.0 + 2.0 * (1.0 - y2) / (y2 - y1));
        let a = (0.5 * ((y1 + y2) - bq1 * (y2 - y1))).clamp(0.0, 1.0);
        let b = (0.5 * ((y1 + y2) + bq2 * (y2 - y1))).clamp(0.0, 1.0);
        if rng.random::<f64>() < 0.5 {
            c1[i] = b;
            c2[i] = a;
        } else {
            c1[i] = a;
            c2[i] = b;
        }
    }
    (c1, c2)
}

fn mutate(x: &mut [f64], eta: f64, p: f64, rng: &mut Rng) {
    for v in x.iter_mut() {
        if rng.random::<f64>() >= p {
            continue;
        }
        let y = *v;
        let u: f64 = rng.random();
        let pow = 1.0 / (eta + 1.0);
        let dq = if u < 0.5 {
            let xy = 1.0 - y;
            let val = 2.0 * u + (1.0 - 2.0 * u) * xy.powf(eta + 1.0);
            val.powf(pow) - 1.0
        } else {
            let xy = y;
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(eta + 1.0);
            1.0 - val.powf(pow)
        };
        *v = (y + dq).clamp(0.0, 1.0);
    }
}

/// Children of `pop` by binary tournament, SBX and polynomial mutation.
pub fn make_offspring(pop: &[Individual], cfg: &Nsga2Config, rng: &mut Rng) -> Vec<Vec<f64>> {
    let (rank, crowd) = rank_and_crowd(pop);
    let d = pop[0].x.len();
    let pm = cfg.p_mutation.unwrap_or(1.0 / d as f64);
    let mut kids = Vec::with_capacity(pop.len());
    while kids.len() < pop.len() {
        let a = tournament(rng, &rank, &crowd);
        let b = tournament(rng, &rank, &crowd);
        let (mut c1, mut c2) = if rng.random::<f64>() < cfg.p_crossover {
            sbx(&pop[a].x, &pop[b].x, cfg.eta_crossover, rng)
        } else {
            (pop[a].x.clone(), pop[b].x.clone())
        };
        mutate(&mut c1, cfg.eta_mutation, pm, rng);
        mutate(&mut c2, cfg.eta_mutation, pm, rng);
        kids.push(c1);
        if kids.len() < pop.len() {
            kids.push(c2);
        }
    }
    kids
}

/// Elitist truncation of `merged` to `n` survivors by (rank, crowding).
pub fn select_survivors(merged: Vec<Individual>, n: usize) -> Vec<Individual> {
    let objs: Vec<Vec<f64>> = merged.iter().map(|p| p.f.clone()).collect();
    let mut keep: Vec<usize> = Vec::with_capacity(n);
    for front in non_dominated_sort(&objs) {
        if keep.len() + front.len() <= n {
            keep.extend(&front);
            continue;
        }
        let crowd = crowding_distance(&objs, &front);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]).then(front[a].cmp(&front[b])));
        keep.extend(order.iter().take(n - keep.len()).map(|&k| front[k]));
        break;
    }
    let mut slots: Vec<Option<Individual>> = merged.into_iter().map(Some).collect();
    keep.iter().map(|&i| slots[i].take().unwrap()).collect()
}

/// One generation: breed, evaluate the children through `eval` (one
/// objective vector per child, same order), and keep the best `pop.len()`.
pub fn nsga2_evolve(
    pop: Vec<Individual>,
    cfg: &Nsga2Config,
    rng: &mut Rng,
    eval: impl FnOnce(&[Vec<f64>]) -> Vec<Vec<f64>>,
) -> Vec<Individual> {
    let n = pop.len();
    let kids = make_offspring(&pop, cfg, rng);
    let fs = eval(&kids);
    let mut merged = pop;
    merged.extend(kids.into_iter().zip(fs).map(|(x, f)| Individual { x, f }));
    select_survivors(merged, n)
}

/// Area dominated by a 2-objective point set up to `reference`.
pub fn hypervolume_2d(points: &[[f64; 2]], reference: [f64; 2]) -> f64 {
    let mut pts: Vec<[f64; 2]> = points
        .iter()
        .filter(|p| p[0] < reference[0] && p[1] < reference[1])
        .copied()
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut hv = 0.0;
    let mut best_y = reference[1];
    for p in pts {
        if p[1] < best_y {
            hv += (reference[0] - p[0]) * (best_y - p[1]);
            best_y = p[1];
        }
    }
    hv
}
