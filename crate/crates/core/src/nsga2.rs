//! NSGA-II for two minimized objectives.
//!
//! Each generation: binary crowded tournaments pick parents, SBX and
//! polynomial mutation produce `N` offspring, parents and offspring are merged,
//! sorted into non-dominated fronts, and truncated back to `N` by
//! (front rank, crowding distance).

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::FitnessPair;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let b = Self { lower, upper };
        b.validate()?;
        Ok(b)
    }

    pub fn dims(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.is_empty() || self.lower.len() != self.upper.len() {
            return Err(Error::Config(
                "bounds need equal, non-zero numbers of lower and upper values".into(),
            ));
        }
        for (i, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!(
                    "bound {i}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, genes: &[f64]) -> bool {
        genes.len() == self.dims()
            && genes
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(g, (lo, hi))| lo <= g && g <= hi)
    }

    pub fn clip(&self, genes: &mut [f64]) {
        for (g, (lo, hi)) in genes.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *g = g.clamp(*lo, *hi);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nsga2Config {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_probability: f64,
    pub crossover_distribution_index: f64,
    /// Per-gene mutation probability; `None` means `1 / genes`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutation_probability: Option<f64>,
    pub mutation_distribution_index: f64,
    pub rng_seed: u64,
}

impl Default for Nsga2Config {
    fn default() -> Self {
        Self {
            population_size: 10,
            generations: 30,
            crossover_probability: 0.9,
            crossover_distribution_index: 15.0,
            mutation_probability: None,
            mutation_distribution_index: 20.0,
            rng_seed: 1,
        }
    }
}

impl Nsga2Config {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 4 || !self.population_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "population_size must be even and >= 4, got {}",
                self.population_size
            )));
        }
        if self.generations < 1 {
            return Err(Error::Config("generations must be >= 1".into()));
        }
        let probs = [
            Some(self.crossover_probability),
            self.mutation_probability,
        ];
        if probs.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("probabilities must lie in [0, 1]".into()));
        }
        if !(self.crossover_distribution_index >= 0.0 && self.mutation_distribution_index >= 0.0) {
            return Err(Error::Config("distribution indices must be >= 0".into()));
        }
        Ok(())
    }

    pub fn mutation_probability_for(&self, genes: usize) -> f64 {
        self.mutation_probability
            .unwrap_or(1.0 / genes.max(1) as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genes: Vec<f64>,
    pub fitness: Option<FitnessPair>,
    /// Front index, 1 for the non-dominated front; 0 until sorted.
    pub rank: usize,
    pub crowding_distance: f64,
}

impl Individual {
    pub fn new(genes: Vec<f64>) -> Self {
        Self {
            genes,
            fitness: None,
            rank: 0,
            crowding_distance: 0.0,
        }
    }

    pub fn evaluated(genes: Vec<f64>, fitness: FitnessPair) -> Self {
        Self {
            fitness: Some(fitness),
            ..Self::new(genes)
        }
    }

    pub fn objectives(&self) -> [f64; 2] {
        self.fitness.map(|f| f.objectives()).unwrap_or([f64::NAN; 2])
    }
}

/// `a` dominates `b`: no worse in both objectives, strictly better in one.
pub fn dominates(a: &FitnessPair, b: &FitnessPair) -> bool {
    let (a, b) = (a.objectives(), b.objectives());
    a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
}

/// Fronts and the number of scalar objective comparisons spent finding them.
#[derive(Debug, Clone, PartialEq)]
pub struct SortOutcome {
    pub fronts: Vec<Vec<usize>>,
    pub comparisons: u64,
}

/// Deb's fast non-dominated sort. Assigns `rank` (1-based) to every
/// individual and returns the fronts as index lists.
pub fn fast_non_dominated_sort(population: &mut [Individual]) -> Result<Vec<Vec<usize>>> {
    Ok(sort_with_count(population)?.fronts)
}

pub fn sort_with_count(population: &mut [Individual]) -> Result<SortOutcome> {
    let fits: Vec<FitnessPair> = population
        .iter()
        .enumerate()
        .map(|(i, ind)| ind.fitness.ok_or(Error::Unevaluated(i)))
        .collect::<Result<_>>()?;
    let n = fits.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_set: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut comparisons = 0u64;

    for i in 0..n {
        for j in (i + 1)..n {
            // each dominance test compares both objectives
            comparisons += 2;
            if dominates(&fits[i], &fits[j]) {
                dominates_set[i].push(j);
                dominated_by_count[j] += 1;
                continue;
            }
            comparisons += 2;
            if dominates(&fits[j], &fits[i]) {
                dominates_set[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }

    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    let mut rank = 1;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            population[i].rank = rank;
            for &j in &dominates_set[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
        rank += 1;
    }
    Ok(SortOutcome {
        fronts,
        comparisons,
    })
}

/// Crowding distance of each member of a front.
///
/// Boundary members of each objective are infinite; interior members sum
/// `|f(i+1) − f(i−1)| / |f_max − f_min|` over both objectives. An objective
/// with zero range contributes nothing.
pub fn crowding_distance(front: &[FitnessPair]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let mut distance = vec![0.0; n];
    for m in 0..2 {
        let value = |i: usize| front[i].objectives()[m];
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
        let (lo, hi) = (value(order[0]), value(order[n - 1]));
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        let range = (hi - lo).abs();
        if range == 0.0 {
            continue;
        }
        for w in 1..n - 1 {
            let i = order[w];
            distance[i] += (value(order[w + 1]) - value(order[w - 1])).abs() / range;
        }
    }
    distance
}

fn assign_crowding(population: &mut [Individual], front: &[usize]) {
    let fits: Vec<FitnessPair> = front
        .iter()
        .map(|&i| population[i].fitness.expect("sorted individuals are evaluated"))
        .collect();
    for (&i, d) in front.iter().zip(crowding_distance(&fits)) {
        population[i].crowding_distance = d;
    }
}

/// Crowded-comparison order: lower rank first, then larger distance.
pub fn crowded_cmp(a: &Individual, b: &Individual) -> Ordering {
    a.rank
        .cmp(&b.rank)
        .then_with(|| b.crowding_distance.total_cmp(&a.crowding_distance))
}

/// Binary tournament under the crowded comparison; full ties are settled by
/// a fair coin. Returns the winner's index.
pub fn crowded_tournament_select<R: Rng + ?Sized>(population: &[Individual], rng: &mut R) -> usize {
    let n = population.len();
    let a = rng.random_range(0..n);
    let b = if n > 1 {
        let b = rng.random_range(0..n - 1);
        if b >= a {
            b + 1
        } else {
            b
        }
    } else {
        a
    };
    match crowded_cmp(&population[a], &population[b]) {
        Ordering::Less => a,
        Ordering::Greater => b,
        Ordering::Equal => {
            if rng.random_bool(0.5) {
                a
            } else {
                b
            }
        }
    }
}

/// Simulated binary crossover. With probability `crossover_probability` every
/// gene is recombined with a spread factor drawn from the SBX polynomial
/// distribution; the pair's per-gene mean is preserved before clipping.
pub fn sbx_crossover<R: Rng + ?Sized>(
    p1: &[f64],
    p2: &[f64],
    bounds: &Bounds,
    cfg: &Nsga2Config,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut c1 = p1.to_vec();
    let mut c2 = p2.to_vec();
    if !rng.random_bool(cfg.crossover_probability) {
        return (c1, c2);
    }
    let eta = cfg.crossover_distribution_index;
    for k in 0..p1.len() {
        let (x1, x2) = (p1[k], p2[k]);
        let u: f64 = rng.random();
        if (x1 - x2).abs() <= 1e-14 {
            continue;
        }
        let beta = if u <= 0.5 {
            (2.0 * u).powf(1.0 / (eta + 1.0))
        } else {
            (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
        };
        c1[k] = 0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2);
        c2[k] = 0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2);
    }
    bounds.clip(&mut c1);
    bounds.clip(&mut c2);
    (c1, c2)
}

/// Bounded polynomial mutation, applied to each gene independently.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    genes: &[f64],
    bounds: &Bounds,
    cfg: &Nsga2Config,
    rng: &mut R,
) -> Vec<f64> {
    let pm = cfg.mutation_probability_for(genes.len());
    let eta = cfg.mutation_distribution_index;
    let mut out = genes.to_vec();
    for (k, g) in out.iter_mut().enumerate() {
        if !rng.random_bool(pm) {
            continue;
        }
        let (lo, hi) = (bounds.lower[k], bounds.upper[k]);
        let span = hi - lo;
        let d1 = (*g - lo) / span;
        let d2 = (hi - *g) / span;
        let u: f64 = rng.random();
        let power = 1.0 / (eta + 1.0);
        let dq = if u < 0.5 {
            let v = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1).powf(eta + 1.0);
            v.powf(power) - 1.0
        } else {
            let v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2).powf(eta + 1.0);
            1.0 - v.powf(power)
        };
        *g = (*g + dq * span).clamp(lo, hi);
    }
    out
}

/// Sorted snapshot of one generation's surviving population.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub population: Vec<Individual>,
    /// Objective comparisons spent sorting this generation's merged set.
    pub comparisons: u64,
}

impl GenerationRecord {
    pub fn front(&self) -> impl Iterator<Item = &Individual> {
        self.population.iter().filter(|i| i.rank == 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub population: Vec<Individual>,
    /// Generation 0 is the sorted initial population.
    pub history: Vec<GenerationRecord>,
}

impl Evolution {
    /// Final non-dominated set, ordered by the first objective.
    pub fn pareto_front(&self) -> Vec<Individual> {
        let mut f: Vec<Individual> = self
            .population
            .iter()
            .filter(|i| i.rank == 1)
            .cloned()
            .collect();
        f.sort_by(|a, b| {
            let (fa, fb) = (a.objectives(), b.objectives());
            fa[0].total_cmp(&fb[0]).then(fa[1].total_cmp(&fb[1]))
        });
        f
    }
}

fn sanitize(f: FitnessPair) -> FitnessPair {
    let ok = |v: f64| v.is_finite() && v >= 0.0;
    if f.diverged || !ok(f.f1_iae) || !ok(f.f2_thd) {
        FitnessPair::penalty()
    } else {
        f
    }
}

fn evaluate_all<F>(evaluator: &F, genes: Vec<Vec<f64>>) -> Vec<Individual>
where
    F: Fn(&[f64]) -> FitnessPair + Sync,
{
    genes
        .into_par_iter()
        .map(|g| {
            let f = sanitize(evaluator(&g));
            Individual::evaluated(g, f)
        })
        .collect()
}

/// Sorts, assigns crowding, and orders the population by the crowded
/// comparison. Returns the comparison count.
fn rank_population(population: &mut [Individual]) -> Result<u64> {
    let outcome = sort_with_count(population)?;
    for front in &outcome.fronts {
        assign_crowding(population, front);
    }
    // stable: ties keep parents ahead of offspring
    population.sort_by(crowded_cmp);
    Ok(outcome.comparisons)
}

/// Runs NSGA-II. The evaluator must be deterministic; candidates within a
/// generation are evaluated in parallel, which does not affect results.
pub fn evolve<F>(evaluator: F, bounds: &Bounds, cfg: &Nsga2Config) -> Result<Evolution>
where
    F: Fn(&[f64]) -> FitnessPair + Sync,
{
    cfg.validate()?;
    bounds.validate()?;
    let n = cfg.population_size;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

    let initial: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            bounds
                .lower
                .iter()
                .zip(&bounds.upper)
                .map(|(lo, hi)| rng.random_range(*lo..=*hi))
                .collect()
        })
        .collect();
    let mut population = evaluate_all(&evaluator, initial);
    let comparisons = rank_population(&mut population)?;
    let mut history = vec![GenerationRecord {
        generation: 0,
        population: population.clone(),
        comparisons,
    }];

    for generation in 1..=cfg.generations {
        let mut offspring = Vec::with_capacity(n);
        while offspring.len() < n {
            let a = crowded_tournament_select(&population, &mut rng);
            let b = crowded_tournament_select(&population, &mut rng);
            let (c1, c2) = sbx_crossover(&population[a].genes, &population[b].genes, bounds, cfg, &mut rng);
            offspring.push(polynomial_mutation(&c1, bounds, cfg, &mut rng));
            offspring.push(polynomial_mutation(&c2, bounds, cfg, &mut rng));
        }
        offspring.truncate(n);

        let mut merged = population;
        merged.extend(evaluate_all(&evaluator, offspring));
        let comparisons = rank_population(&mut merged)?;
        merged.truncate(n);
        // ranks and distances describe the merged set; re-rank survivors so
        // tournaments and the archive see the truncated population
        rank_population(&mut merged)?;
        population = merged;
        history.push(GenerationRecord {
            generation,
            population: population.clone(),
            comparisons,
        });
    }
    Ok(Evolution {
        population,
        history,
    })
}

/// Area dominated by a two-objective point set, bounded by `reference`.
/// Points not strictly better than the reference in both objectives are
/// ignored.
pub fn hypervolume_2d(points: &[[f64; 2]], reference: [f64; 2]) -> f64 {
    let mut pts: Vec<[f64; 2]> = points
        .iter()
        .copied()
        .filter(|p| p[0] < reference[0] && p[1] < reference[1])
        .collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = reference[1];
    for p in pts {
        if p[1] < ceiling {
            area += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    area
}
