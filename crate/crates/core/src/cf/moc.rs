//! Multi-objective genetic search over synthetic variants of `x0`.
//!
//! Objectives (all minimized): Gower distance to `x0`, number of changed
//! features, and the gap between the target probability and the band.
//! Survivor selection is NSGA-II style: `(mu + mu)` non-dominated sorting
//! with crowding distance on the last admitted front. Fixed features never
//! receive a gene, so crossover and mutation cannot touch them.

use std::io::Write;
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::pareto::{crowding_distance, non_dominated_sort, pareto_front_indices};
use super::problem::{dedup_by_instance, rank_cmp, Counterfactual, SearchContext, Stage};
use crate::error::{Error, Result};
use crate::predictor::Predictor;
use crate::scalar::Scalar;
use crate::tabular::{Cell, Domain, FeatureKind, Instance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MocConfig {
    pub population: usize,
    pub generations: usize,
    /// Per-feature mutation probability for offspring.
    pub mutation_rate: f64,
    /// Probability that a parent pair is recombined.
    pub crossover_rate: f64,
    /// Per-feature mutation probability for the initial mutants of `x0`.
    pub init_mutation_rate: f64,
    pub seed: u64,
}

impl Default for MocConfig {
    fn default() -> Self {
        Self {
            population: 40,
            generations: 60,
            mutation_rate: 0.1,
            crossover_rate: 0.9,
            init_mutation_rate: 0.2,
            seed: 0,
        }
    }
}

impl MocConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 || !self.population.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "population must be even and >= 4, got {}",
                self.population
            )));
        }
        if self.generations == 0 {
            return Err(Error::InvalidConfig("generations must be >= 1".into()));
        }
        for (name, r) in [
            ("mutation_rate", self.mutation_rate),
            ("crossover_rate", self.crossover_rate),
            ("init_mutation_rate", self.init_mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidConfig(format!("{name} must be in [0, 1], got {r}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MocIndividual<T> {
    pub genome: Instance<T>,
    /// `[proximity, sparsity, prob_gap]`
    pub objectives: [T; 3],
    /// Target-class probability of the genome.
    pub p_target: T,
}

/// The non-dominated individuals, in input order.
pub fn pareto_front<T: Scalar>(individuals: &[MocIndividual<T>]) -> Vec<MocIndividual<T>> {
    let objs: Vec<[T; 3]> = individuals.iter().map(|i| i.objectives).collect();
    pareto_front_indices(&objs)
        .into_iter()
        .map(|i| individuals[i].clone())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GenerationStats<T> {
    pub generation: usize,
    pub best_prob_gap: T,
    pub front_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MocResult<T> {
    pub counterfactuals: Vec<Counterfactual<T>>,
    pub trace: Vec<GenerationStats<T>>,
    pub evaluations: u64,
}

/// Per-generation trace as CSV: `generation,best_prob_gap,front_size`.
pub fn write_trace_csv<T: Scalar, W: Write>(trace: &[GenerationStats<T>], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["generation", "best_prob_gap", "front_size"])?;
    for g in trace {
        w.write_record([
            g.generation.to_string(),
            g.best_prob_gap.to_string(),
            g.front_size.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

enum Gene<T> {
    Flip([Cell<T>; 2]),
    Resample(Vec<Cell<T>>),
    Gaussian { min: T, max: T, sigma: T },
}

struct Genes<T> {
    genes: Vec<(usize, Gene<T>)>,
}

impl<T: Scalar> Genes<T> {
    fn mutate_one(&self, x: &mut Instance<T>, j: usize, gene: &Gene<T>, rng: &mut ChaCha8Rng) {
        match gene {
            Gene::Flip([a, b]) => {
                let to = if x.get(j) == a { b.clone() } else { a.clone() };
                x.set(j, to);
            }
            Gene::Resample(values) => {
                let current = x.get(j).clone();
                let others: Vec<&Cell<T>> = values.iter().filter(|v| **v != current).collect();
                if let Some(v) = others.choose(rng) {
                    x.set(j, (*v).clone());
                }
            }
            Gene::Gaussian { min, max, sigma } => {
                if let Some(v) = x.get(j).as_num() {
                    let step: f64 = rng.sample(StandardNormal);
                    let nv = (v + *sigma * T::of(step)).max(*min).min(*max);
                    x.set(j, Cell::Num(nv));
                }
            }
        }
    }

    fn mutate(&self, x: &mut Instance<T>, rate: f64, rng: &mut ChaCha8Rng) {
        for (j, gene) in &self.genes {
            if rng.random_bool(rate) {
                self.mutate_one(x, *j, gene, rng);
            }
        }
    }

    /// Uniform crossover restricted to the genes.
    fn crossover(&self, a: &mut Instance<T>, b: &mut Instance<T>, rng: &mut ChaCha8Rng) {
        for (j, _) in &self.genes {
            if rng.random_bool(0.5) {
                let va = a.get(*j).clone();
                a.set(*j, b.get(*j).clone());
                b.set(*j, va);
            }
        }
    }
}

fn evaluate<T: Scalar, P: Predictor<T> + ?Sized>(
    ctx: &SearchContext<'_, T, P>,
    genomes: Vec<Instance<T>>,
) -> Result<Vec<MocIndividual<T>>> {
    let probs = ctx.predictor.class_probabilities(&genomes, ctx.query.target_class)?;
    genomes
        .into_iter()
        .zip(probs)
        .map(|(genome, p)| {
            let proximity = ctx.gower.distance(&ctx.query.x0, &genome)?;
            let sparsity = T::of(genome.diff(&ctx.query.x0, ctx.epsilon).len() as f64);
            Ok(MocIndividual {
                objectives: [proximity, sparsity, ctx.query.prob_gap(p)],
                genome,
                p_target: p,
            })
        })
        .collect()
}

/// Rank and crowding distance of every individual.
fn rank_and_crowd<T: Scalar>(pop: &[MocIndividual<T>]) -> (Vec<usize>, Vec<T>, usize) {
    let objs: Vec<[T; 3]> = pop.iter().map(|i| i.objectives).collect();
    let fronts = non_dominated_sort(&objs);
    let mut rank = vec![0; pop.len()];
    let mut crowd = vec![T::zero(); pop.len()];
    for (r, front) in fronts.iter().enumerate() {
        for (&i, d) in front.iter().zip(crowding_distance(&objs, front)) {
            rank[i] = r;
            crowd[i] = d;
        }
    }
    (rank, crowd, fronts.first().map_or(0, Vec::len))
}

fn select_survivors<T: Scalar>(combined: Vec<MocIndividual<T>>, mu: usize) -> Vec<MocIndividual<T>> {
    let objs: Vec<[T; 3]> = combined.iter().map(|i| i.objectives).collect();
    let mut keep: Vec<usize> = Vec::with_capacity(mu);
    for front in non_dominated_sort(&objs) {
        if keep.len() + front.len() <= mu {
            keep.extend_from_slice(&front);
            if keep.len() == mu {
                break;
            }
            continue;
        }
        let crowd = crowding_distance(&objs, &front);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| crowd[b].total_cmp_nan_last(&crowd[a]).then(front[a].cmp(&front[b])));
        keep.extend(order.into_iter().take(mu - keep.len()).map(|k| front[k]));
        break;
    }
    keep.sort_unstable();
    let mut slots: Vec<Option<MocIndividual<T>>> = combined.into_iter().map(Some).collect();
    keep.into_iter().map(|i| slots[i].take().expect("unique index")).collect()
}

/// Runs the search and reports each generation's population to `observer`
/// (generation 0 is the initial population).
pub fn moc_search_observed<T, P, F>(
    ctx: &SearchContext<'_, T, P>,
    config: &MocConfig,
    deadline: Option<Instant>,
    mut observer: F,
) -> Result<MocResult<T>>
where
    T: Scalar,
    P: Predictor<T> + ?Sized,
    F: FnMut(usize, &[MocIndividual<T>]),
{
    config.validate()?;
    let schema = ctx.schema;
    let genes = Genes {
        genes: ctx
            .actionable()
            .into_iter()
            .filter_map(|j| {
                let f = schema.feature(j);
                let gene = match (&f.kind, &f.domain) {
                    (FeatureKind::Binary, Domain::Values(v)) => Gene::Flip([v[0].clone(), v[1].clone()]),
                    (FeatureKind::Categorical, Domain::Values(v)) if v.len() > 1 => Gene::Resample(v.clone()),
                    (FeatureKind::Numeric, Domain::Range { min, max }) if max > min => Gene::Gaussian {
                        min: *min,
                        max: *max,
                        sigma: T::of(0.1) * (*max - *min),
                    },
                    _ => return None,
                };
                Some((j, gene))
            })
            .collect(),
    };
    if genes.genes.is_empty() {
        return Err(Error::InvalidQuery("no actionable features to evolve".into()));
    }
    let mu = config.population;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let x0 = &ctx.query.x0;

    let mut init = vec![x0.clone()];
    while init.len() < mu {
        let mut x = x0.clone();
        genes.mutate(&mut x, config.init_mutation_rate, &mut rng);
        init.push(x);
    }
    let mut pop = evaluate(ctx, init)?;
    let mut evaluations = mu as u64;
    observer(0, &pop);

    let mut trace = Vec::with_capacity(config.generations);
    for generation in 1..=config.generations {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            log::warn!("moc stopped at generation {generation} on its time budget");
            break;
        }
        let (rank, crowd, _) = rank_and_crowd(&pop);
        let tournament = |rng: &mut ChaCha8Rng| -> usize {
            let a = rng.random_range(0..mu);
            let b = rng.random_range(0..mu);
            let b_better = rank[b] < rank[a] || (rank[b] == rank[a] && crowd[b] > crowd[a]);
            if b_better {
                b
            } else {
                a
            }
        };
        let mut offspring = Vec::with_capacity(mu);
        while offspring.len() < mu {
            let mut c1 = pop[tournament(&mut rng)].genome.clone();
            let mut c2 = pop[tournament(&mut rng)].genome.clone();
            if rng.random_bool(config.crossover_rate) {
                genes.crossover(&mut c1, &mut c2, &mut rng);
            }
            genes.mutate(&mut c1, config.mutation_rate, &mut rng);
            genes.mutate(&mut c2, config.mutation_rate, &mut rng);
            offspring.push(c1);
            offspring.push(c2);
        }
        let children = evaluate(ctx, offspring)?;
        evaluations += mu as u64;
        pop.extend(children);
        pop = select_survivors(pop, mu);
        let (_, _, front_size) = rank_and_crowd(&pop);
        let best_prob_gap = pop
            .iter()
            .map(|i| i.objectives[2])
            .fold(T::infinity(), |a, b| a.min(b));
        trace.push(GenerationStats {
            generation,
            best_prob_gap,
            front_size,
        });
        observer(generation, &pop);
    }

    let in_band: Vec<MocIndividual<T>> = pop.into_iter().filter(|i| ctx.query.in_band(i.p_target)).collect();
    let unique = dedup_by_instance(in_band, |i| &i.genome);
    let mut front = Vec::new();
    for ind in pareto_front(&unique) {
        let cf = ctx.counterfactual(ind.genome, ind.p_target, Stage::Moc)?;
        if ctx.is_valid(&cf)? {
            front.push(cf);
        }
    }
    front.sort_by(rank_cmp);
    front.truncate(ctx.query.k);
    Ok(MocResult {
        counterfactuals: front,
        trace,
        evaluations,
    })
}

/// Evolves `config.population` individuals for `config.generations`
/// generations and returns up to `k` in-band Pareto-optimal counterfactuals
/// ranked by composite score. An empty list means the stage found nothing.
pub fn moc_search<T: Scalar, P: Predictor<T> + ?Sized>(
    ctx: &SearchContext<'_, T, P>,
    config: &MocConfig,
    deadline: Option<Instant>,
) -> Result<MocResult<T>> {
    moc_search_observed(ctx, config, deadline, |_, _| {})
}
