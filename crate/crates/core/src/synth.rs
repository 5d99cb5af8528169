//! Synthetic corpora for tests and benchmarks.
//!
//! Dense parts are clustered Gaussians with varied norms. Sparse supports are
//! Zipf-distributed, biased toward a per-cluster topic vocabulary so that
//! the three paths agree on coarse structure. Keywords are the statistical
//! supports. Optional planted structures: keyword groups and 2-hop
//! knowledge-graph chains.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal, Zipf};

use crate::error::Result;
use crate::eval::{brute_force_topk, Judgment};
use crate::model::{
    DenseVector, DocumentRecord, DocumentStore, FusedVector, QuerySpec, SparseVector, Triplet, Weights,
};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub docs: usize,
    pub dense_dim: usize,
    pub clusters: usize,
    pub learned_vocab: u32,
    pub statistical_vocab: u32,
    pub learned_nnz: usize,
    pub statistical_nnz: usize,
    pub zipf_exponent: f64,
    /// Norm of the per-document dense noise relative to the unit-norm
    /// cluster centers. Lower values give tighter, more separated clusters.
    pub spread: f64,
    /// Probability that a term is drawn from the document's topic vocabulary.
    pub topic_bias: f64,
    /// Entity pool size; 0 disables entities.
    pub entities: u32,
    pub max_entities_per_doc: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            docs: 1000,
            dense_dim: 64,
            clusters: 16,
            learned_vocab: 4000,
            statistical_vocab: 4000,
            learned_nnz: 20,
            statistical_nnz: 20,
            zipf_exponent: 1.1,
            spread: 1.0,
            topic_bias: 0.7,
            entities: 0,
            max_entities_per_doc: 2,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub config: SynthConfig,
    pub docs: Vec<DocumentRecord>,
    pub cluster_of: Vec<usize>,
    centers: Vec<Vec<f32>>,
    learned_topics: Vec<Vec<u32>>,
    statistical_topics: Vec<Vec<u32>>,
}

struct TermSampler {
    zipf: Zipf<f64>,
    vocab: u32,
}

impl TermSampler {
    fn new(vocab: u32, s: f64) -> Self {
        TermSampler { zipf: Zipf::new(vocab as f64, s).expect("valid zipf parameters"), vocab }
    }

    /// A term id: Zipf rank mapped through the topic permutation with
    /// probability `bias`, else through the identity.
    fn draw(&self, rng: &mut ChaCha8Rng, topic: &[u32], bias: f64) -> u32 {
        let rank = (self.zipf.sample(rng) as u32 - 1).min(self.vocab - 1);
        if rng.random_bool(bias) {
            topic[rank as usize]
        } else {
            rank
        }
    }
}

fn sparse_part(rng: &mut ChaCha8Rng, sampler: &TermSampler, topic: &[u32], nnz: usize, bias: f64) -> SparseVector {
    let nnz = nnz.min(sampler.vocab as usize);
    let mut terms = std::collections::BTreeSet::new();
    let mut guard = 0;
    while terms.len() < nnz && guard < nnz * 50 {
        terms.insert(sampler.draw(rng, topic, bias));
        guard += 1;
    }
    SparseVector::new(terms.into_iter().map(|t| (t, rng.random_range(0.1f32..0.4))))
}

fn gaussian(rng: &mut ChaCha8Rng, m: usize, sigma: f64) -> Vec<f32> {
    let normal = Normal::new(0.0, sigma / (m.max(1) as f64).sqrt()).expect("valid sigma");
    (0..m).map(|_| normal.sample(rng) as f32).collect()
}

impl SyntheticCorpus {
    pub fn generate(config: SynthConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let m = config.dense_dim;
        let centers: Vec<Vec<f32>> = (0..config.clusters).map(|_| gaussian(&mut rng, m, 1.0)).collect();
        let perm = |rng: &mut ChaCha8Rng, vocab: u32| {
            let mut p: Vec<u32> = (0..vocab).collect();
            p.shuffle(rng);
            p
        };
        let learned_topics: Vec<Vec<u32>> =
            (0..config.clusters).map(|_| perm(&mut rng, config.learned_vocab)).collect();
        let statistical_topics: Vec<Vec<u32>> =
            (0..config.clusters).map(|_| perm(&mut rng, config.statistical_vocab)).collect();
        let mut corpus = SyntheticCorpus {
            config: config.clone(),
            docs: Vec::with_capacity(config.docs),
            cluster_of: Vec::with_capacity(config.docs),
            centers,
            learned_topics,
            statistical_topics,
        };
        for i in 0..config.docs {
            let c = rng.random_range(0..config.clusters);
            let vector = corpus.draw_vector(&mut rng, c);
            let mut doc = DocumentRecord::new(i as u64, vector);
            if config.entities > 0 {
                let count = rng.random_range(0..=config.max_entities_per_doc);
                let ents = (0..count).map(|_| rng.random_range(0..config.entities)).collect();
                doc = doc.with_entities(ents);
            }
            corpus.docs.push(doc);
            corpus.cluster_of.push(c);
        }
        corpus
    }

    fn draw_vector(&self, rng: &mut ChaCha8Rng, cluster: usize) -> FusedVector {
        let cfg = &self.config;
        let noise = gaussian(rng, cfg.dense_dim, cfg.spread);
        let scale = rng.random_range(0.7f32..1.3);
        let dense: Vec<f32> = self.centers[cluster].iter().zip(&noise).map(|(c, n)| (c + n) * scale).collect();
        let ls = TermSampler::new(cfg.learned_vocab, cfg.zipf_exponent);
        let ss = TermSampler::new(cfg.statistical_vocab, cfg.zipf_exponent);
        let learned = sparse_part(rng, &ls, &self.learned_topics[cluster], cfg.learned_nnz, cfg.topic_bias);
        let statistical = sparse_part(rng, &ss, &self.statistical_topics[cluster], cfg.statistical_nnz, cfg.topic_bias);
        FusedVector::new(DenseVector::new(dense), learned, statistical)
    }

    /// Query vector near `anchor`: perturbed dense part and a random subset of
    /// the anchor's sparse terms plus a few fresh topic terms.
    pub fn query_near(&self, rng: &mut ChaCha8Rng, anchor: usize) -> FusedVector {
        let cfg = &self.config;
        let c = self.cluster_of[anchor];
        let base = &self.docs[anchor].vector;
        let noise = gaussian(rng, cfg.dense_dim, 0.3);
        let dense: Vec<f32> = base.dense().as_slice().iter().zip(&noise).map(|(x, n)| x + n).collect();
        let mix = |rng: &mut ChaCha8Rng, part: &SparseVector, sampler: &TermSampler, topic: &[u32]| {
            let mut pairs: Vec<(u32, f32)> = Vec::new();
            for (i, v) in part.iter() {
                if rng.random_bool(0.5) {
                    pairs.push((i, v * rng.random_range(0.5f32..1.5)));
                }
            }
            for _ in 0..3 {
                pairs.push((sampler.draw(rng, topic, cfg.topic_bias), rng.random_range(0.1f32..0.4)));
            }
            SparseVector::from_unsorted(pairs)
        };
        let ls = TermSampler::new(cfg.learned_vocab, cfg.zipf_exponent);
        let ss = TermSampler::new(cfg.statistical_vocab, cfg.zipf_exponent);
        let learned = mix(rng, base.learned(), &ls, &self.learned_topics[c]);
        let statistical = mix(rng, base.statistical(), &ss, &self.statistical_topics[c]);
        FusedVector::new(DenseVector::new(dense), learned, statistical)
    }

    pub fn store(&self) -> Result<DocumentStore> {
        DocumentStore::new(self.docs.clone())
    }

    /// Adds `terms_per_group` fresh terms (ids from `statistical_vocab`
    /// upward) to `per_group` random documents of one cluster per group, group
    /// `g` using cluster `g mod clusters`. Returns each group's term set.
    pub fn plant_keyword_groups(
        &mut self,
        rng: &mut ChaCha8Rng,
        groups: usize,
        per_group: usize,
        terms_per_group: usize,
    ) -> Vec<Vec<u32>> {
        let mut next = self.config.statistical_vocab;
        let mut sets = Vec::with_capacity(groups);
        for g in 0..groups {
            let terms: Vec<u32> = (0..terms_per_group as u32).map(|i| next + i).collect();
            next += terms_per_group as u32;
            let cluster = g % self.config.clusters;
            let members: Vec<usize> = (0..self.docs.len()).filter(|&i| self.cluster_of[i] == cluster).collect();
            for &doc_idx in members.choose_multiple(rng, per_group) {
                let doc = &mut self.docs[doc_idx];
                let mut pairs: Vec<(u32, f32)> = doc.vector.statistical().iter().collect();
                pairs.extend(terms.iter().map(|&t| (t, rng.random_range(0.1f32..0.4))));
                let stat = SparseVector::from_unsorted(pairs);
                let v = FusedVector::new(doc.vector.dense().clone(), doc.vector.learned().clone(), stat);
                let entities = doc.entities.clone();
                *doc = DocumentRecord::new(doc.doc_id, v).with_entities(entities);
            }
            sets.push(terms);
        }
        sets
    }

    /// Plants `chains` entity chains `a - b - c` over distinct random docs
    /// `A, B, C`, each with a query anchored away from `C` whose answer is
    /// `C`. Entity ids start at `entity_base`. `C` is checked to rank outside
    /// the top `min_rank` of its query under the given weights.
    pub fn plant_chains(
        &mut self,
        rng: &mut ChaCha8Rng,
        chains: usize,
        entity_base: u32,
        weights: Weights,
        min_rank: usize,
    ) -> Result<PlantedChains> {
        let n = self.docs.len();
        let picks = rand::seq::index::sample(rng, n, (3 * chains).min(n)).into_vec();
        let mut triplets = Vec::with_capacity(2 * chains);
        let mut plan = Vec::with_capacity(chains);
        for (i, trio) in picks.chunks_exact(3).enumerate() {
            let [a, b, c] = [trio[0], trio[1], trio[2]];
            let base = entity_base + 3 * i as u32;
            for (doc, e) in [(a, base), (b, base + 1), (c, base + 2)] {
                let mut ents = self.docs[doc].entities.clone();
                ents.push(e);
                let d = std::mem::replace(
                    &mut self.docs[doc],
                    DocumentRecord::new(
                        0,
                        FusedVector::new(DenseVector::default(), SparseVector::default(), SparseVector::default()),
                    ),
                );
                self.docs[doc] = d.with_entities(ents);
            }
            triplets.push(Triplet { source: base, relation: 2 * i as u32, target: base + 1 });
            triplets.push(Triplet { source: base + 1, relation: 2 * i as u32 + 1, target: base + 2 });
            plan.push((a, base, c));
        }
        let store = self.store()?;
        let mut queries = Vec::with_capacity(plan.len());
        let mut answers = Vec::with_capacity(plan.len());
        for (_, entity, answer) in plan {
            let mut chosen = None;
            for _ in 0..50 {
                let mut anchor = rng.random_range(0..n);
                while self.cluster_of[anchor] == self.cluster_of[answer] {
                    anchor = rng.random_range(0..n);
                }
                let v = self.query_near(rng, anchor);
                let probe = QuerySpec::new(v.clone(), weights, min_rank, min_rank);
                let top = brute_force_topk(&probe, &store)?;
                if top.iter().all(|&(node, _)| node as usize != answer) {
                    chosen = Some(v);
                    break;
                }
            }
            let v = chosen.expect("could not draw a query dissimilar to the planted answer");
            queries.push((v, entity));
            answers.push(self.docs[answer].doc_id);
        }
        Ok(PlantedChains { triplets, queries, answers })
    }
}

/// Output of [`SyntheticCorpus::plant_chains`].
#[derive(Clone, Debug)]
pub struct PlantedChains {
    pub triplets: Vec<Triplet>,
    /// Query vector and its query entity.
    pub queries: Vec<(FusedVector, u32)>,
    /// Answer document id per query.
    pub answers: Vec<u64>,
}

/// Uniform sample from the weight simplex over the three vector paths.
pub fn simplex_weights(rng: &mut ChaCha8Rng) -> Weights {
    let e: [f64; 3] = [Exp1.sample(rng), Exp1.sample(rng), Exp1.sample(rng)];
    let sum: f64 = e.iter().sum();
    Weights::new((e[0] / sum) as f32, (e[1] / sum) as f32, (e[2] / sum) as f32, 0.0)
}

/// `count` queries anchored on random documents.
pub fn generate_queries(
    corpus: &SyntheticCorpus,
    count: usize,
    weights: Option<Weights>,
    k: usize,
    beam: usize,
    seed: u64,
) -> Vec<QuerySpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let anchor = rng.random_range(0..corpus.docs.len());
            let v = corpus.query_near(&mut rng, anchor);
            let w = weights.unwrap_or_else(|| simplex_weights(&mut rng));
            QuerySpec::new(v, w, k, beam)
        })
        .collect()
}

/// Exhaustive ground truth (doc ids) for each query.
pub fn ground_truth(queries: &[QuerySpec], store: &DocumentStore) -> Result<Vec<Judgment>> {
    queries
        .iter()
        .map(|q| {
            let top = brute_force_topk(q, store)?;
            Ok(Judgment::binary(top.into_iter().map(|(n, _)| store.doc(n).doc_id).collect()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_corpus;

    #[test]
    fn corpus_is_valid_and_deterministic() {
        let cfg = SynthConfig { docs: 200, entities: 30, ..Default::default() };
        let a = SyntheticCorpus::generate(cfg.clone());
        let b = SyntheticCorpus::generate(cfg);
        assert_eq!(a.docs, b.docs);
        let s = validate_corpus(&a.docs).unwrap();
        assert_eq!(s.n, 200);
        assert_eq!(s.dense_dim, 64);
        assert!(s.mean_learned_nnz > 15.0 && s.mean_statistical_nnz > 15.0);
        assert!(a.docs.iter().all(|d| d.keywords == d.vector.statistical().indices()));
    }

    #[test]
    fn simplex_weights_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let w = simplex_weights(&mut rng);
            assert!(w.validate().is_ok());
            assert!((w.dense + w.learned + w.statistical - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn planted_keywords_reach_documents() {
        let mut c = SyntheticCorpus::generate(SynthConfig { docs: 100, ..Default::default() });
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let groups = c.plant_keyword_groups(&mut rng, 3, 4, 2);
        for (gi, g) in groups.iter().enumerate() {
            let holders: Vec<usize> =
                (0..c.docs.len()).filter(|&i| g.iter().all(|t| c.docs[i].has_keyword(*t))).collect();
            let cluster_size = c.cluster_of.iter().filter(|&&x| x == gi).count();
            assert_eq!(holders.len(), cluster_size.min(4));
            assert!(holders.iter().all(|&i| c.cluster_of[i] == gi));
        }
        validate_corpus(&c.docs).unwrap();
    }
}
