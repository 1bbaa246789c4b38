//! Seeded synthetic MCQA data with a learnable options signal.
//!
//! Correct options draw their words from an "answer" vocabulary and wrong
//! options from a disjoint "distractor" vocabulary. Each document holds
//! evidence sentences that mention the correct option's words, decoy
//! sentences that mention the wrong options' words, and filler. Oracle
//! queries therefore retrieve the evidence, plain options-aware queries
//! retrieve a mixture, and an adapter can learn to discount the distractor
//! vocabulary.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{ContextDocument, McqaSample, Split};
use crate::embed::mock_embed_all;
use crate::error::Result;
use crate::query::{embedding_texts, DEFAULT_SEPARATOR};
use crate::store::EmbeddingStore;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub samples: usize,
    pub options: usize,
    pub option_words: usize,
    pub evidence_sentences: usize,
    pub decoys_per_wrong_option: usize,
    pub filler_sentences: usize,
    pub sentence_len: usize,
    pub answer_vocab: usize,
    pub distractor_vocab: usize,
    pub topic_vocab: usize,
    pub filler_vocab: usize,
    /// Pad sentences with random answer/distractor vocabulary words so
    /// that every sentence carries `option_words` of each. Vocabulary
    /// membership alone then does not separate evidence from decoys.
    pub balance_vocab: bool,
    pub split: Split,
    pub seed: u64,
    /// Prefix for sample and document ids, so several sets can coexist.
    pub id_prefix: String,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            options: 4,
            option_words: 2,
            evidence_sentences: 2,
            decoys_per_wrong_option: 1,
            filler_sentences: 6,
            sentence_len: 8,
            answer_vocab: 40,
            distractor_vocab: 40,
            topic_vocab: 300,
            filler_vocab: 400,
            balance_vocab: true,
            split: Split::Train,
            seed: 7,
            id_prefix: "syn".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub samples: Vec<McqaSample>,
    pub documents: Vec<ContextDocument>,
}

impl SyntheticDataset {
    /// Mock-embeds every sentence and query text of the dataset.
    pub fn mock_store(&self, dim: usize) -> Result<EmbeddingStore> {
        let texts = embedding_texts(&self.samples, &self.documents, DEFAULT_SEPARATOR);
        mock_embed_all(texts.iter().map(|(id, t)| (id.as_str(), t.as_str())), dim)
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &'a [String], n: usize) -> Vec<&'a str> {
    pool.choose_multiple(rng, n).map(String::as_str).collect()
}

struct Vocab {
    answers: Vec<String>,
    distractors: Vec<String>,
    filler: Vec<String>,
}

/// Number of random (answer, distractor) vocabulary words to add.
type Padding = (usize, usize);

fn sentence(rng: &mut ChaCha8Rng, key: &[&str], pad: Padding, vocab: &Vocab, len: usize) -> String {
    let mut words: Vec<&str> = key.to_vec();
    for _ in 0..pad.0 {
        words.push(vocab.answers[rng.gen_range(0..vocab.answers.len())].as_str());
    }
    for _ in 0..pad.1 {
        words.push(vocab.distractors[rng.gen_range(0..vocab.distractors.len())].as_str());
    }
    let filler = &vocab.filler;
    while words.len() < len {
        words.push(filler[rng.gen_range(0..filler.len())].as_str());
    }
    words.shuffle(rng);
    let mut s = words.join(" ");
    s.push('.');
    s
}

pub fn generate(config: &SyntheticConfig) -> SyntheticDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let vocab = |prefix: &str, n: usize| (0..n).map(|i| format!("{prefix}{i}")).collect::<Vec<_>>();
    let words = Vocab {
        answers: vocab("ans", config.answer_vocab),
        distractors: vocab("dis", config.distractor_vocab),
        filler: vocab("fil", config.filler_vocab),
    };
    let topics = vocab("top", config.topic_vocab);

    let mut samples = Vec::with_capacity(config.samples);
    let mut documents = Vec::with_capacity(config.samples);
    for i in 0..config.samples {
        let id = format!("{}-{}", config.id_prefix, i);
        let topic = pick(&mut rng, &topics, 2);
        let correct = pick(&mut rng, &words.answers, config.option_words);
        let wrong: Vec<Vec<&str>> = (1..config.options)
            .map(|_| pick(&mut rng, &words.distractors, config.option_words))
            .collect();

        let k = if config.balance_vocab { config.option_words } else { 0 };
        let mut sentences = Vec::new();
        for _ in 0..config.evidence_sentences {
            let mut key = correct.clone();
            key.push(topic[0]);
            sentences.push(sentence(&mut rng, &key, (0, k), &words, config.sentence_len));
        }
        for w in &wrong {
            for _ in 0..config.decoys_per_wrong_option {
                let mut key = w.clone();
                key.push(topic[0]);
                sentences.push(sentence(&mut rng, &key, (k, 0), &words, config.sentence_len));
            }
        }
        for _ in 0..config.filler_sentences {
            let key = if rng.gen_bool(0.5) { vec![topic[1]] } else { vec![] };
            sentences.push(sentence(&mut rng, &key, (k, k), &words, config.sentence_len));
        }
        sentences.shuffle(&mut rng);

        let answer_index = rng.gen_range(0..config.options);
        let mut wrong_iter = wrong.iter();
        let options = (0..config.options)
            .map(|o| {
                if o == answer_index {
                    correct.join(" ")
                } else {
                    wrong_iter.next().expect("options - 1 wrong options").join(" ")
                }
            })
            .collect();

        samples.push(McqaSample {
            sample_id: id.clone(),
            document_id: id.clone(),
            // No fixed template words: a token shared by every query would
            // let training tie it to the answer vocabulary.
            question: format!("{} {}?", topic[0], topic[1]),
            options,
            answer_index,
            split: config.split,
        });
        documents.push(ContextDocument {
            document_id: id,
            sentences,
        });
    }
    SyntheticDataset { samples, documents }
}
