//! Deterministic synthetic fixtures shared by the integration tests.
#![allow(dead_code)]

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wordaxes::corpus::{ProcessedCorpus, Sentence};

pub const FEMALE: [&str; 8] = ["she", "her", "woman", "girl", "mother", "daughter", "sister", "aunt"];
pub const MALE: [&str; 8] = ["he", "him", "man", "boy", "father", "son", "brother", "uncle"];
const FEMALE_CTX: [&str; 5] = ["dress", "skirt", "lipstick", "salon", "necklace"];
const MALE_CTX: [&str; 5] = ["beard", "football", "garage", "tie", "razor"];
const NEUTRAL: [&str; 12] = [
    "the", "went", "to", "city", "today", "with", "a", "friend", "house", "walked", "saw", "home",
];

/// Documents of tokenized sentences. Each sentence leans toward one gender:
/// gendered words co-occur with gender-typed context words.
pub fn gender_documents(docs: usize, sentences: usize, seed: u64) -> Vec<Vec<Vec<String>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..docs)
        .map(|_| {
            (0..sentences)
                .map(|_| {
                    let female = rng.random_bool(0.5);
                    let (words, ctx) = if female { (&FEMALE, &FEMALE_CTX) } else { (&MALE, &MALE_CTX) };
                    (0..10)
                        .map(|_| {
                            let u: f64 = rng.random();
                            let w = if u < 0.4 {
                                words[rng.random_range(0..words.len())]
                            } else if u < 0.7 {
                                ctx[rng.random_range(0..ctx.len())]
                            } else {
                                NEUTRAL[rng.random_range(0..NEUTRAL.len())]
                            };
                            w.to_string()
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

pub fn processed(docs: &[Vec<Vec<String>>]) -> ProcessedCorpus {
    ProcessedCorpus {
        documents: docs
            .iter()
            .map(|d| d.iter().map(|s| Sentence(s.clone())).collect())
            .collect(),
    }
}

/// Raw text of one document: sentences end with a period.
pub fn doc_text(doc: &[Vec<String>]) -> String {
    doc.iter().map(|s| format!("{}.", s.join(" "))).collect::<Vec<_>>().join(" ")
}

/// Writes one `.txt` file per document.
pub fn write_text_dir(dir: &Path, docs: &[Vec<Vec<String>>]) {
    fs::create_dir_all(dir).unwrap();
    for (i, d) in docs.iter().enumerate() {
        fs::write(dir.join(format!("doc{i:04}.txt")), doc_text(d)).unwrap();
    }
}

/// Five training pairs and three held-out pairs.
pub fn gender_lexicon() -> String {
    let mut s = String::from("# name: gender\n# positive: female\n# negative: male\nword\tpole\tpair_id\tsplit\n");
    for (i, (f, m)) in FEMALE.iter().zip(MALE.iter()).enumerate() {
        let (pair, split) = if i < 5 { (i.to_string(), "train") } else { (String::new(), "test") };
        s.push_str(&format!("{f}\tpositive\t{pair}\t{split}\n{m}\tnegative\t{pair}\t{split}\n"));
    }
    s
}

pub fn keywords() -> String {
    "dress\tclothing\nbeard\tgrooming\ncity\tplace\nzeppelin\tplace\n".into()
}
