//! Seeded keyword-mixture corpus generator.
//!
//! Each class owns a disjoint set of high-frequency keywords; all classes
//! draw from one shared filler vocabulary. Output has the `ID`,
//! `Resume_str`, `Category` layout expected by [`crate::corpus`].

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QtcError, Result};

pub const KEYWORDS_PER_CLASS: usize = 6;
/// Probability that a token is one of the document's own class keywords.
pub const OWN_KEYWORD_RATE: f64 = 0.45;
/// Probability that a token is a keyword of some other class.
pub const CROSS_KEYWORD_RATE: f64 = 0.05;
pub const MIN_TOKENS: usize = 30;
pub const MAX_TOKENS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub classes: usize,
    pub per_class: usize,
    /// Size of the shared filler vocabulary.
    pub vocab_size: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            classes: 3,
            per_class: 40,
            vocab_size: 60,
            seed: 7,
        }
    }
}

const CLASS_NAMES: [&str; 8] = [
    "CONSULTANT",
    "ENGINEERING",
    "FITNESS",
    "HEALTHCARE",
    "FINANCE",
    "TEACHER",
    "DESIGNER",
    "SALES",
];

const KEYWORD_BANKS: [[&str; KEYWORDS_PER_CLASS]; 8] = [
    [
        "advisory",
        "client",
        "strategy",
        "stakeholder",
        "engagement",
        "catering",
    ],
    [
        "mechanical",
        "circuit",
        "prototype",
        "cad",
        "tolerance",
        "firmware",
    ],
    [
        "coaching",
        "athletic",
        "conditioning",
        "strength",
        "trainer",
        "nutrition",
    ],
    [
        "patient", "clinical", "nursing", "triage", "pharmacy", "dosage",
    ],
    [
        "audit",
        "ledger",
        "portfolio",
        "accounting",
        "forecast",
        "tax",
    ],
    [
        "classroom",
        "curriculum",
        "pupils",
        "lesson",
        "grading",
        "tutoring",
    ],
    [
        "typography",
        "sketch",
        "branding",
        "layout",
        "palette",
        "illustrator",
    ],
    [
        "quota",
        "prospecting",
        "pipeline",
        "closing",
        "territory",
        "retail",
    ],
];

const FILLER_BANK: [&str; 40] = [
    "managed",
    "team",
    "company",
    "experience",
    "skills",
    "summary",
    "developed",
    "responsible",
    "project",
    "work",
    "professional",
    "office",
    "support",
    "reports",
    "business",
    "customer",
    "service",
    "program",
    "training",
    "quality",
    "operations",
    "planning",
    "department",
    "staff",
    "process",
    "communication",
    "leadership",
    "organization",
    "software",
    "data",
    "review",
    "meetings",
    "budget",
    "schedule",
    "goals",
    "policies",
    "records",
    "tasks",
    "career",
    "education",
];

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "be", "da", "fu", "gi", "ho", "ju", "pe", "wa",
];

fn syllable_word(mut index: usize, prefix: &str) -> String {
    let mut w = prefix.to_string();
    for _ in 0..3 {
        w.push_str(SYLLABLES[index % SYLLABLES.len()]);
        index /= SYLLABLES.len();
    }
    w
}

fn class_name(c: usize) -> String {
    CLASS_NAMES
        .get(c)
        .map_or_else(|| format!("CATEGORY_{}", c + 1), |s| s.to_string())
}

fn keywords(c: usize) -> Vec<String> {
    match KEYWORD_BANKS.get(c) {
        Some(bank) => bank.iter().map(|s| s.to_string()).collect(),
        None => (0..KEYWORDS_PER_CLASS)
            .map(|k| syllable_word(c * KEYWORDS_PER_CLASS + k, "q"))
            .collect(),
    }
}

fn filler(vocab_size: usize) -> Vec<String> {
    let mut words: Vec<String> = FILLER_BANK
        .iter()
        .take(vocab_size)
        .map(|s| s.to_string())
        .collect();
    let mut i = 0;
    while words.len() < vocab_size {
        words.push(syllable_word(i, "x"));
        i += 1;
    }
    words
}

/// Corpus CSV text. Identical configs give identical bytes.
pub fn generate_corpus(config: &SynthConfig) -> Result<String> {
    if config.classes < 2 {
        return Err(QtcError::validation(format!(
            "need at least 2 classes, got {}",
            config.classes
        )));
    }
    if config.per_class < 4 {
        return Err(QtcError::validation(format!(
            "need at least 4 documents per class, got {}",
            config.per_class
        )));
    }
    if config.vocab_size == 0 {
        return Err(QtcError::validation("vocab_size must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let banks: Vec<Vec<String>> = (0..config.classes).map(keywords).collect();
    let filler = filler(config.vocab_size);

    let total = config.classes * config.per_class;
    let mut ids = BTreeSet::new();
    while ids.len() < total {
        ids.insert(rng.gen_range(10_000_000u64..100_000_000));
    }
    let mut ids: Vec<u64> = ids.into_iter().collect();
    ids.shuffle(&mut rng);

    let mut rows = Vec::with_capacity(total);
    for c in 0..config.classes {
        for _ in 0..config.per_class {
            let len = rng.gen_range(MIN_TOKENS..=MAX_TOKENS);
            let mut tokens = Vec::with_capacity(len);
            for _ in 0..len {
                let u: f64 = rng.gen();
                let word = if u < OWN_KEYWORD_RATE {
                    banks[c].choose(&mut rng)
                } else if u < OWN_KEYWORD_RATE + CROSS_KEYWORD_RATE {
                    let other = (c + rng.gen_range(1..config.classes)) % config.classes;
                    banks[other].choose(&mut rng)
                } else {
                    filler.choose(&mut rng)
                };
                tokens.push(word.expect("banks are nonempty").clone());
            }
            rows.push((c, tokens.join(" ")));
        }
    }
    rows.shuffle(&mut rng);

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["ID", "Resume_str", "Category"])?;
    for (id, (c, text)) in ids.iter().zip(rows) {
        w.write_record([id.to_string(), text, class_name(c)])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| QtcError::validation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("generator emits ASCII"))
}
