//! Text ingestion and TF-IDF feature extraction.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QtcError, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub label: String,
}

/// Column names used when reading a corpus CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusColumns {
    pub id: String,
    pub text: String,
    pub label: String,
}

impl Default for CorpusColumns {
    fn default() -> Self {
        Self {
            id: "ID".into(),
            text: "Resume_str".into(),
            label: "Category".into(),
        }
    }
}

/// Reads a headered UTF-8 CSV into documents, preserving file order.
pub fn load_corpus(path: impl AsRef<Path>, columns: &CorpusColumns) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| QtcError::io(path, e))?;
    read_corpus(file, columns, path)
}

pub fn read_corpus<R: std::io::Read>(
    reader: R,
    columns: &CorpusColumns,
    source: &Path,
) -> Result<Vec<Document>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(QtcError::validation(format!(
            "{}: empty file",
            source.display()
        )));
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| QtcError::Schema(format!("missing column {name:?}")))
    };
    let (id_col, text_col, label_col) = (
        find(&columns.id)?,
        find(&columns.text)?,
        find(&columns.label)?,
    );

    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in rdr.records().enumerate() {
        // header is row 1
        let row = i + 2;
        let record = record.map_err(|e| QtcError::Parse {
            path: source.to_path_buf(),
            row,
            message: e.to_string(),
        })?;
        let field = |c: usize| record.get(c).unwrap_or("").to_string();
        let doc = Document {
            id: field(id_col).trim().to_string(),
            text: field(text_col),
            label: field(label_col).trim().to_string(),
        };
        if doc.id.is_empty() {
            return Err(QtcError::validation(format!("row {row}: empty id")));
        }
        if doc.text.trim().is_empty() {
            return Err(QtcError::validation(format!(
                "row {row}: empty text for id {:?}",
                doc.id
            )));
        }
        if doc.label.is_empty() {
            return Err(QtcError::validation(format!(
                "row {row}: empty label for id {:?}",
                doc.id
            )));
        }
        if !seen.insert(doc.id.clone()) {
            return Err(QtcError::validation(format!(
                "row {row}: duplicate id {:?}",
                doc.id
            )));
        }
        docs.push(doc);
    }
    if docs.is_empty() {
        return Err(QtcError::validation(format!(
            "{}: no data rows",
            source.display()
        )));
    }
    Ok(docs)
}

#[rustfmt::skip]
pub const STOP_WORDS: &[&str] = &[
    "a", "about", "above", "across", "after", "afterwards", "again", "against", "all",
    "almost", "alone", "along", "already", "also", "although", "always", "am", "among",
    "amongst", "amoungst", "amount", "an", "and", "another", "any", "anyhow", "anyone",
    "anything", "anyway", "anywhere", "are", "around", "as", "at", "back", "be", "became",
    "because", "become", "becomes", "becoming", "been", "before", "beforehand", "behind",
    "being", "below", "beside", "besides", "between", "beyond", "bill", "both", "bottom",
    "but", "by", "call", "can", "cannot", "cant", "co", "con", "could", "couldnt", "cry", "de",
    "describe", "detail", "do", "done", "down", "due", "during", "each", "eg", "eight",
    "either", "eleven", "else", "elsewhere", "empty", "enough", "etc", "even", "ever", "every",
    "everyone", "everything", "everywhere", "except", "few", "fifteen", "fifty", "fill",
    "find", "fire", "first", "five", "for", "former", "formerly", "forty", "found", "four",
    "from", "front", "full", "further", "get", "give", "go", "had", "has", "hasnt", "have",
    "he", "hence", "her", "here", "hereafter", "hereby", "herein", "hereupon", "hers",
    "herself", "him", "himself", "his", "how", "however", "hundred", "i", "ie", "if", "in",
    "inc", "indeed", "interest", "into", "is", "it", "its", "itself", "keep", "last", "latter",
    "latterly", "least", "less", "ltd", "made", "many", "may", "me", "meanwhile", "might",
    "mill", "mine", "more", "moreover", "most", "mostly", "move", "much", "must", "my",
    "myself", "name", "namely", "neither", "never", "nevertheless", "next", "nine", "no",
    "nobody", "none", "noone", "nor", "not", "nothing", "now", "nowhere", "of", "off", "often",
    "on", "once", "one", "only", "onto", "or", "other", "others", "otherwise", "our", "ours",
    "ourselves", "out", "over", "own", "part", "per", "perhaps", "please", "put", "rather",
    "re", "same", "see", "seem", "seemed", "seeming", "seems", "serious", "several", "she",
    "should", "show", "side", "since", "sincere", "six", "sixty", "so", "some", "somehow",
    "someone", "something", "sometime", "sometimes", "somewhere", "still", "such", "system",
    "take", "ten", "than", "that", "the", "their", "them", "themselves", "then", "thence",
    "there", "thereafter", "thereby", "therefore", "therein", "thereupon", "these", "they",
    "thick", "thin", "third", "this", "those", "though", "three", "through", "throughout",
    "thru", "thus", "to", "together", "too", "top", "toward", "towards", "twelve", "twenty",
    "two", "un", "under", "until", "up", "upon", "us", "very", "via", "was", "we", "well",
    "were", "what", "whatever", "when", "whence", "whenever", "where", "whereafter", "whereas",
    "whereby", "wherein", "whereupon", "wherever", "whether", "which", "while", "whither",
    "who", "whoever", "whole", "whom", "whose", "why", "will", "with", "within", "without",
    "would", "yet", "you", "your", "yours", "yourself", "yourselves",
];

fn is_stop_word(token: &str) -> bool {
    STOP_WORDS.binary_search(&token).is_ok()
}

/// Lowercases, splits on non-alphanumeric runs and drops short, numeric and
/// stop-word tokens.
pub fn preprocess(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .filter(|t| !t.chars().all(|c| c.is_numeric()))
        .filter(|t| !is_stop_word(t))
        .map(str::to_string)
        .collect()
}

/// Fitted vocabulary and smooth inverse document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    /// `(term, document_frequency)`, sorted by term.
    pub vocabulary: Vec<(String, usize)>,
    pub idf: Vec<f64>,
    pub max_features: usize,
    pub corpus_size: usize,
}

impl TfidfModel {
    pub fn terms(&self) -> impl Iterator<Item = &str> + '_ {
        self.vocabulary.iter().map(|(t, _)| t.as_str())
    }

    pub fn idf_of(&self, term: &str) -> Option<f64> {
        self.vocabulary
            .binary_search_by(|(t, _)| t.as_str().cmp(term))
            .ok()
            .map(|i| self.idf[i])
    }
}

pub fn smooth_idf(corpus_size: usize, document_frequency: usize) -> f64 {
    ((1.0 + corpus_size as f64) / (1.0 + document_frequency as f64)).ln() + 1.0
}

/// Keeps the `max_features` terms with the highest total count across the
/// corpus (ties go to the lexicographically smaller term).
pub fn fit_tfidf(docs: &[Document], max_features: usize) -> Result<TfidfModel> {
    if docs.is_empty() {
        return Err(QtcError::validation("cannot fit TF-IDF on an empty corpus"));
    }
    if max_features == 0 {
        return Err(QtcError::validation("max_features must be at least 1"));
    }
    let mut total: HashMap<String, usize> = HashMap::new();
    let mut df: HashMap<String, usize> = HashMap::new();
    for doc in docs {
        let tokens = preprocess(&doc.text);
        let mut distinct = HashSet::new();
        for t in tokens {
            *total.entry(t.clone()).or_default() += 1;
            distinct.insert(t);
        }
        for t in distinct {
            *df.entry(t).or_default() += 1;
        }
    }
    if total.is_empty() {
        return Err(QtcError::validation(
            "vocabulary is empty after preprocessing",
        ));
    }
    let mut ranked: Vec<(String, usize)> = total.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_features);
    let mut vocabulary: Vec<(String, usize)> = ranked
        .into_iter()
        .map(|(t, _)| {
            let d = df[&t];
            (t, d)
        })
        .collect();
    vocabulary.sort_by(|a, b| a.0.cmp(&b.0));
    let idf = vocabulary
        .iter()
        .map(|(_, d)| smooth_idf(docs.len(), *d))
        .collect();
    Ok(TfidfModel {
        vocabulary,
        idf,
        max_features,
        corpus_size: docs.len(),
    })
}

/// Raw counts times idf, then L2-normalized per row. Out-of-vocabulary
/// terms are ignored; documents with no known term give an all-zero row.
pub fn transform_tfidf(model: &TfidfModel, docs: &[Document]) -> Result<FeatureMatrix> {
    let index: HashMap<&str, usize> = model
        .vocabulary
        .iter()
        .enumerate()
        .map(|(i, (t, _))| (t.as_str(), i))
        .collect();
    let width = model.vocabulary.len();
    let mut values = vec![0.0; docs.len() * width];
    for (d, doc) in docs.iter().enumerate() {
        let row = &mut values[d * width..(d + 1) * width];
        for t in preprocess(&doc.text) {
            if let Some(&i) = index.get(t.as_str()) {
                row[i] += 1.0;
            }
        }
        for (v, idf) in row.iter_mut().zip(&model.idf) {
            *v *= idf;
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    FeatureMatrix::new(
        docs.iter().map(|d| d.id.clone()).collect(),
        model.vocabulary.iter().map(|(t, _)| t.clone()).collect(),
        values,
    )
}

/// Sorted class names; a label's index is its position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEncoding {
    pub classes: Vec<String>,
}

impl LabelEncoding {
    pub fn new(mut classes: Vec<String>) -> Self {
        classes.sort();
        classes.dedup();
        Self { classes }
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.classes
            .binary_search_by(|c| c.as_str().cmp(label))
            .ok()
    }

    pub fn label_of(&self, index: usize) -> Option<&str> {
        self.classes.get(index).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

pub fn encode_labels(docs: &[Document]) -> (LabelEncoding, Vec<usize>) {
    let encoding = LabelEncoding::new(docs.iter().map(|d| d.label.clone()).collect());
    let labels = docs
        .iter()
        .map(|d| {
            encoding
                .index_of(&d.label)
                .expect("label present in encoding")
        })
        .collect();
    (encoding, labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub test_fraction: f64,
    pub seed: u64,
}

/// Per class, `round(test_fraction * class_size)` members (at most
/// `class_size - 1`) go to the test side. Both sides keep input order.
pub fn stratified_split(
    labels: &[usize],
    ids: &[String],
    test_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit> {
    if labels.len() != ids.len() {
        return Err(QtcError::validation(format!(
            "{} labels for {} ids",
            labels.len(),
            ids.len()
        )));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(QtcError::validation(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; ids.len()];
    for (class, mut members) in by_class {
        if members.len() < 2 {
            return Err(QtcError::validation(format!(
                "class {class} has {} sample(s); stratified split needs at least 2",
                members.len()
            )));
        }
        let n_test =
            ((test_fraction * members.len() as f64).round() as usize).min(members.len() - 1);
        members.shuffle(&mut rng);
        for &i in &members[..n_test] {
            is_test[i] = true;
        }
    }
    let (test, train): (Vec<_>, Vec<_>) = ids.iter().zip(&is_test).partition(|(_, &t)| t);
    Ok(DatasetSplit {
        train_ids: train.into_iter().map(|(id, _)| id.clone()).collect(),
        test_ids: test.into_iter().map(|(id, _)| id.clone()).collect(),
        test_fraction,
        seed,
    })
}
