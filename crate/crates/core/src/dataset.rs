//! Binary-classification datasets: loading, writing, scaling, synthesis and
//! stratified partitioning.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Class tag of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub const BOTH: [Label; 2] = [Label::Positive, Label::Negative];

    pub fn opposite(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    /// Index into per-class pairs stored as `(positive, negative)`.
    pub fn slot(self) -> usize {
        match self {
            Label::Positive => 0,
            Label::Negative => 1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        })
    }
}

/// Dense feature matrix (row-major) with one binary label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<Label>,
    feature_names: Option<Vec<String>>,
    class_names: [String; 2],
}

impl Dataset {
    /// Builds a dataset from rows. Requires at least two rows, at least one
    /// column, equal row lengths and finite values.
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        let mut features = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::RaggedRow {
                    row: i,
                    found: row.len(),
                    expected: dim,
                });
            }
            features.extend_from_slice(row);
        }
        Self::from_flat(features, dim, labels)
    }

    pub fn from_flat(features: Vec<f64>, dim: usize, labels: Vec<Label>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("at least one feature column is required".into()));
        }
        if features.len() != dim * labels.len() {
            return Err(Error::Shape(format!(
                "{} values cannot form {} rows of {} features",
                features.len(),
                labels.len(),
                dim
            )));
        }
        if labels.len() < 2 {
            return Err(Error::Shape(format!("need at least 2 samples, got {}", labels.len())));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::BadCell {
                row: pos / dim,
                column: pos % dim,
                value: features[pos].to_string(),
            });
        }
        Ok(Self {
            features,
            dim,
            labels,
            feature_names: None,
            class_names: ["positive".into(), "negative".into()],
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: names.len(),
            });
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    /// Names written for each class by [`write_csv`]; `(positive, negative)`.
    pub fn with_class_names(mut self, positive: impl Into<String>, negative: impl Into<String>) -> Self {
        self.class_names = [positive.into(), negative.into()];
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.dim)
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn class_name(&self, label: Label) -> &str {
        &self.class_names[label.slot()]
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Fails unless both classes have at least one sample.
    pub fn require_both_classes(&self) -> Result<()> {
        let positives = self.count(Label::Positive);
        let negatives = self.len() - positives;
        if positives == 0 || negatives == 0 {
            return Err(Error::SingleClass { positives, negatives });
        }
        Ok(())
    }

    /// New dataset made of the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        let mut out = Dataset::from_flat(features, self.dim, labels)?;
        out.feature_names.clone_from(&self.feature_names);
        out.class_names.clone_from(&self.class_names);
        Ok(out)
    }

    /// Same rows with features replaced; labels and names carried over.
    fn with_features(&self, features: Vec<f64>) -> Dataset {
        Dataset {
            features,
            dim: self.dim,
            labels: self.labels.clone(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// SHA-256 over shape, feature bits and labels, as lowercase hex.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.len() as u64).to_le_bytes());
        hasher.update((self.dim as u64).to_le_bytes());
        for v in &self.features {
            hasher.update(v.to_bits().to_le_bytes());
        }
        for l in &self.labels {
            hasher.update([l.slot() as u8]);
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Drops repeated rows (keeping the first occurrence) and every row whose
    /// feature vector also appears with the opposite label.
    pub fn remove_duplicates(&self) -> Result<(Dataset, DedupReport)> {
        let key = |i: usize| self.row(i).iter().map(|v| v.to_bits()).collect::<Vec<u64>>();
        let mut seen: HashMap<Vec<u64>, (usize, Label, bool)> = HashMap::new();
        let mut order = Vec::new();
        let mut repeated = 0;
        for i in 0..self.len() {
            match seen.get_mut(&key(i)) {
                Some(entry) => {
                    repeated += 1;
                    if entry.1 != self.labels[i] {
                        entry.2 = true;
                    }
                }
                None => {
                    seen.insert(key(i), (i, self.labels[i], false));
                    order.push(i);
                }
            }
        }
        let mut conflicting = 0;
        let kept: Vec<usize> = order
            .into_iter()
            .filter(|&i| {
                let conflict = seen[&key(i)].2;
                conflicting += conflict as usize;
                !conflict
            })
            .collect();
        let out = self.subset(&kept)?;
        Ok((
            out,
            DedupReport {
                repeated_rows: repeated,
                conflicting_points: conflicting,
            },
        ))
    }

    /// First pair of rows with bitwise-identical features, if any.
    pub fn find_duplicate(&self) -> Option<(usize, usize)> {
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::with_capacity(self.len());
        for i in 0..self.len() {
            let k: Vec<u64> = self.row(i).iter().map(|v| (*v + 0.0).to_bits()).collect();
            if let Some(&first) = seen.get(&k) {
                return Some((first, i));
            }
            seen.insert(k, i);
        }
        None
    }
}

/// What [`Dataset::remove_duplicates`] dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DedupReport {
    /// Rows identical in features to an earlier row.
    pub repeated_rows: usize,
    /// Distinct feature vectors dropped because they carry both labels.
    pub conflicting_points: usize,
}

/// Which column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// Integers are indices, anything else a header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
    pub label_column: LabelColumn,
    pub positive_label: String,
}

impl CsvOptions {
    pub fn new(label_column: LabelColumn, positive_label: impl Into<String>) -> Self {
        Self {
            delimiter: b',',
            has_header: true,
            label_column,
            positive_label: positive_label.into(),
        }
    }
}

/// Reads a delimited text file. Errors name the 1-based file line and the
/// 0-based column of any cell that is not a finite number.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, options)
}

pub fn read_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);

    let mut records = rdr.records();
    let mut header: Option<Vec<String>> = None;
    let mut line_offset = 1;
    if options.has_header {
        match records.next() {
            Some(rec) => header = Some(rec?.iter().map(str::to_string).collect()),
            None => return Err(Error::Shape("empty file".into())),
        }
        line_offset = 2;
    }

    let mut label_idx: Option<usize> = match (&options.label_column, &header) {
        (LabelColumn::Index(i), _) => Some(*i),
        (LabelColumn::Name(name), Some(h)) => Some(
            h.iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::MissingLabelColumn(name.clone()))?,
        ),
        (LabelColumn::Name(name), None) => return Err(Error::MissingLabelColumn(name.clone())),
    };

    let mut width = header.as_ref().map(Vec::len);
    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    for (n, rec) in records.enumerate() {
        let rec = rec?;
        let line = n + line_offset;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(Error::RaggedRow {
                row: line,
                found: rec.len(),
                expected,
            });
        }
        let li = *label_idx.get_or_insert(0);
        if li >= rec.len() {
            return Err(Error::MissingLabelColumn(li.to_string()));
        }
        for (c, cell) in rec.iter().enumerate() {
            if c == li {
                raw_labels.push(cell.to_string());
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => features.push(v),
                _ => {
                    return Err(Error::BadCell {
                        row: line,
                        column: c,
                        value: cell.to_string(),
                    })
                }
            }
        }
    }
    let width = width.ok_or_else(|| Error::Shape("no data rows".into()))?;
    let li = label_idx.unwrap_or(0);
    let dim = width - 1;

    let mut observed: Vec<String> = Vec::new();
    for l in &raw_labels {
        if !observed.contains(l) {
            observed.push(l.clone());
        }
    }
    if observed.len() > 2 {
        return Err(Error::LabelCount(observed));
    }
    if !observed.contains(&options.positive_label) {
        return Err(Error::UnknownPositiveLabel {
            wanted: options.positive_label.clone(),
            observed,
        });
    }
    let labels: Vec<Label> = raw_labels
        .iter()
        .map(|l| {
            if *l == options.positive_label {
                Label::Positive
            } else {
                Label::Negative
            }
        })
        .collect();
    let negative_name = observed
        .iter()
        .find(|l| **l != options.positive_label)
        .cloned()
        .unwrap_or_else(|| "negative".into());

    let mut data = Dataset::from_flat(features, dim, labels)?;
    data.require_both_classes()?;
    if let Some(h) = header {
        let names = h
            .into_iter()
            .enumerate()
            .filter(|(c, _)| *c != li)
            .map(|(_, n)| n)
            .collect();
        data = data.with_feature_names(names)?;
    }
    Ok(data.with_class_names(options.positive_label.clone(), negative_name))
}

/// Writes features followed by a trailing `label` column. Values use the
/// shortest decimal form that parses back to the identical `f64`.
pub fn write_csv<W: Write>(data: &Dataset, writer: W, delimiter: u8) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(writer);
    let mut header: Vec<String> = match data.feature_names() {
        Some(names) => names.to_vec(),
        None => (0..data.dim()).map(|j| format!("x{j}")).collect(),
    };
    header.push("label".into());
    w.write_record(&header)?;
    for (row, &label) in data.rows().zip(data.labels()) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(data.class_name(label).to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}

pub fn save_csv(data: &Dataset, path: impl AsRef<Path>, delimiter: u8) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(data, std::io::BufWriter::new(file), delimiter)
}

/// Per-feature z-score parameters (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Normalization {
    /// Constant features (`std == 0`) map to zero.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }

    pub fn apply_dataset(&self, data: &Dataset) -> Result<Dataset> {
        if data.dim() != self.means.len() {
            return Err(Error::Dimension {
                expected: self.means.len(),
                found: data.dim(),
            });
        }
        let features = data.rows().flat_map(|r| self.apply(r)).collect();
        Ok(data.with_features(features))
    }
}

/// Standardizes each column to mean 0 and population standard deviation 1.
/// Columns whose values are all equal become all zeros.
pub fn normalize_zscore(data: &Dataset) -> (Dataset, Normalization) {
    let m = data.len() as f64;
    let d = data.dim();
    let mut means = vec![0.0; d];
    let mut stds = vec![0.0; d];
    for j in 0..d {
        let col = || data.rows().map(move |r| r[j]);
        let (lo, hi) = col().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let mean = col().sum::<f64>() / m;
        means[j] = mean;
        if lo < hi {
            let var = col().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
            stds[j] = var.sqrt();
        }
    }
    let params = Normalization { means, stds };
    let features = data.rows().flat_map(|r| params.apply(r)).collect();
    (data.with_features(features), params)
}

/// Two isotropic Gaussian classes: `n_per_class` negatives around `mu0`
/// followed by `n_per_class` positives around `mu1`, each coordinate with the
/// given variance.
pub fn gen_gaussian_pair(
    mu0: &[f64],
    mu1: &[f64],
    variance: f64,
    n_per_class: usize,
    seed: u64,
) -> Result<Dataset> {
    if mu0.len() != mu1.len() || mu0.is_empty() {
        return Err(Error::InvalidArgument("class means must share a nonzero dimension".into()));
    }
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::InvalidArgument(format!("variance must be >= 0, got {variance}")));
    }
    if n_per_class == 0 {
        return Err(Error::InvalidArgument("n_per_class must be >= 1".into()));
    }
    let sd = variance.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = mu0.len();
    let mut features = Vec::with_capacity(2 * n_per_class * dim);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for (mu, label) in [(mu0, Label::Negative), (mu1, Label::Positive)] {
        for _ in 0..n_per_class {
            for &c in mu {
                let z: f64 = StandardNormal.sample(&mut rng);
                features.push(c + sd * z);
            }
            labels.push(label);
        }
    }
    let names = (1..=dim).map(|j| format!("x{j}")).collect();
    Ok(Dataset::from_flat(features, dim, labels)?
        .with_feature_names(names)?
        .with_class_names("1", "0"))
}

/// Assignment of every sample to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_size(&self, fold: usize) -> usize {
        self.assignments.iter().filter(|&&a| a == fold).count()
    }
}

/// Stratified k-fold split. Each class is shuffled and dealt round-robin,
/// continuing the deal across classes so fold sizes stay balanced.
pub fn stratified_kfold(data: &Dataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be >= 2, got {k}")));
    }
    for class in Label::BOTH {
        let count = data.count(class);
        if count < k {
            return Err(Error::ClassTooSmall { class, count, k });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![usize::MAX; data.len()];
    let mut dealt = 0;
    for class in Label::BOTH {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| data.label(i) == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            assignments[i] = dealt % k;
            dealt += 1;
        }
    }
    Ok(FoldPlan { k, seed, assignments })
}
