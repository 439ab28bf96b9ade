//! Datasets, deterministic splits, and comparable-pair enumeration.
//!
//! Examples carry a real label, optional query id, and either a discrete group
//! or a continuous protected attribute. Pairwise metrics and training both
//! operate on a `PairSet`: the list of ordered example pairs whose labels are
//! comparable, partitioned into cells by the protected information. For
//! ranking tasks pairs never cross queries.

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Ranking,
    Regression,
}

/// What the dataset protects: a small set of discrete groups or a real-valued
/// attribute compared by order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protection {
    Discrete { k: usize },
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitTag {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone)]
pub struct Example {
    pub features: Vec<f64>,
    pub label: f64,
    pub query_id: Option<i64>,
    pub group: Option<u16>,
    pub attribute: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub dim: usize,
    pub task: Task,
    pub protection: Protection,
    /// Present after `split`; one tag per example.
    pub split: Option<Vec<SplitTag>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn groups(&self) -> Option<usize> {
        match self.protection {
            Protection::Discrete { k } => Some(k),
            Protection::Continuous => None,
        }
    }

    /// Indices of examples carrying `tag`, in dataset order.
    pub fn split_indices(&self, tag: SplitTag) -> Result<Vec<u32>> {
        let tags = self
            .split
            .as_ref()
            .ok_or_else(|| Error::Data("dataset has not been split".into()))?;
        Ok(tags
            .iter()
            .enumerate()
            .filter(|(_, t)| **t == tag)
            .map(|(i, _)| i as u32)
            .collect())
    }
}

/// Column bindings for CSV ingestion. Any bound column found in the header is
/// consumed by its role; every remaining column is a feature, in header order.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub label: String,
    pub query: Option<String>,
    pub group: Option<String>,
    pub attribute: Option<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            label: "label".into(),
            query: Some("query_id".into()),
            group: Some("group".into()),
            attribute: Some("attribute".into()),
        }
    }
}

/// Loads a CSV file with a header row against a declared schema.
pub fn load_csv(
    path: &Path,
    schema: &CsvSchema,
    task: Task,
    protection: Protection,
) -> Result<Dataset> {
    load_csv_impl(path, schema, task, protection, None).map(|(d, _)| d)
}

/// As `load_csv`, additionally extracting `score_column` as a score vector.
/// The score column is consumed (it never becomes a feature).
pub fn load_csv_with_scores(
    path: &Path,
    schema: &CsvSchema,
    task: Task,
    protection: Protection,
    score_column: &str,
) -> Result<(Dataset, Vec<f64>)> {
    let (d, s) = load_csv_impl(path, schema, task, protection, Some(score_column))?;
    Ok((d, s.expect("score column requested")))
}

fn load_csv_impl(
    path: &Path,
    schema: &CsvSchema,
    task: Task,
    protection: Protection,
    score_column: Option<&str>,
) -> Result<(Dataset, Option<Vec<f64>>)> {
    let data_err = |line: u64, msg: String| Error::Csv {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e.to_string()),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| data_err(1, e.to_string()))?
        .clone();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let label_col = find(&schema.label).ok_or_else(|| {
        Error::Data(format!("{}: missing label column {:?}", path.display(), schema.label))
    })?;
    let query_col = schema.query.as_deref().and_then(find);
    let group_col = schema.group.as_deref().and_then(find);
    let attr_col = schema.attribute.as_deref().and_then(find);
    let score_col = match score_column {
        Some(name) => Some(find(name).ok_or_else(|| {
            Error::Data(format!("{}: missing score column {:?}", path.display(), name))
        })?),
        None => None,
    };

    if task == Task::Ranking && query_col.is_none() {
        return Err(Error::Data(format!(
            "{}: ranking data needs a query column {:?}",
            path.display(),
            schema.query.as_deref().unwrap_or("query_id")
        )));
    }
    let k = match protection {
        Protection::Discrete { k } => {
            if group_col.is_none() {
                return Err(Error::Data(format!(
                    "{}: discrete protection needs a group column {:?}",
                    path.display(),
                    schema.group.as_deref().unwrap_or("group")
                )));
            }
            k
        }
        Protection::Continuous => {
            if attr_col.is_none() {
                return Err(Error::Data(format!(
                    "{}: continuous protection needs an attribute column {:?}",
                    path.display(),
                    schema.attribute.as_deref().unwrap_or("attribute")
                )));
            }
            0
        }
    };

    let special: Vec<usize> = [Some(label_col), query_col, group_col, attr_col, score_col]
        .into_iter()
        .flatten()
        .collect();
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|c| !special.contains(c))
        .collect();

    let mut examples = Vec::new();
    let mut scores = score_col.map(|_| Vec::new());
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            data_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let num = |col: usize, what: &str| -> Result<f64> {
            let raw = &record[col];
            let v: f64 = raw
                .trim()
                .parse()
                .map_err(|_| data_err(line, format!("{} column: non-numeric value {:?}", what, raw)))?;
            if !v.is_finite() {
                return Err(data_err(line, format!("{} column: non-finite value {:?}", what, raw)));
            }
            Ok(v)
        };
        let label = num(label_col, "label")?;
        let query_id = match query_col {
            Some(c) => Some(record[c].trim().parse::<i64>().map_err(|_| {
                data_err(line, format!("query column: bad id {:?}", &record[c]))
            })?),
            None => None,
        };
        let group = match group_col {
            Some(c) => {
                let g: u64 = record[c].trim().parse().map_err(|_| {
                    data_err(line, format!("group column: bad group {:?}", &record[c]))
                })?;
                if protection != Protection::Continuous && g as usize >= k {
                    return Err(data_err(
                        line,
                        format!("group {} out of range for {} groups", g, k),
                    ));
                }
                Some(g as u16)
            }
            None => None,
        };
        let attribute = match attr_col {
            Some(c) => Some(num(c, "attribute")?),
            None => None,
        };
        if let (Some(col), Some(out)) = (score_col, scores.as_mut()) {
            out.push(num(col, "score")?);
        }
        let mut features = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            features.push(num(c, "feature")?);
        }
        examples.push(Example {
            features,
            label,
            query_id,
            group,
            attribute,
        });
    }
    if examples.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    Ok((
        Dataset {
            examples,
            dim: feature_cols.len(),
            task,
            protection,
            split: None,
        },
        scores,
    ))
}

/// Writes a dataset in the schema `load_csv` reads back with default bindings.
/// Floats use shortest round-trip formatting so regeneration is byte-stable.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let has_query = dataset.examples.iter().any(|e| e.query_id.is_some());
    let discrete = matches!(dataset.protection, Protection::Discrete { .. });
    let mut out = String::new();
    let mut header: Vec<String> = Vec::new();
    if has_query {
        header.push("query_id".into());
    }
    header.push("label".into());
    if discrete {
        header.push("group".into());
    } else {
        header.push("attribute".into());
    }
    for d in 0..dataset.dim {
        header.push(format!("feature_{}", d));
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for e in &dataset.examples {
        let mut row: Vec<String> = Vec::new();
        if has_query {
            row.push(e.query_id.unwrap_or(0).to_string());
        }
        row.push(format!("{}", e.label));
        if discrete {
            row.push(e.group.unwrap_or(0).to_string());
        } else {
            row.push(format!("{}", e.attribute.unwrap_or(0.0)));
        }
        for f in &e.features {
            row.push(format!("{}", f));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(io_err)
}

/// Tags every example train/validation/test in 1/2 : 1/4 : 1/4 proportions.
///
/// The unit of assignment is the query for ranking data and the example for
/// regression data. Unit ids are sorted before the seeded shuffle, so the
/// assignment depends only on the set of ids and the seed, not on row order.
pub fn split(mut dataset: Dataset, seed: u64) -> Result<Dataset> {
    let n = dataset.len();
    let tags = match dataset.task {
        Task::Ranking => {
            let mut ids: Vec<i64> = dataset
                .examples
                .iter()
                .map(|e| {
                    e.query_id
                        .ok_or_else(|| Error::Data("ranking data lacks query ids".into()))
                })
                .collect::<Result<Vec<_>>>()?;
            ids.sort_unstable();
            ids.dedup();
            let assignment = assign_units(&ids, seed)?;
            let by_id: BTreeMap<i64, SplitTag> =
                ids.into_iter().zip(assignment).collect();
            dataset
                .examples
                .iter()
                .map(|e| by_id[&e.query_id.unwrap()])
                .collect()
        }
        Task::Regression => {
            let ids: Vec<i64> = (0..n as i64).collect();
            let assignment = assign_units(&ids, seed)?;
            let by_id: BTreeMap<i64, SplitTag> = ids.into_iter().zip(assignment).collect();
            (0..n as i64).map(|i| by_id[&i]).collect()
        }
    };
    dataset.split = Some(tags);
    Ok(dataset)
}

fn assign_units(ids: &[i64], seed: u64) -> Result<Vec<SplitTag>> {
    let n = ids.len();
    if n < 4 {
        return Err(Error::Data(format!(
            "need at least 4 units to split, got {}",
            n
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let n_train = n.div_ceil(2);
    let n_val = (n - n_train).div_ceil(2);
    let mut tags = vec![SplitTag::Test; n];
    for (rank, &unit) in order.iter().enumerate() {
        tags[unit] = if rank < n_train {
            SplitTag::Train
        } else if rank < n_train + n_val {
            SplitTag::Validation
        } else {
            SplitTag::Test
        };
    }
    Ok(tags)
}

/// How a pair set was built: from label comparisons or label-free couples for
/// statistical parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMode {
    Supervised,
    Parity,
}

/// One ordered pair of example indices. For supervised pairs `better` has the
/// larger label; for parity pairs `better` holds the lower-numbered group's
/// member and the couple is stored once.
#[derive(Debug, Clone, Copy)]
pub struct Pair {
    pub better: u32,
    pub worse: u32,
    pub cell: u32,
}

/// Cell ids: discrete supervised pairs use `better_group * k + worse_group`;
/// continuous pairs use 0 when the better example has the greater attribute
/// and 1 when it has the lesser; parity pairs use `lo * k + hi` with
/// `lo < hi`. Attribute-tied pairs land in a third bucket: they belong to
/// neither fairness cell but still count toward overall accuracy.
pub const CELL_ATTR_GREATER: u32 = 0;
pub const CELL_ATTR_LESS: u32 = 1;
pub const CELL_ATTR_TIE: u32 = 2;

#[derive(Debug, Clone)]
pub struct PairSet {
    pub mode: PairMode,
    /// Number of discrete groups; 0 for continuous protection.
    pub k: usize,
    pub n_cells: usize,
    pub pairs: Vec<Pair>,
    /// Contiguous pair ranges per query id, ascending; `None` when the data
    /// has no query structure.
    pub queries: Option<Vec<(i64, Range<usize>)>>,
}

impl PairSet {
    pub fn cell_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_cells];
        for p in &self.pairs {
            counts[p.cell as usize] += 1;
        }
        counts
    }
}

fn pair_cell(dataset: &Dataset, better: u32, worse: u32) -> Option<u32> {
    match dataset.protection {
        Protection::Discrete { k } => {
            let gb = dataset.examples[better as usize].group.unwrap() as usize;
            let gw = dataset.examples[worse as usize].group.unwrap() as usize;
            Some((gb * k + gw) as u32)
        }
        Protection::Continuous => {
            let zb = dataset.examples[better as usize].attribute.unwrap();
            let zw = dataset.examples[worse as usize].attribute.unwrap();
            if zb > zw {
                Some(CELL_ATTR_GREATER)
            } else if zb < zw {
                Some(CELL_ATTR_LESS)
            } else {
                Some(CELL_ATTR_TIE)
            }
        }
    }
}

fn supervised_shape(dataset: &Dataset) -> (usize, usize) {
    match dataset.protection {
        Protection::Discrete { k } => (k, k * k),
        Protection::Continuous => (0, 3),
    }
}

/// Enumerates within-query pairs with strictly ordered labels for one split.
///
/// Label ties yield no pair; for continuous protection, attribute ties are
/// dropped as incomparable. Errors when the split contains no pairs at all.
pub fn enumerate_ranking_pairs(dataset: &Dataset, tag: SplitTag) -> Result<PairSet> {
    if dataset.task != Task::Ranking {
        return Err(Error::Data("ranking pair enumeration on non-ranking data".into()));
    }
    let indices = dataset.split_indices(tag)?;
    let mut by_query: BTreeMap<i64, Vec<u32>> = BTreeMap::new();
    for &i in &indices {
        by_query
            .entry(dataset.examples[i as usize].query_id.unwrap())
            .or_default()
            .push(i);
    }
    let (k, n_cells) = supervised_shape(dataset);
    let mut pairs = Vec::new();
    let mut queries = Vec::new();
    for (qid, members) in &by_query {
        let start = pairs.len();
        for &b in members {
            for &w in members {
                if dataset.examples[b as usize].label > dataset.examples[w as usize].label {
                    if let Some(cell) = pair_cell(dataset, b, w) {
                        pairs.push(Pair { better: b, worse: w, cell });
                    }
                }
            }
        }
        queries.push((*qid, start..pairs.len()));
    }
    if pairs.is_empty() {
        return Err(Error::Data("split contains no comparable pairs".into()));
    }
    Ok(PairSet {
        mode: PairMode::Supervised,
        k,
        n_cells,
        pairs,
        queries: Some(queries),
    })
}

/// Enumerates all strictly label-ordered example pairs in one split.
///
/// With `max_pairs`, a seeded uniform subsample of exactly that many pairs is
/// taken without replacement.
pub fn enumerate_regression_pairs(
    dataset: &Dataset,
    tag: SplitTag,
    max_pairs: Option<usize>,
    seed: u64,
) -> Result<PairSet> {
    let indices = dataset.split_indices(tag)?;
    let (k, n_cells) = supervised_shape(dataset);
    let mut pairs = Vec::new();
    for (a, &i) in indices.iter().enumerate() {
        for &j in indices.iter().skip(a + 1) {
            let (yi, yj) = (
                dataset.examples[i as usize].label,
                dataset.examples[j as usize].label,
            );
            let (b, w) = if yi > yj {
                (i, j)
            } else if yj > yi {
                (j, i)
            } else {
                continue;
            };
            if let Some(cell) = pair_cell(dataset, b, w) {
                pairs.push(Pair { better: b, worse: w, cell });
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::Data("split contains no comparable pairs".into()));
    }
    if let Some(m) = max_pairs {
        if pairs.len() > m {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut keep = rand::seq::index::sample(&mut rng, pairs.len(), m).into_vec();
            keep.sort_unstable();
            pairs = keep.into_iter().map(|i| pairs[i]).collect();
        }
    }
    Ok(PairSet {
        mode: PairMode::Supervised,
        k,
        n_cells,
        pairs,
        queries: None,
    })
}

/// Enumerates label-free cross-group couples for statistical parity, one pair
/// per unordered couple. For ranking data couples stay within a query.
pub fn enumerate_parity_pairs(dataset: &Dataset, tag: SplitTag) -> Result<PairSet> {
    let k = match dataset.protection {
        Protection::Discrete { k } => k,
        Protection::Continuous => {
            return Err(Error::Data(
                "statistical parity needs discrete groups".into(),
            ))
        }
    };
    let indices = dataset.split_indices(tag)?;
    let mut pairs = Vec::new();
    let mut queries = Vec::new();
    let emit = |members: &[u32], pairs: &mut Vec<Pair>| {
        for (a, &i) in members.iter().enumerate() {
            for &j in members.iter().skip(a + 1) {
                let gi = dataset.examples[i as usize].group.unwrap();
                let gj = dataset.examples[j as usize].group.unwrap();
                if gi == gj {
                    continue;
                }
                let (lo_ex, hi_ex, lo, hi) = if gi < gj {
                    (i, j, gi, gj)
                } else {
                    (j, i, gj, gi)
                };
                pairs.push(Pair {
                    better: lo_ex,
                    worse: hi_ex,
                    cell: (lo as usize * k + hi as usize) as u32,
                });
            }
        }
    };
    match dataset.task {
        Task::Ranking => {
            let mut by_query: BTreeMap<i64, Vec<u32>> = BTreeMap::new();
            for &i in &indices {
                by_query
                    .entry(dataset.examples[i as usize].query_id.unwrap())
                    .or_default()
                    .push(i);
            }
            for (qid, members) in &by_query {
                let start = pairs.len();
                emit(members, &mut pairs);
                queries.push((*qid, start..pairs.len()));
            }
        }
        Task::Regression => emit(&indices, &mut pairs),
    }
    if pairs.is_empty() {
        return Err(Error::Data("split contains no cross-group couples".into()));
    }
    Ok(PairSet {
        mode: PairMode::Parity,
        k,
        n_cells: k * k,
        pairs,
        queries: (dataset.task == Task::Ranking).then_some(queries),
    })
}
