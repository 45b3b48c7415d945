//! Project data model, corpus parsing and the seeded synthetic corpus generator.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ComponentRef {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub name: String,
    pub code: String,
}

/// One mined project: metadata, statistics, tags, hardware components,
/// libraries and sketch sources.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectRecord {
    pub id: String,
    pub title: String,
    pub description: String,
    pub url: String,
    pub views: u64,
    pub respects: u64,
    pub comments: u64,
    pub tags: Vec<String>,
    pub components: Vec<ComponentRef>,
    pub libraries: Vec<String>,
    pub source_files: Vec<SourceFile>,
}

impl ProjectRecord {
    pub fn new(id: impl Into<String>, title: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            description: String::new(),
            url: String::new(),
            views: 0,
            respects: 0,
            comments: 0,
            tags: Vec::new(),
            components: Vec::new(),
            libraries: Vec::new(),
            source_files: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub schema_version: String,
    pub projects: Vec<ProjectRecord>,
}

impl Corpus {
    /// Builds a corpus after checking every record invariant.
    pub fn new(projects: Vec<ProjectRecord>) -> Result<Self> {
        validate(&projects)?;
        Ok(Self {
            schema_version: SCHEMA_VERSION.to_string(),
            projects,
        })
    }

    pub fn len(&self) -> usize {
        self.projects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projects.is_empty()
    }

    /// Serializes to the corpus JSON array format.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.projects).expect("corpus records are always serializable")
    }

    /// Component id → display name, over all projects.
    pub fn component_names(&self) -> BTreeMap<String, String> {
        self.projects
            .iter()
            .flat_map(|p| p.components.iter())
            .map(|c| (c.id.clone(), c.name.clone()))
            .collect()
    }
}

fn validate(projects: &[ProjectRecord]) -> Result<()> {
    let mut ids = HashSet::new();
    let mut names: HashMap<&str, &str> = HashMap::new();
    for (index, p) in projects.iter().enumerate() {
        if p.id.is_empty() {
            return Err(Error::InvalidField {
                index,
                field: "id",
                message: "must be non-empty".into(),
            });
        }
        if !ids.insert(p.id.as_str()) {
            return Err(Error::DuplicateId(p.id.clone()));
        }
        check_unique(index, "tags", p.tags.iter().map(String::as_str))?;
        check_unique(index, "libraries", p.libraries.iter().map(String::as_str))?;
        check_unique(index, "components", p.components.iter().map(|c| c.id.as_str()))?;
        for c in &p.components {
            if c.id.is_empty() {
                return Err(Error::InvalidField {
                    index,
                    field: "components",
                    message: "component id must be non-empty".into(),
                });
            }
            match names.get(c.id.as_str()) {
                Some(&prev) if prev != c.name => {
                    return Err(Error::ConflictingComponent {
                        id: c.id.clone(),
                        first: prev.to_string(),
                        second: c.name.clone(),
                    })
                }
                Some(_) => {}
                None => {
                    names.insert(&c.id, &c.name);
                }
            }
        }
    }
    Ok(())
}

fn check_unique<'a>(
    index: usize,
    field: &'static str,
    values: impl Iterator<Item = &'a str>,
) -> Result<()> {
    let mut seen = HashSet::new();
    for v in values {
        if !seen.insert(v) {
            return Err(Error::InvalidField {
                index,
                field,
                message: format!("duplicate entry `{v}`"),
            });
        }
    }
    Ok(())
}

/// Parses a corpus JSON array. Unknown fields are ignored; repeated tags,
/// libraries and component ids within one record are collapsed to their
/// first occurrence.
pub fn parse_corpus(input: &[u8]) -> Result<Corpus> {
    let text = std::str::from_utf8(input)
        .map_err(|e| Error::InvalidArgument(format!("corpus is not UTF-8: {e}")))?;
    let values: Vec<Value> = serde_json::from_str(text).map_err(|e| Error::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let projects = values
        .into_iter()
        .enumerate()
        .map(|(index, value)| record_from_value(index, value))
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(projects)
}

fn record_from_value(index: usize, value: Value) -> Result<ProjectRecord> {
    let Value::Object(mut obj) = value else {
        return Err(Error::InvalidField {
            index,
            field: "record",
            message: "expected a JSON object".into(),
        });
    };
    let id: String = take_field(&mut obj, index, "id")?.ok_or(Error::MissingField { index, field: "id" })?;
    let title: String =
        take_field(&mut obj, index, "title")?.ok_or(Error::MissingField { index, field: "title" })?;

    let mut record = ProjectRecord::new(id, title);
    record.description = take_field(&mut obj, index, "description")?.unwrap_or_default();
    record.url = take_field(&mut obj, index, "url")?.unwrap_or_default();
    record.views = take_field(&mut obj, index, "views")?.unwrap_or_default();
    record.respects = take_field(&mut obj, index, "respects")?.unwrap_or_default();
    record.comments = take_field(&mut obj, index, "comments")?.unwrap_or_default();
    record.tags = dedup_by_key(take_field(&mut obj, index, "tags")?.unwrap_or_default(), |t: &String| t.clone());
    record.libraries =
        dedup_by_key(take_field(&mut obj, index, "libraries")?.unwrap_or_default(), |l: &String| l.clone());
    record.source_files = take_field(&mut obj, index, "source_files")?.unwrap_or_default();

    let components: Vec<ComponentRef> = take_field(&mut obj, index, "components")?.unwrap_or_default();
    let mut by_id: HashMap<String, String> = HashMap::new();
    for c in &components {
        if let Some(prev) = by_id.insert(c.id.clone(), c.name.clone()) {
            if prev != c.name {
                return Err(Error::ConflictingComponent {
                    id: c.id.clone(),
                    first: prev,
                    second: c.name.clone(),
                });
            }
        }
    }
    record.components = dedup_by_key(components, |c| c.id.clone());
    Ok(record)
}

fn take_field<T: DeserializeOwned>(
    obj: &mut Map<String, Value>,
    index: usize,
    field: &'static str,
) -> Result<Option<T>> {
    match obj.remove(field) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v).map(Some).map_err(|e| Error::InvalidField {
            index,
            field,
            message: e.to_string(),
        }),
    }
}

fn dedup_by_key<T, K: Eq + std::hash::Hash>(items: Vec<T>, key: impl Fn(&T) -> K) -> Vec<T> {
    let mut seen = HashSet::new();
    items.into_iter().filter(|item| seen.insert(key(item))).collect()
}

/// Parameters of the planted-block synthetic corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_projects: usize,
    pub n_tags: usize,
    pub n_components: usize,
    pub n_libraries: usize,
    pub block_count: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_projects: 200,
            n_tags: 24,
            n_components: 40,
            n_libraries: 24,
            block_count: 4,
            noise: 0.05,
            seed: 7,
        }
    }
}

/// Index of the block that owns item `item` of a pool of `len` items.
pub fn block_of(item: usize, len: usize, block_count: usize) -> usize {
    item * block_count / len
}

/// Generates a corpus with `block_count` planted communities. Project `i`
/// belongs to block `i % block_count` and draws its tags, components and
/// libraries from that block's slice of each pool; each draw crosses to
/// another block with probability `noise`.
pub fn generate_synthetic_corpus(params: &SynthParams) -> Result<Corpus> {
    let SynthParams {
        n_projects,
        n_tags,
        n_components,
        n_libraries,
        block_count,
        noise,
        seed,
    } = *params;
    if [n_projects, n_tags, n_components, n_libraries, block_count].contains(&0) {
        return Err(Error::InvalidArgument("all synthetic corpus counts must be >= 1".into()));
    }
    if block_count > n_tags.min(n_components).min(n_libraries) {
        return Err(Error::InvalidArgument(format!(
            "block_count {block_count} exceeds the smallest item pool"
        )));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::InvalidArgument(format!("noise {noise} is not a probability")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pw = digits(n_projects);
    let tw = digits(n_tags);
    let cw = digits(n_components);
    let lw = digits(n_libraries);

    let mut projects = Vec::with_capacity(n_projects);
    for i in 0..n_projects {
        let block = i % block_count;
        let tags = draw(&mut rng, n_tags, block, block_count, noise, 1, 3);
        let comps = draw(&mut rng, n_components, block, block_count, noise, 2, 6);
        let libs = draw(&mut rng, n_libraries, block, block_count, noise, 1, 4);

        let mut p = ProjectRecord::new(format!("p{i:0pw$}"), format!("Synthetic project {i}"));
        p.description = format!("Planted block {block}");
        p.url = format!("https://example.org/projects/p{i:0pw$}");
        p.views = rng.random_range(0..10_000);
        p.respects = rng.random_range(0..500);
        p.comments = rng.random_range(0..50);
        p.tags = tags.iter().map(|t| format!("tag-{t:0tw$}")).collect();
        p.components = comps
            .iter()
            .map(|c| ComponentRef {
                id: format!("c{c:0cw$}"),
                name: format!("Component {c}"),
            })
            .collect();
        p.libraries = libs.iter().map(|l| format!("lib-{l:0lw$}")).collect();
        let mut code: String = p.libraries.iter().map(|l| format!("#include <{l}.h>\n")).collect();
        code.push_str("\nvoid setup() {}\n\nvoid loop() {}\n");
        p.source_files.push(SourceFile {
            name: "sketch.ino".into(),
            code,
        });
        projects.push(p);
    }
    Corpus::new(projects)
}

fn digits(n: usize) -> usize {
    n.saturating_sub(1).to_string().len()
}

fn draw(
    rng: &mut ChaCha8Rng,
    pool: usize,
    block: usize,
    block_count: usize,
    noise: f64,
    lo: usize,
    hi: usize,
) -> Vec<usize> {
    let own: Vec<usize> = (0..pool).filter(|&j| block_of(j, pool, block_count) == block).collect();
    let other: Vec<usize> = (0..pool).filter(|&j| block_of(j, pool, block_count) != block).collect();
    let reachable = match noise {
        0.0 => own.len(),
        1.0 => other.len().max(own.len() * usize::from(other.is_empty())),
        _ => pool,
    };
    let count = rng.random_range(lo..=hi).min(reachable);
    let exhausted = |src: &[usize], out: &[usize]| src.iter().all(|j| out.contains(j));
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let cross = !other.is_empty() && rng.random::<f64>() < noise;
        let (pick, spare) = if cross { (&other, &own) } else { (&own, &other) };
        let source = if exhausted(pick, &out) { spare } else { pick };
        let item = source[rng.random_range(0..source.len())];
        if !out.contains(&item) {
            out.push(item);
        }
    }
    out
}
