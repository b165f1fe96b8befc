//! Fixed-dimension embedding stores and the deterministic synthetic embedder.
//!
//! One store per embedding space: entities (dim `m`), passages (dim `n`),
//! queries (dim `p`) and query-conditioned entity encodings (dim `k`, keyed
//! with [`query_entity_key`]).
//!
//! Text format:
//!
//! ```text
//! #space=entity dim=4
//! Q42<TAB>1.0000000000000000e0 0.0000000000000000e0 ...
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Embedding dimensions of the four spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimsConfig {
    /// Query-conditioned entity encodings.
    pub k: usize,
    /// Entity embeddings.
    pub m: usize,
    /// Passage (text) embeddings.
    pub n: usize,
    /// Query and hybrid document embeddings.
    pub p: usize,
}

impl Default for DimsConfig {
    fn default() -> Self {
        DimsConfig {
            k: 32,
            m: 32,
            n: 32,
            p: 32,
        }
    }
}

impl DimsConfig {
    pub fn uniform(d: usize) -> Self {
        DimsConfig {
            k: d,
            m: d,
            n: d,
            p: d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.m == 0 || self.n == 0 || self.p == 0 {
            return Err(Error::InvalidArgument(format!(
                "all embedding dimensions must be positive, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Key of a query-conditioned entity encoding.
pub fn query_entity_key(query_id: &str, entity_id: &str) -> String {
    format!("{query_id}::{entity_id}")
}

/// Key of a passage embedding.
pub fn passage_key(doc_id: &str, index: usize) -> String {
    format!("{doc_id}#{index}")
}

/// Formats a float with 17 significant digits, which round-trips exactly.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Vectors of one space, all sharing a dimension. Insertion order is kept so
/// that saving reproduces the loaded file.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    space: String,
    dim: usize,
    ids: Vec<String>,
    vectors: Vec<Vector>,
    index: HashMap<String, usize>,
}

impl EmbeddingStore {
    pub fn new(space: impl Into<String>, dim: usize) -> Self {
        EmbeddingStore {
            space: space.into(),
            dim,
            ids: Vec::new(),
            vectors: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn space(&self) -> &str {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn insert(&mut self, id: impl Into<String>, v: Vector) -> Result<()> {
        let id = id.into();
        if v.dim() != self.dim {
            return Err(Error::Shape(format!(
                "vector `{id}` has dim {}, store `{}` expects {}",
                v.dim(),
                self.space,
                self.dim
            )));
        }
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "vector `{id}` has non-finite components"
            )));
        }
        if self.index.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.vectors.push(v);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&Vector> {
        self.index.get(id).map(|&i| &self.vectors[i])
    }

    pub fn get_mut(&mut self, id: &str) -> Option<&mut Vector> {
        self.index.get(id).map(|&i| &mut self.vectors[i])
    }

    /// Like [`get`](Self::get) but with an error naming the missing id.
    pub fn require(&self, id: &str) -> Result<&Vector> {
        self.get(id).ok_or_else(|| Error::MissingEmbedding {
            space: self.space.clone(),
            id: id.to_string(),
        })
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Vector)> {
        self.ids.iter().map(String::as_str).zip(&self.vectors)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("#space={} dim={}\n", self.space, self.dim);
        for (id, v) in self.iter() {
            out.push_str(id);
            out.push('\t');
            write_components(&mut out, v.as_slice());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(origin, 1, "missing header"))?;
        let (space, dim) = parse_header(header).map_err(|m| Error::parse(origin, 1, m))?;
        let mut store = EmbeddingStore::new(space, dim);
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let (id, rest) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, lineno, "expected `id<TAB>components`"))?;
            let comps = parse_components(rest).map_err(|m| Error::parse(origin, lineno, m))?;
            if comps.len() != dim {
                return Err(Error::parse(
                    origin,
                    lineno,
                    format!(
                        "`{id}` has {} components, header declares {dim}",
                        comps.len()
                    ),
                ));
            }
            store.insert(id, Vector(comps)).map_err(|e| match e {
                Error::DuplicateId(id) => {
                    Error::parse(origin, lineno, format!("duplicate id `{id}`"))
                }
                other => Error::parse(origin, lineno, other.to_string()),
            })?;
        }
        Ok(store)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// The four embedding spaces the scorer reads from.
#[derive(Debug, Clone)]
pub struct EmbeddingSpaces {
    pub entity: EmbeddingStore,
    pub passage: EmbeddingStore,
    pub query: EmbeddingStore,
    pub query_entity: EmbeddingStore,
}

impl EmbeddingSpaces {
    pub const FILES: [&'static str; 4] =
        ["entity.emb", "passage.emb", "query.emb", "query_entity.emb"];

    pub fn dims(&self) -> DimsConfig {
        DimsConfig {
            k: self.query_entity.dim(),
            m: self.entity.dim(),
            n: self.passage.dim(),
            p: self.query.dim(),
        }
    }

    /// Loads `entity.emb`, `passage.emb`, `query.emb` and `query_entity.emb`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let [e, p, q, qe] = Self::FILES.map(|f| dir.join(f));
        Ok(EmbeddingSpaces {
            entity: EmbeddingStore::load(&e)?,
            passage: EmbeddingStore::load(&p)?,
            query: EmbeddingStore::load(&q)?,
            query_entity: EmbeddingStore::load(&qe)?,
        })
    }

    pub fn stores(&self) -> [&EmbeddingStore; 4] {
        [&self.entity, &self.passage, &self.query, &self.query_entity]
    }
}

pub(crate) fn write_components(out: &mut String, values: &[f64]) {
    for (j, c) in values.iter().enumerate() {
        if j > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{c:.16e}");
    }
}

pub(crate) fn parse_components(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| format!("bad number `{t}`")))
        .collect()
}

fn parse_header(line: &str) -> std::result::Result<(String, usize), String> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| "header must start with `#`".to_string())?;
    let mut space = None;
    let mut dim = None;
    for field in body.split_whitespace() {
        match field.split_once('=') {
            Some(("space", v)) => space = Some(v.to_string()),
            Some(("dim", v)) => {
                dim = Some(v.parse::<usize>().map_err(|_| format!("bad dim `{v}`"))?)
            }
            _ => return Err(format!("unexpected header field `{field}`")),
        }
    }
    let dim = dim.ok_or("header lacks dim")?;
    if dim == 0 {
        return Err("dim must be positive".into());
    }
    Ok((space.unwrap_or_default(), dim))
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub(crate) fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

struct SplitMix64(u64);

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [-1, 1).
    fn next_signed_unit(&mut self) -> f64 {
        let top = self.next_u64() >> 11;
        (top as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }
}

/// Deterministic unit vector for `(namespace, id, seed)`.
///
/// FNV-1a-64 of `namespace \x1f id \x1f seed` seeds a SplitMix64 stream;
/// components are uniform in [-1, 1) from the top 53 bits, then the vector
/// is L2-normalized. Identical on every platform.
pub fn synthetic_embed(namespace: &str, id: &str, dim: usize, seed: u64) -> Vector {
    assert!(dim >= 1, "synthetic_embed needs dim >= 1");
    let key = format!("{namespace}\u{1f}{id}\u{1f}{seed}");
    let mut rng = SplitMix64(fnv1a64(key.as_bytes()));
    loop {
        let v = Vector((0..dim).map(|_| rng.next_signed_unit()).collect());
        if let Ok(unit) = v.normalized() {
            return unit;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn splitmix_reference_values() {
        let mut r = SplitMix64(1234567);
        assert_eq!(r.next_u64(), 6457827717110365317);
        assert_eq!(r.next_u64(), 3203168211198807973);
    }

    #[test]
    fn synthetic_is_deterministic_and_unit() {
        let a = synthetic_embed("entity", "Q1", 16, 7);
        let b = synthetic_embed("entity", "Q1", 16, 7);
        assert_eq!(a, b);
        assert!((a.norm() - 1.0).abs() < 1e-9);
        assert_ne!(a, synthetic_embed("entity", "Q1", 16, 8));
        assert_ne!(a, synthetic_embed("passage", "Q1", 16, 7));
    }

    #[test]
    fn synthetic_thousand_ids_no_duplicates() {
        let mut seen = HashSet::new();
        for i in 0..1000 {
            let v = synthetic_embed("entity", &format!("e{i}"), 32, 0);
            assert!((v.norm() - 1.0).abs() < 1e-9);
            let bits: Vec<u64> = v.iter().map(|x| x.to_bits()).collect();
            assert!(seen.insert(bits), "duplicate vector for e{i}");
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut s = EmbeddingStore::new("entity", 4);
        s.insert("a", Vector(vec![0.1, -2.0 / 3.0, 1e-300, f64::MAX]))
            .unwrap();
        s.insert("b", synthetic_embed("x", "b", 4, 1)).unwrap();
        let text = s.to_text();
        let back = EmbeddingStore::parse(&text, Path::new("mem")).unwrap();
        assert_eq!(back, s);
        for ((_, x), (_, y)) in s.iter().zip(back.iter()) {
            for (a, b) in x.iter().zip(y.iter()) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn wrong_dim_line_is_rejected() {
        let text = "#space=entity dim=4\na\t1 2 3\n";
        let err = EmbeddingStore::parse(text, Path::new("f.emb")).unwrap_err();
        assert!(err.to_string().contains("`a`"), "{err}");
        assert!(err.to_string().contains("f.emb:2"), "{err}");
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let text = "#space=entity dim=1\na\t1\na\t2\n";
        assert!(EmbeddingStore::parse(text, Path::new("f")).is_err());
    }

    #[test]
    fn empty_store_is_valid() {
        let s = EmbeddingStore::parse("#space=q dim=3\n", Path::new("f")).unwrap();
        assert_eq!(s.len(), 0);
        assert_eq!(s.dim(), 3);
    }
}
