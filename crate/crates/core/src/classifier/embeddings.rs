use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Pretrained word vectors. Unknown tokens map to the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn from_vectors<I>(dim: usize, vectors: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut table = Self::new(dim);
        for (word, v) in vectors {
            table.insert(word, v)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, word: String, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::LengthMismatch(format!(
                "vector for {word:?} has {} components, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "vector for {word:?} is not finite"
            )));
        }
        self.vectors.entry(word).or_insert(vector);
        Ok(())
    }

    /// Text format: optional "count dim" header, then "token v1 ... vD" lines.
    /// The first occurrence of a token wins.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .peekable();
        let mut dim = None;
        if let Some((_, first)) = lines.peek() {
            let fields: Vec<&str> = first.split_whitespace().collect();
            if fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
                dim = Some(fields[1].parse::<usize>().unwrap());
                lines.next();
            }
        }
        let mut table: Option<EmbeddingTable> = dim.map(Self::new);
        for (i, line) in lines {
            let mut fields = line.split_whitespace();
            let word = fields.next().unwrap_or_default().to_string();
            let vector = fields
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| Error::parse(i + 1, format!("not a number: {f:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let t = table.get_or_insert_with(|| Self::new(vector.len()));
            t.insert(word, vector)
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
        }
        let table = table.ok_or(Error::Empty("embedding file"))?;
        if table.dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension is 0".into()));
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Exact match first, then the lowercased form.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors
            .get(word)
            .or_else(|| self.vectors.get(&word.to_lowercase()))
            .map(Vec::as_slice)
    }

    /// Adds the vector for `word` (or nothing, when unknown) into `out`.
    pub(crate) fn add_to(&self, word: &str, out: &mut [f64]) {
        if let Some(v) = self.get(word) {
            for (o, x) in out.iter_mut().zip(v) {
                *o += x;
            }
        }
    }
}
