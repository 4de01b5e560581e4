//! Input sequences: the alternating ±1 stimulus and the two-block stochastic
//! grammar (`ABAD` / `ACAE`), plus the perturbations used by twin experiments.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;
use thiserror::Error;

use crate::rng;

/// Tokens per grammar block.
pub const BLOCK_LEN: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SequenceError {
    #[error("block {block} out of range (sequence has {blocks} blocks)")]
    BlockOutOfRange { block: usize, blocks: usize },
    #[error("sequence carries no grammar labels")]
    Unlabeled,
    #[error("block {block} is not a grammar block: {found}")]
    NotGrammarBlock { block: usize, found: String },
    #[error("input vectors have inconsistent lengths: expected {expected}, got {got} at step {step}")]
    InconsistentDimension { expected: usize, got: usize, step: usize },
    #[error("label count {labels} does not match vector count {vectors}")]
    LabelCount { labels: usize, vectors: usize },
    #[error("label {label} does not match its vector at step {step}")]
    LabelMismatch { step: usize, label: GrammarToken },
    #[error("unknown token {0:?}")]
    UnknownToken(String),
    #[error("CSV error on line {line}: {message}")]
    Csv { line: u64, message: String },
}

/// One of the five grammar symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GrammarToken {
    A,
    B,
    C,
    D,
    E,
}

impl GrammarToken {
    pub const ALL: [GrammarToken; 5] = [GrammarToken::A, GrammarToken::B, GrammarToken::C, GrammarToken::D, GrammarToken::E];

    /// Two-dimensional input encoding.
    pub fn encoding(self) -> [f64; 2] {
        match self {
            GrammarToken::A => [0.0, 0.0],
            GrammarToken::B => [-1.0, 0.0],
            GrammarToken::C => [1.0, 0.0],
            GrammarToken::D => [0.0, -1.0],
            GrammarToken::E => [0.0, 1.0],
        }
    }

    pub fn to_vector(self) -> DVector<f64> {
        DVector::from_row_slice(&self.encoding())
    }

    pub fn from_encoding(v: &[f64]) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.encoding().as_slice() == v)
    }

    pub fn symbol(self) -> char {
        match self {
            GrammarToken::A => 'A',
            GrammarToken::B => 'B',
            GrammarToken::C => 'C',
            GrammarToken::D => 'D',
            GrammarToken::E => 'E',
        }
    }

    /// D ↔ E; other tokens unchanged.
    fn swap_terminal(self) -> Self {
        match self {
            GrammarToken::D => GrammarToken::E,
            GrammarToken::E => GrammarToken::D,
            t => t,
        }
    }
}

impl fmt::Display for GrammarToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl FromStr for GrammarToken {
    type Err = SequenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" => Ok(GrammarToken::A),
            "B" => Ok(GrammarToken::B),
            "C" => Ok(GrammarToken::C),
            "D" => Ok(GrammarToken::D),
            "E" => Ok(GrammarToken::E),
            other => Err(SequenceError::UnknownToken(other.to_string())),
        }
    }
}

/// An ordered list of equally sized input vectors, optionally labeled.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSequence {
    dim: usize,
    vectors: Vec<DVector<f64>>,
    labels: Option<Vec<GrammarToken>>,
}

impl InputSequence {
    pub fn new(vectors: Vec<DVector<f64>>) -> Result<Self, SequenceError> {
        let dim = vectors.first().map_or(0, DVector::len);
        for (step, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(SequenceError::InconsistentDimension { expected: dim, got: v.len(), step });
            }
        }
        Ok(Self { dim, vectors, labels: None })
    }

    pub fn from_tokens(tokens: &[GrammarToken]) -> Self {
        Self {
            dim: 2,
            vectors: tokens.iter().map(|t| t.to_vector()).collect(),
            labels: Some(tokens.to_vec()),
        }
    }

    pub fn from_scalars(values: &[f64]) -> Self {
        Self {
            dim: 1,
            vectors: values.iter().map(|&v| DVector::from_element(1, v)).collect(),
            labels: None,
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Length of every input vector.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &[DVector<f64>] {
        &self.vectors
    }

    pub fn labels(&self) -> Option<&[GrammarToken]> {
        self.labels.as_deref()
    }

    pub fn get(&self, t: usize) -> Option<&DVector<f64>> {
        self.vectors.get(t)
    }

    /// Copy of steps `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            dim: self.dim,
            vectors: self.vectors[start..end].to_vec(),
            labels: self.labels.as_ref().map(|l| l[start..end].to_vec()),
        }
    }

    /// Number of complete grammar blocks.
    pub fn blocks(&self) -> usize {
        self.len() / BLOCK_LEN
    }

    /// Labels as a string such as `ABADACAE`.
    pub fn label_string(&self) -> Option<String> {
        self.labels.as_ref().map(|l| l.iter().map(|t| t.symbol()).collect())
    }

    /// Whether block `b` is `ABAD` or `ACAE`.
    pub fn block_is_grammatical(&self, b: usize) -> Result<bool, SequenceError> {
        let block = self.block(b)?;
        use GrammarToken::*;
        Ok(matches!(block, [A, B, A, D] | [A, C, A, E]))
    }

    /// Every complete block is `ABAD` or `ACAE`.
    pub fn satisfies_grammar(&self) -> Result<bool, SequenceError> {
        for b in 0..self.blocks() {
            if !self.block_is_grammatical(b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn block(&self, b: usize) -> Result<&[GrammarToken], SequenceError> {
        let labels = self.labels.as_ref().ok_or(SequenceError::Unlabeled)?;
        if b >= self.blocks() {
            return Err(SequenceError::BlockOutOfRange { block: b, blocks: self.blocks() });
        }
        Ok(&labels[b * BLOCK_LEN..(b + 1) * BLOCK_LEN])
    }

    fn relabel(&mut self, t: usize, token: GrammarToken) {
        if let Some(labels) = self.labels.as_mut() {
            labels[t] = token;
        }
        self.vectors[t] = token.to_vector();
    }

    /// CSV with header `t,label,u_0..u_{M-1}`; `label` is empty for unlabeled steps.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,label");
        for j in 0..self.dim {
            out.push_str(&format!(",u_{j}"));
        }
        out.push('\n');
        for (t, v) in self.vectors.iter().enumerate() {
            let label = self.labels.as_ref().map(|l| l[t].to_string()).unwrap_or_default();
            out.push_str(&format!("{t},{label}"));
            for x in v.iter() {
                out.push_str(&format!(",{x:?}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the format written by [`InputSequence::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self, SequenceError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let csv_err = |e: csv::Error| SequenceError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        };
        let headers = reader.headers().map_err(csv_err)?.clone();
        if headers.len() < 3 || &headers[0] != "t" || &headers[1] != "label" {
            return Err(SequenceError::Csv {
                line: 1,
                message: format!("expected header t,label,u_0.., got {:?}", headers.iter().collect::<Vec<_>>()),
            });
        }
        let mut vectors = Vec::new();
        let mut labels = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map_or(0, |p| p.line());
            let bad = |message: String| SequenceError::Csv { line, message };
            let t: usize = record[0].parse().map_err(|e| bad(format!("bad t {:?}: {e}", &record[0])))?;
            if t != vectors.len() {
                return Err(bad(format!("expected t = {}, got {t}", vectors.len())));
            }
            let values = record
                .iter()
                .skip(2)
                .map(|s| s.trim().parse::<f64>().map_err(|e| bad(format!("bad value {s:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let label = record[1].trim();
            labels.push(if label.is_empty() { None } else { Some(label.parse::<GrammarToken>()?) });
            vectors.push(DVector::from_vec(values));
        }
        let mut seq = Self::new(vectors)?;
        if labels.iter().all(Option::is_some) && !labels.is_empty() {
            let labels: Vec<GrammarToken> = labels.into_iter().flatten().collect();
            for (step, (l, v)) in labels.iter().zip(&seq.vectors).enumerate() {
                if l.encoding().as_slice() != v.as_slice() {
                    return Err(SequenceError::LabelMismatch { step, label: *l });
                }
            }
            seq.labels = Some(labels);
        }
        Ok(seq)
    }
}

/// `+1, −1, +1, …` as a one-dimensional input.
pub fn alternating_sequence(length: usize) -> InputSequence {
    let values: Vec<f64> = (0..length).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
    InputSequence::from_scalars(&values)
}

/// `blocks` groups, each independently `ABAD` or `ACAE` with probability 1/2.
pub fn grammar_sequence(blocks: usize, seed: u64) -> InputSequence {
    use GrammarToken::*;
    let mut r = rng::from_seed(seed);
    let mut tokens = Vec::with_capacity(blocks * BLOCK_LEN);
    for _ in 0..blocks {
        if r.random_bool(0.5) {
            tokens.extend_from_slice(&[A, B, A, D]);
        } else {
            tokens.extend_from_slice(&[A, C, A, E]);
        }
    }
    InputSequence::from_tokens(&tokens)
}

/// Swaps the terminal token of block `block` (D ↔ E), breaking the B→D / C→E rule.
pub fn inject_violation(seq: &InputSequence, block: usize) -> Result<InputSequence, SequenceError> {
    let tokens = seq.block(block)?;
    let last = tokens[BLOCK_LEN - 1];
    if !matches!(last, GrammarToken::D | GrammarToken::E) {
        return Err(SequenceError::NotGrammarBlock {
            block,
            found: tokens.iter().map(|t| t.symbol()).collect(),
        });
    }
    let mut out = seq.clone();
    out.relabel(block * BLOCK_LEN + BLOCK_LEN - 1, last.swap_terminal());
    Ok(out)
}

/// Replaces block `block` by the other grammatical block (`ABAD` ↔ `ACAE`).
pub fn swap_block(seq: &InputSequence, block: usize) -> Result<InputSequence, SequenceError> {
    use GrammarToken::*;
    let replacement = match seq.block(block)? {
        [A, B, A, D] => [A, C, A, E],
        [A, C, A, E] => [A, B, A, D],
        other => {
            return Err(SequenceError::NotGrammarBlock {
                block,
                found: other.iter().map(|t| t.symbol()).collect(),
            })
        }
    };
    let mut out = seq.clone();
    let start = block * BLOCK_LEN;
    out.relabel(start + 1, replacement[1]);
    out.relabel(start + 3, replacement[3]);
    Ok(out)
}

/// From block `from_block` onward, every block ends with the wrong terminal.
/// Blocks already violated stay violated.
pub fn permanent_violation(seq: &InputSequence, from_block: usize) -> Result<InputSequence, SequenceError> {
    let blocks = seq.blocks();
    if from_block > blocks {
        return Err(SequenceError::BlockOutOfRange { block: from_block, blocks });
    }
    let mut out = seq.clone();
    for b in from_block..blocks {
        if seq.block_is_grammatical(b)? {
            out = inject_violation(&out, b)?;
        } else {
            let tokens = seq.block(b)?;
            use GrammarToken::*;
            if !matches!(tokens, [A, B, A, E] | [A, C, A, D]) {
                return Err(SequenceError::NotGrammarBlock {
                    block: b,
                    found: tokens.iter().map(|t| t.symbol()).collect(),
                });
            }
        }
    }
    Ok(out)
}
