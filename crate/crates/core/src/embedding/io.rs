//! Model serialization.
//!
//! * text: `"V N"` header line, then `token v1 ... vN` per line.
//! * binary: ASCII `"V N\n"` header, then per word the token bytes, one
//!   space and `N` little-endian `f32`s. Newlines between records are
//!   skipped on read and never written.
//! * native: `WAXMODEL` magic, a little-endian `u32` version, a `u64`
//!   length-prefixed JSON header (vocabulary, counts, config) and the raw
//!   little-endian `f32` input and output matrices.
//!
//! Text and binary carry only the input vectors.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EmbeddingModel, Matrix, TrainingConfig};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

const NATIVE_MAGIC: &[u8; 8] = b"WAXMODEL";
const NATIVE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFormat {
    Text,
    Binary,
    Native,
}

impl std::str::FromStr for ModelFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ModelFormat::Text),
            "binary" => Ok(ModelFormat::Binary),
            "native" => Ok(ModelFormat::Native),
            other => Err(Error::Config(format!("unknown model format {other:?}"))),
        }
    }
}

pub fn save_model(model: &EmbeddingModel, path: &Path, format: ModelFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = match format {
        ModelFormat::Text => write_text(model, &mut w),
        ModelFormat::Binary => write_binary(model, &mut w),
        ModelFormat::Native => write_native(model, &mut w),
    };
    res.and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Loads a model, detecting the format from its leading bytes.
pub fn load_model(path: &Path) -> Result<EmbeddingModel> {
    let format = detect_format(path)?;
    load_model_as(path, format)
}

pub fn load_model_as(path: &Path, format: ModelFormat) -> Result<EmbeddingModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    match format {
        ModelFormat::Text => read_text(&mut r),
        ModelFormat::Binary => read_binary(&mut r),
        ModelFormat::Native => read_native(&mut r),
    }
}

fn detect_format(path: &Path) -> Result<ModelFormat> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut head = Vec::new();
    Read::by_ref(&mut file)
        .take(1 << 16)
        .read_to_end(&mut head)
        .map_err(|e| Error::io(path, e))?;
    if head.starts_with(NATIVE_MAGIC) {
        return Ok(ModelFormat::Native);
    }
    // Text if the first record line is a token followed by N decimal floats.
    let mut lines = head.split(|&b| b == b'\n');
    let header = lines.next().unwrap_or_default();
    let dim = std::str::from_utf8(header)
        .ok()
        .and_then(|h| h.split_whitespace().nth(1)?.parse::<usize>().ok());
    let looks_text = match (dim, lines.next()) {
        (Some(n), Some(line)) => std::str::from_utf8(line).is_ok_and(|l| {
            let fields: Vec<&str> = l.split_whitespace().collect();
            fields.len() == n + 1 && fields[1..].iter().all(|f| f.parse::<f32>().is_ok())
        }),
        // Header only, or an empty first record: treat as text so the
        // reader can report the truncation.
        (Some(_), None) => true,
        _ => false,
    };
    Ok(if looks_text {
        ModelFormat::Text
    } else {
        ModelFormat::Binary
    })
}

fn parse_header(line: &str) -> Result<(usize, usize)> {
    let mut parts = line.split_whitespace();
    let mut next = |what: &str| -> Result<usize> {
        parts
            .next()
            .ok_or_else(|| Error::Format(format!("header missing {what}")))?
            .parse()
            .map_err(|_| Error::Format(format!("header {what} is not an integer: {line:?}")))
    };
    let v = next("vocabulary size")?;
    let n = next("dimension")?;
    if parts.next().is_some() {
        return Err(Error::Format(format!("unexpected header {line:?}")));
    }
    if n == 0 {
        return Err(Error::Format("dimension must be positive".into()));
    }
    Ok((v, n))
}

fn interop_model(words: Vec<String>, rows: usize, cols: usize, data: Vec<f32>) -> Result<EmbeddingModel> {
    let vocab = Vocabulary::from_words(words)?;
    let input = Matrix::from_vec(rows, cols, data)?;
    let config = TrainingConfig {
        dim: cols,
        ..TrainingConfig::default()
    };
    EmbeddingModel::from_parts(vocab, input, None, config)
}

fn check_token(token: &str) -> std::io::Result<()> {
    if token.is_empty() || token.contains(char::is_whitespace) {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("token {token:?} cannot be written to a whitespace-delimited format"),
        ));
    }
    Ok(())
}

pub fn write_text<W: Write>(model: &EmbeddingModel, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{} {}", model.len(), model.dim())?;
    for (i, word) in model.vocab.words().iter().enumerate() {
        check_token(word)?;
        write!(w, "{word}")?;
        for v in model.input.row(i) {
            // `Display` for f32 is the shortest representation that
            // parses back to the same bits.
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_text<R: BufRead>(r: &mut R) -> Result<EmbeddingModel> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty file".into()))?
        .map_err(|e| Error::Format(e.to_string()))?;
    let (v, n) = parse_header(&header)?;

    let mut words = Vec::with_capacity(v);
    let mut seen = HashSet::with_capacity(v);
    let mut data = Vec::with_capacity(v * n);
    while words.len() < v {
        let line = match lines.next() {
            Some(l) => l.map_err(|e| Error::Format(e.to_string()))?,
            None => {
                return Err(Error::Format(format!(
                    "truncated: header declares {v} rows, found {}",
                    words.len()
                )))
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("non-empty line").to_string();
        let before = data.len();
        for f in fields {
            data.push(
                f.parse::<f32>()
                    .map_err(|_| Error::Format(format!("row {}: bad float {f:?}", words.len() + 2)))?,
            );
        }
        if data.len() - before != n {
            return Err(Error::Format(format!(
                "row for {word:?} has {} values, expected {n}",
                data.len() - before
            )));
        }
        if !seen.insert(word.clone()) {
            return Err(Error::Format(format!("duplicate token {word:?}")));
        }
        words.push(word);
    }
    interop_model(words, v, n, data)
}

pub fn write_binary<W: Write>(model: &EmbeddingModel, w: &mut W) -> std::io::Result<()> {
    write!(w, "{} {}\n", model.len(), model.dim())?;
    for (i, word) in model.vocab.words().iter().enumerate() {
        check_token(word)?;
        w.write_all(word.as_bytes())?;
        w.write_all(b" ")?;
        for v in model.input.row(i) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_until_byte<R: BufRead>(r: &mut R, delim: u8, what: &str) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    r.read_until(delim, &mut buf)
        .map_err(|e| Error::Format(e.to_string()))?;
    if buf.last() != Some(&delim) {
        return Err(Error::Format(format!("truncated while reading {what}")));
    }
    buf.pop();
    Ok(buf)
}

pub fn read_binary<R: BufRead>(r: &mut R) -> Result<EmbeddingModel> {
    let header = read_until_byte(r, b'\n', "header")?;
    let header = String::from_utf8(header).map_err(|_| Error::Format("header is not ASCII".into()))?;
    let (v, n) = parse_header(&header)?;

    let mut words = Vec::with_capacity(v);
    let mut seen = HashSet::with_capacity(v);
    let mut data = Vec::with_capacity(v * n);
    let mut raw = vec![0u8; 4 * n];
    for i in 0..v {
        let mut token = read_until_byte(r, b' ', &format!("token {i}"))?;
        let skip = token.iter().take_while(|&&b| b == b'\n' || b == b'\r').count();
        token.drain(..skip);
        let word = String::from_utf8(token)
            .map_err(|_| Error::Format(format!("token {i} is not UTF-8")))?;
        if word.is_empty() {
            return Err(Error::Format(format!("token {i} is empty")));
        }
        r.read_exact(&mut raw)
            .map_err(|_| Error::Format(format!("truncated vector for {word:?}")))?;
        data.extend(
            raw.chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])),
        );
        if !seen.insert(word.clone()) {
            return Err(Error::Format(format!("duplicate token {word:?}")));
        }
        words.push(word);
    }
    interop_model(words, v, n, data)
}

#[derive(Serialize, Deserialize)]
struct NativeHeader {
    rows: usize,
    cols: usize,
    has_output: bool,
    total_tokens: u64,
    min_count: u64,
    vocab: Vec<(String, u64)>,
    config: TrainingConfig,
}

pub fn write_native<W: Write>(model: &EmbeddingModel, w: &mut W) -> std::io::Result<()> {
    let header = NativeHeader {
        rows: model.len(),
        cols: model.dim(),
        has_output: model.output.is_some(),
        total_tokens: model.vocab.total_tokens(),
        min_count: model.vocab.min_count(),
        vocab: model
            .vocab
            .words()
            .iter()
            .cloned()
            .zip(model.vocab.counts().iter().copied())
            .collect(),
        config: model.config.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(NATIVE_MAGIC)?;
    w.write_all(&NATIVE_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for m in std::iter::once(&model.input).chain(model.output.as_ref()) {
        for v in m.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_f32s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f32>> {
    let mut raw = vec![0u8; count * 4];
    r.read_exact(&mut raw)
        .map_err(|_| Error::Format("truncated matrix payload".into()))?;
    Ok(raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect())
}

pub fn read_native<R: Read>(r: &mut R) -> Result<EmbeddingModel> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("truncated native header".into()))?;
    if &magic != NATIVE_MAGIC {
        return Err(Error::Format("not a native model file".into()));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)
        .map_err(|_| Error::Format("truncated native header".into()))?;
    let version = u32::from_le_bytes(word);
    if version != NATIVE_VERSION {
        return Err(Error::Format(format!("unsupported native version {version}")));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)
        .map_err(|_| Error::Format("truncated native header".into()))?;
    let len = u64::from_le_bytes(len) as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)
        .map_err(|_| Error::Format("truncated native header".into()))?;
    let header: NativeHeader = serde_json::from_slice(&json)
        .map_err(|e| Error::Format(format!("bad native header: {e}")))?;
    if header.vocab.len() != header.rows {
        return Err(Error::Format("vocabulary size does not match matrix rows".into()));
    }

    let input = Matrix::from_vec(header.rows, header.cols, read_f32s(r, header.rows * header.cols)?)?;
    let output = if header.has_output {
        Some(Matrix::from_vec(
            header.rows,
            header.cols,
            read_f32s(r, header.rows * header.cols)?,
        )?)
    } else {
        None
    };
    let vocab = Vocabulary::from_ordered(header.vocab, header.total_tokens, header.min_count)?;
    EmbeddingModel::from_parts(vocab, input, output, header.config)
}
