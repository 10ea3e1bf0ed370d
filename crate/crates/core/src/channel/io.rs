use super::{ChannelError, ChannelSpec, Pair};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// Writes a corpus as JSON lines, one pair per line, in the given order.
pub fn write_corpus(path: &Path, pairs: &[Pair]) -> Result<(), ChannelError> {
    let mut w = BufWriter::new(File::create(path)?);
    for pair in pairs {
        serde_json::to_writer(&mut w, pair).map_err(ChannelError::BadSpec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a JSON-lines corpus, reporting the 1-based line of any bad record.
pub fn read_corpus(path: &Path) -> Result<Vec<Pair>, ChannelError> {
    let reader = BufReader::new(File::open(path)?);
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let pair = serde_json::from_str(&line)
            .map_err(|source| ChannelError::BadLine { line: i + 1, source })?;
        pairs.push(pair);
    }
    Ok(pairs)
}

pub fn write_spec(path: &Path, spec: &ChannelSpec) -> Result<(), ChannelError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, spec).map_err(ChannelError::BadSpec)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_spec(path: &Path) -> Result<ChannelSpec, ChannelError> {
    let spec: ChannelSpec = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    spec.validate()?;
    Ok(spec)
}
