use super::beam::{beam_search, DecodeRecord};
use super::{BeamConfig, DecodeError, PenaltyConfig};
use crate::channel::{ChannelSpec, Pair};
use crate::inference::EmissionAutomaton;
use rayon::prelude::*;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// JSON has no ±inf literal, so non-finite scores round-trip as the strings
/// "inf" / "-inf" instead of null.
pub(crate) mod extended_f64 {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => match s.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => other
                    .parse::<f64>()
                    .map_err(|_| D::Error::custom(format!("not a number: {other:?}"))),
            },
        }
    }
}

pub(crate) mod extended_f64_vec {
    use super::extended_f64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    struct Item(f64);

    impl Serialize for Item {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            extended_f64::serialize(&self.0, s)
        }
    }

    impl<'de> Deserialize<'de> for Item {
        fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
            extended_f64::deserialize(d).map(Item)
        }
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&x| Item(x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Item>::deserialize(d).map(|v| v.into_iter().map(|i| i.0).collect())
    }
}

/// Decodes every pair against its own compiled source automaton. Pairs are
/// processed in parallel; output order matches input order.
pub fn decode_corpus(
    spec: &ChannelSpec,
    pairs: &[Pair],
    beam: &BeamConfig,
    penalty: &PenaltyConfig,
) -> Result<Vec<DecodeRecord>, DecodeError> {
    beam.validate()?;
    penalty.validate()?;
    pairs
        .par_iter()
        .map(|pair| {
            let automaton = EmissionAutomaton::compile(spec, &pair.source)?;
            beam_search(&automaton, pair.id, beam, penalty)
        })
        .collect()
}

pub fn write_results(path: &Path, records: &[DecodeRecord]) -> Result<(), DecodeError> {
    let mut w = BufWriter::new(File::create(path)?);
    for record in records {
        serde_json::to_writer(&mut w, record)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<DecodeRecord>, DecodeError> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record =
            serde_json::from_str(&line).map_err(|source| DecodeError::BadLine {
                line: i + 1,
                source,
            })?;
        records.push(record);
    }
    Ok(records)
}
