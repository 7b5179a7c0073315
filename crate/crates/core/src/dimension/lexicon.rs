use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecmath::Embeddings;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pole {
    Positive,
    Negative,
}

impl Pole {
    pub fn sign(self) -> f64 {
        match self {
            Pole::Positive => 1.0,
            Pole::Negative => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorEntry {
    pub word: String,
    pub pole: Pole,
    pub pair_id: Option<u32>,
    pub split: Split,
}

/// Pole-labeled anchor words for one semantic dimension.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorLexicon {
    pub name: String,
    /// Labels for the positive and negative poles.
    pub pole_names: (String, String),
    pub entries: Vec<AnchorEntry>,
}

/// Per-split counts of anchors found in a vocabulary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub train_found: usize,
    pub train_total: usize,
    pub test_found: usize,
    pub test_total: usize,
    pub missing: Vec<String>,
}

impl AnchorLexicon {
    /// Validates and builds a lexicon.
    ///
    /// Every `pair_id` must name exactly one positive and one negative
    /// training word, test words must be unique, and both splits must be
    /// non-empty.
    pub fn new(name: impl Into<String>, pole_names: (String, String), entries: Vec<AnchorEntry>) -> Result<Self> {
        let lex = AnchorLexicon {
            name: name.into(),
            pole_names,
            entries,
        };
        lex.validate()?;
        Ok(lex)
    }

    /// Builds a lexicon without the non-empty-split rule, for fold subsets.
    pub(crate) fn subset(&self, entries: Vec<AnchorEntry>) -> Self {
        AnchorLexicon {
            name: self.name.clone(),
            pole_names: self.pole_names.clone(),
            entries,
        }
    }

    fn validate(&self) -> Result<()> {
        let mut pairs: BTreeMap<u32, Vec<&AnchorEntry>> = BTreeMap::new();
        let mut test_words = HashSet::new();
        for e in &self.entries {
            if let Some(id) = e.pair_id {
                pairs.entry(id).or_default().push(e);
            }
            if e.split == Split::Test && !test_words.insert(e.word.as_str()) {
                return Err(Error::Config(format!(
                    "lexicon {}: test word {:?} listed twice",
                    self.name, e.word
                )));
            }
        }
        for (id, members) in &pairs {
            let pos = members.iter().filter(|e| e.pole == Pole::Positive).count();
            let neg = members.iter().filter(|e| e.pole == Pole::Negative).count();
            if pos != 1 || neg != 1 || members.iter().any(|e| e.split != Split::Train) {
                return Err(Error::Config(format!(
                    "lexicon {}: pair {id} must have one positive and one negative training word",
                    self.name
                )));
            }
        }
        for split in [Split::Train, Split::Test] {
            if !self.entries.iter().any(|e| e.split == split) {
                return Err(Error::Config(format!(
                    "lexicon {}: {split:?} split is empty",
                    self.name
                )));
            }
        }
        Ok(())
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &AnchorEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// Training words of one pole, repeated as listed.
    pub fn train_words(&self, pole: Pole) -> Vec<&str> {
        self.split(Split::Train)
            .filter(|e| e.pole == pole)
            .map(|e| e.word.as_str())
            .collect()
    }

    /// `(positive, negative)` training pairs in `pair_id` order.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut by_id: BTreeMap<u32, (Option<&str>, Option<&str>)> = BTreeMap::new();
        for e in self.split(Split::Train) {
            if let Some(id) = e.pair_id {
                let slot = by_id.entry(id).or_default();
                match e.pole {
                    Pole::Positive => slot.0 = Some(&e.word),
                    Pole::Negative => slot.1 = Some(&e.word),
                }
            }
        }
        by_id
            .into_values()
            .filter_map(|(p, n)| Some((p?.to_string(), n?.to_string())))
            .collect()
    }

    pub fn is_paired(&self) -> bool {
        !self.pairs().is_empty()
    }

    pub fn coverage(&self, emb: &Embeddings) -> Coverage {
        let mut c = Coverage {
            train_found: 0,
            train_total: 0,
            test_found: 0,
            test_total: 0,
            missing: Vec::new(),
        };
        let mut missing = HashSet::new();
        for e in &self.entries {
            let found = emb.vocab().idx(&e.word).is_some();
            let (f, t) = match e.split {
                Split::Train => (&mut c.train_found, &mut c.train_total),
                Split::Test => (&mut c.test_found, &mut c.test_total),
            };
            *t += 1;
            if found {
                *f += 1;
            } else if missing.insert(e.word.clone()) {
                c.missing.push(e.word.clone());
            }
        }
        c
    }

    /// Parses the lexicon TSV format.
    ///
    /// Columns are `word`, `pole` (`positive`/`negative`), `pair_id`
    /// (integer or empty) and `split` (`train`/`test`). Lines starting with
    /// `#` are comments, except `# name: ...`, `# positive: ...` and
    /// `# negative: ...`, which set the lexicon and pole labels. An initial
    /// `word<TAB>pole...` header row is skipped.
    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        let default_name = source
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dimension".into());
        let mut name = default_name;
        let mut positive = "positive".to_string();
        let mut negative = "negative".to_string();
        let mut entries = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((key, value)) = comment.split_once(':') {
                    let value = value.trim().to_string();
                    match key.trim() {
                        "name" => name = value,
                        "positive" => positive = value,
                        "negative" => negative = value,
                        _ => {}
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            if entries.is_empty() && fields.first() == Some(&"word") && fields.get(1) == Some(&"pole") {
                continue;
            }
            if fields.len() != 4 {
                return Err(Error::parse(
                    source,
                    lineno,
                    format!("expected 4 tab-separated columns, found {}", fields.len()),
                ));
            }
            let pole = match fields[1] {
                "positive" => Pole::Positive,
                "negative" => Pole::Negative,
                other => return Err(Error::parse(source, lineno, format!("unknown pole {other:?}"))),
            };
            let pair_id = match fields[2] {
                "" => None,
                s => Some(
                    s.parse()
                        .map_err(|_| Error::parse(source, lineno, format!("bad pair_id {s:?}")))?,
                ),
            };
            let split = match fields[3] {
                "train" => Split::Train,
                "test" => Split::Test,
                other => return Err(Error::parse(source, lineno, format!("unknown split {other:?}"))),
            };
            if fields[0].is_empty() {
                return Err(Error::parse(source, lineno, "empty word"));
            }
            entries.push(AnchorEntry {
                word: fields[0].to_lowercase().replace(' ', "_"),
                pole,
                pair_id,
                split,
            });
        }
        AnchorLexicon::new(name, (positive, negative), entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<AnchorLexicon> {
        AnchorLexicon::parse(s, Path::new("gender.tsv"))
    }

    #[test]
    fn minimal_paired_lexicon() {
        let lex = parse("woman\tpositive\t1\ttrain\nman\tnegative\t1\ttrain\nqueen\tpositive\t\ttest\n").unwrap();
        assert_eq!(lex.name, "gender");
        assert_eq!(lex.pairs(), vec![("woman".into(), "man".into())]);
        assert!(lex.is_paired());
    }

    #[test]
    fn metadata_comments_and_header() {
        let lex = parse(
            "# name: sex\n# positive: feminine\n# negative: masculine\nword\tpole\tpair_id\tsplit\n\
             she\tpositive\t\ttrain\nhe\tnegative\t\ttrain\nher\tpositive\t\ttest\n",
        )
        .unwrap();
        assert_eq!(lex.name, "sex");
        assert_eq!(lex.pole_names, ("feminine".into(), "masculine".into()));
        assert!(!lex.is_paired());
        assert_eq!(lex.train_words(Pole::Negative), vec!["he"]);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(parse("a\tneutral\t\ttrain\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("a\tpositive\t\tvalidate\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse("a\tpositive\ttrain\n"), Err(Error::Parse { .. })));
        assert!(matches!(parse("a\tpositive\tx\ttrain\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn rejects_incomplete_pairs_and_empty_splits() {
        // Pair with two positives.
        assert!(parse("a\tpositive\t1\ttrain\nb\tpositive\t1\ttrain\nc\tnegative\t\ttest\n").is_err());
        // Pair missing its negative.
        assert!(parse("a\tpositive\t1\ttrain\nc\tnegative\t\ttest\n").is_err());
        // No test words.
        assert!(parse("a\tpositive\t1\ttrain\nb\tnegative\t1\ttrain\n").is_err());
        // Duplicate test word.
        assert!(parse("a\tpositive\t\ttrain\nb\tnegative\t\ttest\nb\tnegative\t\ttest\n").is_err());
    }

    #[test]
    fn repeated_training_words_are_allowed() {
        let lex = parse(
            "wealth\tpositive\t1\ttrain\npoverty\tnegative\t1\ttrain\n\
             affluence\tpositive\t2\ttrain\npoverty\tnegative\t2\ttrain\nrich\tpositive\t\ttest\n",
        )
        .unwrap();
        assert_eq!(lex.train_words(Pole::Negative), vec!["poverty", "poverty"]);
        assert_eq!(lex.pairs().len(), 2);
    }
}
