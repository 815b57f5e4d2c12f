//! Lexicon-based word-category scores and their linear mapping onto Big5
//! traits and facets.
//!
//! The shipped lexicon (68 categories) and trait mapping are illustrative
//! stand-ins; both can be replaced from files at runtime.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PersonalityError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed lexicon line {line}: {reason}")]
    MalformedLexicon { line: usize, reason: String },
    #[error("lexicon category {0} has no terms")]
    EmptyCategory(String),
    #[error("malformed trait mapping: {0}")]
    MalformedMapping(String),
    #[error("trait mapping is missing trait {0}")]
    MissingTrait(String),
    #[error("trait mapping references unknown category {0}")]
    UnknownCategory(String),
}

impl PersonalityError {
    pub fn code(&self) -> &'static str {
        match self {
            PersonalityError::Io { .. } => "Io",
            PersonalityError::MalformedLexicon { .. } => "MalformedLexicon",
            PersonalityError::EmptyCategory(_) => "EmptyCategory",
            PersonalityError::MalformedMapping(_) => "MalformedMapping",
            PersonalityError::MissingTrait(_) => "MissingTrait",
            PersonalityError::UnknownCategory(_) => "UnknownCategory",
        }
    }
}

/// The five Big5 dimensions, in output order.
pub const BIG5: [&str; 5] = [
    "openness",
    "conscientiousness",
    "extraversion",
    "agreeableness",
    "neuroticism",
];

/// Six facets per dimension, grouped in [`BIG5`] order.
pub const FACETS: [&str; 30] = [
    "adventurousness",
    "artistic_interests",
    "emotionality",
    "imagination",
    "intellect",
    "liberalism",
    "achievement_striving",
    "cautiousness",
    "dutifulness",
    "orderliness",
    "self_discipline",
    "self_efficacy",
    "activity_level",
    "assertiveness",
    "cheerfulness",
    "excitement_seeking",
    "friendliness",
    "gregariousness",
    "altruism",
    "cooperation",
    "modesty",
    "morality",
    "sympathy",
    "trust",
    "anger",
    "anxiety",
    "depression",
    "immoderation",
    "self_consciousness",
    "vulnerability",
];

const DEFAULT_LEXICON: &str = include_str!("../assets/lexicon.txt");

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Lowercase word tokens. Letters, digits, `@` and `#` are token characters;
/// an apostrophe survives only between two alphanumerics (`can't`).
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() || c == '@' || c == '#' {
            cur.extend(c.to_lowercase());
        } else if is_apostrophe(c)
            && !cur.is_empty()
            && i > 0
            && chars[i - 1].is_alphanumeric()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
        {
            cur.push('\'');
        } else if !cur.is_empty() {
            tokens.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

// ---------------------------------------------------------------------------
// Lexicon
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Category {
    pub name: String,
    /// Literal terms.
    pub terms: BTreeSet<String>,
    /// Prefix patterns, stored without the trailing `*`.
    pub prefixes: BTreeSet<String>,
}

impl Category {
    pub fn matches(&self, token: &str) -> bool {
        self.terms.contains(token) || self.prefixes.iter().any(|p| token.starts_with(p.as_str()))
    }

    pub fn term_count(&self) -> usize {
        self.terms.len() + self.prefixes.len()
    }
}

/// Word categories in file order, with a lookup index for fast matching.
#[derive(Clone, Debug)]
pub struct Lexicon {
    categories: Vec<Category>,
    exact: HashMap<String, Vec<usize>>,
    prefix: HashMap<String, Vec<usize>>,
    max_prefix_chars: usize,
}

impl PartialEq for Lexicon {
    fn eq(&self, other: &Self) -> bool {
        self.categories == other.categories
    }
}

impl Lexicon {
    pub fn from_categories(categories: Vec<Category>) -> Result<Self, PersonalityError> {
        let mut exact: HashMap<String, Vec<usize>> = HashMap::new();
        let mut prefix: HashMap<String, Vec<usize>> = HashMap::new();
        let mut max_prefix_chars = 0;
        for (i, c) in categories.iter().enumerate() {
            if c.term_count() == 0 {
                return Err(PersonalityError::EmptyCategory(c.name.clone()));
            }
            for t in &c.terms {
                exact.entry(t.clone()).or_default().push(i);
            }
            for p in &c.prefixes {
                max_prefix_chars = max_prefix_chars.max(p.chars().count());
                prefix.entry(p.clone()).or_default().push(i);
            }
        }
        Ok(Lexicon { categories, exact, prefix, max_prefix_chars })
    }

    /// Parses the text lexicon format: `name: term, term*, ...` per line.
    pub fn parse(text: &str) -> Result<Self, PersonalityError> {
        let mut order: Vec<String> = Vec::new();
        let mut cats: HashMap<String, Category> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = i + 1;
            let (name, terms) = line.split_once(':').ok_or_else(|| PersonalityError::MalformedLexicon {
                line: lineno,
                reason: "expected `name: term, ...`".into(),
            })?;
            let name = name.trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(PersonalityError::MalformedLexicon {
                    line: lineno,
                    reason: format!("invalid category name {name:?}"),
                });
            }
            let cat = cats.entry(name.to_string()).or_insert_with(|| {
                order.push(name.to_string());
                Category {
                    name: name.to_string(),
                    terms: BTreeSet::new(),
                    prefixes: BTreeSet::new(),
                }
            });
            for term in terms.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let term = term.to_lowercase();
                match term.strip_suffix('*') {
                    Some("") => {
                        return Err(PersonalityError::MalformedLexicon {
                            line: lineno,
                            reason: "bare `*` pattern".into(),
                        })
                    }
                    Some(p) => {
                        cat.prefixes.insert(p.to_string());
                    }
                    None => {
                        cat.terms.insert(term);
                    }
                }
            }
        }
        let categories = order.into_iter().map(|n| cats.remove(&n).expect("category registered")).collect();
        Lexicon::from_categories(categories)
    }

    pub fn load(path: &Path) -> Result<Self, PersonalityError> {
        let text = fs::read_to_string(path).map_err(|source| PersonalityError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Lexicon::parse(&text)
    }

    /// The bundled 68-category lexicon.
    pub fn builtin() -> Self {
        Lexicon::parse(DEFAULT_LEXICON).expect("bundled lexicon parses")
    }

    pub fn categories(&self) -> &[Category] {
        &self.categories
    }

    pub fn category_count(&self) -> usize {
        self.categories.len()
    }

    pub fn category(&self, name: &str) -> Option<&Category> {
        self.categories.iter().find(|c| c.name == name)
    }

    /// Indices of the categories `token` belongs to, ascending, without repeats.
    pub fn categories_of(&self, token: &str) -> Vec<usize> {
        let mut hits: Vec<usize> = self.exact.get(token).cloned().unwrap_or_default();
        for (n, (end, _)) in token.char_indices().skip(1).chain(std::iter::once((token.len(), ' '))).enumerate() {
            if n >= self.max_prefix_chars {
                break;
            }
            if let Some(cs) = self.prefix.get(&token[..end]) {
                hits.extend_from_slice(cs);
            }
        }
        hits.sort_unstable();
        hits.dedup();
        hits
    }
}

/// Fraction of tokens falling into each lexicon category.
#[derive(Clone, Debug, PartialEq)]
pub struct CategoryScores {
    /// `(category, score)` in lexicon order.
    pub scores: Vec<(String, f64)>,
    pub token_total: usize,
}

impl CategoryScores {
    pub fn get(&self, category: &str) -> Option<f64> {
        self.scores.iter().find(|(n, _)| n == category).map(|(_, v)| *v)
    }
}

/// `score(c) = |{t : t matches c}| / max(1, |tokens|)` for every category.
pub fn score_categories<S: AsRef<str>>(tokens: &[S], lexicon: &Lexicon) -> CategoryScores {
    let mut counts = vec![0usize; lexicon.category_count()];
    let mut memo: HashMap<&str, Vec<usize>> = HashMap::new();
    for t in tokens {
        let t = t.as_ref();
        let cats = memo.entry(t).or_insert_with(|| lexicon.categories_of(t));
        for &c in cats.iter() {
            counts[c] += 1;
        }
    }
    let denom = tokens.len().max(1) as f64;
    CategoryScores {
        scores: lexicon
            .categories
            .iter()
            .zip(counts)
            .map(|(c, n)| (c.name.clone(), n as f64 / denom))
            .collect(),
        token_total: tokens.len(),
    }
}

// ---------------------------------------------------------------------------
// Traits
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraitWeights {
    pub intercept: f64,
    #[serde(default)]
    pub weights: BTreeMap<String, f64>,
}

/// Linear map from category scores to each of the 35 trait and facet outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, TraitWeights>", into = "BTreeMap<String, TraitWeights>")]
pub struct TraitMapping {
    traits: BTreeMap<String, TraitWeights>,
}

impl TryFrom<BTreeMap<String, TraitWeights>> for TraitMapping {
    type Error = PersonalityError;

    fn try_from(traits: BTreeMap<String, TraitWeights>) -> Result<Self, Self::Error> {
        for name in BIG5.iter().chain(FACETS.iter()) {
            if !traits.contains_key(*name) {
                return Err(PersonalityError::MissingTrait(name.to_string()));
            }
        }
        if let Some(extra) = traits.keys().find(|k| !BIG5.contains(&k.as_str()) && !FACETS.contains(&k.as_str())) {
            return Err(PersonalityError::MalformedMapping(format!("unknown trait {extra}")));
        }
        for (name, t) in &traits {
            if !t.intercept.is_finite() || t.weights.values().any(|w| !w.is_finite()) {
                return Err(PersonalityError::MalformedMapping(format!("non-finite coefficient in {name}")));
            }
        }
        Ok(TraitMapping { traits })
    }
}

impl From<TraitMapping> for BTreeMap<String, TraitWeights> {
    fn from(m: TraitMapping) -> Self {
        m.traits
    }
}

impl TraitMapping {
    pub fn new(traits: BTreeMap<String, TraitWeights>) -> Result<Self, PersonalityError> {
        TraitMapping::try_from(traits)
    }

    pub fn from_json(text: &str) -> Result<Self, PersonalityError> {
        serde_json::from_str(text).map_err(|e| PersonalityError::MalformedMapping(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PersonalityError> {
        let text = fs::read_to_string(path).map_err(|source| PersonalityError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        TraitMapping::from_json(&text)
    }

    pub fn get(&self, name: &str) -> Option<&TraitWeights> {
        self.traits.get(name)
    }

    /// Fails with `UnknownCategory` if a weight names a category the lexicon lacks.
    pub fn validate(&self, lexicon: &Lexicon) -> Result<(), PersonalityError> {
        for t in self.traits.values() {
            for c in t.weights.keys() {
                if lexicon.category(c).is_none() {
                    return Err(PersonalityError::UnknownCategory(c.clone()));
                }
            }
        }
        Ok(())
    }

    /// Bundled illustrative coefficients over the bundled lexicon's categories.
    pub fn builtin() -> Self {
        let table: [(&str, f64, &[(&str, f64)]); 35] = [
            ("openness", 0.5, &[("insight", 2.0), ("tentative", 1.0), ("articles", 0.5), ("first_person_singular", -1.0)]),
            ("conscientiousness", 0.5, &[("achievement", 2.0), ("negations", -1.5), ("swear_words", -2.0), ("job", 1.0)]),
            ("extraversion", 0.5, &[("social_processes", 1.5), ("friends", 2.0), ("positive_emotions", 1.0), ("leisure", 1.0)]),
            ("agreeableness", 0.5, &[("positive_emotions", 1.5), ("anger", -2.0), ("swear_words", -2.0), ("family", 1.0)]),
            ("neuroticism", 0.5, &[("anxiety", 2.5), ("sadness", 2.0), ("negative_emotions", 1.5), ("first_person_singular", 1.0)]),
            ("adventurousness", 0.5, &[("motion", 1.5), ("leisure", 1.0), ("space", 0.5)]),
            ("artistic_interests", 0.5, &[("music", 2.0), ("seeing", 1.0), ("tv", 0.5)]),
            ("emotionality", 0.5, &[("affect", 2.0), ("feeling", 1.0)]),
            ("imagination", 0.5, &[("future", 1.0), ("tentative", 1.0), ("metaphysical", 1.0)]),
            ("intellect", 0.5, &[("insight", 2.0), ("cognitive_processes", 1.0), ("school", 0.5)]),
            ("liberalism", 0.5, &[("religion", -2.0), ("exclusive", 1.0), ("negations", 0.5)]),
            ("achievement_striving", 0.5, &[("achievement", 2.5), ("occupation", 1.0)]),
            ("cautiousness", 0.5, &[("inhibition", 2.0), ("tentative", 1.0), ("certainty", -1.0)]),
            ("dutifulness", 0.5, &[("discrepancy", 1.0), ("job", 1.0), ("swear_words", -1.5)]),
            ("orderliness", 0.5, &[("time", 1.0), ("numbers", 1.0), ("nonfluencies", -1.0)]),
            ("self_discipline", 0.5, &[("achievement", 1.5), ("job", 1.0), ("sleeping", -1.0)]),
            ("self_efficacy", 0.5, &[("certainty", 1.5), ("optimism", 1.5), ("anxiety", -1.5)]),
            ("activity_level", 0.5, &[("motion", 2.0), ("sports", 1.0), ("present", 0.5)]),
            ("assertiveness", 0.5, &[("certainty", 1.5), ("second_person", 1.0), ("tentative", -1.5)]),
            ("cheerfulness", 0.5, &[("positive_feelings", 2.0), ("positive_emotions", 1.0), ("sadness", -1.5)]),
            ("excitement_seeking", 0.5, &[("leisure", 1.5), ("sexuality", 1.0), ("inhibition", -1.0)]),
            ("friendliness", 0.5, &[("friends", 2.0), ("assents", 1.0), ("anger", -1.0)]),
            ("gregariousness", 0.5, &[("social_processes", 2.0), ("first_person_plural", 1.5)]),
            ("altruism", 0.5, &[("other_references", 1.5), ("family", 1.0), ("first_person_singular", -1.0)]),
            ("cooperation", 0.5, &[("inclusive", 1.5), ("anger", -1.5), ("negations", -0.5)]),
            ("modesty", 0.5, &[("first_person_singular", -1.5), ("tentative", 1.0), ("achievement", -0.5)]),
            ("morality", 0.5, &[("religion", 1.0), ("swear_words", -2.0), ("death", -0.5)]),
            ("sympathy", 0.5, &[("sadness", 1.0), ("family", 1.0), ("humans", 1.0)]),
            ("trust", 0.5, &[("positive_emotions", 1.0), ("friends", 1.0), ("anxiety", -1.5)]),
            ("anger", 0.5, &[("anger", 2.5), ("swear_words", 1.5)]),
            ("anxiety", 0.5, &[("anxiety", 2.5), ("tentative", 1.0)]),
            ("depression", 0.5, &[("sadness", 2.5), ("death", 1.0), ("first_person_singular", 1.0)]),
            ("immoderation", 0.5, &[("eating", 1.5), ("swear_words", 1.0), ("inhibition", -1.0)]),
            ("self_consciousness", 0.5, &[("first_person_singular", 1.5), ("nonfluencies", 1.0), ("anxiety", 1.0)]),
            ("vulnerability", 0.5, &[("anxiety", 1.5), ("physical_states", 1.0), ("optimism", -1.0)]),
        ];
        let traits = table
            .iter()
            .map(|(name, intercept, ws)| {
                let weights = ws
                    .iter()
                    .filter(|(_, w)| *w != 0.0)
                    .map(|(c, w)| (c.to_string(), *w))
                    .collect();
                (name.to_string(), TraitWeights { intercept: *intercept, weights })
            })
            .collect();
        TraitMapping::new(traits).expect("bundled trait mapping is complete")
    }
}

/// Big5 dimensions and their facets, each in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct TraitScores {
    pub big5: Vec<(String, f64)>,
    pub facets: Vec<(String, f64)>,
}

impl TraitScores {
    /// All 35 values: Big5 first, then facets.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.big5.iter().chain(&self.facets).map(|(_, v)| *v)
    }
}

/// `output = intercept + Σ weight_c × score_c` for each trait and facet.
pub fn derive_traits(scores: &CategoryScores, mapping: &TraitMapping) -> Result<TraitScores, PersonalityError> {
    let lookup: HashMap<&str, f64> = scores.scores.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    let eval = |name: &str| -> Result<(String, f64), PersonalityError> {
        let t = mapping.get(name).ok_or_else(|| PersonalityError::MissingTrait(name.to_string()))?;
        let mut acc = t.intercept;
        for (c, w) in &t.weights {
            let s = lookup.get(c.as_str()).ok_or_else(|| PersonalityError::UnknownCategory(c.clone()))?;
            acc += w * s;
        }
        Ok((name.to_string(), acc))
    };
    Ok(TraitScores {
        big5: BIG5.iter().map(|n| eval(n)).collect::<Result<_, _>>()?,
        facets: FACETS.iter().map(|n| eval(n)).collect::<Result<_, _>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_cases() {
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("I can't stop CRYING"), ["i", "can't", "stop", "crying"]);
        assert_eq!(tokenize("@Bob: see #BirdFlu!!"), ["@bob", "see", "#birdflu"]);
        assert_eq!(tokenize("'quoted' rock'n roll '"), ["quoted", "rock'n", "roll"]);
        assert_eq!(tokenize("Ünïcode wörds"), ["ünïcode", "wörds"]);
    }

    #[test]
    fn tokenize_paragraph_count() {
        // 37 words counted by hand.
        let para = "Officials confirmed today that a new strain of avian influenza was found \
                    near the bay. Residents shouldn't panic, but they're asked to report sick \
                    birds and to wash their hands often, said the county's local health director.";
        assert_eq!(tokenize(para).len(), 37);
    }

    #[test]
    fn parse_lexicon_basics() {
        let lex = Lexicon::parse("# c\nsadness: cry, cries, crying\n\nmisc: cry, understand*\n").unwrap();
        assert_eq!(lex.category_count(), 2);
        assert_eq!(lex.category("sadness").unwrap().term_count(), 3);
        assert!(lex.category("misc").unwrap().matches("cry"));
        assert!(lex.category("misc").unwrap().matches("understanding"));
        assert!(lex.category("misc").unwrap().matches("understand"));
        assert_eq!(lex.categories_of("cry"), vec![0, 1]);
        assert_eq!(lex.categories_of("understanding"), vec![1]);
        assert!(lex.categories_of("understan").is_empty());
    }

    #[test]
    fn lexicon_dedupes_terms() {
        let lex = Lexicon::parse("a: x, x, X\na: x, y*\n").unwrap();
        assert_eq!(lex.category_count(), 1);
        assert_eq!(lex.category("a").unwrap().term_count(), 2);
    }

    #[test]
    fn lexicon_errors() {
        assert!(matches!(Lexicon::parse("no colon here"), Err(PersonalityError::MalformedLexicon { line: 1, .. })));
        assert!(matches!(Lexicon::parse("a: x\nb:  ,\n"), Err(PersonalityError::EmptyCategory(n)) if n == "b"));
        assert!(matches!(Lexicon::parse("a: *"), Err(PersonalityError::MalformedLexicon { .. })));
    }

    #[test]
    fn builtin_has_68_categories() {
        assert_eq!(Lexicon::builtin().category_count(), 68);
        TraitMapping::builtin().validate(&Lexicon::builtin()).unwrap();
    }

    #[test]
    fn score_arithmetic() {
        let lex = Lexicon::parse("sadness: cry, sad\nother: zzz").unwrap();
        let toks = tokenize("I cry and I am sad but fine now ok");
        assert_eq!(toks.len(), 10);
        let s = score_categories(&toks, &lex);
        assert_eq!(s.get("sadness"), Some(0.2));
        assert_eq!(s.get("other"), Some(0.0));
        assert_eq!(s.token_total, 10);
    }

    #[test]
    fn empty_tokens_score_zero() {
        let lex = Lexicon::builtin();
        let s = score_categories::<&str>(&[], &lex);
        assert_eq!(s.token_total, 0);
        assert_eq!(s.scores.len(), 68);
        assert!(s.scores.iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn zero_scores_give_intercepts() {
        let lex = Lexicon::builtin();
        let m = TraitMapping::builtin();
        let t = derive_traits(&score_categories::<&str>(&[], &lex), &m).unwrap();
        assert_eq!(t.big5.len(), 5);
        assert_eq!(t.facets.len(), 30);
        for (name, v) in t.big5.iter().chain(&t.facets) {
            assert_eq!(*v, m.get(name).unwrap().intercept);
        }
    }

    #[test]
    fn identity_mapping_copies_score() {
        let lex = Lexicon::parse("sadness: cry\nother: x").unwrap();
        let mut traits = BTreeMap::new();
        for n in BIG5.iter().chain(FACETS.iter()) {
            traits.insert(n.to_string(), TraitWeights { intercept: 0.0, weights: BTreeMap::new() });
        }
        traits.get_mut("neuroticism").unwrap().weights.insert("sadness".into(), 1.0);
        let m = TraitMapping::new(traits).unwrap();
        let s = score_categories(&tokenize("cry cry x y"), &lex);
        let t = derive_traits(&s, &m).unwrap();
        assert_eq!(t.big5[4], ("neuroticism".to_string(), 0.5));
    }

    #[test]
    fn mapping_errors() {
        let lex = Lexicon::parse("a: x").unwrap();
        assert!(matches!(TraitMapping::builtin().validate(&lex), Err(PersonalityError::UnknownCategory(_))));
        let s = score_categories(&["x"], &lex);
        assert!(matches!(derive_traits(&s, &TraitMapping::builtin()), Err(PersonalityError::UnknownCategory(_))));
        assert!(matches!(TraitMapping::from_json("{}"), Err(PersonalityError::MalformedMapping(_))));
    }

    #[test]
    fn mapping_json_round_trip() {
        let m = TraitMapping::builtin();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(TraitMapping::from_json(&text).unwrap(), m);
    }
}
