//! Cue taxonomy and the configurable rule set.
//!
//! Rules live in a TOML document, one `[[rules]]` record per rule:
//!
//! ```toml
//! [[rules]]
//! id = "it-click-target"            # unique within the file
//! category = "interaction_trigger"  # snake_case; unknown names become
//!                                   # custom categories, the taxonomy is
//!                                   # open for extension
//! pattern = '\b(click|tap)\b'       # regex, compiled case-insensitively
//! description = "why this rule exists"
//! ```
//!
//! The format is stable across versions; the built-in default set is itself
//! parsed from this format at startup.

use std::fmt;
use std::path::Path;

use regex::{Regex, RegexBuilder};
use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Functional-intent categories for action-oriented cues. The four built-in
/// categories cover what injected instructions ask an agent to do; rule files
/// may introduce further categories without code changes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CueCategory {
    InteractionTrigger,
    CredentialRequest,
    LinkInvitation,
    ControlOverride,
    Custom(String),
}

impl CueCategory {
    pub fn as_str(&self) -> &str {
        match self {
            CueCategory::InteractionTrigger => "interaction_trigger",
            CueCategory::CredentialRequest => "credential_request",
            CueCategory::LinkInvitation => "link_invitation",
            CueCategory::ControlOverride => "control_override",
            CueCategory::Custom(name) => name,
        }
    }

    pub fn builtin() -> [CueCategory; 4] {
        [
            CueCategory::InteractionTrigger,
            CueCategory::CredentialRequest,
            CueCategory::LinkInvitation,
            CueCategory::ControlOverride,
        ]
    }
}

impl From<&str> for CueCategory {
    fn from(value: &str) -> Self {
        match value {
            "interaction_trigger" => CueCategory::InteractionTrigger,
            "credential_request" => CueCategory::CredentialRequest,
            "link_invitation" => CueCategory::LinkInvitation,
            "control_override" => CueCategory::ControlOverride,
            other => CueCategory::Custom(other.to_string()),
        }
    }
}

impl fmt::Display for CueCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for CueCategory {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CueCategory {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(CueCategory::from(s.as_str()))
    }
}

/// One compiled matching rule.
#[derive(Debug, Clone)]
pub struct PatternRule {
    pub id: String,
    pub category: CueCategory,
    pub pattern: String,
    pub description: String,
    regex: Regex,
}

impl PatternRule {
    pub fn new(
        id: &str,
        category: CueCategory,
        pattern: &str,
        description: &str,
    ) -> Result<Self> {
        if id.trim().is_empty() {
            return Err(Error::RuleConfig {
                rule_id: None,
                message: "rule id must be non-empty".into(),
            });
        }
        let regex = RegexBuilder::new(pattern)
            .case_insensitive(true)
            .build()
            .map_err(|e| Error::RuleConfig {
                rule_id: Some(id.to_string()),
                message: format!("pattern does not compile: {e}"),
            })?;
        Ok(Self {
            id: id.to_string(),
            category,
            pattern: pattern.to_string(),
            description: description.to_string(),
            regex,
        })
    }

    pub fn regex(&self) -> &Regex {
        &self.regex
    }
}

/// Validated, id-unique collection of rules.
#[derive(Debug, Clone)]
pub struct RuleSet {
    rules: Vec<PatternRule>,
}

impl RuleSet {
    pub fn new(rules: Vec<PatternRule>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for rule in &rules {
            if !seen.insert(rule.id.clone()) {
                return Err(Error::RuleConfig {
                    rule_id: Some(rule.id.clone()),
                    message: "duplicate rule id".into(),
                });
            }
        }
        Ok(Self { rules })
    }

    /// The shipped default set. Category semantics are fixed by the taxonomy;
    /// the lexical realizations here are a conservative starting point and
    /// fully replaceable through a rule file.
    pub fn default_rules() -> Self {
        parse_ruleset(DEFAULT_RULES_TOML).expect("built-in rule set must parse")
    }

    pub fn iter(&self) -> impl Iterator<Item = &PatternRule> {
        self.rules.iter()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// A new set with one rule appended; fails on id collision.
    pub fn with_rule(&self, rule: PatternRule) -> Result<Self> {
        let mut rules = self.rules.clone();
        rules.push(rule);
        Self::new(rules)
    }

    pub fn categories(&self) -> Vec<CueCategory> {
        let mut cats = Vec::new();
        for rule in &self.rules {
            if !cats.contains(&rule.category) {
                cats.push(rule.category.clone());
            }
        }
        cats
    }
}

#[derive(Deserialize)]
struct RuleFile {
    #[serde(default)]
    rules: Vec<RuleRecord>,
}

#[derive(Deserialize)]
struct RuleRecord {
    id: String,
    category: String,
    pattern: String,
    #[serde(default)]
    description: String,
}

/// Parse and validate a rule document from TOML text.
pub fn parse_ruleset(text: &str) -> Result<RuleSet> {
    let file: RuleFile = toml::from_str(text).map_err(|e| Error::RuleConfig {
        rule_id: None,
        message: format!("rule file does not parse: {e}"),
    })?;
    let mut rules = Vec::with_capacity(file.rules.len());
    for record in file.rules {
        rules.push(PatternRule::new(
            &record.id,
            CueCategory::from(record.category.as_str()),
            &record.pattern,
            &record.description,
        )?);
    }
    RuleSet::new(rules)
}

/// Load a rule file from disk.
pub fn load_ruleset(path: &Path) -> Result<RuleSet> {
    let text = std::fs::read_to_string(path)?;
    parse_ruleset(&text)
}

/// The built-in defaults, shipped in the same format user files use.
///
/// Interaction triggers require an imperative verb plus a directive object so
/// ordinary commerce buttons ("Buy Now") do not fire; credential rules pair a
/// request verb with a secret noun; link rules match URL schemes and
/// navigation phrasing; override rules match instruction displacement.
pub const DEFAULT_RULES_TOML: &str = r#"
[[rules]]
id = "it-click-target"
category = "interaction_trigger"
pattern = '\b(click|tap|press)\b[^\n]{0,40}\b(here|below|this link|the link|the button|that button)\b'
description = "imperative click/tap/press aimed at a directive target"

[[rules]]
id = "it-open-target"
category = "interaction_trigger"
pattern = '\b(open|follow|select)\b[^\n]{0,40}\b(the link|this link|the button|link below|below|here)\b'
description = "imperative open/follow/select aimed at a directive target"

[[rules]]
id = "it-urgent-action"
category = "interaction_trigger"
pattern = '\b(click|tap|press|open)\b[^\n]{0,30}\b(now|immediately|to continue|to proceed|to verify)\b'
description = "interaction verb bound to urgency or continuation phrasing"

[[rules]]
id = "cr-enter-secret"
category = "credential_request"
pattern = '\b(enter|provide|type|input|submit|confirm|re-?enter)\b[^\n]{0,40}\b(password|passcode|passphrase|credentials?|verification code|security code|2fa code|one-?time code|otp|pin|ssn|card number)\b'
description = "request verb followed by a credential noun"

[[rules]]
id = "cr-secret-prompt"
category = "credential_request"
pattern = '\b(password|passcode|verification code|security code|credentials?)\b[^\n]{0,40}\b(required|needed|below|here|to continue|to verify|to proceed)\b'
description = "credential noun framed as required input"

[[rules]]
id = "cr-verify-identity"
category = "credential_request"
pattern = '\b(verify|confirm)\b[^\n]{0,30}\byour\b[^\n]{0,30}\b(identity|account|login|password)\b'
description = "identity re-verification phrasing used to harvest logins"

[[rules]]
id = "li-url"
category = "link_invitation"
pattern = '\bhttps?://[^\s]+'
description = "explicit URL scheme rendered into page content"

[[rules]]
id = "li-visit"
category = "link_invitation"
pattern = '\b(visit|go to|navigate to|browse to)\b[^\n]{0,40}(\bwww\.|https?://|[^\s]+\.(com|net|org|io|xyz)\b)'
description = "navigation verb pointing at a URL-like token"

[[rules]]
id = "li-follow-link"
category = "link_invitation"
pattern = '\b(click|follow|open|use)\b[^\n]{0,20}\b(the |this )?link\b'
description = "direct link-following invitation"

[[rules]]
id = "co-ignore-prior"
category = "control_override"
pattern = '''\b(ignore|disregard|forget|skip)\b[^\n]{0,30}\b(previous|prior|above|earlier|all other|the user'?s?)\b[^\n]{0,25}\b(instructions?|prompts?|tasks?|directions?|requests?)\b'''
description = "instruction displacement: dismiss what came before"

[[rules]]
id = "co-new-task"
category = "control_override"
pattern = '\b(your (new|real|actual|true) (task|goal|objective|instructions?)|you must now|from now on|new instructions?:)\b'
description = "instruction displacement: assert a replacement task"

[[rules]]
id = "co-override"
category = "control_override"
pattern = '\b(override|overrule|replace)\b[^\n]{0,30}\b(instructions?|the task|user intent|system prompt)\b'
description = "explicit override of agent instructions"

[[rules]]
id = "co-instead"
category = "control_override"
pattern = '''\binstead of\b[^\n]{0,40}\b(the (original|user'?s?) (task|request|instructions?)|completing|doing what)\b'''
description = "redirection away from the original task"
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_set_has_three_rules_per_builtin_category() {
        let rules = RuleSet::default_rules();
        for cat in CueCategory::builtin() {
            let n = rules.iter().filter(|r| r.category == cat).count();
            assert!(n >= 3, "category {cat} has only {n} rules");
        }
    }

    #[test]
    fn duplicate_id_is_a_configuration_error() {
        let text = r#"
[[rules]]
id = "dup"
category = "link_invitation"
pattern = 'a'

[[rules]]
id = "dup"
category = "link_invitation"
pattern = 'b'
"#;
        match parse_ruleset(text) {
            Err(Error::RuleConfig { rule_id, .. }) => assert_eq!(rule_id.as_deref(), Some("dup")),
            other => panic!("expected RuleConfig error, got {other:?}"),
        }
    }

    #[test]
    fn non_compiling_pattern_names_the_rule() {
        let text = r#"
[[rules]]
id = "bad-regex"
category = "control_override"
pattern = '(unclosed'
"#;
        match parse_ruleset(text) {
            Err(Error::RuleConfig { rule_id, .. }) => {
                assert_eq!(rule_id.as_deref(), Some("bad-regex"))
            }
            other => panic!("expected RuleConfig error, got {other:?}"),
        }
    }

    #[test]
    fn custom_category_roundtrips_through_the_loader() {
        let text = r#"
[[rules]]
id = "pr-redirect"
category = "payment_redirect"
pattern = 'redirect (your )?payment'
description = "new category beyond the built-in taxonomy"
"#;
        let rules = parse_ruleset(text).unwrap();
        assert_eq!(rules.len(), 1);
        let rule = rules.iter().next().unwrap();
        assert_eq!(rule.category, CueCategory::Custom("payment_redirect".into()));
        assert_eq!(rule.category.as_str(), "payment_redirect");
    }

    #[test]
    fn malformed_toml_is_reported() {
        assert!(matches!(
            parse_ruleset("[[rules]\nid = oops"),
            Err(Error::RuleConfig { .. })
        ));
    }

    #[test]
    fn loader_reads_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rules.toml");
        std::fs::write(&path, DEFAULT_RULES_TOML).unwrap();
        let rules = load_ruleset(&path).unwrap();
        assert_eq!(rules.len(), RuleSet::default_rules().len());
    }
}
