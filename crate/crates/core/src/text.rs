//! Text normalization helpers shared by the parser and the form composer.

/// Number of leading words used when deriving an item id from its text.
pub const SLUG_WORDS: usize = 6;

/// Normalizes checklist text for duplicate detection: lowercase, collapse
/// whitespace, strip terminal punctuation.
pub fn normalize(text: &str) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    collapsed
        .trim_end_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .to_string()
}

/// Builds a slug out of the first `max_words` words of `text`.
///
/// Words are lowercased and stripped of anything outside `[a-z0-9]`; words
/// that end up empty are skipped. Returns an empty string when nothing
/// survives.
pub fn slugify(text: &str, max_words: usize) -> String {
    text.split_whitespace()
        .map(|w| {
            w.chars()
                .flat_map(char::to_lowercase)
                .filter(char::is_ascii_alphanumeric)
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
        .take(max_words)
        .collect::<Vec<_>>()
        .join("-")
}

/// True when `s` is a non-empty run of `[a-z0-9-]`.
pub fn is_slug(s: &str) -> bool {
    !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_collapses_and_strips() {
        assert_eq!(
            normalize("  States a   clear\tresearch question. "),
            "states a clear research question"
        );
        assert_eq!(normalize("Uses random assignment?!"), "uses random assignment");
        assert_eq!(normalize(""), "");
    }

    #[test]
    fn slug_takes_six_words() {
        assert_eq!(slugify("uses random assignment", SLUG_WORDS), "uses-random-assignment");
        assert_eq!(
            slugify("one two three four five six seven", SLUG_WORDS),
            "one-two-three-four-five-six"
        );
        assert_eq!(
            slugify("Discusses (construct) validity!", SLUG_WORDS),
            "discusses-construct-validity"
        );
        assert_eq!(slugify("?! ...", SLUG_WORDS), "");
    }

    #[test]
    fn slug_charset() {
        assert!(is_slug("case-study"));
        assert!(is_slug("ia-1"));
        assert!(!is_slug("Case"));
        assert!(!is_slug(""));
        assert!(!is_slug("a_b"));
    }
}
