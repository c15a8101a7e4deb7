//! Text cleansing for posting titles and descriptions.
//!
//! The cleaned form keeps letters, digits and single spaces. A small
//! punctuation set (`.` `,` `'` `-`) survives only between two
//! alphanumeric characters, so contractions, decimals and hyphenated
//! words stay intact while stray punctuation, control characters,
//! decoding artifacts and HTML-entity remnants are dropped. Character
//! case is preserved.

/// Punctuation retained when it sits directly between alphanumerics.
const RETAINED: [char; 4] = ['.', ',', '\'', '-'];

/// Longest run of name characters accepted between `&` and `;` when
/// stripping entity remnants (`&amp;`, `&#39;`, `&#x27;`).
const MAX_ENTITY_NAME: usize = 10;

/// True for characters that may appear in normalized text.
pub fn is_allowed_char(c: char) -> bool {
    c.is_alphanumeric() || c == ' ' || RETAINED.contains(&c)
}

/// Cleans free text into the normalized form used across the corpus.
///
/// Idempotent: applying it to its own output changes nothing. Empty
/// input yields empty output.
pub fn normalize_text(text: &str) -> String {
    let stripped = strip_entities(text);
    let chars: Vec<char> = stripped.chars().collect();
    let mut out = String::with_capacity(stripped.len());
    let mut pending_space = false;
    for (i, &c) in chars.iter().enumerate() {
        let keep = if c.is_alphanumeric() {
            true
        } else if RETAINED.contains(&c) {
            i > 0
                && chars[i - 1].is_alphanumeric()
                && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
        } else {
            false
        };
        if keep {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        } else {
            pending_space = true;
        }
    }
    out
}

/// Removes HTML-entity remnants such as `&amp;` or `&#8211;`.
///
/// A remnant is `&`, up to [`MAX_ENTITY_NAME`] name characters
/// (alphanumeric or `#`), then `;`. Anything else keeps the literal
/// `&`, which the character filter later drops.
fn strip_entities(text: &str) -> String {
    if !text.contains('&') {
        return text.to_string();
    }
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '&' {
            if let Some(end) = entity_end(&chars, i) {
                out.push(' ');
                i = end + 1;
                continue;
            }
        }
        out.push(chars[i]);
        i += 1;
    }
    out
}

fn entity_end(chars: &[char], amp: usize) -> Option<usize> {
    let mut j = amp + 1;
    let mut name_len = 0;
    while j < chars.len() && name_len <= MAX_ENTITY_NAME {
        let c = chars[j];
        if c == ';' {
            return if name_len > 0 { Some(j) } else { None };
        }
        if c.is_ascii_alphanumeric() || c == '#' {
            name_len += 1;
            j += 1;
        } else {
            return None;
        }
    }
    None
}
