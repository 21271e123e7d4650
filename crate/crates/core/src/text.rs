//! Small text helpers shared across stages.

use sha2::{Digest, Sha256};

/// Ideographic and kana scripts, which are written without spaces.
pub fn is_unsegmented_char(ch: char) -> bool {
    matches!(ch as u32,
        0x3040..=0x30FF      // hiragana, katakana
        | 0x3400..=0x4DBF    // CJK ext A
        | 0x4E00..=0x9FFF    // CJK unified
        | 0xF900..=0xFAFF    // CJK compatibility
        | 0xFF66..=0xFF9D    // halfwidth katakana
        | 0x20000..=0x2FA1F)
}

/// Collapses every whitespace run to one space and trims both ends.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lowercase hex SHA-256 of the UTF-8 bytes of `text`.
pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Normalized form used to compare terms.
pub fn term_key(term: &str) -> String {
    collapse_whitespace(term).to_lowercase()
}
