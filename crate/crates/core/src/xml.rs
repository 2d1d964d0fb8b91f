use std::borrow::Cow;

fn is_xml_char(c: char) -> bool {
    matches!(c, '\t' | '\n' | '\r' | '\u{20}'..='\u{D7FF}' | '\u{E000}'..='\u{FFFD}' | '\u{10000}'..)
}

fn escape_impl(text: &str, attr: bool) -> Cow<'_, str> {
    let special = |c: char| match c {
        '&' | '<' | '>' | '"' | '\r' => true,
        '\n' | '\t' => attr,
        c => !is_xml_char(c),
    };
    if !text.chars().any(special) {
        return Cow::Borrowed(text);
    }
    let mut out = String::with_capacity(text.len() + 16);
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\r' => out.push_str("&#13;"),
            '\n' if attr => out.push_str("&#10;"),
            '\t' if attr => out.push_str("&#9;"),
            c if !is_xml_char(c) => out.push('\u{FFFD}'),
            c => out.push(c),
        }
    }
    Cow::Owned(out)
}

/// Escapes `& < > "` (and carriage returns) for text content, replacing
/// characters XML 1.0 cannot carry with U+FFFD.
pub fn escape(text: &str) -> Cow<'_, str> {
    escape_impl(text, false)
}

/// Like [`escape`], also protecting tabs and newlines from attribute-value
/// normalization.
pub fn escape_attr(text: &str) -> Cow<'_, str> {
    escape_impl(text, true)
}
