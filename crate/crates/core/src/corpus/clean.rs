/// Strips `[...]` metadata segments and flattens the text onto one line.
///
/// Innermost bracket pairs are removed repeatedly until none remain, so
/// nested tags and tags broken across lines are removed as well. Unmatched
/// brackets are kept. Whitespace runs (including newlines) collapse to one
/// space and the result is trimmed. The function is idempotent.
pub fn clean_lyrics(raw: &str) -> String {
    let mut text: String = raw
        .chars()
        .map(|c| if c.is_whitespace() { ' ' } else { c })
        .collect();
    loop {
        let stripped = strip_innermost_brackets(&text);
        if stripped.len() == text.len() {
            break;
        }
        text = stripped;
    }
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

// Removes every `[` ... `]` span that contains no other bracket.
fn strip_innermost_brackets(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut open: Option<usize> = None;
    for c in text.chars() {
        match c {
            '[' => {
                open = Some(out.len());
                out.push(c);
            }
            ']' => match open.take() {
                Some(start) => {
                    out.truncate(start);
                    out.push(' ');
                }
                None => out.push(c),
            },
            _ => out.push(c),
        }
    }
    out
}

/// Number of maximal whitespace-delimited tokens.
pub fn word_count(lyrics: &str) -> usize {
    lyrics.split_whitespace().count()
}
