use crate::language::ScriptClass;

/// Maps a codepoint to the script block it belongs to.
///
/// Digits, punctuation, whitespace, symbols and unlisted blocks map to `None`,
/// including the digits and punctuation that live inside the Devanagari and
/// Thai blocks.
pub fn script_of(c: char) -> Option<ScriptClass> {
    let cp = c as u32;
    match cp {
        0x0041..=0x005A | 0x0061..=0x007A => Some(ScriptClass::Latin),
        0x00AA | 0x00BA => Some(ScriptClass::Latin),
        0x00D7 | 0x00F7 => None,
        0x00C0..=0x024F => Some(ScriptClass::Latin),
        0x1E00..=0x1EFF | 0x2C60..=0x2C7F | 0xA720..=0xA7FF | 0xAB30..=0xAB6F => {
            Some(ScriptClass::Latin)
        }
        0xFF21..=0xFF3A | 0xFF41..=0xFF5A => Some(ScriptClass::Latin),

        0x0482..=0x0489 => None,
        0x0400..=0x052F | 0x1C80..=0x1C8F | 0x2DE0..=0x2DFF | 0xA640..=0xA69F => {
            Some(ScriptClass::Cyrillic)
        }

        0x0964..=0x0970 => None,
        0x0900..=0x097F | 0xA8E0..=0xA8FF => Some(ScriptClass::Devanagari),

        0x0E3F | 0x0E4F..=0x0E5B => None,
        0x0E00..=0x0E7F => Some(ScriptClass::Thai),

        0x1100..=0x11FF | 0x3130..=0x318F | 0xA960..=0xA97F | 0xAC00..=0xD7AF | 0xD7B0..=0xD7FF => {
            Some(ScriptClass::Hangul)
        }

        0x3005 | 0x3007 => Some(ScriptClass::Han),
        0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0x20000..=0x2A6DF
        | 0x2A700..=0x2EBEF
        | 0x2F800..=0x2FA1F
        | 0x30000..=0x3134F => Some(ScriptClass::Han),

        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_examples() {
        assert_eq!(script_of('가'), Some(ScriptClass::Hangul));
        assert_eq!(script_of('ㄱ'), Some(ScriptClass::Hangul));
        assert_eq!(script_of('\u{1100}'), Some(ScriptClass::Hangul));
        assert_eq!(script_of('A'), Some(ScriptClass::Latin));
        assert_eq!(script_of('ß'), Some(ScriptClass::Latin));
        assert_eq!(script_of('ñ'), Some(ScriptClass::Latin));
        assert_eq!(script_of('0'), None);
        assert_eq!(script_of('天'), Some(ScriptClass::Han));
        assert_eq!(script_of('Ж'), Some(ScriptClass::Cyrillic));
        assert_eq!(script_of('ज'), Some(ScriptClass::Devanagari));
        assert_eq!(script_of('ก'), Some(ScriptClass::Thai));
    }

    #[test]
    fn neutral_codepoints() {
        for c in [' ', '\n', '.', '!', '—', '×', '。', '，', '？', '।', '६', '๕', '฿', '-', '\''] {
            assert_eq!(script_of(c), None, "{c:?}");
        }
    }
}
