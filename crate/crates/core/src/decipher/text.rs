/// Corpus normalization: optional lowercasing, whitespace runs collapsed to
/// one space, everything outside the whitelist dropped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TextNormalizer {
    pub lowercase: bool,
    /// Allowed characters besides the space.
    pub whitelist: Vec<char>,
}

impl Default for TextNormalizer {
    fn default() -> Self {
        Self {
            lowercase: true,
            whitelist: ('a'..='z').collect(),
        }
    }
}

impl TextNormalizer {
    pub fn normalize(&self, text: &str) -> Vec<char> {
        let mut out = Vec::with_capacity(text.len());
        let mut pending_space = false;
        for ch in text.chars() {
            if ch.is_whitespace() {
                pending_space = !out.is_empty();
                continue;
            }
            let lowered = if self.lowercase {
                ch.to_lowercase().next().unwrap_or(ch)
            } else {
                ch
            };
            if !self.whitelist.contains(&lowered) {
                continue;
            }
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(lowered);
        }
        out
    }

    /// The full symbol set: the whitelist plus the space, sorted.
    pub fn alphabet(&self) -> Vec<char> {
        let mut a = self.whitelist.clone();
        a.push(' ');
        a.sort_unstable();
        a.dedup();
        a
    }
}
