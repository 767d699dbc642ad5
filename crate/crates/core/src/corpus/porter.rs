//! The original Porter (1980) suffix-stripping stemmer.
//!
//! Operates on lowercase words. Letters outside `a`-`z` are treated as
//! consonants, the same way the reference implementations treat them.

/// Stem a lowercase word.
pub fn stem(word: &str) -> String {
    let mut w: Vec<char> = word.chars().collect();
    step1a(&mut w);
    step1b(&mut w);
    step1c(&mut w);
    step2(&mut w);
    step3(&mut w);
    step4(&mut w);
    step5a(&mut w);
    step5b(&mut w);
    w.into_iter().collect()
}

fn is_vowel_letter(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Consonant flags for every position; `y` is a consonant at the start of a
/// word or after a vowel.
fn consonant_flags(w: &[char]) -> Vec<bool> {
    let mut flags: Vec<bool> = Vec::with_capacity(w.len());
    for (i, &c) in w.iter().enumerate() {
        let cons = if is_vowel_letter(c) {
            false
        } else if c == 'y' {
            i == 0 || !flags[i - 1]
        } else {
            true
        };
        flags.push(cons);
    }
    flags
}

/// The measure `m` in `[C](VC){m}[V]`.
fn measure(stem: &[char]) -> usize {
    let flags = consonant_flags(stem);
    flags.windows(2).filter(|p| !p[0] && p[1]).count()
}

fn contains_vowel(stem: &[char]) -> bool {
    consonant_flags(stem).iter().any(|c| !c)
}

fn ends_double_consonant(w: &[char]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && consonant_flags(w)[n - 1]
}

/// `*o`: ends consonant-vowel-consonant, last letter not w, x or y.
fn ends_cvc(w: &[char]) -> bool {
    let n = w.len();
    if n < 3 {
        return false;
    }
    let f = consonant_flags(w);
    f[n - 3] && !f[n - 2] && f[n - 1] && !matches!(w[n - 1], 'w' | 'x' | 'y')
}

fn ends_with(w: &[char], suffix: &str) -> bool {
    let n = suffix.chars().count();
    w.len() >= n && w[w.len() - n..].iter().copied().eq(suffix.chars())
}

fn replace_suffix(w: &mut Vec<char>, strip: usize, replacement: &str) {
    w.truncate(w.len() - strip);
    w.extend(replacement.chars());
}

type Condition = fn(&[char]) -> bool;

/// Apply the first rule whose suffix matches. If its condition fails, no
/// later rule is tried.
fn apply_rules(w: &mut Vec<char>, rules: &[(&str, &str, Option<Condition>)]) {
    for &(suffix, replacement, cond) in rules {
        if ends_with(w, suffix) {
            let strip = suffix.len();
            let stem = &w[..w.len() - strip];
            if cond.is_none_or(|c| c(stem)) {
                replace_suffix(w, strip, replacement);
            }
            return;
        }
    }
}

fn m_positive(stem: &[char]) -> bool {
    measure(stem) > 0
}

fn m_gt_1(stem: &[char]) -> bool {
    measure(stem) > 1
}

fn step1a(w: &mut Vec<char>) {
    apply_rules(
        w,
        &[
            ("sses", "ss", None),
            ("ies", "i", None),
            ("ss", "ss", None),
            ("s", "", None),
        ],
    );
}

fn step1b(w: &mut Vec<char>) {
    if ends_with(w, "eed") {
        if measure(&w[..w.len() - 3]) > 0 {
            w.pop();
        }
        return;
    }
    let stripped = ["ed", "ing"]
        .iter()
        .find(|s| ends_with(w, s) && contains_vowel(&w[..w.len() - s.len()]));
    let Some(suffix) = stripped else {
        return;
    };
    w.truncate(w.len() - suffix.len());

    if ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz") {
        w.push('e');
    } else if ends_double_consonant(w) {
        if !matches!(w[w.len() - 1], 'l' | 's' | 'z') {
            w.pop();
        }
    } else if measure(w) == 1 && ends_cvc(w) {
        w.push('e');
    }
}

fn step1c(w: &mut Vec<char>) {
    apply_rules(w, &[("y", "i", Some(contains_vowel))]);
}

fn step2(w: &mut Vec<char>) {
    let c = Some(m_positive as Condition);
    apply_rules(
        w,
        &[
            ("ational", "ate", c),
            ("tional", "tion", c),
            ("enci", "ence", c),
            ("anci", "ance", c),
            ("izer", "ize", c),
            ("abli", "able", c),
            ("alli", "al", c),
            ("entli", "ent", c),
            ("eli", "e", c),
            ("ousli", "ous", c),
            ("ization", "ize", c),
            ("ation", "ate", c),
            ("ator", "ate", c),
            ("alism", "al", c),
            ("iveness", "ive", c),
            ("fulness", "ful", c),
            ("ousness", "ous", c),
            ("aliti", "al", c),
            ("iviti", "ive", c),
            ("biliti", "ble", c),
        ],
    );
}

fn step3(w: &mut Vec<char>) {
    let c = Some(m_positive as Condition);
    apply_rules(
        w,
        &[
            ("icate", "ic", c),
            ("ative", "", c),
            ("alize", "al", c),
            ("iciti", "ic", c),
            ("ical", "ic", c),
            ("ful", "", c),
            ("ness", "", c),
        ],
    );
}

fn m_gt_1_after_s_or_t(stem: &[char]) -> bool {
    matches!(stem.last(), Some('s' | 't')) && measure(stem) > 1
}

fn step4(w: &mut Vec<char>) {
    let c = Some(m_gt_1 as Condition);
    apply_rules(
        w,
        &[
            ("al", "", c),
            ("ance", "", c),
            ("ence", "", c),
            ("er", "", c),
            ("ic", "", c),
            ("able", "", c),
            ("ible", "", c),
            ("ant", "", c),
            ("ement", "", c),
            ("ment", "", c),
            ("ent", "", c),
            ("ion", "", Some(m_gt_1_after_s_or_t)),
            ("ou", "", c),
            ("ism", "", c),
            ("ate", "", c),
            ("iti", "", c),
            ("ous", "", c),
            ("ive", "", c),
            ("ize", "", c),
        ],
    );
}

fn step5a(w: &mut Vec<char>) {
    if w.last() == Some(&'e') {
        let stem = &w[..w.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            w.pop();
        }
    }
}

fn step5b(w: &mut Vec<char>) {
    if ends_with(w, "ll") && measure(&w[..w.len() - 1]) > 1 {
        w.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_examples() {
        let m = |s: &str| measure(&s.chars().collect::<Vec<_>>());
        for s in ["tr", "ee", "tree", "y", "by"] {
            assert_eq!(m(s), 0, "{s}");
        }
        for s in ["trouble", "oats", "trees", "ivy"] {
            assert_eq!(m(s), 1, "{s}");
        }
        for s in ["troubles", "private", "oaten", "orrery"] {
            assert_eq!(m(s), 2, "{s}");
        }
    }

    #[test]
    fn classic_pairs() {
        let cases = [
            ("caresses", "caress"),
            ("ponies", "poni"),
            ("hopping", "hop"),
            ("filing", "file"),
            ("relational", "relat"),
            ("generalizations", "gener"),
            ("united", "unit"),
            ("nations", "nation"),
        ];
        for (w, s) in cases {
            assert_eq!(stem(w), s, "{w}");
        }
    }

    #[test]
    fn short_and_empty_words() {
        assert_eq!(stem(""), "");
        assert_eq!(stem("a"), "a");
        assert_eq!(stem("as"), "a");
    }

    #[test]
    fn latin1_letters_do_not_panic() {
        assert_eq!(stem("café"), "café");
        assert_eq!(stem("résumés"), "résumé");
    }
}
