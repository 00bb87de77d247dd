//! The original Porter (1980) suffix-stripping algorithm.
//!
//! Operates on lowercase ASCII; any other byte is treated as a consonant.
//! Within each step the longest matching suffix is selected and, if its
//! condition fails, the step makes no change.

fn is_consonant(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_consonant(w, i - 1),
        _ => true,
    }
}

/// Number of VC sequences in `[C](VC)^m[V]`.
fn measure(stem: &[u8]) -> usize {
    let n = stem.len();
    let mut i = 0;
    while i < n && is_consonant(stem, i) {
        i += 1;
    }
    let mut m = 0;
    while i < n {
        while i < n && !is_consonant(stem, i) {
            i += 1;
        }
        if i >= n {
            break;
        }
        while i < n && is_consonant(stem, i) {
            i += 1;
        }
        m += 1;
    }
    m
}

fn has_vowel(stem: &[u8]) -> bool {
    (0..stem.len()).any(|i| !is_consonant(stem, i))
}

fn ends_double_consonant(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_consonant(w, n - 1)
}

/// `*o`: ends consonant-vowel-consonant, the last not `w`, `x` or `y`.
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_consonant(w, n - 3)
        && !is_consonant(w, n - 2)
        && is_consonant(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

type Cond = fn(&[u8]) -> bool;

fn m_gt0(s: &[u8]) -> bool {
    measure(s) > 0
}

fn m_gt1(s: &[u8]) -> bool {
    measure(s) > 1
}

fn m_gt1_st(s: &[u8]) -> bool {
    measure(s) > 1 && matches!(s.last(), Some(b's' | b't'))
}

/// Applies the first rule whose suffix matches (rules are ordered so the
/// longest suffix comes first). Returns whether a suffix matched at all.
fn apply_rules(w: &mut Vec<u8>, rules: &[(&str, &str, Cond)]) -> bool {
    for (suffix, replacement, cond) in rules {
        if w.ends_with(suffix.as_bytes()) {
            let stem_len = w.len() - suffix.len();
            if cond(&w[..stem_len]) {
                w.truncate(stem_len);
                w.extend_from_slice(replacement.as_bytes());
            }
            return true;
        }
    }
    false
}

fn step1a(w: &mut Vec<u8>) {
    if w.ends_with(b"sses") || w.ends_with(b"ies") {
        w.truncate(w.len() - 2);
    } else if w.ends_with(b"ss") {
    } else if w.ends_with(b"s") {
        w.pop();
    }
}

fn step1b(w: &mut Vec<u8>) {
    if w.ends_with(b"eed") {
        if measure(&w[..w.len() - 3]) > 0 {
            w.pop();
        }
        return;
    }
    let stripped = if w.ends_with(b"ed") && has_vowel(&w[..w.len() - 2]) {
        w.truncate(w.len() - 2);
        true
    } else if w.ends_with(b"ing") && has_vowel(&w[..w.len() - 3]) {
        w.truncate(w.len() - 3);
        true
    } else {
        false
    };
    if !stripped {
        return;
    }
    if w.ends_with(b"at") || w.ends_with(b"bl") || w.ends_with(b"iz") {
        w.push(b'e');
    } else if ends_double_consonant(w) && !matches!(w.last(), Some(b'l' | b's' | b'z')) {
        w.pop();
    } else if measure(w) == 1 && ends_cvc(w) {
        w.push(b'e');
    }
}

fn step1c(w: &mut [u8]) {
    let n = w.len();
    if n >= 1 && w[n - 1] == b'y' && has_vowel(&w[..n - 1]) {
        w[n - 1] = b'i';
    }
}

const STEP2: &[(&str, &str, Cond)] = &[
    ("ational", "ate", m_gt0),
    ("tional", "tion", m_gt0),
    ("enci", "ence", m_gt0),
    ("anci", "ance", m_gt0),
    ("izer", "ize", m_gt0),
    ("abli", "able", m_gt0),
    ("alli", "al", m_gt0),
    ("entli", "ent", m_gt0),
    ("eli", "e", m_gt0),
    ("ousli", "ous", m_gt0),
    ("ization", "ize", m_gt0),
    ("ation", "ate", m_gt0),
    ("ator", "ate", m_gt0),
    ("alism", "al", m_gt0),
    ("iveness", "ive", m_gt0),
    ("fulness", "ful", m_gt0),
    ("ousness", "ous", m_gt0),
    ("aliti", "al", m_gt0),
    ("iviti", "ive", m_gt0),
    ("biliti", "ble", m_gt0),
];

const STEP3: &[(&str, &str, Cond)] = &[
    ("icate", "ic", m_gt0),
    ("ative", "", m_gt0),
    ("alize", "al", m_gt0),
    ("iciti", "ic", m_gt0),
    ("ical", "ic", m_gt0),
    ("ful", "", m_gt0),
    ("ness", "", m_gt0),
];

const STEP4: &[(&str, &str, Cond)] = &[
    ("al", "", m_gt1),
    ("ance", "", m_gt1),
    ("ence", "", m_gt1),
    ("er", "", m_gt1),
    ("ic", "", m_gt1),
    ("able", "", m_gt1),
    ("ible", "", m_gt1),
    ("ant", "", m_gt1),
    ("ement", "", m_gt1),
    ("ment", "", m_gt1),
    ("ent", "", m_gt1),
    ("ion", "", m_gt1_st),
    ("ou", "", m_gt1),
    ("ism", "", m_gt1),
    ("ate", "", m_gt1),
    ("iti", "", m_gt1),
    ("ous", "", m_gt1),
    ("ive", "", m_gt1),
    ("ize", "", m_gt1),
];

/// Longest-suffix selection: among the rules whose suffix matches, pick the longest.
fn apply_longest(w: &mut Vec<u8>, rules: &[(&str, &str, Cond)]) {
    let best = rules
        .iter()
        .filter(|(suffix, _, _)| w.ends_with(suffix.as_bytes()))
        .max_by_key(|(suffix, _, _)| suffix.len());
    if let Some(rule) = best {
        apply_rules(w, std::slice::from_ref(rule));
    }
}

fn step5a(w: &mut Vec<u8>) {
    if w.last() == Some(&b'e') {
        let stem = &w[..w.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            w.pop();
        }
    }
}

fn step5b(w: &mut Vec<u8>) {
    if measure(w) > 1 && ends_double_consonant(w) && w.last() == Some(&b'l') {
        w.pop();
    }
}

/// Stems one lowercase word.
pub fn stem(word: &str) -> String {
    if word.is_empty() {
        return String::new();
    }
    let mut w = word.as_bytes().to_vec();
    step1a(&mut w);
    step1b(&mut w);
    step1c(&mut w);
    apply_longest(&mut w, STEP2);
    apply_longest(&mut w, STEP3);
    apply_longest(&mut w, STEP4);
    step5a(&mut w);
    step5b(&mut w);
    // only ASCII bytes are ever removed or appended
    String::from_utf8(w).expect("stemming preserves UTF-8")
}
