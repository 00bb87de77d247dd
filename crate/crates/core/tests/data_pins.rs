//! The bundled lexicons feed every score; an accidental edit should fail loudly.

use cbsev::affect::{ANGER_TXT, SWEAR_TXT, VALENCE_TSV};
use cbsev::semantics::SEED_KEYWORDS_TXT;
use cbsev::textprep::{CONTRACTIONS_TSV, STOPWORDS_TXT};
use sha2::{Digest, Sha256};

fn hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[test]
fn bundled_data_is_pinned() {
    let pins = [
        ("anger.txt", ANGER_TXT, "9d09e40f95022252445ce6e613c7aedb808ec70ff9d5a84494c6eab36f10c6f6"),
        ("contractions.tsv", CONTRACTIONS_TSV, "57991213d3b6039313859e6b7480600f1df454a20bd1c0f000ba5d5253d96f70"),
        ("seed_keywords.txt", SEED_KEYWORDS_TXT, "6ae0b551d86ff3de630262045ffc92043656743e601d2d3b25dd802aeb95032b"),
        ("stopwords.txt", STOPWORDS_TXT, "f1cb35f97e93d96d3781c6c4918ddc23e053ef85f30edece18c956514f12bce5"),
        ("swear.txt", SWEAR_TXT, "d6257e2e05ccb35520bfa25187400d26cb1b9a303f9e8238c37d3dddd34cebe6"),
        ("valence.tsv", VALENCE_TSV, "d9e76d47dac42657fc652c3aced833b670ce6c4702ca77d62cb10abf7e7a9b3d"),
    ];
    for (name, text, want) in pins {
        assert_eq!(hex(text), want, "{name} changed");
    }
}
