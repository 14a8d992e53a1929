//! Deterministic pseudo-English text for experiments that need a corpus.

use pearl_lab::{RandomStream, UniformSource};

const SUBJECTS: &[&str] = &[
    "the cat",
    "a dog",
    "the old man",
    "my sister",
    "the river",
    "a small bird",
    "the teacher",
    "our neighbour",
    "the wind",
    "a stranger",
    "the children",
    "the farmer",
];
const VERBS: &[&str] = &[
    "sat on",
    "walked to",
    "looked at",
    "ran past",
    "found",
    "carried",
    "painted",
    "watched",
    "followed",
    "forgot",
    "built",
    "opened",
];
const OBJECTS: &[&str] = &[
    "the mat",
    "the garden",
    "a red door",
    "the long road",
    "an empty box",
    "the market",
    "the bridge",
    "a quiet house",
    "the window",
    "the hill",
    "a letter",
    "the boat",
];
const TAILS: &[&str] = &[
    "",
    "",
    "",
    " in the morning",
    " after dinner",
    " before the rain",
    " again",
    " without a word",
    " for a while",
    " at the end of the day",
];
const JOINERS: &[&str] = &[". ", ". ", ". ", ", and then ", "; ", ". later, "];

/// Picks with a Zipf-like bias towards the front of `items`.
fn pick<'a>(items: &[&'a str], rng: &mut RandomStream) -> &'a str {
    let u = rng.next_uniform();
    items[((u * u) * items.len() as f64) as usize]
}

/// About `len` bytes of text built from a small sentence grammar. The same
/// seed always gives the same text.
pub fn synthetic_text(len: usize, seed: u64) -> String {
    let mut rng = RandomStream::new(seed, 0xC0);
    let mut out = String::with_capacity(len + 128);
    while out.len() < len {
        out.push_str(pick(SUBJECTS, &mut rng));
        out.push(' ');
        out.push_str(pick(VERBS, &mut rng));
        out.push(' ');
        out.push_str(pick(OBJECTS, &mut rng));
        out.push_str(pick(TAILS, &mut rng));
        out.push_str(pick(JOINERS, &mut rng));
    }
    out.truncate(len);
    out
}
