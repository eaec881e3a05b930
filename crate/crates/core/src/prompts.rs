//! Prompt text for the five LLM templates, plus the corrective suffixes used
//! on reprompt. Prompts are deterministic functions of their inputs so
//! recorded fixtures stay addressable by request digest.

use crate::metadata::MovieMetadata;

pub const MUSIC_FIELDS: [&str; 7] = [
    "Instruments",
    "Key",
    "Tempo",
    "Dynamics",
    "Texture",
    "Mood",
    "Atmosphere",
];

pub fn plot_segmentation(synopsis: &str, n: usize) -> String {
    format!(
        "You are preparing a movie trailer. Split the synopsis below into exactly {n} short scene \
         descriptions, in story order. Each one must describe something a camera could show: \
         name the main characters and places in plain words, keep it to one sentence, and do \
         not give away the ending. Answer with one description per line and nothing else.\n\n\
         Synopsis:\n{synopsis}"
    )
}

pub fn plot_segmentation_retry(prompt: &str, n: usize, got: usize) -> String {
    format!(
        "{prompt}\n\nThe previous answer had {got} lines. Answer again with exactly {n} lines, \
         one description per line."
    )
}

pub fn quote_selection(shortlist: &[String], n: usize, meta: &MovieMetadata) -> String {
    let mut out = format!(
        "Title: {}\nGenres: {}\n\nBelow are candidate lines of dialogue from the movie. Pick \
         exactly {n} lines that would carry a trailer, judged by emotional weight and how well \
         they fit the film's themes. Copy each chosen line verbatim, strongest first, one per \
         line, nothing else.\n\nCandidates:\n",
        meta.title,
        meta.genres.join(", ")
    );
    for (i, q) in shortlist.iter().enumerate() {
        out.push_str(&format!("{}. {q}\n", i + 1));
    }
    out
}

pub fn keyword_extraction(subplot: &str) -> String {
    format!(
        "Give exactly 5 distinct keywords for the scene below, covering themes, characters and \
         notable events, with no repeats. Answer as a comma separated list.\n\nScene: {subplot}"
    )
}

pub fn keyword_extraction_retry(prompt: &str, got: usize) -> String {
    format!(
        "{prompt}\n\nThe previous answer had {got} distinct keywords. Answer again with exactly \
         5 distinct keywords."
    )
}

pub fn voiceover_phrases(meta: &MovieMetadata, n: usize) -> String {
    let month = meta.release_month();
    format!(
        "Write exactly {n} short voice-over lines for the trailer of \"{}\". Build anticipation \
         without spoilers. Mention the director, {}, in exactly one line and the release month, \
         {month}, in exactly one line. One voice-over line per answer line, nothing else.\n\n\
         Director: {}\nRelease month: {month}\nPlot:\n{}",
        meta.title, meta.director, meta.director, meta.synopsis
    )
}

pub fn voiceover_retry(prompt: &str, n: usize, problem: &str) -> String {
    format!("{prompt}\n\nThe previous answer was rejected: {problem}. Answer again with exactly {n} lines.")
}

pub fn music_description(meta: &MovieMetadata) -> String {
    format!(
        "Describe the background music for the trailer of \"{}\". Cover musical elements and \
         instrument choice only. Answer with exactly these seven labeled lines: {}.\n\nPlot:\n{}",
        meta.title,
        MUSIC_FIELDS.join(", "),
        meta.synopsis
    )
}

pub fn music_description_retry(prompt: &str, missing: &[&str]) -> String {
    format!(
        "{prompt}\n\nThe previous answer lacked these labels: {}. Answer again with all seven.",
        missing.join(", ")
    )
}
