//! JSON file formats for automata (`.waut`) and words (`.word.json`).

use serde::{Deserialize, Serialize};

use crate::automaton::{Automaton, Cube, Transition};
use crate::error::{Error, Result};
use crate::numeric::UPWord;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AutomatonFile {
    tracks: usize,
    states: usize,
    initial: usize,
    accepting: Vec<usize>,
    transitions: Vec<TransitionFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionFile {
    from: usize,
    to: usize,
    cubes: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WordFile {
    tracks: usize,
    prefix: Vec<String>,
    period: Vec<String>,
}

fn format_err(e: serde_json::Error) -> Error {
    Error::Format(e.to_string())
}

pub fn automaton_to_json(a: &Automaton) -> String {
    let file = AutomatonFile {
        tracks: a.tracks(),
        states: a.states(),
        initial: a.initial(),
        accepting: a.accepting_states(),
        transitions: a
            .transitions()
            .iter()
            .map(|t| TransitionFile {
                from: t.from,
                to: t.to,
                cubes: t.cubes.iter().map(Cube::strings).collect(),
            })
            .collect(),
    };
    serde_json::to_string(&file).expect("serialisable") + "\n"
}

/// Parses a `.waut` record. Structural errors and FG violations are both
/// rejected.
pub fn automaton_from_json(text: &str) -> Result<Automaton> {
    let file: AutomatonFile = serde_json::from_str(text).map_err(format_err)?;
    let transitions = file
        .transitions
        .into_iter()
        .map(|t| {
            let cubes = t.cubes.iter().map(|c| Cube::parse(c)).collect::<Result<Vec<_>>>()?;
            Ok(Transition { from: t.from, to: t.to, cubes })
        })
        .collect::<Result<Vec<_>>>()?;
    let a = Automaton::from_parts(file.tracks, file.states, file.initial, &file.accepting, transitions)?;
    let diag = a.validate_fg();
    if !diag.is_valid() {
        return Err(Error::Format(format!("not eventually-always weak: {:?}", diag.issues)));
    }
    Ok(a)
}

pub fn word_to_json(w: &UPWord) -> String {
    let (prefix, period) = w.column_strings();
    serde_json::to_string_pretty(&WordFile { tracks: w.tracks(), prefix, period }).expect("serialisable") + "\n"
}

pub fn word_from_json(text: &str) -> Result<UPWord> {
    let file: WordFile = serde_json::from_str(text).map_err(format_err)?;
    UPWord::from_columns(file.tracks, &file.prefix, &file.period)
}
