//! The compact machine text format.
//!
//! ```text
//! machine := group ( "_" group )*
//! group   := code code              ; read 0, then read 1
//! code    := write dir next | "---"
//! write   := "0" | "1"
//! dir     := "L" | "R"
//! next    := "A".."Y" | "Z"          ; Z is the halt state
//! ```
//!
//! Group `k` describes state `k` (`A` = 0). A machine with `n` states has
//! text length `7n - 1`.

use crate::machine::{Control, Dir, Machine, StateId, Transition};

/// Largest state count expressible with letters `A`..`Y`.
pub const MAX_TEXT_STATES: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("empty machine text")]
    Empty,
    #[error("truncated transition code at offset {offset}")]
    Truncated { offset: usize },
    #[error("expected '_' at offset {offset}, found {found:?}")]
    ExpectedSeparator { offset: usize, found: char },
    #[error("invalid write symbol {found:?} at offset {offset}")]
    BadWrite { offset: usize, found: char },
    #[error("invalid direction {found:?} at offset {offset}")]
    BadDirection { offset: usize, found: char },
    #[error("invalid state letter {found:?} at offset {offset}")]
    BadState { offset: usize, found: char },
    #[error("state {found:?} at offset {offset} is beyond the {groups} declared groups")]
    StateOutOfRange {
        offset: usize,
        found: char,
        groups: usize,
    },
    #[error("machine has {0} states; the text format holds at most {MAX_TEXT_STATES}")]
    TooManyStates(usize),
}

impl FormatError {
    pub fn offset(&self) -> Option<usize> {
        match *self {
            FormatError::Truncated { offset }
            | FormatError::ExpectedSeparator { offset, .. }
            | FormatError::BadWrite { offset, .. }
            | FormatError::BadDirection { offset, .. }
            | FormatError::BadState { offset, .. }
            | FormatError::StateOutOfRange { offset, .. } => Some(offset),
            FormatError::Empty | FormatError::TooManyStates(_) => None,
        }
    }
}

pub fn parse(text: &str) -> Result<Machine, FormatError> {
    let bytes = text.as_bytes();
    if bytes.is_empty() {
        return Err(FormatError::Empty);
    }
    let groups = bytes.iter().filter(|&&b| b == b'_').count() + 1;
    if groups > MAX_TEXT_STATES {
        return Err(FormatError::TooManyStates(groups));
    }
    if bytes.len() < 7 * groups - 1 {
        return Err(FormatError::Truncated {
            offset: bytes.len(),
        });
    }
    let at = |i: usize| text[i..].chars().next().unwrap_or('\0');

    let mut machine = Machine::new(groups);
    let mut pos = 0;
    for state in 0..groups {
        if state > 0 {
            match bytes.get(pos) {
                Some(b'_') => pos += 1,
                Some(_) => {
                    return Err(FormatError::ExpectedSeparator {
                        offset: pos,
                        found: at(pos),
                    })
                }
                None => return Err(FormatError::Truncated { offset: pos }),
            }
        }
        for read in 0..2u8 {
            if bytes.len() < pos + 3 {
                return Err(FormatError::Truncated {
                    offset: bytes.len(),
                });
            }
            let code = &bytes[pos..pos + 3];
            let t = if code == b"---" {
                None
            } else {
                let write = match code[0] {
                    b'0' => 0,
                    b'1' => 1,
                    _ => {
                        return Err(FormatError::BadWrite {
                            offset: pos,
                            found: at(pos),
                        })
                    }
                };
                let dir = match code[1] {
                    b'L' => Dir::L,
                    b'R' => Dir::R,
                    _ => {
                        return Err(FormatError::BadDirection {
                            offset: pos + 1,
                            found: at(pos + 1),
                        })
                    }
                };
                let next = match code[2] {
                    b'Z' => Control::Halt,
                    c @ b'A'..=b'Y' => {
                        let k = (c - b'A') as usize;
                        if k >= groups {
                            return Err(FormatError::StateOutOfRange {
                                offset: pos + 2,
                                found: c as char,
                                groups,
                            });
                        }
                        Control::State(StateId(k as u16))
                    }
                    _ => {
                        return Err(FormatError::BadState {
                            offset: pos + 2,
                            found: at(pos + 2),
                        })
                    }
                };
                Some(Transition::new(write, dir, next))
            };
            machine.set(StateId(state as u16), read, t);
            pos += 3;
        }
    }
    if pos != bytes.len() {
        return Err(FormatError::ExpectedSeparator {
            offset: pos,
            found: at(pos),
        });
    }
    Ok(machine)
}

pub fn serialize(m: &Machine) -> Result<String, FormatError> {
    if m.n_states() > MAX_TEXT_STATES {
        return Err(FormatError::TooManyStates(m.n_states()));
    }
    let mut out = String::with_capacity(7 * m.n_states());
    for (i, row) in m.rows().iter().enumerate() {
        if i > 0 {
            out.push('_');
        }
        for t in row {
            match t {
                None => out.push_str("---"),
                Some(t) => out.push_str(&t.to_string()),
            }
        }
    }
    Ok(out)
}
