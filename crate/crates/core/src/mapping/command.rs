//! Command strings such as `1F2B3U4DN` or `1U2F3N4NS21MLR`.
//!
//! ```text
//! cmd  := pair pair pair pair tail
//! pair := digit(1-4) role(F|B|U|D|N)
//! tail := 'N' | 'C' digit 'L' digit 'R' | 'S' digit digit 'M' ('LR' | 'RL')
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of DC motor channels a command addresses.
pub const CHANNELS: usize = 4;

/// Highest servo index accepted in an `S` tail.
pub const MAX_SERVO: u8 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "F")]
    Forward,
    #[serde(rename = "B")]
    Backward,
    #[serde(rename = "U")]
    Up,
    #[serde(rename = "D")]
    Down,
    #[serde(rename = "N")]
    Unassigned,
}

impl Role {
    pub const ALL: [Role; 5] = [Role::Forward, Role::Backward, Role::Up, Role::Down, Role::Unassigned];

    pub fn letter(self) -> char {
        match self {
            Role::Forward => 'F',
            Role::Backward => 'B',
            Role::Up => 'U',
            Role::Down => 'D',
            Role::Unassigned => 'N',
        }
    }

    pub fn from_letter(c: char) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.letter() == c)
    }

    /// Drive polarity implied by the role: reversed roles run the motor backwards.
    pub fn polarity(self) -> f64 {
        match self {
            Role::Backward | Role::Down => -1.0,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ServoOrder {
    /// First servo steers left, second right.
    LR,
    RL,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode")]
pub enum Tail {
    /// Rotation not yet confirmed.
    #[serde(rename = "N")]
    Unconfirmed,
    /// Differential DC-motor rotation.
    #[serde(rename = "C")]
    Dc { left: u8, right: u8 },
    /// Servo-vectored rotation; `M` in the string is a bare separator.
    #[serde(rename = "S")]
    Servo { servo_a: u8, servo_b: u8, order: ServoOrder },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MappingCommand {
    /// Channel/role pairs in the order written.
    pub roles: [(u8, Role); CHANNELS],
    pub tail: Tail,
}

impl MappingCommand {
    pub fn role_of(&self, channel: u8) -> Option<Role> {
        self.roles.iter().find(|(c, _)| *c == channel).map(|(_, r)| *r)
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for MappingCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (channel, role) in &self.roles {
            write!(f, "{channel}{}", role.letter())?;
        }
        match self.tail {
            Tail::Unconfirmed => write!(f, "N"),
            Tail::Dc { left, right } => write!(f, "C{left}L{right}R"),
            Tail::Servo { servo_a, servo_b, order } => {
                let order = match order {
                    ServoOrder::LR => "LR",
                    ServoOrder::RL => "RL",
                };
                write!(f, "S{servo_a}{servo_b}M{order}")
            }
        }
    }
}

impl std::str::FromStr for MappingCommand {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, ParseError> {
        parse_command(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParseErrorKind {
    #[error("expected {expected}, found '{found}'")]
    Lexical { expected: String, found: char },
    #[error("unknown role letter '{letter}'")]
    UnknownRole { letter: char },
    #[error("channel {channel} used twice")]
    DuplicateChannel { channel: u8 },
    #[error("incomplete rotation tail")]
    DanglingTail,
    #[error("unexpected end of command, expected {expected}")]
    UnexpectedEnd { expected: String },
    #[error("unexpected trailing input")]
    TrailingInput,
}

/// Error with a 1-based character position.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("position {position}: {kind}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    /// 1-based position of the next character.
    position: usize,
    in_tail: bool,
}

impl Cursor<'_> {
    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { position: self.position, kind }
    }

    fn next(&mut self, expected: &str) -> Result<char, ParseError> {
        match self.chars.next() {
            Some(c) => {
                self.position += 1;
                Ok(c)
            }
            None if self.in_tail => Err(self.error(ParseErrorKind::DanglingTail)),
            None => Err(self.error(ParseErrorKind::UnexpectedEnd { expected: expected.into() })),
        }
    }

    fn lexical(&self, expected: &str, found: char) -> ParseError {
        ParseError {
            position: self.position - 1,
            kind: ParseErrorKind::Lexical { expected: expected.into(), found },
        }
    }

    fn digit(&mut self, range: std::ops::RangeInclusive<u8>, expected: &str) -> Result<u8, ParseError> {
        let c = self.next(expected)?;
        match c.to_digit(10).map(|d| d as u8) {
            Some(d) if range.contains(&d) => Ok(d),
            _ => Err(self.lexical(expected, c)),
        }
    }

    fn literal(&mut self, want: char) -> Result<(), ParseError> {
        let expected = format!("'{want}'");
        let c = self.next(&expected)?;
        if c == want {
            Ok(())
        } else {
            Err(self.lexical(&expected, c))
        }
    }
}

pub fn parse_command(text: &str) -> Result<MappingCommand, ParseError> {
    let mut cur = Cursor { chars: text.chars().peekable(), position: 1, in_tail: false };
    let mut roles = [(0u8, Role::Unassigned); CHANNELS];
    for i in 0..CHANNELS {
        let channel = cur.digit(1..=CHANNELS as u8, "channel digit 1-4")?;
        let channel_pos = cur.position - 1;
        let letter = cur.next("role letter")?;
        let role = Role::from_letter(letter).ok_or(ParseError {
            position: cur.position - 1,
            kind: ParseErrorKind::UnknownRole { letter },
        })?;
        // A duplicate is reported at the repeated digit.
        if roles_seen(&roles[..i], channel) {
            return Err(ParseError {
                position: channel_pos,
                kind: ParseErrorKind::DuplicateChannel { channel },
            });
        }
        roles[i] = (channel, role);
    }

    let tail_char = cur.next("tail 'N', 'C' or 'S'")?;
    cur.in_tail = true;
    let tail = match tail_char {
        'N' => Tail::Unconfirmed,
        'C' => {
            let left = cur.digit(1..=CHANNELS as u8, "channel digit 1-4")?;
            cur.literal('L')?;
            let right_pos = cur.position;
            let right = cur.digit(1..=CHANNELS as u8, "channel digit 1-4")?;
            cur.literal('R')?;
            if left == right {
                return Err(ParseError {
                    position: right_pos,
                    kind: ParseErrorKind::DuplicateChannel { channel: right },
                });
            }
            Tail::Dc { left, right }
        }
        'S' => {
            let servo_a = cur.digit(1..=MAX_SERVO, "servo digit 1-8")?;
            let b_pos = cur.position;
            let servo_b = cur.digit(1..=MAX_SERVO, "servo digit 1-8")?;
            if servo_a == servo_b {
                return Err(ParseError {
                    position: b_pos,
                    kind: ParseErrorKind::DuplicateChannel { channel: servo_b },
                });
            }
            cur.literal('M')?;
            let first = cur.next("'LR' or 'RL'")?;
            let order = match first {
                'L' => {
                    cur.literal('R')?;
                    ServoOrder::LR
                }
                'R' => {
                    cur.literal('L')?;
                    ServoOrder::RL
                }
                c => return Err(cur.lexical("'LR' or 'RL'", c)),
            };
            Tail::Servo { servo_a, servo_b, order }
        }
        c => return Err(cur.lexical("tail 'N', 'C' or 'S'", c)),
    };
    if cur.chars.peek().is_some() {
        return Err(cur.error(ParseErrorKind::TrailingInput));
    }
    Ok(MappingCommand { roles, tail })
}

fn roles_seen(roles: &[(u8, Role)], channel: u8) -> bool {
    roles.iter().any(|(c, _)| *c == channel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_command() {
        let c = parse_command("1F2B3U4DN").unwrap();
        assert_eq!(c.roles[1], (2, Role::Backward));
        assert_eq!(c.tail, Tail::Unconfirmed);
        assert_eq!(c.render(), "1F2B3U4DN");
    }

    #[test]
    fn dc_and_servo_tails() {
        assert_eq!(parse_command("1F2F3U4DC1L2R").unwrap().tail, Tail::Dc { left: 1, right: 2 });
        assert_eq!(parse_command("1F2F3U4DC2L1R").unwrap().tail, Tail::Dc { left: 2, right: 1 });
        assert_eq!(
            parse_command("1U2F3N4NS21MLR").unwrap().tail,
            Tail::Servo { servo_a: 2, servo_b: 1, order: ServoOrder::LR }
        );
    }

    #[test]
    fn truncated_command_reports_position() {
        let e = parse_command("1F2B3U").unwrap_err();
        assert_eq!(e.position, 7);
        assert!(matches!(e.kind, ParseErrorKind::UnexpectedEnd { .. }));
    }

    #[test]
    fn error_kinds() {
        let kind = |s: &str| parse_command(s).unwrap_err();
        assert_eq!(kind("1F2X3U4DN").kind, ParseErrorKind::UnknownRole { letter: 'X' });
        assert_eq!(kind("1F2X3U4DN").position, 4);
        assert_eq!(kind("1F1B3U4DN").kind, ParseErrorKind::DuplicateChannel { channel: 1 });
        assert_eq!(kind("1F1B3U4DN").position, 3);
        assert_eq!(kind("1F2B3U4DC1L").kind, ParseErrorKind::DanglingTail);
        assert_eq!(kind("1F2B3U4DC1L1R").kind, ParseErrorKind::DuplicateChannel { channel: 1 });
        assert_eq!(kind("1F2B3U4DNX").kind, ParseErrorKind::TrailingInput);
        assert_eq!(kind("1F2B3U4DNX").position, 10);
        assert!(matches!(kind("5F2B3U4DN").kind, ParseErrorKind::Lexical { found: '5', .. }));
        assert!(matches!(kind("1f2B3U4DN").kind, ParseErrorKind::UnknownRole { letter: 'f' }));
        assert!(matches!(kind("").kind, ParseErrorKind::UnexpectedEnd { .. }));
    }
}
