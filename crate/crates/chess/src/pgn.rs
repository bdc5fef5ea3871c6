//! PGN import and export.
//!
//! Tag pairs are kept in document order. Comments (`{}` and `;`), NAGs,
//! move-number indications, `%` escape lines and recursive variations are
//! skipped. Movetext is SAN and is replayed from the standard start position
//! or from the `FEN` tag when present.

use std::fmt::Write as _;

use thiserror::Error;

use crate::board::BoardState;
use crate::san::{looks_like_san, parse_san, to_san};
use crate::types::Move;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PgnError {
    #[error("game {game}: malformed movetext token `{token}`")]
    Malformed { game: usize, token: String },
    #[error("game {game}: illegal move `{san}` at ply {ply}")]
    IllegalMove { game: usize, ply: usize, san: String },
    #[error("game {game}: bad FEN tag: {reason}")]
    BadFen { game: usize, reason: String },
}

impl PgnError {
    pub fn game_index(&self) -> usize {
        match self {
            PgnError::Malformed { game, .. }
            | PgnError::IllegalMove { game, .. }
            | PgnError::BadFen { game, .. } => *game,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgnGame {
    pub headers: Vec<(String, String)>,
    pub start: BoardState,
    pub moves: Vec<Move>,
    pub result: String,
}

impl PgnGame {
    pub fn header(&self, key: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn white(&self) -> Option<&str> {
        self.header("White")
    }

    pub fn black(&self) -> Option<&str> {
        self.header("Black")
    }

    /// Every position of the game, starting with `start`; `moves.len() + 1`
    /// entries.
    pub fn positions(&self) -> Vec<BoardState> {
        let mut out = Vec::with_capacity(self.moves.len() + 1);
        let mut s = self.start;
        out.push(s);
        for &m in &self.moves {
            s = s.apply_unchecked(m);
            out.push(s);
        }
        out
    }

    /// Serializes the game as PGN with SAN movetext.
    pub fn to_pgn(&self) -> String {
        let mut out = String::new();
        let mut headers = self.headers.clone();
        if !headers.iter().any(|(k, _)| k == "Result") {
            headers.push(("Result".into(), self.result.clone()));
        }
        for (k, v) in &headers {
            let escaped = v.replace('\\', "\\\\").replace('"', "\\\"");
            let _ = writeln!(out, "[{k} \"{escaped}\"]");
        }
        out.push('\n');
        let mut line = String::new();
        let mut s = self.start;
        let mut tokens = Vec::with_capacity(self.moves.len() * 3 / 2 + 1);
        for (i, &m) in self.moves.iter().enumerate() {
            let white = s.side_to_move == crate::types::Color::White;
            if white {
                tokens.push(format!("{}.", s.fullmove_number));
            } else if i == 0 {
                tokens.push(format!("{}...", s.fullmove_number));
            }
            tokens.push(to_san(&s, m).expect("stored moves are legal"));
            s = s.apply_unchecked(m);
        }
        tokens.push(self.result.clone());
        for t in tokens {
            if !line.is_empty() && line.len() + 1 + t.len() > 79 {
                out.push_str(&line);
                out.push('\n');
                line.clear();
            }
            if !line.is_empty() {
                line.push(' ');
            }
            line.push_str(&t);
        }
        out.push_str(&line);
        out.push_str("\n\n");
        out
    }
}

#[derive(Debug, PartialEq)]
enum Token {
    Tag(String, String),
    Word(String),
    Result(String),
}

fn is_result(w: &str) -> bool {
    matches!(w, "1-0" | "0-1" | "1/2-1/2" | "*")
}

fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut depth = 0usize;
    let mut line_start = true;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line_start = true;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let at_line_start = std::mem::replace(&mut line_start, false);
        match c {
            '%' if at_line_start => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            ';' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '{' => {
                while i < chars.len() && chars[i] != '}' {
                    i += 1;
                }
                i += 1;
            }
            '(' => {
                depth += 1;
                i += 1;
            }
            ')' => {
                depth = depth.saturating_sub(1);
                i += 1;
            }
            '[' if depth == 0 => {
                i += 1;
                let mut key = String::new();
                while i < chars.len() && !chars[i].is_whitespace() && chars[i] != ']' {
                    key.push(chars[i]);
                    i += 1;
                }
                let mut value = String::new();
                while i < chars.len() && chars[i] != '"' && chars[i] != ']' {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '"' {
                    i += 1;
                    while i < chars.len() && chars[i] != '"' {
                        if chars[i] == '\\' && i + 1 < chars.len() {
                            i += 1;
                        }
                        value.push(chars[i]);
                        i += 1;
                    }
                    i += 1;
                }
                while i < chars.len() && chars[i] != ']' && chars[i] != '\n' {
                    i += 1;
                }
                if i < chars.len() && chars[i] == ']' {
                    i += 1;
                }
                out.push(Token::Tag(key, value));
            }
            _ => {
                let start = i;
                while i < chars.len()
                    && !chars[i].is_whitespace()
                    && !"[]{}();".contains(chars[i])
                {
                    i += 1;
                }
                if i == start {
                    // stray delimiter such as ']' or '[' inside a variation
                    i += 1;
                    continue;
                }
                if depth > 0 {
                    continue;
                }
                let word: String = chars[start..i].iter().collect();
                if is_result(&word) {
                    out.push(Token::Result(word));
                } else {
                    out.push(Token::Word(word));
                }
            }
        }
    }
    out
}

/// Strips a leading move number (`12.`, `12...`) from a word; returns the
/// remainder, which may be empty.
fn strip_move_number(word: &str) -> Option<&str> {
    let digits = word.bytes().take_while(u8::is_ascii_digit).count();
    let rest = &word[digits..];
    let dots = rest.bytes().take_while(|&b| b == b'.').count();
    if digits > 0 && dots > 0 {
        Some(&rest[dots..])
    } else {
        None
    }
}

struct GameBuilder {
    index: usize,
    headers: Vec<(String, String)>,
    start: Option<BoardState>,
    state: BoardState,
    moves: Vec<Move>,
    error: Option<PgnError>,
    in_movetext: bool,
}

impl GameBuilder {
    fn new(index: usize) -> Self {
        let s = BoardState::start();
        GameBuilder {
            index,
            headers: Vec::new(),
            start: None,
            state: s,
            moves: Vec::new(),
            error: None,
            in_movetext: false,
        }
    }

    fn is_empty(&self) -> bool {
        self.headers.is_empty() && self.moves.is_empty() && self.error.is_none() && !self.in_movetext
    }

    fn begin_movetext(&mut self) {
        if self.in_movetext {
            return;
        }
        self.in_movetext = true;
        let fen = self
            .headers
            .iter()
            .find(|(k, _)| k == "FEN")
            .map(|(_, v)| v.clone());
        let start = match fen {
            Some(f) => match f.parse::<BoardState>() {
                Ok(s) => s,
                Err(e) => {
                    self.error = Some(PgnError::BadFen {
                        game: self.index,
                        reason: e.to_string(),
                    });
                    BoardState::start()
                }
            },
            None => BoardState::start(),
        };
        self.start = Some(start);
        self.state = start;
    }

    fn word(&mut self, word: &str) {
        self.begin_movetext();
        if self.error.is_some() {
            return;
        }
        let san = match strip_move_number(word) {
            Some("") => return,
            Some(rest) => rest,
            None => word,
        };
        // standalone annotation glyphs like "!?"
        if san.chars().all(|c| c == '!' || c == '?') {
            return;
        }
        if !looks_like_san(san) {
            self.error = Some(PgnError::Malformed {
                game: self.index,
                token: word.to_string(),
            });
            return;
        }
        // NAG tokens never reach here: '$' fails the SAN shape test, so handle first
        match parse_san(&self.state, san) {
            Ok(m) => {
                self.state = self.state.apply_unchecked(m);
                self.moves.push(m);
            }
            Err(_) => {
                self.error = Some(PgnError::IllegalMove {
                    game: self.index,
                    ply: self.moves.len() + 1,
                    san: san.to_string(),
                });
            }
        }
    }

    fn finish(mut self, terminator: Option<String>) -> Result<PgnGame, PgnError> {
        self.begin_movetext();
        if let Some(e) = self.error {
            return Err(e);
        }
        let header_result = self
            .headers
            .iter()
            .find(|(k, _)| k == "Result")
            .map(|(_, v)| v.clone());
        let result = header_result
            .or(terminator)
            .unwrap_or_else(|| "*".to_string());
        Ok(PgnGame {
            headers: self.headers,
            start: self.start.expect("set by begin_movetext"),
            moves: self.moves,
            result,
        })
    }
}

/// Parses a PGN document into games. Each game parses independently: a bad
/// game yields an error entry and parsing resumes with the next game.
pub fn parse_pgn(text: &str) -> Vec<Result<PgnGame, PgnError>> {
    let mut games = Vec::new();
    let mut current = GameBuilder::new(0);
    for token in tokenize(text) {
        match token {
            Token::Tag(k, v) => {
                if current.in_movetext {
                    let next = GameBuilder::new(current.index + 1);
                    games.push(std::mem::replace(&mut current, next).finish(None));
                }
                current.headers.push((k, v));
            }
            Token::Word(w) => {
                if w.starts_with('$') {
                    current.begin_movetext();
                    continue;
                }
                current.word(&w);
            }
            Token::Result(r) => {
                let next = GameBuilder::new(current.index + 1);
                games.push(std::mem::replace(&mut current, next).finish(Some(r)));
            }
        }
    }
    if !current.is_empty() {
        games.push(current.finish(None));
    }
    games
}

/// Like [`parse_pgn`] but fails on the first bad game.
pub fn parse_pgn_strict(text: &str) -> Result<Vec<PgnGame>, PgnError> {
    parse_pgn(text).into_iter().collect()
}
