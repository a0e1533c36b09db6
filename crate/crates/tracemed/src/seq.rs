//! Sequences over a finite alphabet `{0, 1, ..., q-1}` and their text form.
//!
//! Text encoding: for alphabets up to size 62 a sequence is one line of
//! characters, symbol `i` rendered as the `i`-th character of
//! `0123456789ABC…Zabc…z`; larger alphabets use whitespace-separated
//! decimal indices. One sequence per line in either case.

use serde::{Deserialize, Serialize};
use thiserror::Error;

const SYMBOL_CHARS: &[u8; 62] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeqError {
    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(u64),
    #[error("symbol {sym} out of range for alphabet of size {size}")]
    SymbolOutOfRange { sym: u32, size: u32 },
    #[error("character {0:?} is not a valid symbol")]
    BadSymbolChar(char),
    #[error("token {0:?} is not a valid symbol index")]
    BadToken(String),
    #[error("sequences use different alphabets ({0} vs {1})")]
    AlphabetMismatch(u32, u32),
}

/// A finite alphabet, identified by its size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    size: u32,
}

impl Alphabet {
    pub fn new(size: u32) -> Result<Self, SeqError> {
        if size < 2 {
            return Err(SeqError::AlphabetTooSmall(size as u64));
        }
        Ok(Alphabet { size })
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    /// Compact single-character rendering is only defined up to size 62.
    pub fn is_compact(&self) -> bool {
        self.size <= SYMBOL_CHARS.len() as u32
    }
}

/// A sequence of symbols over a fixed alphabet. Positions are 1-based in
/// every public interval argument.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seq {
    alphabet: Alphabet,
    symbols: Vec<u32>,
}

impl Seq {
    pub fn new(alphabet: Alphabet, symbols: Vec<u32>) -> Result<Self, SeqError> {
        if let Some(&sym) = symbols.iter().find(|&&s| s >= alphabet.size()) {
            return Err(SeqError::SymbolOutOfRange { sym, size: alphabet.size() });
        }
        Ok(Seq { alphabet, symbols })
    }

    pub fn empty(alphabet: Alphabet) -> Self {
        Seq { alphabet, symbols: Vec::new() }
    }

    /// Convenience constructor from the compact character form.
    pub fn parse(alphabet: Alphabet, line: &str) -> Result<Self, SeqError> {
        let line = line.trim();
        let mut symbols = Vec::new();
        if alphabet.is_compact() {
            for ch in line.chars() {
                let sym = SYMBOL_CHARS
                    .iter()
                    .position(|&c| c as char == ch)
                    .ok_or(SeqError::BadSymbolChar(ch))? as u32;
                symbols.push(sym);
            }
        } else {
            for token in line.split_whitespace() {
                let sym: u32 = token.parse().map_err(|_| SeqError::BadToken(token.to_string()))?;
                symbols.push(sym);
            }
        }
        Seq::new(alphabet, symbols)
    }

    /// Renders the sequence as one line of text.
    pub fn to_line(&self) -> String {
        if self.alphabet.is_compact() {
            self.symbols.iter().map(|&s| SYMBOL_CHARS[s as usize] as char).collect()
        } else {
            let tokens: Vec<String> = self.symbols.iter().map(|s| s.to_string()).collect();
            tokens.join(" ")
        }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    /// Symbol at 1-based position `i`.
    pub fn sym(&self, i: usize) -> u32 {
        self.symbols[i - 1]
    }

    /// Copy of the 1-based inclusive interval `[lo, hi]`; `hi = lo - 1`
    /// yields the empty sequence.
    pub fn interval(&self, lo: usize, hi: usize) -> Seq {
        if hi < lo {
            return Seq::empty(self.alphabet);
        }
        assert!(lo >= 1 && hi <= self.len(), "interval [{lo}, {hi}] out of range");
        Seq { alphabet: self.alphabet, symbols: self.symbols[lo - 1..hi].to_vec() }
    }

    pub fn concat(parts: &[Seq], alphabet: Alphabet) -> Seq {
        let mut symbols = Vec::with_capacity(parts.iter().map(Seq::len).sum());
        for part in parts {
            debug_assert_eq!(part.alphabet, alphabet);
            symbols.extend_from_slice(&part.symbols);
        }
        Seq { alphabet, symbols }
    }
}

pub(crate) fn check_same_alphabet(a: &Seq, b: &Seq) -> Result<Alphabet, SeqError> {
    if a.alphabet() != b.alphabet() {
        return Err(SeqError::AlphabetMismatch(a.alphabet().size(), b.alphabet().size()));
    }
    Ok(a.alphabet())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    #[test]
    fn rejects_unary_alphabet() {
        assert_eq!(Alphabet::new(1), Err(SeqError::AlphabetTooSmall(1)));
        assert_eq!(Alphabet::new(0), Err(SeqError::AlphabetTooSmall(0)));
    }

    #[test]
    fn compact_roundtrip() {
        let a = Alphabet::new(62).unwrap();
        let s = Seq::parse(a, "09AZaz").unwrap();
        assert_eq!(s.symbols(), &[0, 9, 10, 35, 36, 61]);
        assert_eq!(s.to_line(), "09AZaz");
    }

    #[test]
    fn wide_alphabet_roundtrip() {
        let a = Alphabet::new(1024).unwrap();
        let s = Seq::new(a, vec![0, 63, 1023]).unwrap();
        assert_eq!(s.to_line(), "0 63 1023");
        assert_eq!(Seq::parse(a, "0 63 1023").unwrap(), s);
    }

    #[test]
    fn rejects_out_of_range_symbols() {
        let a = bin();
        assert_eq!(
            Seq::new(a, vec![0, 2]),
            Err(SeqError::SymbolOutOfRange { sym: 2, size: 2 })
        );
        assert_eq!(Seq::parse(a, "012"), Err(SeqError::SymbolOutOfRange { sym: 2, size: 2 }));
        assert!(matches!(Seq::parse(a, "0#1"), Err(SeqError::BadSymbolChar('#'))));
    }

    #[test]
    fn intervals_are_one_based_inclusive() {
        let s = Seq::parse(bin(), "0110").unwrap();
        assert_eq!(s.interval(2, 3).to_line(), "11");
        assert_eq!(s.interval(1, 4), s);
        assert!(s.interval(3, 2).is_empty());
        assert_eq!(s.sym(1), 0);
        assert_eq!(s.sym(4), 0);
    }
}
