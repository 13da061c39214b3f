//! Words in a free group, cyclic reduction and primitive roots, the
//! length-three rigidity condition, and rose builders.
//!
//! Generator `i` is the letter `i + 1`; its inverse is `-(i + 1)`. As text,
//! generators are spelled with [`ALPHABET`] and inverses with capitals.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::WordError;
use crate::fins::{Fin, GraphWithFins};
use crate::graph::{Dart, Graph};

/// Generator spellings: `x`, `y`, `z` come first so rank-two words read as usual.
pub const ALPHABET: &str = "xyzabcdefghijklmnopqrstuvw";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Word(pub Vec<i32>);

/// A cyclically reduced word stored at its least rotation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CyclicWord(Vec<i32>);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rigidity {
    Sufficient,
    Unknown,
}

impl Word {
    pub fn new(letters: Vec<i32>) -> Self {
        Word(letters)
    }

    pub fn parse(s: &str) -> Result<Self, WordError> {
        s.chars()
            .map(|c| {
                let lower = c.to_ascii_lowercase();
                let i = ALPHABET.find(lower).ok_or(WordError::BadLetter(c))? as i32 + 1;
                Ok(if c.is_ascii_uppercase() { -i } else { i })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }

    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_rank(&self, rank: usize) -> Result<(), WordError> {
        match self.0.iter().find(|&&l| l == 0 || l.unsigned_abs() as usize > rank) {
            Some(&letter) => Err(WordError::LetterOutOfRange { letter, rank }),
            None => Ok(()),
        }
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| -l).collect())
    }

    /// Free reduction.
    pub fn reduce(&self) -> Word {
        let mut out: Vec<i32> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    /// Writes the reduced word as `c · u · c⁻¹` with `u` cyclically reduced.
    pub fn cyclic_reduce(&self) -> Result<(CyclicWord, Word), WordError> {
        let (core, conj) = self.cyclic_core()?;
        Ok((CyclicWord::new(core.0), conj))
    }

    /// Like `cyclic_reduce` but keeps the rotation of the input.
    pub fn cyclic_core(&self) -> Result<(Word, Word), WordError> {
        let r = self.reduce().0;
        if r.is_empty() {
            return Err(WordError::EmptyWord);
        }
        let mut i = 0;
        let mut j = r.len();
        while j - i >= 2 && r[i] == -r[j - 1] {
            i += 1;
            j -= 1;
        }
        Ok((Word(r[i..j].to_vec()), Word(r[..i].to_vec())))
    }

    pub fn exponent_sum(&self, generator: usize) -> i64 {
        let g = generator as i32 + 1;
        self.0.iter().map(|&l| if l == g { 1 } else if l == -g { -1 } else { 0 }).sum()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for &l in &self.0 {
            let c = ALPHABET.as_bytes()[l.unsigned_abs() as usize - 1] as char;
            let c = if l < 0 { c.to_ascii_uppercase() } else { c };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

fn least_rotation(w: &[i32]) -> Vec<i32> {
    (0..w.len().max(1))
        .map(|k| w[k..].iter().chain(&w[..k]).copied().collect::<Vec<_>>())
        .min()
        .unwrap_or_default()
}

/// Smallest period `p` dividing `len` with `w[i] == w[i + p]` cyclically.
pub fn primitive_period<T: PartialEq>(w: &[T]) -> usize {
    let n = w.len();
    (1..=n)
        .filter(|p| n.is_multiple_of(*p))
        .find(|&p| (0..n).all(|i| w[i] == w[(i + p) % n]))
        .unwrap_or(n)
}

impl CyclicWord {
    /// Callers must pass a cyclically reduced word.
    fn new(w: Vec<i32>) -> Self {
        CyclicWord(least_rotation(&w))
    }

    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> CyclicWord {
        CyclicWord::new(self.0.iter().rev().map(|l| -l).collect())
    }

    /// `(root, k)` with this word equal to `root^k` and `root` not a proper power.
    pub fn primitive_root(&self) -> (CyclicWord, usize) {
        let p = primitive_period(&self.0);
        (CyclicWord::new(self.0[..p].to_vec()), self.0.len() / p)
    }

    /// Root up to inversion, as a single canonical representative.
    pub fn line_key(&self) -> CyclicWord {
        let root = self.primitive_root().0;
        let inv = root.inverse();
        root.min(inv)
    }

    pub fn as_word(&self) -> Word {
        Word(self.0.clone())
    }
}

/// True when `u` and `w` have conjugate nontrivial powers.
pub fn commensurable(u: &Word, w: &Word) -> Result<bool, WordError> {
    let (cu, _) = u.cyclic_reduce()?;
    let (cw, _) = w.cyclic_reduce()?;
    Ok(cu.line_key() == cw.line_key())
}

fn triples(w: &[i32], into: &mut BTreeSet<[i32; 3]>) {
    let n = w.len();
    for i in 0..n {
        into.insert([w[i], w[(i + 1) % n], w[(i + 2) % n]]);
    }
}

/// Reports `Sufficient` when some line of the pattern contains every reduced
/// word of length three as a subsegment.
///
/// A line is unoriented, so both the cyclic word and its inverse are scanned.
pub fn rigidity_sufficient(rank: usize, words: &[Word]) -> Result<Rigidity, WordError> {
    let r = rank as i32;
    let all = (2 * r * (2 * r - 1) * (2 * r - 1)) as usize;
    for w in words {
        w.check_rank(rank)?;
        let (cw, _) = w.cyclic_reduce()?;
        let mut seen = BTreeSet::new();
        triples(cw.letters(), &mut seen);
        triples(cw.inverse().letters(), &mut seen);
        if seen.len() == all {
            return Ok(Rigidity::Sufficient);
        }
    }
    Ok(Rigidity::Unknown)
}

/// Rose with one petal per generator and one fin per word.
///
/// Fins are named `w0, w1, ...` and oriented fin `wi` gets colour `wi+`
/// forwards and `wi-` backwards, so no two oriented fins share a colour.
pub fn pattern_to_fins(rank: usize, words: &[Word]) -> Result<GraphWithFins, WordError> {
    if rank == 0 || rank > ALPHABET.len() {
        return Err(WordError::BadRank(rank));
    }
    let mut cyclic = Vec::with_capacity(words.len());
    for w in words {
        w.check_rank(rank)?;
        cyclic.push(w.cyclic_reduce()?.0);
    }
    for i in 0..cyclic.len() {
        for j in i + 1..cyclic.len() {
            if cyclic[i].line_key() == cyclic[j].line_key() {
                return Err(WordError::CommensurableWords(i, j));
            }
        }
    }
    let edges = (0..rank)
        .map(|i| (ALPHABET[i..i + 1].to_string(), 0, 0))
        .collect();
    let graph = Graph::new(vec!["o".into()], edges).expect("rose is well formed");
    let mut fins = Vec::new();
    let mut colours = Vec::new();
    for (i, w) in words.iter().enumerate() {
        let (core, _) = w.cyclic_core()?;
        let cycle = core
            .0
            .iter()
            .map(|&l| Dart::new(l.unsigned_abs() as usize - 1, l > 0))
            .collect();
        fins.push(Fin { name: format!("w{i}"), cycle });
        colours.push([format!("w{i}+"), format!("w{i}-")]);
    }
    Ok(GraphWithFins::new(graph, fins, colours).expect("cyclically reduced words give immersed loops"))
}

/// Uniformly random reduced word of the given length.
pub fn random_reduced_word<R: Rng + ?Sized>(rank: usize, len: usize, rng: &mut R) -> Word {
    let r = rank as i32;
    let mut out: Vec<i32> = Vec::with_capacity(len);
    while out.len() < len {
        let mut l = rng.gen_range(1..=r);
        if rng.gen_bool(0.5) {
            l = -l;
        }
        if out.last() != Some(&-l) {
            out.push(l);
        }
    }
    Word(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        let w = Word::parse("xyX").unwrap();
        assert_eq!(w.0, vec![1, 2, -1]);
        assert_eq!(w.to_string(), "xyX");
        assert!(Word::parse("x!").is_err());
    }

    #[test]
    fn cyclic_reduction_of_a_conjugate() {
        let (c, conj) = Word::parse("xyX").unwrap().cyclic_reduce().unwrap();
        assert_eq!(c.letters(), &[2]);
        assert_eq!(conj.0, vec![1]);
        assert_eq!(Word::parse("xX").unwrap().cyclic_reduce(), Err(WordError::EmptyWord));
    }

    #[test]
    fn primitive_roots() {
        let (c, _) = Word::parse("xyxy").unwrap().cyclic_reduce().unwrap();
        let (root, k) = c.primitive_root();
        assert_eq!(root.letters(), &[1, 2]);
        assert_eq!(k, 2);
        let (c, _) = Word::parse("xyy").unwrap().cyclic_reduce().unwrap();
        assert_eq!(c.primitive_root().1, 1);
    }

    #[test]
    fn commensurability_up_to_rotation_and_inverse() {
        let a = Word::parse("xyxy").unwrap();
        assert!(commensurable(&a, &Word::parse("YX").unwrap()).unwrap());
        assert!(commensurable(&a, &Word::parse("yx").unwrap()).unwrap());
        assert!(!commensurable(&a, &Word::parse("xY").unwrap()).unwrap());
    }

    #[test]
    fn short_words_are_not_sufficient() {
        assert_eq!(rigidity_sufficient(2, &[Word::parse("xy").unwrap()]).unwrap(), Rigidity::Unknown);
    }

    #[test]
    fn pattern_rejects_commensurable_words() {
        let ws = [Word::parse("xy").unwrap(), Word::parse("YXYX").unwrap()];
        assert_eq!(pattern_to_fins(2, &ws), Err(WordError::CommensurableWords(0, 1)));
        let ws = [Word::parse("xX").unwrap()];
        assert_eq!(pattern_to_fins(2, &ws), Err(WordError::EmptyWord));
    }

    #[test]
    fn pattern_fin_lengths() {
        let ws = [Word::parse("x").unwrap(), Word::parse("y").unwrap(), Word::parse("xy").unwrap()];
        let x = pattern_to_fins(2, &ws).unwrap();
        assert_eq!(x.num_vertices(), 1);
        assert_eq!(x.fins().iter().map(|f| f.len()).collect::<Vec<_>>(), vec![1, 1, 2]);
    }
}
