//! Free group words over a small alphabet of generators.
//!
//! Letters are nonzero i32 values; the inverse of letter `g` is `-g`.
//! Words are freely reduced vectors of letters.

/// A freely reduced word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<i32>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn gen(g: i32) -> Self {
        assert!(g != 0);
        Word(vec![g])
    }

    pub fn from_letters(letters: &[i32]) -> Self {
        let mut w = Word::empty();
        for &l in letters {
            w.push(l);
        }
        w
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Appends a letter, cancelling against the tail if inverse.
    pub fn push(&mut self, letter: i32) {
        assert!(letter != 0);
        if self.0.last() == Some(&-letter) {
            self.0.pop();
        } else {
            self.0.push(letter);
        }
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&l| -l).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut w = self.clone();
        for &l in &other.0 {
            w.push(l);
        }
        w
    }

    pub fn conjugate(&self, by: &Word) -> Word {
        by.concat(self).concat(&by.inverse())
    }

    pub fn pow(&self, n: i64) -> Word {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut w = Word::empty();
        for _ in 0..n.unsigned_abs() {
            w = w.concat(&base);
        }
        w
    }

    /// Cyclic reduction: repeatedly strip inverse first/last letters.
    pub fn cyclically_reduced(&self) -> Word {
        let mut v = self.0.clone();
        while v.len() >= 2 && v[0] == -v[v.len() - 1] {
            v.remove(0);
            v.pop();
        }
        Word(v)
    }

    /// All cyclic rotations of the word.
    pub fn rotations(&self) -> Vec<Word> {
        let n = self.0.len();
        if n == 0 {
            return vec![Word::empty()];
        }
        (0..n)
            .map(|i| {
                let mut v = self.0[i..].to_vec();
                v.extend_from_slice(&self.0[..i]);
                Word(v)
            })
            .collect()
    }

    /// Number of occurrences of letter g or its inverse.
    pub fn count_abs(&self, g: i32) -> usize {
        self.0.iter().filter(|&&l| l.abs() == g.abs()).count()
    }

    /// Exponent sum of generator g.
    pub fn exponent_sum(&self, g: i32) -> i64 {
        let g = g.abs();
        self.0
            .iter()
            .map(|&l| {
                if l == g {
                    1
                } else if l == -g {
                    -1
                } else {
                    0
                }
            })
            .sum()
    }
}

/// A map sending each generator to a word; extended to words as a
/// homomorphism of the free group.
#[derive(Debug, Clone)]
pub struct Endo {
    /// images[g-1] is the image of generator g (g from 1).
    pub images: Vec<Word>,
}

impl Endo {
    pub fn identity(rank: usize) -> Self {
        Endo {
            images: (1..=rank as i32).map(Word::gen).collect(),
        }
    }

    pub fn apply(&self, w: &Word) -> Word {
        let mut out = Word::empty();
        for &l in &w.0 {
            let img = &self.images[(l.abs() - 1) as usize];
            let img = if l > 0 { img.clone() } else { img.inverse() };
            out = out.concat(&img);
        }
        out
    }

    pub fn compose(&self, inner: &Endo) -> Endo {
        Endo {
            images: inner.images.iter().map(|w| self.apply(w)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_reduction() {
        let mut w = Word::empty();
        for &l in &[1, 2, -2, -1, 3] {
            w.push(l);
        }
        assert_eq!(w, Word(vec![3]));
    }

    #[test]
    fn inverse_concat() {
        let w = Word::from_letters(&[1, 2, -3]);
        assert!(w.concat(&w.inverse()).is_empty());
    }

    #[test]
    fn cyclic_reduction() {
        let w = Word::from_letters(&[1, 2, 3, -1]);
        assert_eq!(w.cyclically_reduced(), Word(vec![2, 3]));
    }

    #[test]
    fn endo_homomorphism() {
        let e = Endo {
            images: vec![Word::from_letters(&[1, 2]), Word::gen(2)],
        };
        let w = Word::from_letters(&[1, -2]);
        assert_eq!(e.apply(&w), Word(vec![1]));
    }
}
