//! Reduced words in the free group F_k.
//!
//! Letters are nonzero i32 values: +i and -i (1 <= i <= k) are a generator
//! and its inverse.  Words are stored fully reduced (no adjacent l, -l), so
//! equality of group elements is equality of letter vectors.

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FreeWord {
    letters: Vec<i32>, // index 0 is the leftmost letter
}

impl FreeWord {
    pub fn identity() -> Self {
        FreeWord { letters: Vec::new() }
    }

    /// Builds a word from letters, reducing as it goes.
    pub fn from_letters(letters: &[i32]) -> Self {
        let mut w = FreeWord::identity();
        for &l in letters {
            w.push_right(l);
        }
        w
    }

    pub fn letter(l: i32) -> Self {
        assert!(l != 0, "letter 0 is not a generator");
        FreeWord { letters: vec![l] }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[i32] {
        &self.letters
    }

    /// Appends a letter on the right, cancelling at the seam.
    pub fn push_right(&mut self, l: i32) {
        assert!(l != 0, "letter 0 is not a generator");
        if self.letters.last() == Some(&-l) {
            self.letters.pop();
        } else {
            self.letters.push(l);
        }
    }

    /// self * rhs with cancellation across the seam only; both inputs are
    /// already reduced, so no interior cancellation can appear.
    pub fn mul(&self, rhs: &FreeWord) -> FreeWord {
        let mut out = self.clone();
        for &l in &rhs.letters {
            out.push_right(l);
        }
        out
    }

    pub fn inv(&self) -> FreeWord {
        FreeWord {
            letters: self.letters.iter().rev().map(|&l| -l).collect(),
        }
    }

    /// Canonical byte encoding: letters emitted rightmost-first, each as a
    /// little-endian i32.  Left multiplication then only appends bytes, so a
    /// streaming hash of this encoding can be maintained in O(1) per step.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 * self.letters.len());
        for &l in self.letters.iter().rev() {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out
    }
}
