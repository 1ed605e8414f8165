//! Bit-packed toroidal arena.
//!
//! Rows are stored as little-endian bit vectors, 64 cells per word; bits at
//! or above `width` in the last word of a row are always zero. A step
//! counts neighbours with a bit-sliced adder tree, so one word of 64 cells
//! costs a few dozen machine operations.

use super::{Cell, WorldState};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TorusError {
    #[error("torus must be at least 3x3, got {width}x{height}")]
    TooSmall { width: usize, height: usize },
}

#[derive(Clone, PartialEq, Eq)]
pub struct TorusArena {
    width: usize,
    height: usize,
    words: usize,
    bits: Vec<u64>,
}

impl std::fmt::Debug for TorusArena {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorusArena")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("population", &self.population())
            .finish()
    }
}

impl TorusArena {
    pub fn new(width: usize, height: usize) -> Result<Self, TorusError> {
        if width < 3 || height < 3 {
            return Err(TorusError::TooSmall { width, height });
        }
        let words = width.div_ceil(64);
        Ok(TorusArena { width, height, words, bits: vec![0; words * height] })
    }

    /// Wraps every cell of `s` into the fundamental domain.
    pub fn from_world(width: usize, height: usize, s: &WorldState) -> Result<Self, TorusError> {
        let mut t = Self::new(width, height)?;
        for c in s.iter() {
            t.set(c, true);
        }
        Ok(t)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn wrap(&self, c: Cell) -> (usize, usize) {
        (
            c.x.rem_euclid(self.width as i64) as usize,
            c.y.rem_euclid(self.height as i64) as usize,
        )
    }

    pub fn get(&self, c: Cell) -> bool {
        let (x, y) = self.wrap(c);
        self.bits[y * self.words + x / 64] >> (x % 64) & 1 == 1
    }

    pub fn set(&mut self, c: Cell, alive: bool) {
        let (x, y) = self.wrap(c);
        let w = &mut self.bits[y * self.words + x / 64];
        if alive {
            *w |= 1 << (x % 64);
        } else {
            *w &= !(1 << (x % 64));
        }
    }

    pub fn population(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn to_world(&self) -> WorldState {
        let mut s = WorldState::new();
        for y in 0..self.height {
            for (i, &w) in self.row(y).iter().enumerate() {
                let mut w = w;
                while w != 0 {
                    let b = w.trailing_zeros() as usize;
                    s.insert(Cell::new((i * 64 + b) as i64, y as i64));
                    w &= w - 1;
                }
            }
        }
        s
    }

    fn row(&self, y: usize) -> &[u64] {
        &self.bits[y * self.words..(y + 1) * self.words]
    }

    fn last_mask(&self) -> u64 {
        match self.width % 64 {
            0 => !0,
            r => (1u64 << r) - 1,
        }
    }

    /// One generation with wraparound neighbours.
    pub fn torus_step(&self) -> TorusArena {
        let mut next = self.clone();
        let mut scratch = Scratch::new(self);
        step_into(self, &mut next.bits, &mut scratch);
        next
    }

    /// Advances `n` generations in place, reusing buffers.
    pub fn step_n(&mut self, n: u64) {
        let mut scratch = Scratch::new(self);
        let mut out = vec![0u64; self.bits.len()];
        for _ in 0..n {
            step_into(self, &mut out, &mut scratch);
            std::mem::swap(&mut self.bits, &mut out);
        }
    }
}

struct Scratch {
    west: Vec<u64>,
    east: Vec<u64>,
}

impl Scratch {
    fn new(t: &TorusArena) -> Self {
        Scratch { west: vec![0; t.bits.len()], east: vec![0; t.bits.len()] }
    }
}

#[inline(always)]
fn full_add(a: u64, b: u64, c: u64) -> (u64, u64) {
    let t = a ^ b;
    (t ^ c, (a & b) | (c & t))
}

// Bit j of `west` holds the cell at column j-1, bit j of `east` column j+1.
fn shift_row(row: &[u64], width: usize, mask: u64, west: &mut [u64], east: &mut [u64]) {
    let n = row.len();
    let top = (width - 1) % 64;
    let wrap_in_west = row[n - 1] >> top & 1;
    let wrap_in_east = row[0] & 1;
    for i in 0..n {
        let prev = if i == 0 { wrap_in_west } else { row[i - 1] >> 63 };
        west[i] = row[i] << 1 | prev;
        let next = if i + 1 < n { row[i + 1] << 63 } else { 0 };
        east[i] = row[i] >> 1 | next;
    }
    west[n - 1] &= mask;
    east[n - 1] |= wrap_in_east << top;
}

fn step_into(t: &TorusArena, out: &mut [u64], scratch: &mut Scratch) {
    let (w, h, n) = (t.width, t.height, t.words);
    let mask = t.last_mask();
    scratch
        .west
        .par_chunks_mut(n)
        .zip(scratch.east.par_chunks_mut(n))
        .zip(t.bits.par_chunks(n))
        .for_each(|((we, ea), row)| shift_row(row, w, mask, we, ea));
    let (west, east, bits) = (&scratch.west, &scratch.east, &t.bits);
    out.par_chunks_mut(n).enumerate().for_each(|(y, orow)| {
        let up = (y + h - 1) % h * n;
        let dn = (y + 1) % h * n;
        let me = y * n;
        for i in 0..n {
            let (s1, c1) = full_add(west[up + i], bits[up + i], east[up + i]);
            let (s2, c2) = full_add(west[dn + i], bits[dn + i], east[dn + i]);
            let (s3, c3) = (west[me + i] ^ east[me + i], west[me + i] & east[me + i]);
            let (ones, c4) = full_add(s1, s2, s3);
            let (t1, d1) = full_add(c1, c2, c3);
            let (twos, d2) = (t1 ^ c4, t1 & c4);
            let fours = d1 | d2;
            orow[i] = !fours & twos & (ones | bits[me + i]);
        }
        orow[n - 1] &= mask;
    });
}
