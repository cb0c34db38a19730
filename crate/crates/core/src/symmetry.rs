//! Point-group (D4) symmetry adaptation of the two-excitation pair basis.
//!
//! The open square array is invariant under the eight rotations and
//! reflections of the square about its centre, and the pair Hamiltonian
//! commutes with the induced permutation of pairs. Projecting onto the
//! irreducible representations splits the pair space into blocks: four
//! one-dimensional irreps and two identical copies of the two-dimensional
//! `E` irrep block. All basis vectors are real and orthonormal.

use serde::{Deserialize, Serialize};

use crate::twoexc::PairBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Irrep {
    A1,
    A2,
    B1,
    B2,
    E,
}

/// Group elements as integer 2x2 matrices acting on centred coordinates,
/// in the order `1, C4, C2, C4^3, sigma_x, sigma_y, sigma_d, sigma_d'`.
const OPS: [[i64; 4]; 8] = [
    [1, 0, 0, 1],
    [0, -1, 1, 0],
    [-1, 0, 0, -1],
    [0, 1, -1, 0],
    [1, 0, 0, -1],
    [-1, 0, 0, 1],
    [0, 1, 1, 0],
    [0, -1, -1, 0],
];

const CHARACTERS: [(Irrep, [f64; 8]); 4] = [
    (Irrep::A1, [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]),
    (Irrep::A2, [1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0]),
    (Irrep::B1, [1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0, -1.0]),
    (Irrep::B2, [1.0, -1.0, 1.0, -1.0, -1.0, -1.0, 1.0, 1.0]),
];

/// Sparse real column: `(pair index, coefficient)`.
pub type SparseVec = Vec<(usize, f64)>;

/// Orthonormal basis of one symmetry sector.
#[derive(Debug, Clone)]
pub struct SymmetryBlock {
    pub irrep: Irrep,
    /// Row of the `E` representation (0 or 1); 0 for one-dimensional irreps.
    pub partner: u8,
    pub columns: Vec<SparseVec>,
}

impl SymmetryBlock {
    pub fn dim(&self) -> usize {
        self.columns.len()
    }
}

/// Site permutation induced by each group element.
fn site_maps(l: usize) -> [Vec<usize>; 8] {
    let c = l as i64 - 1;
    std::array::from_fn(|g| {
        let m = OPS[g];
        (0..l * l)
            .map(|s| {
                let u = 2 * (s % l) as i64 - c;
                let v = 2 * (s / l) as i64 - c;
                let (u2, v2) = (m[0] * u + m[1] * v, m[2] * u + m[3] * v);
                let (ix, iy) = (((u2 + c) / 2) as usize, ((v2 + c) / 2) as usize);
                iy * l + ix
            })
            .collect()
    })
}

fn accumulate(acc: &mut Vec<(usize, f64)>, p: usize, w: f64) {
    match acc.iter_mut().find(|(q, _)| *q == p) {
        Some(e) => e.1 += w,
        None => acc.push((p, w)),
    }
}

fn finish(mut v: SparseVec) -> Option<SparseVec> {
    v.retain(|&(_, w)| w.abs() > 1e-12);
    let n2: f64 = v.iter().map(|(_, w)| w * w).sum();
    if n2 < 1e-20 {
        return None;
    }
    let n = n2.sqrt();
    v.iter_mut().for_each(|e| e.1 /= n);
    v.sort_by_key(|e| e.0);
    Some(v)
}

fn dot(a: &SparseVec, b: &SparseVec) -> f64 {
    a.iter().filter_map(|(p, x)| b.iter().find(|(q, _)| q == p).map(|(_, y)| x * y)).sum()
}

/// Symmetry-adapted blocks in the order `A1, A2, B1, B2, E(0), E(1)`.
///
/// The two `E` blocks are related by the transfer operator, so the
/// Hamiltonian restricted to either one is the same matrix.
pub fn pair_blocks(basis: &PairBasis, l: usize) -> Vec<SymmetryBlock> {
    let maps = site_maps(l);
    let image = |g: usize, p: usize| {
        let (i, j) = basis.pair(p);
        let (a, b) = (maps[g][i], maps[g][j]);
        basis.index(a.min(b), a.max(b))
    };
    let mut seen = vec![false; basis.dim()];
    let mut one_d: Vec<Vec<SparseVec>> = vec![Vec::new(); 4];
    let mut e0: Vec<SparseVec> = Vec::new();
    let mut e1: Vec<SparseVec> = Vec::new();
    for p in 0..basis.dim() {
        if seen[p] {
            continue;
        }
        let mut orbit: Vec<usize> = (0..8).map(|g| image(g, p)).collect();
        orbit.sort_unstable();
        orbit.dedup();
        for &q in &orbit {
            seen[q] = true;
        }
        for (slot, (_, chi)) in CHARACTERS.iter().enumerate() {
            let mut v = Vec::new();
            for g in 0..8 {
                accumulate(&mut v, image(g, p), chi[g]);
            }
            if let Some(v) = finish(v) {
                one_d[slot].push(v);
            }
        }
        // E: project each orbit member onto row 0, orthonormalize, then
        // transfer to row 1 with the same group sum
        let mut kept: Vec<SparseVec> = Vec::new();
        for &q in &orbit {
            let mut v = Vec::new();
            for g in 0..8 {
                accumulate(&mut v, image(g, q), OPS[g][0] as f64);
            }
            let Some(mut v) = finish(v) else { continue };
            for k in &kept {
                let c = dot(&v, k);
                for &(pk, wk) in k {
                    accumulate(&mut v, pk, -c * wk);
                }
            }
            if let Some(v) = finish(v) {
                kept.push(v);
            }
        }
        for v in kept {
            let mut w = Vec::new();
            for g in 0..8 {
                let d10 = OPS[g][2] as f64;
                if d10 == 0.0 {
                    continue;
                }
                for &(q, c) in &v {
                    accumulate(&mut w, image(g, q), d10 * c);
                }
            }
            let w = finish(w).expect("E partner transfer cannot vanish");
            e0.push(v);
            e1.push(w);
        }
    }
    let mut blocks: Vec<SymmetryBlock> = CHARACTERS
        .iter()
        .zip(one_d)
        .map(|((irrep, _), columns)| SymmetryBlock { irrep: *irrep, partner: 0, columns })
        .collect();
    blocks.push(SymmetryBlock { irrep: Irrep::E, partner: 0, columns: e0 });
    blocks.push(SymmetryBlock { irrep: Irrep::E, partner: 1, columns: e1 });
    blocks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(block: &SymmetryBlock, dim: usize) -> Vec<Vec<f64>> {
        block
            .columns
            .iter()
            .map(|c| {
                let mut v = vec![0.0; dim];
                for &(p, w) in c {
                    v[p] = w;
                }
                v
            })
            .collect()
    }

    #[test]
    fn group_maps_are_permutations() {
        for l in [2, 3, 4, 5] {
            for m in site_maps(l) {
                let mut s = m.clone();
                s.sort_unstable();
                assert_eq!(s, (0..l * l).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn blocks_form_orthonormal_basis() {
        for l in [2, 3, 4, 5] {
            let basis = PairBasis::new(l * l);
            let blocks = pair_blocks(&basis, l);
            let total: usize = blocks.iter().map(|b| b.dim()).sum();
            assert_eq!(total, basis.dim(), "L = {l}");
            assert_eq!(blocks[4].dim(), blocks[5].dim());
            let all: Vec<Vec<f64>> = blocks.iter().flat_map(|b| dense(b, basis.dim())).collect();
            for a in 0..all.len() {
                for b in a..all.len() {
                    let d: f64 = all[a].iter().zip(&all[b]).map(|(x, y)| x * y).sum();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    assert!((d - expect).abs() < 1e-12, "L = {l}: <{a}|{b}> = {d}");
                }
            }
        }
    }
}
