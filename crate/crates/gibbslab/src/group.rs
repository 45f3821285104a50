//! The genus-2 surface group as an explicit fuchsian lattice: the symmetric
//! octagon group generated by rotated copies of one hyperbolic translation,
//! together with orbit-ball enumeration, Dirichlet-domain reduction,
//! representations and quasifuchsian bending.
//!
//! The lattice is generated by the four side-pairing translations
//! `g_k = R(kπ/4) · T · R(kπ/4)⁻¹` (rotations about `i` in steps of π/4, `T`
//! the translation of trace `2·cot(π/8) = 2(1+√2)` along the unit
//! half-circle). These satisfy the octagon side-pairing relation
//! `g0 g1⁻¹ g2 g3⁻¹ g0⁻¹ g1 g2⁻¹ g3 = 1`. The canonical presentation with
//! relator `[a1,b1][a2,b2]` is realised inside the same lattice by
//!
//! ```text
//! a1 = g0,  b1 = g1,  a2 = g1 g0 g1⁻¹ g2 g1⁻¹,  b2 = g0 g3 g1⁻¹,
//! ```
//!
//! which evaluates to the identity exactly (checked to 60 digits offline and
//! to 1e−9 in the constructor). Words of group elements are always written
//! over the eight canonical symbols; ball enumeration runs over the
//! side-pairing alphabet, whose letters carry fixed canonical spellings.

use crate::hypgeom::{hdist, GeomError, HPoint, MobiusMap};
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;
use thiserror::Error;

/// Circumradius of the Dirichlet octagon about `i`: `arccosh(3 + 2√2)`.
pub fn dirichlet_circumradius() -> f64 {
    let x: f64 = 3.0 + 2.0 * std::f64::consts::SQRT_2;
    x.acosh()
}

/// Half the generator translation length (the octagon apothem),
/// `arccosh(1 + √2)`.
pub fn octagon_apothem() -> f64 {
    let x: f64 = 1.0 + std::f64::consts::SQRT_2;
    x.acosh()
}

/// BFS pruning slack beyond the requested radius. Completeness needs the
/// Dirichlet circumradius (≈ 2.449); a little margin is kept on top.
const BALL_SLACK: f64 = 3.2;

const REDUCE_ITER_CAP: usize = 10_000;
/// Matrix dedup quantum after sign canonicalisation.
const DEDUP_QUANTUM: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("word-length cap {cap} reached with {frontier} words still on the frontier; raise the cap or lower R")]
    BallCapExceeded { cap: usize, frontier: usize },
    #[error("fundamental-domain reduction did not terminate within {0} steps")]
    ReduceIterationCap(usize),
    #[error("fundamental-domain reduction hit a non-finite point")]
    ReduceNonFinite,
    #[error("relator image is not the identity (defect {defect:.3e})")]
    RelatorDefect { defect: f64 },
    #[error("generator image {index} is not unimodular or not loadable: {source}")]
    BadGenerator { index: usize, source: GeomError },
    #[error("bending requires a fuchsian representation")]
    BendNeedsFuchsian,
    #[error("bending angle {0} outside the small-bending regime |θ| < π/4")]
    BendAngleTooLarge(f64),
    #[error("bending axis is not hyperbolic (|trace| = {0:.6})")]
    BendAxisNotHyperbolic(f64),
    #[error("unknown generator symbol {0}")]
    UnknownSymbol(u8),
}

// ---------------------------------------------------------------------------
// Words over the canonical generators
// ---------------------------------------------------------------------------

/// Letters 0..=7: `a1, b1, a2, b2, a1⁻¹, b1⁻¹, a2⁻¹, b2⁻¹`.
pub type Letter = u8;

pub const LETTER_NAMES: [char; 8] = ['a', 'b', 'c', 'd', 'A', 'B', 'C', 'D'];

pub fn letter_inverse(l: Letter) -> Letter {
    (l + 4) % 8
}

/// Freely reduced word over the eight canonical generator symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Builds a word, freely reducing adjacent inverse pairs.
    pub fn new(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            debug_assert!(l < 8);
            if out.last().copied() == Some(letter_inverse(l)) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn concat(&self, other: &Word) -> Word {
        Word::new(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&l| letter_inverse(l)).collect())
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parses the compact spelling produced by `Display` (e.g. `abAC`).
    pub fn parse(s: &str) -> Result<Self, GroupError> {
        let mut letters = Vec::new();
        for ch in s.chars() {
            if ch == 'e' && s.len() == 1 {
                return Ok(Word::empty());
            }
            match LETTER_NAMES.iter().position(|&n| n == ch) {
                Some(i) => letters.push(i as Letter),
                None => return Err(GroupError::UnknownSymbol(ch as u8)),
            }
        }
        Ok(Word::new(letters))
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for &l in &self.0 {
            write!(f, "{}", LETTER_NAMES[l as usize])?;
        }
        Ok(())
    }
}

/// The canonical genus-2 relator `a1 b1 a1⁻¹ b1⁻¹ a2 b2 a2⁻¹ b2⁻¹`.
pub fn canonical_relator() -> Word {
    Word(vec![0, 1, 4, 5, 2, 3, 6, 7])
}

// ---------------------------------------------------------------------------
// Group elements
// ---------------------------------------------------------------------------

/// A lattice element: canonical word, evaluated matrix, and the orbit
/// distance `d(γ) = dist(o, γ·o)`.
#[derive(Debug, Clone)]
pub struct GroupElement {
    pub word: Word,
    pub matrix: MobiusMap,
    pub orbit_dist: f64,
}

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement { word: Word::empty(), matrix: MobiusMap::identity(), orbit_dist: 0.0 }
    }
}

/// Orbit distance of a real unimodular matrix:
/// `cosh d(i, m·i) = ‖m‖_F² / 2`.
pub fn orbit_distance(m: &MobiusMap) -> f64 {
    (m.frobenius_sq() / 2.0).max(1.0).acosh()
}

// ---------------------------------------------------------------------------
// Presentation
// ---------------------------------------------------------------------------

/// The symmetric octagon lattice with its canonical presentation.
#[derive(Debug, Clone)]
pub struct GroupPresentation {
    /// Images of `a1, b1, a2, b2`.
    canonical: [MobiusMap; 4],
    /// The four side-pairing translations `g0..g3` of the Dirichlet octagon.
    side: [MobiusMap; 4],
    /// Canonical spelling of each side-pairing letter `g0..g3, g0⁻¹..g3⁻¹`.
    side_words: [Word; 8],
}

/// Constructs the regular-octagon genus-2 lattice.
pub fn octagon_generators() -> GroupPresentation {
    let tr = 1.0 + std::f64::consts::SQRT_2;
    let off = (2.0 + 2.0 * std::f64::consts::SQRT_2).sqrt();
    let t = MobiusMap::from_sl2(
        Complex64::new(tr, 0.0),
        Complex64::new(off, 0.0),
        Complex64::new(off, 0.0),
        Complex64::new(tr, 0.0),
    )
    .expect("octagon translation is unimodular");
    let mut side = [MobiusMap::identity(); 4];
    for (k, s) in side.iter_mut().enumerate() {
        let r = MobiusMap::rotation(k as f64 * std::f64::consts::PI / 8.0);
        *s = r * t * r.inverse();
    }
    // canonical generators: a1 = g0, b1 = g1, a2 = g1 g0 g1⁻¹ g2 g1⁻¹, b2 = g0 g3 g1⁻¹
    let a1 = side[0];
    let b1 = side[1];
    let a2 = side[1] * side[0] * side[1].inverse() * side[2] * side[1].inverse();
    let b2 = side[0] * side[3] * side[1].inverse();
    // side letters spelled over the canonical alphabet:
    //   g0 = a1, g1 = b1, g2 = b1 a1⁻¹ b1⁻¹ a2 b1, g3 = a1⁻¹ b2 b1
    let side_pos = [
        Word::new([0]),
        Word::new([1]),
        Word::new([1, 4, 5, 2, 1]),
        Word::new([4, 3, 1]),
    ];
    let mut side_words: [Word; 8] = Default::default();
    for k in 0..4 {
        side_words[k] = side_pos[k].clone();
        side_words[k + 4] = side_pos[k].inverse();
    }
    let g = GroupPresentation { canonical: [a1, b1, a2, b2], side, side_words };
    debug_assert!(g.relator_defect() < 1e-9, "octagon relator defect {}", g.relator_defect());
    debug_assert!(g.side_spelling_defect() < 1e-9);
    g
}

impl GroupPresentation {
    /// The eight canonical generator matrices `a1, b1, a2, b2` and inverses.
    pub fn generator(&self, l: Letter) -> MobiusMap {
        if l < 4 {
            self.canonical[l as usize]
        } else {
            self.canonical[(l - 4) as usize].inverse()
        }
    }

    pub fn canonical_generators(&self) -> &[MobiusMap; 4] {
        &self.canonical
    }

    /// The side-pairing translations of the Dirichlet octagon about `i`.
    pub fn side_pairings(&self) -> &[MobiusMap; 4] {
        &self.side
    }

    /// Evaluates a canonical word to its matrix (left-to-right product).
    pub fn eval(&self, w: &Word) -> MobiusMap {
        let mut m = MobiusMap::identity();
        for &l in w.letters() {
            m = m * self.generator(l);
        }
        m
    }

    /// Sup-norm defect of the evaluated canonical relator against ±identity.
    pub fn relator_defect(&self) -> f64 {
        self.eval(&canonical_relator()).dist_up_to_sign(&MobiusMap::identity())
    }

    fn side_spelling_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..4 {
            let spelled = self.eval(&self.side_words[k]);
            worst = worst.max(spelled.dist_up_to_sign(&self.side[k]));
        }
        worst
    }

    fn side_matrix(&self, l: u8) -> MobiusMap {
        if l < 4 {
            self.side[l as usize]
        } else {
            self.side[(l - 4) as usize].inverse()
        }
    }

    /// Exact orbit ball `B_R = {γ : dist(o, γ·o) ≤ R}`.
    ///
    /// Enumeration is a layered BFS over the side-pairing alphabet (the
    /// Dirichlet side pairings, so pruning at `R + slack` with slack above
    /// the domain circumradius is complete), with duplicate elements removed
    /// by quantised sign-canonical hashing. The result is deterministically
    /// ordered by (canonical word length, lexicographic word). `cap` bounds
    /// the side-alphabet word length.
    pub fn ball(&self, radius: f64, cap: usize) -> Result<Vec<GroupElement>, GroupError> {
        let mut dedup = DedupTable::new();
        dedup.insert(&MobiusMap::identity());
        let mut out: Vec<(Word, MobiusMap, f64)> = vec![(Word::empty(), MobiusMap::identity(), 0.0)];
        // frontier of (matrix, last side letter, canonical word)
        let mut frontier: Vec<(MobiusMap, u8, Word)> = vec![(MobiusMap::identity(), u8::MAX, Word::empty())];
        let mut depth = 0usize;
        while !frontier.is_empty() {
            if depth >= cap {
                return Err(GroupError::BallCapExceeded { cap, frontier: frontier.len() });
            }
            depth += 1;
            // fan out one layer in parallel; merge in deterministic order
            let chunks: Vec<Vec<(MobiusMap, u8, Word, f64)>> = frontier
                .par_chunks(512)
                .map(|chunk| {
                    let mut local = Vec::new();
                    for (m, last, word) in chunk {
                        for l in 0..8u8 {
                            if *last != u8::MAX && (*last + 4) % 8 == l {
                                continue;
                            }
                            let m2 = *m * self.side_matrix(l);
                            let d2 = orbit_distance(&m2);
                            if d2 > radius + BALL_SLACK {
                                continue;
                            }
                            local.push((m2, l, word.concat(&self.side_words[l as usize]), d2));
                        }
                    }
                    local
                })
                .collect();
            let mut next = Vec::new();
            for chunk in chunks {
                for (m2, l, w2, d2) in chunk {
                    if dedup.insert(&m2) {
                        if d2 <= radius {
                            out.push((w2.clone(), m2, d2));
                        }
                        next.push((m2, l, w2));
                    }
                }
            }
            frontier = next;
        }
        out.sort_by(|x, y| (x.0.len(), x.0.letters()).cmp(&(y.0.len(), y.0.letters())));
        Ok(out
            .into_iter()
            .map(|(word, matrix, orbit_dist)| GroupElement { word, matrix, orbit_dist })
            .collect())
    }

    /// Moves `z` into the closed Dirichlet domain about `o = i` by greedy
    /// descent over the side pairings; returns `(z0, γ)` with `γ·z0 = z`.
    pub fn reduce_to_domain(&self, z: HPoint) -> Result<(HPoint, GroupElement), GroupError> {
        let (z0, gamma, side_letters) = self.descend(z)?;
        let mut word = Word::empty();
        // z0 = g_{l_k} ... g_{l_1} z  =>  γ = g_{l_1}⁻¹ ... g_{l_k}⁻¹
        for &l in side_letters.iter() {
            word = word.concat(&self.side_words[((l + 4) % 8) as usize]);
        }
        let orbit_dist = orbit_distance(&gamma);
        Ok((z0, GroupElement { word, matrix: gamma, orbit_dist }))
    }

    /// Greedy descent core: returns the domain representative, the deck
    /// transformation `γ` with `γ·z0 = z`, and the applied side letters.
    fn descend(&self, z: HPoint) -> Result<(HPoint, MobiusMap, Vec<u8>), GroupError> {
        let o = HPoint::base();
        let mut cur = z;
        let mut gamma = MobiusMap::identity();
        let mut letters = Vec::new();
        for _ in 0..REDUCE_ITER_CAP {
            if !(cur.im() > 1e-250) || !cur.re().is_finite() {
                return Err(GroupError::ReduceNonFinite);
            }
            let d0 = hdist(cur, o);
            if !d0.is_finite() {
                return Err(GroupError::ReduceNonFinite);
            }
            let mut best: Option<(f64, u8, HPoint)> = None;
            for l in 0..8u8 {
                let cand = self.side_matrix(l).apply(cur);
                let d = hdist(cand, o);
                if d < best.as_ref().map_or(f64::INFINITY, |b| b.0) {
                    best = Some((d, l, cand));
                }
            }
            let (d, l, cand) = match best {
                Some(b) => b,
                None => return Err(GroupError::ReduceNonFinite),
            };
            if d < d0 - 1e-12 {
                cur = cand;
                letters.push(l);
                gamma = gamma * self.side_matrix((l + 4) % 8);
                // gamma accumulates g_{l_1}^{-1} g_{l_2}^{-1} ...
                continue;
            }
            return Ok((cur, gamma, letters));
        }
        Err(GroupError::ReduceIterationCap(REDUCE_ITER_CAP))
    }

    /// Matrix-only reduction with a warm start: `hint` is a deck
    /// transformation expected to be close to the answer.
    pub fn reduce_point_hinted(&self, z: HPoint, hint: &MobiusMap) -> Result<(HPoint, MobiusMap), GroupError> {
        let guess = hint.inverse().apply(z);
        let (z0, gamma_inc, _) = self.descend(guess)?;
        Ok((z0, *hint * gamma_inc))
    }
}

// ---------------------------------------------------------------------------
// Dedup table
// ---------------------------------------------------------------------------

/// Hash-based set of matrices up to sign, quantised at `DEDUP_QUANTUM`.
/// Lookups probe both signs and the neighbouring quantisation cells of any
/// coordinate that sits near a cell boundary, so revisits of one element
/// along different word paths cannot slip through.
struct DedupTable {
    map: HashMap<[i64; 8], u32>,
    count: u32,
}

impl DedupTable {
    fn new() -> Self {
        DedupTable { map: HashMap::new(), count: 0 }
    }

    fn key(m: &MobiusMap) -> [i64; 8] {
        let e = m.entries();
        let mut k = [0i64; 8];
        for i in 0..4 {
            k[2 * i] = (e[i].re / DEDUP_QUANTUM).round() as i64;
            k[2 * i + 1] = (e[i].im / DEDUP_QUANTUM).round() as i64;
        }
        k
    }

    fn probe_keys(m: &MobiusMap, out: &mut Vec<[i64; 8]>) {
        let e = m.entries();
        let mut base = [0i64; 8];
        let mut frac = [0f64; 8];
        for i in 0..4 {
            for (j, v) in [e[i].re, e[i].im].iter().enumerate() {
                let r = v / DEDUP_QUANTUM;
                base[2 * i + j] = r.round() as i64;
                frac[2 * i + j] = r - r.round();
            }
        }
        // coordinates within 1e-3 of a cell boundary are ambiguous
        let mut amb: Vec<(usize, i64)> = Vec::new();
        for i in 0..8 {
            if frac[i].abs() > 0.5 - 1e-3 {
                amb.push((i, if frac[i] > 0.0 { 1 } else { -1 }));
            }
        }
        out.push(base);
        if amb.len() <= 4 {
            for mask in 1..(1u32 << amb.len()) {
                let mut k = base;
                for (bit, &(i, step)) in amb.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        k[i] += step;
                    }
                }
                out.push(k);
            }
        }
    }

    /// Inserts the element; returns false if already present.
    fn insert(&mut self, m: &MobiusMap) -> bool {
        let canon = m.canonical();
        let neg = MobiusMap { a: -canon.a, b: -canon.b, c: -canon.c, d: -canon.d };
        let mut keys = Vec::with_capacity(4);
        Self::probe_keys(&canon, &mut keys);
        Self::probe_keys(&neg, &mut keys);
        for k in &keys {
            if self.map.contains_key(k) {
                return false;
            }
        }
        self.map.insert(Self::key(&canon), self.count);
        self.count += 1;
        true
    }
}

// ---------------------------------------------------------------------------
// Representations and bending
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RepLabel {
    Fuchsian,
    Bent(f64),
}

/// A surface-group representation into PSL(2, C), stored through the images
/// of the four positive canonical generators.
#[derive(Debug, Clone)]
pub struct Representation {
    images: [MobiusMap; 4],
    pub label: RepLabel,
}

impl Representation {
    /// The tautological fuchsian inclusion of the lattice.
    pub fn fuchsian(group: &GroupPresentation) -> Self {
        Representation { images: *group.canonical_generators(), label: RepLabel::Fuchsian }
    }

    /// Builds a representation from explicit generator images, checking
    /// unimodularity of each image and the relator to 1e−8.
    pub fn from_images(images: [MobiusMap; 4], label: RepLabel) -> Result<Self, GroupError> {
        for (index, m) in images.iter().enumerate() {
            let defect = (m.det() - Complex64::new(1.0, 0.0)).norm();
            if defect > 1e-9 {
                return Err(GroupError::BadGenerator { index, source: GeomError::NotUnimodular { defect } });
            }
        }
        let rep = Representation { images, label };
        let defect = rep.relator_defect();
        if defect > 1e-8 {
            return Err(GroupError::RelatorDefect { defect });
        }
        Ok(rep)
    }

    pub fn image(&self, l: Letter) -> MobiusMap {
        if l < 4 {
            self.images[l as usize]
        } else {
            self.images[(l - 4) as usize].inverse()
        }
    }

    pub fn images(&self) -> &[MobiusMap; 4] {
        &self.images
    }

    /// Evaluates a canonical word, honouring inverses, as a left-to-right
    /// product of generator images.
    pub fn eval(&self, w: &Word) -> MobiusMap {
        let mut m = MobiusMap::identity();
        for &l in w.letters() {
            m = m * self.image(l);
        }
        m
    }

    pub fn relator_defect(&self) -> f64 {
        self.eval(&canonical_relator()).dist_up_to_sign(&MobiusMap::identity())
    }

    pub fn is_fuchsian(&self) -> bool {
        matches!(self.label, RepLabel::Fuchsian)
    }
}

/// Bends a fuchsian representation along the separating curve `[a1, b1]`:
/// `a1, b1` stay fixed, `a2, b2` are conjugated by the elliptic `E_θ` that
/// rotates by angle θ about the axis of `[a1, b1]` in hyperbolic 3-space.
/// `E_θ` commutes with the separating element, so the relator survives.
pub fn bend(rep: &Representation, theta: f64) -> Result<Representation, GroupError> {
    if !rep.is_fuchsian() {
        return Err(GroupError::BendNeedsFuchsian);
    }
    if theta.abs() >= std::f64::consts::FRAC_PI_4 {
        return Err(GroupError::BendAngleTooLarge(theta));
    }
    if theta == 0.0 {
        return Ok(Representation { images: *rep.images(), label: RepLabel::Bent(0.0) });
    }
    let a1 = rep.images[0];
    let b1 = rep.images[1];
    let s = a1 * b1 * a1.inverse() * b1.inverse();
    let half_tr = s.trace() / 2.0;
    if (half_tr.norm() - 1.0) < 1e-6 {
        return Err(GroupError::BendAxisNotHyperbolic(s.trace().norm()));
    }
    let sh = (half_tr * half_tr - Complex64::new(1.0, 0.0)).sqrt();
    // K has the axis eigenvectors with eigenvalues ±1
    let k = MobiusMap {
        a: (s.a - half_tr) / sh,
        b: s.b / sh,
        c: s.c / sh,
        d: (s.d - half_tr) / sh,
    };
    let cos = Complex64::new((theta / 2.0).cos(), 0.0);
    let isin = Complex64::new(0.0, (theta / 2.0).sin());
    let e = MobiusMap {
        a: cos + isin * k.a,
        b: isin * k.b,
        c: isin * k.c,
        d: cos + isin * k.d,
    };
    let e_inv = e.inverse();
    let images = [a1, b1, e * rep.images[2] * e_inv, e * rep.images[3] * e_inv];
    Representation::from_images(images, RepLabel::Bent(theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn group() -> GroupPresentation {
        octagon_generators()
    }

    #[test]
    fn relator_is_identity() {
        let g = group();
        assert!(g.relator_defect() < 1e-9, "defect {}", g.relator_defect());
    }

    #[test]
    fn generator_traces_and_orbit_distance() {
        let g = group();
        let expect = 2.0 * (1.0 + std::f64::consts::SQRT_2);
        for m in g.canonical_generators() {
            assert!((m.trace().norm() - expect).abs() < 1e-9, "trace {}", m.trace());
        }
        // orbit distance of g0 equals the translation length 2·arccosh(1+√2),
        // since the axis of g0 passes through o
        let g0 = g.generator(0);
        let ell = 2.0 * (1.0 + std::f64::consts::SQRT_2).acosh();
        let od = orbit_distance(&g0);
        assert!((od - ell).abs() < 1e-9, "orbit dist {od} vs {ell}");
        // cross-check against hdist(o, g0 o)
        let moved = g0.apply(HPoint::base());
        assert!((hdist(HPoint::base(), moved) - od).abs() < 1e-9);
    }

    #[test]
    fn ball_tiny_radius_is_identity() {
        let g = group();
        let b = g.ball(0.1, 20).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b[0].word.is_empty());
    }

    #[test]
    fn ball_at_3_1_is_identity_plus_generators() {
        let g = group();
        let b = g.ball(3.1, 20).unwrap();
        assert_eq!(b.len(), 9);
        // brute force oracle: all reduced side words of length ≤ 2
        let mut expected: Vec<MobiusMap> = vec![MobiusMap::identity()];
        for l in 0..8u8 {
            expected.push(g.side_matrix(l));
        }
        for e in &b {
            let m = g.eval(&e.word);
            assert!(m.approx_eq_up_to_sign(&e.matrix, 1e-9));
            assert!(expected.iter().any(|x| x.approx_eq_up_to_sign(&e.matrix, 1e-6)));
        }
    }

    #[test]
    fn ball_nesting_and_word_consistency() {
        let g = group();
        let b5 = g.ball(5.0, 30).unwrap();
        let b7 = g.ball(7.0, 30).unwrap();
        assert!(b5.len() < b7.len());
        for e in &b5 {
            assert!(b7.iter().any(|f| f.matrix.approx_eq_up_to_sign(&e.matrix, 1e-8)));
        }
        for e in &b7 {
            assert!((orbit_distance(&e.matrix) - e.orbit_dist).abs() < 1e-12);
            assert!(g.eval(&e.word).approx_eq_up_to_sign(&e.matrix, 1e-8), "word {} mismatch", e.word);
        }
    }

    #[test]
    fn ball_brute_force_completeness_small() {
        // every reduced side word of length ≤ 3 whose orbit distance is ≤ 6
        // must appear in ball(6)
        let g = group();
        let b6 = g.ball(6.0, 30).unwrap();
        let mut words: Vec<Vec<u8>> = vec![vec![]];
        let mut layer: Vec<Vec<u8>> = vec![vec![]];
        for _ in 0..3 {
            let mut next = Vec::new();
            for w in &layer {
                for l in 0..8u8 {
                    if w.last().map_or(false, |&p| (p + 4) % 8 == l) {
                        continue;
                    }
                    let mut w2 = w.clone();
                    w2.push(l);
                    next.push(w2);
                }
            }
            words.extend(next.iter().cloned());
            layer = next;
        }
        let mut missed = 0;
        for w in &words {
            let mut m = MobiusMap::identity();
            for &l in w {
                m = m * g.side_matrix(l);
            }
            if orbit_distance(&m) <= 6.0 && !b6.iter().any(|e| e.matrix.approx_eq_up_to_sign(&m, 1e-6)) {
                missed += 1;
            }
        }
        assert_eq!(missed, 0);
    }

    #[test]
    fn ball_cap_error_names_frontier() {
        let g = group();
        match g.ball(9.0, 2) {
            Err(GroupError::BallCapExceeded { cap, frontier }) => {
                assert_eq!(cap, 2);
                assert!(frontier > 0);
            }
            other => panic!("expected cap error, got {:?}", other.map(|v| v.len())),
        }
    }

    #[test]
    fn dedup_soundness_margin() {
        let g = group();
        let b = g.ball(8.0, 30).unwrap();
        // pairwise canonical distance of distinct elements stays well above 1e-6
        let mut min = f64::INFINITY;
        for i in 0..b.len() {
            for j in (i + 1)..b.len() {
                min = min.min(b[i].matrix.dist_up_to_sign(&b[j].matrix));
            }
        }
        assert!(min > 1e-6, "dedup margin {min}");
    }

    #[test]
    fn reduce_identity_cases() {
        let g = group();
        let inside = HPoint::new(Complex64::new(0.05, 1.1)).unwrap();
        let (z0, gamma) = g.reduce_to_domain(inside).unwrap();
        assert!(gamma.word.is_empty());
        assert!((z0.z() - inside.z()).norm() < 1e-14);
        // z = g0 · o reduces to (o, g0)
        let z = g.generator(0).apply(HPoint::base());
        let (z0, gamma) = g.reduce_to_domain(z).unwrap();
        assert!(hdist(z0, HPoint::base()) < 1e-9);
        assert!(gamma.matrix.approx_eq_up_to_sign(&g.generator(0), 1e-8));
        assert_eq!(format!("{}", gamma.word), "a");
    }

    #[test]
    fn reduce_random_points() {
        let g = group();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let rad = dirichlet_circumradius();
        for _ in 0..50 {
            let phi = rng.gen::<f64>() * std::f64::consts::TAU;
            let r = rng.gen::<f64>() * 20.0;
            let z = crate::hypgeom::geodesic_point_to_boundary(
                HPoint::base(),
                crate::hypgeom::BoundaryPoint::from_visual_angle(phi),
                r,
            );
            let (z0, gamma) = g.reduce_to_domain(z).unwrap();
            assert!((gamma.matrix.apply(z0).z() - z.z()).norm() < 1e-9, "γ·z0 != z");
            assert!(hdist(z0, HPoint::base()) <= rad + 1e-6, "outside domain: {}", hdist(z0, HPoint::base()));
            // no side pairing strictly decreases the distance to o
            for l in 0..8u8 {
                let d = hdist(g.side_matrix(l).apply(z0), HPoint::base());
                assert!(d >= hdist(z0, HPoint::base()) - 1e-9);
            }
            // word evaluates to γ
            assert!(g.eval(&gamma.word).approx_eq_up_to_sign(&gamma.matrix, 1e-8));
        }
    }

    #[test]
    fn reduce_is_quotient_well_defined() {
        let g = group();
        let z = HPoint::new(Complex64::new(0.31, 0.9)).unwrap();
        let b5 = g.ball(5.0, 30).unwrap();
        let (z0_ref, _) = g.reduce_to_domain(z).unwrap();
        for e in &b5 {
            let (z0, _) = g.reduce_to_domain(e.matrix.apply(z)).unwrap();
            assert!((z0.z() - z0_ref.z()).norm() < 1e-8, "quotient point moved under {}", e.word);
        }
    }

    #[test]
    fn bend_zero_is_identity_map() {
        let g = group();
        let rep = Representation::fuchsian(&g);
        let bent = bend(&rep, 0.0).unwrap();
        for (m, n) in rep.images().iter().zip(bent.images().iter()) {
            assert!(m.dist_up_to_sign(n) < 1e-12);
        }
    }

    #[test]
    fn bend_produces_complex_entries_and_keeps_relator() {
        let g = group();
        let rep = Representation::fuchsian(&g);
        let bent = bend(&rep, 0.3).unwrap();
        let max_im = bent.images().iter().map(|m| m.max_imag()).fold(0.0f64, f64::max);
        assert!(max_im > 1e-3, "bent rep stayed real: {max_im}");
        assert!(bent.relator_defect() < 1e-8, "relator defect {}", bent.relator_defect());
        // a1, b1 unchanged
        assert!(bent.images()[0].dist_up_to_sign(&rep.images()[0]) < 1e-12);
        assert!(bent.images()[1].dist_up_to_sign(&rep.images()[1]) < 1e-12);
    }

    #[test]
    fn bend_rejects_bad_input() {
        let g = group();
        let rep = Representation::fuchsian(&g);
        assert!(matches!(bend(&rep, 1.0), Err(GroupError::BendAngleTooLarge(_))));
        let bent = bend(&rep, 0.2).unwrap();
        assert!(matches!(bend(&bent, 0.1), Err(GroupError::BendNeedsFuchsian)));
    }

    #[test]
    fn rep_eval_homomorphism() {
        let g = group();
        let rep = Representation::fuchsian(&g);
        assert!(rep.eval(&Word::empty()).approx_eq_up_to_sign(&MobiusMap::identity(), 1e-12));
        let w = Word::new([0, 1, 6, 2, 3]);
        let winv = w.inverse();
        assert!(rep.eval(&w.concat(&winv)).approx_eq_up_to_sign(&MobiusMap::identity(), 1e-10));
        // fuchsian inclusion matches the lattice matrices on ball words
        for e in g.ball(5.0, 30).unwrap() {
            assert!(rep.eval(&e.word).approx_eq_up_to_sign(&e.matrix, 1e-10));
        }
    }

    #[test]
    fn scaled_generators_are_rejected() {
        let g = group();
        let mut images = *g.canonical_generators();
        let lambda = Complex64::new(1.2, 0.0);
        images[0] = MobiusMap { a: images[0].a * lambda, b: images[0].b * lambda, c: images[0].c * lambda, d: images[0].d * lambda };
        assert!(matches!(
            Representation::from_images(images, RepLabel::Fuchsian),
            Err(GroupError::BadGenerator { .. })
        ));
    }

    #[test]
    fn bent_injectivity_on_ball() {
        let g = group();
        let rep = Representation::fuchsian(&g);
        for theta in [0.0, 0.3] {
            let r = if theta == 0.0 { rep.clone() } else { bend(&rep, theta).unwrap() };
            let b6 = g.ball(6.0, 30).unwrap();
            let images: Vec<MobiusMap> = b6.iter().map(|e| r.eval(&e.word)).collect();
            for i in 0..images.len() {
                for j in (i + 1)..images.len() {
                    assert!(images[i].dist_up_to_sign(&images[j]) > 1e-6, "collapse at θ={theta}");
                }
            }
        }
    }
}
