//! BBR polynomials, Grolmusz set-systems and merged non-uniform systems.
//!
//! Sets are fixed-width [`BitSet`]s over a dense universe `0..h`. Each
//! element's structured identity is kept in [`ElementLabel`] so tests can map
//! a bit back to the monomial block (or copy / padding slot) it came from.

use num_bigint::BigInt;
use num_traits::One;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::numt::{self, BinomialPoly, Modulus, MultilinearPoly, NumtError};
use crate::par::{map_range, Execution};
use crate::rng::Streams;

/// Largest universe the builders will allocate.
pub const MAX_UNIVERSE: usize = 1 << 26;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SetSysError {
    #[error(transparent)]
    Numt(#[from] NumtError),
    #[error("modulus {0} needs at least two distinct prime divisors")]
    TooFewPrimes(u64),
    #[error("modulus {0} must be squarefree")]
    NotSquarefree(u64),
    #[error("modulus {0} must be odd")]
    EvenModulus(u64),
    #[error("n must be at least 1")]
    EmptyDimension,
    #[error("copy count l={l} must satisfy 2 <= l < {min_prime}")]
    CopyCount { l: usize, min_prime: u64 },
    #[error("intersection arity t={0} must be at least 2")]
    Arity(usize),
    #[error("prime-power product {product} must exceed n={n}")]
    ParameterCheck { product: u64, n: usize },
    #[error("universe of {0} elements exceeds the builder cap")]
    UniverseTooLarge(u128),
    #[error("set-system has an empty core")]
    EmptyCore,
    #[error("set {0} is empty")]
    EmptySet(usize),
    #[error("set {index} has width {found}, expected {expected}")]
    Width { index: usize, expected: usize, found: usize },
    #[error("set-system has no members")]
    NoMembers,
    #[error("anchor set {0} is not contained in the companion anchor")]
    Anchor(usize),
    #[error("index {0} out of range")]
    Index(usize),
}

/// Parameters of a Grolmusz system and the merge built on top of it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrolmuszParams {
    pub modulus: Modulus,
    pub n: usize,
    pub t: usize,
    pub l: usize,
}

impl GrolmuszParams {
    pub fn new(m: u64, n: usize, t: usize, l: usize) -> Result<Self, SetSysError> {
        let p = GrolmuszParams { modulus: Modulus::new(m)?, n, t, l };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SetSysError> {
        check_bbr_modulus(&self.modulus, self.n)?;
        if self.t < 2 {
            return Err(SetSysError::Arity(self.t));
        }
        let min_prime = self.modulus.min_prime();
        if self.l < 2 || self.l as u64 >= min_prime {
            return Err(SetSysError::CopyCount { l: self.l, min_prime });
        }
        Ok(())
    }

    /// The same construction at modulus `m·extra`.
    pub fn with_extra_prime(&self, extra: u64) -> Result<Self, SetSysError> {
        GrolmuszParams::new(self.modulus.value() * extra, self.n, self.t, self.l)
    }
}

fn check_bbr_modulus(m: &Modulus, n: usize) -> Result<Vec<u32>, SetSysError> {
    if m.r() < 2 {
        return Err(SetSysError::TooFewPrimes(m.value()));
    }
    if !m.is_squarefree() {
        return Err(SetSysError::NotSquarefree(m.value()));
    }
    if m.value().is_multiple_of(2) {
        return Err(SetSysError::EvenModulus(m.value()));
    }
    if n < 1 {
        return Err(SetSysError::EmptyDimension);
    }
    let e = digit_exponents(m, n);
    let product: u128 = m.primes().zip(&e).map(|(p, &e)| (p as u128).pow(e)).product();
    if product <= n as u128 {
        return Err(SetSysError::ParameterCheck { product: product as u64, n });
    }
    Ok(e)
}

/// `e_i`: the least exponent with `p_i^{e_i} > ⌈n^{1/r}⌉`.
pub fn digit_exponents(m: &Modulus, n: usize) -> Vec<u32> {
    let c = numt::ceil_root(n as u64, m.r() as u32);
    m.primes()
        .map(|p| {
            let mut e = 1;
            while p.pow(e) <= c {
                e += 1;
            }
            e
        })
        .collect()
}

/// `1 - ∏_{t<e} (1 - C(y, p^t)^{p-1})`: by Lucas, `≡ 0 mod p` iff `p^e | y`.
fn prime_indicator(p: u64, e: u32, y: u64) -> BigInt {
    let y = BigInt::from(y);
    let mut prod = BigInt::one();
    for t in 0..e {
        let c = numt::binomial(&y, p.pow(t) as usize);
        prod *= BigInt::one() - c.pow((p - 1) as u32);
    }
    BigInt::one() - prod
}

/// The univariate core `P(y)`: `P(y) ≡ 0 mod m` iff `∏ p_i^{e_i} | y`, and
/// `P(y) mod p_i ∈ {0, 1}`.
pub fn bbr_core(m: &Modulus, n: usize) -> Result<BinomialPoly, SetSysError> {
    let e = check_bbr_modulus(m, n)?;
    let mv = m.value();
    let weights: Vec<BigInt> = m
        .primes()
        .map(|p| {
            let mi = mv / p;
            BigInt::from(mi) * BigInt::from(numt::inv_mod(mi % p, p).expect("squarefree"))
        })
        .collect();
    let degree = m.primes().zip(&e).map(|(p, &e)| p.pow(e) - 1).max().unwrap();
    let values: Vec<BigInt> = (0..=degree)
        .map(|y| m.primes().zip(&e).zip(&weights).map(|((p, &e), w)| prime_indicator(p, e, y) * w).sum())
        .collect();
    Ok(BinomialPoly::from_values(&values))
}

/// `Q(x) = P(Σ (1 - x_j))`, which vanishes mod `m` exactly at all-ones.
pub fn build_bbr_polynomial(m: &Modulus, n: usize) -> Result<MultilinearPoly, SetSysError> {
    let core = bbr_core(m, n)?;
    Ok(numt::symmetric_multilinear(n, m, |v| core.eval_u64((n - v) as u64)))
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementLabel {
    /// Copy `multiplicity` of the block of vectors agreeing with
    /// `assignment` on the coordinates in `monomial`.
    Block {
        monomial: Vec<usize>,
        assignment: Vec<usize>,
        multiplicity: u64,
    },
    /// Shared core element, identified by its index in the base universe.
    Core {
        element: usize,
    },
    /// Non-core element of the given copy.
    Copy {
        copy: usize,
        element: usize,
    },
    Padding {
        index: usize,
    },
    Unused {
        index: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SetLabel {
    Vector { y: Vec<usize> },
    Member { copy: usize, member: usize },
    Union { members: Vec<usize> },
    Unlabelled,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Custom,
    Grolmusz { n: usize, t: usize },
    Merged { base_sets: usize, l: usize, n: Option<usize>, t: Option<usize> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SetSystemWire")]
pub struct SetSystem {
    modulus: Modulus,
    universe: usize,
    sets: Vec<BitSet>,
    set_labels: Vec<SetLabel>,
    element_labels: Option<Vec<ElementLabel>>,
    provenance: Provenance,
}

#[derive(Deserialize)]
struct SetSystemWire {
    modulus: Modulus,
    universe: usize,
    sets: Vec<BitSet>,
    set_labels: Vec<SetLabel>,
    element_labels: Option<Vec<ElementLabel>>,
    provenance: Provenance,
}

impl TryFrom<SetSystemWire> for SetSystem {
    type Error = String;

    fn try_from(w: SetSystemWire) -> Result<Self, String> {
        if w.set_labels.len() != w.sets.len() {
            return Err(format!("{} set labels for {} sets", w.set_labels.len(), w.sets.len()));
        }
        if w.element_labels.as_ref().is_some_and(|el| el.len() != w.universe) {
            return Err(format!("element labels do not cover a universe of {}", w.universe));
        }
        SetSystem::from_parts(w.modulus, w.universe, w.sets, w.set_labels, w.element_labels, w.provenance)
            .map_err(|e| e.to_string())
    }
}

impl SetSystem {
    pub fn new(modulus: Modulus, universe: usize, sets: Vec<BitSet>) -> Result<Self, SetSysError> {
        let labels = vec![SetLabel::Unlabelled; sets.len()];
        SetSystem::from_parts(modulus, universe, sets, labels, None, Provenance::Custom)
    }

    pub fn from_parts(
        modulus: Modulus,
        universe: usize,
        sets: Vec<BitSet>,
        set_labels: Vec<SetLabel>,
        element_labels: Option<Vec<ElementLabel>>,
        provenance: Provenance,
    ) -> Result<Self, SetSysError> {
        if sets.is_empty() {
            return Err(SetSysError::NoMembers);
        }
        for (index, s) in sets.iter().enumerate() {
            if s.len() != universe {
                return Err(SetSysError::Width { index, expected: universe, found: s.len() });
            }
            if s.is_empty() {
                return Err(SetSysError::EmptySet(index));
            }
        }
        assert_eq!(set_labels.len(), sets.len(), "one label per set");
        if let Some(el) = &element_labels {
            assert_eq!(el.len(), universe, "one label per element");
        }
        Ok(SetSystem { modulus, universe, sets, set_labels, element_labels, provenance })
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn sets(&self) -> &[BitSet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn set_labels(&self) -> &[SetLabel] {
        &self.set_labels
    }

    pub fn element_labels(&self) -> Option<&[ElementLabel]> {
        self.element_labels.as_deref()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Member count the construction promises, when known.
    pub fn predicted_len(&self) -> Option<usize> {
        match &self.provenance {
            Provenance::Custom => None,
            Provenance::Grolmusz { n, .. } => Some(n.pow(*n as u32)),
            Provenance::Merged { base_sets, l, .. } => Some(base_sets.pow(*l as u32) + l * base_sets),
        }
    }

    /// Elements common to every member.
    pub fn core(&self) -> BitSet {
        let mut c = self.sets[0].clone();
        for s in &self.sets[1..] {
            c.intersect_with(s);
        }
        c
    }

    /// Sorted distinct member sizes.
    pub fn size_classes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.sets.iter().map(BitSet::count).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Proper-containment structure between members.
    pub fn containment(&self, exec: Execution) -> Containment {
        let n = self.sets.len();
        let supersets = map_range(exec, n, |i| {
            let a = &self.sets[i];
            let ca = a.count();
            (0..n).filter(|&j| j != i && self.sets[j].count() > ca && a.is_subset(&self.sets[j])).collect::<Vec<_>>()
        });
        let mut has_proper_subset = vec![false; n];
        for sup in &supersets {
            for &j in sup {
                has_proper_subset[j] = true;
            }
        }
        Containment { supersets, has_proper_subset }
    }

    /// Same sets over a wider universe; new elements are labelled unused.
    pub fn padded(&self, width: usize) -> SetSystem {
        assert!(width >= self.universe);
        let labels = self.element_labels.as_ref().map(|el| {
            let mut el = el.clone();
            el.extend((self.universe..width).map(|index| ElementLabel::Unused { index }));
            el
        });
        SetSystem {
            modulus: self.modulus.clone(),
            universe: width,
            sets: self.sets.iter().map(|s| s.widened(width)).collect(),
            set_labels: self.set_labels.clone(),
            element_labels: labels,
            provenance: self.provenance.clone(),
        }
    }

    /// Relabels the universe by `perm` (element `i` moves to `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> SetSystem {
        assert_eq!(perm.len(), self.universe);
        let sets = self.sets.iter().map(|s| BitSet::from_indices(self.universe, s.ones().map(|i| perm[i]))).collect();
        let labels = self.element_labels.as_ref().map(|el| {
            let mut out = el.clone();
            for (i, l) in el.iter().enumerate() {
                out[perm[i]] = l.clone();
            }
            out
        });
        SetSystem { sets, element_labels: labels, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Containment {
    /// For each member, the members that strictly contain it.
    pub supersets: Vec<Vec<usize>>,
    pub has_proper_subset: Vec<bool>,
}

impl Containment {
    /// Members that are a proper subset of exactly `count` members and a
    /// proper superset of none.
    pub fn minimal_with_supersets(&self, count: usize) -> Vec<usize> {
        (0..self.supersets.len()).filter(|&i| self.supersets[i].len() == count && !self.has_proper_subset[i]).collect()
    }
}

fn digits(mut idx: usize, n: usize, len: usize) -> Vec<usize> {
    let mut d = vec![0; len];
    for slot in d.iter_mut().rev() {
        *slot = idx % n;
        idx /= n;
    }
    d
}

/// The uniform system `G` over `[0,n)^n`.
pub fn build_grolmusz_system(params: &GrolmuszParams) -> Result<SetSystem, SetSysError> {
    params.validate()?;
    let n = params.n;
    let q = build_bbr_polynomial(&params.modulus, n)?;
    let members = (n as u128).pow(n as u32);
    let universe: u128 = q.terms().map(|(k, c)| c as u128 * (n as u128).pow(k.len() as u32)).sum();
    if universe > MAX_UNIVERSE as u128 || members > MAX_UNIVERSE as u128 {
        return Err(SetSysError::UniverseTooLarge(universe.max(members)));
    }
    let (universe, members) = (universe as usize, members as usize);

    let mut labels = Vec::with_capacity(universe);
    let mut blocks = Vec::new();
    for (monomial, c) in q.terms() {
        blocks.push((monomial.to_vec(), c as usize, labels.len()));
        for a in 0..n.pow(monomial.len() as u32) {
            let assignment = digits(a, n, monomial.len());
            for multiplicity in 0..c {
                labels.push(ElementLabel::Block {
                    monomial: monomial.to_vec(),
                    assignment: assignment.clone(),
                    multiplicity,
                });
            }
        }
    }

    let mut sets = Vec::with_capacity(members);
    let mut set_labels = Vec::with_capacity(members);
    for idx in 0..members {
        let y = digits(idx, n, n);
        let mut s = BitSet::new(universe);
        for (monomial, c, base) in &blocks {
            let a = monomial.iter().fold(0, |acc, &j| acc * n + y[j]);
            for k in 0..*c {
                s.insert(base + a * c + k);
            }
        }
        sets.push(s);
        set_labels.push(SetLabel::Vector { y });
    }
    SetSystem::from_parts(
        params.modulus.clone(),
        universe,
        sets,
        set_labels,
        Some(labels),
        Provenance::Grolmusz { n, t: params.t },
    )
}

/// `l` copies of `g` glued along their common core, plus every `l`-fold
/// union of one member per copy together with a padding block `B`.
pub fn merge_systems(g: &SetSystem, l: usize) -> Result<SetSystem, SetSysError> {
    let min_prime = g.modulus.min_prime();
    if l < 2 || l as u64 >= min_prime {
        return Err(SetSysError::CopyCount { l, min_prime });
    }
    let core = g.core();
    let a = core.count();
    if a == 0 {
        return Err(SetSysError::EmptyCore);
    }
    let gu = g.universe;
    let s = g.sets.len();
    let free = gu - a;
    let universe = (l as u128) * gu as u128;
    let unions = (s as u128).pow(l as u32);
    if universe > MAX_UNIVERSE as u128 || unions > MAX_UNIVERSE as u128 {
        return Err(SetSysError::UniverseTooLarge(universe.max(unions)));
    }
    let universe = universe as usize;

    let mut slot = vec![0usize; gu];
    let (mut ci, mut fi) = (0, 0);
    for (e, slot) in slot.iter_mut().enumerate() {
        if core.contains(e) {
            *slot = ci;
            ci += 1;
        } else {
            *slot = fi;
            fi += 1;
        }
    }
    let map = |copy: usize, e: usize| {
        if core.contains(e) {
            slot[e]
        } else {
            a + copy * free + slot[e]
        }
    };
    let pad_base = a + l * free;

    let mut labels = vec![ElementLabel::Unused { index: 0 }; universe];
    for e in 0..gu {
        if core.contains(e) {
            labels[map(0, e)] = ElementLabel::Core { element: e };
        } else {
            for copy in 0..l {
                labels[map(copy, e)] = ElementLabel::Copy { copy, element: e };
            }
        }
    }
    for i in 0..(l - 1) * a {
        labels[pad_base + i] = ElementLabel::Padding { index: i };
    }

    let copies: Vec<Vec<BitSet>> = (0..l)
        .map(|copy| g.sets.iter().map(|m| BitSet::from_indices(universe, m.ones().map(|e| map(copy, e)))).collect())
        .collect();
    let padding = BitSet::from_indices(universe, pad_base..universe);

    let mut sets = Vec::with_capacity(unions as usize + l * s);
    let mut set_labels = Vec::with_capacity(sets.capacity());
    for (copy, members) in copies.iter().enumerate() {
        for (member, m) in members.iter().enumerate() {
            sets.push(m.clone());
            set_labels.push(SetLabel::Member { copy, member });
        }
    }
    for idx in 0..unions as usize {
        let members = digits(idx, s, l);
        let mut u = padding.clone();
        for (copy, &m) in members.iter().enumerate() {
            u.union_with(&copies[copy][m]);
        }
        sets.push(u);
        set_labels.push(SetLabel::Union { members });
    }
    let (n, t) = match g.provenance {
        Provenance::Grolmusz { n, t } => (Some(n), Some(t)),
        _ => (None, None),
    };
    SetSystem::from_parts(
        g.modulus.clone(),
        universe,
        sets,
        set_labels,
        Some(labels),
        Provenance::Merged { base_sets: s, l, n, t },
    )
}

/// Builds `H = merge(G)` for `params`.
pub fn build_merged_system(params: &GrolmuszParams) -> Result<SetSystem, SetSysError> {
    merge_systems(&build_grolmusz_system(params)?, params.l)
}

/// Pads `h` and `h_prime` to a common universe and relabels `h_prime` so that
/// its member `anchor_prime` contains member `anchor` of `h`.
pub fn align_companion(
    h: &SetSystem,
    h_prime: &SetSystem,
    anchor: usize,
    anchor_prime: usize,
) -> Result<(SetSystem, SetSystem), SetSysError> {
    let a = h.sets.get(anchor).ok_or(SetSysError::Index(anchor))?;
    let b = h_prime.sets.get(anchor_prime).ok_or(SetSysError::Index(anchor_prime))?;
    if a.count() > b.count() {
        return Err(SetSysError::Anchor(anchor));
    }
    let width = h.universe.max(h_prime.universe);
    let hp = h_prime.padded(width);
    let target: Vec<usize> = a.ones().collect();
    let source: Vec<usize> = b.ones().take(target.len()).collect();
    let mut perm = vec![usize::MAX; width];
    let mut used = vec![false; width];
    for (&s, &t) in source.iter().zip(&target) {
        perm[s] = t;
        used[t] = true;
    }
    let mut free = (0..width).filter(|&t| !used[t]);
    for p in perm.iter_mut().filter(|p| **p == usize::MAX) {
        *p = free.next().expect("permutation is a bijection");
    }
    Ok((h.padded(width), hp.permuted(&perm)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub members: Vec<usize>,
    pub intersection: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub modulus: u64,
    pub sets: usize,
    pub universe: usize,
    pub t: usize,
    pub l: usize,
    pub seed: u64,
    pub size_classes: Vec<usize>,
    /// Members whose size is not a multiple of `m`.
    pub bad_sizes: Vec<usize>,
    pub size_classes_ok: bool,
    pub pairs_checked: u64,
    pub pairs_degenerate: u64,
    pub families_sampled: u64,
    pub families_degenerate: u64,
    pub violations: u64,
    pub witnesses: Vec<Witness>,
}

impl VerificationReport {
    pub fn is_clean(&self) -> bool {
        self.bad_sizes.is_empty() && self.size_classes_ok && self.violations == 0
    }
}

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    /// Sampled families per arity `3..=t`.
    pub samples: u64,
    pub seed: u64,
    pub exec: Execution,
    pub max_witnesses: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { samples: 1_000_000, seed: 0, exec: Execution::Parallel, max_witnesses: 16 }
    }
}

pub fn verify_restricted_intersections(h: &SetSystem, t: usize, l: usize) -> VerificationReport {
    verify_with(h, t, l, &VerifyConfig::default())
}

const BATCH: u64 = 4096;

#[derive(Default)]
struct Tally {
    checked: u64,
    degenerate: u64,
    violations: u64,
    witnesses: Vec<Witness>,
}

impl Tally {
    fn merge(mut self, other: Tally, cap: usize) -> Tally {
        self.checked += other.checked;
        self.degenerate += other.degenerate;
        self.violations += other.violations;
        self.witnesses.extend(other.witnesses);
        self.witnesses.truncate(cap);
        self
    }

    fn record(&mut self, members: &[usize], sizes: &[usize], inter: usize, m: u64, cap: usize) {
        self.checked += 1;
        if sizes.contains(&inter) {
            self.degenerate += 1;
        } else if (inter as u64).is_multiple_of(m) {
            self.violations += 1;
            if self.witnesses.len() < cap {
                self.witnesses.push(Witness { members: members.to_vec(), intersection: inter });
            }
        }
    }
}

/// All pairs exhaustively, then `cfg.samples` random families for each
/// arity in `3..=t`.
///
/// A family is degenerate when some member lies inside the intersection of
/// the others, which is exactly when the full intersection equals that member.
pub fn verify_with(h: &SetSystem, t: usize, l: usize, cfg: &VerifyConfig) -> VerificationReport {
    let m = h.modulus.value();
    let sizes: Vec<usize> = h.sets.iter().map(BitSet::count).collect();
    let bad_sizes: Vec<usize> = (0..sizes.len()).filter(|&i| !(sizes[i] as u64).is_multiple_of(m)).collect();
    let classes = h.size_classes();
    let size_classes_ok = match classes.as_slice() {
        [_] => true,
        [a, b] => *b == l * a,
        _ => false,
    };
    let cap = cfg.max_witnesses;
    let count = h.sets.len();

    let pairs = map_range(cfg.exec, count, |i| {
        let mut tally = Tally::default();
        for j in i + 1..count {
            let inter = h.sets[i].and_count(&h.sets[j]);
            tally.record(&[i, j], &[sizes[i], sizes[j]], inter, m, cap);
        }
        tally
    })
    .into_iter()
    .fold(Tally::default(), |a, b| a.merge(b, cap));

    let streams = Streams::new(cfg.seed).child("setsys/verify");
    let mut families = Tally::default();
    for arity in 3..=t.min(count) {
        let batches = cfg.samples.div_ceil(BATCH);
        let per_batch = map_range(cfg.exec, batches as usize, |b| {
            let mut rng = streams.indexed(&format!("arity{arity}"), b as u64);
            let todo = BATCH.min(cfg.samples - b as u64 * BATCH);
            let mut tally = Tally::default();
            let mut members = Vec::with_capacity(arity);
            for _ in 0..todo {
                members.clear();
                while members.len() < arity {
                    let x = rng.gen_range(0..count);
                    if !members.contains(&x) {
                        members.push(x);
                    }
                }
                members.sort_unstable();
                let mut inter = h.sets[members[0]].clone();
                for &x in &members[1..] {
                    inter.intersect_with(&h.sets[x]);
                }
                let ms: Vec<usize> = members.iter().map(|&x| sizes[x]).collect();
                tally.record(&members, &ms, inter.count(), m, cap);
            }
            tally
        });
        families = per_batch.into_iter().fold(families, |a, b| a.merge(b, cap));
    }

    let mut witnesses = pairs.witnesses.clone();
    witnesses.extend(families.witnesses.iter().cloned());
    witnesses.truncate(cap);
    VerificationReport {
        modulus: m,
        sets: count,
        universe: h.universe,
        t,
        l,
        seed: cfg.seed,
        size_classes: classes,
        bad_sizes,
        size_classes_ok,
        pairs_checked: pairs.checked,
        pairs_degenerate: pairs.degenerate,
        families_sampled: families.checked,
        families_degenerate: families.degenerate,
        violations: pairs.violations + families.violations,
        witnesses,
    }
}

/// Whether `h < 2l(m-1)·n^{4m·n^{1/r}}` is promised for these parameters:
/// `None` when `n < (4m)^{1+1/(r-1)}`, otherwise the comparison for `h`.
pub fn universe_bound_holds(params: &GrolmuszParams, h: usize) -> Option<bool> {
    let m = params.modulus.value() as f64;
    let r = params.modulus.r() as f64;
    let n = params.n as f64;
    if n < (4.0 * m).powf(1.0 + 1.0 / (r - 1.0)) {
        return None;
    }
    let log_bound = (2.0 * params.l as f64 * (m - 1.0)).log2() + 4.0 * m * n.powf(1.0 / r) * n.log2();
    Some((h as f64).log2() < log_bound)
}

/// Integer size of `|G_{y_1} ∩ … ∩ G_{y_k}|` predicted from `Q`: the sum of
/// coefficients of monomials on which all vectors agree.
pub fn predicted_intersection(q: &MultilinearPoly, ys: &[&[usize]]) -> u64 {
    let agree: Vec<bool> = (0..q.n_vars()).map(|j| ys.iter().all(|y| y[j] == ys[0][j])).collect();
    q.eval_integer(&agree)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> GrolmuszParams {
        GrolmuszParams::new(15, 3, 3, 2).unwrap()
    }

    #[test]
    fn core_polynomial_m15_n3() {
        let m = Modulus::new(15).unwrap();
        let core = bbr_core(&m, 3).unwrap();
        let vals: Vec<u64> = (0..=3).map(|y| m.reduce(&core.eval_u64(y))).collect();
        assert_eq!(vals, vec![0, 1, 1, 6]);
        // Independent check against the CRT-assembled power-basis form.
        for y in 0..60u64 {
            let want = (10 * y * y + 6 * y.pow(4)) % 15;
            assert_eq!(m.reduce(&core.eval_u64(y)), want, "y={y}");
            let (crt, _) = numt::crt_combine(&[(y * y % 3, 3), (y.pow(4) % 5, 5)]).unwrap();
            assert_eq!(crt, want);
        }
        assert!(core.degree() <= 4);
    }

    #[test]
    fn q_coefficients_m15_n3() {
        let q = build_bbr_polynomial(&Modulus::new(15).unwrap(), 3).unwrap();
        assert_eq!(q.coeff(&[]), 6);
        for i in 0..3 {
            assert_eq!(q.coeff(&[i]), 10);
        }
        assert_eq!(q.coeff(&[0, 1]), 5);
        assert_eq!(q.coeff(&[0, 1, 2]), 9);
        assert_eq!(q.eval(&[true, true, true]), Ok(0));
        assert_eq!(q.eval(&[false, false, false]), Ok(6));
        assert_ne!(q.eval(&[true, false, false]), Ok(0));
    }

    #[test]
    fn bbr_conditions_over_many_moduli() {
        for (mv, n) in [(15, 3), (15, 5), (21, 6), (35, 4), (105, 3), (105, 7), (33, 9)] {
            let m = Modulus::new(mv).unwrap();
            let q = build_bbr_polynomial(&m, n).unwrap();
            let e = digit_exponents(&m, n);
            let bound = m.primes().zip(&e).map(|(p, &e)| p.pow(e) - 1).max().unwrap();
            assert!(bbr_core(&m, n).unwrap().degree() as u64 <= bound);
            for mask in 0..(1u32 << n) {
                let x: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
                let v = q.eval(&x).unwrap();
                if mask == (1 << n) - 1 {
                    assert_eq!(v, 0);
                } else {
                    assert_ne!(v, 0, "m={mv} n={n} x={x:?}");
                    assert!(m.primes().all(|p| v % p <= 1));
                }
            }
        }
    }

    #[test]
    fn bbr_rejects_bad_moduli() {
        let m = |v| Modulus::new(v).unwrap();
        assert_eq!(bbr_core(&m(7), 3), Err(SetSysError::TooFewPrimes(7)));
        assert_eq!(bbr_core(&m(45), 3), Err(SetSysError::NotSquarefree(45)));
        assert_eq!(bbr_core(&m(15), 0), Err(SetSysError::EmptyDimension));
        // Minimal e_i always give ∏ p_i^{e_i} > ⌈n^{1/r}⌉^r >= n.
        for n in 1..500 {
            let e = digit_exponents(&m(15), n);
            assert!(3u64.pow(e[0]) * 5u64.pow(e[1]) > n as u64);
        }
        assert_eq!(GrolmuszParams::new(15, 3, 3, 3), Err(SetSysError::CopyCount { l: 3, min_prime: 3 }));
    }

    #[test]
    fn grolmusz_m15_n3() {
        let q = build_bbr_polynomial(&Modulus::new(15).unwrap(), 3).unwrap();
        let g = build_grolmusz_system(&params()).unwrap();
        assert_eq!(g.len(), 27);
        assert_eq!(g.predicted_len(), Some(27));
        assert_eq!(g.universe(), 474);
        assert_eq!(g.size_classes(), vec![60]);
        assert_eq!(g.core().count(), 6);
        let ys: Vec<Vec<usize>> = g
            .set_labels()
            .iter()
            .map(|l| match l {
                SetLabel::Vector { y } => y.clone(),
                _ => unreachable!(),
            })
            .collect();
        for i in 0..27 {
            for j in i + 1..27 {
                let inter = g.sets()[i].and_count(&g.sets()[j]) as u64;
                assert!(inter % 3 <= 1 && inter % 5 <= 1 && !inter.is_multiple_of(15));
                assert_eq!(inter, predicted_intersection(&q, &[&ys[i], &ys[j]]));
            }
        }
        // Inverting the flattening: every element of set y is a block covering y.
        let labels = g.element_labels().unwrap();
        for (set, y) in g.sets().iter().zip(&ys) {
            for e in set.ones() {
                let ElementLabel::Block { monomial, assignment, .. } = &labels[e] else { panic!() };
                assert!(monomial.iter().zip(assignment).all(|(&j, &a)| y[j] == a));
            }
        }
    }

    #[test]
    fn merged_m15_n3_l2() {
        let g = build_grolmusz_system(&params()).unwrap();
        let h = merge_systems(&g, 2).unwrap();
        assert_eq!(h.len(), 783);
        assert_eq!(h.predicted_len(), Some(783));
        assert_eq!(h.universe(), 2 * g.universe());
        assert_eq!(h.size_classes(), vec![60, 120]);
        let c = h.containment(Execution::Parallel);
        let small = c.minimal_with_supersets(27);
        assert_eq!(small.len(), 54);
        assert_eq!(small, (0..54).collect::<Vec<_>>());
    }

    #[test]
    fn merge_rejects_empty_core() {
        let m = Modulus::new(15).unwrap();
        let g = SetSystem::new(m, 30, vec![BitSet::from_indices(30, 0..15), BitSet::from_indices(30, 15..30)]).unwrap();
        assert_eq!(merge_systems(&g, 2), Err(SetSysError::EmptyCore));
    }

    #[test]
    fn verify_hand_built_systems() {
        let m = Modulus::new(15).unwrap();
        let bad =
            SetSystem::new(m.clone(), 30, vec![BitSet::from_indices(30, 0..15), BitSet::from_indices(30, 15..30)])
                .unwrap();
        let r = verify_with(&bad, 3, 2, &VerifyConfig { samples: 100, ..Default::default() });
        assert_eq!(r.violations, 1);
        assert_eq!(r.witnesses, vec![Witness { members: vec![0, 1], intersection: 0 }]);
        let single = SetSystem::new(m, 15, vec![BitSet::full(15)]).unwrap();
        assert!(verify_restricted_intersections(&single, 3, 2).is_clean());
    }

    #[test]
    fn companion_alignment_contains_anchor() {
        let h = build_merged_system(&params()).unwrap();
        let hp = build_merged_system(&params().with_extra_prime(7).unwrap()).unwrap();
        assert_eq!(hp.universe(), 6948);
        let (a, b) = align_companion(&h, &hp, 0, 0).unwrap();
        assert_eq!(a.universe(), b.universe());
        assert!(a.sets()[0].is_subset(&b.sets()[0]));
        assert_eq!(b.size_classes(), vec![420, 840]);
    }

    #[test]
    fn universe_bound_not_promised_at_desk_scale() {
        assert_eq!(universe_bound_holds(&params(), 948), None);
    }
}
