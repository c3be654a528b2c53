//! Complementary filterbanks and the reverse-order subband structure.
//!
//! For a reconstructing FIR pair there are `a ≠ 0` and `b ∈ ℤ` with
//!
//! ```text
//! g_i[m] = (−1)^i · a · (−1)^m · h_{1−i}[m + 2b + 1]
//! ```
//!
//! and the complementary pair swaps analysis and synthesis roles:
//! `g̃_i[n] = a·h_i[n + 2b + 1]`, `h̃_i[n] = a⁻¹·g_i[n − 2b − 1]`.
//!
//! Complementary coefficients `w` use `g̃` at level 0 only. With them, the
//! modulated signal's coefficients are a signed reversal of `w`:
//! `v^{x_m}_𝒊 = (−1)^{i_0} w_{𝒊′}`, where `𝒊′` flips `i_0`.

use serde::Serialize;

use crate::analysis::{analyze_tree, check_depth, provenance, synthesize_slices};
use crate::error::{FbError, Result};
use crate::filterbank::{FilterbankPair, PR_TOL};
use crate::rng::NoiseStream;
use crate::signal::Signal1D;
use crate::subband::{SetKind, SubbandIndex, SubbandSet, SupportMask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplementParams {
    pub a: f64,
    pub b: i64,
}

impl ComplementParams {
    /// The odd shift `2b + 1`.
    pub fn shift(&self) -> i64 {
        2 * self.b + 1
    }
}

fn alternating(m: i64) -> f64 {
    if m.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Least-squares `a` and max residual for one odd shift `s`.
fn fit_shift(fb: &FilterbankPair, s: i64) -> Option<(f64, f64)> {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut terms = Vec::new();
    for i in 0..2 {
        let g = fb.g(i);
        let h = fb.h(1 - i);
        let lo = g.first().min(h.first() - s);
        let hi = g.last().max(h.last() - s);
        let sign_i = if i == 0 { 1.0 } else { -1.0 };
        for m in lo..=hi {
            let c = sign_i * alternating(m) * h.at(m + s);
            let gm = g.at(m);
            num += gm * c;
            den += c * c;
            terms.push((gm, c));
        }
    }
    if den == 0.0 {
        return None;
    }
    let a = num / den;
    let residual = terms
        .iter()
        .map(|(gm, c)| (gm - a * c).abs())
        .fold(0.0, f64::max);
    Some((a, residual))
}

/// Finds `(a, b)` by scanning every odd shift for which the supports of
/// `g_i` and the shifted `h_{1−i}` overlap.
pub fn derive_complement_params(fb: &FilterbankPair) -> Result<ComplementParams> {
    let mut best: Option<(f64, i64, f64)> = None;
    for i in 0..2 {
        let g = fb.g(i);
        let h = fb.h(1 - i);
        for s in (h.first() - g.last())..=(h.last() - g.first()) {
            if s.rem_euclid(2) != 1 {
                continue;
            }
            if let Some((a, r)) = fit_shift(fb, s) {
                if a != 0.0 && best.map_or(true, |(_, _, br)| r < br) {
                    best = Some((a, s, r));
                }
            }
        }
    }
    match best {
        Some((a, s, r)) if r <= PR_TOL => Ok(ComplementParams { a, b: (s - 1) / 2 }),
        Some((_, _, r)) => Err(FbError::NoComplementParams {
            name: fb.name().to_string(),
            residual: r,
        }),
        None => Err(FbError::NoComplementParams {
            name: fb.name().to_string(),
            residual: f64::INFINITY,
        }),
    }
}

/// The complementary pair; it is itself checked for perfect reconstruction.
pub fn build_complement(fb: &FilterbankPair, p: ComplementParams) -> Result<FilterbankPair> {
    let s = p.shift();
    let g = [0, 1].map(|i| fb.h(i).scaled(p.a).advanced(s));
    let h = [0, 1].map(|i| fb.g(i).scaled(1.0 / p.a).advanced(-s));
    FilterbankPair::new(format!("{}~", fb.name()), fb.normalization(), g, h)
}

/// A filterbank together with its complement, derived once.
#[derive(Debug, Clone)]
pub struct Complement {
    pub params: ComplementParams,
    pub pair: FilterbankPair,
}

impl Complement {
    pub fn of(fb: &FilterbankPair) -> Result<Self> {
        let params = derive_complement_params(fb)?;
        let pair = build_complement(fb, params)?;
        Ok(Complement { params, pair })
    }
}

/// `w^x`: level 0 uses the complementary analysis filters, deeper levels the
/// original ones.
pub fn analyze_complementary_multi(
    x: &Signal1D,
    fb: &FilterbankPair,
    depth: u32,
) -> Result<SubbandSet> {
    let comp = Complement::of(fb)?;
    analyze_complementary_with(x, fb, &comp, depth)
}

pub fn analyze_complementary_with(
    x: &Signal1D,
    fb: &FilterbankPair,
    comp: &Complement,
    depth: u32,
) -> Result<SubbandSet> {
    check_depth(x.len(), depth)?;
    let bands = analyze_tree(x, comp.pair.analysis(), fb.analysis(), depth);
    SubbandSet::new(
        depth,
        x.len(),
        bands,
        provenance(fb, SetKind::Complementary),
    )
}

/// Inverse of [`analyze_complementary_with`].
pub fn synthesize_complementary_with(
    w: &SubbandSet,
    fb: &FilterbankPair,
    comp: &Complement,
) -> Result<Signal1D> {
    w.validate()?;
    let x = crate::analysis::synthesize_tree(
        w.bands().to_vec(),
        comp.pair.synthesis(),
        fb.synthesis(),
        w.depth(),
    );
    Signal1D::new(x)
}

const SIGN_PROBES: usize = 8;
const SIGN_PROBE_LEN: usize = 64;

/// Constant per-subband signs `s_i` with `w_i = s_i · v_i`, where `v` comes
/// from `fb` and `w` from `other` (one level, random probes), if they exist.
pub fn sign_pattern(fb: &FilterbankPair, other: &FilterbankPair) -> Option<(f64, f64)> {
    let mut signs = [None::<f64>; 2];
    for t in 0..SIGN_PROBES {
        let x = NoiseStream::new(0x5347_4e53, t as u64).normals(SIGN_PROBE_LEN, 1.0);
        for i in 0..2 {
            let v = crate::analysis::analyze_slice(&x, fb.g(i));
            let w = crate::analysis::analyze_slice(&x, other.g(i));
            let s = match signs[i] {
                Some(s) => s,
                None => {
                    let num: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
                    let s = if num >= 0.0 { 1.0 } else { -1.0 };
                    signs[i] = Some(s);
                    s
                }
            };
            let scale = v.iter().fold(1.0f64, |m, a| m.max(a.abs()));
            if v.iter()
                .zip(&w)
                .any(|(a, b)| (b - s * a).abs() > PR_TOL * scale)
            {
                return None;
            }
        }
    }
    Some((signs[0]?, signs[1]?))
}

/// Signs `(s_0, s_1)` with `w_i = s_i v_i` when the filterbank is
/// self-complementary; `None` otherwise.
pub fn check_self_complementary(fb: &FilterbankPair) -> Result<Option<(f64, f64)>> {
    let comp = Complement::of(fb)?;
    Ok(sign_pattern(fb, &comp.pair))
}

fn require_kind(set: &SubbandSet, kind: SetKind, what: &str) -> Result<()> {
    if set.provenance().kind != kind {
        return Err(FbError::Provenance(format!(
            "{what} must be a {kind:?} table, found {:?}",
            set.provenance().kind
        )));
    }
    Ok(())
}

/// `v^{x_m}_𝒊 = (−1)^{i_0} w_{𝒊′}`.
pub fn ross_predict_modulated(w: &SubbandSet) -> Result<SubbandSet> {
    w.validate()?;
    require_kind(w, SetKind::Complementary, "input")?;
    Ok(w.derive_with(|idx, n| idx.level0_sign() * w.get(idx.complement(), n)))
}

fn check_pair(v: &SubbandSet, w: &SubbandSet) -> Result<()> {
    v.validate()?;
    w.validate()?;
    v.check_shape(w)?;
    require_kind(w, SetKind::Complementary, "w")?;
    if v.provenance().kind == SetKind::Complementary {
        return Err(FbError::Provenance("v must be a regular table".into()));
    }
    if v.filterbank() != w.filterbank()
        || v.provenance().normalization != w.provenance().normalization
    {
        return Err(FbError::Provenance(format!(
            "v from `{}`, w from `{}`",
            v.filterbank(),
            w.filterbank()
        )));
    }
    Ok(())
}

/// Coefficients of the subsampled signal, `½(v_𝒊 + (−1)^{i_0} w_{𝒊′})`.
pub fn alias_decompose(v: &SubbandSet, w: &SubbandSet) -> Result<SubbandSet> {
    check_pair(v, w)?;
    Ok(v.derive_with(|idx, n| {
        0.5 * (v.get(idx, n) + idx.level0_sign() * w.get(idx.complement(), n))
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    /// `2·v^{x_s}` where recovered, zero elsewhere.
    pub coefficients: SubbandSet,
    pub recovered: SupportMask,
}

impl Recovery {
    pub fn aliased_count(&self) -> usize {
        self.recovered
            .bands
            .iter()
            .flatten()
            .filter(|&&r| !r)
            .count()
    }
}

/// Recovers `v^x_𝒊[n] = 2·v^{x_s}_𝒊[n]` wherever `w_vanishes` marks
/// `w^x_{𝒊′}[n]` as zero (the mask is indexed by the `w` subband).
pub fn alias_free_recover(vs: &SubbandSet, w_vanishes: &SupportMask) -> Result<Recovery> {
    vs.validate()?;
    if w_vanishes.depth != vs.depth() {
        return Err(FbError::DepthMismatch {
            left: vs.depth(),
            right: w_vanishes.depth,
        });
    }
    if w_vanishes.band_len() != vs.band_len() {
        return Err(FbError::LengthMismatch {
            left: vs.band_len(),
            right: w_vanishes.band_len(),
        });
    }
    let ok = |idx: SubbandIndex, n| w_vanishes.get(idx.complement(), n);
    let coefficients = vs.derive_with(|idx, n| {
        if ok(idx, n) {
            2.0 * vs.get(idx, n)
        } else {
            0.0
        }
    });
    let recovered = SupportMask {
        depth: vs.depth(),
        bands: vs
            .indices()
            .map(|idx| (0..vs.band_len()).map(|n| ok(idx, n)).collect())
            .collect(),
    };
    Ok(Recovery {
        coefficients,
        recovered,
    })
}

/// Marks where a `w` table vanishes, for [`alias_free_recover`].
pub fn vanishing_mask(w: &SubbandSet, eps: Option<f64>) -> SupportMask {
    let mut m = SupportMask::from_set(w, eps);
    for b in m.bands.iter_mut().flatten() {
        *b = !*b;
    }
    m
}

/// Synthesizes `(w_1, −w_0)` with the regular filters, which yields the
/// modulated signal. Only defined for one level.
pub fn modulate_by_rewire(w: &SubbandSet, fb: &FilterbankPair) -> Result<Signal1D> {
    w.validate()?;
    require_kind(w, SetKind::Complementary, "input")?;
    if w.depth() != 1 {
        return Err(FbError::UnsupportedDepth {
            depth: w.depth(),
            reason: "rewired modulation is defined for one level".into(),
        });
    }
    crate::analysis::check_provenance(w.provenance(), fb)?;
    let one = SubbandIndex::new(1, 1)?;
    let zero = SubbandIndex::new(0, 1)?;
    let u1: Vec<f64> = w.band(zero).iter().map(|v| -v).collect();
    Signal1D::new(synthesize_slices(w.band(one), &u1, fb.synthesis()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubbandFlags {
    pub index: String,
    pub v_supported: Vec<bool>,
    pub w_supported: Vec<bool>,
    pub aliased: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AliasSummary {
    pub positions: usize,
    pub v_supported: usize,
    pub w_supported: usize,
    pub aliased: usize,
}

/// Where subsampling makes `v_𝒊[n]` and `w_{𝒊′}[n]` indistinguishable:
/// both are nonzero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AliasReport {
    pub depth: u32,
    pub band_len: usize,
    pub support_eps: f64,
    pub subbands: Vec<SubbandFlags>,
    pub summary: AliasSummary,
}

impl AliasReport {
    pub fn aliased(&self, idx: SubbandIndex, n: usize) -> bool {
        self.subbands[idx.as_usize()].aliased[n]
    }

    /// Coarse positions with any aliased subband.
    pub fn aliased_positions(&self) -> Vec<usize> {
        (0..self.band_len)
            .filter(|&n| self.subbands.iter().any(|s| s.aliased[n]))
            .collect()
    }
}

/// Flags `v_𝒊[n]`, `w_{𝒊′}[n]` support and their overlap. `eps` defaults to
/// `1e-9` times the largest coefficient magnitude in either table.
pub fn alias_report(v: &SubbandSet, w: &SubbandSet, eps: Option<f64>) -> Result<AliasReport> {
    check_pair(v, w)?;
    let eps = eps.unwrap_or_else(|| v.support_eps().max(w.support_eps()));
    let mut summary = AliasSummary {
        positions: v.band_len() << v.depth(),
        v_supported: 0,
        w_supported: 0,
        aliased: 0,
    };
    let subbands = v
        .indices()
        .map(|idx| {
            let vs: Vec<bool> = v.band(idx).iter().map(|c| c.abs() > eps).collect();
            let ws: Vec<bool> = w
                .band(idx.complement())
                .iter()
                .map(|c| c.abs() > eps)
                .collect();
            let al: Vec<bool> = vs.iter().zip(&ws).map(|(a, b)| *a && *b).collect();
            summary.v_supported += vs.iter().filter(|&&b| b).count();
            summary.w_supported += ws.iter().filter(|&&b| b).count();
            summary.aliased += al.iter().filter(|&&b| b).count();
            SubbandFlags {
                index: idx.to_string(),
                v_supported: vs,
                w_supported: ws,
                aliased: al,
            }
        })
        .collect();
    Ok(AliasReport {
        depth: v.depth(),
        band_len: v.band_len(),
        support_eps: eps,
        subbands,
        summary,
    })
}
