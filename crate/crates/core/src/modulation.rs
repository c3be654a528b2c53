//! Localized amplitude modulation with Haar carriers.
//!
//! A carrier schedule picks one subband index `𝒋_k[n]` per coarse position.
//! Its envelope `y_k` has Haar coefficients `2^I·δ(𝒊, 𝒋_k[n])`, i.e. block `n`
//! of `y_k` is the Walsh row `φ_{𝒋_k[n]}`. By subband convolution the sum
//! `z = Σ_k x_k y_k` has `v^z_𝒎[n] = Σ_k v^{x_k}_{𝒎+𝒋_k[n]}[n]`, so channel
//! `k`'s coefficient `𝒊` lands in slot `𝒊 + 𝒋_k[n]`. When no two channels
//! claim the same slot every channel is recoverable from `z`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analysis::{analyze_multi, check_depth, synthesize_multi};
use crate::error::{FbError, Result};
use crate::filterbank::FilterbankPair;
use crate::scs::require_haar_gain2;
use crate::signal::Signal1D;
use crate::subband::{SubbandIndex, SubbandSet, SupportMask};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CarrierSchedule {
    pub name: String,
    depth: u32,
    indices: Vec<SubbandIndex>,
}

impl CarrierSchedule {
    pub fn new(name: impl Into<String>, depth: u32, indices: Vec<u32>) -> Result<Self> {
        let indices = indices
            .into_iter()
            .map(|b| SubbandIndex::new(b, depth))
            .collect::<Result<Vec<_>>>()?;
        if indices.is_empty() {
            return Err(FbError::InvalidModel("empty carrier schedule".into()));
        }
        Ok(CarrierSchedule {
            name: name.into(),
            depth,
            indices,
        })
    }

    /// The same index at every one of `len` positions.
    pub fn constant(name: impl Into<String>, depth: u32, index: u32, len: usize) -> Result<Self> {
        Self::new(name, depth, vec![index; len])
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn index(&self, n: usize) -> SubbandIndex {
        self.indices[n]
    }
}

/// JSON form: `{depth, channels: [{name, indices}]}`, indices encoded as
/// integers with `i_0` in the least significant bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub depth: u32,
    pub channels: Vec<ChannelSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub name: String,
    pub indices: Vec<u32>,
}

impl ScheduleFile {
    pub fn from_json(text: &str) -> Result<Vec<CarrierSchedule>> {
        let f: ScheduleFile = serde_json::from_str(text)
            .map_err(|e| FbError::InvalidModel(format!("carrier schedule JSON: {e}")))?;
        f.channels
            .into_iter()
            .map(|c| CarrierSchedule::new(c.name, f.depth, c.indices))
            .collect()
    }

    pub fn to_json(scheds: &[CarrierSchedule]) -> Result<String> {
        let depth = common_depth(scheds)?;
        let f = ScheduleFile {
            depth,
            channels: scheds
                .iter()
                .map(|s| ChannelSpec {
                    name: s.name.clone(),
                    indices: s.indices.iter().map(|i| i.bits()).collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&f).expect("schedule serializes"))
    }
}

fn common_depth(scheds: &[CarrierSchedule]) -> Result<u32> {
    let first = scheds
        .first()
        .ok_or_else(|| FbError::InvalidModel("no channels".into()))?;
    for s in scheds {
        if s.depth != first.depth {
            return Err(FbError::DepthMismatch {
                left: first.depth,
                right: s.depth,
            });
        }
    }
    Ok(first.depth)
}

/// `y` with Haar coefficients `2^I·δ(𝒊, 𝒋[n])`.
pub fn envelope_from_carrier(sched: &CarrierSchedule, len: usize) -> Result<Signal1D> {
    check_depth(len, sched.depth)?;
    let band_len = len >> sched.depth;
    if sched.len() != band_len {
        return Err(FbError::LengthMismatch {
            left: sched.len(),
            right: band_len,
        });
    }
    let haar = FilterbankPair::haar();
    let gain = (1u64 << sched.depth) as f64;
    let template = analyze_multi(&Signal1D::zeros(len)?, &haar, sched.depth)?;
    let coeffs = template.derive_with(|idx, n| if sched.index(n) == idx { gain } else { 0.0 });
    synthesize_multi(&coeffs, &haar)
}

/// `z = Σ_k x_k · y_k`.
pub fn multiplex(signals: &[Signal1D], scheds: &[CarrierSchedule]) -> Result<Signal1D> {
    if signals.len() != scheds.len() {
        return Err(FbError::LengthMismatch {
            left: signals.len(),
            right: scheds.len(),
        });
    }
    common_depth(scheds)?;
    let len = signals[0].len();
    let mut z = vec![0.0; len];
    for (x, s) in signals.iter().zip(scheds) {
        if x.len() != len {
            return Err(FbError::LengthMismatch {
                left: len,
                right: x.len(),
            });
        }
        let y = envelope_from_carrier(s, len)?;
        for (o, (a, b)) in z.iter_mut().zip(x.iter().zip(y.iter())) {
            *o += a * b;
        }
    }
    Signal1D::new(z)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Conflict {
    pub position: usize,
    /// Slot in `z`'s coefficient table.
    pub index: String,
    pub channels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DisjointReport {
    pub disjoint: bool,
    pub conflicts: Vec<Conflict>,
}

/// Slots of `z` claimed by each channel's support.
fn claims(
    supports: &[SupportMask],
    scheds: &[CarrierSchedule],
) -> Result<BTreeMap<(usize, SubbandIndex), Vec<usize>>> {
    if supports.len() != scheds.len() {
        return Err(FbError::LengthMismatch {
            left: supports.len(),
            right: scheds.len(),
        });
    }
    let depth = common_depth(scheds)?;
    let mut map: BTreeMap<(usize, SubbandIndex), Vec<usize>> = BTreeMap::new();
    for (k, (mask, s)) in supports.iter().zip(scheds).enumerate() {
        if mask.depth != depth {
            return Err(FbError::DepthMismatch {
                left: depth,
                right: mask.depth,
            });
        }
        if mask.band_len() != s.len() {
            return Err(FbError::LengthMismatch {
                left: mask.band_len(),
                right: s.len(),
            });
        }
        for i in SubbandIndex::all(depth) {
            for n in 0..s.len() {
                if mask.get(i, n) {
                    map.entry((n, i + s.index(n))).or_default().push(k);
                }
            }
        }
    }
    Ok(map)
}

fn conflicts_of(map: BTreeMap<(usize, SubbandIndex), Vec<usize>>) -> Vec<Conflict> {
    map.into_iter()
        .filter(|(_, ch)| ch.len() > 1)
        .map(|((position, idx), channels)| Conflict {
            position,
            index: idx.to_string(),
            channels,
        })
        .collect()
}

/// Checks that the shifted supports of the channels' coefficients are
/// pairwise disjoint.
pub fn check_disjoint_supports(
    coeffs: &[SubbandSet],
    scheds: &[CarrierSchedule],
) -> Result<DisjointReport> {
    let masks: Vec<SupportMask> = coeffs
        .iter()
        .map(|c| SupportMask::from_set(c, None))
        .collect();
    check_disjoint_masks(&masks, scheds)
}

pub fn check_disjoint_masks(
    supports: &[SupportMask],
    scheds: &[CarrierSchedule],
) -> Result<DisjointReport> {
    let conflicts = conflicts_of(claims(supports, scheds)?);
    Ok(DisjointReport {
        disjoint: conflicts.is_empty(),
        conflicts,
    })
}

/// `v^{x_k}_𝒊[n] = v^z_{𝒊+𝒋_k[n]}[n]` on each channel's claimed support.
pub fn demultiplex(
    z: &Signal1D,
    scheds: &[CarrierSchedule],
    supports: &[SupportMask],
) -> Result<Vec<SubbandSet>> {
    let map = claims(supports, scheds)?;
    if let Some(c) = conflicts_of(map).into_iter().next() {
        return Err(FbError::SupportConflict {
            position: c.position,
            index: c.index,
            channels: c.channels,
        });
    }
    let depth = common_depth(scheds)?;
    let vz = analyze_multi(z, &FilterbankPair::haar(), depth)?;
    Ok(scheds
        .iter()
        .zip(supports)
        .map(|(s, mask)| {
            vz.derive_with(|i, n| {
                if mask.get(i, n) {
                    vz.get(i + s.index(n), n)
                } else {
                    0.0
                }
            })
            .with_kind(crate::subband::SetKind::Regular)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaskSubbandFlags {
    pub index: String,
    /// Number of nonzero terms `v^x_{𝒊+𝒋} v^y_𝒋` feeding output `𝒊`.
    pub terms: Vec<u32>,
    pub aliased: Vec<bool>,
}

/// Non-uniqueness of `v^x` given the coefficients of `x·y` for a mask `y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaskAliasReport {
    pub depth: u32,
    pub band_len: usize,
    pub subbands: Vec<MaskSubbandFlags>,
    pub aliased: usize,
}

impl MaskAliasReport {
    pub fn aliased(&self, idx: SubbandIndex, n: usize) -> bool {
        self.subbands[idx.as_usize()].aliased[n]
    }
}

/// Output coefficient `(𝒊, n)` of `x·y` is aliased when two or more product
/// terms `v^x_{𝒊+𝒋}[n] v^y_𝒋[n]` are simultaneously nonzero.
pub fn mask_alias_report(vx: &SubbandSet, vy: &SubbandSet) -> Result<MaskAliasReport> {
    vx.validate()?;
    vy.validate()?;
    vx.check_shape(vy)?;
    require_haar_gain2(vx)?;
    require_haar_gain2(vy)?;
    let (ex, ey) = (vx.support_eps(), vy.support_eps());
    let mut total = 0;
    let subbands = vx
        .indices()
        .map(|i| {
            let terms: Vec<u32> = (0..vx.band_len())
                .map(|n| {
                    SubbandIndex::all(vx.depth())
                        .filter(|&j| vx.get(i + j, n).abs() > ex && vy.get(j, n).abs() > ey)
                        .count() as u32
                })
                .collect();
            let aliased: Vec<bool> = terms.iter().map(|&t| t >= 2).collect();
            total += aliased.iter().filter(|&&a| a).count();
            MaskSubbandFlags {
                index: i.to_string(),
                terms,
                aliased,
            }
        })
        .collect();
    Ok(MaskAliasReport {
        depth: vx.depth(),
        band_len: vx.band_len(),
        subbands,
        aliased: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(v: Vec<f64>) -> Signal1D {
        Signal1D::new(v).unwrap()
    }

    #[test]
    fn envelopes() {
        let dc = CarrierSchedule::constant("dc", 1, 0, 4).unwrap();
        assert_eq!(envelope_from_carrier(&dc, 8).unwrap().samples(), &[1.0; 8]);
        let alt = CarrierSchedule::constant("alt", 1, 1, 4).unwrap();
        assert_eq!(
            envelope_from_carrier(&alt, 8).unwrap().samples(),
            &[1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0]
        );
        let switch = CarrierSchedule::new("switch", 1, vec![0, 0, 1, 1]).unwrap();
        assert_eq!(
            envelope_from_carrier(&switch, 8).unwrap().samples(),
            &[1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 1.0, -1.0]
        );
        assert!(envelope_from_carrier(&dc, 6).is_err());
    }

    #[test]
    fn two_channel_multiplex() {
        let x1 = sig((0..8).map(|n| n as f64).collect());
        let x2 = sig((0..8).map(|n| 10.0 - n as f64).collect());
        let s = [
            CarrierSchedule::constant("a", 1, 0, 4).unwrap(),
            CarrierSchedule::constant("b", 1, 1, 4).unwrap(),
        ];
        let z = multiplex(&[x1.clone(), x2.clone()], &s).unwrap();
        for n in 0..8 {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(z[n], x1[n] + sign * x2[n]);
        }
    }

    #[test]
    fn identical_channels_conflict() {
        let haar = FilterbankPair::haar();
        let x = sig(vec![1.0, 2.0, 3.0, 5.0]);
        let v = analyze_multi(&x, &haar, 1).unwrap();
        let s = CarrierSchedule::constant("a", 1, 0, 2).unwrap();
        let r = check_disjoint_supports(&[v.clone(), v.clone()], &[s.clone(), s.clone()]).unwrap();
        assert!(!r.disjoint);
        assert_eq!(r.conflicts.len(), 4);
        assert!(r.conflicts.iter().all(|c| c.channels == vec![0, 1]));
        let one = check_disjoint_supports(&[v.clone()], &[s.clone()]).unwrap();
        assert!(one.disjoint);
        let masks = vec![SupportMask::from_set(&v, None); 2];
        let z = multiplex(&[x.clone(), x], &[s.clone(), s.clone()]).unwrap();
        assert!(matches!(
            demultiplex(&z, &[s.clone(), s], &masks),
            Err(FbError::SupportConflict { .. })
        ));
    }

    #[test]
    fn schedule_json_round_trip() {
        let s = vec![
            CarrierSchedule::new("a", 2, vec![0, 3, 1]).unwrap(),
            CarrierSchedule::new("b", 2, vec![2, 2, 2]).unwrap(),
        ];
        let text = ScheduleFile::to_json(&s).unwrap();
        assert_eq!(ScheduleFile::from_json(&text).unwrap(), s);
        assert!(ScheduleFile::from_json(r#"{"depth":1,"channels":[],"x":1}"#).is_err());
        assert!(CarrierSchedule::new("bad", 1, vec![2]).is_err());
    }

    #[test]
    fn even_mask_aliasing_matches_complementary_report() {
        let haar = FilterbankPair::haar();
        let x = sig((0..16).map(|n| if n < 5 { 0.0 } else { 1.0 }).collect());
        let mask = sig((0..16)
            .map(|n| if n % 2 == 0 { 1.0 } else { 0.0 })
            .collect());
        let r = mask_alias_report(
            &analyze_multi(&x, &haar, 1).unwrap(),
            &analyze_multi(&mask, &haar, 1).unwrap(),
        )
        .unwrap();
        let v = analyze_multi(&x, &haar, 1).unwrap();
        let w = crate::complement::analyze_complementary_multi(&x, &haar, 1).unwrap();
        let c = crate::complement::alias_report(&v, &w, None).unwrap();
        for i in v.indices() {
            for n in 0..v.band_len() {
                assert_eq!(r.aliased(i, n), c.aliased(i, n));
            }
        }
        let ones = sig(vec![1.0; 16]);
        let r1 = mask_alias_report(
            &analyze_multi(&x, &haar, 2).unwrap(),
            &analyze_multi(&ones, &haar, 2).unwrap(),
        )
        .unwrap();
        assert_eq!(r1.aliased, 0);
    }
}
