//! Scans over principal quantum numbers for near-resonant s→p channels.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::atomic::{FineLevel, Species};
use crate::channel::{Channel, Coupling, PairLabel};
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::halfint::HalfInt;
use crate::profile::label_factors;
use crate::radial::RadialMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpeciesPair {
    pub a: Species,
    pub b: Species,
}

impl SpeciesPair {
    pub const RB_CS: SpeciesPair = SpeciesPair {
        a: Species::Rb87,
        b: Species::Cs133,
    };
    pub const RB_RB: SpeciesPair = SpeciesPair {
        a: Species::Rb87,
        b: Species::Rb87,
    };
    pub const CS_CS: SpeciesPair = SpeciesPair {
        a: Species::Cs133,
        b: Species::Cs133,
    };

    pub fn same_species(&self) -> bool {
        self.a == self.b
    }
}

impl fmt::Display for SpeciesPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.a.symbol(), self.b.symbol())
    }
}

impl FromStr for SpeciesPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let split = t
            .char_indices()
            .skip(1)
            .find(|(_, c)| c.is_ascii_uppercase())
            .map(|(i, _)| i)
            .ok_or_else(|| invalid(format!("cannot split species pair {s:?}")))?;
        Ok(SpeciesPair {
            a: t[..split].parse()?,
            b: t[split..].parse()?,
        })
    }
}

/// Which atom drops one principal quantum number in its p target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Assignment {
    /// `α = n_a p`, `β = (n_b − 1) p`.
    LowerB,
    /// `α = (n_a − 1) p`, `β = n_b p`.
    LowerA,
}

impl Assignment {
    pub const BOTH: [Assignment; 2] = [Assignment::LowerB, Assignment::LowerA];

    fn targets(self, n_a: u32, n_b: u32) -> (u32, u32) {
        match self {
            Assignment::LowerB => (n_a, n_b - 1),
            Assignment::LowerA => (n_a - 1, n_b),
        }
    }
}

fn sp_js(k: u8) -> Result<(HalfInt, HalfInt)> {
    let c = Coupling::sp(k)?;
    Ok((c.j_alpha, c.j_beta))
}

/// The four levels of channel `k` for one assignment.
pub fn channel_levels(
    pair: SpeciesPair,
    n_a: u32,
    n_b: u32,
    assignment: Assignment,
    k: u8,
) -> Result<[FineLevel; 4]> {
    let (na_p, nb_p) = assignment.targets(n_a, n_b);
    let (ja, jb) = sp_js(k)?;
    Ok([
        FineLevel::s(pair.a, n_a)?,
        FineLevel::s(pair.b, n_b)?,
        FineLevel::new(pair.a, na_p, 1, ja)?,
        FineLevel::new(pair.b, nb_p, 1, jb)?,
    ])
}

fn assignments_for(pair: SpeciesPair, n_a: u32, n_b: u32) -> &'static [Assignment] {
    if pair.same_species() && n_a == n_b {
        &Assignment::BOTH[..1]
    } else {
        &Assignment::BOTH
    }
}

/// All s→p channels of `n_a s + n_b s`: both assignments times four
/// fine-structure combinations, with the mirror duplicate dropped for
/// identical initial levels.
pub fn enumerate_channels(
    radial: &RadialMatrix,
    pair: SpeciesPair,
    n_a: u32,
    n_b: u32,
) -> Result<Vec<Channel>> {
    let mut out = Vec::new();
    for &asg in assignments_for(pair, n_a, n_b) {
        for k in 1..=4 {
            let [a, b, alpha, beta] = channel_levels(pair, n_a, n_b, asg, k)?;
            out.push(Channel::compute(radial, a, b, alpha, beta)?);
        }
    }
    Ok(out)
}

/// Largest-`D` pair state of a coupling. Ties go to the triplet-zero state
/// for channels 1 and 4 and to the singlet for channels 2 and 3.
pub fn strongest_eigenvector(coupling: &Coupling) -> Result<(PairLabel, f64)> {
    let d = label_factors(coupling)?;
    let preferred = match coupling.sp_index() {
        Some(2) | Some(3) => PairLabel::Singlet,
        _ => PairLabel::TripletZero,
    };
    let max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pick = |label: PairLabel| d[PairLabel::ALL.iter().position(|&l| l == label).unwrap_or(0)];
    if (pick(preferred) - max).abs() <= 1e-12 * max {
        return Ok((preferred, max));
    }
    let idx = d.iter().position(|&x| x == max).unwrap_or(0);
    Ok((PairLabel::ALL[idx], max))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub pair: SpeciesPair,
    pub n_a_min: u32,
    pub n_a_max: u32,
    pub n_b_min: u32,
    pub n_b_max: u32,
    /// Subset of channels 1–4.
    pub channels: Vec<u8>,
    /// Maximum |δ| as a fraction of the ns level spacing of atom a.
    pub defect_fraction: f64,
    /// Minimum |C3| in GHz·µm³.
    pub c3_floor: f64,
}

/// Default window for `n_b` around the `n_a` range.
pub const DEFAULT_N_B_MARGIN: u32 = 10;

impl SearchConfig {
    pub fn new(pair: SpeciesPair, n_a_min: u32, n_a_max: u32) -> Self {
        SearchConfig {
            pair,
            n_a_min,
            n_a_max,
            n_b_min: n_a_min.saturating_sub(DEFAULT_N_B_MARGIN).max(15),
            n_b_max: n_a_max + DEFAULT_N_B_MARGIN,
            channels: vec![1, 2, 3, 4],
            defect_fraction: 0.0005,
            c3_floor: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_a_min > self.n_a_max || self.n_b_min > self.n_b_max {
            return Err(invalid("principal quantum number ranges are empty"));
        }
        if self.n_a_min < 6 || self.n_b_min < 6 {
            return Err(invalid("scan ranges must start at n >= 6"));
        }
        if self.channels.is_empty() {
            return Err(invalid("no channels selected"));
        }
        for &k in &self.channels {
            sp_js(k)?;
        }
        if self.defect_fraction.is_nan()
            || self.defect_fraction < 0.0
            || self.c3_floor.is_nan()
            || self.c3_floor < 0.0
        {
            return Err(invalid("thresholds must be non-negative"));
        }
        Ok(())
    }

    fn n_pairs(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for n_a in self.n_a_min..=self.n_a_max {
            for n_b in self.n_b_min..=self.n_b_max {
                if self.pair.same_species() && n_b < n_a {
                    continue;
                }
                out.push((n_a, n_b));
            }
        }
        out
    }
}

/// `|E(n_a+1, s) − E(n_a, s)|` of atom a, in MHz.
pub fn level_spacing(radial: &RadialMatrix, species: Species, n: u32) -> Result<f64> {
    let data = radial.data();
    Ok(data
        .transition_mhz(&FineLevel::s(species, n)?, &FineLevel::s(species, n + 1)?)?
        .abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceRecord {
    pub channel_index: u8,
    pub assignment: Assignment,
    pub channel: Channel,
    pub delta_mhz: f64,
    pub c3: f64,
    pub u_vdw: f64,
    pub r_c: f64,
    pub eigenvector: PairLabel,
    pub d: f64,
    pub level_spacing_mhz: f64,
}

impl ResonanceRecord {
    pub fn from_channel(
        channel: Channel,
        assignment: Assignment,
        spacing_mhz: f64,
    ) -> Result<Self> {
        let coupling = channel.coupling();
        let index = channel
            .index()
            .ok_or_else(|| invalid(format!("{} is not an s→p channel", channel.label())))?;
        let (label, d) = strongest_eigenvector(&coupling)?;
        Ok(ResonanceRecord {
            channel_index: index,
            assignment,
            delta_mhz: channel.delta_mhz,
            c3: channel.c3,
            u_vdw: channel.vdw_coefficient(d)?,
            r_c: channel.crossover_radius(d)?,
            eigenvector: label,
            d,
            level_spacing_mhz: spacing_mhz,
            channel,
        })
    }

    pub fn satisfies(&self, cfg: &SearchConfig) -> bool {
        self.delta_mhz.abs() < cfg.defect_fraction * self.level_spacing_mhz
            && self.c3.abs() >= cfg.c3_floor
            && cfg.channels.contains(&self.channel_index)
    }

    fn sort_key(&self) -> (u32, u32, u8, Assignment) {
        (
            self.channel.a.n,
            self.channel.b.n,
            self.channel_index,
            self.assignment,
        )
    }
}

/// Runs the scan and returns records ordered by `(n_a, n_b, channel)`.
pub fn find_resonances(
    radial: &RadialMatrix,
    cfg: &SearchConfig,
    exec: Execution,
) -> Result<Vec<ResonanceRecord>> {
    cfg.validate()?;
    let pairs = cfg.n_pairs();
    let chunks = exec.try_map(&pairs, |&(n_a, n_b)| scan_pair(radial, cfg, n_a, n_b))?;
    let mut out: Vec<ResonanceRecord> = chunks.into_iter().flatten().collect();
    out.sort_by_key(ResonanceRecord::sort_key);
    Ok(out)
}

fn scan_pair(
    radial: &RadialMatrix,
    cfg: &SearchConfig,
    n_a: u32,
    n_b: u32,
) -> Result<Vec<ResonanceRecord>> {
    let data = radial.data();
    let spacing = level_spacing(radial, cfg.pair.a, n_a)?;
    let mut out = Vec::new();
    for &asg in assignments_for(cfg.pair, n_a, n_b) {
        for &k in &cfg.channels {
            let [a, b, alpha, beta] = channel_levels(cfg.pair, n_a, n_b, asg, k)?;
            let delta = data.pair_defect(&a, &b, &alpha, &beta)?;
            let window = cfg.defect_fraction * spacing;
            if delta.is_nan() || window.is_nan() || delta.abs() >= window {
                continue;
            }
            let c3 = radial.c3_coefficient(&a, &b, &alpha, &beta)?;
            if c3.abs() < cfg.c3_floor {
                continue;
            }
            let ch = Channel::from_parts(a, b, alpha, beta, delta, c3)?;
            out.push(ResonanceRecord::from_channel(ch, asg, spacing)?);
        }
    }
    Ok(out)
}

/// Column order of the CSV emitter.
pub const CSV_COLUMNS: [&str; 9] = [
    "channel_index",
    "a",
    "alpha",
    "b",
    "beta",
    "delta_MHz",
    "C3_GHz_um3",
    "UvdW_GHz_um6",
    "Rc_um",
];

pub fn records_to_csv(records: &[ResonanceRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.channel_index.to_string(),
            r.channel.a.to_string(),
            r.channel.alpha.to_string(),
            r.channel.b.to_string(),
            r.channel.beta.to_string(),
            r.delta_mhz.to_string(),
            r.c3.to_string(),
            r.u_vdw.to_string(),
            r.r_c.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    channel_index: u8,
    a: String,
    alpha: String,
    b: String,
    beta: String,
    #[serde(rename = "delta_MHz")]
    delta_mhz: f64,
    #[serde(rename = "C3_GHz_um3")]
    c3: f64,
    #[serde(rename = "UvdW_GHz_um6")]
    u_vdw: f64,
    #[serde(rename = "Rc_um")]
    r_c: f64,
    eigenvector: PairLabel,
    #[serde(rename = "D")]
    d: f64,
    assignment: &'a Assignment,
}

/// Records as a JSON array with the CSV field names plus eigenvector data.
pub fn records_to_json(records: &[ResonanceRecord]) -> serde_json::Value {
    let rows: Vec<JsonRecord> = records
        .iter()
        .map(|r| JsonRecord {
            channel_index: r.channel_index,
            a: r.channel.a.to_string(),
            alpha: r.channel.alpha.to_string(),
            b: r.channel.b.to_string(),
            beta: r.channel.beta.to_string(),
            delta_mhz: r.delta_mhz,
            c3: r.c3,
            u_vdw: r.u_vdw,
            r_c: r.r_c,
            eigenvector: r.eigenvector,
            d: r.d,
            assignment: &r.assignment,
        })
        .collect();
    serde_json::to_value(rows).expect("records serialize")
}

/// One `n` point of a defect curve: δ/2π in MHz for channels 1–4.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectPoint {
    pub n_a: u32,
    pub n_b: u32,
    pub delta_mhz: [f64; 4],
    pub level_spacing_mhz: f64,
}

/// Channel family of a defect curve: `n_b = n_a + offset` with an assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectFamily {
    pub assignment: Assignment,
    pub offset: i32,
}

/// Unfiltered energy defects over `n_a` in `[n_min, n_max]`.
pub fn defect_curve(
    radial: &RadialMatrix,
    pair: SpeciesPair,
    family: DefectFamily,
    n_min: u32,
    n_max: u32,
) -> Result<Vec<DefectPoint>> {
    if n_min > n_max {
        return Err(invalid("empty n range"));
    }
    let data = radial.data();
    let mut out = Vec::new();
    for n_a in n_min..=n_max {
        let n_b = i64::from(n_a) + i64::from(family.offset);
        let n_b = u32::try_from(n_b).map_err(|_| invalid(format!("n_b = {n_b} is negative")))?;
        let mut delta = [0.0; 4];
        for k in 1..=4u8 {
            let [a, b, alpha, beta] = channel_levels(pair, n_a, n_b, family.assignment, k)?;
            delta[usize::from(k - 1)] = data.pair_defect(&a, &b, &alpha, &beta)?;
        }
        out.push(DefectPoint {
            n_a,
            n_b,
            delta_mhz: delta,
            level_spacing_mhz: level_spacing(radial, pair.a, n_a)?,
        });
    }
    Ok(out)
}
