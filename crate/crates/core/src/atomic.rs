//! Species constants, quantum-defect series, level energies and lifetimes.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::halfint::HalfInt;
use crate::units::{ELECTRON_MASS_U, GHZ_PER_WAVENUMBER, MHZ_PER_GHZ, RYDBERG_INFINITY_CM};

pub const DEFECT_FILE: &str = "quantum_defects.dat";
pub const LIFETIME_FILE: &str = "lifetimes.dat";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Species {
    #[serde(rename = "87Rb")]
    Rb87,
    #[serde(rename = "133Cs")]
    Cs133,
}

impl Species {
    pub const ALL: [Species; 2] = [Species::Rb87, Species::Cs133];

    /// Element symbol used as the key in data files.
    pub fn symbol(self) -> &'static str {
        match self {
            Species::Rb87 => "Rb",
            Species::Cs133 => "Cs",
        }
    }

    /// Atomic mass in u.
    pub fn mass_u(self) -> f64 {
        match self {
            Species::Rb87 => 86.909_180_531,
            Species::Cs133 => 132.905_451_961,
        }
    }

    /// Reduced-mass Rydberg constant in GHz.
    pub fn rydberg_ghz(self) -> f64 {
        RYDBERG_INFINITY_CM * GHZ_PER_WAVENUMBER / (1.0 + ELECTRON_MASS_U / self.mass_u())
    }
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Species {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rb" | "87rb" | "rb87" | "rb-87" => Ok(Species::Rb87),
            "cs" | "133cs" | "cs133" | "cs-133" => Ok(Species::Cs133),
            other => Err(invalid(format!("unknown species {other:?}"))),
        }
    }
}

/// One fine-structure level `(species, n, l, j)` with `s = 1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FineLevel {
    pub species: Species,
    pub n: u32,
    pub l: u32,
    pub j: HalfInt,
}

impl FineLevel {
    pub fn new(species: Species, n: u32, l: u32, j: HalfInt) -> Result<Self> {
        if n < 4 {
            return Err(invalid(format!("n = {n} is below 4")));
        }
        if l >= n {
            return Err(invalid(format!("l = {l} is not below n = {n}")));
        }
        let l2 = 2 * l as i32;
        if j.twice() != l2 + 1 && j.twice() != l2 - 1 {
            return Err(invalid(format!("j = {j} is not l ± 1/2 for l = {l}")));
        }
        Ok(FineLevel { species, n, l, j })
    }

    pub fn s(species: Species, n: u32) -> Result<Self> {
        Self::new(species, n, 0, HalfInt::HALF)
    }

    pub fn p12(species: Species, n: u32) -> Result<Self> {
        Self::new(species, n, 1, HalfInt::HALF)
    }

    pub fn p32(species: Species, n: u32) -> Result<Self> {
        Self::new(species, n, 1, HalfInt::THREE_HALVES)
    }

    /// Parses spectroscopic notation such as `48p3/2` or `51s`.
    pub fn parse(species: Species, label: &str) -> Result<Self> {
        let label = label.trim();
        let digits = label.chars().take_while(char::is_ascii_digit).count();
        let bad = || invalid(format!("cannot parse level {label:?}"));
        let n: u32 = label[..digits].parse().map_err(|_| bad())?;
        let mut rest = label[digits..].chars();
        let l = match rest.next().ok_or_else(bad)?.to_ascii_lowercase() {
            's' => 0,
            'p' => 1,
            'd' => 2,
            'f' => 3,
            _ => return Err(bad()),
        };
        let tail: String = rest.collect();
        let j = if tail.is_empty() {
            if l == 0 {
                HalfInt::HALF
            } else {
                return Err(invalid(format!("level {label:?} needs j")));
            }
        } else {
            tail.parse()?
        };
        Self::new(species, n, l, j)
    }

    pub fn l_letter(&self) -> char {
        ['s', 'p', 'd', 'f', 'g', 'h']
            .get(self.l as usize)
            .copied()
            .unwrap_or('?')
    }

    /// Label without species, e.g. `48p3/2`.
    pub fn short_label(&self) -> String {
        format!("{}{}{}", self.n, self.l_letter(), self.j)
    }
}

impl fmt::Display for FineLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.species, self.short_label())
    }
}

/// Modified Rydberg–Ritz series `δ0 + δ2/(n−δ0)² + δ4/(n−δ0)⁴ + ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumDefectSeries {
    pub species: String,
    pub l: u32,
    pub j: HalfInt,
    pub coefficients: Vec<f64>,
    pub source: String,
}

impl QuantumDefectSeries {
    pub fn defect(&self, n: f64) -> f64 {
        let Some(&d0) = self.coefficients.first() else {
            return 0.0;
        };
        let x = (n - d0).powi(-2);
        let mut power = 1.0;
        let mut total = d0;
        for &c in &self.coefficients[1..] {
            power *= x;
            total += c * power;
        }
        total
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LifetimeEntry {
    pub level: FineLevel,
    pub lifetime_us: f64,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataFileInfo {
    pub name: String,
    pub sha256: String,
}

type DefectKey = (String, u32, HalfInt);

/// Immutable atomic data set loaded from the defect and lifetime files.
#[derive(Clone, Debug, Default)]
pub struct AtomicData {
    defects: BTreeMap<DefectKey, QuantumDefectSeries>,
    lifetimes: BTreeMap<FineLevel, LifetimeEntry>,
    files: Vec<DataFileInfo>,
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then(|| (i + 1, line.split_whitespace().collect()))
    })
}

fn parse_err(file: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

impl AtomicData {
    /// The data files shipped in the repository `data/` directory.
    pub fn bundled() -> Self {
        Self::from_strs(
            include_str!("../../../data/quantum_defects.dat"),
            include_str!("../../../data/lifetimes.dat"),
        )
        .expect("bundled data files are valid")
    }

    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path)
                .map_err(|e| Error::DataNotFound(format!("{} ({e})", path.display())))
        };
        Self::from_strs(&read(DEFECT_FILE)?, &read(LIFETIME_FILE)?)
    }

    pub fn from_strs(defects: &str, lifetimes: &str) -> Result<Self> {
        let mut data = AtomicData::default();
        for (line, fields) in content_lines(defects) {
            let series = parse_defect_line(&fields).map_err(|m| parse_err(DEFECT_FILE, line, m))?;
            let key = (series.species.clone(), series.l, series.j);
            if data.defects.contains_key(&key) {
                return Err(parse_err(
                    DEFECT_FILE,
                    line,
                    format!("duplicate series for {} l={} j={}", key.0, key.1, key.2),
                ));
            }
            data.defects.insert(key, series);
        }
        for (line, fields) in content_lines(lifetimes) {
            let entry =
                parse_lifetime_line(&fields).map_err(|m| parse_err(LIFETIME_FILE, line, m))?;
            if data.lifetimes.contains_key(&entry.level) {
                return Err(parse_err(
                    LIFETIME_FILE,
                    line,
                    format!("duplicate lifetime for {}", entry.level),
                ));
            }
            data.lifetimes.insert(entry.level, entry);
        }
        data.files = vec![
            DataFileInfo {
                name: DEFECT_FILE.to_string(),
                sha256: sha256_hex(defects),
            },
            DataFileInfo {
                name: LIFETIME_FILE.to_string(),
                sha256: sha256_hex(lifetimes),
            },
        ];
        Ok(data)
    }

    pub fn files(&self) -> &[DataFileInfo] {
        &self.files
    }

    /// Replaces or adds a defect series.
    pub fn with_series(mut self, series: QuantumDefectSeries) -> Self {
        self.defects
            .insert((series.species.clone(), series.l, series.j), series);
        self
    }

    pub fn series(&self, species: Species, l: u32, j: HalfInt) -> Result<&QuantumDefectSeries> {
        self.defects
            .get(&(species.symbol().to_string(), l, j))
            .ok_or_else(|| {
                Error::DataNotFound(format!("quantum defects for {species} l={l} j={j}"))
            })
    }

    pub fn effective_n(&self, level: &FineLevel) -> Result<f64> {
        let series = self.series(level.species, level.l, level.j)?;
        let n = f64::from(level.n);
        Ok(n - series.defect(n))
    }

    /// Energy below the ionization limit, in GHz (negative).
    pub fn level_energy(&self, level: &FineLevel) -> Result<f64> {
        let nstar = self.effective_n(level)?;
        Ok(-level.species.rydberg_ghz() / (nstar * nstar))
    }

    /// Transition frequency `E(to) − E(from)` in MHz.
    pub fn transition_mhz(&self, from: &FineLevel, to: &FineLevel) -> Result<f64> {
        Ok((self.level_energy(to)? - self.level_energy(from)?) * MHZ_PER_GHZ)
    }

    /// Energy defect δ/2π in MHz of `a b → α β`.
    pub fn pair_defect(
        &self,
        a: &FineLevel,
        b: &FineLevel,
        alpha: &FineLevel,
        beta: &FineLevel,
    ) -> Result<f64> {
        Ok(self.transition_mhz(a, alpha)? + self.transition_mhz(b, beta)?)
    }

    pub fn lifetime(&self, level: &FineLevel) -> Result<f64> {
        self.lifetimes
            .get(level)
            .map(|e| e.lifetime_us)
            .ok_or_else(|| Error::DataNotFound(format!("lifetime of {level}")))
    }
}

fn parse_defect_line(fields: &[&str]) -> std::result::Result<QuantumDefectSeries, String> {
    if fields.len() < 4 {
        return Err(format!(
            "expected `species l j d0 [d2 ...] source`, got {} fields",
            fields.len()
        ));
    }
    let l: u32 = fields[1]
        .parse()
        .map_err(|_| format!("bad l {:?}", fields[1]))?;
    let j: HalfInt = fields[2].parse().map_err(|e: Error| e.to_string())?;
    if j.twice() != 2 * l as i32 + 1 && j.twice() != 2 * l as i32 - 1 {
        return Err(format!("j = {j} is not l ± 1/2"));
    }
    let (source, numbers) = match fields[3..].split_last() {
        Some((last, rest)) if last.parse::<f64>().is_err() => (last.to_string(), rest),
        _ => (String::new(), &fields[3..]),
    };
    let coefficients = numbers
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| format!("bad coefficient {s:?}"))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if coefficients.is_empty() {
        return Err("no coefficients".into());
    }
    if coefficients.iter().any(|c| !c.is_finite()) {
        return Err("non-finite coefficient".into());
    }
    Ok(QuantumDefectSeries {
        species: fields[0].to_string(),
        l,
        j,
        coefficients,
        source,
    })
}

fn parse_lifetime_line(fields: &[&str]) -> std::result::Result<LifetimeEntry, String> {
    if fields.len() < 5 {
        return Err("expected `species n l j tau_us [source]`".into());
    }
    let species: Species = fields[0].parse().map_err(|e: Error| e.to_string())?;
    let n: u32 = fields[1]
        .parse()
        .map_err(|_| format!("bad n {:?}", fields[1]))?;
    let l: u32 = fields[2]
        .parse()
        .map_err(|_| format!("bad l {:?}", fields[2]))?;
    let j: HalfInt = fields[3].parse().map_err(|e: Error| e.to_string())?;
    let level = FineLevel::new(species, n, l, j).map_err(|e| e.to_string())?;
    let tau: f64 = fields[4]
        .parse()
        .map_err(|_| format!("bad lifetime {:?}", fields[4]))?;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(format!("lifetime must be positive, got {tau}"));
    }
    Ok(LifetimeEntry {
        level,
        lifetime_us: tau,
        source: fields.get(5).map(|s| s.to_string()).unwrap_or_default(),
    })
}
