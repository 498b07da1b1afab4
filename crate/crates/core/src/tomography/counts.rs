use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilterEnsemble;
use crate::quantum::{ComplexMatrix, DensityMatrix, Side, C64};

/// Single-qubit polarization labels: the eigenstates of Z, X and Y.
pub const LABELS: [char; 6] = ['H', 'V', 'D', 'A', 'R', 'L'];

/// Process-tomography inputs.
pub const PROCESS_INPUTS: [char; 4] = ['H', 'V', 'D', 'R'];

pub fn ket(label: char) -> Result<[C64; 2]> {
    let s = FRAC_1_SQRT_2;
    let k = match label {
        'H' => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        'V' => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        'D' => [C64::new(s, 0.0), C64::new(s, 0.0)],
        'A' => [C64::new(s, 0.0), C64::new(-s, 0.0)],
        'R' => [C64::new(s, 0.0), C64::new(0.0, s)],
        'L' => [C64::new(s, 0.0), C64::new(0.0, -s)],
        _ => return Err(Error::Parse(format!("unknown polarization label {label:?}"))),
    };
    Ok(k)
}

/// Projector onto a product of labelled polarization states, e.g. `"HD"`.
pub fn projector(label: &str) -> Result<ComplexMatrix> {
    let mut chars = label.chars();
    let first = chars.next().ok_or_else(|| Error::Parse("empty projector label".into()))?;
    let mut p = ComplexMatrix::projector(&ket(first)?);
    for c in chars {
        p = p.tensor(&ComplexMatrix::projector(&ket(c)?))?;
    }
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Port {
    /// No filter in the path.
    #[serde(rename = "-")]
    Direct,
    A1,
    A2,
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Port::Direct => "-",
            Port::A1 => "A1",
            Port::A2 => "A2",
        })
    }
}

impl FromStr for Port {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "-" => Ok(Port::Direct),
            "A1" => Ok(Port::A1),
            "A2" => Ok(Port::A2),
            _ => Err(Error::Parse(format!("unknown port {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub prep: String,
    pub projector: String,
    pub port: Port,
    /// Integer-valued in Poisson mode; the exact mean in noiseless mode.
    pub count: f64,
    #[serde(rename = "N")]
    pub n: u64,
}

/// Counts per (preparation, projector, output port).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CountsRecord {
    pub rows: Vec<CountRow>,
}

impl CountsRecord {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let rows = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<CountRow>, _>>()
            .map_err(|e| Error::Parse(e.to_string()))?;
        for r in &rows {
            if !(r.count.is_finite() && r.count >= 0.0) || r.n == 0 {
                return Err(Error::Parse(format!("invalid count row {r:?}")));
            }
        }
        Ok(Self { rows })
    }

    /// Counts divided by N, summed over `port` and the given projectors for
    /// one preparation.
    pub fn frequency(&self, prep: &str, projectors: &[&str], port: Port) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.prep == prep && r.port == port && projectors.contains(&r.projector.as_str()))
            .map(|r| r.count / r.n as f64)
            .sum()
    }

    /// Fraction of input `prep` leaving through `port`, from the H/V basis.
    pub fn branch_fraction(&self, prep: &str, port: Port) -> f64 {
        self.frequency(prep, &["H", "V"], port)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Noise {
    Noiseless,
    Poisson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Setting {
    pub prep: String,
    pub projector: String,
}

/// State-tomography projector sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateDesign {
    /// {H, V, D, R}⊗{H, V, D, R}.
    Minimal,
    /// All six Pauli eigenstates on each qubit.
    Overcomplete,
}

pub fn state_settings(design: StateDesign) -> Vec<Setting> {
    let labels: &[char] = match design {
        StateDesign::Minimal => &PROCESS_INPUTS,
        StateDesign::Overcomplete => &LABELS,
    };
    let mut out = Vec::new();
    for &a in labels {
        for &b in labels {
            out.push(Setting { prep: "rho".into(), projector: format!("{a}{b}") });
        }
    }
    out
}

/// Inputs {H, V, D, R} measured in all three Pauli bases.
pub fn process_settings() -> Vec<Setting> {
    let mut out = Vec::new();
    for &p in &PROCESS_INPUTS {
        for &m in &LABELS {
            out.push(Setting { prep: p.to_string(), projector: m.to_string() });
        }
    }
    out
}

/// What is being measured.
#[derive(Clone, Copy, Debug)]
pub enum CountSource<'a> {
    State(&'a DensityMatrix),
    /// One side of a filter ensemble; preparations are single-qubit labels.
    Filter { ensemble: &'a FilterEnsemble, side: Side },
}

fn draw<R: Rng + ?Sized>(mean: f64, noise: Noise, rng: &mut R) -> f64 {
    match noise {
        Noise::Noiseless => mean,
        Noise::Poisson if mean <= 0.0 => 0.0,
        Noise::Poisson => Poisson::new(mean).expect("positive finite mean").sample(rng),
    }
}

/// Expected counts from the Born rule, optionally with Poisson noise.
pub fn simulate_counts<R: Rng + ?Sized>(
    source: CountSource<'_>,
    settings: &[Setting],
    n_per_setting: u64,
    noise: Noise,
    rng: &mut R,
) -> Result<CountsRecord> {
    if n_per_setting == 0 {
        return Err(Error::OutOfRange { name: "N", value: 0.0, lo: 1.0, hi: f64::INFINITY });
    }
    let n = n_per_setting as f64;
    let mut rows = Vec::new();
    for s in settings {
        let p = projector(&s.projector)?;
        match source {
            CountSource::State(rho) => {
                if p.dim() != rho.dim() {
                    return Err(Error::DimensionMismatch { expected: format!("{}", rho.dim()), got: format!("{}", p.dim()) });
                }
                let mean = n * (&p * rho.matrix()).trace().re.max(0.0);
                rows.push(CountRow {
                    prep: s.prep.clone(),
                    projector: s.projector.clone(),
                    port: Port::Direct,
                    count: draw(mean, noise, rng),
                    n: n_per_setting,
                });
            }
            CountSource::Filter { ensemble, side } => {
                let mut chars = s.prep.chars();
                let (Some(c), None) = (chars.next(), chars.next()) else {
                    return Err(Error::Parse(format!("process preparation must be one label, got {:?}", s.prep)));
                };
                let input = ComplexMatrix::projector(&ket(c)?);
                for (branch, port) in [(1, Port::A1), (2, Port::A2)] {
                    let out = ensemble.operator(side, branch).sandwich(&input);
                    let mean = n * (&p * &out).trace().re.max(0.0);
                    rows.push(CountRow {
                        prep: s.prep.clone(),
                        projector: s.projector.clone(),
                        port,
                        count: draw(mean, noise, rng),
                        n: n_per_setting,
                    });
                }
            }
        }
    }
    Ok(CountsRecord { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(1)
    }

    #[test]
    fn h_state_through_h_projector() {
        let rho = DensityMatrix::pure(&ket('H').unwrap()).unwrap();
        let s = [Setting { prep: "rho".into(), projector: "H".into() }];
        let c = simulate_counts(CountSource::State(&rho), &s, 1000, Noise::Noiseless, &mut rng()).unwrap();
        assert_eq!(c.rows[0].count, 1000.0);
    }

    #[test]
    fn dephasing_filter_on_diagonal_input() {
        let f = FilterEnsemble::from_diagonals(1.0, 0.0, 1.0, 1.0).unwrap();
        let s = [Setting { prep: "D".into(), projector: "H".into() }];
        let c = simulate_counts(CountSource::Filter { ensemble: &f, side: Side::A }, &s, 1000, Noise::Noiseless, &mut rng())
            .unwrap();
        let a1 = c.rows.iter().find(|r| r.port == Port::A1).unwrap();
        assert!((a1.count - 500.0).abs() < 1e-9);
    }

    #[test]
    fn poisson_concentration() {
        let rho = DensityMatrix::pure(&ket('H').unwrap()).unwrap();
        let s = [Setting { prep: "rho".into(), projector: "H".into() }];
        let mut r = rng();
        let inside = (0..1000)
            .filter(|_| {
                let c = simulate_counts(CountSource::State(&rho), &s, 1000, Noise::Poisson, &mut r).unwrap().rows[0].count;
                (900.0..=1100.0).contains(&c)
            })
            .count();
        assert!(inside >= 990);
    }

    #[test]
    fn csv_round_trip() {
        let f = FilterEnsemble::from_diagonals(0.7, 0.2, 0.12, 0.16).unwrap();
        let c = simulate_counts(CountSource::Filter { ensemble: &f, side: Side::A }, &process_settings(), 500, Noise::Poisson, &mut rng())
            .unwrap();
        let text = c.to_csv().unwrap();
        assert!(text.starts_with("prep,projector,port,count,N\n"));
        assert_eq!(CountsRecord::from_csv(&text).unwrap(), c);
    }

    #[test]
    fn design_sizes() {
        assert_eq!(state_settings(StateDesign::Minimal).len(), 16);
        assert_eq!(state_settings(StateDesign::Overcomplete).len(), 36);
        assert_eq!(process_settings().len(), 24);
        assert!(projector("X").is_err());
    }
}
