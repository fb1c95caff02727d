//! JSON and CSV formats, written atomically.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::accelerant::{Accelerant, Potential};
use crate::direct::FundamentalSolutionSample;
use crate::error::{Error, Result};
use crate::numerics::{Grid, MatrixFunction};
use crate::pseudo_exp::{validate_triple, AdmissibleTriple};
use crate::{CMat, C64};

/// Matrix as rows of `[re, im]` pairs.
pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMat) -> JsonMatrix {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn matrix_from_json(rows: &JsonMatrix) -> Result<CMat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse("ragged or empty matrix".into()));
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Accelerant,
    Potential,
}

/// `{"kind", "r", "T", "n", "samples"}` with one matrix per node.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampledFile {
    pub kind: KernelKind,
    pub r: usize,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub n: usize,
    pub samples: Vec<JsonMatrix>,
}

impl SampledFile {
    fn of(kind: KernelKind, grid: &Grid, r: usize, samples: &[CMat]) -> Self {
        SampledFile { kind, r, t_end: grid.t_end(), n: grid.n(), samples: samples.iter().map(matrix_to_json).collect() }
    }

    pub fn from_accelerant(k: &Accelerant) -> Self {
        Self::of(KernelKind::Accelerant, k.grid(), k.r(), k.samples())
    }

    pub fn from_potential(v: &Potential) -> Self {
        Self::of(KernelKind::Potential, v.grid(), v.r(), v.samples())
    }

    fn decode(&self) -> Result<(Grid, Vec<CMat>)> {
        let grid = Grid::new(self.t_end, self.n)?;
        if self.samples.len() != grid.len() {
            return Err(Error::Parse(format!("expected {} samples, found {}", grid.len(), self.samples.len())));
        }
        let samples = self.samples.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
        if samples.iter().any(|m| m.shape() != (self.r, self.r)) {
            return Err(Error::Parse(format!("samples must be {0}x{0}", self.r)));
        }
        Ok((grid, samples))
    }

    pub fn to_accelerant(&self) -> Result<Accelerant> {
        let (grid, samples) = self.decode()?;
        Accelerant::new(grid, samples)
    }

    pub fn to_potential(&self) -> Result<Potential> {
        let (grid, samples) = self.decode()?;
        Potential::new(grid, samples)
    }
}

/// `{"nn", "r", "B", "Phi1", "Phi2"}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TripleFile {
    pub nn: usize,
    pub r: usize,
    #[serde(rename = "B")]
    pub b: JsonMatrix,
    #[serde(rename = "Phi1")]
    pub phi1: JsonMatrix,
    #[serde(rename = "Phi2")]
    pub phi2: JsonMatrix,
}

impl TripleFile {
    pub fn from_triple(t: &AdmissibleTriple) -> Self {
        TripleFile {
            nn: t.nn(),
            r: t.r(),
            b: matrix_to_json(t.b()),
            phi1: matrix_to_json(t.phi1()),
            phi2: matrix_to_json(t.phi2()),
        }
    }

    pub fn to_triple(&self) -> Result<AdmissibleTriple> {
        let t = validate_triple(matrix_from_json(&self.b)?, matrix_from_json(&self.phi1)?, matrix_from_json(&self.phi2)?)?;
        if t.nn() != self.nn || t.r() != self.r {
            return Err(Error::Parse("declared nn or r disagrees with the matrices".into()));
        }
        Ok(t)
    }
}

/// Write through a sibling temporary file and rename into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Parse(format!("not a file path: {}", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    atomic_write(path, s.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn read_sampled(path: &Path) -> Result<SampledFile> {
    read_json(path)
}

pub fn read_accelerant(path: &Path) -> Result<Accelerant> {
    let f = read_sampled(path)?;
    if f.kind != KernelKind::Accelerant {
        return Err(Error::Parse(format!("{} holds a potential, not an accelerant", path.display())));
    }
    f.to_accelerant()
}

pub fn read_potential(path: &Path) -> Result<Potential> {
    let f = read_sampled(path)?;
    if f.kind != KernelKind::Potential {
        return Err(Error::Parse(format!("{} holds an accelerant, not a potential", path.display())));
    }
    f.to_potential()
}

pub fn write_accelerant(path: &Path, k: &Accelerant) -> Result<()> {
    write_json(path, &SampledFile::from_accelerant(k))
}

pub fn write_potential(path: &Path, v: &Potential) -> Result<()> {
    write_json(path, &SampledFile::from_potential(v))
}

pub fn read_triple(path: &Path) -> Result<AdmissibleTriple> {
    read_json::<TripleFile>(path)?.to_triple()
}

pub fn write_triple(path: &Path, t: &AdmissibleTriple) -> Result<()> {
    write_json(path, &TripleFile::from_triple(t))
}

/// Twelve significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

/// `re_im` with six decimals, e.g. `1.000000_-0.500000`.
pub fn lambda_tag(z: C64) -> String {
    format!("{:.6}_{:.6}", z.re, z.im)
}

/// Columns `tau`, then `re`/`im` of every entry in row-major order.
pub fn matrix_samples_csv(label: &str, grid: &Grid, samples: &[CMat]) -> String {
    let (rows, cols) = samples.first().map_or((0, 0), |m| m.shape());
    let mut out = String::from("tau");
    for i in 0..rows {
        for j in 0..cols {
            out.push_str(&format!(",{label}{i}{j}_re,{label}{i}{j}_im"));
        }
    }
    out.push('\n');
    for (node, m) in samples.iter().enumerate() {
        out.push_str(&fmt_float(grid.node(node)));
        for i in 0..rows {
            for j in 0..cols {
                out.push(',');
                out.push_str(&fmt_float(m[(i, j)].re));
                out.push(',');
                out.push_str(&fmt_float(m[(i, j)].im));
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_function_csv(path: &Path, label: &str, f: &MatrixFunction) -> Result<()> {
    atomic_write(path, matrix_samples_csv(label, f.grid(), f.samples()).as_bytes())
}

/// `u(tau, lambda)` with the 2r x 2r block matrix flattened row-major.
pub fn write_fundamental_csv(path: &Path, u: &FundamentalSolutionSample) -> Result<()> {
    atomic_write(path, matrix_samples_csv("u", u.grid(), u.samples()).as_bytes())
}

/// `"a+bi"`, `"a-bi"`, `"a"`, `"bi"`, `"i"` with decimal floats.
pub fn parse_complex(s: &str) -> Result<C64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse(format!("bad complex literal `{s}`"));
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|x| C64::new(x, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is not an exponent sign or the leading sign
    let bytes = body.as_bytes();
    let mut split = None;
    for p in (1..bytes.len()).rev() {
        if (bytes[p] == b'+' || bytes[p] == b'-') && !matches!(bytes[p - 1], b'e' | b'E') {
            split = Some(p);
            break;
        }
    }
    let imag = |x: &str| -> Result<f64> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => x.parse::<f64>().map_err(|_| bad()),
        }
    };
    match split {
        Some(p) => Ok(C64::new(body[..p].parse::<f64>().map_err(|_| bad())?, imag(&body[p..])?)),
        None => Ok(C64::new(0.0, imag(body)?)),
    }
}

pub fn parse_lambda_list(s: &str) -> Result<Vec<C64>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(parse_complex).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::scalar;

    #[test]
    fn complex_literals() {
        let cases = [
            ("1+2i", C64::new(1.0, 2.0)),
            ("1-0.5i", C64::new(1.0, -0.5)),
            ("-3", C64::new(-3.0, 0.0)),
            ("i", C64::new(0.0, 1.0)),
            ("-i", C64::new(0.0, -1.0)),
            ("2.5i", C64::new(0.0, 2.5)),
            ("1e-3+1e2i", C64::new(1e-3, 100.0)),
            ("-1.5e+1-i", C64::new(-15.0, -1.0)),
        ];
        for (s, z) in cases {
            assert_eq!(parse_complex(s).unwrap(), z, "{s}");
        }
        assert!(parse_complex("1+").is_err());
        assert!(parse_complex("abc").is_err());
        assert_eq!(parse_lambda_list("0,1,i").unwrap().len(), 3);
    }

    #[test]
    fn tags_and_digits() {
        assert_eq!(lambda_tag(C64::new(1.0, -0.5)), "1.000000_-0.500000");
        assert_eq!(fmt_float(1.0 / 3.0), "3.33333333333e-1");
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new(2.0, 10).unwrap();
        let k = Accelerant::from_fn(&g, |t| scalar(C64::new(t, -t * t))).unwrap();
        let p = dir.path().join("k.json");
        write_accelerant(&p, &k).unwrap();
        assert_eq!(read_accelerant(&p).unwrap(), k);
        assert!(read_potential(&p).is_err());
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.contains("\"kind\": \"accelerant\"") && text.contains("\"T\": 2.0"));
        let t = crate::pseudo_exp::random_triple(2, 1, 1).unwrap();
        let tp = dir.path().join("t.json");
        write_triple(&tp, &t).unwrap();
        let back = read_triple(&tp).unwrap();
        assert!(crate::numerics::max_abs_diff(back.b(), t.b()) == 0.0);
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 2, "temporary files left behind: {names:?}");
    }
}
