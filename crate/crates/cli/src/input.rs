//! Input mini-language and the plain-text matrix format.

use std::fs;
use std::path::Path;

use ghz_distill_core::states::{self, random_feasible_perturbation, DensityMatrix, NoiseSpec};
use ghz_distill_core::unitaries::{u1, u2, u3, TwoQubitUnitary};
use ghz_distill_core::{Complex64, ComplexMatrix};

use crate::error::CliError;

pub const DEFAULT_COHERENT_INDICES: [usize; 2] = [1, 6];

#[derive(Debug, Clone, PartialEq)]
pub enum InputSpec {
    Ghz,
    White(f64),
    Coherent { eps: f64, indices: Vec<usize> },
    Custom { path: String, eps: f64 },
    Random { eps: f64 },
    Mix { w_ghz: f64, w_id: f64 },
}

fn number(s: &str, what: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| CliError::Config(format!("{what}: cannot parse '{s}' as a number")))
}

fn indices(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Config(format!("coherent index '{t}' is not an integer")))
        })
        .collect()
}

impl InputSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let need = || rest.ok_or_else(|| CliError::Config(format!("input '{s}' is missing parameters")));
        match head {
            "ghz" if rest.is_none() => Ok(Self::Ghz),
            "white" => Ok(Self::White(number(need()?, "white")?)),
            "random" => Ok(Self::Random { eps: number(need()?, "random")? }),
            "coherent" => {
                let rest = need()?;
                match rest.split_once(':') {
                    Some((e, idx)) => Ok(Self::Coherent { eps: number(e, "coherent")?, indices: indices(idx)? }),
                    None => Ok(Self::Coherent {
                        eps: number(rest, "coherent")?,
                        indices: DEFAULT_COHERENT_INDICES.to_vec(),
                    }),
                }
            }
            "custom" => {
                let (path, e) = need()?
                    .rsplit_once(':')
                    .ok_or_else(|| CliError::Config(format!("input '{s}' needs custom:<path>:<eps>")))?;
                Ok(Self::Custom { path: path.to_string(), eps: number(e, "custom")? })
            }
            "mix" => {
                let (a, b) = need()?
                    .split_once(':')
                    .ok_or_else(|| CliError::Config(format!("input '{s}' needs mix:<w_ghz>:<w_id>")))?;
                Ok(Self::Mix { w_ghz: number(a, "mix")?, w_id: number(b, "mix")? })
            }
            _ => Err(CliError::Config(format!("unknown input '{s}'"))),
        }
    }

    pub fn build(&self, seed: u64) -> Result<DensityMatrix, CliError> {
        let rho = match self {
            Self::Ghz => states::ghz_density(),
            Self::White(e) => states::white_noise_input(*e)?,
            Self::Coherent { eps, indices } => {
                let comps: Vec<(usize, Complex64)> = indices.iter().map(|&i| (i, Complex64::new(1.0, 0.0))).collect();
                states::coherent_input(*eps, &comps)?
            }
            Self::Custom { path, eps } => {
                let m = read_matrix(Path::new(path), 8)?;
                states::perturbed_input(&NoiseSpec::Custom { epsilon: *eps, m })?
            }
            Self::Random { eps } => states::perturbed_input(&NoiseSpec::Custom {
                epsilon: *eps,
                m: random_feasible_perturbation(seed, 1.0),
            })?,
            Self::Mix { w_ghz, w_id } => states::ghz_identity_mixture(*w_ghz, *w_id)?,
        };
        Ok(rho)
    }
}

pub fn parse_unitary(s: &str) -> Result<TwoQubitUnitary, CliError> {
    match s {
        "u1" => Ok(u1()),
        "u2" => Ok(u2()),
        _ => {
            if let Some(n) = s.strip_prefix("u3:") {
                let n = n
                    .parse::<i64>()
                    .map_err(|_| CliError::Config(format!("u3 index '{n}' is not an integer")))?;
                return Ok(u3(n));
            }
            let m = read_matrix(Path::new(s), 4)?;
            Ok(TwoQubitUnitary::new(m, s)?)
        }
    }
}

/// Parses one entry such as `0.5`, `-1e-3i`, `0.25-0.5i`, `i` or `-i`.
pub fn parse_complex(tok: &str) -> Option<Complex64> {
    let t = tok.trim();
    if t.is_empty() {
        return None;
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return t.parse::<f64>().ok().map(|re| Complex64::new(re, 0.0));
    };
    // split at the last sign that is not an exponent sign and not leading
    let bytes = body.as_bytes();
    let mut split = None;
    for k in (1..bytes.len()).rev() {
        if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
            split = Some(k);
            break;
        }
    }
    let imag = |s: &str| -> Option<f64> {
        match s {
            "" | "+" => Some(1.0),
            "-" => Some(-1.0),
            _ => s.parse::<f64>().ok(),
        }
    };
    match split {
        Some(k) => Some(Complex64::new(body[..k].parse::<f64>().ok()?, imag(&body[k..])?)),
        None => Some(Complex64::new(0.0, imag(body)?)),
    }
}

pub fn parse_matrix(text: &str, dim: usize) -> Result<ComplexMatrix, CliError> {
    let mut data = Vec::with_capacity(dim * dim);
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let before = data.len();
        for tok in line.split_whitespace() {
            let z = parse_complex(tok)
                .ok_or_else(|| CliError::Config(format!("line {}: bad entry '{tok}'", lineno + 1)))?;
            data.push(z);
        }
        if data.len() - before != dim {
            return Err(CliError::Config(format!(
                "line {}: expected {dim} entries, found {}",
                lineno + 1,
                data.len() - before
            )));
        }
        rows += 1;
    }
    if rows != dim {
        return Err(CliError::Config(format!("expected {dim} rows, found {rows}")));
    }
    Ok(ComplexMatrix::from_row_major(dim, dim, data)?)
}

pub fn read_matrix(path: &Path, dim: usize) -> Result<ComplexMatrix, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read matrix file {}: {e}", path.display())))?;
    parse_matrix(&text, dim)
}

pub fn format_matrix(m: &ComplexMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m
            .row(i)
            .iter()
            .map(|z| format!("{:.16e}{:+.16e}i", z.re, z.im))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}
