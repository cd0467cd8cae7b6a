//! JSON and CSV documents.
//!
//! Matrices are `{"dim": n, "re": [[..]], "im": [[..]]}` in row-major
//! order (`im` may be omitted for real matrices). Non-square matrices such as
//! Kraus operators use `{"rows": r, "cols": c, "re": .., "im": ..}`. Floats
//! are written in fixed scientific notation with 17 significant digits.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use serde_json::Value;

use crate::channels::{affine_from_kraus, ChannelOutput, ChannelSpec, KrausBlock, DEFAULT_RARITY_BOUND};
use crate::divergences::IntensityVector;
use crate::error::{Error, Result};
use crate::estimation::{LinearFamily, ParamFamily};
use crate::psd::{validate_psd, CMatrix, HermitianMatrix, Tolerances};
use crate::state::{intensity_from_density, DensityOperator, IntensityOperator};

fn fmt_err(e: impl std::fmt::Display) -> Error {
    Error::Format(e.to_string())
}

/// `{:.16e}`: 17 significant digits, locale independent.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// JSON formatter writing every float as `{:.16e}`.
pub struct SciFormatter;

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            write!(writer, "\"{}\"", format_f64(value))
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes `value` as compact JSON using [`SciFormatter`].
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value.serialize(&mut ser).map_err(fmt_err)?;
    String::from_utf8(buf).map_err(fmt_err)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RectMatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VectorDoc {
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Option<Vec<f64>>,
}

fn complex_matrix(rows: usize, cols: usize, re: &[Vec<f64>], im: Option<&Vec<Vec<f64>>>) -> Result<CMatrix> {
    let shape_ok = |m: &[Vec<f64>]| m.len() == rows && m.iter().all(|r| r.len() == cols);
    if !shape_ok(re) {
        return Err(Error::Format(format!("\"re\" is not {rows}x{cols}")));
    }
    if let Some(im) = im {
        if !shape_ok(im) {
            return Err(Error::Format(format!("\"im\" is not {rows}x{cols}")));
        }
    }
    Ok(CMatrix::from_fn(rows, cols, |j, k| {
        Complex64::new(re[j][k], im.map_or(0.0, |m| m[j][k]))
    }))
}

impl MatrixDoc {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |f: fn(&Complex64) -> f64| (0..m.nrows()).map(|j| (0..m.ncols()).map(|k| f(&m[(j, k)])).collect()).collect();
        MatrixDoc {
            dim: m.nrows(),
            re: rows(|z| z.re),
            im: Some(rows(|z| z.im)),
        }
    }

    pub fn to_cmatrix(&self) -> Result<CMatrix> {
        complex_matrix(self.dim, self.dim, &self.re, self.im.as_ref())
    }

    pub fn to_hermitian(&self, tol: &Tolerances) -> Result<HermitianMatrix> {
        HermitianMatrix::with_tolerance(self.to_cmatrix()?, tol.herm)
    }

    pub fn to_intensity(&self, tol: &Tolerances) -> Result<IntensityOperator> {
        Ok(IntensityOperator::new(validate_psd(&self.to_hermitian(tol)?, tol.psd)?))
    }
}

impl RectMatrixDoc {
    pub fn to_cmatrix(&self) -> Result<CMatrix> {
        complex_matrix(self.rows, self.cols, &self.re, self.im.as_ref())
    }
}

impl VectorDoc {
    pub fn to_cvector(&self) -> Result<DVector<Complex64>> {
        if let Some(im) = &self.im {
            if im.len() != self.re.len() {
                return Err(Error::LengthMismatch(self.re.len(), im.len()));
            }
        }
        Ok(DVector::from_iterator(
            self.re.len(),
            self.re.iter().enumerate().map(|(j, &r)| Complex64::new(r, self.im.as_ref().map_or(0.0, |v| v[j]))),
        ))
    }
}

/// An intensity operator given directly or as `{"N": x, "tau1": <matrix>}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntensityDoc {
    Scaled {
        #[serde(rename = "N")]
        n: f64,
        tau1: MatrixDoc,
    },
    Matrix(MatrixDoc),
}

impl IntensityDoc {
    pub fn to_intensity(&self, tol: &Tolerances) -> Result<IntensityOperator> {
        match self {
            IntensityDoc::Matrix(m) => m.to_intensity(tol),
            IntensityDoc::Scaled { n, tau1 } => {
                let psd = validate_psd(&tau1.to_hermitian(tol)?, tol.psd)?;
                intensity_from_density(&DensityOperator::new(psd)?, *n)
            }
        }
    }
}

/// Parses a density operator document.
pub fn parse_density(text: &str, tol: &Tolerances) -> Result<DensityOperator> {
    let doc: MatrixDoc = serde_json::from_str(text).map_err(fmt_err)?;
    DensityOperator::new(validate_psd(&doc.to_hermitian(tol)?, tol.psd)?)
}

pub fn parse_hermitian(text: &str, tol: &Tolerances) -> Result<HermitianMatrix> {
    let doc: MatrixDoc = serde_json::from_str(text).map_err(fmt_err)?;
    doc.to_hermitian(tol)
}

pub fn parse_intensity(text: &str, tol: &Tolerances) -> Result<IntensityOperator> {
    let doc: IntensityDoc = serde_json::from_str(text).map_err(fmt_err)?;
    doc.to_intensity(tol)
}

/// Parses intensities from an inline list `0.5,1.5`, a JSON array, or
/// `{"lambda": [...]}`.
pub fn parse_intensity_vector(text: &str) -> Result<IntensityVector> {
    let t = text.trim();
    let values: Vec<f64> = if t.starts_with('[') || t.starts_with('{') {
        match serde_json::from_str::<Value>(t).map_err(fmt_err)? {
            Value::Object(mut o) => {
                let v = o.remove("lambda").ok_or_else(|| Error::Format("missing \"lambda\"".into()))?;
                serde_json::from_value(v).map_err(fmt_err)?
            }
            v => serde_json::from_value(v).map_err(fmt_err)?,
        }
    } else {
        parse_list(t)?
    };
    IntensityVector::new(values)
}

/// Parses a comma-separated list of reals such as `1e2,1e3`.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| Error::Format(format!("bad number {s:?}: {e}"))))
        .collect()
}

#[derive(Debug, Clone, Deserialize)]
pub struct KrausBlockDoc {
    #[serde(default)]
    pub a10: Option<VectorDoc>,
    #[serde(default)]
    pub a11: Option<RectMatrixDoc>,
}

fn default_rarity() -> f64 {
    DEFAULT_RARITY_BOUND
}

/// Channel document tagged by `"kind"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelDoc {
    Unitary { u: MatrixDoc },
    Povm { elements: Vec<MatrixDoc> },
    Loss { eta: Vec<f64> },
    Background { gamma: IntensityDoc },
    Compose { gamma: IntensityDoc },
    Marginalize { keep: Vec<usize>, input_dim: usize },
    Affine { offset: IntensityDoc, kraus: Vec<RectMatrixDoc> },
    Kraus {
        blocks: Vec<KrausBlockDoc>,
        tau0_weight: f64,
        #[serde(default = "default_rarity")]
        rarity_bound: f64,
    },
}

impl ChannelDoc {
    pub fn to_spec(&self, tol: &Tolerances) -> Result<ChannelSpec> {
        match self {
            ChannelDoc::Unitary { u } => ChannelSpec::unitary(u.to_cmatrix()?),
            ChannelDoc::Povm { elements } => {
                ChannelSpec::povm(elements.iter().map(|e| e.to_hermitian(tol)).collect::<Result<_>>()?)
            }
            ChannelDoc::Loss { eta } => ChannelSpec::loss(eta.clone()),
            ChannelDoc::Background { gamma } => Ok(ChannelSpec::background(gamma.to_intensity(tol)?)),
            ChannelDoc::Compose { gamma } => Ok(ChannelSpec::compose(gamma.to_intensity(tol)?)),
            ChannelDoc::Marginalize { keep, input_dim } => ChannelSpec::marginalize(keep.clone(), *input_dim),
            ChannelDoc::Affine { offset, kraus } => ChannelSpec::affine(
                offset.to_intensity(tol)?,
                kraus.iter().map(|k| k.to_cmatrix()).collect::<Result<_>>()?,
            ),
            ChannelDoc::Kraus {
                blocks,
                tau0_weight,
                rarity_bound,
            } => {
                let blocks = blocks
                    .iter()
                    .map(|b| {
                        Ok(KrausBlock {
                            a10: b.a10.as_ref().map(|v| v.to_cvector()).transpose()?,
                            a11: b.a11.as_ref().map(|m| m.to_cmatrix()).transpose()?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                affine_from_kraus(&blocks, *tau0_weight, *rarity_bound)
            }
        }
    }
}

pub fn parse_channel(text: &str, tol: &Tolerances) -> Result<ChannelSpec> {
    let doc: ChannelDoc = serde_json::from_str(text).map_err(fmt_err)?;
    doc.to_spec(tol)
}

#[derive(Debug, Clone, Deserialize)]
pub struct GridPointDoc {
    pub theta: f64,
    pub gamma: IntensityDoc,
}

fn default_n0() -> f64 {
    1.0
}

/// Parametric family document tagged by `"kind"`.
///
/// * `imaging`: the two-source imaging family, parameter `θ`.
/// * `linear`: `Γ(θ) = base + Σ θ_μ directions_μ`.
/// * `grid`: one-parameter family given by explicit operators at grid
///   points; derivatives use the three-point formula on the grid.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyDoc {
    Imaging {
        #[serde(default = "default_n0")]
        n0: f64,
        #[serde(default)]
        gamma_re: f64,
        #[serde(default)]
        gamma_im: f64,
        #[serde(default)]
        delta: Option<f64>,
    },
    Linear { base: MatrixDoc, directions: Vec<MatrixDoc> },
    Grid { points: Vec<GridPointDoc> },
}

/// Operators sampled on a strictly ascending `θ` grid.
#[derive(Debug, Clone)]
pub struct GridFamily {
    thetas: Vec<f64>,
    gammas: Vec<IntensityOperator>,
}

impl GridFamily {
    pub fn new(points: Vec<(f64, IntensityOperator)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidConfig("a grid family needs at least two points".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidConfig("grid θ values must be strictly ascending".into()));
        }
        let d = points[0].1.dim();
        if let Some(p) = points.iter().find(|p| p.1.dim() != d) {
            return Err(Error::DimensionMismatch(d, p.1.dim()));
        }
        let (thetas, gammas) = points.into_iter().unzip();
        Ok(GridFamily { thetas, gammas })
    }

    fn index_of(&self, theta: f64) -> Result<usize> {
        let scale = self.thetas.iter().fold(1.0_f64, |m, t| m.max(t.abs()));
        self.thetas
            .iter()
            .position(|t| (t - theta).abs() <= 1e-12 * scale)
            .ok_or_else(|| Error::InvalidConfig(format!("θ = {theta} is not a grid point")))
    }
}

impl ParamFamily for GridFamily {
    fn q(&self) -> usize {
        1
    }

    fn gamma(&self, theta: &[f64]) -> Result<IntensityOperator> {
        Ok(self.gammas[self.index_of(theta[0])?].clone())
    }

    fn dgamma(&self, theta: &[f64], mu: usize) -> Option<Result<HermitianMatrix>> {
        if mu != 0 {
            return Some(Err(Error::ParameterIndex { index: mu, q: 1 }));
        }
        Some(self.index_of(theta[0]).map(|i| {
            let n = self.thetas.len();
            let m = |k: usize| self.gammas[k].matrix().as_matrix();
            let t = &self.thetas;
            let d = if i == 0 {
                (m(1) - m(0)) / Complex64::new(t[1] - t[0], 0.0)
            } else if i == n - 1 {
                (m(n - 1) - m(n - 2)) / Complex64::new(t[n - 1] - t[n - 2], 0.0)
            } else {
                // second-order weights for uneven spacing
                let (h0, h1) = (t[i] - t[i - 1], t[i + 1] - t[i]);
                let w = |x: f64| Complex64::new(x, 0.0);
                m(i - 1) * w(-h1 / (h0 * (h0 + h1))) + m(i) * w((h1 - h0) / (h0 * h1)) + m(i + 1) * w(h0 / (h1 * (h0 + h1)))
            };
            HermitianMatrix::symmetrized(d)
        }))
    }
}

/// A parsed family ready for evaluation.
pub enum Family {
    Imaging { n0: f64, gamma: Complex64, delta: f64 },
    Linear(LinearFamily),
    Grid(GridFamily),
}

impl FamilyDoc {
    pub fn to_family(&self, tol: &Tolerances) -> Result<Family> {
        Ok(match self {
            FamilyDoc::Imaging {
                n0,
                gamma_re,
                gamma_im,
                delta,
            } => Family::Imaging {
                n0: *n0,
                gamma: Complex64::new(*gamma_re, *gamma_im),
                delta: delta.unwrap_or(crate::estimation::DEFAULT_DELTA_REG),
            },
            FamilyDoc::Linear { base, directions } => Family::Linear(LinearFamily {
                base: base.to_hermitian(tol)?,
                directions: directions.iter().map(|d| d.to_hermitian(tol)).collect::<Result<_>>()?,
            }),
            FamilyDoc::Grid { points } => Family::Grid(GridFamily::new(
                points
                    .iter()
                    .map(|p| Ok((p.theta, p.gamma.to_intensity(tol)?)))
                    .collect::<Result<_>>()?,
            )?),
        })
    }
}

pub fn parse_family(text: &str, tol: &Tolerances) -> Result<Family> {
    let doc: FamilyDoc = serde_json::from_str(text).map_err(fmt_err)?;
    doc.to_family(tol)
}

/// JSON value of a channel output: an operator document or `{"lambda": [..]}`.
pub fn channel_output_json(out: &ChannelOutput) -> Result<String> {
    match out {
        ChannelOutput::Operator(g) => to_json(&MatrixDoc::from_matrix(g.matrix().as_matrix())),
        ChannelOutput::Intensities(l) => to_json(&serde_json::json!({ "lambda": l })),
    }
}

/// Real matrix as nested rows.
pub fn real_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|j| (0..m.ncols()).map(|k| m[(j, k)]).collect()).collect()
}

/// Writes CSV with a header and already formatted rows.
pub fn write_csv<W: Write>(mut w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        writeln!(w, "{}", r.join(","))?;
    }
    Ok(())
}
