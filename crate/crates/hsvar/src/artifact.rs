//! Columnar posterior artifact and the omega-moment CSV.
//!
//! A posterior artifact is a single binary file holding every kept draw of a
//! chain in a fixed-width layout:
//!
//! ```text
//! bytes 0..8    magic "HSVARPA1"
//! bytes 8..16   header length L, little-endian u64
//! bytes 16..16+L JSON header (dimensions, provenance, resolved configs,
//!                and the record layout; see [`ArtifactHeader`])
//! rest          n_draws records, each record_len little-endian f64 values
//! ```
//!
//! The header is plain JSON so any language can inspect an artifact without
//! this crate, and the records are raw `f64` so draws round-trip bit for bit:
//! write -> read -> write reproduces the file byte-identically. Mixture
//! indicators are widened to `f64` to keep the record stream homogeneous.
//!
//! Latent volatility paths dominate the file size, so they are only stored
//! on request (`store_h`). An artifact written without them reads back with
//! *empty* paths rather than zero-filled ones: downstream summaries that need
//! the paths fail loudly instead of silently reporting constant volatility.

use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::GibbsConfig;
use crate::model::{
    HyperState, ModelConfig, PosteriorSample, PriorConfig, SampleMeta, StructuralState,
    SvEquationState,
};

/// First eight bytes of every artifact.
pub const ARTIFACT_MAGIC: [u8; 8] = *b"HSVARPA1";

/// Version stamped into, and required of, the JSON header.
pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

/// One named segment of a record, `len` consecutive `f64` values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    /// Segment name (`"b0"`, `"omega"`, ...).
    pub name: String,
    /// Number of values in the segment.
    pub len: usize,
}

/// JSON header of a posterior artifact.
///
/// Everything needed to interpret the records is spelled out here: problem
/// dimensions, chain provenance, the resolved model / prior / run
/// configuration, and the record layout itself. Timestamps deliberately do
/// not appear — they live in the run manifest, so artifact bytes depend only
/// on the draws and the configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactHeader {
    /// Layout version, currently 1.
    pub format_version: u32,
    /// Number of endogenous variables `N`.
    pub n_vars: usize,
    /// Number of regressors per equation, `N p + d`.
    pub n_regressors: usize,
    /// Length of the stored volatility paths; 0 when paths are not stored.
    pub t_eff: usize,
    /// Number of records in the file.
    pub n_draws: usize,
    /// Whether records carry the latent paths `h` and indicators `s`.
    pub includes_h: bool,
    /// Chain provenance (seed, chain id, burn-in, thinning).
    pub meta: SampleMeta,
    /// Lag order and stationarity flags the chain was run with.
    pub model: ModelConfig,
    /// Resolved prior hyperparameters.
    pub priors: PriorConfig,
    /// Resolved run-length settings of this chain.
    pub gibbs: GibbsConfig,
    /// Values per record; equals the sum of the field lengths.
    pub record_len: usize,
    /// Record layout, in storage order.
    pub fields: Vec<FieldSpec>,
}

impl ArtifactHeader {
    /// Number of deterministic regressors, `d = n_regressors - N p`.
    pub fn n_deterministic(&self) -> usize {
        self.n_regressors - self.n_vars * self.model.p
    }
}

/// Builds the version-1 record layout for the given dimensions.
fn record_layout(n: usize, k: usize, t_eff: usize, includes_h: bool) -> Vec<FieldSpec> {
    let field = |name: &str, len: usize| FieldSpec { name: name.to_owned(), len };
    let mut fields = vec![
        field("b0", n * n),
        field("a", n * k),
        field("omega", n),
        field("rho", n),
        field("sigma2_omega", n),
        field("gamma_0", n),
        field("s_0", n),
        field("s_gamma0", 1),
        field("gamma_a", n),
        field("s_a", n),
        field("s_gamma_a", 1),
        field("omega_moment_mean", n),
        field("omega_moment_var", n),
    ];
    if includes_h {
        fields.push(field("h", n * t_eff));
        fields.push(field("s", n * t_eff));
    }
    fields
}

/// Checks that every draw matches the dimensions of the first one.
fn validate_draw_dims(sample: &PosteriorSample, store_h: bool) -> Result<(usize, usize, usize)> {
    let first = &sample.draws[0];
    let n = first.b0.nrows();
    let k = first.a.ncols();
    let t_eff = if store_h { first.sv.first().map_or(0, |sv| sv.h.len()) } else { 0 };
    if store_h && t_eff == 0 {
        return Err(Error::InvalidConfig(
            "cannot store volatility paths: the draws carry empty paths".into(),
        ));
    }
    for (idx, draw) in sample.draws.iter().enumerate() {
        let ok_core = draw.b0.nrows() == n
            && draw.b0.ncols() == n
            && draw.a.nrows() == n
            && draw.a.ncols() == k
            && draw.sv.len() == n
            && draw.hyper.gamma_0.len() == n
            && draw.hyper.s_0.len() == n
            && draw.hyper.gamma_a.len() == n
            && draw.hyper.s_a.len() == n;
        let ok_paths = !store_h
            || draw.sv.iter().all(|sv| sv.h.len() == t_eff && sv.s.len() == t_eff);
        if !ok_core || !ok_paths {
            return Err(Error::InvalidData(format!(
                "draw {idx} does not match the dimensions of draw 0"
            )));
        }
    }
    Ok((n, k, t_eff))
}

/// Writes `sample` to `path` in the documented columnar layout.
///
/// `model`, `priors`, and `gibbs` are embedded in the header as the resolved
/// configuration the chain was run with. Latent paths and mixture indicators
/// are stored only when `store_h` is set; storing them requires every draw to
/// carry paths of a common positive length.
pub fn write_artifact(
    path: &Path,
    sample: &PosteriorSample,
    model: &ModelConfig,
    priors: &PriorConfig,
    gibbs: &GibbsConfig,
    store_h: bool,
) -> Result<()> {
    sample.validate()?;
    if sample.draws.is_empty() {
        return Err(Error::InvalidData("cannot write an artifact with zero draws".into()));
    }
    let (n, k, t_eff) = validate_draw_dims(sample, store_h)?;
    model.validate(n)?;
    priors.validate()?;

    let fields = record_layout(n, k, t_eff, store_h);
    let record_len = fields.iter().map(|f| f.len).sum();
    let header = ArtifactHeader {
        format_version: ARTIFACT_FORMAT_VERSION,
        n_vars: n,
        n_regressors: k,
        t_eff,
        n_draws: sample.draws.len(),
        includes_h: store_h,
        meta: sample.meta.clone(),
        model: model.clone(),
        priors: priors.clone(),
        gibbs: gibbs.clone(),
        record_len,
        fields,
    };
    let header_bytes = serde_json::to_vec(&header)?;

    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    w.write_all(&ARTIFACT_MAGIC)?;
    w.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
    w.write_all(&header_bytes)?;

    let mut record = Vec::with_capacity(record_len);
    for (draw, moments) in sample.draws.iter().zip(&sample.sddr_moments) {
        record.clear();
        record.extend(draw.b0.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()));
        record.extend(draw.a.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()));
        record.extend(draw.sv.iter().map(|sv| sv.omega));
        record.extend(draw.sv.iter().map(|sv| sv.rho));
        record.extend(draw.sv.iter().map(|sv| sv.sigma2_omega));
        record.extend(draw.hyper.gamma_0.iter().copied());
        record.extend(draw.hyper.s_0.iter().copied());
        record.push(draw.hyper.s_gamma0);
        record.extend(draw.hyper.gamma_a.iter().copied());
        record.extend(draw.hyper.s_a.iter().copied());
        record.push(draw.hyper.s_gamma_a);
        record.extend(moments.iter().map(|&(mean, _)| mean));
        record.extend(moments.iter().map(|&(_, var)| var));
        if store_h {
            record.extend(draw.sv.iter().flat_map(|sv| sv.h.iter().copied()));
            record.extend(draw.sv.iter().flat_map(|sv| sv.s.iter().map(|&s| s as f64)));
        }
        debug_assert_eq!(record.len(), record_len);
        for v in &record {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Sequential reader over the `f64` values of one record.
struct Cursor<'a> {
    values: &'a [f64],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> &'a [f64] {
        let out = &self.values[self.pos..self.pos + len];
        self.pos += len;
        out
    }
}

/// Reads an artifact back into a posterior sample plus its header.
///
/// Draws from an artifact written without `store_h` come back with empty
/// `h` and `s`; callers that need the paths get a loud error downstream
/// instead of fabricated constants.
pub fn read_artifact(path: &Path) -> Result<(PosteriorSample, ArtifactHeader)> {
    let bytes = std::fs::read(path)?;
    if bytes.len() < 16 {
        return Err(Error::MalformedArtifact(format!(
            "file is {} bytes, too short for the magic and header length",
            bytes.len()
        )));
    }
    if bytes[..8] != ARTIFACT_MAGIC {
        return Err(Error::MalformedArtifact(
            "bad magic bytes: not a posterior artifact".into(),
        ));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().expect("8-byte slice")) as usize;
    let body_start = 16usize.checked_add(header_len).filter(|&s| s <= bytes.len()).ok_or_else(
        || {
            Error::MalformedArtifact(format!(
                "header length {header_len} exceeds the file size {}",
                bytes.len()
            ))
        },
    )?;
    let header: ArtifactHeader = serde_json::from_slice(&bytes[16..body_start])?;

    if header.format_version != ARTIFACT_FORMAT_VERSION {
        return Err(Error::MalformedArtifact(format!(
            "unsupported format version {} (this crate reads version {})",
            header.format_version, ARTIFACT_FORMAT_VERSION
        )));
    }
    let (n, k, t_eff) = (header.n_vars, header.n_regressors, header.t_eff);
    if header.model.validate(n).is_err() || k < n * header.model.p {
        return Err(Error::MalformedArtifact(format!(
            "header dimensions are inconsistent: N = {n}, {k} regressors, p = {}",
            header.model.p
        )));
    }
    let expected_fields = record_layout(n, k, t_eff, header.includes_h);
    let record_len: usize = expected_fields.iter().map(|f| f.len).sum();
    if header.fields != expected_fields || header.record_len != record_len {
        return Err(Error::MalformedArtifact(
            "field list does not match the version-1 record layout".into(),
        ));
    }

    let body = &bytes[body_start..];
    if body.len() != header.n_draws * record_len * 8 {
        return Err(Error::MalformedArtifact(format!(
            "expected {} bytes of records for {} draws, found {}",
            header.n_draws * record_len * 8,
            header.n_draws,
            body.len()
        )));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();

    let mut draws = Vec::with_capacity(header.n_draws);
    let mut sddr_moments = Vec::with_capacity(header.n_draws);
    for rec in 0..header.n_draws {
        let mut cur = Cursor { values: &values[rec * record_len..(rec + 1) * record_len], pos: 0 };
        let b0 = DMatrix::from_row_slice(n, n, cur.take(n * n));
        let a = DMatrix::from_row_slice(n, k, cur.take(n * k));
        let omega = cur.take(n).to_vec();
        let rho = cur.take(n).to_vec();
        let sigma2_omega = cur.take(n).to_vec();
        let hyper = HyperState {
            gamma_0: DVector::from_column_slice(cur.take(n)),
            s_0: DVector::from_column_slice(cur.take(n)),
            s_gamma0: cur.take(1)[0],
            gamma_a: DVector::from_column_slice(cur.take(n)),
            s_a: DVector::from_column_slice(cur.take(n)),
            s_gamma_a: cur.take(1)[0],
        };
        let means = cur.take(n).to_vec();
        let vars = cur.take(n).to_vec();
        let mut paths = Vec::with_capacity(n);
        if header.includes_h {
            for _ in 0..n {
                paths.push(DVector::from_column_slice(cur.take(t_eff)));
            }
            let mut indicator_blocks = Vec::with_capacity(n);
            for eq in 0..n {
                let mut s = Vec::with_capacity(t_eff);
                for &v in cur.take(t_eff) {
                    if v.fract() != 0.0 || !(0.0..10.0).contains(&v) {
                        return Err(Error::MalformedArtifact(format!(
                            "mixture indicator {v} in record {rec}, equation {eq} \
                             is not an integer in 0..10"
                        )));
                    }
                    s.push(v as usize);
                }
                indicator_blocks.push(s);
            }
            let sv = paths
                .into_iter()
                .zip(indicator_blocks)
                .zip(omega.iter().zip(&rho).zip(&sigma2_omega))
                .map(|((h, s), ((&omega, &rho), &sigma2_omega))| SvEquationState {
                    h,
                    omega,
                    rho,
                    sigma2_omega,
                    s,
                })
                .collect();
            draws.push(StructuralState { b0, a, sv, hyper });
        } else {
            let sv = omega
                .iter()
                .zip(&rho)
                .zip(&sigma2_omega)
                .map(|((&omega, &rho), &sigma2_omega)| SvEquationState {
                    h: DVector::zeros(0),
                    omega,
                    rho,
                    sigma2_omega,
                    s: Vec::new(),
                })
                .collect();
            draws.push(StructuralState { b0, a, sv, hyper });
        }
        sddr_moments.push(means.into_iter().zip(vars).collect());
    }

    let sample = PosteriorSample { draws, sddr_moments, meta: header.meta.clone() };
    sample.validate()?;
    Ok((sample, header))
}

/// Writes the per-draw omega moments as CSV: `draw,equation,omega_mean,omega_var`.
///
/// This file is always emitted alongside an artifact because the
/// Savage-Dickey ratio needs only these moments, not the draws themselves.
pub fn write_moments_csv(path: &Path, sample: &PosteriorSample) -> Result<()> {
    sample.validate()?;
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "draw,equation,omega_mean,omega_var")?;
    for (draw, moments) in sample.sddr_moments.iter().enumerate() {
        for (equation, &(mean, var)) in moments.iter().enumerate() {
            writeln!(w, "{draw},{equation},{mean},{var}")?;
        }
    }
    w.flush()?;
    Ok(())
}
