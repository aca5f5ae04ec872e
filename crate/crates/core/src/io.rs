//! Experiment plumbing: seeded generation, JSON files with round-trip exact
//! floats, and SVG scatter plots of planar reconstructions.

use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::geometry::{Configuration, DEFAULT_TOL};
use crate::measurement::{build_trilateration_ensemble, measure, random_configuration, DataSet, Mode, Path};
use crate::reconstruct::Explanation;
use crate::relation::RankStrategy;

/// Everything needed to regenerate a synthetic data set bit for bit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub n: usize,
    pub d: usize,
    pub mode: Mode,
    pub extra_distractors: usize,
    pub max_hops: usize,
    pub seed_config: u64,
    pub seed_ensemble: u64,
    pub seed_shuffle: u64,
    /// Uniform integer scale applied to every walk.
    pub scale: u32,
    pub tol: f64,
    pub b_strategy: RankStrategy,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            n: 5,
            d: 2,
            mode: Mode::Loop,
            extra_distractors: 0,
            max_hops: 4,
            seed_config: 0,
            seed_ensemble: 0,
            seed_shuffle: 0,
            scale: 1,
            tol: DEFAULT_TOL,
            b_strategy: RankStrategy::Brute,
        }
    }
}

/// Output of [`ExperimentSpec::generate`].
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub dataset: DataSet,
    pub truth: Configuration,
    /// The walk behind each data value, in data order.
    pub ensemble: Vec<Path>,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.d < 2 {
            return bad(format!("dimension must be at least 2, got {}", self.d));
        }
        if self.n < self.d + 2 {
            return bad(format!("need at least d+2 = {} points, got {}", self.d + 2, self.n));
        }
        if self.scale == 0 {
            return bad("scale must be positive".into());
        }
        let min_hops = if self.mode == Mode::Loop { 2 } else { 1 };
        if self.extra_distractors > 0 && self.max_hops < min_hops {
            return bad(format!("max_hops must be at least {min_hops} in {} mode", self.mode));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad(format!("tolerance must be positive, got {}", self.tol));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<Experiment> {
        self.validate()?;
        let truth = random_configuration(self.n, self.d, self.seed_config)?;
        let ensemble = build_trilateration_ensemble(
            self.n,
            self.d,
            self.mode,
            self.extra_distractors,
            self.max_hops,
            self.seed_ensemble,
        )
        .map_err(|e| Error::InvalidSpec(e.to_string()))?
        .scaled(self.scale);
        let (dataset, labels) = measure(&ensemble, &truth, self.seed_shuffle)?;
        let walks = ensemble.provenance().expect("generated ensembles keep their walks");
        let ensemble = labels.labels.iter().map(|&k| walks[k].clone()).collect();
        Ok(Experiment {
            dataset,
            truth,
            ensemble,
        })
    }
}

/// Pretty JSON whose floats carry 17 significant digits, enough to
/// reproduce every `f64` exactly.
struct Sig17<'a>(PrettyFormatter<'a>);

impl Formatter for Sig17<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serialize to pretty JSON with 17 significant digits per float and a
/// trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Malformed(e.to_string()))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))
}

const SVG_SIZE: f64 = 480.0;
const SVG_MARGIN: f64 = 32.0;

/// Scatter plot of a planar configuration with each explaining walk drawn
/// as a polyline through the recovered points.
pub fn render_svg(cfg: &Configuration, walks: &[Explanation]) -> Result<String> {
    if cfg.dim() != 2 {
        return Err(Error::UnsupportedDimension(cfg.dim()));
    }
    let pts = cfg.points();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
    let s = (SVG_SIZE - 2.0 * SVG_MARGIN) / span;
    // flip y so the plot reads like the usual axes
    let xy = |p: &[f64]| (SVG_MARGIN + (p[0] - lo[0]) * s, SVG_SIZE - SVG_MARGIN - (p[1] - lo[1]) * s);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_SIZE}" height="{SVG_SIZE}" viewBox="0 0 {SVG_SIZE} {SVG_SIZE}">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(out, r##"<g fill="none" stroke="#4878a8" stroke-opacity="0.45" stroke-width="1.5">"##);
    for e in walks {
        let mut coords = Vec::with_capacity(e.path.vertices().len());
        for &v in e.path.vertices() {
            let p = pts.get(v).ok_or(Error::IndexOutOfRange { index: v, n: pts.len() })?;
            let (x, y) = xy(p);
            coords.push(format!("{x:.2},{y:.2}"));
        }
        let _ = writeln!(
            out,
            r#"<polyline points="{}"><title>value {}</title></polyline>"#,
            coords.join(" "),
            e.value_index
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r##"<g fill="#c0392b" font-family="sans-serif" font-size="12">"##);
    for (i, p) in pts.iter().enumerate() {
        let (x, y) = xy(p);
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4"/>"#);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{i}</text>"#, x + 6.0, y - 6.0);
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    Ok(out)
}
