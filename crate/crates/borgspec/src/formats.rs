//! Text formats: operator and ODE spec files (TOML), whitespace-separated
//! tables for spectra, fields and labels, and TOML reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use borgspec_core::borg::{BorgCertificate, VerifyOptions};
use borgspec_core::connectivity::{GridChoice, RegionReport};
use borgspec_core::fdm::{Coefficient, Generator, OdeOrder, OdeProblem};
use borgspec_core::field::{GridSpec, PseudoField};
use borgspec_core::operator::PeriodicJacobiOperator;
use borgspec_core::spectral::SpectrumSample;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> FormatError {
    FormatError::Invalid(msg.into())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorDoc {
    period: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

pub fn parse_operator(text: &str) -> Result<PeriodicJacobiOperator, FormatError> {
    let doc: OperatorDoc = toml::from_str(text)?;
    for (name, v) in [("a", &doc.a), ("b", &doc.b), ("c", &doc.c)] {
        if v.len() != doc.period {
            return Err(invalid(format!(
                "field `{name}` has length {} but period = {}",
                v.len(),
                doc.period
            )));
        }
    }
    PeriodicJacobiOperator::with_period(doc.period, doc.a, doc.b, doc.c).map_err(|e| invalid(e.to_string()))
}

pub fn write_operator(op: &PeriodicJacobiOperator) -> String {
    let doc = OperatorDoc {
        period: op.period(),
        a: op.a().to_vec(),
        b: op.b().to_vec(),
        c: op.c().to_vec(),
    };
    let body = toml::to_string(&doc).expect("operator serializes");
    format!("# periodic Jacobi operator: diagonal a, super-diagonal b, sub-diagonal c\n{body}")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OdeDoc {
    order: String,
    p: usize,
    #[serde(default)]
    x0: f64,
    g1: Value,
    g2: Value,
    g3: Option<Value>,
}

fn number(name: &str, v: &Value) -> Result<f64, FormatError> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(invalid(format!("field `{name}` must be a number"))),
    }
}

fn numbers(name: &str, v: &Value) -> Result<Vec<f64>, FormatError> {
    match v {
        Value::Array(items) => items.iter().map(|x| number(name, x)).collect(),
        _ => Err(invalid(format!("field `{name}` must be an array of numbers"))),
    }
}

fn generator(name: &str, t: &Table) -> Result<Generator, FormatError> {
    let kind = match t.get("kind") {
        Some(Value::String(s)) => s.as_str(),
        _ => return Err(invalid(format!("field `{name}.generator.kind` must be a string"))),
    };
    if let Some(extra) = t.keys().find(|k| *k != "kind" && *k != "parameters") {
        return Err(invalid(format!("unknown field `{name}.generator.{extra}`")));
    }
    let empty = Table::new();
    let params = match t.get("parameters") {
        None => &empty,
        Some(Value::Table(p)) => p,
        Some(_) => return Err(invalid(format!("field `{name}.generator.parameters` must be a table"))),
    };
    let allowed: &[&str] = match kind {
        "constant" => &["value"],
        "sine" | "cosine" => &["amplitude", "frequency", "phase", "offset"],
        "sawtooth" => &["amplitude", "frequency", "offset"],
        "polynomial" => &["coefficients"],
        other => {
            return Err(invalid(format!(
                "field `{name}.generator.kind`: unknown generator `{other}` (expected constant, sine, cosine, sawtooth or polynomial)"
            )))
        }
    };
    if let Some(extra) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(invalid(format!("unknown parameter `{name}.generator.parameters.{extra}` for `{kind}`")));
    }
    let get = |key: &str, default: Option<f64>| -> Result<f64, FormatError> {
        let path = format!("{name}.generator.parameters.{key}");
        match (params.get(key), default) {
            (Some(v), _) => number(&path, v),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(invalid(format!("missing field `{path}`"))),
        }
    };
    Ok(match kind {
        "constant" => Generator::Constant { value: get("value", None)? },
        "sine" => Generator::Sine {
            amplitude: get("amplitude", Some(1.0))?,
            frequency: get("frequency", Some(1.0))?,
            phase: get("phase", Some(0.0))?,
            offset: get("offset", Some(0.0))?,
        },
        "cosine" => Generator::Cosine {
            amplitude: get("amplitude", Some(1.0))?,
            frequency: get("frequency", Some(1.0))?,
            phase: get("phase", Some(0.0))?,
            offset: get("offset", Some(0.0))?,
        },
        "sawtooth" => Generator::Sawtooth {
            amplitude: get("amplitude", Some(1.0))?,
            frequency: get("frequency", Some(1.0))?,
            offset: get("offset", Some(0.0))?,
        },
        _ => {
            let path = format!("{name}.generator.parameters.coefficients");
            let c = params.get("coefficients").ok_or_else(|| invalid(format!("missing field `{path}`")))?;
            Generator::Polynomial { coefficients: numbers(&path, c)? }
        }
    })
}

/// A number, `{ samples = [...] }` or `{ generator = { kind, parameters } }`.
fn coefficient(name: &str, v: &Value) -> Result<Coefficient, FormatError> {
    match v {
        Value::Float(_) | Value::Integer(_) => Ok(Coefficient::constant(number(name, v)?)),
        Value::Table(t) => match (t.get("samples"), t.get("generator"), t.len()) {
            (Some(s), None, 1) => Ok(Coefficient::Samples(numbers(&format!("{name}.samples"), s)?)),
            (None, Some(Value::Table(g)), 1) => Ok(Coefficient::Generator(generator(name, g)?)),
            _ => Err(invalid(format!(
                "field `{name}` needs exactly one of `samples` or `generator` (a table)"
            ))),
        },
        _ => Err(invalid(format!("field `{name}` must be a number or a table"))),
    }
}

pub fn parse_ode(text: &str) -> Result<OdeProblem, FormatError> {
    let doc: OdeDoc = toml::from_str(text)?;
    let order = OdeOrder::from_name(&doc.order).ok_or_else(|| {
        invalid(format!(
            "field `order`: unknown order `{}` (expected first, second-const-g1 or second-general)",
            doc.order
        ))
    })?;
    let problem = OdeProblem {
        order,
        p: doc.p,
        x0: doc.x0,
        g1: coefficient("g1", &doc.g1)?,
        g2: coefficient("g2", &doc.g2)?,
        g3: doc.g3.as_ref().map(|v| coefficient("g3", v)).transpose()?,
    };
    problem.validate().map_err(|e| invalid(e.to_string()))?;
    Ok(problem)
}

fn header_value<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .find(|(k, _)| *k == key)
        .map(|(_, v)| v)
}

fn grid_header(g: &GridSpec) -> String {
    format!(
        "re_min={} re_max={} im_min={} im_max={} nx={} ny={}",
        g.re_min, g.re_max, g.im_min, g.im_max, g.nx, g.ny
    )
}

/// One row per node in index order (`im` outer, `re` inner).
pub fn write_field(field: &PseudoField) -> String {
    let g = &field.grid;
    let mut out = String::with_capacity(64 * g.len());
    out.push_str("# psi(z) = min over theta of sigma_min(zI - phi(theta))\n");
    let _ = writeln!(out, "# {} theta_count={}", grid_header(g), field.theta_count);
    out.push_str("re\tim\tpsi\n");
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let _ = writeln!(out, "{}\t{}\t{}", g.re(ix), g.im(iy), field.at(ix, iy));
        }
    }
    out
}

pub fn parse_field(text: &str) -> Result<PseudoField, FormatError> {
    let header = text
        .lines()
        .find(|l| l.starts_with('#') && l.contains("nx="))
        .ok_or_else(|| invalid("field table: missing grid header"))?;
    let num = |key: &str| -> Result<f64, FormatError> {
        header_value(header, key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| invalid(format!("field table: header lacks `{key}`")))
    };
    let int = |key: &str| -> Result<usize, FormatError> {
        header_value(header, key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| invalid(format!("field table: header lacks `{key}`")))
    };
    let grid = GridSpec::new(num("re_min")?, num("re_max")?, num("im_min")?, num("im_max")?, int("nx")?, int("ny")?)
        .map_err(|e| invalid(e.to_string()))?;
    let theta_count = int("theta_count")?;
    let mut psi = Vec::with_capacity(grid.len());
    for (n, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.starts_with("re") || line.trim().is_empty() {
            continue;
        }
        let v = line
            .split_whitespace()
            .nth(2)
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| invalid(format!("field table line {}: expected `re im psi`", n + 1)))?;
        psi.push(v);
    }
    if psi.len() != grid.len() {
        return Err(invalid(format!("field table: {} rows for a {} node grid", psi.len(), grid.len())));
    }
    Ok(PseudoField { grid, psi, theta_count })
}

pub fn write_spectrum(sample: &SpectrumSample, period: usize) -> String {
    let mut out = String::new();
    out.push_str("# eigenvalues of phi(theta) on the sampled angles\n");
    let _ = writeln!(out, "# period={period} theta_count={}", sample.theta_count);
    out.push_str("theta\tre\tim\n");
    for (t, z) in &sample.points {
        let _ = writeln!(out, "{t}\t{}\t{}", z.re, z.im);
    }
    out
}

/// Label per node, one grid row per line (`im` index ascending).
pub fn write_labels(report: &RegionReport) -> String {
    let g = &report.grid;
    let mut out = String::with_capacity(3 * g.len());
    let _ = writeln!(out, "# component labels at eps={}, 0 = outside", report.epsilon);
    let _ = writeln!(out, "# {}", grid_header(g));
    for iy in 0..g.ny {
        let row: Vec<String> = (0..g.nx).map(|ix| report.labels[g.index(ix, iy)].to_string()).collect();
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct GridDoc {
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    nx: usize,
    ny: usize,
}

impl From<&GridSpec> for GridDoc {
    fn from(g: &GridSpec) -> Self {
        GridDoc {
            re_min: g.re_min,
            re_max: g.re_max,
            im_min: g.im_min,
            im_max: g.im_max,
            nx: g.nx,
            ny: g.ny,
        }
    }
}

#[derive(Serialize)]
struct RegionDoc {
    epsilon: f64,
    verdict: &'static str,
    component_count: usize,
    boundary_margin: f64,
    certified_margin: f64,
    refinement_level: usize,
    vacuous: bool,
    touches_frame: bool,
    theta_slack: f64,
    grid_spacing: f64,
    nodes_evaluated: usize,
    component_sizes: Vec<usize>,
    grid: GridDoc,
}

impl From<&RegionReport> for RegionDoc {
    fn from(r: &RegionReport) -> Self {
        RegionDoc {
            epsilon: r.epsilon,
            verdict: r.verdict.name(),
            component_count: r.component_count,
            boundary_margin: r.boundary_margin,
            certified_margin: r.certified_margin,
            refinement_level: r.refinement_level,
            vacuous: r.vacuous,
            touches_frame: r.touches_frame,
            theta_slack: r.theta_slack,
            grid_spacing: r.grid_spacing(),
            nodes_evaluated: r.nodes_evaluated,
            component_sizes: r.component_sizes.clone(),
            grid: GridDoc::from(&r.grid),
        }
    }
}

pub fn write_report(report: &RegionReport) -> String {
    toml::to_string(&RegionDoc::from(report)).expect("report serializes")
}

/// Parses the scalar part of a region report back (for diffing and tests).
pub fn parse_report(text: &str) -> Result<Table, FormatError> {
    Ok(toml::from_str(text)?)
}

#[derive(Serialize)]
struct ParametersDoc {
    theta_count: usize,
    band_theta_count: usize,
    epsilon: String,
    grid: String,
}

#[derive(Serialize)]
struct ConnectivityDoc {
    epsilon: f64,
    verdict: &'static str,
    component_count: usize,
    boundary_margin: f64,
    certified_margin: f64,
    refinement_level: usize,
    grid_spacing: f64,
}

#[derive(Serialize)]
struct CertificateDoc {
    statement_id: &'static str,
    status: &'static str,
    lhs: f64,
    rhs: f64,
    inequality_holds: bool,
    notes: Vec<String>,
    inputs: BTreeMap<&'static str, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    connectivity: Option<ConnectivityDoc>,
}

#[derive(Serialize)]
struct BundleDoc {
    parameters_digest: String,
    case: String,
    parameters: ParametersDoc,
    certificate: Vec<CertificateDoc>,
}

fn grid_choice_text(g: &GridChoice) -> String {
    match g {
        GridChoice::Auto { nx, ny } => format!("auto nx={nx} ny={ny}"),
        GridChoice::Fixed(g) => grid_header(g),
    }
}

/// SHA-256 over the operator coefficients and verification parameters.
pub fn parameters_digest(op: &PeriodicJacobiOperator, opts: &VerifyOptions) -> String {
    let mut text = write_operator(op);
    let _ = write!(
        text,
        "theta_count={}\nband_theta_count={}\nepsilon={:?}\ngrid={}\n",
        opts.theta_count,
        opts.band_theta_count,
        opts.epsilon,
        grid_choice_text(&opts.grid)
    );
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_certificates(op: &PeriodicJacobiOperator, opts: &VerifyOptions, case: &str, certs: &[BorgCertificate]) -> String {
    let doc = BundleDoc {
        parameters_digest: parameters_digest(op, opts),
        case: case.to_string(),
        parameters: ParametersDoc {
            theta_count: opts.theta_count,
            band_theta_count: opts.band_theta_count,
            epsilon: opts.epsilon.map_or_else(|| "auto".to_string(), |e| e.to_string()),
            grid: grid_choice_text(&opts.grid),
        },
        certificate: certs
            .iter()
            .map(|c| CertificateDoc {
                statement_id: c.statement.id(),
                status: c.status.name(),
                lhs: c.lhs,
                rhs: c.rhs,
                inequality_holds: c.inequality_holds,
                notes: c.notes.clone(),
                inputs: c.inputs.iter().copied().collect(),
                connectivity: c.connectivity.map(|s| ConnectivityDoc {
                    epsilon: s.epsilon,
                    verdict: s.verdict.name(),
                    component_count: s.component_count,
                    boundary_margin: s.boundary_margin,
                    certified_margin: s.certified_margin,
                    refinement_level: s.refinement_level,
                    grid_spacing: s.grid_spacing,
                }),
            })
            .collect(),
    };
    toml::to_string(&doc).expect("certificates serialize")
}

#[derive(Serialize)]
struct SpectrumDoc {
    period: usize,
    case: &'static str,
    theta_count: usize,
    points: usize,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
}

pub fn write_spectrum_report(op: &PeriodicJacobiOperator, case: &'static str, sample: &SpectrumSample) -> String {
    let (re_min, re_max, im_min, im_max) = sample.bounding_box();
    let doc = SpectrumDoc {
        period: op.period(),
        case,
        theta_count: sample.theta_count,
        points: sample.points.len(),
        re_min,
        re_max,
        im_min,
        im_max,
    };
    toml::to_string(&doc).expect("spectrum report serializes")
}

/// Curve counts of one contour level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LevelSummary {
    pub epsilon: f64,
    pub curves: usize,
    pub closed_curves: usize,
}

#[derive(Serialize)]
struct PseudoDoc {
    theta_count: usize,
    psi_min: f64,
    psi_max: f64,
    grid: GridDoc,
    level: Vec<LevelSummary>,
}

pub fn write_pseudo_report(field: &PseudoField, levels: &[LevelSummary]) -> String {
    let doc = PseudoDoc {
        theta_count: field.theta_count,
        psi_min: field.min(),
        psi_max: field.max(),
        grid: GridDoc::from(&field.grid),
        level: levels.to_vec(),
    };
    toml::to_string(&doc).expect("pseudo report serializes")
}

#[derive(Serialize)]
struct SummaryDoc {
    operator: String,
    theta_count: usize,
    epsilon_star: f64,
    spectrum_components: usize,
    spectrum_margin_in_spacings: f64,
    pseudospectrum_verdict: &'static str,
    spectrum: RegionDoc,
    pseudospectrum: RegionDoc,
}

/// Spectrum-level and threshold-level connectivity side by side.
pub fn write_illustration_summary(operator: &str, theta_count: usize, epsilon_star: f64, spectrum: &RegionReport, pseudo: &RegionReport) -> String {
    let doc = SummaryDoc {
        operator: operator.to_string(),
        theta_count,
        epsilon_star,
        spectrum_components: spectrum.component_count,
        spectrum_margin_in_spacings: spectrum.boundary_margin / spectrum.grid_spacing(),
        pseudospectrum_verdict: pseudo.verdict.name(),
        spectrum: RegionDoc::from(spectrum),
        pseudospectrum: RegionDoc::from(pseudo),
    };
    toml::to_string(&doc).expect("summary serializes")
}
