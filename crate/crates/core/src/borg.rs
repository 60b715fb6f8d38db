//! Numerical certificates for the Borg-type inequalities relating
//! coefficient oscillations to connectedness and to spectral gaps.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::connectivity::{decide_on_set, GridChoice, RegionReport, Verdict};
use crate::decompose::{classify_case, decompose, frobenius_bound, is_first_order_fd, CaseTag};
use crate::error::{Error, Result};
use crate::field::{FieldEvaluator, Sequential, SymbolSchurSet};
use crate::operator::{oscillation_stats, PeriodicJacobiOperator};
use crate::spectral::{bands_and_gaps, theta_grid};

/// Relative slack in `lhs <= rhs`.
pub const CERT_SLACK: f64 = 1e-12;

/// Thresholds below this count as zero (constant coefficients).
const ZERO_THRESHOLD: f64 = 1e-14;

/// The checked statements. [`Statement::id`] gives the stable identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Statement {
    /// Constant off-diagonals: `Lambda_{omega_a}` is connected.
    ConstantOffDiagForward,
    /// Constant off-diagonals: connected `Lambda_eps` forces `omega_a <= 2(eps + |b - c|)(p - 1)`.
    ConstantOffDiagConverse,
    ConstantDifferenceForward,
    ConstantDifferenceConverse,
    GeneralForward,
    GeneralConverse,
    FirstOrderForward,
    FirstOrderConverse,
    /// Self-adjoint: `omega_b <= (p - 1)|gamma|`.
    GapOffDiagonal,
    /// Self-adjoint: `omega_a <= p^2 sqrt(p) |gamma|`.
    GapDiagonal,
    /// Self-adjoint: `|gamma| / 4 <= omega_a + omega_b`.
    GapSum,
    /// Constant difference: `max ||f_3|| <= sqrt((p-1)(omega_a^2 + 2 omega_b^2))`.
    ConstantDifferenceBound,
    /// General: `max ||f_2|| <= sqrt((p-1)(omega_a^2 + omega_b^2 + omega_bc^2))`.
    GeneralBound,
}

impl Statement {
    pub const ALL: [Statement; 13] = [
        Statement::ConstantOffDiagForward,
        Statement::ConstantOffDiagConverse,
        Statement::ConstantDifferenceForward,
        Statement::ConstantDifferenceConverse,
        Statement::GeneralForward,
        Statement::GeneralConverse,
        Statement::FirstOrderForward,
        Statement::FirstOrderConverse,
        Statement::GapOffDiagonal,
        Statement::GapDiagonal,
        Statement::GapSum,
        Statement::ConstantDifferenceBound,
        Statement::GeneralBound,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Statement::ConstantOffDiagForward => "T2.2",
            Statement::ConstantOffDiagConverse => "T2.3",
            Statement::ConstantDifferenceForward => "T2.5",
            Statement::ConstantDifferenceConverse => "T2.6",
            Statement::GeneralForward => "T2.8",
            Statement::GeneralConverse => "T2.9",
            Statement::FirstOrderForward => "T3.1-fwd",
            Statement::FirstOrderConverse => "T3.1-conv",
            Statement::GapOffDiagonal => "T1.3-b",
            Statement::GapDiagonal => "T1.3-a",
            Statement::GapSum => "T1.3-sum",
            Statement::ConstantDifferenceBound => "R2.4",
            Statement::GeneralBound => "R2.7",
        }
    }

    pub fn from_id(id: &str) -> Option<Statement> {
        Statement::ALL.iter().copied().find(|s| s.id() == id)
    }

    fn forward_for(case: CaseTag) -> Statement {
        match case {
            CaseTag::ConstantOffDiag => Statement::ConstantOffDiagForward,
            CaseTag::ConstantDifference { .. } => Statement::ConstantDifferenceForward,
            CaseTag::General => Statement::GeneralForward,
            CaseTag::FirstOrderFd => Statement::FirstOrderForward,
        }
    }

    fn converse_for(case: CaseTag) -> Statement {
        match case {
            CaseTag::ConstantOffDiag => Statement::ConstantOffDiagConverse,
            CaseTag::ConstantDifference { .. } => Statement::ConstantDifferenceConverse,
            CaseTag::General => Statement::GeneralConverse,
            CaseTag::FirstOrderFd => Statement::FirstOrderConverse,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertStatus {
    Pass,
    Fail,
    /// A forward statement met a Disconnected grid verdict: a discretization
    /// problem, not a counterexample.
    Alarm,
    Indeterminate,
    NotApplicable,
}

impl CertStatus {
    pub fn name(&self) -> &'static str {
        match self {
            CertStatus::Pass => "pass",
            CertStatus::Fail => "fail",
            CertStatus::Alarm => "alarm",
            CertStatus::Indeterminate => "indeterminate",
            CertStatus::NotApplicable => "not-applicable",
        }
    }
}

/// Connectivity outcome attached to a certificate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConnectivitySummary {
    pub epsilon: f64,
    pub verdict: Verdict,
    pub component_count: usize,
    pub boundary_margin: f64,
    pub certified_margin: f64,
    pub refinement_level: usize,
    pub grid_spacing: f64,
}

impl From<&RegionReport> for ConnectivitySummary {
    fn from(r: &RegionReport) -> Self {
        ConnectivitySummary {
            epsilon: r.epsilon,
            verdict: r.verdict,
            component_count: r.component_count,
            boundary_margin: r.boundary_margin,
            certified_margin: r.certified_margin,
            refinement_level: r.refinement_level,
            grid_spacing: r.grid_spacing(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BorgCertificate {
    pub statement: Statement,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs <= rhs` up to [`CERT_SLACK`].
    pub inequality_holds: bool,
    pub status: CertStatus,
    /// Named inputs, in a fixed order.
    pub inputs: Vec<(&'static str, f64)>,
    pub connectivity: Option<ConnectivitySummary>,
    pub notes: Vec<String>,
}

pub fn holds(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + CERT_SLACK * (1.0 + rhs.abs())
}

impl BorgCertificate {
    fn new(statement: Statement, lhs: f64, rhs: f64, inputs: Vec<(&'static str, f64)>) -> Self {
        let ok = holds(lhs, rhs);
        BorgCertificate {
            statement,
            lhs,
            rhs,
            inequality_holds: ok,
            status: if ok { CertStatus::Pass } else { CertStatus::Fail },
            inputs,
            connectivity: None,
            notes: Vec::new(),
        }
    }

    fn not_applicable(statement: Statement, why: &str) -> Self {
        BorgCertificate {
            statement,
            lhs: 0.0,
            rhs: 0.0,
            inequality_holds: true,
            status: CertStatus::NotApplicable,
            inputs: Vec::new(),
            connectivity: None,
            notes: vec![String::from(why)],
        }
    }

    pub fn input(&self, name: &str) -> Option<f64> {
        self.inputs.iter().find(|(k, _)| *k == name).map(|&(_, v)| v)
    }
}

/// Case used for the forward and converse statements: the finite-difference
/// shape when present, otherwise [`classify_case`].
pub fn effective_case(op: &PeriodicJacobiOperator) -> CaseTag {
    match classify_case(op) {
        CaseTag::General if is_first_order_fd(op) => CaseTag::FirstOrderFd,
        c => c,
    }
}

/// Forward threshold `eps*`: `omega_a` for constant off-diagonals, else the
/// largest sampled norm of the bounded perturbation.
pub fn forward_threshold(op: &PeriodicJacobiOperator, case: CaseTag, theta_count: usize) -> Result<f64> {
    if theta_count < 8 {
        return Err(Error::usage(format!("theta_count must be at least 8, got {theta_count}")));
    }
    if let CaseTag::ConstantOffDiag = case {
        return Ok(oscillation_stats(op).omega_a);
    }
    let d = decompose(op, case)?;
    let part = d.bounded_part();
    Ok(theta_grid(theta_count).into_iter().map(|t| part.norm_at(t)).fold(0.0, f64::max))
}

/// `kappa` in the converse bound `omega_a <= 2(eps + kappa)(p - 1)`.
pub fn converse_kappa(op: &PeriodicJacobiOperator, case: CaseTag) -> f64 {
    let (b, c) = (op.b(), op.c());
    let p = b.len();
    match case {
        CaseTag::ConstantOffDiag => (b[0] - c[0]).abs(),
        CaseTag::ConstantDifference { k } => k.abs(),
        CaseTag::General => oscillation_stats(op).max_cb_gap,
        CaseTag::FirstOrderFd => (0..p).map(|i| (b[i] + b[(i + 1) % p]).abs()).fold(0.0, f64::max),
    }
}

fn constant_note() -> String {
    String::from("constant coefficients: the spectrum and every pseudospectrum are connected for all eps > 0")
}

pub fn verify_forward(op: &PeriodicJacobiOperator, theta_count: usize, grid: GridChoice) -> Result<BorgCertificate> {
    verify_forward_with(op, theta_count, grid, &Sequential)
}

/// Runs the connectivity decision at `eps*` for the operator's case.
pub fn verify_forward_with(
    op: &PeriodicJacobiOperator,
    theta_count: usize,
    grid: GridChoice,
    evaluator: &dyn FieldEvaluator,
) -> Result<BorgCertificate> {
    let case = effective_case(op);
    let eps = forward_threshold(op, case, theta_count)?;
    let statement = Statement::forward_for(case);
    let s = oscillation_stats(op);
    let mut inputs = vec![
        ("eps_star", eps),
        ("p", op.period() as f64),
        ("omega_a", s.omega_a),
        ("omega_b", s.omega_b),
        ("omega_c", s.omega_c),
        ("theta_count", theta_count as f64),
    ];
    if let CaseTag::ConstantDifference { k } = case {
        inputs.push(("k", k));
    }
    let bound = frobenius_bound(op, case);
    if case != CaseTag::ConstantOffDiag {
        inputs.push(("norm_bound", bound));
    }
    if eps <= ZERO_THRESHOLD {
        let mut cert = BorgCertificate::new(statement, 1.0, 1.0, inputs);
        cert.notes.push(constant_note());
        return Ok(cert);
    }
    let set = SymbolSchurSet::new(op, theta_count)?;
    let report = decide_on_set(&set, eps, grid, crate::connectivity::MAX_REFINEMENTS, evaluator)?.report;
    let mut cert = forward_from_report(statement, inputs, &report, case, bound, eps);
    cert.notes.extend(ellipse_note(op, case));
    Ok(cert)
}

/// The constant part `a_0 + f` traces `a_0 + c e^{i psi} + b e^{-i psi}`:
/// an ellipse with semi-axes `|b + c|` and `|c - b|`, not a circle of radius
/// `sqrt(b^2 + c^2)`.
fn ellipse_note(op: &PeriodicJacobiOperator, case: CaseTag) -> Option<String> {
    if case != CaseTag::ConstantOffDiag {
        return None;
    }
    let (a0, b, c) = (op.a()[0], op.b()[0], op.c()[0]);
    Some(format!(
        "unperturbed symbol union: ellipse centred at {a0} with semi-axes {} (real) and {} (imaginary); \
         the circle of radius {} does not match it unless b or c vanishes",
        (b + c).abs(),
        (c - b).abs(),
        (b * b + c * c).sqrt()
    ))
}

fn forward_from_report(
    statement: Statement,
    inputs: Vec<(&'static str, f64)>,
    report: &RegionReport,
    case: CaseTag,
    bound: f64,
    eps: f64,
) -> BorgCertificate {
    let mut cert = BorgCertificate::new(statement, report.component_count as f64, 1.0, inputs);
    cert.connectivity = Some(report.into());
    cert.status = match report.verdict {
        Verdict::Connected => CertStatus::Pass,
        Verdict::Indeterminate => CertStatus::Indeterminate,
        Verdict::Disconnected => {
            cert.notes.push(String::from(
                "Disconnected verdict at the forward threshold: discretization alarm, not a counterexample",
            ));
            CertStatus::Alarm
        }
    };
    if case == CaseTag::FirstOrderFd && !holds(eps, bound) {
        cert.notes.push(format!("sampled threshold {eps} exceeds the closed-form norm bound {bound}"));
    }
    cert
}

pub fn verify_converse(op: &PeriodicJacobiOperator, epsilon: f64, theta_count: usize, grid: GridChoice) -> Result<BorgCertificate> {
    verify_converse_with(op, epsilon, theta_count, grid, &Sequential)
}

/// Checks `omega_a <= 2(eps + kappa)(p - 1)` where `Lambda_eps` is connected.
pub fn verify_converse_with(
    op: &PeriodicJacobiOperator,
    epsilon: f64,
    theta_count: usize,
    grid: GridChoice,
    evaluator: &dyn FieldEvaluator,
) -> Result<BorgCertificate> {
    let case = effective_case(op);
    let set = SymbolSchurSet::new(op, theta_count)?;
    let report = decide_on_set(&set, epsilon, grid, crate::connectivity::MAX_REFINEMENTS, evaluator)?.report;
    Ok(converse_from_report(op, case, epsilon, theta_count, &report))
}

fn converse_from_report(op: &PeriodicJacobiOperator, case: CaseTag, epsilon: f64, theta_count: usize, report: &RegionReport) -> BorgCertificate {
    let s = oscillation_stats(op);
    let kappa = converse_kappa(op, case);
    let p = op.period();
    let lhs = s.omega_a;
    let rhs = 2.0 * (epsilon + kappa) * (p - 1) as f64;
    let inputs = vec![
        ("eps", epsilon),
        ("p", p as f64),
        ("omega_a", s.omega_a),
        ("kappa", kappa),
        ("theta_count", theta_count as f64),
    ];
    let mut cert = BorgCertificate::new(Statement::converse_for(case), lhs, rhs, inputs);
    cert.connectivity = Some(report.into());
    if lhs <= ZERO_THRESHOLD {
        cert.notes.push(constant_note());
        return cert;
    }
    match report.verdict {
        Verdict::Connected => {}
        Verdict::Indeterminate => cert.status = CertStatus::Indeterminate,
        Verdict::Disconnected => {
            cert.status = CertStatus::NotApplicable;
            cert.notes.push(String::from("Lambda_eps is not connected; the converse has no hypothesis to use"));
        }
    }
    cert
}

/// The three gap inequalities of a self-adjoint operator.
pub fn verify_selfadjoint_gaps(op: &PeriodicJacobiOperator, theta_count: usize) -> Result<Vec<BorgCertificate>> {
    let report = bands_and_gaps(op, theta_count)?;
    let s = oscillation_stats(op);
    let p = op.period() as f64;
    let gamma = report.gamma_total;
    let inputs = vec![
        ("gamma", gamma),
        ("gamma_max", report.gamma_max),
        ("p", p),
        ("omega_a", s.omega_a),
        ("omega_b", s.omega_b),
        ("theta_count", theta_count as f64),
    ];
    Ok(vec![
        BorgCertificate::new(Statement::GapOffDiagonal, s.omega_b, (p - 1.0) * gamma, inputs.clone()),
        BorgCertificate::new(Statement::GapDiagonal, s.omega_a, p * p * p.sqrt() * gamma, inputs.clone()),
        BorgCertificate::new(Statement::GapSum, gamma / 4.0, s.omega_a + s.omega_b, inputs),
    ])
}

/// Sampled norm of the bounded perturbation against its closed-form bound.
pub fn verify_norm_bound(op: &PeriodicJacobiOperator, theta_count: usize) -> Result<BorgCertificate> {
    let case = classify_case(op);
    let statement = match case {
        CaseTag::ConstantDifference { .. } => Statement::ConstantDifferenceBound,
        CaseTag::General => Statement::GeneralBound,
        _ => {
            return Err(Error::usage(format!(
                "no closed-form norm bound is checked for the {} case",
                case.name()
            )))
        }
    };
    let s = oscillation_stats(op);
    let lhs = forward_threshold(op, case, theta_count)?;
    let rhs = frobenius_bound(op, case);
    let mut inputs = vec![
        ("p", op.period() as f64),
        ("omega_a", s.omega_a),
        ("omega_b", s.omega_b),
        ("omega_bc", s.omega_bc),
        ("theta_count", theta_count as f64),
    ];
    if let CaseTag::ConstantDifference { k } = case {
        inputs.push(("k", k));
    }
    Ok(BorgCertificate::new(statement, lhs, rhs, inputs))
}

/// Options for [`verify_all`].
#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub theta_count: usize,
    /// Theta count for band extraction.
    pub band_theta_count: usize,
    pub grid: GridChoice,
    /// Converse test level; `None` uses `eps*`.
    pub epsilon: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            theta_count: crate::spectral::DEFAULT_FIELD_THETAS,
            band_theta_count: crate::spectral::DEFAULT_BAND_THETAS,
            grid: GridChoice::default(),
            epsilon: None,
        }
    }
}

/// One certificate per statement, in [`Statement::ALL`] order; statements
/// outside the operator's case are marked not applicable.
pub fn verify_all(op: &PeriodicJacobiOperator, opts: &VerifyOptions, evaluator: &dyn FieldEvaluator) -> Result<Vec<BorgCertificate>> {
    let case = effective_case(op);
    let plain = classify_case(op);
    let eps_star = forward_threshold(op, case, opts.theta_count)?;
    let constant = eps_star <= ZERO_THRESHOLD && oscillation_stats(op).omega_a <= ZERO_THRESHOLD;
    let set = SymbolSchurSet::new(op, opts.theta_count)?;

    let forward_stmt = Statement::forward_for(case);
    let converse_stmt = Statement::converse_for(case);
    let mut forward_report: Option<RegionReport> = None;
    let mut out = Vec::with_capacity(Statement::ALL.len());

    let forward = if eps_star <= ZERO_THRESHOLD {
        verify_forward_with(op, opts.theta_count, opts.grid, evaluator)?
    } else {
        let report = decide_on_set(&set, eps_star, opts.grid, crate::connectivity::MAX_REFINEMENTS, evaluator)?.report;
        let s = oscillation_stats(op);
        let mut inputs = vec![
            ("eps_star", eps_star),
            ("p", op.period() as f64),
            ("omega_a", s.omega_a),
            ("omega_b", s.omega_b),
            ("omega_c", s.omega_c),
            ("theta_count", opts.theta_count as f64),
        ];
        if let CaseTag::ConstantDifference { k } = case {
            inputs.push(("k", k));
        }
        let bound = frobenius_bound(op, case);
        if case != CaseTag::ConstantOffDiag {
            inputs.push(("norm_bound", bound));
        }
        let mut cert = forward_from_report(forward_stmt, inputs, &report, case, bound, eps_star);
        cert.notes.extend(ellipse_note(op, case));
        forward_report = Some(report);
        cert
    };

    let converse = if constant {
        let mut c = BorgCertificate::new(converse_stmt, 0.0, 0.0, vec![("omega_a", 0.0)]);
        c.notes.push(constant_note());
        c
    } else {
        let eps = opts.epsilon.unwrap_or(eps_star);
        let report = match (&forward_report, opts.epsilon) {
            (Some(r), None) => r.clone(),
            _ => decide_on_set(&set, eps, opts.grid, crate::connectivity::MAX_REFINEMENTS, evaluator)?.report,
        };
        converse_from_report(op, case, eps, opts.theta_count, &report)
    };

    let gaps = if op.is_self_adjoint() {
        Some(verify_selfadjoint_gaps(op, opts.band_theta_count)?)
    } else {
        None
    };
    let bound = match plain {
        CaseTag::ConstantDifference { .. } | CaseTag::General => Some(verify_norm_bound(op, opts.theta_count)?),
        _ => None,
    };

    for st in Statement::ALL {
        let cert = if st == forward_stmt {
            forward.clone()
        } else if st == converse_stmt {
            converse.clone()
        } else if st == Statement::GeneralForward && case == CaseTag::FirstOrderFd {
            let mut c = forward.clone();
            c.statement = st;
            c
        } else if st == Statement::GeneralConverse && case == CaseTag::FirstOrderFd {
            let mut c = converse.clone();
            c.statement = st;
            let kappa = oscillation_stats(op).max_cb_gap;
            c.rhs = 2.0 * (c.input("eps").unwrap_or(0.0) + kappa) * (op.period() - 1) as f64;
            c.inequality_holds = holds(c.lhs, c.rhs);
            if c.status == CertStatus::Pass || c.status == CertStatus::Fail {
                c.status = if c.inequality_holds { CertStatus::Pass } else { CertStatus::Fail };
            }
            c
        } else if let Some(g) = gaps.as_ref().and_then(|g| g.iter().find(|c| c.statement == st)) {
            g.clone()
        } else if let Some(b) = bound.as_ref().filter(|b| b.statement == st) {
            b.clone()
        } else {
            let why = match st {
                Statement::GapOffDiagonal | Statement::GapDiagonal | Statement::GapSum => "operator is not self-adjoint",
                _ => "operator is outside this statement's case",
            };
            BorgCertificate::not_applicable(st, why)
        };
        out.push(cert);
    }
    if constant {
        for c in out.iter_mut() {
            if !c.notes.iter().any(|n| n.starts_with("constant coefficients")) {
                c.notes.push(constant_note());
            }
        }
    }
    Ok(out)
}
