//! The `check`, `transfer` and `homotopy` subcommands, shared by the CLI and
//! the C bindings. Each produces a [`Report`]; verification failures are
//! recorded in it, only unusable input is an error.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bv::{Action, BVContext};
use crate::error::{Error, Result};
use crate::fixtures::random_series;
use crate::hpl::{free_action, verify_sdr};
use crate::lambda::{equivalence_check, lambda_to_action, LambdaOps};
use crate::linalg::HodgeSplit;
use crate::problem::{parse_terms, term_specs, Problem, ProblemAction, TermSpec};
use crate::rational::format_rational;
use crate::report::{CheckResult, ValidationReport};
use crate::series::FormalSeries;
use crate::transfer::{Route, Transfer};

/// Process exit codes.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Exit code for an error that prevented a report.
pub fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::Parse { .. } | Error::Structural(_) | Error::Precondition(_) => EXIT_INPUT,
        Error::Internal(_) | Error::Divergence { .. } => EXIT_FAIL,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouteChoice {
    One(Route),
    All,
}

impl std::str::FromStr for RouteChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "all" {
            Ok(RouteChoice::All)
        } else {
            s.parse().map(RouteChoice::One)
        }
    }
}

#[derive(Debug, Clone)]
pub struct CommandOptions {
    pub route: RouteChoice,
    /// Seed for the random sample inputs of the identity sweeps.
    pub seed: u64,
    /// Monomial length bound of the exhaustive identity sweeps; 0 disables
    /// the sweeps.
    pub exhaustive_len: usize,
    /// Number of random sample inputs added to each sweep.
    pub samples: usize,
}

impl Default for CommandOptions {
    fn default() -> Self {
        CommandOptions {
            route: RouteChoice::One(Route::Hpl),
            seed: 0,
            exhaustive_len: 2,
            samples: 8,
        }
    }
}

/// A basis vector of the adapted basis in original coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdaptedVector {
    pub name: String,
    pub degree: i32,
    /// Nonzero original coordinates, in basis order.
    pub coordinates: Vec<Coordinate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Coordinate {
    pub element: String,
    pub coefficient: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub command: String,
    /// "pass" or "fail".
    pub status: String,
    pub max_weight: u32,
    pub checks: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qme_residual: Option<Vec<TermSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adapted_basis: Option<Vec<AdaptedVector>>,
    /// Effective action over the homology basis (the first `adapted_basis`
    /// entries); with route `all`, the HPL result.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective_action: Option<Vec<TermSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub routes: Option<BTreeMap<String, Vec<TermSpec>>>,
    /// K₁(e^{S_int/ħ}) in the adapted basis.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<TermSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_residual: Option<Vec<TermSpec>>,
}

impl Report {
    fn new(command: &str, problem: &Problem) -> Self {
        Report {
            command: command.to_string(),
            status: String::new(),
            max_weight: problem.window.max_weight(),
            checks: Vec::new(),
            qme_residual: None,
            adapted_basis: None,
            effective_action: None,
            routes: None,
            witness: None,
            witness_residual: None,
        }
    }

    fn finish(mut self, report: ValidationReport) -> Self {
        self.status = if report.all_passed() { "pass" } else { "fail" }.to_string();
        self.checks = report.checks;
        self
    }

    pub fn passed(&self) -> bool {
        self.status == "pass"
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Space validation plus the action's own checks. Returns the action when
/// it is well formed; the master equation is checked separately.
fn prepare(problem: &Problem, report: &mut ValidationReport) -> Result<Option<Action>> {
    let space = &problem.space;
    let validation = space.validate()?;
    let space_ok = validation.all_passed();
    report.extend(validation);
    if !space_ok {
        return Ok(None);
    }
    let window = problem.window;
    let free = free_action(&space.q, &space.omega, window);
    match &problem.action {
        ProblemAction::Series(s) => {
            let quadratic = s.filter(|t| t.genus == 0 && t.mono.len() == 2);
            let free_ok = quadratic.is_zero() || quadratic == free;
            report.push(
                "free_part_matches_differential",
                free_ok,
                if free_ok {
                    "0".to_string()
                } else {
                    quadratic.sub(&free)?.summary()
                },
                (!free_ok).then(|| format!("expected {free}")),
            );
            if !free_ok {
                return Ok(None);
            }
            let s_int = s.filter(|t| !(t.genus == 0 && t.mono.len() == 2));
            match Action::new(free, s_int) {
                Ok(action) => {
                    report.pass("action_well_formed");
                    Ok(Some(action))
                }
                Err(e) => {
                    report.push("action_well_formed", false, "invalid", Some(e.to_string()));
                    Ok(None)
                }
            }
        }
        ProblemAction::Lambda(ops) => {
            let validation = ops.validate(&space.omega);
            let ok = validation.all_passed();
            report.extend(validation);
            let q_ops = LambdaOps::from_differential(&space.q);
            let linear: Vec<_> = ops
                .entries()
                .into_iter()
                .filter(|e| e.genus == 0 && e.inputs.len() == 1)
                .collect();
            let q_ok = linear == q_ops.entries();
            report.push(
                "lambda_q_matches_differential",
                q_ok,
                if q_ok { "0" } else { "nonzero" },
                (!q_ok).then(|| "genus-0 unary operation differs from the q_map".to_string()),
            );
            if !ok || !q_ok {
                return Ok(None);
            }
            Ok(Some(lambda_to_action(ops, &space.omega, window)?))
        }
    }
}

fn qme_check(
    problem: &Problem,
    action: &Action,
    report: &mut ValidationReport,
) -> Result<FormalSeries> {
    let ctx = BVContext::new(&problem.space.omega, problem.window)?;
    let residual = ctx.qme_residual(action)?;
    report.push("qme_residual", residual.is_zero(), residual.summary(), None);
    Ok(residual)
}

/// Validates the space and the action and checks the master equation (or,
/// for `λ` input, the main identity and its equivalence with it).
pub fn cmd_check(problem: &Problem) -> Result<Report> {
    let mut out = Report::new("check", problem);
    let mut report = ValidationReport::new();
    if let Some(action) = prepare(problem, &mut report)? {
        match &problem.action {
            ProblemAction::Series(_) => {
                let residual = qme_check(problem, &action, &mut report)?;
                out.qme_residual = Some(term_specs(&residual));
            }
            ProblemAction::Lambda(ops) => {
                report.extend(equivalence_check(
                    ops,
                    &problem.space.omega,
                    problem.window,
                )?);
                let residual =
                    BVContext::new(&problem.space.omega, problem.window)?.qme_residual(&action)?;
                out.qme_residual = Some(term_specs(&residual));
            }
        }
    }
    Ok(out.finish(report))
}

fn adapted_basis(split: &HodgeSplit) -> Vec<AdaptedVector> {
    let adapted = split.adapted();
    let original = split.original();
    (0..adapted.len())
        .map(|k| AdaptedVector {
            name: adapted.name(k).to_string(),
            degree: adapted.degree(k),
            coordinates: split
                .adapted_vector(k)
                .iter()
                .enumerate()
                .filter(|(_, c)| !num_traits::Zero::is_zero(*c))
                .map(|(i, c)| Coordinate {
                    element: original.name(i).to_string(),
                    coefficient: format_rational(c),
                })
                .collect(),
        })
        .collect()
}

/// Runs validation and the master equation; on success returns the transfer.
fn prepare_transfer(
    problem: &Problem,
    out: &mut Report,
    report: &mut ValidationReport,
) -> Result<Option<Transfer>> {
    let Some(action) = prepare(problem, report)? else {
        return Ok(None);
    };
    let residual = qme_check(problem, &action, report)?;
    if !residual.is_zero() {
        out.qme_residual = Some(term_specs(&residual));
        return Ok(None);
    }
    let transfer = Transfer::new(&problem.space, &action)?;
    out.adapted_basis = Some(adapted_basis(transfer.split()));
    Ok(Some(transfer))
}

fn samples(
    basis: &std::sync::Arc<crate::linalg::GradedBasis>,
    problem: &Problem,
    options: &CommandOptions,
    salt: u64,
) -> Vec<FormalSeries> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ salt);
    let max_len = problem.window.max_weight() as usize;
    (0..options.samples)
        .map(|_| {
            random_series(
                &mut rng,
                basis,
                problem.window,
                3,
                0..=1,
                0..=max_len.min(4),
            )
        })
        .collect()
}

/// Identity sweeps on the retracts, the transferred differential and the
/// morphism property of the projection.
fn sweeps(
    transfer: &Transfer,
    w: &FormalSeries,
    problem: &Problem,
    options: &CommandOptions,
    report: &mut ValidationReport,
) -> Result<()> {
    if options.exhaustive_len == 0 {
        return Ok(());
    }
    let big = samples(transfer.big_context().basis(), problem, options, 1);
    let small = samples(transfer.small_basis(), problem, options, 2);
    let len = options.exhaustive_len;
    report.extend_prefixed(
        "sdr_delta1",
        verify_sdr(&transfer.retract_one(), &big, len)?,
    );
    report.extend_prefixed(
        "sdr_delta2",
        verify_sdr(&transfer.retract_two(), &big, len)?,
    );
    let mut e2_failures = 0usize;
    let mut e2_first = None;
    let mut inputs = small.clone();
    for m in crate::bv::monomials_up_to(transfer.small_basis(), len) {
        let mut g = transfer.small_context().zero();
        g.add_term(0, m, crate::rational::int(1));
        inputs.push(g);
    }
    let mut square_failures = 0usize;
    let max = problem.window.max_weight();
    for g in &inputs {
        let e2 = transfer.transferred_differential(g)?;
        // {W, g} with g linear reads W one weight above the window
        let check = if g.min_weight().is_some_and(|m| m <= 1) {
            max - 1
        } else {
            max
        };
        let d = e2
            .sub(&transfer.expected_transferred_differential(w, g)?)?
            .truncated(check);
        if !d.is_zero() {
            e2_failures += 1;
            e2_first.get_or_insert_with(|| format!("input {g}: residual {}", d.summary()));
        }
        if !transfer.transferred_differential(&e2)?.is_zero() {
            square_failures += 1;
        }
    }
    report.push(
        "transferred_differential_matches",
        e2_failures == 0,
        format!("{e2_failures} failing inputs"),
        e2_first,
    );
    report.push(
        "transferred_differential_squares_to_zero",
        square_failures == 0,
        format!("{square_failures} failing inputs"),
        None,
    );
    report.extend(transfer.morphism_check_with(
        transfer.small_context(),
        w,
        &small,
        len,
        problem.window.max_weight(),
    )?);
    Ok(())
}

/// Computes the effective action along the chosen route(s) and verifies it.
pub fn cmd_transfer(problem: &Problem, options: &CommandOptions) -> Result<Report> {
    let mut out = Report::new("transfer", problem);
    let mut report = ValidationReport::new();
    let Some(transfer) = prepare_transfer(problem, &mut out, &mut report)? else {
        return Ok(out.finish(report));
    };
    let routes: Vec<Route> = match options.route {
        RouteChoice::One(r) => vec![r],
        RouteChoice::All => Route::ALL.to_vec(),
    };
    let mut results = Vec::new();
    for route in routes {
        let result = transfer.effective_action(route)?;
        report.extend_prefixed(route.as_str(), result.verification.clone());
        results.push(result);
    }
    let primary = results[0].w.clone();
    if options.route == RouteChoice::All {
        let of = |route: Route| {
            &results
                .iter()
                .find(|r| r.route == route)
                .expect("all routes ran")
                .w
        };
        let hpl = of(Route::Hpl);
        let d = of(Route::Feynman).sub(hpl)?;
        report.push("route_agreement_feynman", d.is_zero(), d.summary(), None);
        // the alternative formula only sees terms of polynomial degree ≥ 1
        let d = of(Route::Alt).sub(&hpl.filter(|t| !t.mono.is_empty()))?;
        report.push("route_agreement_alt", d.is_zero(), d.summary(), None);
        out.routes = Some(
            results
                .iter()
                .map(|r| (r.route.as_str().to_string(), term_specs(&r.w)))
                .collect(),
        );
    }
    sweeps(&transfer, &primary, problem, options, &mut report)?;
    out.effective_action = Some(term_specs(&primary));
    Ok(out.finish(report))
}

/// Computes the exactness witness K₁(e^{S_int/ħ}) and checks
/// e^{I(W)/ħ} − e^{S_int/ħ} = Q₁K₁(e^{S_int/ħ}). A claimed effective action
/// in the problem file replaces the computed one.
pub fn cmd_homotopy(problem: &Problem, _options: &CommandOptions) -> Result<Report> {
    let mut out = Report::new("homotopy", problem);
    let mut report = ValidationReport::new();
    let Some(transfer) = prepare_transfer(problem, &mut out, &mut report)? else {
        return Ok(out.finish(report));
    };
    let window = problem.window;
    let (w, exp_w, check_weight) = match &problem.claimed_effective_action {
        Some(terms) => {
            let w = parse_terms(
                terms,
                transfer.small_basis(),
                window,
                "effective_action term",
            )?;
            let exp_w = w.genus_shift(-1)?.exp()?;
            // e^{W/ħ} is determined by W on the window only up to two weights below
            (w, exp_w, window.max_weight().saturating_sub(2))
        }
        None => (
            transfer.effective_action(Route::Hpl)?.w,
            transfer.exp_effective_action()?,
            window.max_weight(),
        ),
    };
    let witness = transfer.homotopy_witness(&exp_w)?;
    let residual = witness.residual.truncated(check_weight);
    report.push(
        "homotopy_residual",
        residual.is_zero(),
        residual.summary(),
        None,
    );
    report.push(
        "witness_projection_vanishes",
        witness.p1_of_witness.is_zero(),
        witness.p1_of_witness.summary(),
        None,
    );
    report.push(
        "witness_homotopy_vanishes",
        witness.k1_of_witness.is_zero(),
        witness.k1_of_witness.summary(),
        None,
    );
    out.effective_action = Some(term_specs(&w));
    out.witness = Some(term_specs(&witness.f_witness));
    out.witness_residual = Some(term_specs(&residual));
    Ok(out.finish(report))
}
