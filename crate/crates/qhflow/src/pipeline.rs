//! Orchestration of the full analysis: hypotheses, normal form,
//! classification, monodromy and the center stage, assembled into a report.

use crate::error::{Error, Result};
use crate::nform::{
    aiif_leading_part, classify_aiif, normal_form, second_stage, NormalFormResult, Verdict,
    VerdictKind,
};
use crate::orbit::{center_verdict, generalized_trig, poincare_integral, CenterVerdict, TrigTable};
use crate::qhgrade::{
    decompose_field, hamiltonian_potential, index_set_complement, newton_type_candidates, QhType,
};
use crate::ratpoly::{PlanarField, SparsePolynomial, EXPONENT_CAP};
use crate::report::{
    parse_rational, CenterJson, HypothesisJson, MonodromyJson, MonomialRecord, NormalFormDegree,
    Report, ReportConfig, SystemSpec, VerdictJson, REPORT_SCHEMA_VERSION,
};
use crate::structure::{hypothesis_report, HypothesisReport};
use crate::{rat, RatPoly, Rational};

/// Which command drives the center stage.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AnalysisMode {
    /// Full classification; center stage runs when monodromic and reduced to
    /// a single dissipative term.
    Classify,
    /// Verdict-focused: a center block is always produced when monodromic.
    Center,
}

#[derive(Clone, Debug)]
pub struct AnalyzeOptions {
    pub degree: Option<i64>,
    pub tol: f64,
    pub qh_type: Option<QhType>,
    pub mode: AnalysisMode,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions { degree: None, tol: 1e-9, qh_type: None, mode: AnalysisMode::Classify }
    }
}

/// Full analysis output: the serializable report plus the machine pieces the
/// CLI and tests need (exit codes, orbit CSV emission).
pub struct Analysis {
    pub report: Report,
    pub verdict: Verdict<Rational>,
    pub nf: NormalFormResult<Rational>,
    pub center: Option<CenterVerdict>,
    pub orbit: Option<OrbitArtifacts>,
}

/// Data to re-emit the center-stage orbit as CSV.
pub struct OrbitArtifacts {
    pub table: TrigTable,
    pub integrand: RatPoly,
    pub integrand_name: String,
}

/// Build an exact polynomial from monomial records; duplicates are summed.
pub fn poly_from_records(records: &[MonomialRecord]) -> Result<RatPoly> {
    let mut p = RatPoly::zero();
    for m in records {
        if m.x > EXPONENT_CAP || m.y > EXPONENT_CAP {
            return Err(Error::ExponentOverflow(u64::from(m.x.max(m.y)), EXPONENT_CAP));
        }
        let c = parse_rational(&m.c)?;
        p.insert_add(crate::ratpoly::Exp::new(m.x, m.y), c);
    }
    Ok(p)
}

pub fn field_from_spec(spec: &SystemSpec) -> Result<PlanarField<Rational>> {
    let p = poly_from_records(&spec.p)?;
    let q = poly_from_records(&spec.q)?;
    let f = PlanarField::new(p, q);
    if f.is_zero() {
        return Err(Error::Parse("the system is identically zero".into()));
    }
    Ok(f)
}

/// Resolve the quasi-homogeneous type: explicit option, then the input file,
/// then the Newton-diagram suggestion — which is never applied silently: a
/// unique candidate is taken with a note, several candidates are an error.
pub fn resolve_type(
    spec: &SystemSpec,
    opts: &AnalyzeOptions,
    field: &PlanarField<Rational>,
) -> Result<(QhType, Option<String>)> {
    if let Some(t) = opts.qh_type {
        return Ok((t, None));
    }
    if let Some((a, b)) = spec.qh_type {
        return Ok((QhType::new(a, b)?, None));
    }
    let cands = newton_type_candidates(field);
    match cands.len() {
        1 => {
            let t = cands[0];
            Ok((t, Some(format!("type {t} selected automatically from the Newton diagram"))))
        }
        _ => Err(Error::Parse(format!(
            "no type given and the Newton diagram is ambiguous; candidates: {}",
            cands.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
        ))),
    }
}

/// Default truncation degree: `r + 2(r+|t|) + max(trivial degrees ∪ {0})`.
pub fn default_truncation(t: QhType, r: i64) -> i64 {
    let bound = (t.t1() * t.t2() - t.weight()).max(0);
    let m = index_set_complement(t, bound).last().copied().unwrap_or(0);
    r + 2 * (r + t.weight()) + m
}

fn poly_to_string(p: &RatPoly) -> String {
    p.to_string()
}

fn verdict_json(
    verdict: &Verdict<Rational>,
    leading: Option<&RatPoly>,
    d: i64,
) -> VerdictJson {
    let mut notes = verdict.notes.clone();
    notes.push(format!("verdict holds up to truncation degree {d}"));
    match &verdict.kind {
        VerdictKind::IntegrableUpToD => VerdictJson {
            kind: "integrable_up_to_degree".into(),
            n: None,
            exponent: None,
            witness_degree: None,
            formal_iif: verdict.formal_iif,
            factor_leading_part: None,
            notes,
        },
        VerdictKind::Aiif { n, exponent } => {
            notes.push(
                "the factor is (leading part)^exponent up to a multiplicative unit series \
                 beyond the truncation degree"
                    .into(),
            );
            VerdictJson {
                kind: "aiif".into(),
                n: Some(*n),
                exponent: Some(exponent.to_string()),
                witness_degree: None,
                formal_iif: verdict.formal_iif,
                factor_leading_part: leading.map(poly_to_string),
                notes,
            }
        }
        VerdictKind::NoAiif { witness_degree } => VerdictJson {
            kind: "no_aiif".into(),
            n: None,
            exponent: None,
            witness_degree: Some(*witness_degree),
            formal_iif: verdict.formal_iif,
            factor_leading_part: None,
            notes,
        },
    }
}

fn hypothesis_json(hr: &HypothesisReport) -> HypothesisJson {
    HypothesisJson {
        h1: hr.h1,
        h2: hr.h2,
        h2_checked_degrees: hr.h2_checked_degrees.clone(),
        monodromic: hr.monodromic,
        sign: hr.sign,
        n0: hr.n0,
    }
}

fn normal_form_json(nf: &NormalFormResult<Rational>) -> Vec<NormalFormDegree> {
    nf.corange_bases
        .iter()
        .map(|(degree, basis)| {
            let coeffs = nf.mu.get(degree).cloned().unwrap_or_default();
            NormalFormDegree {
                degree: *degree,
                corange_basis: basis
                    .iter()
                    .map(|e| SparsePolynomial::monomial(e.i, e.j, rat(1, 1)).to_string())
                    .collect(),
                coefficients: coeffs.iter().map(|c| c.to_string()).collect(),
            }
        })
        .collect()
}

/// Run the complete pipeline on a parsed system.
pub fn analyze(spec: &SystemSpec, opts: &AnalyzeOptions) -> Result<Analysis> {
    let field = field_from_spec(spec)?;
    let (t, type_note) = resolve_type(spec, opts, &field)?;
    let graded = decompose_field(&field, t);
    let r = graded.lowest_degree().ok_or(Error::ZeroPolynomial)?;
    let h = hamiltonian_potential(&graded.component(r), t, r)?;
    let hr = hypothesis_report(&h, t)?;
    if !hr.h1 {
        return Err(Error::Hypothesis { which: "H1" });
    }
    if !hr.h2 {
        return Err(Error::Hypothesis { which: "H2" });
    }
    let d = opts.degree.or(spec.truncation_degree).unwrap_or_else(|| default_truncation(t, r));
    let nf = normal_form(&graded, &h, d)?;
    let ss = second_stage(&nf)?;
    let verdict = classify_aiif(&ss);
    let leading = match &verdict.kind {
        VerdictKind::Aiif { .. } => Some(aiif_leading_part(&ss, &verdict)?.0),
        _ => None,
    };

    let mut notes: Vec<String> = Vec::new();
    if let Some(n) = type_note {
        notes.push(n);
    }

    let mut center_json: Option<CenterJson> = None;
    let mut center_kind: Option<CenterVerdict> = None;
    let mut orbit_art: Option<OrbitArtifacts> = None;

    let aiif_n = match &verdict.kind {
        VerdictKind::Aiif { n, .. } => Some(*n),
        _ => None,
    };

    if hr.monodromic {
        if let Some(n) = aiif_n {
            // First-return machinery on the sign-adjusted system.
            let sign = hr.sign;
            let h_pos = if sign > 0 { h.clone() } else { h.scalar_mul(&rat(-1, 1)) };
            let mu = ss.mu_poly(r + n);
            let integrand = if sign > 0 { mu.clone() } else { mu.scalar_mul(&rat(-1, 1)) };
            let table = generalized_trig(&h_pos, t, opts.tol.max(1e-9))?;
            let ir = poincare_integral(&table, &integrand)?;
            let cv = center_verdict(sign, &ir, opts.tol);
            center_json = Some(CenterJson {
                i: ir.value,
                abs_error_estimate: ir.abs_error_estimate,
                certificate: ir.exact_zero_certificate,
                verdict: cv.to_string(),
                notes: vec![format!(
                    "first-return integral on the level through (1,0) of the sign-adjusted Hamiltonian"
                )],
            });
            center_kind = Some(cv);
            orbit_art = Some(OrbitArtifacts { table, integrand, integrand_name: "mu".into() });
        } else if opts.mode == AnalysisMode::Center {
            match &verdict.kind {
                VerdictKind::IntegrableUpToD => {
                    center_json = Some(CenterJson {
                        i: 0.0,
                        abs_error_estimate: 0.0,
                        certificate: true,
                        verdict: CenterVerdict::Center.to_string(),
                        notes: vec![format!(
                            "every dissipative coefficient vanishes up to degree {d}; a monodromic integrable point is a center"
                        )],
                    });
                    center_kind = Some(CenterVerdict::Center);
                }
                _ => {
                    center_json = Some(CenterJson {
                        i: 0.0,
                        abs_error_estimate: 0.0,
                        certificate: false,
                        verdict: CenterVerdict::Inconclusive.to_string(),
                        notes: vec![format!(
                            "no single-term reduction up to degree {d}; the first-return machinery does not apply"
                        )],
                    });
                    center_kind = Some(CenterVerdict::Inconclusive);
                }
            }
        }
    } else if opts.mode == AnalysisMode::Center {
        return Err(Error::NotMonodromic(
            "the Hamiltonian changes sign or vanishes off the origin".into(),
        ));
    }

    let report = Report {
        schema_version: REPORT_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        input: spec.clone(),
        config: ReportConfig { degree: d, tol: opts.tol },
        qh_type: (t.t1(), t.t2()),
        r,
        h: h.to_string(),
        hypothesis: hypothesis_json(&hr),
        normal_form: normal_form_json(&ss),
        verdict: verdict_json(&verdict, leading.as_ref(), d),
        monodromy: MonodromyJson { monodromic: hr.monodromic, sign: hr.sign },
        center: center_json,
        notes,
    };

    Ok(Analysis { report, verdict, nf: ss, center: center_kind, orbit: orbit_art })
}
