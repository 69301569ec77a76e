//! One function per command, each delegating to the library.

use flatcert::carnot::SpencerComplex;
use flatcert::flatness::{contact_flatness, engel_flatness, g235_flatness};
use flatcert::riemann::{gaussian_curvature, riemannian_flatness};
use flatcert::subriemann::{word_name, SubRiemannian};
use flatcert::symexpr::{is_zero, Point};
use flatcert::{CarnotAlgebra, SampleConfig, ZeroVerdict};
use serde_json::{json, Value};

use crate::report::{flatness_outcome, point_json, Outcome, Status};
use crate::spec::{parse_point, parse_vector, AlgebraFile, ManifoldSpec};
use crate::CliError;

fn module(e: impl std::fmt::Display) -> CliError {
    CliError::Module(e.to_string())
}

fn growth_text(g: &[usize]) -> String {
    format!("({})", g.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
}

fn points(sr: &SubRiemannian, at: Option<&str>, cfg: &SampleConfig) -> Result<Vec<Point>, CliError> {
    match at {
        Some(text) => Ok(vec![parse_point(text, sr.dim())?]),
        None => sr.sample_points(cfg).map_err(module),
    }
}

pub fn riem_flat(spec: &ManifoldSpec, cfg: &SampleConfig) -> Result<Outcome, CliError> {
    riemannian_flatness(&spec.metric(cfg)?, cfg).map(flatness_outcome).map_err(module)
}

pub fn gauss(spec: &ManifoldSpec, cfg: &SampleConfig) -> Result<Outcome, CliError> {
    let g = spec.metric(cfg)?;
    let k = gaussian_curvature(&g).map_err(module)?;
    let zero = is_zero(&k, g.space().chart(), cfg).map_err(module)?;
    let vanishes = match zero {
        ZeroVerdict::ProvenZero => "proven",
        ZeroVerdict::NumericallyZero { .. } => "numeric",
        _ => "no",
    };
    Ok(Outcome::new(
        Status::Success,
        json!({ "gaussian_curvature": k.to_string(), "vanishes": vanishes }),
        vec![format!("K = {k}"), format!("K vanishes identically: {vanishes}")],
    ))
}

pub fn growth(spec: &ManifoldSpec, cfg: &SampleConfig, at: Option<&str>) -> Result<Outcome, CliError> {
    let sr = spec.sub_riemannian()?;
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for p in points(&sr, at, cfg)? {
        let g = sr.growth_vector(&p).map_err(module)?;
        lines.push(format!("{} at {p}", growth_text(&g)));
        rows.push(json!({ "point": point_json(&p), "growth": g }));
    }
    Ok(Outcome::new(Status::Success, json!({ "points": rows }), lines))
}

pub fn equiregular(spec: &ManifoldSpec, cfg: &SampleConfig) -> Result<Outcome, CliError> {
    let sr = spec.sub_riemannian()?;
    let rep = sr.equiregular_check(&sr.sample_points(cfg).map_err(module)?).map_err(module)?;
    let classes: Vec<Value> = rep
        .classes
        .iter()
        .map(|(g, pts)| json!({ "growth": g, "count": pts.len(), "example": point_json(&pts[0]) }))
        .collect();
    let mut lines = vec![format!("equiregular: {}", rep.is_equiregular())];
    for (g, pts) in &rep.classes {
        lines.push(format!("  {} at {} points, e.g. {}", growth_text(g), pts.len(), pts[0]));
    }
    let status = if rep.is_equiregular() { Status::Success } else { Status::Fail };
    Ok(Outcome::new(status, json!({ "equiregular": rep.is_equiregular(), "classes": classes }), lines))
}

pub fn symbol(spec: &ManifoldSpec, cfg: &SampleConfig, at: Option<&str>) -> Result<Outcome, CliError> {
    let sr = spec.sub_riemannian()?;
    let p = points(&sr, at, cfg)?.into_iter().next().ok_or_else(|| CliError::Module("no sample point".into()))?;
    let sym = sr.symbol_at_point(&p).map_err(module)?;
    let words: Vec<String> = sym.words.iter().map(|w| word_name(w, sr.names())).collect();
    let mut lines = vec![format!("symbol at {p}"), format!("adapted basis: {}", words.join(", "))];
    let algebra = match &sym.exact {
        Some(alg) => {
            for (i, j, k, c) in alg.nonzero_brackets() {
                lines.push(format!("  [{}, {}] = {c} {}", words[i], words[j], words[k]));
            }
            serde_json::to_value(AlgebraFile::from_algebra(alg, "")).map_err(module)?
        }
        None => {
            let alg = &sym.numeric;
            for (i, j, k, c) in alg.nonzero_brackets() {
                lines.push(format!("  [{}, {}] = {c:e} {}", words[i], words[j], words[k]));
            }
            json!({
                "strata": alg.strata(),
                "brackets": alg.nonzero_brackets().iter().map(|(i, j, k, c)| json!([i, j, k, c])).collect::<Vec<_>>(),
            })
        }
    };
    let result = json!({
        "point": point_json(&p),
        "words": words,
        "exact": sym.exact.is_some(),
        "algebra": algebra,
    });
    Ok(Outcome::new(Status::Success, result, lines))
}

pub fn constant_symbol(spec: &ManifoldSpec, cfg: &SampleConfig) -> Result<Outcome, CliError> {
    let sr = spec.sub_riemannian()?;
    let rep = sr.constant_symbol_check(&sr.sample_points(cfg).map_err(module)?).map_err(module)?;
    let status = match rep.constant {
        Some(true) => Status::Success,
        Some(false) => Status::Fail,
        None => Status::Undecided,
    };
    let constant = rep.constant.map_or("undecided".to_string(), |c| c.to_string());
    let mut lines = vec![
        format!("growth {} class {}", growth_text(&rep.growth), rep.class),
        format!("constant symbol: {constant}"),
    ];
    lines.extend(rep.details.iter().map(|d| format!("  {d}")));
    let result = json!({
        "growth": rep.growth,
        "class": rep.class.to_string(),
        "constant": rep.constant,
        "details": rep.details,
    });
    Ok(Outcome::new(status, result, lines))
}

pub fn engel_flat(spec: &ManifoldSpec, cfg: &SampleConfig) -> Result<Outcome, CliError> {
    engel_flatness(&spec.sub_riemannian()?, cfg).map(flatness_outcome).map_err(module)
}

pub fn contact_flat(spec: &ManifoldSpec, cfg: &SampleConfig) -> Result<Outcome, CliError> {
    contact_flatness(&spec.sub_riemannian()?, cfg).map(flatness_outcome).map_err(module)
}

pub fn g235_flat(spec: &ManifoldSpec, cfg: &SampleConfig) -> Result<Outcome, CliError> {
    g235_flatness(&spec.sub_riemannian()?, cfg).map(flatness_outcome).map_err(module)
}

// ------------------------------------------------------------ algebra commands

pub fn carnot_free(m: usize, s: usize) -> Result<Outcome, CliError> {
    let alg = CarnotAlgebra::free_nilpotent(m, s).map_err(module)?;
    let file = AlgebraFile::from_algebra(&alg, &format!("free nilpotent ({m}, {s})"));
    let mut lines = vec![format!("free nilpotent algebra on {m} generators, step {s}, strata {:?}", alg.strata())];
    for (i, j, k, c) in alg.nonzero_brackets() {
        lines.push(format!("  [{}, {}] = {c} {}", alg.names()[i], alg.names()[j], alg.names()[k]));
    }
    Ok(Outcome::new(Status::Success, serde_json::to_value(file).map_err(module)?, lines))
}

pub fn carnot_bch(alg: &CarnotAlgebra, a: &str, b: &str) -> Result<Outcome, CliError> {
    let (a, b) = (parse_vector(a)?, parse_vector(b)?);
    for v in [&a, &b] {
        if v.len() != alg.dim() {
            return Err(CliError::Usage(format!("vector has {} entries, algebra dimension is {}", v.len(), alg.dim())));
        }
    }
    let c = alg.bch(&a, &b);
    let text: Vec<String> = c.iter().map(|q| q.to_string()).collect();
    Ok(Outcome::new(Status::Success, json!({ "product": text }), vec![format!("a * b = ({})", text.join(", "))]))
}

pub fn carnot_isom(alg: &CarnotAlgebra) -> Result<Outcome, CliError> {
    let d = alg.isometry_algebra().dim();
    Ok(Outcome::new(
        Status::Success,
        json!({ "dimension": d }),
        vec![format!("graded isometric derivations: dimension {d}")],
    ))
}

pub fn carnot_spencer(alg: &CarnotAlgebra, max_degree: usize) -> Result<Outcome, CliError> {
    let cx = SpencerComplex::new(alg).map_err(module)?;
    let mut rows = Vec::new();
    let mut lines = vec![format!("g0 dimension {}", cx.g0().len())];
    let mut all_zero = true;
    for k in 0..=max_degree {
        let d = cx.differential(k);
        let dd_zero = (&cx.differential(k + 1) * &d).is_zero();
        all_zero &= dd_zero;
        lines.push(format!("  C^{k}: dim {}, rank d_{k} = {}, d d = 0: {dd_zero}", cx.cochain_dim(k), d.rank()));
        rows.push(json!({ "degree": k, "cochain_dim": cx.cochain_dim(k), "rank": d.rank(), "dd_zero": dd_zero }));
    }
    let status = if all_zero { Status::Success } else { Status::Fail };
    Ok(Outcome::new(status, json!({ "g0_dim": cx.g0().len(), "degrees": rows }), lines))
}

pub fn carnot_validate(alg: &CarnotAlgebra) -> Result<Outcome, CliError> {
    let v = alg.validate();
    let checks: Vec<Value> = v.checks.iter().map(|c| json!({ "name": c.name, "failure": c.failure })).collect();
    let lines = v
        .checks
        .iter()
        .map(|c| match &c.failure {
            None => format!("  {}: ok", c.name),
            Some(f) => format!("  {}: FAILED ({f})", c.name),
        })
        .collect();
    let status = if v.passed() { Status::Success } else { Status::Fail };
    Ok(Outcome::new(status, json!({ "passed": v.passed(), "checks": checks }), lines))
}
