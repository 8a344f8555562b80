//! The analysis commands. Each returns an [`Outcome`] for report assembly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use bubbletower_core::flow::{
    integrate, monitor_invariants, output_times, FlowConstants, IntegrationOptions, ShadowState,
};
use bubbletower_core::func_core::{
    check_admissibility, euler_sum, hessian_eigen, laplacian_surgery, local_seeds, parse_candidate,
    parse_candidate_file, search_from, seed_points, shifted_coefficients, surgery_basis,
    SearchTolerances,
};
use bubbletower_core::infinity::{
    enumerate_cpi, index_count, index_count_enumerated, mu_max, negative_set, sign_assignments,
    CriticalCatalog, SignStructure,
};
use bubbletower_core::spread::{
    comparison_certify, comparison_certify_tau, parse_spread, partition, sigma, subset_label,
    theorem1_certify, validate_spread, Certificate, ComparisonInput, Rejection, Spread,
};
use bubbletower_core::topology::{
    deformation_scheme_check, heart_labels, theorem2_certify, BitVec, ChainComplex, Conclusion,
    CriticalEvent, FiltrationScenario,
};
use bubbletower_core::variational::{bubble_energy, energy_constant, expansion_sign_check};
use bubbletower_core::{sphere, CandidateFunction, CriticalPoint, SphereSpec};

use crate::cache::Cache;
use crate::config::{Direction, LabelScheme, LoadedConfig, PointRef, StartRef};
use crate::error::CliError;
use crate::report::{num, short, Outcome, Table};

/// Seeds per local refinement axis after a surgery.
const LOCAL_SEEDS_PER_AXIS: usize = 9;

struct Built {
    k: CandidateFunction,
    seeds: Vec<Vec<f64>>,
    surgeries: Vec<Value>,
}

struct Prepared {
    k: CandidateFunction,
    points: Vec<CriticalPoint>,
    labels: Vec<String>,
    seeds: usize,
    nonconverged: usize,
    surgeries: Vec<Value>,
}

fn tolerances(cfg: &LoadedConfig) -> SearchTolerances {
    let t = cfg.config.tolerances;
    SearchTolerances {
        gradient: t.gradient,
        merge: t.merge,
        degeneracy: t.degeneracy,
        max_iterations: t.max_iterations,
        max_step: t.max_step,
    }
}

fn load_candidate(cfg: &LoadedConfig) -> Result<CandidateFunction, CliError> {
    let cand = cfg
        .config
        .candidate
        .as_ref()
        .ok_or_else(|| CliError::input("this command needs a [candidate] section"))?;
    match (&cand.file, &cand.expression, cand.dim) {
        (Some(f), _, _) => {
            parse_candidate_file(&cfg.read(f)?).map_err(|e| CliError::from_core(f, e))
        }
        (None, Some(expr), Some(n)) => {
            let spec = SphereSpec::new(n).map_err(|e| CliError::from_core("[candidate] dim", e))?;
            parse_candidate(expr, spec)
                .map_err(|e| CliError::from_core("[candidate] expression", e))
        }
        _ => Err(CliError::input(
            "[candidate] needs `file` or `expression` with `dim`",
        )),
    }
}

fn resolution(cfg: &LoadedConfig) -> usize {
    cfg.config.candidate.as_ref().map_or(6, |c| c.resolution)
}

fn label_scheme(cfg: &LoadedConfig) -> LabelScheme {
    cfg.config
        .candidate
        .as_ref()
        .map_or_else(LabelScheme::default, |c| c.labels)
}

fn label_points(points: &[CriticalPoint], scheme: LabelScheme) -> Result<Vec<String>, CliError> {
    match scheme {
        LabelScheme::Index => Ok((0..points.len()).map(|i| format!("p{i}")).collect()),
        LabelScheme::Heart => {
            let h = heart_labels(points)
                .map_err(|e| CliError::analysis(format!("heart labels: {e}")))?;
            let mut labels = vec![String::new(); points.len()];
            for (i, l) in h.named() {
                labels[i] = l;
            }
            Ok(labels)
        }
    }
}

fn resolve_point(r: &PointRef, labels: &[String]) -> Result<usize, CliError> {
    match r {
        PointRef::Index(i) if *i < labels.len() => Ok(*i),
        PointRef::Label(l) => labels
            .iter()
            .position(|x| x == l)
            .ok_or_else(|| CliError::input(format!("no critical point labelled '{l}'"))),
        _ => Err(CliError::input(format!(
            "critical point {r} out of range ({} points)",
            labels.len()
        ))),
    }
}

fn search(
    k: &CandidateFunction,
    seeds: &[Vec<f64>],
    tol: &SearchTolerances,
) -> Result<bubbletower_core::func_core::CriticalSearch, CliError> {
    search_from(k, seeds, tol).map_err(|e| CliError::from_core("critical search", e))
}

/// Loads the candidate and applies the configured surgeries in order.
fn build(cfg: &LoadedConfig) -> Result<Built, CliError> {
    let mut k = load_candidate(cfg)?;
    let tol = tolerances(cfg);
    let mut seeds =
        seed_points(k.n(), resolution(cfg)).map_err(|e| CliError::from_core("seeds", e))?;
    let mut surgeries = Vec::new();
    for (i, s) in cfg.config.surgery.iter().enumerate() {
        let ctx = format!("[[surgery]] {}", i + 1);
        let points = search(&k, &seeds, &tol)?.points;
        let labels = label_points(&points, label_scheme(cfg))?;
        let target = resolve_point(&s.point, &labels)?;
        let x0 = points[target].location.clone();
        let (b, _) = surgery_basis(&k, &x0).map_err(|e| CliError::from_core(&ctx, e))?;
        let c = match (&s.coefficients, s.direction) {
            (Some(c), _) => c.clone(),
            (None, Some(d)) => shifted_coefficients(&b, s.epsilon, d == Direction::Up),
            (None, None) => unreachable!("validated"),
        };
        let before = points[target].laplacian;
        k = laplacian_surgery(&k, &points, target, &c, s.delta, s.epsilon).map_err(
            |e| match e {
                bubbletower_core::Error::Precondition(m) => CliError::input(format!("{ctx}: {m}")),
                other => CliError::from_core(&ctx, other),
            },
        )?;
        let after = k
            .laplace_beltrami(&x0)
            .map_err(|e| CliError::from_core(&ctx, e))?;
        seeds.extend(local_seeds(&x0, 2.5 * s.delta, LOCAL_SEEDS_PER_AXIS));
        surgeries.push(json!({
            "point": labels[target],
            "location": x0,
            "epsilon": s.epsilon,
            "delta": s.delta,
            "original_coefficients": b,
            "coefficients": c,
            "laplacian_before": before,
            "laplacian_after": after,
            "laplacian_target": 2.0 * c.iter().sum::<f64>(),
        }));
    }
    Ok(Built {
        k,
        seeds,
        surgeries,
    })
}

fn prepare(cfg: &LoadedConfig) -> Result<Prepared, CliError> {
    let Built {
        k,
        seeds,
        surgeries,
    } = build(cfg)?;
    let found = search(&k, &seeds, &tolerances(cfg))?;
    let labels = label_points(&found.points, label_scheme(cfg))?;
    Ok(Prepared {
        k,
        points: found.points,
        labels,
        seeds: found.seeds,
        nonconverged: found.nonconverged,
        surgeries,
    })
}

fn sign(x: f64) -> &'static str {
    if x < 0.0 {
        "-"
    } else if x > 0.0 {
        "+"
    } else {
        "0"
    }
}

fn pass_word(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

pub fn check(cfg: &LoadedConfig) -> Result<Outcome, CliError> {
    let Built {
        k,
        seeds,
        surgeries,
    } = build(cfg)?;
    let critical = search_from(&k, &seeds, &tolerances(cfg)).map(|s| s.points);
    let adm = check_admissibility(&k, &critical);
    let summary = vec![
        format!("candidate on S^{}: {k}", k.n()),
        format!(
            "positive {}, Morse {}, {} critical points, separation margin {}",
            adm.positive,
            adm.morse,
            adm.critical_points,
            adm.separation_margin.map_or("n/a".into(), short)
        ),
        format!("admissibility {}", pass_word(adm.pass)),
    ];
    let result = json!({
        "dimension": k.n(),
        "candidate": k.to_string(),
        "surgeries": surgeries,
        "admissibility": adm,
    });
    Ok(Outcome::new(adm.pass, summary, result))
}

fn critical_table(p: &Prepared) -> Table {
    let n = p.k.n();
    let mut header: Vec<String> = [
        "label",
        "value",
        "morse_index",
        "inverse_index",
        "laplacian",
        "laplacian_sign",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=n + 1).map(|i| format!("x{i}")));
    let mut t = Table::with_header("critical_points.csv", header);
    for (pt, l) in p.points.iter().zip(&p.labels) {
        let mut row = vec![
            l.clone(),
            num(pt.value),
            pt.morse_index.to_string(),
            pt.inverse_index(n).to_string(),
            num(pt.laplacian),
            sign(pt.laplacian).to_string(),
        ];
        row.extend(pt.location.iter().map(|x| num(*x)));
        t.push(row);
    }
    t
}

fn points_json(p: &Prepared) -> Value {
    let n = p.k.n();
    Value::Array(
        p.points
            .iter()
            .zip(&p.labels)
            .map(|(pt, l)| {
                json!({
                    "label": l,
                    "location": pt.location,
                    "value": pt.value,
                    "morse_index": pt.morse_index,
                    "inverse_index": pt.inverse_index(n),
                    "laplacian": pt.laplacian,
                    "hessian_eigenvalues": pt.hessian_eigenvalues,
                })
            })
            .collect(),
    )
}

pub fn critical(cfg: &LoadedConfig) -> Result<Outcome, CliError> {
    let p = prepare(cfg)?;
    let n = p.k.n();
    let chi = if n % 2 == 0 { 2 } else { 0 };
    let euler = euler_sum(&p.points);
    let negative = p.points.iter().filter(|x| x.laplacian < 0.0).count();
    let pass = euler == chi;
    let summary = vec![
        format!(
            "{} critical points from {} seeds ({} did not converge)",
            p.points.len(),
            p.seeds,
            p.nonconverged
        ),
        format!("Σ(-1)^m = {euler}, χ(S^{n}) = {chi}"),
        format!("{negative} with ΔK < 0"),
    ];
    let result = json!({
        "dimension": n,
        "candidate": p.k.to_string(),
        "surgeries": p.surgeries,
        "points": points_json(&p),
        "euler_sum": euler,
        "euler_characteristic": chi,
        "seeds": p.seeds,
        "nonconverged_seeds": p.nonconverged,
    });
    let mut out = Outcome::new(pass, summary, result);
    out.tables.push(critical_table(&p));
    Ok(out)
}

pub fn cpi(cfg: &LoadedConfig) -> Result<Outcome, CliError> {
    let p = prepare(cfg)?;
    let n = p.k.n();
    let catalog = CriticalCatalog::with_labels(n, p.points.clone(), p.labels.clone())
        .map_err(|e| CliError::from_core("critical catalog", e))?;
    let c = energy_constant(n);
    let cpis = enumerate_cpi(&catalog, c).map_err(|e| CliError::from_core("CPI enumeration", e))?;
    let mu = mu_max(&catalog, c).map_err(|e| CliError::from_core("μ", e))?;
    let count = index_count(&catalog);
    let brute =
        index_count_enumerated(&catalog).map_err(|e| CliError::from_core("index count", e))?;
    let negative: Vec<String> = negative_set(&catalog)
        .iter()
        .map(|&i| p.labels[i].clone())
        .collect();

    let slots: Vec<(&str, usize)> = p
        .labels
        .iter()
        .zip(&p.points)
        .map(|(l, x)| (l.as_str(), x.morse_index))
        .collect();
    let structure = SignStructure::from_indices(n, &slots);
    let assignments =
        sign_assignments(&structure).map_err(|e| CliError::from_core("sign assignments", e))?;
    let candidates: Vec<Vec<String>> = assignments
        .iter()
        .filter(|a| a.count == 1)
        .map(|a| a.labels.clone())
        .collect();
    let actual_is_candidate = candidates.contains(&negative);

    let mut cpi_table = Table::new("cpi.csv", &["mask", "members", "energy", "index", "parity"]);
    for x in &cpis {
        let members: Vec<&str> = x.members.iter().map(|&i| p.labels[i].as_str()).collect();
        cpi_table.push(vec![
            x.mask.to_string(),
            members.join(" "),
            num(x.energy),
            x.index.to_string(),
            x.parity().to_string(),
        ]);
    }
    let mut sign_table = Table::new(
        "sign_assignments.csv",
        &["negative_set", "index_count", "nonexistence_candidate"],
    );
    for a in &assignments {
        sign_table.push(vec![
            a.labels.join(" "),
            a.count.to_string(),
            (a.count == 1).to_string(),
        ]);
    }

    let summary = vec![
        format!(
            "C- = {{{}}}, {} critical points at infinity",
            negative.join(", "),
            cpis.len()
        ),
        format!(
            "μ(K) = {}, index count {count} (enumerated {brute})",
            short(mu)
        ),
        format!(
            "{} of {} sign assignments are non-existence candidates: {}",
            candidates.len(),
            assignments.len(),
            candidates
                .iter()
                .map(|c| format!("{{{}}}", c.join(",")))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    ];
    let result = json!({
        "dimension": n,
        "mode": catalog.mode,
        "energy_constant": c,
        "surgeries": p.surgeries,
        "negative_set": negative,
        "cpi": cpis.iter().map(|x| json!({
            "mask": x.mask,
            "members": x.members.iter().map(|&i| p.labels[i].clone()).collect::<Vec<_>>(),
            "energy": x.energy,
            "index": x.index,
            "parity": x.parity(),
        })).collect::<Vec<_>>(),
        "mu": mu,
        "index_count": count,
        "index_count_enumerated": brute,
        "sign_assignments": assignments.len(),
        "nonexistence_candidates": candidates,
        "degree_argument_inconclusive": actual_is_candidate,
    });
    let mut out = Outcome::new(count == brute, summary, result);
    out.tables.push(cpi_table);
    out.tables.push(sign_table);
    Ok(out)
}

fn load_spread(cfg: &LoadedConfig) -> Result<Spread, CliError> {
    let s = cfg
        .config
        .spread
        .as_ref()
        .ok_or_else(|| CliError::input("this command needs a [spread] section"))?;
    parse_spread(&cfg.read(&s.file)?).map_err(|e| CliError::from_core(&s.file, e))
}

pub fn spread(cfg: &LoadedConfig) -> Result<Outcome, CliError> {
    let sp = load_spread(cfg)?;
    let audit = validate_spread(&sp);
    let part = partition(&sp);
    let sig = part.as_ref().ok().map(|p| sigma(p, &sp.members));
    let c = sp.energy_constant;

    let mut members = Table::new(
        "spread_members.csv",
        &[
            "label",
            "signature",
            "mu",
            "mu_strip",
            "class_strip",
            "solvable",
            "spreading",
        ],
    );
    for (i, (m, a)) in sp.members.iter().zip(&audit.members).enumerate() {
        let mu = m.mu(sp.n, c);
        let class = part
            .as_ref()
            .ok()
            .and_then(|p| p.class_of_member(i))
            .map(|c| c.strip);
        members.push(vec![
            m.label.clone(),
            subset_label(m.signature()),
            num(mu),
            sp.ladder
                .strip_of(mu)
                .map_or(String::new(), |s| s.to_string()),
            class.map_or(String::new(), |s| s.to_string()),
            m.solvable.map_or(String::new(), |s| s.to_string()),
            pass_word(a.pass).to_string(),
        ]);
    }
    let mut strips = Table::new("strip_map.csv", &["subset", "strip"]);
    for (mask, s) in audit.strip_map.iter().enumerate().skip(1) {
        strips.push(vec![
            subset_label(mask as u64),
            s.map_or(String::new(), |s| s.to_string()),
        ]);
    }

    let pass = audit.pass && part.is_ok();
    let mut summary = vec![format!(
        "{} members on a {}-strip ladder, spread {}{}",
        sp.members.len(),
        sp.ladder.len(),
        pass_word(audit.pass),
        if audit.injective {
            ""
        } else {
            " (subset map not injective)"
        }
    )];
    summary.extend(audit.violations.iter().cloned());
    match &part {
        Ok(p) => summary.push(format!(
            "{} classes in strips {:?}, σ = {}",
            p.classes.len(),
            p.strips(),
            sig.unwrap_or(0)
        )),
        Err(e) => summary.push(format!("partition failed: {e}")),
    }
    let result = json!({
        "dimension": sp.n,
        "energy_constant": c,
        "audit": audit,
        "classes": part.as_ref().ok().map(|p| p.classes.iter().map(|c| json!({
            "signature": subset_label(c.signature),
            "strip": c.strip,
            "members": c.members.iter().map(|&i| sp.members[i].label.clone()).collect::<Vec<_>>(),
        })).collect::<Vec<_>>()),
        "partition_error": part.as_ref().err().map(|e| e.to_string()),
        "sigma": sig,
    });
    let mut out = Outcome::new(pass, summary, result);
    out.tables.push(members);
    out.tables.push(strips);
    Ok(out)
}

fn certificate_json(name: &str, r: &Result<Certificate, Rejection>) -> Value {
    match r {
        Ok(c) => json!({
            "name": name,
            "issued": true,
            "kind": c.kind,
            "energy_bound": c.energy_bound,
            "exempt_class": c.exempt_class,
            "window": c.window,
            "audit": c.audit,
        }),
        Err(e) => json!({
            "name": name,
            "issued": false,
            "condition": e.condition(),
            "rejection": e,
            "message": e.to_string(),
        }),
    }
}

pub fn certify(cfg: &LoadedConfig) -> Result<Outcome, CliError> {
    let sp = load_spread(cfg)?;
    let sec = cfg
        .config
        .certify
        .as_ref()
        .ok_or_else(|| CliError::input("certify needs a [certify] section"))?;
    let mut runs: Vec<(String, Result<Certificate, Rejection>)> = Vec::new();
    match (sec.kappa_lo, sec.kappa_hi) {
        (Some(lo), Some(hi)) => {
            let part = partition(&sp).map_err(|e| CliError::analysis(format!("partition: {e}")))?;
            runs.push(("classes".into(), theorem1_certify(&sp, &part, lo, hi)));
        }
        (None, None) => {}
        _ => {
            return Err(CliError::input(
                "[certify] needs both kappa_lo and kappa_hi",
            ))
        }
    }
    for cmp in &sec.comparison {
        let find = |label: &str| {
            sp.members
                .iter()
                .find(|m| m.label == label)
                .ok_or_else(|| CliError::input(format!("no spread member labelled '{label}'")))
        };
        let (upper, lower) = (find(&cmp.upper)?, find(&cmp.lower)?);
        let input = ComparisonInput {
            sigma: cmp.sigma,
            sigma_lower: cmp.sigma_lower,
            kappa_prev: cmp.kappa_prev,
            kappa: cmp.kappa,
            cap: cmp.cap,
        };
        let r = match cmp.tau_margin {
            Some(m) => comparison_certify_tau(upper, lower, &sp.ladder, sp.n, &input, m),
            None => comparison_certify(upper, lower, &sp.ladder, sp.n, &input),
        };
        runs.push((format!("{} vs {}", cmp.upper, cmp.lower), r));
    }
    if runs.is_empty() {
        return Err(CliError::input("[certify] requests no certificate"));
    }
    if let Some((name, Err(Rejection::Input(m)))) = runs
        .iter()
        .find(|(_, r)| matches!(r, Err(Rejection::Input(_))))
    {
        return Err(CliError::input(format!("certificate '{name}': {m}")));
    }

    let mut table = Table::new(
        "certificates.csv",
        &[
            "name",
            "issued",
            "condition",
            "energy_bound",
            "window_lower",
            "window_upper",
        ],
    );
    let mut summary = Vec::new();
    for (name, r) in &runs {
        match r {
            Ok(c) => {
                let (lo, hi) = c
                    .window
                    .map_or((String::new(), String::new()), |(a, b)| (num(a), num(b)));
                summary.push(format!(
                    "{name}: issued, energy bound {}",
                    short(c.energy_bound)
                ));
                table.push(vec![
                    name.clone(),
                    "true".into(),
                    String::new(),
                    num(c.energy_bound),
                    lo,
                    hi,
                ]);
            }
            Err(e) => {
                summary.push(format!("{name}: rejected ({}): {e}", e.condition()));
                table.push(vec![
                    name.clone(),
                    "false".into(),
                    e.condition().into(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
            }
        }
    }
    let pass = runs.iter().all(|(_, r)| r.is_ok());
    let result = json!({
        "dimension": sp.n,
        "certificates": runs.iter().map(|(n, r)| certificate_json(n, r)).collect::<Vec<_>>(),
    });
    let mut out = Outcome::new(pass, summary, result);
    out.tables.push(table);
    Ok(out)
}

fn parse_complex(cfg: &LoadedConfig, file: &str) -> Result<ChainComplex, CliError> {
    let cc = ChainComplex::parse(&cfg.read(file)?).map_err(|e| CliError::from_core(file, e))?;
    cc.validate().map_err(|e| CliError::from_core(file, e))?;
    Ok(cc)
}

pub fn homology(cfg: &LoadedConfig) -> Result<Outcome, CliError> {
    let sec = cfg
        .config
        .homology
        .clone()
        .ok_or_else(|| CliError::input("homology needs a [homology] section"))?;
    if sec.complex.is_none() && !sec.theorem2 && sec.scheme.is_none() {
        return Err(CliError::input("[homology] requests nothing"));
    }
    let mut pass = true;
    let mut summary = Vec::new();
    let mut result = serde_json::Map::new();
    let mut tables = Vec::new();

    if let Some(file) = &sec.complex {
        let cc = parse_complex(cfg, file)?;
        let betti = cc.homology();
        let mut t = Table::new("betti.csv", &["degree", "generators", "betti"]);
        for (k, b) in betti.iter().enumerate() {
            t.push(vec![
                k.to_string(),
                cc.rank_in(k).to_string(),
                b.to_string(),
            ]);
        }
        tables.push(t);
        summary.push(format!("β = {betti:?}, χ = {}", cc.euler_characteristic()));
        result.insert(
            "complex".into(),
            json!({
                "betti": betti,
                "euler_characteristic": cc.euler_characteristic(),
                "generators": (0..=cc.top_degree()).map(|k| cc.rank_in(k)).collect::<Vec<_>>(),
            }),
        );
    }

    if sec.theorem2 {
        let p = prepare(cfg)?;
        if p.k.n() != 3 {
            return Err(CliError::input(
                "the heart certificate needs a candidate on S^3",
            ));
        }
        let c = energy_constant(3);
        match theorem2_certify(&p.points, c) {
            Ok(cert) => {
                summary.push(format!(
                    "heart certificate issued: solution with energy ≤ {}",
                    short(cert.energy_bound)
                ));
                result.insert(
                    "theorem2".into(),
                    json!({ "issued": true, "certificate": cert }),
                );
            }
            Err(r) => {
                pass = false;
                summary.push(format!("heart certificate rejected: {r}"));
                result.insert(
                    "theorem2".into(),
                    json!({ "issued": false, "violations": r.violations }),
                );
            }
        }
        result.insert("surgeries".into(), Value::Array(p.surgeries));
    }

    if let Some(s) = &sec.scheme {
        let sublevel = s
            .sublevel
            .as_ref()
            .map(|f| parse_complex(cfg, f))
            .transpose()?;
        let attaching = s
            .attaching
            .as_ref()
            .map(|b| {
                BitVec::from_bits(b).ok_or_else(|| {
                    CliError::input(format!(
                        "[homology.scheme] attaching '{b}' is not a bitstring"
                    ))
                })
            })
            .transpose()?;
        let sc = FiltrationScenario {
            events: s
                .events
                .iter()
                .map(|e| CriticalEvent {
                    label: e.label.clone(),
                    level: e.level,
                    index: e.index,
                })
                .collect(),
            k1: s.k1,
            k2: s.k2,
            k3: s.k3,
            kappa1: s.kappa1,
            kappa2: s.kappa2,
            sublevel,
            attaching,
        };
        let conclusion = deformation_scheme_check(&sc)
            .map_err(|e| CliError::input(format!("[homology.scheme]: {e}")))?;
        match &conclusion {
            Conclusion::CriticalValue {
                window,
                event,
                betti_before,
                betti_after,
                ..
            } => summary.push(format!(
                "deformation scheme: critical value in [{}, {}] from {event}, β {betti_before:?} → {betti_after:?}",
                short(window.0),
                short(window.1)
            )),
            Conclusion::NoConclusion { reason } => {
                pass = false;
                summary.push(format!("deformation scheme: no conclusion ({reason})"));
            }
        }
        result.insert(
            "scheme".into(),
            json!({ "thresholds": sc.thresholds(), "conclusion": conclusion }),
        );
    }

    let mut out = Outcome::new(pass, summary, Value::Object(result));
    out.tables = tables;
    Ok(out)
}

/// The stable direction of ȧ = −∇K at a critical point: an eigenvector with
/// positive Hessian eigenvalue, else the one with the largest eigenvalue.
fn stable_direction(k: &CandidateFunction, p: &[f64]) -> Result<Vec<f64>, CliError> {
    let (vals, vecs) = hessian_eigen(k, p).map_err(|e| CliError::from_core("flow start", e))?;
    let i = vals.iter().position(|v| *v > 0.0).unwrap_or(vals.len() - 1);
    Ok(vecs[i].clone())
}

fn random_tangent(rng: &mut ChaCha8Rng, p: &[f64]) -> Vec<f64> {
    let frame = sphere::tangent_frame(p);
    let mut v = vec![0.0; p.len()];
    for e in &frame {
        let w: f64 = rng.gen_range(-1.0..1.0);
        for (vi, ei) in v.iter_mut().zip(e) {
            *vi += w * ei;
        }
    }
    let norm = sphere::norm(&v);
    v.iter().map(|x| x / norm).collect()
}

pub fn flow(cfg: &LoadedConfig) -> Result<Outcome, CliError> {
    let f = cfg
        .config
        .flow
        .clone()
        .ok_or_else(|| CliError::input("flow needs a [flow] section"))?;
    let p = prepare(cfg)?;
    let n = p.k.n();
    let (mut a0, anchor) = match &f.start {
        StartRef::Coordinates(x) => {
            if x.len() != n + 1 || sphere::norm(x) == 0.0 {
                return Err(CliError::input(format!(
                    "[flow] start needs {} nonzero coordinates",
                    n + 1
                )));
            }
            (sphere::normalize(x), None)
        }
        StartRef::Point(r) => {
            let i = resolve_point(r, &p.labels)?;
            let x = &p.points[i].location;
            let e = stable_direction(&p.k, x)?;
            let step: Vec<f64> = e.iter().map(|v| f.offset * v).collect();
            (sphere::exp_map(x, &step), Some(i))
        }
    };
    if f.jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let d: Vec<f64> = random_tangent(&mut rng, &a0)
            .iter()
            .map(|v| f.jitter * v)
            .collect();
        a0 = sphere::exp_map(&a0, &d);
    }
    let s0 = ShadowState::new(f.alpha, &a0, f.lambda0, f.v0)
        .map_err(|e| CliError::from_core("[flow]", e))?;
    let fc = FlowConstants {
        c1: f.c1,
        c2: f.c2,
        c3: f.c3,
        b: f.b,
        coupling: f.coupling,
    };
    fc.validate()
        .map_err(|e| CliError::from_core("[flow]", e))?;
    let defaults = IntegrationOptions::default();
    let opts = IntegrationOptions {
        tol: f.tol.unwrap_or(defaults.tol),
        lambda_cap: f.lambda_cap.unwrap_or(defaults.lambda_cap),
        lambda_floor: f.lambda_floor.unwrap_or(defaults.lambda_floor),
        ..defaults
    };
    let traj = integrate(
        &s0,
        &p.k,
        &fc,
        &output_times(0.0, f.horizon, f.samples),
        &opts,
    )
    .map_err(|e| CliError::from_core("flow integration", e))?;
    let mon = monitor_invariants(&traj, &fc, f.lambda0, f.c_v_limit);

    let mut header: Vec<String> = vec!["t".into()];
    header.extend((1..=n + 1).map(|i| format!("a{i}")));
    header.extend(
        [
            "lambda",
            "ln_lambda",
            "v_norm_sq",
            "alpha",
            "k",
            "laplacian",
            "grad_norm",
            "monotone_ok",
            "v_bound_ok",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    let mut traj_table = Table::with_header("trajectory.csv", header);
    let mut plot = Table::new("flow_lambda.csv", &["t", "lambda"]);
    for (x, (mono, vb)) in traj.samples.iter().zip(&mon.flags) {
        let mut row = vec![num(x.t)];
        row.extend(x.a.iter().map(|v| num(*v)));
        row.extend([
            num(x.lambda),
            num(x.lambda.ln()),
            num(x.v_norm_sq),
            num(x.alpha),
            num(x.k),
            num(x.laplacian),
            num(x.grad_norm),
            mono.to_string(),
            vb.to_string(),
        ]);
        traj_table.push(row);
        plot.push(vec![num(x.t), num(x.lambda)]);
    }

    let last = traj.samples.last();
    let distance = anchor
        .zip(last)
        .map(|(i, x)| sphere::geodesic_distance(&x.a, &p.points[i].location));
    let pass = mon.monotone != Some(false) && mon.v_bound_ok;
    let summary = vec![
        format!(
            "{} samples to t = {}, λ {} → {}{}",
            traj.samples.len(),
            last.map_or("0".into(), |x| short(x.t)),
            short(f.lambda0),
            short(mon.lambda_final),
            if traj.concentrated {
                " (λ cap reached)"
            } else if traj.dispersed {
                " (λ floor reached)"
            } else {
                ""
            }
        ),
        format!(
            "K⁻¹ ln λ monotone: {}, C_v = {} after t = {} (limit {})",
            mon.monotone
                .map_or("not applicable".into(), |m| m.to_string()),
            short(mon.c_v),
            short(mon.transient_time),
            short(f.c_v_limit)
        ),
    ];
    let result = json!({
        "dimension": n,
        "start": a0,
        "start_point": anchor.map(|i| p.labels[i].clone()),
        "surgeries": p.surgeries,
        "monotone": mon.monotone,
        "first_monotone_violation": mon.first_monotone_violation,
        "transient_time": mon.transient_time,
        "c_v": mon.c_v,
        "c_v_limit": f.c_v_limit,
        "v_bound_ok": mon.v_bound_ok,
        "lambda_final": mon.lambda_final,
        "concentrated": mon.concentrated,
        "lambda_cap_reached": traj.concentrated,
        "lambda_floor_reached": traj.dispersed,
        "terminal_distance": distance,
        "accepted_steps": traj.accepted_steps,
        "rejected_steps": traj.rejected_steps,
        "error_estimate": traj.error_estimate,
    });
    let mut out = Outcome::new(pass, summary, result);
    out.tables.push(traj_table);
    out.tables.push(plot);
    Ok(out)
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' {
                c
            } else {
                '-'
            }
        })
        .collect()
}

pub fn bubble_energy_cmd(cfg: &LoadedConfig, cache: &Cache) -> Result<Outcome, CliError> {
    let sec = cfg
        .config
        .bubble
        .clone()
        .ok_or_else(|| CliError::input("bubble-energy needs a [bubble] section"))?;
    let level = cfg.quad_level;
    let p = prepare(cfg)?;
    let n = p.k.n();
    let centers: Vec<usize> = match &sec.centers {
        Some(list) => list
            .iter()
            .map(|r| resolve_point(r, &p.labels))
            .collect::<Result<_, _>>()?,
        None => (0..p.points.len()).collect(),
    };
    let fit = n >= 5 && sec.lambdas.len() >= 3;

    let yamabe = energy_constant(n);
    let numeric = cache.energy_constant(n, level)?;
    let rule = cache.product_rule(n, level)?;
    let volume = rule.integrate(|_| 1.0);

    let mut sweep = Table::new(
        "bubble_energy.csv",
        &[
            "center",
            "lambda",
            "energy",
            "error_estimate",
            "limit",
            "deviation",
        ],
    );
    let mut tables = Vec::new();
    let mut centers_json = Vec::new();
    let mut summary = Vec::new();
    let mut pass = true;
    for &i in &centers {
        let pt = &p.points[i];
        let label = &p.labels[i];
        let limit = yamabe / pt.value.powf((n as f64 - 2.0) / n as f64);
        let (samples, fit_json) = if fit {
            let r = expansion_sign_check(&p.k, pt, &sec.lambdas, level)
                .map_err(|e| CliError::from_core(&format!("expansion at {label}"), e))?;
            let ok = r.sign_ok;
            pass &= ok;
            summary.push(format!(
                "{label}: ΔK = {}, λ⁻² coefficient {} (t = {}), sign {}",
                short(r.laplacian),
                short(r.coefficient),
                short(r.t_statistic),
                pass_word(ok)
            ));
            let fj = json!({
                "coefficient": r.coefficient,
                "std_error": r.std_error,
                "t_statistic": r.t_statistic,
                "expected_sign": r.expected_sign,
                "sign_ok": ok,
            });
            (r.samples, Some(fj))
        } else {
            let s = sec
                .lambdas
                .iter()
                .map(|&l| bubble_energy(&p.k, &pt.location, l, level))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::from_core(&format!("bubble energy at {label}"), e))?;
            summary.push(format!(
                "{label}: J at λ = {} is {}",
                short(s.last().map_or(f64::NAN, |x| x.lambda)),
                short(s.last().map_or(f64::NAN, |x| x.energy))
            ));
            (s, None)
        };
        let mut plot = Table::new(
            &format!("bubble_energy_{}.csv", file_stem(label)),
            &["lambda", "energy"],
        );
        for s in &samples {
            sweep.push(vec![
                label.clone(),
                num(s.lambda),
                num(s.energy),
                num(s.error_estimate),
                num(limit),
                num(s.energy - limit),
            ]);
            plot.push(vec![num(s.lambda), num(s.energy)]);
        }
        tables.push(plot);
        centers_json.push(json!({
            "label": label,
            "location": pt.location,
            "value": pt.value,
            "laplacian": pt.laplacian,
            "limit": limit,
            "samples": samples,
            "fit": fit_json,
        }));
    }
    summary.insert(
        0,
        format!(
            "level {level}: numerical energy constant {} vs {} (relative {})",
            short(numeric),
            short(yamabe),
            short((numeric - yamabe).abs() / yamabe)
        ),
    );
    let result = json!({
        "dimension": n,
        "level": level,
        "lambdas": sec.lambdas,
        "surgeries": p.surgeries,
        "energy_constant": yamabe,
        "energy_constant_numeric": numeric,
        "volume": sphere::volume(n),
        "volume_numeric": volume,
        "centers": centers_json,
    });
    tables.insert(0, sweep);
    let mut out = Outcome::new(pass, summary, result);
    out.tables = tables;
    Ok(out)
}
