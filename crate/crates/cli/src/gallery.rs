//! Reproductions of the worked examples, each with expected-versus-observed
//! checks.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use effint::catalog::{self, GALLERY};
use effint::energy::{energy, TestFunction};
use effint::generate::{core_check, f_subspace, same_subspace_from, GeneratorScale};
use effint::interval::{Interval, Window};
use effint::measure::{Mass, Precision, ScaleMeasure};
use effint::merge::{maximal_merge, minimal_merge, optional_merge, pipeline, tight_partition, thinned_scale, MergePlan, Selection, ShrinkSpec};
use effint::relation::{measures_equal, rn_relation};
use effint::subspace::{check_equality, check_subspace};
use effint::system::{Condition, EffectiveSystem};
use effint::thinned::RationalIndex;
use effint::{Error, ExtReal, Real};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::commands::{construct_core_json, partition_json, pipeline_trace, Failure};
use crate::report::{conditions, entry_summary, system_json, verdict_name, Check, Outcome, Report};
use crate::Opts;

type Section = Result<(Value, Vec<Check>), Failure>;

/// Runs one entry.
pub fn run_one(id: &str, opts: &Opts) -> Report {
    let mut report = Report::new("gallery", vec![id.to_string()], opts.echo(), Outcome::Error);
    let p = opts.precision();
    let section = match id {
        "cantor-trap" => cantor_trap(&p),
        "split-at-zero" => chain_merge(catalog::split_at_zero(), &p),
        "harmonic-chain" => chain_merge(catalog::harmonic_chain(), &p),
        "double-chain" => chain_merge(catalog::double_chain(), &p),
        "thinned-unit" => thinned_unit(opts),
        "cantor-merge-plans" => cantor_merge_plans(&p),
        "cantor-cores" => cantor_cores(&p),
        "constructed-cores" => constructed_cores(&p),
        "unit-mass-gaps" => unit_mass_gaps(&p),
        "fat-cantor" => fat_cantor(&p),
        "bessel" => bessel(&p),
        "killing-mismatch" => killing_mismatch(&p),
        _ => {
            report.error = Some(format!("unknown gallery entry {id:?}; entries: {}", GALLERY.join(", ")));
            return report;
        }
    };
    match section {
        Ok((results, checks)) => {
            report.set_outcome(Outcome::from_checks(&checks));
            report.results = results;
            report.checks = checks;
        }
        Err(Failure::Config(e)) => report.error = Some(e.to_string()),
        Err(Failure::Domain(e)) => {
            report.set_outcome(Outcome::from_error(&e));
            report.error = Some(e.to_string());
        }
    }
    report
}

/// Runs every entry on `opts.threads` workers; output order is fixed.
pub fn run_all(opts: &Opts) -> Report {
    let slots: Vec<Mutex<Option<Report>>> = GALLERY.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..opts.threads.clamp(1, GALLERY.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= GALLERY.len() {
                    break;
                }
                let r = run_one(GALLERY[i], opts);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    let sections: Vec<Report> = slots.into_iter().map(|m| m.into_inner().unwrap().expect("every entry ran")).collect();
    let mut report = Report::new("gallery", vec!["--all".into()], opts.echo(), Outcome::True);
    let worst = sections.iter().map(|r| r.outcome).max_by_key(|o| o.exit_code()).unwrap_or(Outcome::True);
    report.set_outcome(worst);
    for (id, r) in GALLERY.iter().zip(&sections) {
        report.checks.extend(r.checks.iter().map(|c| Check { name: format!("{id}: {}", c.name), ..c.clone() }));
    }
    let summary: Vec<Value> = GALLERY
        .iter()
        .zip(&sections)
        .map(|(id, r)| json!({ "id": id, "verdict": r.verdict, "error": r.error, "results": r.results }))
        .collect();
    report.results = json!({ "sections": summary });
    report
}

fn failing(conds: &[Condition]) -> String {
    let names: Vec<&str> = conds.iter().filter(|c| !c.verdict.is_true()).map(|c| c.name.as_str()).collect();
    names.join(",")
}

fn generator(m: ScaleMeasure, s: &EffectiveSystem) -> Result<GeneratorScale, Error> {
    GeneratorScale::new(m, &s.state)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

fn tent() -> TestFunction {
    TestFunction::piecewise_linear(vec![(Real::int(-1), Real::zero()), (Real::zero(), Real::one()), (Real::one(), Real::zero())]).unwrap()
}

fn cantor_trap(p: &Precision) -> Section {
    let (bm, trap) = (catalog::brownian(), catalog::cantor_trap());
    let down = check_subspace(&bm, &trap, p)?;
    let up = check_subspace(&trap, &bm, p)?;
    let eq = check_equality(&bm, &trap, p)?;
    let trap_scale = trap.scale_measure_of()?;
    let leb = catalog::lebesgue();
    let forward = rn_relation(&trap_scale, &leb);
    let backward = rn_relation(&leb, &trap_scale);
    let off_members = leb.restrict_to_complement(&trap.entries)?;
    let e_bm = energy(&bm, &tent(), p)?;
    let e_trap = energy(&trap, &tent(), p)?;
    let checks = vec![
        Check::new("motion is a subspace of the trap", "true", verdict_name(&down.verdict)),
        Check::new("trap is a subspace of the motion", "false", verdict_name(&up.verdict)),
        Check::new("failing condition", "cond_coarser", failing(&up.conditions)),
        Check::new("trap scale relative to Lebesgue", "zero-one", forward.name()),
        Check::new("Lebesgue relative to trap scale", "zero-one", backward.name()),
        Check::new("trap scale equals Lebesgue", "true", measures_equal(&trap_scale, &leb) == Some(true)),
        Check::new("Lebesgue mass off the trap intervals", "0", off_members.measure_of(&Window::full(), p)?),
        Check::new("systems equal", "false", verdict_name(&eq.verdict)),
        Check::judged("tent energy, motion", 1.0, e_bm.value, close(e_bm.value, 1.0, 1e-9)),
        Check::judged("tent energy, trap", e_bm.value, e_trap.value, close(e_bm.value, e_trap.value, 1e-6)),
    ];
    let results = json!({
        "motion": system_json(&bm),
        "trap": system_json(&trap),
        "motion_in_trap": conditions(&down.conditions),
        "trap_in_motion": conditions(&up.conditions),
        "equality": conditions(&eq.conditions),
    });
    Ok((results, checks))
}

fn chain_merge(s: EffectiveSystem, p: &Precision) -> Section {
    let out = pipeline(&s, &ShrinkSpec::identity(), &MergePlan::EachMember, p)?;
    let (trace, v) = pipeline_trace(&s, &out, p);
    let shrunk = out.shrunk.validate(p);
    let adapted = shrunk.conditions.iter().find(|c| c.name == "adapted");
    let tight = tight_partition(&s)?;
    let checks = vec![
        Check::new("pre-effective stage failing conditions", "adapted", failing(&shrunk.conditions)),
        Check::judged("adaptedness failure located at 0", "mentions 0", adapted.map_or("", |c| c.detail.as_str()), adapted.is_some_and(|c| mentions_zero(&c.detail))),
        Check::new("tight classes", 1, tight.classes.len()),
        Check::new("output", "{([-1, 1], natural)}", entry_summary(&out.output)),
        Check::new("output valid", "true", verdict_name(&v.verdict)),
    ];
    Ok((json!({ "tight_partition": partition_json(&tight), "trace": trace }), checks))
}

fn mentions_zero(detail: &str) -> bool {
    detail.split(|c: char| !(c.is_ascii_digit() || c == '/' || c == '.' || c == '-')).any(|t| t == "0")
}

fn thinned_unit(opts: &Opts) -> Section {
    let p = opts.precision();
    let unit = Interval::closed(Real::zero(), Real::one());
    let base = catalog::lebesgue();
    let input = base.restrict_to_window(&unit.interior());
    let mut checks = Vec::new();
    let mut results = Vec::new();
    for (n, d) in [(1, 10), (1, 100)] {
        let eps = BigRational::new(BigInt::from(n), BigInt::from(d));
        let tag = format!("eps {n}/{d}");
        let (set, m) = thinned_scale(&unit, &base, eps.clone(), 20, &p)?;
        let (again, m2) = thinned_scale(&unit, &base, eps.clone(), 20, &p)?;
        let bound = set.mass_bound(&p)?;
        let eps_r = Real::Exact(eps.clone());
        checks.push(Check::judged(&format!("{tag}: mass bound below eps"), format!("< {eps_r}"), &bound, bound.is_exact() && bound < eps_r));
        checks.push(Check::new(&format!("{tag}: relation to the natural scale"), "zero-one", rn_relation(&m, &input).name()));
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut index = RationalIndex::new(&unit);
        let mut increasing = 0;
        let mut first_failure = None;
        for _ in 0..1000 {
            let (x, y) = sample_pair(&mut rng);
            match set.increase_witness(&x, &y, &mut index, &p) {
                Ok(_) => increasing += 1,
                Err(e) => {
                    first_failure.get_or_insert(format!("({x}, {y}): {e}"));
                }
            }
        }
        checks.push(Check::new(&format!("{tag}: strictly increasing on sampled pairs"), 1000, increasing));
        checks.push(Check::new(&format!("{tag}: rebuilt identically"), "true", set == again && m == m2));
        let balls: Vec<Value> = set.balls.iter().take(8).map(|b| json!({ "center": Real::Exact(b.center.clone()).to_string(), "radius": Real::Exact(b.radius.clone()).to_string() })).collect();
        results.push(json!({
            "eps": eps_r.to_string(),
            "depth": set.depth(),
            "mass_bound": bound.to_string(),
            "first_balls": balls,
            "first_failure": first_failure,
        }));
    }
    Ok((json!({ "interval": unit.to_string(), "runs": results }), checks))
}

/// Distinct rationals `x < y` in `[0, 1]` with denominators up to 1000.
fn sample_pair(rng: &mut ChaCha8Rng) -> (BigRational, BigRational) {
    let mut draw = || {
        let d: i64 = rng.gen_range(1..=1000);
        BigRational::new(BigInt::from(rng.gen_range(0..=d)), BigInt::from(d))
    };
    loop {
        let (a, b) = (draw(), draw());
        if a != b {
            return if a < b { (a, b) } else { (b, a) };
        }
    }
}

fn cantor_merge_plans(p: &Precision) -> Section {
    let trap = catalog::cantor_trap();
    let max = maximal_merge(&trap, p)?;
    let mut checks = vec![Check::new("maximal merge", "{((-inf, +inf), natural)}", entry_summary(&max))];
    let mut merged = Vec::new();
    for b in [ExtReal::ratio(2, 3), ExtReal::ratio(8, 9), ExtReal::ratio(26, 27)] {
        let out = optional_merge(&trap, &MergePlan::Pairs(vec![(ExtReal::NegInf, b.clone())]))?;
        let hull = out.entries[0].hull().map(|h| h.to_string()).unwrap_or_default();
        checks.push(Check::new(&format!("plan (-inf, {b}) first interval"), format!("(-inf, {b}]"), hull));
        checks.push(Check::new(&format!("plan (-inf, {b}) valid"), "true", verdict_name(&out.validate(p).verdict)));
        merged.push(system_json(&out));
    }
    let rejected = |x: ExtReal, y: ExtReal| match optional_merge(&trap, &MergePlan::Pairs(vec![(x, y)])) {
        Err(Error::InvalidPreMergingPoint { .. }) => "InvalidPreMergingPoint".to_string(),
        Err(e) => format!("{e}"),
        Ok(_) => "accepted".to_string(),
    };
    checks.push(Check::new("plan (2/3, 1) rejected", "InvalidPreMergingPoint", rejected(ExtReal::ratio(2, 3), ExtReal::int(1))));
    checks.push(Check::new("plan (8/9, 2) rejected", "InvalidPreMergingPoint", rejected(ExtReal::ratio(8, 9), ExtReal::int(2))));
    let inside = optional_merge(&trap, &MergePlan::Pairs(vec![(ExtReal::ratio(1, 3), ExtReal::ratio(2, 3))]))?;
    checks.push(Check::new("plan inside one gap is the identity", "true", inside == trap));
    checks.push(Check::new("empty plan is the identity", "true", optional_merge(&trap, &MergePlan::EachMember)? == trap));
    checks.push(Check::new("minimal merge is the identity", "true", minimal_merge(&trap, p)? == trap));
    Ok((json!({ "maximal": system_json(&max), "merged_to_ray": merged }), checks))
}

fn cantor_cores(p: &Precision) -> Section {
    let trap = catalog::cantor_trap();
    let id = generator(catalog::lebesgue(), &trap)?;
    let shift = generator(catalog::shifted_identity(1), &trap)?;
    let with_id = core_check(&trap, &id, p)?;
    let with_shift = core_check(&trap, &shift, p)?;
    let f_shift = f_subspace(&trap, &shift, p)?;
    let f_id = f_subspace(&trap, &id, p)?;
    let same = same_subspace_from(&trap, &shift, &generator(catalog::shifted_identity(2), &trap)?, p)?;
    let checks = vec![
        Check::new("identity gives a core", "false", verdict_name(&with_id.verdict)),
        Check::new("identity failing conditions", "f_scale_isolated", failing(&with_id.conditions)),
        Check::new("Cantor shift gives a core", "true", verdict_name(&with_shift.verdict)),
        Check::new("Cantor shift subspace equals the trap", "true", verdict_name(&check_equality(&f_shift.system, &trap, p)?.verdict)),
        Check::new("identity subspace equals the motion", "true", verdict_name(&check_equality(&f_id.system, &catalog::brownian(), p)?.verdict)),
        Check::new("shifts by 1 and 2 give the same subspace", "true", verdict_name(&same.verdict)),
    ];
    let results = json!({
        "identity": conditions(&with_id.conditions),
        "cantor_shift": conditions(&with_shift.conditions),
        "identity_subspace": system_json(&f_id.system),
        "shift_subspace": system_json(&f_shift.system),
    });
    Ok((results, checks))
}

fn constructed_cores(p: &Precision) -> Section {
    let mut checks = Vec::new();
    let mut results = serde_json::Map::new();
    for (name, s) in [("motion", catalog::brownian()), ("trap", catalog::cantor_trap()), ("bessel", catalog::bessel(2))] {
        let (r, mass, core) = construct_core_json(&s, p)?;
        checks.push(Check::new(&format!("{name}: constructed scale gives a core"), "true", verdict_name(&core.verdict)));
        checks.push(Check { name: format!("{name}: {}", mass.name), ..mass });
        results.insert(name.to_string(), r);
    }
    Ok((Value::Object(results), checks))
}

fn unit_mass_gaps(p: &Precision) -> Section {
    let s = catalog::unit_mass_gaps();
    let id = generator(catalog::lebesgue(), &s)?;
    let min = minimal_merge(&s, p)?;
    let fsub = f_subspace(&s, &id, p)?;
    let max = maximal_merge(&s, p)?;
    let core = core_check(&s, &id, p)?;
    let checks = vec![
        Check::new("minimal merge is the identity", "true", min == s),
        Check::new("identity-generated subspace equals the system", "true", verdict_name(&check_equality(&fsub.system, &s, p)?.verdict)),
        Check::new("maximal merge is the identity", "true", max == s),
        Check::new("identity gives a core", "true", verdict_name(&core.verdict)),
    ];
    Ok((json!({ "system": system_json(&s), "core": conditions(&core.conditions) }), checks))
}

fn fat_cantor(p: &Precision) -> Section {
    let s = catalog::fat_cantor_gaps();
    let id = generator(catalog::lebesgue(), &s)?;
    let core = core_check(&s, &id, p)?;
    let checks = vec![
        Check::new("system valid", "true", verdict_name(&s.validate(p).verdict)),
        Check::new("identity gives a core", "true", verdict_name(&core.verdict)),
        Check::new("identity generates the system", "true", verdict_name(&core.generates_system)),
        Check::new("minimal merge is the identity", "true", minimal_merge(&s, p)? == s),
    ];
    Ok((json!({ "system": system_json(&s), "core": conditions(&core.conditions) }), checks))
}

fn bessel(p: &Precision) -> Section {
    let s = catalog::bessel(2);
    let member = s.entries[0].hull().expect("one member");
    let at_zero = scale_at_zero(&s, &member, p)?;
    let spec = ShrinkSpec { default: Selection::Thinned { eps: BigRational::new(BigInt::from(1), BigInt::from(10)), depth: 12 }, per_entry: vec![] };
    let out = pipeline(&s, &spec, &MergePlan::EachMember, p)?;
    let cand = &out.output;
    let cand_member = cand.entries[0].hull().expect("one member");
    let cand_at_zero = scale_at_zero(cand, &cand_member, p)?;
    let sub = check_subspace(cand, &s, p)?;
    let checks = vec![
        Check::new("system valid", "true", verdict_name(&s.validate(p).verdict)),
        Check::new("scale function at 0", "-inf", at_zero.value.neg()),
        Check::new("0 in the interval", "false", member.contains_real(&Real::zero())),
        Check::judged("candidate scale function at 0", "finite", format!("{} +- {:e}", cand_at_zero.value.neg(), cand_at_zero.err), cand_at_zero.value.is_finite()),
        Check::new("candidate interval", "[0, +inf)", &cand_member),
        Check::new("candidate valid", "true", verdict_name(&cand.validate(p).verdict)),
        Check::new("candidate is a subspace", "true", verdict_name(&sub.verdict)),
        Check::new("system is a subspace of the candidate", "false", verdict_name(&check_subspace(&s, cand, p)?.verdict)),
    ];
    let results = json!({
        "system": system_json(&s),
        "candidate": system_json(cand),
        "subspace": conditions(&sub.conditions),
    });
    Ok((results, checks))
}

/// Scale mass between 0 and the anchor of the member's scale function.
fn scale_at_zero(s: &EffectiveSystem, member: &Interval, p: &Precision) -> Result<Mass, Error> {
    s.member_scale(member).mass(&Window::new(ExtReal::zero(), ExtReal::Finite(member.midpoint())), p)
}

fn killing_mismatch(p: &Precision) -> Section {
    let (a, b) = (catalog::killed_brownian(1), catalog::killed_brownian(2));
    let r = check_subspace(&a, &b, p)?;
    let checks = vec![
        Check::new("both valid", "true,true", format!("{},{}", verdict_name(&a.validate(p).verdict), verdict_name(&b.validate(p).verdict))),
        Check::new("subspace with different killing", "false", verdict_name(&r.verdict)),
        Check::new("failing condition", "cond_killing", failing(&r.conditions)),
        Check::new("same killing", "true", verdict_name(&check_subspace(&a, &catalog::killed_brownian(1), p)?.verdict)),
    ];
    Ok((json!({ "conditions": conditions(&r.conditions) }), checks))
}
