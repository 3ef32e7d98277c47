//! One function per command, each producing a [`Report`].

use effint::energy::{energy, TestFunction};
use effint::generate::{cf_admissible, construct_core_scale, core_check, f_subspace, same_subspace_from, GeneratorScale};
use effint::merge::{maximal_merge, minimal_merge, optional_merge, pipeline, shrink, tight_partition, loose_partition, MergePlan, ShrinkSpec};
use effint::partition::Partition;
use effint::subspace::{check_equality, check_subspace, SubspaceReport};
use effint::system::{EffectiveSystem, MemberBoundary};
use effint::{Error, Real};
use serde_json::{json, Value};

use crate::config::{self, pieces_config, ConfigError};
use crate::gallery;
use crate::report::{conditions, ext_json, mass_json, real_json, system_json, verdict_name, Check, Outcome, Report};
use crate::{Command, Opts};

/// Upper bound on the total mass of the first core measure: `pi^2 / 6`.
pub const CORE_MASS_BOUND: f64 = 1.6449340668482264;

/// Why a command stopped early.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Domain(Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Failure {
        Failure::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Domain(e)
    }
}

type Outcomes = Result<(Outcome, Value, Vec<effint::system::Condition>, Vec<Check>), Failure>;

/// Runs everything except `export`, `schema` and the gallery's parallel mode.
pub fn execute(command: &Command, opts: &Opts) -> Report {
    let (name, inputs) = describe(command);
    if let Command::Gallery { id, all } = command {
        return match (id, all) {
            (_, true) => gallery::run_all(opts),
            (Some(id), false) => gallery::run_one(id, opts),
            (None, false) => {
                let mut r = Report::new(name, inputs, opts.echo(), Outcome::Error);
                r.error = Some(format!("name a gallery entry or pass --all; entries: {}", effint::catalog::GALLERY.join(", ")));
                r
            }
        };
    }
    let mut report = Report::new(name, inputs, opts.echo(), Outcome::Error);
    match dispatch(command, opts) {
        Ok((outcome, results, conds, checks)) => {
            report.set_outcome(outcome);
            report.results = results;
            report.conditions = conditions(&conds);
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

fn describe(command: &Command) -> (&'static str, Vec<String>) {
    let v = |xs: &[&String]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    match command {
        Command::Validate { config } => ("validate", v(&[config])),
        Command::CheckSubspace { candidate, parent } => ("check-subspace", v(&[candidate, parent])),
        Command::CheckEqual { first, second } => ("check-equal", v(&[first, second])),
        Command::Shrink { config, shrink } => ("shrink", vec![config.clone(), format!("shrink={shrink}")]),
        Command::MergeMinimal { config } => ("merge-minimal", v(&[config])),
        Command::MergeMaximal { config } => ("merge-maximal", v(&[config])),
        Command::MergePlan { config, plan } => ("merge-plan", vec![config.clone(), format!("plan={plan}")]),
        Command::Pipeline { config, shrink, plan } => {
            let mut i = vec![config.clone()];
            i.extend(shrink.iter().map(|s| format!("shrink={s}")));
            i.extend(plan.iter().map(|p| format!("plan={p}")));
            ("pipeline", i)
        }
        Command::FSubspace { config, generator } => ("f-subspace", vec![config.clone(), format!("generator={generator}")]),
        Command::CoreCheck { config, generator } => ("core-check", vec![config.clone(), format!("generator={generator}")]),
        Command::ConstructCore { config } => ("construct-core", v(&[config])),
        Command::SameSubspace { config, first, second } => ("same-subspace", vec![config.clone(), format!("first={first}"), format!("second={second}")]),
        Command::Energy { system, tent, function } => {
            let mut i = vec![system.clone()];
            if let Some(t) = tent {
                i.push(format!("tent={}", t.join(" ")));
            }
            i.extend(function.iter().map(|f| format!("function={f}")));
            ("energy", i)
        }
        Command::Gallery { id, all } => ("gallery", if *all { vec!["--all".into()] } else { id.iter().cloned().collect() }),
        Command::Export { name } => ("export", vec![name.clone()]),
        Command::Schema => ("schema", vec![]),
    }
}

fn dispatch(command: &Command, opts: &Opts) -> Outcomes {
    let p = opts.precision();
    match command {
        Command::Validate { config } => {
            let s = config::load(config)?.system;
            let r = s.validate(&p);
            let results = json!({ "system": system_json(&s), "boundaries": boundaries_json(&s.boundaries()) });
            Ok((Outcome::from_verdict(&r.verdict), results, r.conditions, vec![]))
        }
        Command::CheckSubspace { candidate, parent } => {
            let (c, q) = (config::load(candidate)?.system, config::load(parent)?.system);
            let r = check_subspace(&c, &q, &p)?;
            Ok(subspace_outcome(r, &c, &q))
        }
        Command::CheckEqual { first, second } => {
            let (a, b) = (config::load(first)?.system, config::load(second)?.system);
            let r = check_equality(&a, &b, &p)?;
            Ok(subspace_outcome(r, &a, &b))
        }
        Command::Shrink { config, shrink: name } => {
            let l = config::load(config)?;
            let out = shrink(&l.system, &l.shrink(name)?, &p)?;
            let v = out.validate(&p);
            let results = json!({ "output": system_json(&out), "output_valid": verdict_name(&v.verdict) });
            Ok((Outcome::True, results, v.conditions, vec![]))
        }
        Command::MergeMinimal { config } => {
            let s = config::load(config)?.system;
            let part = tight_partition(&s)?;
            let out = minimal_merge(&s, &p)?;
            Ok((Outcome::True, json!({ "partition": partition_json(&part), "output": system_json(&out) }), vec![], vec![]))
        }
        Command::MergeMaximal { config } => {
            let s = config::load(config)?.system;
            let part = loose_partition(&s)?;
            let out = maximal_merge(&s, &p)?;
            Ok((Outcome::True, json!({ "partition": partition_json(&part), "output": system_json(&out) }), vec![], vec![]))
        }
        Command::MergePlan { config, plan } => {
            let l = config::load(config)?;
            let plan = l.plan(plan)?;
            let out = optional_merge(&l.system, &plan)?;
            Ok((Outcome::True, json!({ "plan": plan_json(&plan), "output": system_json(&out) }), vec![], vec![]))
        }
        Command::Pipeline { config, shrink, plan } => {
            let l = config::load(config)?;
            let spec = match shrink {
                Some(n) => l.shrink(n)?,
                None => ShrinkSpec::identity(),
            };
            let plan = match plan {
                Some(n) => l.plan(n)?,
                None => MergePlan::EachMember,
            };
            let out = pipeline(&l.system, &spec, &plan, &p)?;
            let (trace, v) = pipeline_trace(&l.system, &out, &p);
            Ok((Outcome::from_verdict(&v.verdict), json!({ "plan": plan_json(&plan), "trace": trace }), v.conditions, vec![]))
        }
        Command::FSubspace { config, generator } => {
            let l = config::load(config)?;
            let f = GeneratorScale::new(l.generator(generator)?, &l.system.state)?;
            let adm = cf_admissible(&l.system, &f)?;
            let out = f_subspace(&l.system, &f, &p)?;
            let results = json!({
                "abs_scale": pieces_config(&out.abs_scale),
                "partition": partition_json(&out.partition),
                "output": system_json(&out.system),
            });
            Ok((Outcome::True, results, adm.conditions, vec![]))
        }
        Command::CoreCheck { config, generator } => {
            let l = config::load(config)?;
            let f = GeneratorScale::new(l.generator(generator)?, &l.system.state)?;
            let r = core_check(&l.system, &f, &p)?;
            Ok((Outcome::from_verdict(&r.verdict), json!({ "generates_system": verdict_name(&r.generates_system) }), r.conditions, vec![]))
        }
        Command::ConstructCore { config } => {
            let s = config::load(config)?.system;
            let (results, check, r) = construct_core_json(&s, &p)?;
            let outcome = if check.pass { Outcome::from_verdict(&r.verdict) } else { Outcome::False };
            Ok((outcome, results, r.conditions, vec![check]))
        }
        Command::SameSubspace { config, first, second } => {
            let l = config::load(config)?;
            let f1 = GeneratorScale::new(l.generator(first)?, &l.system.state)?;
            let f2 = GeneratorScale::new(l.generator(second)?, &l.system.state)?;
            let r = same_subspace_from(&l.system, &f1, &f2, &p)?;
            Ok((Outcome::from_verdict(&r.verdict), json!({ "mutually_continuous": verdict_name(&r.mutually_continuous) }), vec![], vec![]))
        }
        Command::Energy { system, tent, function } => {
            let l = config::load(system)?;
            let u = match (tent, function) {
                (Some(t), _) => tent_function(t)?,
                (None, Some(name)) => l.test_function(name)?,
                (None, None) => return Err(Error::InvalidInput("pass --tent A B C or --function NAME".into()).into()),
            };
            let e = energy(&l.system, &u, &p)?;
            let results = json!({
                "value": e.value,
                "exact": e.exact.as_ref().map(real_json),
                "err": e.err,
                "method": e.method,
                "boundary_flags": e.boundary_flags,
            });
            Ok((Outcome::True, results, vec![], vec![]))
        }
        Command::Gallery { .. } | Command::Export { .. } | Command::Schema => unreachable!("handled before dispatch"),
    }
}

fn tent_function(t: &[String]) -> Result<TestFunction, Failure> {
    let mut xs = Vec::new();
    for s in t {
        xs.push(s.parse::<Real>().map_err(|e| Error::InvalidInput(e.to_string()))?);
    }
    let knots = vec![(xs[0].clone(), Real::zero()), (xs[1].clone(), Real::one()), (xs[2].clone(), Real::zero())];
    Ok(TestFunction::piecewise_linear(knots)?)
}

fn subspace_outcome(r: SubspaceReport, a: &EffectiveSystem, b: &EffectiveSystem) -> (Outcome, Value, Vec<effint::system::Condition>, Vec<Check>) {
    let results = json!({
        "first": a.to_string(),
        "second": b.to_string(),
        "boundaries": boundaries_json(&r.boundaries),
    });
    (Outcome::from_verdict(&r.verdict), results, r.conditions, vec![])
}

pub fn boundaries_json(bs: &[MemberBoundary]) -> Value {
    bs.iter()
        .map(|b| json!({ "entry": b.entry, "member": b.member.to_string(), "generic": b.generic, "left": b.left.name(), "right": b.right.name() }))
        .collect()
}

pub fn partition_json(p: &Partition) -> Value {
    p.classes.iter().map(|c| Value::String(c.to_string())).collect()
}

pub fn plan_json(plan: &MergePlan) -> Value {
    match plan {
        MergePlan::EachMember => json!("each_member"),
        MergePlan::Pairs(ps) => ps.iter().map(|(a, b)| json!([ext_json(a), ext_json(b)])).collect(),
    }
}

/// The stages of a pipeline run, with validation of each.
pub fn pipeline_trace(input: &EffectiveSystem, out: &effint::merge::PipelineOutput, p: &effint::measure::Precision) -> (Value, effint::system::ValidationReport) {
    let stage = |name: &str, s: &EffectiveSystem| {
        let v = s.validate(p);
        json!({ "stage": name, "valid": verdict_name(&v.verdict), "conditions": conditions(&v.conditions), "system": system_json(s) })
    };
    let trace = json!([stage("input", input), stage("shrunk", &out.shrunk), stage("minimal", &out.minimal), stage("output", &out.output)]);
    (trace, out.output.validate(p))
}

/// Builds a core generator, checks it, and reports the first measure's mass.
pub fn construct_core_json(s: &EffectiveSystem, p: &effint::measure::Precision) -> Result<(Value, Check, effint::generate::CoreReport), Failure> {
    let c = construct_core_scale(s, p)?;
    let r = core_check(s, &c.generator, p)?;
    let upper = c.lambda1_mass.value.to_f64() + c.lambda1_mass.err;
    let check = Check::judged("lambda1 mass + err < pi^2/6", format!("< {CORE_MASS_BOUND}"), upper, upper < CORE_MASS_BOUND);
    let results = json!({
        "lambda1_mass": mass_json(&c.lambda1_mass),
        "lambda1": pieces_config(&c.lambda1),
        "lambda2": pieces_config(&c.lambda2),
        "generates_system": verdict_name(&r.generates_system),
    });
    Ok((results, check, r))
}
