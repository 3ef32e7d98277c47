//! Acceptance suite: one pass/fail line per criterion, then a non-zero exit
//! if any criterion failed.

use std::time::{Duration, Instant};

use effint::catalog;
use effint::energy::energy;
use effint::generate::{construct_core_scale, core_check, f_subspace, GeneratorScale};
use effint::interval::{Interval, Window};
use effint::measure::{Precision, ScaleMeasure};
use effint::merge::{maximal_merge, minimal_merge, optional_merge, pipeline, thinned_scale, tight_partition, MergePlan, Selection, ShrinkSpec};
use effint::partition::{partition, RelationKind};
use effint::relation::{rn_relation, Relation};
use effint::sample::{random_step, random_system, random_test_function};
use effint::subspace::{check_equality, check_subspace};
use effint::system::{Condition, EffectiveSystem};
use effint::thinned::RationalIndex;
use effint::{Error, ExtReal, Real};
use effint_cli::run;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Total mass bound for the first core measure.
const CORE_MASS_BOUND: f64 = 1.645;
/// Relative tolerance for energy coherence.
const ENERGY_REL_TOL: f64 = 1e-6;
/// Wall-clock limit per criterion.
const TIME_LIMIT: Duration = Duration::from_secs(10);
const ENERGY_SAMPLES: u64 = 50;
const ORDER_SAMPLES: u64 = 100;
const INCREASE_PAIRS: usize = 1000;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s(e: Error) -> String {
    e.to_string()
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn failing(conds: &[Condition]) -> Vec<String> {
    conds.iter().filter(|c| !c.verdict.is_true()).map(|c| c.name.clone()).collect()
}

fn unit_closed() -> Vec<effint::family::IntervalFamily> {
    vec![effint::family::IntervalFamily::single(Interval::closed(Real::int(-1), Real::int(1)))]
}

fn cli(args: &[&str]) -> effint_cli::RunOutput {
    run(std::iter::once("effint").chain(args.iter().copied()))
}

fn criterion_1(p: &Precision) -> Outcome {
    let (bm, trap) = (catalog::brownian(), catalog::cantor_trap());
    let down = check_subspace(&bm, &trap, p).map_err(e2s)?;
    ensure(down.verdict.is_true(), || format!("motion in trap: {:?}", down.verdict))?;
    let up = check_subspace(&trap, &bm, p).map_err(e2s)?;
    ensure(up.verdict.is_false() && failing(&up.conditions) == ["cond_coarser"], || format!("trap in motion: {:?} failing {:?}", up.verdict, failing(&up.conditions)))?;
    let s = trap.scale_measure_of().map_err(e2s)?;
    let leb = catalog::lebesgue();
    let rel = (rn_relation(&s, &leb), rn_relation(&leb, &s));
    ensure(rel == (Relation::ZeroOne, Relation::ZeroOne), || format!("scale relations {} / {}", rel.0, rel.1))?;
    let eq = check_equality(&bm, &trap, p).map_err(e2s)?;
    ensure(eq.verdict.is_false(), || "motion and trap reported equal".into())?;
    let out = cli(&["check-subspace", "builtin:brownian", "builtin:cantor-trap"]);
    ensure(out.code == 0, || format!("command exit code {}", out.code))?;
    Ok("motion in trap; reverse fails cond_coarser; scale zero-one both ways; not equal".into())
}

fn criterion_2(p: &Precision) -> Outcome {
    for (name, s) in [("split-at-zero", catalog::split_at_zero()), ("harmonic-chain", catalog::harmonic_chain()), ("double-chain", catalog::double_chain())] {
        let out = pipeline(&s, &ShrinkSpec::identity(), &MergePlan::EachMember, p).map_err(e2s)?;
        ensure(out.output.entries == unit_closed() && out.output.scale_label(0) == "natural", || format!("{name}: output {}", out.output))?;
        ensure(out.output.validate(p).verdict.is_true(), || format!("{name}: output invalid"))?;
        let v = out.shrunk.validate(p);
        ensure(failing(&v.conditions) == ["adapted"], || format!("{name}: pre-effective stage failing {:?}", failing(&v.conditions)))?;
        let tight = tight_partition(&s).map_err(e2s)?;
        ensure(tight.classes.len() == 1, || format!("{name}: {} tight classes", tight.classes.len()))?;
    }
    let v = catalog::split_at_zero().validate(p);
    let detail = v.conditions.iter().find(|c| c.name == "adapted").map(|c| c.detail.clone()).unwrap_or_default();
    ensure(detail.split(|c: char| !(c.is_ascii_alphanumeric() || "-/.".contains(c))).any(|t| t == "0"), || format!("adaptedness failure not located at 0: {detail}"))?;
    Ok("three chains merge to {([-1, 1], natural)}; adaptedness fails at 0; one tight class each".into())
}

fn criterion_3(p: &Precision) -> Outcome {
    let unit = Interval::closed(Real::zero(), Real::one());
    let base = catalog::lebesgue();
    let input = base.restrict_to_window(&unit.interior());
    let mut notes = Vec::new();
    for eps in [q(1, 10), q(1, 100)] {
        let (set, m) = thinned_scale(&unit, &base, eps.clone(), 20, p).map_err(e2s)?;
        let bound = set.mass_bound(p).map_err(e2s)?;
        ensure(bound.is_exact() && bound < Real::Exact(eps.clone()), || format!("eps {eps}: mass bound {bound}"))?;
        let direct = m.mass(&Window::full(), p).map_err(e2s)?;
        ensure(direct.value.to_f64() + direct.err < eps_f64(&eps), || format!("eps {eps}: mass {:?}", direct))?;
        ensure(rn_relation(&m, &input) == Relation::ZeroOne, || format!("eps {eps}: relation {}", rn_relation(&m, &input)))?;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut index = RationalIndex::new(&unit);
        for _ in 0..INCREASE_PAIRS {
            let (x, y) = loop {
                let a = rational_in_unit(&mut rng);
                let b = rational_in_unit(&mut rng);
                if a != b {
                    break if a < b { (a, b) } else { (b, a) };
                }
            };
            set.increase_witness(&x, &y, &mut index, p).map_err(|e| format!("eps {eps}: ({x}, {y}): {e}"))?;
        }
        let (again, m2) = thinned_scale(&unit, &base, eps.clone(), 20, p).map_err(e2s)?;
        ensure(again == set && m2 == m, || format!("eps {eps}: rebuild differs"))?;
        notes.push(format!("eps {eps}: bound {bound}"));
    }
    let a = cli(&["gallery", "thinned-unit"]);
    ensure(a.code == 0 && a == cli(&["gallery", "thinned-unit"]), || "gallery entry failed or differs between runs".into())?;
    Ok(format!("{}; {INCREASE_PAIRS} pairs increasing; zero-one; deterministic", notes.join(", ")))
}

fn eps_f64(eps: &BigRational) -> f64 {
    Real::Exact(eps.clone()).to_f64()
}

fn rational_in_unit(rng: &mut ChaCha8Rng) -> BigRational {
    let d: i64 = rng.gen_range(1..=1000);
    q(rng.gen_range(0..=d), d)
}

fn criterion_4(p: &Precision) -> Outcome {
    let trap = catalog::cantor_trap();
    let max = maximal_merge(&trap, p).map_err(e2s)?;
    ensure(max.entries == catalog::brownian().entries && max.scale_label(0) == "natural", || format!("maximal merge {max}"))?;
    for b in [ExtReal::ratio(2, 3), ExtReal::ratio(8, 9), ExtReal::ratio(26, 27), ExtReal::ratio(2, 9)] {
        let out = optional_merge(&trap, &MergePlan::Pairs(vec![(ExtReal::NegInf, b.clone())])).map_err(e2s)?;
        let hull = out.entries[0].hull().map(|h| h.to_string()).unwrap_or_default();
        ensure(hull == format!("(-inf, {b}]"), || format!("plan to {b}: first interval {hull}"))?;
        ensure(out.validate(p).verdict.is_true(), || format!("plan to {b}: output invalid"))?;
    }
    for (x, y) in [(ExtReal::ratio(2, 3), ExtReal::int(1)), (ExtReal::ratio(8, 9), ExtReal::int(5))] {
        let r = optional_merge(&trap, &MergePlan::Pairs(vec![(x.clone(), y.clone())]));
        ensure(matches!(r, Err(Error::InvalidPreMergingPoint { .. })), || format!("plan ({x}, {y}) not rejected"))?;
    }
    ensure(optional_merge(&trap, &MergePlan::EachMember).map_err(e2s)? == trap, || "trivial plan changed the system".into())?;
    Ok("maximal merge (R, natural); rays merge to (-inf, b]; plans from gap ends rejected; trivial plan identity".into())
}

fn generator(m: ScaleMeasure, s: &EffectiveSystem) -> Result<GeneratorScale, String> {
    GeneratorScale::new(m, &s.state).map_err(e2s)
}

fn criterion_5(p: &Precision) -> Outcome {
    let trap = catalog::cantor_trap();
    let id = generator(catalog::lebesgue(), &trap)?;
    let shift = generator(catalog::shifted_identity(1), &trap)?;
    ensure(core_check(&trap, &id, p).map_err(e2s)?.verdict.is_false(), || "identity accepted as core generator on the trap".into())?;
    ensure(core_check(&trap, &shift, p).map_err(e2s)?.verdict.is_true(), || "Cantor shift rejected on the trap".into())?;
    let fs = f_subspace(&trap, &shift, p).map_err(e2s)?;
    ensure(check_equality(&fs.system, &trap, p).map_err(e2s)?.verdict.is_true(), || format!("shift subspace {}", fs.system))?;
    let fi = f_subspace(&trap, &id, p).map_err(e2s)?;
    ensure(check_equality(&fi.system, &catalog::brownian(), p).map_err(e2s)?.verdict.is_true(), || format!("identity subspace {}", fi.system))?;
    let u = catalog::unit_mass_gaps();
    let uid = generator(catalog::lebesgue(), &u)?;
    let fmerge = f_subspace(&u, &uid, p).map_err(e2s)?.system;
    ensure(minimal_merge(&u, p).map_err(e2s)? == u, || "unit gaps: minimal merge moved".into())?;
    ensure(check_equality(&fmerge, &u, p).map_err(e2s)?.verdict.is_true(), || format!("unit gaps: f-merge {fmerge}"))?;
    ensure(maximal_merge(&u, p).map_err(e2s)? == u, || "unit gaps: maximal merge moved".into())?;
    let fat = catalog::fat_cantor_gaps();
    let r = core_check(&fat, &generator(catalog::lebesgue(), &fat)?, p).map_err(e2s)?;
    ensure(r.verdict.is_true(), || format!("fat Cantor: identity rejected, failing {:?}", failing(&r.conditions)))?;
    Ok("trap: identity no, shift yes and regenerates the trap, identity gives the motion; unit gaps all identity; fat Cantor identity core".into())
}

fn criterion_6(p: &Precision) -> Outcome {
    let mut masses = Vec::new();
    for (name, s) in [("motion", catalog::brownian()), ("trap", catalog::cantor_trap()), ("bessel", catalog::bessel(2))] {
        let c = construct_core_scale(&s, p).map_err(|e| format!("{name}: {e}"))?;
        let r = core_check(&s, &c.generator, p).map_err(e2s)?;
        ensure(r.verdict.is_true(), || format!("{name}: failing {:?}", failing(&r.conditions)))?;
        let upper = c.lambda1_mass.value.to_f64() + c.lambda1_mass.err;
        ensure(upper < CORE_MASS_BOUND, || format!("{name}: lambda1 mass up to {upper}"))?;
        masses.push(format!("{name} {upper:.4}"));
    }
    Ok(format!("all pass core_check; lambda1 mass {}", masses.join(", ")))
}

fn criterion_7(p: &Precision) -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..ENERGY_SAMPLES {
        let mut rng = ChaCha8Rng::seed_from_u64(7_000 + seed);
        let parent = random_system(&mut rng);
        let cand = random_step(&parent, &mut rng, p).map_err(e2s)?;
        ensure(check_subspace(&cand, &parent, p).map_err(e2s)?.verdict.is_true(), || format!("seed {seed}: candidate not a subspace"))?;
        let plain = random_test_function(&mut rng);
        let (u, ec) = match energy(&cand, &plain, p) {
            Ok(e) => (plain, e),
            Err(Error::NotAbsolutelyContinuous(_)) => {
                let u = plain.through(cand.scale.clone());
                let e = energy(&cand, &u, p).map_err(e2s)?;
                (u, e)
            }
            Err(e) => return Err(format!("seed {seed}: {e}")),
        };
        let ep = energy(&parent, &u, p).map_err(e2s)?;
        let rel = (ec.value - ep.value).abs() / ep.value.abs().max(1.0);
        worst = worst.max(rel);
        ensure(rel <= ENERGY_REL_TOL, || format!("seed {seed}: {} vs {}", ec.value, ep.value))?;
    }
    Ok(format!("{ENERGY_SAMPLES} samples, worst relative gap {worst:e}"))
}

fn criterion_8(p: &Precision) -> Outcome {
    for seed in 0..ORDER_SAMPLES {
        let mut rng = ChaCha8Rng::seed_from_u64(8_000 + seed);
        let a = random_system(&mut rng);
        ensure(a.validate(p).verdict.is_true(), || format!("seed {seed}: generated system invalid"))?;
        ensure(check_subspace(&a, &a, p).map_err(e2s)?.verdict.is_true(), || format!("seed {seed}: not reflexive"))?;
        ensure(tight_partition(&a).map_err(e2s)?.all_singletons(), || format!("seed {seed}: own tight partition not singletons"))?;
        let b = random_step(&a, &mut rng, p).map_err(e2s)?;
        let c = random_step(&b, &mut rng, p).map_err(e2s)?;
        let holds = |x: &EffectiveSystem, y: &EffectiveSystem| check_subspace(x, y, p).map(|r| r.verdict.is_true()).map_err(e2s);
        ensure(holds(&b, &a)? && holds(&c, &b)?, || format!("seed {seed}: generated steps are not subspaces"))?;
        ensure(holds(&c, &a)?, || format!("seed {seed}: transitivity fails"))?;
    }
    let gallery_systems = [
        catalog::cantor_trap(),
        catalog::unit_mass_gaps(),
        catalog::fat_cantor_gaps(),
        catalog::brownian(),
        catalog::bessel(2),
        catalog::split_at_zero(),
        catalog::harmonic_chain(),
        catalog::double_chain(),
    ];
    for s in &gallery_systems {
        // The fat Cantor staircase has no supported relation to the fat gaps,
        // so the trivial part there comes from Lebesgue measure.
        let f = if *s == catalog::fat_cantor_gaps() { catalog::lebesgue() } else { catalog::shifted_identity(1) };
        let trivial = f.restrict_to_complement(&s.entries).map_err(e2s)?;
        let tight = partition(&s.entries, &s.scale, RelationKind::Tight).map_err(e2s)?;
        let fs = partition(&s.entries, &s.scale, RelationKind::FScale { trivial: &trivial }).map_err(e2s)?;
        let loose = partition(&s.entries, &s.scale, RelationKind::Loose).map_err(e2s)?;
        ensure(tight.refines(&fs) && fs.refines(&loose), || format!("partition chain fails on {s}"))?;
        if s.validate(p).verdict.is_true() {
            ensure(tight.all_singletons(), || format!("own tight partition not singletons on {s}"))?;
        }
    }
    Ok(format!("reflexive, singleton tight partitions and transitive on {ORDER_SAMPLES} samples; partition chain on {} gallery systems", gallery_systems.len()))
}

fn criterion_9(p: &Precision) -> Outcome {
    let s = catalog::bessel(2);
    ensure(s.validate(p).verdict.is_true(), || "Bessel system invalid".into())?;
    let member = s.entries[0].hull().ok_or("no member")?;
    let anchor = Window::new(ExtReal::zero(), ExtReal::Finite(member.midpoint()));
    ensure(s.member_scale(&member).mass(&anchor, p).map_err(e2s)?.value == ExtReal::PosInf, || "scale function finite at 0".into())?;
    ensure(!member.contains_real(&Real::zero()), || "0 belongs to the interval".into())?;
    let spec = ShrinkSpec { default: Selection::Thinned { eps: q(1, 10), depth: 12 }, per_entry: vec![] };
    let cand = pipeline(&s, &spec, &MergePlan::EachMember, p).map_err(e2s)?.output;
    let cm = cand.entries[0].hull().ok_or("no candidate member")?;
    ensure(cm == Interval::new(ExtReal::zero(), ExtReal::PosInf, true, false).unwrap(), || format!("candidate interval {cm}"))?;
    let at_zero = cand.member_scale(&cm).mass(&Window::new(ExtReal::zero(), ExtReal::Finite(cm.midpoint())), p).map_err(e2s)?;
    ensure(at_zero.value.is_finite(), || "candidate scale function infinite at 0".into())?;
    ensure(check_subspace(&cand, &s, p).map_err(e2s)?.verdict.is_true(), || "candidate not a subspace".into())?;
    let r = check_subspace(&catalog::killed_brownian(1), &catalog::killed_brownian(2), p).map_err(e2s)?;
    ensure(r.verdict.is_false() && failing(&r.conditions) == ["cond_killing"], || format!("killing mismatch: failing {:?}", failing(&r.conditions)))?;
    Ok("Bessel valid with s(0) = -inf; thinned candidate on [0, +inf) is a subspace; killing mismatch fails cond_killing".into())
}

fn criterion_10() -> Outcome {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/");
    let cfg = |f: &str| format!("{dir}{f}");
    let (bm, trap, bessel) = (cfg("bm.json"), cfg("cantor_trap.json"), cfg("bessel.json"));
    let commands: Vec<Vec<&str>> = vec![
        vec!["validate", &trap],
        vec!["check-subspace", &bm, &trap],
        vec!["check-equal", &bm, &trap],
        vec!["shrink", &bm, "--shrink", "thinned"],
        vec!["merge-minimal", &trap],
        vec!["merge-maximal", &trap],
        vec!["merge-plan", &trap, "--plan", "ray-to-first-gap"],
        vec!["pipeline", &bessel, "--shrink", "thinned"],
        vec!["f-subspace", &trap, "--generator", "cantor-shift"],
        vec!["core-check", &trap, "--generator", "cantor-shift"],
        vec!["construct-core", &bessel],
        vec!["energy", "--system", &trap, "--tent", "-1", "1/2", "2"],
    ];
    for args in &commands {
        for threads in ["1", "4"] {
            let mut a = args.clone();
            a.extend(["--threads", threads]);
            let first = cli(&a);
            ensure(first == cli(args), || format!("{args:?} differs across thread counts"))?;
            ensure(first == cli(&a), || format!("{args:?} differs between runs"))?;
        }
    }
    let all = cli(&["gallery", "--all", "--threads", "1"]);
    for threads in ["1", "3", "8"] {
        ensure(all == cli(&["gallery", "--all", "--threads", threads]), || format!("gallery differs with {threads} threads"))?;
    }
    ensure(all.code == 0, || "gallery reports a failure".into())?;
    Ok(format!("{} commands and the full gallery byte-identical across runs and thread counts", commands.len()))
}

fn main() {
    let p = Precision::default();
    let criteria: Vec<(u32, Box<dyn Fn() -> Outcome>)> = vec![
        (1, Box::new(move || criterion_1(&p))),
        (2, Box::new(move || criterion_2(&p))),
        (3, Box::new(move || criterion_3(&p))),
        (4, Box::new(move || criterion_4(&p))),
        (5, Box::new(move || criterion_5(&p))),
        (6, Box::new(move || criterion_6(&p))),
        (7, Box::new(move || criterion_7(&p))),
        (8, Box::new(move || criterion_8(&p))),
        (9, Box::new(move || criterion_9(&p))),
        (10, Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (n, f) in criteria {
        let start = Instant::now();
        let result = f();
        let took = start.elapsed();
        let (status, note) = match result {
            Ok(note) if took < TIME_LIMIT => ("PASS", note),
            Ok(note) => ("FAIL", format!("{note}; exceeded {} s", TIME_LIMIT.as_secs())),
            Err(why) => ("FAIL", why),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("criterion {n}: {status} ({note}) [{:.2} s]", took.as_secs_f64());
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
