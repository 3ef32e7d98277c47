use effint::catalog::*;
use effint::energy::{energy, TestFunction};
use effint::family::IntervalFamily;
use effint::generate::{construct_core_scale, core_check, f_subspace, same_subspace_from, GeneratorScale};
use effint::measure::{Precision, ScaleMeasure};
use effint::merge::{maximal_merge, minimal_merge, pipeline, shrink, tight_partition, MergePlan, Selection, ShrinkSpec};
use effint::partition::{partition, RelationKind};
use effint::relation::{rn_relation, Relation};
use effint::subspace::{check_equality, check_subspace};
use effint::{ExtReal, Interval, Real};
use num_rational::BigRational;

fn prec() -> Precision {
    Precision::default()
}

fn unit_closed() -> Vec<IntervalFamily> {
    vec![IntervalFamily::single(Interval::closed(Real::int(-1), Real::int(1)))]
}

fn generator(m: ScaleMeasure) -> GeneratorScale {
    GeneratorScale::new(m, &Interval::real_line()).unwrap()
}

#[test]
fn chains_of_touching_intervals_merge_to_the_unit_interval() {
    for s in [split_at_zero(), harmonic_chain(), double_chain()] {
        let out = pipeline(&s, &ShrinkSpec::identity(), &MergePlan::EachMember, &prec()).unwrap();
        assert!(out.shrunk.validate(&prec()).verdict.is_false());
        assert_eq!(out.output.entries, unit_closed(), "{s}");
        assert_eq!(out.output.scale, s.scale);
        assert_eq!(out.output.scale_label(0), "natural");
        assert!(out.output.validate(&prec()).verdict.is_true());
    }
}

#[test]
fn tight_partition_of_the_harmonic_chain_is_one_class() {
    let p = tight_partition(&harmonic_chain()).unwrap();
    assert_eq!(p.classes.len(), 1);
}

#[test]
fn valid_systems_are_tightly_isolated() {
    for s in [brownian(), cantor_trap(), unit_mass_gaps(), fat_cantor_gaps(), bessel(2)] {
        assert!(tight_partition(&s).unwrap().all_singletons(), "{s}");
        assert_eq!(minimal_merge(&s, &prec()).unwrap(), s);
    }
}

#[test]
fn unit_mass_gaps_merge_nowhere() {
    let p = prec();
    let s = unit_mass_gaps();
    assert_eq!(maximal_merge(&s, &p).unwrap(), s);
    let f = generator(lebesgue());
    let fsub = f_subspace(&s, &f, &p).unwrap();
    assert!(check_equality(&fsub.system, &s, &p).unwrap().verdict.is_true());
    assert!(core_check(&s, &f, &p).unwrap().verdict.is_true());
}

#[test]
fn fat_cantor_gaps_have_the_identity_core() {
    let p = prec();
    let s = fat_cantor_gaps();
    let r = core_check(&s, &generator(lebesgue()), &p).unwrap();
    assert!(r.verdict.is_true(), "{:?}", r.conditions);
    assert!(r.generates_system.is_true());
}

#[test]
fn bessel_origin_and_thinned_candidate() {
    let p = prec();
    let s = bessel(2);
    assert!(!s.entries[0].hull().unwrap().left_closed);
    let spec = ShrinkSpec { default: Selection::Thinned { eps: BigRational::new(1.into(), 10.into()), depth: 12 }, per_entry: vec![] };
    let out = pipeline(&s, &spec, &MergePlan::EachMember, &p).unwrap();
    let hull = out.output.entries[0].hull().unwrap();
    assert_eq!(hull, Interval::new(ExtReal::zero(), ExtReal::PosInf, true, false).unwrap());
    assert!(out.output.validate(&p).verdict.is_true());
    assert!(check_subspace(&out.output, &s, &p).unwrap().verdict.is_true());
    assert!(check_subspace(&s, &out.output, &p).unwrap().verdict.is_false());
}

#[test]
fn constructed_cores_pass() {
    let p = prec();
    for s in [brownian(), cantor_trap(), bessel(2), unit_mass_gaps(), fat_cantor_gaps()] {
        let c = construct_core_scale(&s, &p).unwrap();
        assert!(c.lambda1_mass.value.finite().unwrap().to_f64() + c.lambda1_mass.err < 1.645, "{s}");
        assert!(matches!(rn_relation(&c.lambda1, &s.scale), Relation::ZeroOne | Relation::AcGeneral(_)));
        assert!(rn_relation(&s.scale, &c.lambda1).is_absolutely_continuous());
        let r = core_check(&s, &c.generator, &p).unwrap();
        assert!(r.verdict.is_true(), "{s}: {:?}", r.conditions);
    }
}

#[test]
fn cantor_shift_on_the_trap() {
    let p = prec();
    let s = cantor_trap();
    let f = generator(shifted_identity(1));
    assert!(core_check(&s, &f, &p).unwrap().verdict.is_true());
    let out = f_subspace(&s, &f, &p).unwrap();
    assert!(check_equality(&out.system, &s, &p).unwrap().verdict.is_true());
    assert!(same_subspace_from(&s, &f, &generator(shifted_identity(2)), &p).unwrap().verdict.is_true());
    let id = f_subspace(&s, &generator(lebesgue()), &p).unwrap();
    assert!(check_equality(&id.system, &brownian(), &p).unwrap().verdict.is_true());
}

#[test]
fn partition_chain_on_gallery_systems() {
    for s in [cantor_trap(), unit_mass_gaps(), fat_cantor_gaps(), brownian(), split_at_zero(), harmonic_chain(), double_chain()] {
        let f = if s == fat_cantor_gaps() { lebesgue() } else { shifted_identity(1) };
        let trivial = f.restrict_to_complement(&s.entries).unwrap();
        let tight = partition(&s.entries, &s.scale, RelationKind::Tight).unwrap();
        let fs = partition(&s.entries, &s.scale, RelationKind::FScale { trivial: &trivial }).unwrap();
        let loose = partition(&s.entries, &s.scale, RelationKind::Loose).unwrap();
        assert!(tight.refines(&fs) && fs.refines(&loose), "{s}");
    }
}

#[test]
fn shrink_off_cantor_keeps_lebesgue_scale() {
    let s = brownian();
    let spec = ShrinkSpec { default: Selection::OffCantor(effint::cantor::CantorSpec::standard()), per_entry: vec![] };
    let out = shrink(&s, &spec, &prec()).unwrap();
    assert_eq!(rn_relation(&out.scale, &s.scale), Relation::ZeroOne);
}

#[test]
fn energy_agrees_between_trap_and_motion() {
    let p = prec();
    let knots = vec![(Real::int(-1), Real::zero()), (Real::ratio(1, 2), Real::int(2)), (Real::int(2), Real::zero())];
    let u = TestFunction::piecewise_linear(knots).unwrap();
    let a = energy(&brownian(), &u, &p).unwrap();
    let b = energy(&cantor_trap(), &u, &p).unwrap();
    assert!((a.value - b.value).abs() <= 1e-6 * a.value.abs().max(1.0));
}
