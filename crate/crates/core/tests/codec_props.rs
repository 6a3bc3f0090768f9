use oilu_core::codec::{
    digit_to_pattern, facet_values, pattern_to_digit, rotate_digit, rotate_pattern_ccw, Digit,
    OiluNumber, Side, SidePattern, DIGIT_PATTERNS,
};
use proptest::prelude::*;

fn digit() -> impl Strategy<Value = Digit> {
    (0u8..10).prop_map(|v| Digit::new(v).unwrap())
}

fn number() -> impl Strategy<Value = OiluNumber> {
    prop::collection::vec(digit(), 1..=8).prop_map(|d| OiluNumber::new(d).unwrap())
}

fn valid_pattern() -> impl Strategy<Value = SidePattern> {
    (1u8..16)
        .prop_map(SidePattern::from_mask)
        .prop_filter("valid", |p| p.is_valid())
}

// The quarter-turn side map written out independently of the library.
fn turn_side_ccw(s: Side) -> Side {
    match s {
        Side::Right => Side::Top,
        Side::Top => Side::Left,
        Side::Left => Side::Bottom,
        Side::Bottom => Side::Right,
    }
}

proptest! {
    #[test]
    fn round_trip(d in digit()) {
        prop_assert_eq!(pattern_to_digit(digit_to_pattern(d)).unwrap(), d);
    }

    #[test]
    fn group_law(d in digit(), a in -8i32..8, b in -8i32..8) {
        prop_assert_eq!(rotate_digit(rotate_digit(d, a), b), rotate_digit(d, (a + b).rem_euclid(4)));
        prop_assert_eq!(rotate_digit(d, 0), d);
        prop_assert_eq!(rotate_digit(d, 4), d);
    }

    #[test]
    fn commuting_square(d in digit(), k in 0i32..4) {
        let turned = rotate_pattern_ccw(digit_to_pattern(d), k);
        prop_assert_eq!(pattern_to_digit(turned).unwrap(), rotate_digit(d, k));
    }

    #[test]
    fn pattern_rotation_matches_side_map(p in valid_pattern(), k in 0i32..4) {
        let mut want = SidePattern::EMPTY;
        for s in p.sides() {
            let mut t = s;
            for _ in 0..k {
                t = turn_side_ccw(t);
            }
            want = want.with(t);
        }
        prop_assert_eq!(rotate_pattern_ccw(p, k), want);
        prop_assert_eq!(rotate_pattern_ccw(p, 4), p);
    }

    #[test]
    fn facet_closure(n in number(), k in 0usize..4) {
        let group = facet_values(&n);
        let member = &group.values[k];
        prop_assert_eq!(facet_values(member).as_set(), group.as_set());
        prop_assert_eq!(&group.values[0], &n);
    }

    #[test]
    fn facet_is_digitwise(n in number(), k in 0i32..4) {
        let g = facet_values(&n);
        let expect: Vec<Digit> = n.digits().iter().map(|&d| rotate_digit(d, k)).collect();
        prop_assert_eq!(g.values[k as usize].digits(), &expect[..]);
    }

    #[test]
    fn parse_display_round_trip(s in "[0-9]{1,16}") {
        prop_assert_eq!(OiluNumber::parse(&s).unwrap().to_string(), s);
    }
}

#[test]
fn facet_set_of_4670() {
    let n = OiluNumber::parse("4670").unwrap();
    let mut got = facet_values(&n).as_set();
    got.sort();
    assert_eq!(got, ["2450", "4670", "6890", "8230"]);
}

#[test]
fn fixed_digits_have_trivial_facets() {
    for s in ["0", "1111"] {
        let n = OiluNumber::parse(s).unwrap();
        assert!(facet_values(&n).values.iter().all(|v| v == &n));
    }
}

#[test]
fn four_single_sides_read_as_one() {
    for s in Side::ALL {
        assert_eq!(
            pattern_to_digit(SidePattern::from_sides(&[s]))
                .unwrap()
                .value(),
            1
        );
    }
}

#[test]
fn table_is_injective_on_multi_side_patterns() {
    let multi: Vec<_> = DIGIT_PATTERNS.iter().filter(|p| p.len() > 1).collect();
    for (i, a) in multi.iter().enumerate() {
        for b in &multi[i + 1..] {
            assert_ne!(a, b);
        }
    }
    assert_eq!(multi.len(), 9);
}
