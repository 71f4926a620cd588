use proptest::prelude::*;
use qpu::goodvec::compute_rgda;
use qpu::local::{bad_primes, everywhere_locally, genera, local_represents, LocalOracle};
use qpu::sieve::family_members;
use qpu::{build_sieve, parse_form, represents_direct, DiagonalForm, ExcludedFamily, GramForm, RepresentationSieve};

fn diag(c: &[u64]) -> GramForm {
    DiagonalForm::new(c.to_vec()).unwrap().to_gram()
}

fn coefficients(max_rank: usize) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(1u64..=30, 1..=max_rank)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sieve_agrees_with_direct_search(c in coefficients(4)) {
        let g = diag(&c);
        let s = build_sieve(&g, 1500).unwrap();
        for n in 0..=1500 {
            let direct = represents_direct(&g, n);
            prop_assert_eq!(s.represents(n), direct.is_some(), "n = {}", n);
            if let Some(v) = direct {
                prop_assert_eq!(g.evaluate(&v.witness).unwrap(), n);
            }
        }
    }

    #[test]
    fn coupled_gram_sieve_agrees_with_direct_search(a in 1i64..=6, b in 0i64..=3, c in 1i64..=12) {
        // [[2a, b, 0], [b, 2c, 0], [0, 0, 1]] is positive definite when b^2 < 4ac
        prop_assume!(b * b < 4 * a * c);
        let g = GramForm::new(vec![vec![2 * a, b, 0], vec![b, 2 * c, 0], vec![0, 0, 1]]).unwrap();
        let s = build_sieve(&g, 800).unwrap();
        for n in 0..=800 {
            prop_assert_eq!(s.represents(n), represents_direct(&g, n).is_some(), "n = {}", n);
        }
    }

    #[test]
    fn global_implies_local(c in coefficients(3), n in 1u64..3000) {
        let g = diag(&c);
        if represents_direct(&g, n).is_some() {
            for p in [2, 3, 5, 7, 11, 13] {
                prop_assert!(local_represents(&g, n, p), "p = {}", p);
            }
        }
    }

    #[test]
    fn family_membership_matches_its_definition(base in 1u64..=9, m in 2u64..=32, r in 0u64..32) {
        let fam = ExcludedFamily::new(base, m, &[r % m]);
        let members = family_members(&fam, 3000);
        let mut expected = Vec::new();
        for n in 1..=3000u64 {
            let mut u = n;
            let mut hit = u % m == r % m;
            while base > 1 && !hit && u % base == 0 {
                u /= base;
                hit = u % m == r % m;
            }
            if hit {
                expected.push(n);
            }
        }
        prop_assert_eq!(members, expected);
    }

    #[test]
    fn sieve_file_round_trip(c in coefficients(4), bound in 1u64..5000) {
        let g = diag(&c);
        let s = build_sieve(&g, bound).unwrap();
        let mut bytes = Vec::new();
        s.write_to(&mut bytes).unwrap();
        prop_assert_eq!(bytes.len() as u64, 16 + bound / 8 + 1);
        let back = RepresentationSieve::read_from(g, bytes.as_slice()).unwrap();
        prop_assert_eq!(back.bits(), s.bits());
    }

    #[test]
    fn form_literals_round_trip(c in coefficients(8)) {
        let f = DiagonalForm::new(c).unwrap();
        let again: DiagonalForm = f.to_string().parse().unwrap();
        prop_assert_eq!(&again, &f);
        prop_assert_eq!(parse_form(&format!("{f}")).unwrap().into_gram(), f.to_gram());
    }
}

#[test]
fn class_number_one_genera_collapse_to_local_conditions() {
    for genus in genera().iter().filter(|g| g.class_number == 1) {
        let f = &genus.representative;
        let oracles: Vec<LocalOracle> = bad_primes(f).into_iter().map(|p| LocalOracle::new(f, p)).collect();
        let s = build_sieve(f, 5000).unwrap();
        for n in 1..=5000 {
            assert_eq!(s.represents(n), everywhere_locally(&oracles, n), "{f} at {n}");
        }
    }
}

#[test]
fn larger_genera_represent_exactly_the_local_values() {
    for genus in genera().iter().filter(|g| g.class_number > 1) {
        let f = &genus.representative;
        let oracles: Vec<LocalOracle> = bad_primes(f).into_iter().map(|p| LocalOracle::new(f, p)).collect();
        let sieves: Vec<RepresentationSieve> = genus.members().map(|m| build_sieve(m, 5000).unwrap()).collect();
        for n in 1..=5000 {
            let any = sieves.iter().any(|s| s.represents(n));
            assert_eq!(any, everywhere_locally(&oracles, n), "genus of {f} at {n}");
        }
    }
}

#[test]
fn coset_sets_partition_the_residue_cube() {
    for (g, d) in [("2,3,5", 7), ("1,1,30", 8), ("2,3,7", 30), ("[[2,1,1],[1,3,1],[1,1,9]]", 12)] {
        let g = parse_form(g).unwrap().into_gram();
        let mut seen = vec![0u8; (d * d * d) as usize];
        for a in 0..d {
            for v in compute_rgda(&g, d, a).unwrap().vectors {
                assert_eq!(g.evaluate(&v.map(|x| x as i64)).unwrap() % d, a);
                seen[((v[0] * d + v[1]) * d + v[2]) as usize] += 1;
            }
        }
        assert!(seen.iter().all(|&k| k == 1), "{g} mod {d}");
    }
}
