use proptest::prelude::*;
use stace::ace::{ace_reduce, AceParams};
use stace::metrics::{overall_papr_db, papr_db};
use stace::sfbc::{recompose, reconstruct_from_antenna, sfbc_encode, sfbc_time_synthesis, split_subblocks, SfbcSystem};
use stace::stbc::{stbc_encode, stbc_time_frames};
use stace::{Constellation, Modulation, Ofdm, OversamplingConfig, Sample, SfbcCode, SymbolFrame, TimeFrame};

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Sample>> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0).prop_map(|(r, i)| Sample::new(r, i)), len)
}

fn bits(len: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..2, len)
}

fn code(n_t: usize) -> SfbcCode {
    SfbcCode::for_antennas(n_t).unwrap()
}

fn max_err(a: &[Sample], b: &[Sample]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn synthesis_round_trip(s in complex_vec(32), l in 1usize..5) {
        let ofdm = Ofdm::new(OversamplingConfig::new(32, l).unwrap());
        let t = ofdm.synthesize(&s).unwrap();
        let back = ofdm.analyze(&t).unwrap();
        prop_assert!(max_err(&back, &s) <= 1e-10);
        let energy: f64 = s.iter().map(|v| v.norm_sqr()).sum();
        prop_assert!((t.energy() - energy).abs() <= 1e-10 * energy.max(1.0));
    }

    #[test]
    fn stbc_time_path_matches_frequency_path(
        frames in prop::collection::vec(complex_vec(16), 4),
        four in any::<bool>(),
    ) {
        let n_t = if four { 4 } else { 2 };
        let ofdm = Ofdm::new(OversamplingConfig::new(16, 4).unwrap());
        let sources: Vec<SymbolFrame> = frames.into_iter().take(n_t).map(SymbolFrame::new).collect();
        let grid = stbc_encode(&sources).unwrap();
        let times: Vec<TimeFrame> = sources.iter().map(|s| ofdm.synthesize(s).unwrap()).collect();
        let set = stbc_time_frames(&times, n_t, 0.25).unwrap();
        for p in 0..n_t {
            for slot in 0..n_t {
                let direct = ofdm.synthesize(grid.get(p, slot)).unwrap();
                prop_assert!(max_err(&direct, set.get(p, slot)) <= 1e-10);
            }
        }
        let per_source = times.iter().map(|t| papr_db(t, 0.25).unwrap()).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(overall_papr_db(&set).unwrap(), per_source);
        prop_assert_eq!(grid.decode(), sources);
    }

    #[test]
    fn subblocks_recompose_exactly(s in complex_vec(32), g in prop::sample::select(vec![1usize, 2, 4, 8])) {
        let xs = split_subblocks(&s, g).unwrap();
        for (i, x) in xs.subblocks().iter().enumerate() {
            for (k, v) in x.iter().enumerate() {
                if k % g != 0 {
                    prop_assert_eq!(v.norm(), 0.0);
                } else {
                    prop_assert_eq!(*v, s[k + i]);
                }
            }
        }
        prop_assert_eq!(recompose(&xs).unwrap().into_inner(), s);
    }

    #[test]
    fn sfbc_round_trip_and_time_construction(s in complex_vec(32), four in any::<bool>()) {
        let code = code(if four { 4 } else { 2 });
        let ofdm = Ofdm::new(OversamplingConfig::new(32, 4).unwrap());
        let ants = sfbc_encode(&s, &code).unwrap();
        let xs: Vec<TimeFrame> = split_subblocks(&s, code.gamma())
            .unwrap()
            .subblocks()
            .iter()
            .map(|x| ofdm.synthesize(x).unwrap())
            .collect();
        for (q, a) in ants.iter().enumerate() {
            prop_assert_eq!(&*reconstruct_from_antenna(a, q, &code).unwrap(), &s[..]);
            let direct = ofdm.synthesize(a).unwrap();
            prop_assert!(max_err(&direct, &sfbc_time_synthesis(&xs, &code, q).unwrap()) <= 1e-10);
        }
    }

    #[test]
    fn ace_keeps_bits(b in bits(64 * 4), qam in any::<bool>(), iterations in 0usize..6) {
        let con = Constellation::new(if qam { Modulation::Qam16 } else { Modulation::Qpsk });
        let n_c = b.len() / con.bits_per_symbol();
        let b = &b[..n_c * con.bits_per_symbol()];
        let s = con.map_bits(b).unwrap();
        let ofdm = Ofdm::new(OversamplingConfig::new(n_c, 4).unwrap());
        let out = ace_reduce(&ofdm, &s, &AceParams::new(4.86, iterations).unwrap(), &con).unwrap();
        prop_assert_eq!(con.demap_nearest(&out.symbols), b.to_vec());
        prop_assert!(max_err(&ofdm.analyze(&out.time).unwrap(), &out.symbols) <= 1e-10);
    }

    #[test]
    fn sfbc_methods_keep_structure_and_bits(b in bits(64), four in any::<bool>(), iterations in 0usize..5) {
        let con = Constellation::qpsk();
        let code = code(if four { 4 } else { 2 });
        let s = con.map_bits(&b).unwrap();
        let sys = SfbcSystem::new(code.clone(), OversamplingConfig::new(32, 4).unwrap()).unwrap();
        let params = AceParams::new(4.86, iterations).unwrap();

        let (set, state) = sys.selective_ace(&s, &params, &con).unwrap();
        prop_assert_eq!(con.demap_nearest(&state.current), b.clone());
        let ants = sfbc_encode(&state.current, &code).unwrap();
        for (q, a) in ants.iter().enumerate() {
            let again = sfbc_encode(&reconstruct_from_antenna(a, q, &code).unwrap(), &code).unwrap();
            prop_assert_eq!(&again, &ants);
            let direct = sys.ofdm().synthesize(a).unwrap();
            prop_assert!(max_err(&direct, set.get(q, 0)) <= 1e-10);
        }

        let sub = sys.sub_ace(&s, &params, &con).unwrap();
        prop_assert_eq!(con.demap_nearest(&sub.symbols), b);
        let ants = sfbc_encode(&sub.symbols, &code).unwrap();
        for (q, a) in ants.iter().enumerate() {
            let direct = sys.ofdm().synthesize(a).unwrap();
            prop_assert!(max_err(&direct, sub.set.get(q, 0)) <= 1e-10);
        }
    }
}
