use kgfa_core::decoder::{decode_stf, decode_with_state, du_success, rs_recoverable};
use kgfa_core::generic_iic::run_generic_iic;
use kgfa_core::model::{generate_access_map, AccessMap, IcMode, SystemConfig};

const FIXTURE: &str = include_str!("fixtures/walkthrough.map");

fn fixture(iterations: u32, mai_width: u32) -> AccessMap {
    AccessMap::from_text(FIXTURE, SystemConfig::new(1, 1, 1, 1).with_iic(iterations, mai_width)).unwrap()
}

#[test]
fn walkthrough_recovers_n5_in_second_iteration() {
    let map = fixture(2, 2);
    let out = decode_stf(&map);
    assert_eq!(out.recovery_iteration[0], Some(1));
    assert_eq!(out.recovery_iteration[1], Some(1));
    assert_eq!(out.recovery_iteration[4], Some(2));
    assert!(du_success(&out, 4).unwrap());
    assert!(du_success(&out, 5).is_err());
}

#[test]
fn walkthrough_needs_both_iteration_and_width() {
    for (alpha, beta) in [(1, 2), (2, 1)] {
        let out = decode_stf(&fixture(alpha, beta));
        assert!(out.recovered[0] && out.recovered[1]);
        assert!(!du_success(&out, 4).unwrap(), "alpha={alpha} beta={beta}");
    }
}

#[test]
fn walkthrough_generic_model_agrees() {
    for mode in [IcMode::Precise, IcMode::ContextAware, IcMode::Blind] {
        let mut map = fixture(2, 2);
        let cfg = map.config().with_ic(mode);
        map = AccessMap::from_placements(cfg, map.placements().to_vec()).unwrap();
        let run = run_generic_iic(&map).unwrap();
        assert_eq!(run.outcome.recovered, decode_stf(&map).recovered, "{mode:?}");
    }
}

#[test]
fn disjoint_users_all_recover_first_iteration() {
    let cfg = SystemConfig::new(10, 5, 2, 2).with_iic(1, 1);
    let placements: Vec<u32> = (0..20).collect();
    let out = decode_stf(&AccessMap::from_placements(cfg, placements).unwrap());
    assert!(out.recovery_iteration.iter().all(|&r| r == Some(1)));
}

#[test]
fn three_rbs_two_users_enumeration() {
    let cfg = SystemConfig::new(3, 2, 1, 1).with_iic(2, 1);
    let mut recovered = 0;
    for a in 0..3 {
        for b in 0..3 {
            let out = decode_stf(&AccessMap::from_placements(cfg, vec![a, b]).unwrap());
            recovered += out.recovered[0] as u32;
        }
    }
    assert_eq!(recovered, 6);
}

#[test]
fn threshold_and_trivial_success() {
    let cfg = SystemConfig::new(10, 1, 2, 2);
    assert!(rs_recoverable(2, &cfg));
    assert!(!rs_recoverable(1, &cfg));
    assert!(rs_recoverable(4, &cfg));
    let single = generate_access_map(&cfg, 3).unwrap();
    assert!(du_success(&decode_stf(&single), 0).unwrap());
}

#[test]
fn decoded_packets_are_placed() {
    let cfg = SystemConfig::new(20, 30, 2, 2).with_iic(3, 2);
    for seed in 0..200 {
        let map = generate_access_map(&cfg, seed).unwrap();
        let (out, state) = decode_with_state(&map);
        for (m, packets) in state.decoded_packets.iter().enumerate() {
            for &p in packets {
                let cell = map.placement(m as u32, p);
                assert!(map.cell(cell).iter().any(|r| r.mtcd == m as u32 && r.packet == p));
            }
            assert_eq!(out.recovered[m], packets.len() as u32 >= cfg.frames);
        }
    }
}
