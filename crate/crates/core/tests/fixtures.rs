//! The XYZ files shipped under fixtures/ agree with the code that builds them.

use posner::fixture::{most_stable, sample_run};
use posner::io::{parse_traj, parse_xyz, write_traj};

#[test]
fn sample_run_file_matches_generator() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/sample_run.xyz")).unwrap();
    let shipped = parse_traj(&text).unwrap();
    let built = sample_run().trajectory;
    assert_eq!(shipped.len(), built.len());
    for (a, b) in shipped.frames().iter().zip(built.frames()) {
        assert_eq!(a.elements(), b.elements());
        for (p, q) in a.positions().iter().zip(b.positions()) {
            assert!((p - q).norm() < 1e-6);
        }
        assert!((a.energy.unwrap() - b.energy.unwrap()).abs() < 1e-6 * b.energy.unwrap().abs());
        assert_eq!(a.time_fs, b.time_fs);
    }
    // Regenerating gives the same bytes.
    assert_eq!(write_traj(&built), text);
}

#[test]
fn most_stable_file_parses() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/most_stable.xyz")).unwrap();
    assert_eq!(parse_xyz(&text).unwrap(), most_stable());
}
