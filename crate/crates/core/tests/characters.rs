mod support;

use entcut::cft::{character_qseries, KacLabel, MinimalModel};
use support::virasoro::Verma;

#[test]
fn ising_vacuum_oracle_values() {
    let mut v = Verma::minimal(3, 1, 1);
    let dims: Vec<usize> = (0..=3).map(|n| v.level_dimension(n)).collect();
    assert_eq!(dims, vec![1, 0, 1, 1]);
}

#[test]
fn characters_match_gram_rank_p3_to_p5() {
    for p in [3u32, 4, 5] {
        let m = MinimalModel::new(p).unwrap();
        for x in m.labels() {
            let q = character_qseries(&m, &x, 8).unwrap();
            let mut v = Verma::minimal(p as i64, x.r as i64, x.s as i64);
            for level in 0..=8u32 {
                assert_eq!(q.coeffs[level as usize], v.level_dimension(level) as u64, "p={p} {x} level {level}");
            }
        }
    }
}

#[test]
fn partner_label_gives_same_oracle() {
    let m = MinimalModel::new(5).unwrap();
    let x = KacLabel::new(3, 3);
    let y = x.partner(&m);
    let mut vx = Verma::minimal(5, x.r as i64, x.s as i64);
    let mut vy = Verma::minimal(5, y.r as i64, y.s as i64);
    for level in 0..=5 {
        assert_eq!(vx.level_dimension(level), vy.level_dimension(level));
    }
}
