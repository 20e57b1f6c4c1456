//! Longer self-adjusting runs at sizes where auxiliary trees span several
//! node levels, with periodic full audits.

use btree_model::belga::BelgaTree;
use btree_model::model::SplitMix;

#[test]
fn mixed_workload_soak_with_periodic_audits() {
    let mut rng = SplitMix::new(0x50AC);
    for b in [2u32, 4, 5] {
        let n = 4095u32;
        let mut bt = BelgaTree::build_initial(n, b).unwrap();
        for step in 0..3000u32 {
            // Phases: uniform, then a hot range, then sequential runs.
            let x = match step / 1000 {
                0 => rng.range(1, n as u64) as u32,
                1 => 2000 + rng.below(64) as u32,
                _ => 1 + (step % n),
            };
            let stats = bt.search(x).unwrap();
            assert!(stats.cost >= 1);
            if step % 25 == 0 {
                bt.audit()
                    .unwrap_or_else(|e| panic!("B={b} step {step}: {e}"));
            }
        }
        bt.audit().unwrap();
        if b >= 4 {
            assert_eq!(
                bt.machine().meter().rotations,
                0,
                "multiway searches never rotate"
            );
        }
    }
}

#[test]
fn adversarial_alternation_stays_consistent() {
    // Alternating far-apart keys maximizes preferred-child churn.
    for b in [2u32, 4, 16] {
        let n = 1023u32;
        let mut bt = BelgaTree::build_initial(n, b).unwrap();
        for i in 0..2000u32 {
            let x = if i % 2 == 0 { 1 } else { n };
            bt.search(x).unwrap();
            if i % 50 == 0 {
                bt.audit().unwrap();
            }
        }
        bt.audit().unwrap();
        // Steady state: each alternation costs a bounded number of units.
        let before = bt.machine().meter().total();
        for i in 0..100u32 {
            let x = if i % 2 == 0 { 1 } else { n };
            bt.search(x).unwrap();
        }
        let per_search = (bt.machine().meter().total() - before) as f64 / 100.0;
        let lg = (n as u64 + 1).ilog2() as f64;
        let budget = 1.0 + (lg.log2() / (b as f64).log2()).ceil();
        // Roughly log N transitions per search, each within the path budget.
        assert!(
            per_search <= 20.0 * (lg + 1.0) * budget,
            "B={b}: {per_search} per alternation"
        );
    }
}
