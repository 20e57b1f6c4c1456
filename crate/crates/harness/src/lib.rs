//! Workloads, experiment runs and CSV reporting for the tree workbench.
//!
//! A [`Workload`] deterministically expands to a key sequence given its seed.
//! [`run`] executes it against a chosen structure, cross-checks every answer
//! against a sorted-array oracle, tallies per-operation unit costs and the
//! interleave bound of the sequence, and returns a [`RunReport`];
//! [`emit_csv`] writes the report as one row per operation with the summary
//! in trailing comment lines.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::distr::Distribution;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Zipf;

use btree_model::belga::BelgaTree;
use btree_model::classic::ClassicTree;
use btree_model::model::Key;
use btree_model::rbsim::{BtreeSimulator, SimOp};
use btree_model::reference::{height_for, interleave_bound, ReferenceTree};

#[derive(Clone, Debug, PartialEq)]
pub enum WorkloadKind {
    /// 1, 2, ..., N, 1, 2, ... round-robin.
    Sequential,
    /// Independent uniform keys.
    Uniform,
    /// Zipf-distributed keys with the given exponent.
    Zipf { alpha: f64 },
    /// Mostly re-accesses of a sliding window of recent keys.
    WorkingSet,
    /// 1, N, 1, N, ...
    Alternating,
    /// One decimal key per line from a file.
    Trace { path: PathBuf },
}

#[derive(Clone, Debug)]
pub struct Workload {
    pub kind: WorkloadKind,
    pub n: u32,
    pub b: u32,
    pub ops: u64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Structure {
    Belga,
    Classic,
    /// Classic-tree searches replayed through the binary-model simulator.
    RbsimReplay,
}

impl Structure {
    pub fn name(&self) -> &'static str {
        match self {
            Structure::Belga => "belga",
            Structure::Classic => "classic",
            Structure::RbsimReplay => "rbsim-replay",
        }
    }
}

#[derive(Debug)]
pub enum HarnessError {
    BadParams(String),
    /// A trace line was not an integer in `[1, N]`.
    BadTrace { line: usize, content: String },
    Io(std::io::Error),
    Structure(String),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::BadParams(s) => write!(f, "bad parameters: {s}"),
            HarnessError::BadTrace { line, content } => {
                write!(f, "bad trace at line {line}: {content:?}")
            }
            HarnessError::Io(e) => write!(f, "io error: {e}"),
            HarnessError::Structure(s) => write!(f, "structure error: {s}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e)
    }
}

/// Expand a workload into its key sequence; deterministic in the seed.
pub fn generate(w: &Workload) -> Result<Vec<u32>, HarnessError> {
    if w.n < 1 || w.ops < 1 {
        return Err(HarnessError::BadParams(
            "universe and operation count must be positive".into(),
        ));
    }
    let n = w.n;
    let mut rng = ChaCha8Rng::seed_from_u64(w.seed);
    let keys = match &w.kind {
        WorkloadKind::Sequential => (0..w.ops).map(|i| (i % n as u64) as u32 + 1).collect(),
        WorkloadKind::Alternating => (0..w.ops)
            .map(|i| if i % 2 == 0 { 1 } else { n })
            .collect(),
        WorkloadKind::Uniform => (0..w.ops).map(|_| rng.random_range(1..=n)).collect(),
        WorkloadKind::Zipf { alpha } => {
            let dist = Zipf::new(n as f64, *alpha)
                .map_err(|e| HarnessError::BadParams(format!("zipf: {e}")))?;
            (0..w.ops)
                .map(|_| (dist.sample(&mut rng) as u32).clamp(1, n))
                .collect()
        }
        WorkloadKind::WorkingSet => {
            // Re-access a recent window with high probability.
            let window_cap = ((n as f64).sqrt() as usize).clamp(1, 1 << 12);
            let mut window: Vec<u32> = Vec::with_capacity(window_cap);
            let mut keys = Vec::with_capacity(w.ops as usize);
            for _ in 0..w.ops {
                let key = if !window.is_empty() && rng.random_range(0..10) < 8 {
                    window[rng.random_range(0..window.len())]
                } else {
                    rng.random_range(1..=n)
                };
                if let Some(pos) = window.iter().position(|k| *k == key) {
                    window.remove(pos);
                } else if window.len() == window_cap {
                    window.remove(0);
                }
                window.push(key);
                keys.push(key);
            }
            keys
        }
        WorkloadKind::Trace { path } => {
            let text = fs::read_to_string(path)?;
            let mut keys = Vec::new();
            for (i, line) in text.lines().enumerate() {
                let trimmed = line.trim();
                if trimmed.is_empty() {
                    continue;
                }
                let key: u32 = trimmed.parse().map_err(|_| HarnessError::BadTrace {
                    line: i + 1,
                    content: line.to_string(),
                })?;
                if key < 1 || key > n {
                    return Err(HarnessError::BadTrace {
                        line: i + 1,
                        content: line.to_string(),
                    });
                }
                keys.push(key);
            }
            if keys.is_empty() {
                return Err(HarnessError::BadParams("trace holds no keys".into()));
            }
            keys
        }
    };
    Ok(keys)
}

/// One executed search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OpRecord {
    pub index: u64,
    pub key: u32,
    pub cost: u64,
    pub cum_cost: u64,
    /// Preferred-child flips this search causes in the reference tree.
    pub pref_changes: u32,
}

#[derive(Clone, Debug)]
pub struct Summary {
    pub structure: &'static str,
    pub n: u32,
    pub b: u32,
    pub ops: u64,
    pub seed: u64,
    pub total_cost: u64,
    pub interleave: u64,
    /// total / ((IB + N + m) * (1 + log_B log2 N)).
    pub ratio: f64,
    /// Set when `B` exceeds the polylogarithmic regime `(log2 N)^3`.
    pub large_b_warning: bool,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub records: Vec<OpRecord>,
    pub summary: Summary,
}

/// Bound denominator `1 + log_B log2 N`.
pub fn competitive_denominator(n: u32, b: u32) -> f64 {
    let lg = ((n as f64) + 1.0).log2();
    1.0 + lg.max(2.0).log2() / (b as f64).log2()
}

/// Execute a workload against a structure. Every search result is checked
/// against the sorted-array oracle (all keys of `[1, N]` are present).
pub fn run(structure: Structure, w: &Workload) -> Result<RunReport, HarnessError> {
    let keys = generate(w)?;
    // Trace workloads define their own length.
    let ops = keys.len() as u64;
    let height = height_for(w.n);
    let interleave = interleave_bound(&keys, height)
        .map_err(|e| HarnessError::Structure(e.to_string()))?;

    let mut records = Vec::with_capacity(keys.len());
    let mut cum = 0u64;
    let mut rt = ReferenceTree::new(height);

    match structure {
        Structure::Belga => {
            let mut bt = BelgaTree::build_initial(w.n, w.b)
                .map_err(|e| HarnessError::Structure(e.to_string()))?;
            for (i, &key) in keys.iter().enumerate() {
                let stats = bt
                    .search(key)
                    .map_err(|e| HarnessError::Structure(e.to_string()))?;
                cum += stats.cost;
                records.push(OpRecord {
                    index: i as u64 + 1,
                    key,
                    cost: stats.cost,
                    cum_cost: cum,
                    pref_changes: stats.flips,
                });
            }
        }
        Structure::Classic => {
            let universe: Vec<u32> = (1..=w.n).collect();
            let mut t = ClassicTree::build_from_sorted(&universe, w.b)
                .map_err(|e| HarnessError::Structure(e.to_string()))?;
            for (i, &key) in keys.iter().enumerate() {
                let (found, cost) = t.search(key);
                if !found {
                    return Err(HarnessError::Structure(format!(
                        "classic search lost key {key}"
                    )));
                }
                let flips = rt.record_search(Key(key)).expect("key in universe").flips;
                cum += cost;
                records.push(OpRecord {
                    index: i as u64 + 1,
                    key,
                    cost,
                    cum_cost: cum,
                    pref_changes: flips,
                });
            }
        }
        Structure::RbsimReplay => {
            let universe: Vec<u32> = (1..=w.n).collect();
            let mut sim = BtreeSimulator::from_sorted(&universe, w.b);
            for (i, &key) in keys.iter().enumerate() {
                let before = sim.bst_meter().total();
                sim.apply(SimOp::Begin)
                    .map_err(|e| HarnessError::Structure(e.to_string()))?;
                // Replay the native descent move for move.
                loop {
                    let at = sim.mirror().cursor().expect("cursor");
                    match sim.mirror().keys(at).binary_search(&Key(key)) {
                        Ok(_) => break,
                        Err(slot) => sim
                            .apply(SimOp::Down(slot))
                            .map_err(|e| HarnessError::Structure(e.to_string()))?,
                    }
                }
                let at = sim.mirror().cursor().expect("cursor");
                if sim.mirror().keys(at).binary_search(&Key(key)).is_err() {
                    return Err(HarnessError::Structure(format!(
                        "replay lost key {key}"
                    )));
                }
                let cost = sim.bst_meter().total() - before;
                let flips = rt.record_search(Key(key)).expect("key in universe").flips;
                cum += cost;
                records.push(OpRecord {
                    index: i as u64 + 1,
                    key,
                    cost,
                    cum_cost: cum,
                    pref_changes: flips,
                });
            }
        }
    }

    let inline_interleave: u64 = records.iter().map(|r| r.pref_changes as u64).sum();
    if structure != Structure::Belga {
        debug_assert_eq!(inline_interleave, interleave);
    }
    let denom = (interleave + w.n as u64 + ops) as f64 * competitive_denominator(w.n, w.b);
    let lg = ((w.n as f64) + 1.0).log2();
    let summary = Summary {
        structure: structure.name(),
        n: w.n,
        b: w.b,
        ops,
        seed: w.seed,
        total_cost: cum,
        interleave,
        ratio: cum as f64 / denom,
        large_b_warning: (w.b as f64) > lg.powi(3),
    };
    Ok(RunReport { records, summary })
}

/// Write a report: the header, one row per operation, and the summary as
/// trailing comment lines.
pub fn emit_csv(report: &RunReport, path: &Path) -> Result<(), HarnessError> {
    let mut out = String::new();
    out.push_str("op,key,cost,cum_cost,pref_changes\n");
    for r in &report.records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.index, r.key, r.cost, r.cum_cost, r.pref_changes
        ));
    }
    let s = &report.summary;
    out.push_str(&format!(
        "# structure={} n={} b={} ops={} seed={}\n",
        s.structure, s.n, s.b, s.ops, s.seed
    ));
    out.push_str(&format!(
        "# total_cost={} interleave={} ratio={:.6}\n",
        s.total_cost, s.interleave, s.ratio
    ));
    if s.large_b_warning {
        out.push_str("# warning: B exceeds (log2 N)^3, outside the guaranteed regime\n");
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn temp_path(name: &str) -> PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("btree-bench-test-{}-{name}", std::process::id()));
        p
    }

    #[test]
    fn sequential_wraps_around() {
        let w = Workload {
            kind: WorkloadKind::Sequential,
            n: 8,
            b: 4,
            ops: 16,
            seed: 0,
        };
        let keys = generate(&w).unwrap();
        let want: Vec<u32> = (1..=8).chain(1..=8).collect();
        assert_eq!(keys, want);
    }

    #[test]
    fn alternating_hits_extremes() {
        let w = Workload {
            kind: WorkloadKind::Alternating,
            n: 100,
            b: 4,
            ops: 6,
            seed: 0,
        };
        assert_eq!(generate(&w).unwrap(), vec![1, 100, 1, 100, 1, 100]);
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        for kind in [
            WorkloadKind::Uniform,
            WorkloadKind::Zipf { alpha: 1.2 },
            WorkloadKind::WorkingSet,
        ] {
            let w = Workload {
                kind: kind.clone(),
                n: 1000,
                b: 16,
                ops: 5000,
                seed: 99,
            };
            assert_eq!(generate(&w).unwrap(), generate(&w).unwrap());
            let mut w2 = w.clone();
            w2.seed = 100;
            assert_ne!(generate(&w).unwrap(), generate(&w2).unwrap());
        }
    }

    #[test]
    fn zipf_top_key_frequency_is_plausible() {
        let n = 1000u32;
        let alpha = 1.1f64;
        let w = Workload {
            kind: WorkloadKind::Zipf { alpha },
            n,
            b: 16,
            ops: 100_000,
            seed: 12,
        };
        let keys = generate(&w).unwrap();
        let top = keys.iter().filter(|k| **k == 1).count() as f64 / keys.len() as f64;
        let harmonic: f64 = (1..=n).map(|k| 1.0 / (k as f64).powf(alpha)).sum();
        let theory = 1.0 / harmonic;
        assert!(
            top <= theory * 3.0 && top >= theory / 3.0,
            "top frequency {top:.4} vs theoretical {theory:.4}"
        );
    }

    #[test]
    fn working_set_reuses_recent_keys() {
        let w = Workload {
            kind: WorkloadKind::WorkingSet,
            n: 100_000,
            b: 16,
            ops: 10_000,
            seed: 5,
        };
        let keys = generate(&w).unwrap();
        let distinct: std::collections::HashSet<u32> = keys.iter().copied().collect();
        // Heavy reuse: far fewer distinct keys than a uniform draw would give.
        assert!(distinct.len() < keys.len() / 3, "{} distinct", distinct.len());
    }

    #[test]
    fn trace_round_trips_and_rejects_bad_lines() {
        let path = temp_path("trace.txt");
        fs::write(&path, "3\n1\n2\n").unwrap();
        let w = Workload {
            kind: WorkloadKind::Trace { path: path.clone() },
            n: 5,
            b: 4,
            ops: 1,
            seed: 0,
        };
        assert_eq!(generate(&w).unwrap(), vec![3, 1, 2]);

        fs::write(&path, "3\nseven\n").unwrap();
        assert!(matches!(
            generate(&w).unwrap_err(),
            HarnessError::BadTrace { line: 2, .. }
        ));
        fs::write(&path, "3\n9\n").unwrap();
        assert!(matches!(
            generate(&w).unwrap_err(),
            HarnessError::BadTrace { line: 2, .. }
        ));
        let _ = fs::remove_file(&path);
    }

    #[test]
    fn classic_uniform_mean_cost_tracks_height() {
        let n = 4095u32;
        let b = 16u32;
        let w = Workload {
            kind: WorkloadKind::Uniform,
            n,
            b,
            ops: 4000,
            seed: 3,
        };
        let report = run(Structure::Classic, &w).unwrap();
        let mean = report.summary.total_cost as f64 / report.summary.ops as f64;
        let lower = (n as f64).log2() / (b as f64).log2();
        let upper = 1.0 + ((n as f64).log2() / (b as f64 / 2.0).log2()).ceil() + 1.0;
        assert!(
            mean >= lower.min(2.0) && mean <= upper,
            "mean {mean:.2} outside [{lower:.2}, {upper:.2}]"
        );
    }

    #[test]
    fn inline_interleave_matches_standalone_replay() {
        let w = Workload {
            kind: WorkloadKind::Uniform,
            n: 511,
            b: 4,
            ops: 2000,
            seed: 17,
        };
        let report = run(Structure::Classic, &w).unwrap();
        let inline: u64 = report.records.iter().map(|r| r.pref_changes as u64).sum();
        assert_eq!(inline, report.summary.interleave);
        let belga = run(Structure::Belga, &w).unwrap();
        assert_eq!(belga.summary.interleave, report.summary.interleave);
        let inline_belga: u64 = belga.records.iter().map(|r| r.pref_changes as u64).sum();
        assert_eq!(inline_belga, belga.summary.interleave);
    }

    #[test]
    fn belga_ratio_is_stable_across_sizes() {
        let mut ratios = Vec::new();
        for n in [(1u32 << 7) - 1, (1 << 10) - 1, (1 << 15) - 1] {
            let w = Workload {
                kind: WorkloadKind::Uniform,
                n,
                b: 16,
                ops: 4 * n as u64,
                seed: 23,
            };
            ratios.push(run(Structure::Belga, &w).unwrap().summary.ratio);
        }
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min <= 2.0, "ratios {ratios:?} spread past 2x");
    }

    #[test]
    fn rbsim_replay_answers_and_costs() {
        let w = Workload {
            kind: WorkloadKind::Uniform,
            n: 255,
            b: 4,
            ops: 500,
            seed: 9,
        };
        let report = run(Structure::RbsimReplay, &w).unwrap();
        assert_eq!(report.records.len(), 500);
        assert!(report.records.iter().all(|r| r.cost >= 1));
    }

    #[test]
    fn csv_shape_and_determinism() {
        let path_a = temp_path("a.csv");
        let path_b = temp_path("b.csv");

        // Header only for an empty report.
        let empty = RunReport {
            records: Vec::new(),
            summary: Summary {
                structure: "belga",
                n: 7,
                b: 4,
                ops: 0,
                seed: 0,
                total_cost: 0,
                interleave: 0,
                ratio: 0.0,
                large_b_warning: false,
            },
        };
        emit_csv(&empty, &path_a).unwrap();
        let text = fs::read_to_string(&path_a).unwrap();
        assert!(text.starts_with("op,key,cost,cum_cost,pref_changes\n"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1);

        let w = Workload {
            kind: WorkloadKind::Zipf { alpha: 1.1 },
            n: 127,
            b: 4,
            ops: 3,
            seed: 77,
        };
        let report = run(Structure::Belga, &w).unwrap();
        emit_csv(&report, &path_a).unwrap();
        let text = fs::read_to_string(&path_a).unwrap();
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
        assert!(text.lines().filter(|l| l.starts_with('#')).count() >= 2);

        // Same seed, fresh run: byte-identical file.
        let report2 = run(Structure::Belga, &w).unwrap();
        emit_csv(&report2, &path_b).unwrap();
        assert_eq!(fs::read(&path_a).unwrap(), fs::read(&path_b).unwrap());
        let _ = fs::remove_file(&path_a);
        let _ = fs::remove_file(&path_b);
    }

    #[test]
    fn large_b_sets_warning_flag() {
        let w = Workload {
            kind: WorkloadKind::Uniform,
            n: 127,
            b: 512,
            ops: 50,
            seed: 1,
        };
        let report = run(Structure::Belga, &w).unwrap();
        assert!(report.summary.large_b_warning);
        let w2 = Workload { b: 16, ..w };
        assert!(!run(Structure::Belga, &w2).unwrap().summary.large_b_warning);
    }
}
