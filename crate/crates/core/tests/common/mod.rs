use grouprec::aggregation::StrategyKind;

/// Straightforward reference: scores by explicit loops, ranks by counting
/// how many items beat each item.
pub fn brute_force(ratings: &[Vec<u8>], strategy: StrategyKind, k: usize) -> Vec<(String, f64)> {
    let items = ratings[0].len();
    let score = |i: usize| -> f64 {
        let col: Vec<u32> = ratings.iter().map(|r| r[i] as u32).collect();
        match strategy {
            StrategyKind::Add => {
                let mut s = 0;
                for v in &col {
                    s += v;
                }
                s as f64
            }
            StrategyKind::Mpl => {
                let mut m = 0;
                for v in &col {
                    if *v > m {
                        m = *v;
                    }
                }
                m as f64
            }
            StrategyKind::Lms => {
                let mut m = u32::MAX;
                for v in &col {
                    if *v < m {
                        m = *v;
                    }
                }
                m as f64
            }
            StrategyKind::App(t) => col.iter().filter(|v| **v >= t as u32).count() as f64,
        }
    };
    let scores: Vec<f64> = (0..items).map(score).collect();
    let mut slots: Vec<Option<usize>> = vec![None; items];
    for i in 0..items {
        let beaten_by = (0..items).filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i)).count();
        slots[beaten_by] = Some(i);
    }
    slots
        .into_iter()
        .take(k)
        .map(|i| {
            let i = i.expect("ranks form a permutation");
            (format!("item_{}", i + 1), scores[i])
        })
        .collect()
}
