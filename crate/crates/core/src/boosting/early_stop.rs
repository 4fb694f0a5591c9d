/// Counts consecutive increases of a risk sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PatienceCounter {
    patience: usize,
    strikes: usize,
    last: Option<f64>,
    best: Option<(usize, f64)>,
}

impl PatienceCounter {
    pub fn new(patience: usize) -> Self {
        PatienceCounter { patience, strikes: 0, last: None, best: None }
    }

    /// Records the risk of `iteration`. Returns `true` once the risk has
    /// increased `patience` times in a row.
    pub fn observe(&mut self, iteration: usize, risk: f64) -> bool {
        if let Some(last) = self.last {
            if risk > last {
                self.strikes += 1;
            } else {
                self.strikes = 0;
            }
        }
        self.last = Some(risk);
        if self.best.is_none_or(|(_, b)| risk <= b) {
            self.best = Some((iteration, risk));
        }
        self.exhausted()
    }

    pub fn exhausted(&self) -> bool {
        self.strikes >= self.patience
    }

    /// Iteration with the lowest risk so far (the later one on ties).
    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }

    /// Whether the last observation became the best one.
    pub fn last_is_best(&self) -> bool {
        matches!((self.best, self.last), (Some((_, b)), Some(l)) if b == l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EarlyStop {
    /// Iteration at which patience ran out.
    pub stop: usize,
    /// Best iterate up to `stop`, the one to restore.
    pub restore: usize,
}

/// Scans validation risks of iterations `1, 2, ...` and reports the first
/// iteration after `patience` consecutive increases.
pub fn early_stop_check(val_risks: &[f64], patience: usize) -> Option<EarlyStop> {
    let mut counter = PatienceCounter::new(patience);
    for (i, &r) in val_risks.iter().enumerate() {
        if counter.observe(i + 1, r) {
            let restore = counter.best().map_or(i + 1, |(m, _)| m);
            return Some(EarlyStop { stop: i + 1, restore });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_decrease_never_stops() {
        assert_eq!(early_stop_check(&[3.0, 2.0, 1.0], 1), None);
    }

    #[test]
    fn single_increase() {
        assert_eq!(early_stop_check(&[3.0, 2.0, 2.1], 1), Some(EarlyStop { stop: 3, restore: 2 }));
    }

    #[test]
    fn counter_resets_on_decrease() {
        let risks = [3.0, 2.0, 2.1, 2.0, 2.2, 2.3];
        assert_eq!(early_stop_check(&risks, 2), Some(EarlyStop { stop: 6, restore: 4 }));
    }

    #[test]
    fn switch_point_of_synthetic_sequence() {
        let risks = [1.0, 0.9, 0.95, 0.96, 0.97];
        assert_eq!(early_stop_check(&risks, 2).map(|s| s.stop), Some(4));
    }
}
