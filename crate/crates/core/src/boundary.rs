//! Quantile budgets and order-statistic boundaries.

use serde::{Deserialize, Serialize};

/// Spent budget at one interim: `q_k = count / pool_size`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub count: usize,
    pub pool_size: usize,
}

impl Budget {
    pub fn quantile(&self) -> f64 {
        self.count as f64 / self.pool_size as f64
    }

    /// Same quantile on a pool of another size, rounded down.
    pub fn rescaled(&self, pool_size: usize) -> Budget {
        if pool_size == self.pool_size {
            return *self;
        }
        let count = (self.count as f64 * pool_size as f64 / self.pool_size as f64 + FLOOR_SLACK).floor() as usize;
        Budget { count, pool_size }
    }
}

// Guards the floor against representation error in k·level/K − spent.
const FLOOR_SLACK: f64 = 1e-9;

/// Largest multiple of `1/m_k` that keeps `prior + q_k <= k·level/K`.
pub fn allocate_budget(
    interim: usize,
    level: f64,
    interims: usize,
    pool_size: usize,
    prior: f64,
) -> Budget {
    assert!(pool_size >= 1);
    let room = interim as f64 * level / interims as f64 - prior;
    let count = (room * pool_size as f64 + FLOOR_SLACK).floor().max(0.0) as usize;
    Budget {
        count: count.min(pool_size),
        pool_size,
    }
}

/// Smallest `b` such that at most `count` survivor statistics are `>= b`,
/// realised as the `(count + 1)`-th largest value; 0 when every survivor
/// may exceed it. Rejection then requires a strictly larger observation.
pub fn reject_boundary(survivors: &[f64], budget: Budget) -> f64 {
    let r = budget.count;
    if r >= survivors.len() {
        return 0.0;
    }
    let mut v = survivors.to_vec();
    let (_, nth, _) = v.select_nth_unstable_by(r, |a, b| b.total_cmp(a));
    *nth
}

/// Mirror of [`reject_boundary`]: the `(count + 1)`-th smallest survivor
/// minimum statistic, `+∞` when every survivor may fall below it.
pub fn accept_boundary(survivors: &[f64], budget: Budget) -> f64 {
    let r = budget.count;
    if r >= survivors.len() {
        return f64::INFINITY;
    }
    let mut v = survivors.to_vec();
    let (_, nth, _) = v.select_nth_unstable_by(r, |a, b| a.total_cmp(b));
    *nth
}

/// Boundaries in force at one interim, as last computed by its
/// step-down loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterimBoundaries {
    pub interim: usize,
    pub reject: f64,
    #[serde(with = "opt_extended_f64")]
    pub accept: Option<f64>,
    pub reject_budget: Budget,
    pub accept_budget: Option<Budget>,
    pub survivors: usize,
}

/// Boundary history and spend accounting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLedger {
    pub alpha: f64,
    pub beta: f64,
    pub interims: usize,
    pub entries: Vec<InterimBoundaries>,
}

impl BoundaryLedger {
    pub fn new(alpha: f64, beta: f64, interims: usize) -> Self {
        Self {
            alpha,
            beta,
            interims,
            entries: Vec::new(),
        }
    }

    pub fn reject_spent(&self) -> f64 {
        self.entries.iter().map(|e| e.reject_budget.quantile()).sum()
    }

    pub fn accept_spent(&self) -> f64 {
        self.entries
            .iter()
            .filter_map(|e| e.accept_budget.map(|b| b.quantile()))
            .sum()
    }

    pub fn get(&self, interim: usize) -> Option<&InterimBoundaries> {
        self.entries.get(interim.checked_sub(1)?)
    }
}

/// JSON has no infinity; the accept boundary saturates to it.
mod opt_extended_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Finite(f64),
        Named(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(x) if x.is_infinite() => Repr::Named("inf".into()).serialize(s),
            Some(x) => Repr::Finite(*x).serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Finite(x)) => Ok(Some(x)),
            Some(Repr::Named(s)) if s == "inf" => Ok(Some(f64::INFINITY)),
            Some(Repr::Named(s)) => Err(serde::de::Error::custom(format!("bad boundary `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_examples() {
        let b = allocate_budget(1, 0.05, 1, 35, 0.0);
        assert_eq!(b.count, 1);
        assert!((b.quantile() - 1.0 / 35.0).abs() < 1e-15);

        assert_eq!(allocate_budget(1, 0.05, 1, 1, 0.0).count, 0);

        let q1 = allocate_budget(1, 0.05, 5, 10_000, 0.0);
        assert_eq!(q1.count, 100);
        let q2 = allocate_budget(2, 0.05, 5, 10_000, q1.quantile());
        assert_eq!(q2.count, 100);
    }

    #[test]
    fn budget_never_overspends() {
        let mut spent = 0.0;
        let sizes = [126, 10_000, 10_000, 10_000, 10_000];
        for (k, &m) in sizes.iter().enumerate() {
            let b = allocate_budget(k + 1, 0.05, 5, m, spent);
            spent += b.quantile();
            assert!(spent <= (k + 1) as f64 * 0.05 / 5.0 + 1e-12);
        }
        // the first interim rounds down to 1/126, later interims reclaim slack
        assert!((spent - 0.05).abs() < 1e-4);
    }

    #[test]
    fn boundary_examples() {
        let stats = [4.0, 2.0, 1.0];
        let b = Budget { count: 1, pool_size: 3 };
        assert_eq!(reject_boundary(&stats, b), 2.0);
        assert_eq!(reject_boundary(&stats, Budget { count: 0, pool_size: 3 }), 4.0);
        assert_eq!(reject_boundary(&stats, Budget { count: 3, pool_size: 3 }), 0.0);
        assert_eq!(reject_boundary(&[], Budget { count: 0, pool_size: 3 }), 0.0);

        let mins = [1.0, 2.0, 4.0];
        assert_eq!(accept_boundary(&mins, b), 2.0);
        assert_eq!(accept_boundary(&mins, Budget { count: 0, pool_size: 3 }), 1.0);
        assert_eq!(accept_boundary(&mins, Budget { count: 5, pool_size: 9 }), f64::INFINITY);
    }

    #[test]
    fn ledger_round_trips_infinite_accept() {
        let mut l = BoundaryLedger::new(0.05, 0.01, 2);
        l.entries.push(InterimBoundaries {
            interim: 1,
            reject: 3.5,
            accept: Some(f64::INFINITY),
            reject_budget: Budget { count: 1, pool_size: 35 },
            accept_budget: Some(Budget { count: 0, pool_size: 35 }),
            survivors: 35,
        });
        let s = serde_json::to_string(&l).unwrap();
        let back: BoundaryLedger = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
    }
}
