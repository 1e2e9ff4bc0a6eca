//! Time-stamped event log of one policy run.

/// What happened at an event's completion instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// A requested decision set arrived; its cost is charged now.
    RequestDone { delay: f64, cost: f64 },
    /// An arm finished being pulled. `arm` indexes the decision set and
    /// `mean` is the true mean of the arm's context.
    Selection { arm: usize, mean: f64, reward: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub set: usize,
    pub kind: EventKind,
}

/// Per-set summary, kept for every processed set including the one cut off
/// by the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct SetRecord {
    /// Rate estimate `Γ_j` used to process the set.
    pub rate: f64,
    pub delay: f64,
    pub cost: f64,
    /// Selected arm indices in selection order.
    pub selected: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub horizon: f64,
    /// Events with time at most `horizon`, in time order.
    pub events: Vec<Event>,
    pub sets: Vec<SetRecord>,
    /// Rate estimate after the last processed set.
    pub final_rate: f64,
}

impl Trace {
    /// `Q(t)`: sum of selected means minus request costs over events up to `t`.
    pub fn accumulated_mean_reward(&self, t: f64) -> f64 {
        self.events
            .iter()
            .take_while(|e| e.time <= t)
            .map(|e| match e.kind {
                EventKind::RequestDone { cost, .. } => -cost,
                EventKind::Selection { mean, .. } => mean,
            })
            .sum()
    }

    /// `Q` at each of the (sorted) grid points, in one pass.
    pub fn accumulated_on_grid(&self, grid: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(grid.len());
        let mut events = self.events.iter().peekable();
        let mut total = 0.0;
        for &t in grid {
            while let Some(e) = events.next_if(|e| e.time <= t) {
                total += match e.kind {
                    EventKind::RequestDone { cost, .. } => -cost,
                    EventKind::Selection { mean, .. } => mean,
                };
            }
            out.push(total);
        }
        out
    }

    /// Time accounted for by logged events: request delays plus one unit per selection.
    pub fn consumed_time(&self) -> f64 {
        self.events
            .iter()
            .map(|e| match e.kind {
                EventKind::RequestDone { delay, .. } => delay,
                EventKind::Selection { .. } => 1.0,
            })
            .sum()
    }

    pub fn selection_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Selection { .. }))
            .count()
    }
}
