use super::{AwgDesign, AwgError};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PortRole {
    Signal,
    Idler,
    Pump,
}

/// Input and output waveguide layout, in integer multiples of the facet
/// pitch counted from the slab center.
///
/// Input `I_j` focuses its pump component at `-input_j` on the output facet
/// (the slab images through its center). The signal port `A_j` sits
/// `channel_offset` grid lines above that focus and the idler port `B_j` the
/// same distance below.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PortAssignment {
    pub n_sources: usize,
    pub channel_offset: u32,
    pub input_ports: Vec<i32>,
    pub output_ports_signal: Vec<i32>,
    pub output_ports_idler: Vec<i32>,
    pub pump_focus_ports: Vec<i32>,
}

impl PortAssignment {
    /// Checks disjointness of signal/idler/pump lines and the midpoint rule.
    pub fn check_invariants(&self) -> Result<(), AwgError> {
        let collisions = collisions(
            &self.output_ports_signal,
            &self.output_ports_idler,
            &self.pump_focus_ports,
        );
        if !collisions.is_empty() {
            return Err(AwgError::PortCollision(collisions));
        }
        for j in 0..self.n_sources {
            let sum = self.output_ports_signal[j] + self.output_ports_idler[j];
            if sum != 2 * self.pump_focus_ports[j] {
                return Err(AwgError::InvalidPlan(format!(
                    "source {} ports are not symmetric about its pump focus",
                    j + 1
                )));
            }
        }
        Ok(())
    }

    /// Largest `|index|` permitted on a facet grid sized by `array_count`.
    pub fn capacity_limit(array_count: u32) -> i32 {
        ((array_count.saturating_sub(1)) / 2) as i32
    }
}

fn collisions(signal: &[i32], idler: &[i32], pump: &[i32]) -> Vec<(i32, Vec<String>)> {
    let mut occupancy: BTreeMap<i32, Vec<String>> = BTreeMap::new();
    for (j, &p) in signal.iter().enumerate() {
        occupancy.entry(p).or_default().push(format!("A{}", j + 1));
    }
    for (j, &p) in idler.iter().enumerate() {
        occupancy.entry(p).or_default().push(format!("B{}", j + 1));
    }
    for (j, &p) in pump.iter().enumerate() {
        occupancy.entry(p).or_default().push(format!("P{}", j + 1));
    }
    occupancy.into_iter().filter(|(_, v)| v.len() > 1).collect()
}

/// Places `n_sources` inputs on consecutive central grid lines and picks the
/// signal/idler outputs `channel_offset` channels either side of each pump
/// focus.
///
/// Central lines are `j - ⌊(N-1)/2⌋` for `j = 0..N`, so odd `N` is centered
/// on the slab axis and even `N` uses the axis and the line above it.
pub fn plan_ports(
    design: &AwgDesign,
    n_sources: usize,
    channel_offset: u32,
) -> Result<PortAssignment, AwgError> {
    design.validate()?;
    if n_sources == 0 {
        return Err(AwgError::InvalidPlan("n_sources must be >= 1".into()));
    }
    if channel_offset == 0 {
        return Err(AwgError::InvalidPlan("channel_offset must be >= 1".into()));
    }
    let m = channel_offset as i32;
    let low = -(((n_sources - 1) / 2) as i32);
    let input_ports: Vec<i32> = (0..n_sources as i32).map(|j| low + j).collect();
    let pump_focus_ports: Vec<i32> = input_ports.iter().map(|&i| -i).collect();
    let output_ports_signal: Vec<i32> = pump_focus_ports.iter().map(|&p| p + m).collect();
    let output_ports_idler: Vec<i32> = pump_focus_ports.iter().map(|&p| p - m).collect();

    let assignment = PortAssignment {
        n_sources,
        channel_offset,
        input_ports,
        output_ports_signal,
        output_ports_idler,
        pump_focus_ports,
    };
    assignment.check_invariants()?;

    let limit = PortAssignment::capacity_limit(design.array_count);
    let worst = assignment
        .input_ports
        .iter()
        .chain(&assignment.output_ports_signal)
        .chain(&assignment.output_ports_idler)
        .copied()
        .max_by_key(|p| p.abs())
        .unwrap_or(0);
    if worst.abs() > limit {
        return Err(AwgError::Capacity {
            index: worst,
            limit,
        });
    }
    Ok(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_sources_offset_four() {
        let p = plan_ports(&AwgDesign::paper(), 3, 4).unwrap();
        assert_eq!(p.input_ports, vec![-1, 0, 1]);
        assert_eq!(p.pump_focus_ports, vec![1, 0, -1]);
        assert_eq!(p.output_ports_signal, vec![5, 4, 3]);
        assert_eq!(p.output_ports_idler, vec![-3, -4, -5]);
    }

    #[test]
    fn two_sources_offset_three() {
        let p = plan_ports(&AwgDesign::paper(), 2, 3).unwrap();
        assert_eq!(p.input_ports, vec![0, 1]);
        assert_eq!(p.output_ports_signal, vec![3, 2]);
        assert_eq!(p.output_ports_idler, vec![-3, -4]);
    }

    #[test]
    fn single_source_minimal() {
        let p = plan_ports(&AwgDesign::paper(), 1, 1).unwrap();
        assert_eq!(p.output_ports_signal, vec![1]);
        assert_eq!(p.output_ports_idler, vec![-1]);
        assert_eq!(p.pump_focus_ports, vec![0]);
    }

    #[test]
    fn offset_below_source_count_collides() {
        let err = plan_ports(&AwgDesign::paper(), 3, 2).unwrap_err();
        match err {
            AwgError::PortCollision(c) => {
                assert!(!c.is_empty());
                let msg = AwgError::PortCollision(c).to_string();
                assert!(msg.contains("A") && msg.contains("P"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn capacity_is_enforced() {
        let small = AwgDesign {
            array_count: 9,
            ..AwgDesign::paper()
        };
        assert!(matches!(
            plan_ports(&small, 2, 4),
            Err(AwgError::Capacity { limit: 4, .. })
        ));
        assert!(plan_ports(&small, 2, 3).is_ok());
    }

    proptest! {
        #[test]
        fn layouts_hold_invariants(n in 1usize..12, extra in 0u32..10) {
            let m = n as u32 + extra;
            let p = plan_ports(&AwgDesign::paper(), n, m).unwrap();
            prop_assert!(p.check_invariants().is_ok());
            for j in 0..n {
                prop_assert_eq!(p.output_ports_signal[j] - p.pump_focus_ports[j], m as i32);
            }
        }
    }
}
