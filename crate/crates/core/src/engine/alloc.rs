use crate::model::ContainerId;

/// Max-min fair (water-filling) split of `usable` cores. Allocations come
/// back in input order and sum to `min(sum of demands, usable)`.
pub fn allocate_cpu(usable: f64, demands: &[(ContainerId, f64)]) -> Vec<(ContainerId, f64)> {
    let total: f64 = demands.iter().map(|&(_, d)| d).sum();
    if total <= usable {
        return demands.to_vec();
    }
    let mut order: Vec<usize> = (0..demands.len()).collect();
    order.sort_by(|&a, &b| {
        demands[a].1.total_cmp(&demands[b].1).then(demands[a].0.cmp(&demands[b].0))
    });
    let mut grants = vec![0.0; demands.len()];
    let mut remaining = usable.max(0.0);
    for (served, &i) in order.iter().enumerate() {
        let share = remaining / (order.len() - served) as f64;
        let grant = demands[i].1.min(share);
        grants[i] = grant;
        remaining -= grant;
    }
    demands.iter().zip(grants).map(|(&(id, _), g)| (id, g)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Raises a common water level in 1e-4 steps until capacity is used up.
    fn water_level_oracle(usable: f64, demands: &[f64]) -> Vec<f64> {
        let mut level: f64 = 0.0;
        let step = 1e-4;
        let used = |l: f64| demands.iter().map(|&d| d.min(l)).sum::<f64>();
        let max = demands.iter().copied().fold(0.0, f64::max);
        while level < max && used(level + step) <= usable {
            level += step;
        }
        demands.iter().map(|&d| d.min(level)).collect()
    }

    fn ids(demands: &[f64]) -> Vec<(ContainerId, f64)> {
        demands.iter().enumerate().map(|(i, &d)| (ContainerId(i as u32), d)).collect()
    }

    fn grants(usable: f64, demands: &[f64]) -> Vec<f64> {
        allocate_cpu(usable, &ids(demands)).into_iter().map(|(_, g)| g).collect()
    }

    #[test]
    fn under_capacity_gets_demand() {
        assert_eq!(grants(12.8, &[4.0, 4.0, 4.0]), vec![4.0, 4.0, 4.0]);
    }

    #[test]
    fn equal_split_when_saturated() {
        for g in grants(12.8, &[4.0; 4]) {
            assert!((g - 3.2).abs() < 1e-12);
        }
    }

    #[test]
    fn small_demand_slack_is_redistributed() {
        let got = grants(12.8, &[2.0, 6.0, 6.0]);
        let oracle = water_level_oracle(12.8, &[2.0, 6.0, 6.0]);
        for (g, o) in got.iter().zip(&oracle) {
            assert!((g - o).abs() < 1e-3, "{got:?} vs {oracle:?}");
        }
        assert!((got[1] - 5.4).abs() < 1e-12 && (got[2] - 5.4).abs() < 1e-12);
        assert_eq!(got[0], 2.0);
    }

    #[test]
    fn empty_input() {
        assert!(allocate_cpu(12.8, &[]).is_empty());
    }

    proptest! {
        #[test]
        fn matches_water_level_and_conserves(
            demands in proptest::collection::vec(0.5f64..8.0, 1..7),
            usable in 1.0f64..20.0,
        ) {
            let got = grants(usable, &demands);
            let total: f64 = got.iter().sum();
            let want = demands.iter().sum::<f64>().min(usable);
            prop_assert!((total - want).abs() < 1e-9);
            for (g, d) in got.iter().zip(&demands) {
                prop_assert!(*g <= *d + 1e-12);
            }
            let oracle = water_level_oracle(usable, &demands);
            for (g, o) in got.iter().zip(&oracle) {
                prop_assert!((g - o).abs() < 1e-3 * demands.len() as f64);
            }
        }
    }
}
