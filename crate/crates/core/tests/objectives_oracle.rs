mod common;

use common::{linf, opportunity, quality, random_instance, random_solution, Oracle};
use fairrank_core::objectives::{group_quality, opportunity_per_group, quality_per_group, ObjectiveTracker};
use fairrank_core::search::SearchState;
use fairrank_core::{
    evaluate, Dataset, FairDistribution, GroupPartition, Instance, Move, NormKind, ObjectiveConfig, Solution,
};
use proptest::prelude::*;

#[test]
fn two_student_hand_example() {
    let dataset = Dataset::from_rows(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
    let partition = GroupPartition::new(vec![0, 1], 2).unwrap();
    let fair = FairDistribution::from_rows(&[vec![0.5, 0.5]], 2, 2).unwrap();
    let instance = Instance::new(dataset, partition, fair).unwrap();
    let sol = Solution::from_lists(vec![vec![0], vec![1]], 1, 2, &instance.partition).unwrap();
    let o = opportunity_per_group(&instance.partition, &instance.fair, &sol).unwrap();
    assert_eq!(o, vec![1.0, 1.0]);

    // Swap both students onto course 1: each group loses part of its score.
    let worse = Solution::from_lists(vec![vec![1], vec![0]], 1, 2, &instance.partition).unwrap();
    let config = ObjectiveConfig::for_instance(&instance, 1, 0.5, NormKind::LInf).unwrap();
    let q = quality_per_group(&instance.dataset, &instance.partition, &worse, &config).unwrap();
    assert!((q[0] - 0.8 / 0.9).abs() < 1e-12);
    assert!((q[1] - 0.6 / 0.8).abs() < 1e-12);
}

#[test]
fn matches_reference_on_random_instances() {
    for seed in 0..25 {
        let instance = random_instance(seed, 8, 5, 2);
        let oracle = Oracle::of(&instance, 2);
        let sol = random_solution(seed, &instance, 2);
        let o = opportunity_per_group(&instance.partition, &instance.fair, &sol).unwrap();
        let o_ref = opportunity(sol.lists(), &oracle.group_of, 2, 5, 2, &oracle.x);
        for (a, b) in o.iter().zip(&o_ref) {
            assert!((a - b).abs() <= 1e-12, "seed {seed}: {a} vs {b}");
        }
        let config = ObjectiveConfig::for_instance(&instance, 2, 0.3, NormKind::LInf).unwrap();
        let q = quality_per_group(&instance.dataset, &instance.partition, &sol, &config).unwrap();
        let q_ref = quality(sol.lists(), &oracle.hsc, &oracle.group_of, 2, &oracle.y);
        for (a, b) in q.iter().zip(&q_ref) {
            assert!((a - b).abs() <= 1e-12, "seed {seed}: {a} vs {b}");
        }
        let (_, v) = evaluate(&instance, &sol, &config).unwrap();
        let v_ref = 0.3 * linf(&o_ref) + 0.7 * linf(&q_ref);
        assert!((v - v_ref).abs() <= 1e-12);
    }
}

#[test]
fn l2_norm_combination() {
    let instance = random_instance(3, 10, 6, 3);
    let oracle = Oracle::of(&instance, 3);
    let sol = random_solution(3, &instance, 3);
    let config = ObjectiveConfig::for_instance(&instance, 3, 0.6, NormKind::L2).unwrap();
    let (_, v) = evaluate(&instance, &sol, &config).unwrap();
    let o = opportunity(sol.lists(), &oracle.group_of, 3, 6, 3, &oracle.x);
    let q = quality(sol.lists(), &oracle.hsc, &oracle.group_of, 3, &oracle.y);
    assert!((v - (0.6 * common::l2(&o) + 0.4 * common::l2(&q))).abs() < 1e-12);
}

#[test]
fn zero_hsc_quality_gives_zero_loss() {
    let dataset = Dataset::from_rows(&[vec![0.0, 0.0], vec![0.5, 0.2]]).unwrap();
    let partition = GroupPartition::new(vec![0, 1], 2).unwrap();
    let instance = Instance::with_population_target(dataset, partition).unwrap();
    let config = ObjectiveConfig::for_instance(&instance, 1, 0.5, NormKind::LInf).unwrap();
    let sol = Solution::from_lists(vec![vec![1], vec![0]], 1, 2, &instance.partition).unwrap();
    let q = quality_per_group(&instance.dataset, &instance.partition, &sol, &config).unwrap();
    assert_eq!(q, vec![0.0, 0.0]);
}

#[test]
fn delta_pricing_over_a_thousand_moves() {
    let instance = random_instance(11, 100, 20, 3);
    let config = ObjectiveConfig::for_instance(&instance, 5, 0.5, NormKind::LInf).unwrap();
    let mut state = SearchState::new(&instance, instance.hsc(5).unwrap(), config.clone()).unwrap();
    let mut rng = 0x2545_f491_4f6c_dd1du64;
    let mut next = |bound: usize| {
        rng ^= rng << 13;
        rng ^= rng >> 7;
        rng ^= rng << 17;
        (rng % bound as u64) as usize
    };
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let i = next(100);
        let list = state.solution().list(i).to_vec();
        let out = list[next(list.len())];
        let ins = loop {
            let j = next(20);
            if !list.contains(&j) {
                break j;
            }
        };
        let mv = Move::new(i, out, ins);
        let predicted = state.delta_objective(mv).unwrap();
        state.apply(mv, false).unwrap();
        let (_, actual) = evaluate(&instance, state.solution(), &config).unwrap();
        worst = worst.max((predicted - actual).abs());
    }
    assert!(worst <= 1e-9, "worst delta error {worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tracker_agrees_with_full_evaluation(seed in 0u64..10_000, n in 3usize..30, m in 3usize..12, g in 1usize..4, alpha in 0.0f64..=1.0) {
        prop_assume!(n >= g);
        let k = 1 + (seed as usize % (m - 1));
        let instance = random_instance(seed, n, m, g);
        let config = ObjectiveConfig::for_instance(&instance, k, alpha, NormKind::L2).unwrap();
        let mut sol = random_solution(seed, &instance, k);
        let mut tracker = ObjectiveTracker::new(&instance, &sol, &config).unwrap();
        for step in 0..20 {
            let i = (seed as usize + step * 7) % n;
            let list = sol.list(i).to_vec();
            let out = list[step % k];
            let Some(ins) = (0..m).find(|j| !list.contains(j) && (j + step) % 2 == 0).or_else(|| (0..m).find(|j| !list.contains(j))) else { break };
            let mv = Move::new(i, out, ins);
            let predicted = tracker.value_after(&instance, &sol, &config, mv);
            sol.apply_move(mv, &instance.partition).unwrap();
            tracker.commit(&instance, &sol, &config, mv);
            let (_, actual) = evaluate(&instance, &sol, &config).unwrap();
            prop_assert!((predicted - actual).abs() <= 1e-9);
            prop_assert!((tracker.value() - actual).abs() <= 1e-9);
            prop_assert!(sol.counters_consistent(&instance.partition));
        }
    }

    #[test]
    fn opportunity_invariant_under_group_duplication(seed in 0u64..10_000) {
        let instance = random_instance(seed, 9, 6, 2);
        let sol = random_solution(seed, &instance, 3);
        let o = opportunity_per_group(&instance.partition, &instance.fair, &sol).unwrap();

        // Duplicate every student: counts and group sizes double together.
        let groups: Vec<usize> = (0..18).map(|i| instance.partition.group_of(i % 9)).collect();
        let part = GroupPartition::new(groups, 2).unwrap();
        let lists: Vec<Vec<usize>> = (0..18).map(|i| sol.list(i % 9).to_vec()).collect();
        let doubled = Solution::from_lists(lists, 3, 6, &part).unwrap();
        let fair = FairDistribution::population(&part, 6).unwrap();
        let o2 = opportunity_per_group(&part, &fair, &doubled).unwrap();
        for (a, b) in o.iter().zip(&o2) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn quality_invariant_under_score_scaling(seed in 0u64..10_000, scale in 0.01f64..100.0) {
        let instance = random_instance(seed, 10, 6, 2);
        let sol = random_solution(seed, &instance, 2);
        let config = ObjectiveConfig::for_instance(&instance, 2, 0.5, NormKind::LInf).unwrap();
        let q = quality_per_group(&instance.dataset, &instance.partition, &sol, &config).unwrap();
        let rows: Vec<Vec<f64>> = (0..10).map(|i| instance.dataset.row(i).iter().map(|y| y * scale).collect()).collect();
        let scaled = Instance::with_population_target(Dataset::from_rows(&rows).unwrap(), instance.partition.clone()).unwrap();
        let config2 = ObjectiveConfig::for_instance(&scaled, 2, 0.5, NormKind::LInf).unwrap();
        let q2 = quality_per_group(&scaled.dataset, &scaled.partition, &sol, &config2).unwrap();
        for (a, b) in q.iter().zip(&q2) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
        let s = group_quality(&scaled.dataset, &scaled.partition, &sol).unwrap();
        prop_assert!(s.iter().all(|x| x.is_finite()));
    }
}
