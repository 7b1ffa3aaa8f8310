use lanebias::counterfactual::{d_to_centis, swap_draw};
use lanebias::model::{fit_at_rho, fit_ml, Constraint};
use lanebias::simulate::{rng, simulate_event, to_pairs, SimConfig};
use lanebias::stats::{kde, Bandwidth};
use lanebias::{
    combine, parse_event, parse_olympic, power_plan, speculate, Centis, EventDataset, EventSummary,
    Lane, LanePolicy, Observation, OlympicEntry, OlympicList, Run, RunStatus, SkaterPair,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn relclose(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn event_strategy() -> impl Strategy<Value = Vec<Observation>> {
    (
        any::<u64>(),
        8usize..40,
        0.05f64..0.4,
        0.0f64..0.5,
        -0.2f64..0.2,
    )
        .prop_map(|(seed, n, sigma, kappa, d)| {
            let cfg = SimConfig {
                n,
                sigma,
                kappa,
                d,
                ..SimConfig::default()
            };
            simulate_event(&cfg, &mut rng(seed))
        })
}

fn stacked_ols(obs: &[Observation]) -> Vec<f64> {
    let n = obs.len();
    let x = DMatrix::from_fn(2 * n, 4, |r, c| {
        let o = &obs[r / 2];
        let row = if r % 2 == 0 {
            [1.0, 0.0, o.x1, o.w]
        } else {
            [0.0, 1.0, o.x2, -o.w]
        };
        row[c]
    });
    let y = DVector::from_fn(2 * n, |r, _| {
        if r % 2 == 0 {
            obs[r / 2].y1
        } else {
            obs[r / 2].y2
        }
    });
    x.svd(true, true)
        .solve(&y, 1e-14)
        .unwrap()
        .iter()
        .copied()
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fixed_point_holds_at_interior_optimum(obs in event_strategy()) {
        let f = fit_ml(&obs, Constraint::FreeD).unwrap();
        if !f.diagnostics.boundary {
            prop_assert!(f.diagnostics.fixed_point_residual <= 1e-6);
            prop_assert!(f.diagnostics.sigma_form_gap <= 1e-5);
        }
        prop_assert!((f.kappa_un.powi(2) - f.sigma_un.powi(2) * f.rho / (1.0 - f.rho)).abs() < 1e-12);
    }

    #[test]
    fn zero_rho_is_stacked_least_squares(obs in event_strategy()) {
        let f = fit_at_rho(&obs, Constraint::FreeD, 0.0).unwrap();
        for (g, w) in f.beta.iter().zip(stacked_ols(&obs)) {
            prop_assert!((g - w).abs() <= 1e-10 * w.abs().max(1.0), "{g} vs {w}");
        }
    }

    #[test]
    fn constant_shift_moves_only_intercepts(obs in event_strategy(), c in -5.0f64..5.0) {
        let shifted: Vec<_> = obs.iter().map(|o| Observation { y1: o.y1 + c, y2: o.y2 + c, ..*o }).collect();
        let f = fit_ml(&obs, Constraint::FreeD).unwrap();
        let g = fit_ml(&shifted, Constraint::FreeD).unwrap();
        prop_assert!(relclose(g.a1(), f.a1() + c, 1e-9), "a1 {} {} rho {} {} cond {}", g.a1(), f.a1() + c, f.rho, g.rho, f.diagnostics.condition);
        prop_assert!(relclose(g.a2(), f.a2() + c, 1e-9));
        for (x, y) in [(f.b(), g.b()), (f.d(), g.d()), (f.rho, g.rho), (f.sigma_un, g.sigma_un), (f.kappa_un, g.kappa_un)] {
            prop_assert!(relclose(x, y, 1e-9), "{x} vs {y}");
        }
    }

    #[test]
    fn lane_relabel_negates_d(obs in event_strategy()) {
        let flipped: Vec<_> = obs.iter().map(|o| o.relabeled()).collect();
        let f = fit_ml(&obs, Constraint::FreeD).unwrap();
        let g = fit_ml(&flipped, Constraint::FreeD).unwrap();
        prop_assert!(relclose(g.d(), -f.d(), 1e-9));
        for (x, y) in [(f.a1(), g.a1()), (f.a2(), g.a2()), (f.b(), g.b()), (f.rho, g.rho), (f.sigma_un, g.sigma_un)] {
            prop_assert!(relclose(x, y, 1e-9), "{x} vs {y}");
        }
        prop_assert!(relclose(f.se_d(), g.se_d(), 1e-9));
    }

    #[test]
    fn covariance_is_symmetric_psd(obs in event_strategy()) {
        let f = fit_ml(&obs, Constraint::FreeD).unwrap();
        let c = DMatrix::from_fn(4, 4, |i, j| f.cov_beta[i][j]);
        prop_assert_eq!(&c, &c.transpose());
        let scale = c.diagonal().max();
        prop_assert!(c.symmetric_eigen().eigenvalues.iter().all(|&e| e >= -1e-12 * scale));
    }
}

fn dataset_strategy() -> impl Strategy<Value = EventDataset> {
    let run = (
        any::<bool>(),
        900i64..1200,
        200i64..3500,
        0usize..6,
        any::<bool>(),
    )
        .prop_map(|(outer, t100, gap, status, keep100)| {
            let lane = if outer {
                Lane::OuterStart
            } else {
                Lane::InnerStart
            };
            let status = [
                RunStatus::Ok,
                RunStatus::Fell,
                RunStatus::Disqualified,
                RunStatus::DidNotFinish,
                RunStatus::DidNotStart,
                RunStatus::Withdrawn,
            ][status];
            if status == RunStatus::Ok {
                Run::ok(lane, Centis(t100), Centis(t100 + gap))
            } else {
                Run {
                    lane,
                    t100: keep100.then_some(Centis(t100)),
                    t500: None,
                    status,
                }
            }
        });
    let row = (run.clone(), run, proptest::option::of("[a-z ]{1,12}"));
    (
        proptest::collection::vec(row, 0..25),
        "[A-Z][a-z]{2,8}",
        1950i32..2030,
    )
        .prop_map(|(rows, venue, year)| EventDataset {
            venue,
            year,
            skaters: rows
                .into_iter()
                .enumerate()
                .map(|(i, (day1, day2, note))| SkaterPair {
                    name: format!("K.Skater{i}"),
                    day1,
                    day2,
                    note: note.map(|n| n.trim().to_string()).filter(|n| !n.is_empty()),
                    declared_outlier: false,
                })
                .collect(),
        })
}

proptest! {
    #[test]
    fn dataset_round_trip(ds in dataset_strategy()) {
        prop_assert_eq!(parse_event(&ds.to_csv()).unwrap(), ds);
    }

    #[test]
    fn filtering_idempotent(ds in dataset_strategy(), strict in any::<bool>()) {
        let policy = if strict { LanePolicy::Strict } else { LanePolicy::WarnDay1 };
        let once = ds.usable_pairs(policy);
        let twice = EventDataset::from_pairs(&ds.venue, ds.year, &once.pairs).usable_pairs(policy);
        prop_assert_eq!(&once.pairs, &twice.pairs);
        let plus = once.pairs.iter().filter(|p| p.w.value() > 0.0).count();
        let minus = once.pairs.iter().filter(|p| p.w.value() < 0.0).count();
        prop_assert_eq!(plus + minus, once.pairs.len());
    }
}

fn olympic_strategy() -> impl Strategy<Value = OlympicList> {
    let entry = (any::<bool>(), 3500i64..4200, 0u8..10);
    proptest::collection::vec(entry, 1..45).prop_map(|rows| OlympicList {
        venue: "Rink".into(),
        year: 1994,
        entries: rows
            .into_iter()
            .enumerate()
            .map(|(i, (outer, t, f))| OlympicEntry {
                name: format!("Skater {i}"),
                lane: if outer {
                    Lane::OuterStart
                } else {
                    Lane::InnerStart
                },
                time: (f != 0).then_some(Centis(t)),
                status: if f != 0 {
                    RunStatus::Ok
                } else {
                    RunStatus::DidNotFinish
                },
            })
            .collect(),
    })
}

proptest! {
    #[test]
    fn double_swap_is_identity(list in olympic_strategy(), d in 0i64..20) {
        prop_assert_eq!(swap_draw(&swap_draw(&list, Centis(d)), Centis(d)), list.clone());
        prop_assert_eq!(parse_olympic(&list.to_csv()).unwrap(), list);
    }

    #[test]
    fn adjusted_times_undo_to_inputs(list in olympic_strategy(), d in 0i64..20) {
        let s = speculate(&list, d as f64 / 100.0);
        prop_assert_eq!(s.d_used, d_to_centis(d as f64 / 100.0));
        let mut recovered: Vec<i64> = s.entries.iter().filter_map(|e| {
            let src = list.entries.iter().find(|x| x.name == e.name).unwrap();
            e.time.map(|t| match src.lane {
                Lane::InnerStart => t.0 - d,
                Lane::OuterStart => t.0 + d,
            })
        }).collect();
        let mut input: Vec<i64> = list.entries.iter().filter(|e| e.finished()).map(|e| e.time.unwrap().0).collect();
        recovered.sort();
        input.sort();
        prop_assert_eq!(recovered, input);
        // competition ranking: rank = 1 + number of strictly faster finishers
        for e in &s.entries {
            if let (Some(r), Some(t)) = (e.rank, e.time) {
                let faster = s.entries.iter().filter(|x| x.time.is_some_and(|u| u < t)).count();
                prop_assert_eq!(r, faster + 1);
            }
        }
    }

    #[test]
    fn combine_is_scale_equivariant(
        rows in proptest::collection::vec((-0.3f64..0.3, 0.01f64..0.2), 1..15),
        c in 0.01f64..100.0,
    ) {
        let a: Vec<_> = rows.iter().map(|&(d, s)| EventSummary::new("e", d, s)).collect();
        let b: Vec<_> = rows.iter().map(|&(d, s)| EventSummary::new("e", c * d, c * s)).collect();
        let (ma, mb) = (combine(&a).unwrap(), combine(&b).unwrap());
        prop_assert!(relclose(mb.grand_d, c * ma.grand_d, 1e-12));
        prop_assert!(relclose(mb.grand_se, c * ma.grand_se, 1e-12));
        prop_assert!(relclose(mb.z, ma.z, 1e-10));
        prop_assert!((mb.p_one_sided - ma.p_one_sided).abs() < 1e-10);
        prop_assert!(relclose(mb.omega0, c * ma.omega0, 1e-9));
    }

    #[test]
    fn equal_se_gives_arithmetic_mean(ds in proptest::collection::vec(-0.3f64..0.3, 1..15), se in 0.01f64..0.2) {
        let a: Vec<_> = ds.iter().map(|&d| EventSummary::new("e", d, se)).collect();
        let m = combine(&a).unwrap();
        let mean = ds.iter().sum::<f64>() / ds.len() as f64;
        prop_assert!((m.grand_d - mean).abs() < 1e-14);
        let (lo, hi) = m.ci95;
        prop_assert!(((hi - lo) / 2.0 - 1.959_963_985 * m.grand_se).abs() < 1e-8);
    }

    #[test]
    fn power_is_monotone(d in 0.0f64..0.2, dd in 0.001f64..0.1, se in 0.005f64..0.1, dse in 0.001f64..0.05) {
        let base = power_plan(0.25, se, d, 0.05).unwrap().power;
        prop_assert!(power_plan(0.25, se, d + dd, 0.05).unwrap().power > base || base > 1.0 - 1e-12);
        prop_assert!(power_plan(0.25, se + dse, d, 0.05).unwrap().power < base || d == 0.0 || base > 1.0 - 1e-12);
    }

    #[test]
    fn kde_ignores_order(x in proptest::collection::vec(-3.0f64..3.0, 2..40), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut y = x.clone();
        y.shuffle(&mut rng(seed));
        let (a, b) = (kde(&x, Bandwidth::Silverman), kde(&y, Bandwidth::Silverman));
        prop_assert!(a.bandwidth > 0.0);
        prop_assert!((a.bandwidth - b.bandwidth).abs() <= 1e-12 * a.bandwidth);
        for (u, v) in a.density.iter().zip(&b.density) {
            prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
        }
    }
}

#[test]
fn simulated_pairs_feed_the_screening_pipeline() {
    let obs = simulate_event(&SimConfig::default(), &mut rng(3));
    let pairs = to_pairs(&obs);
    let c = lanebias::clean_and_refit(&pairs, Default::default()).unwrap();
    assert_eq!(c.kept.len() + c.removed.len(), pairs.len());
}
