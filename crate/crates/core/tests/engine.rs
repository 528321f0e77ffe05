use dyngem::engine::{
    gf_init, gf_objective, run, run_observed, train_gf, Method, RunConfig, StepOutput,
};
use dyngem::graph::{generate_sbm_series, DynamicGraph, SbmConfig};
use dyngem::growth::satisfies_rule;
use dyngem::model::Hyperparameters;

fn series(nodes: usize, initial: Option<usize>, steps: usize, seed: u64) -> DynamicGraph {
    let config = SbmConfig {
        node_count: nodes,
        communities: 2,
        p_in: 0.3,
        p_out: 0.02,
        migrate_per_step: 2,
        steps,
        initial_node_count: initial,
        ..SbmConfig::default()
    };
    generate_sbm_series(&config, seed).unwrap().graph
}

fn small(method: Method) -> RunConfig {
    RunConfig {
        method,
        hyper: Hyperparameters {
            d: 4,
            hidden: vec![16],
            epochs_first: 6,
            epochs_warm: 2,
            batch_size: 32,
            base_lr: 1e-4,
            seed: 7,
            ..Hyperparameters::default()
        },
        gf_iters: 10,
        ..RunConfig::default()
    }
}

#[test]
fn every_method_yields_one_row_per_node() {
    let g = series(40, Some(30), 4, 1);
    for method in Method::ALL {
        let out = run(&g, &small(method)).unwrap();
        assert_eq!(out.method, method);
        assert_eq!(out.len(), g.len());
        for (emb, snap) in out.embeddings.iter().zip(g.snapshots()) {
            assert_eq!(emb.dim(), (snap.node_count(), 4), "{method}");
            assert!(emb.iter().all(|v| v.is_finite()));
        }
    }
}

#[test]
fn dyngem_depends_only_on_the_prefix() {
    let g = series(40, Some(30), 5, 2);
    let full = run(&g, &small(Method::Dyngem)).unwrap();
    let head = run(&g.prefix(3).unwrap(), &small(Method::Dyngem)).unwrap();
    assert_eq!(&full.embeddings[..3], &head.embeddings[..]);
}

#[test]
fn runs_are_deterministic() {
    let g = series(40, None, 3, 3);
    for method in [Method::Dyngem, Method::SdneAlign, Method::GfInit] {
        assert_eq!(
            run(&g, &small(method)).unwrap().embeddings,
            run(&g, &small(method)).unwrap().embeddings
        );
    }
}

#[test]
fn parallel_cold_start_matches_sequential() {
    let g = series(40, Some(32), 4, 4);
    for method in [Method::SdneRetrain, Method::Gf] {
        let seq = run(&g, &small(method)).unwrap();
        let par = run(
            &g,
            &RunConfig {
                jobs: 3,
                ..small(method)
            },
        )
        .unwrap();
        assert_eq!(seq.embeddings, par.embeddings);
    }
}

#[test]
fn single_snapshot_dyngem_equals_sdne() {
    let g = series(40, None, 1, 5);
    let a = run(&g, &small(Method::Dyngem)).unwrap();
    let b = run(&g, &small(Method::SdneRetrain)).unwrap();
    assert_eq!(a.embeddings, b.embeddings);
}

#[test]
fn warm_start_uses_fewer_updates() {
    let g = series(40, None, 4, 6);
    let mut cfg = small(Method::Dyngem);
    cfg.hyper.epochs_first = Hyperparameters::default().epochs_first;
    cfg.hyper.epochs_warm = Hyperparameters::default().epochs_warm;
    let warm = run(&g, &cfg).unwrap();
    let cold = run(
        &g,
        &RunConfig {
            method: Method::SdneRetrain,
            ..cfg
        },
    )
    .unwrap();
    assert!(warm.total_updates() < cold.total_updates());
}

#[test]
fn growth_events_keep_the_width_rule() {
    let g = series(200, Some(100), 10, 8);
    let mut cfg = small(Method::Dyngem);
    cfg.hyper.hidden = vec![24];
    cfg.hyper.d = 4;
    let mut sizes = Vec::new();
    let out = run_observed(&g, &cfg, &mut |o: StepOutput<'_>| {
        let model = o.model.expect("autoencoder");
        sizes.push((o.step, model.encoder_sizes(), model.decoder_sizes()));
        Ok(())
    })
    .unwrap();
    assert_eq!(out.growth.len(), g.len() - 1);
    // the initial architecture is taken as given; every grown one obeys the rule
    for (step, enc, dec) in sizes {
        assert_eq!(enc[0], g[step].node_count());
        if step == 0 {
            continue;
        }
        assert!(satisfies_rule(&enc, cfg.hyper.rho), "step {step}: {enc:?}");
        let mirror: Vec<usize> = enc.iter().rev().copied().collect();
        assert_eq!(dec, mirror);
    }
}

#[test]
fn observer_sees_steps_in_order() {
    let g = series(30, None, 3, 9);
    for method in Method::ALL {
        let mut seen = Vec::new();
        run_observed(&g, &small(method), &mut |o: StepOutput<'_>| {
            assert_eq!(o.model.is_some(), method.is_autoencoder());
            seen.push(o.step);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![0, 1, 2]);
    }
}

#[test]
fn gf_objective_decreases() {
    let g = series(50, None, 1, 10);
    let snap = &g[0];
    let cfg = small(Method::Gf).gf();
    let mut y = gf_init(snap.node_count(), cfg.d, 1);
    let start = gf_objective(&y, snap, cfg.lambda);
    let out = train_gf(&mut y, snap, &cfg, 2).unwrap();
    assert_eq!(out.trace.len(), cfg.epochs);
    assert!(*out.trace.last().unwrap() < start);
}

#[test]
fn invalid_configs_are_rejected() {
    let g = series(30, None, 2, 11);
    assert!(run(
        &g,
        &RunConfig {
            jobs: 0,
            ..small(Method::Gf)
        }
    )
    .is_err());
    let mut bad = small(Method::Dyngem);
    bad.hyper.beta = 1.0;
    assert!(run(&g, &bad).is_err());
}
