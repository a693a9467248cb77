use compute_rl::agents::{
    fixed_rate_baseline, smdp_value_iteration, Agent, AgentConfig, Approximator, EpsilonSchedule, Mlp, QFunction,
    QModel, TdSample,
};
use compute_rl::envs::{ChainConfig, ChainMdp, EnvConfig, EnvState, Environment, LineTrack, LineTrackConfig, CHAIN_RIGHT};
use compute_rl::exec::{EpisodeRunner, OptionExecutor};
use compute_rl::experiments::{train_run, CostSpec, ExperimentConfig, RunSpec, Variant};
use compute_rl::primitives::{ComputeCostModel, DurationSet, OptionSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn drive(agent: &mut Agent, env: &mut ChainMdp, episodes: std::ops::Range<u64>, cost: f64) {
    let exec = OptionExecutor {
        gamma: agent.config().gamma,
        cost: ComputeCostModel::new(cost).unwrap(),
        charge_cost: agent.charges_cost(),
    };
    for ep in episodes {
        let mut runner = EpisodeRunner::new(exec, 200);
        let mut state = runner.begin(env, ep);
        while !runner.finished(env) {
            let o = agent.act(&state);
            let tr = runner.step(env, o).unwrap();
            state = tr.next_state.clone();
            agent.observe(tr);
        }
    }
}

#[test]
fn checkpoint_resume_matches_uninterrupted_training() {
    for config in [AgentConfig::tabular(), AgentConfig::neural()] {
        let mut env = ChainMdp::new(ChainConfig::default()).unwrap();
        let desc = env.descriptor();
        let mut straight = Agent::new(config.clone(), &desc, DurationSet::default(), 4).unwrap();
        drive(&mut straight, &mut env, 0..30, 0.05);

        let mut first = Agent::new(config, &desc, DurationSet::default(), 4).unwrap();
        drive(&mut first, &mut env, 0..15, 0.05);
        let mut buf = Vec::new();
        first.save_checkpoint(&mut buf).unwrap();
        let mut resumed = Agent::load_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(resumed, first);
        drive(&mut resumed, &mut env, 15..30, 0.05);
        assert_eq!(resumed, straight);
    }
}

#[test]
fn corrupt_checkpoint_is_rejected() {
    let env = ChainMdp::new(ChainConfig::default()).unwrap();
    let agent = Agent::new(AgentConfig::tabular(), &env.descriptor(), DurationSet::default(), 0).unwrap();
    let mut buf = Vec::new();
    agent.save_checkpoint(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap().replacen("\"format_version\":1", "\"format_version\":99", 1);
    assert!(Agent::load_checkpoint(text.as_bytes()).is_err());
    assert!(Agent::load_checkpoint(&b"{}"[..]).is_err());
}

#[test]
fn budget_parity_between_baseline_and_compute() {
    let mut cfg = ExperimentConfig::new(EnvConfig::LineTrack(LineTrackConfig::default()), 7_777, vec![2]);
    cfg.cost = CostSpec::Explicit { value: 0.1 };
    let compute = train_run(&RunSpec::new(&cfg, Variant::Compute, 0.1, 2)).unwrap();
    let baseline = train_run(&RunSpec::new(&cfg, Variant::Baseline, 0.1, 2)).unwrap();
    assert_eq!(compute.summary.training.decisions(), 7_777);
    assert_eq!(baseline.summary.training.decisions(), 7_777);
    assert_eq!(compute.agent.decisions(), 7_777);
    assert_eq!(baseline.agent.decisions(), 7_777);
    // The baseline spends one tick per decision.
    assert_eq!(baseline.summary.training.ticks(), 7_777);
    assert!(compute.summary.training.ticks() >= baseline.summary.training.ticks());
    let trained: u64 = compute.episodes.iter().map(|e| e.trained_decisions).sum();
    assert_eq!(trained, 7_777);
    // The budget ran out inside the last episode, which was still played out.
    let last = compute.episodes.last().unwrap();
    assert!(last.decisions >= last.trained_decisions);
    assert_eq!(compute.summary.curve.last().unwrap().decisions, 7_777);
}

#[test]
fn baseline_only_picks_single_ticks() {
    let env = LineTrack::new(LineTrackConfig::default()).unwrap();
    let b = fixed_rate_baseline(AgentConfig::tabular(), &env.descriptor(), 0).unwrap();
    assert!(!b.charges_cost());
    assert!(b.options().iter().all(|o| o.duration.ticks() == 1));
    assert_eq!(b.options().len(), env.descriptor().num_actions());
}

#[test]
fn expensive_decisions_teach_long_options_on_the_chain() {
    let gamma = 0.9;
    let env = ChainMdp::new(ChainConfig::default()).unwrap();
    let options = OptionSet::new(2, DurationSet::default()).unwrap();
    let cost = ComputeCostModel::new(0.3).unwrap();
    let exact = smdp_value_iteration(&env, &options, gamma, cost, 1e-12).unwrap();
    let mut cfg = ExperimentConfig::new(EnvConfig::Chain(ChainConfig::default()), 100_000, vec![1]);
    cfg.agent = AgentConfig::online_tabular(0.8, 0.4, gamma);
    cfg.trace_episodes = 0;
    let out = train_run(&RunSpec::new(&cfg, Variant::Compute, 0.3, 1)).unwrap();
    let QModel::Table(q) = out.agent.q() else { unreachable!() };
    assert!(q.max_abs_diff(&exact) < 1e-2, "{}", q.max_abs_diff(&exact));
    // Greedy from the start: one option long enough to reach the goal.
    let start = chain_start();
    let best = out.agent.act_greedy(&start);
    assert_eq!(best.action, CHAIN_RIGHT);
    assert!(best.duration.ticks() >= 5);
}

fn chain_start() -> EnvState {
    ChainMdp::new(ChainConfig::default()).unwrap().reset(0)
}

#[test]
fn network_agent_learns_the_chain() {
    let mut cfg = ExperimentConfig::new(EnvConfig::Chain(ChainConfig::default()), 6_000, vec![0]);
    cfg.agent = AgentConfig::neural();
    cfg.agent.gamma = 0.9;
    cfg.agent.buffer_capacity = 5_000;
    cfg.agent.target_sync_period = 200;
    cfg.agent.epsilon = EpsilonSchedule {
        start: 1.0,
        end: 0.05,
        decay_decisions: 3_000,
    };
    cfg.agent.approximator = Approximator::Mlp {
        hidden: vec![32, 32],
        grad_clip: 1.0,
    };
    cfg.trace_episodes = 0;
    let out = train_run(&RunSpec::new(&cfg, Variant::Compute, 0.0, 0)).unwrap();
    let QModel::Mlp(net) = out.agent.q() else { unreachable!() };
    let start = chain_start();
    // Four steps to the goal at no cost: the start is worth 0.9^4.
    let v = net.max_value(&start);
    assert!((v - 0.9f64.powi(4)).abs() < 0.1, "start value {v}");
    assert_eq!(out.agent.act_greedy(&start).action, CHAIN_RIGHT);
}

#[test]
fn gradient_matches_finite_differences_on_a_small_net() {
    // 3 inputs, 8 and 6 hidden, 4 outputs: 32 + 54 + 28 = 114 parameters.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut net = Mlp::new(3, &[8, 6], 4, vec![1.0; 3], &mut rng);
    assert_eq!(net.num_params(), 114);
    for p in net.params_mut() {
        *p += rng.gen_range(-0.1..0.1);
    }
    let batch: Vec<TdSample> = (0..5)
        .map(|_| TdSample {
            features: (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            option_index: rng.gen_range(0..4),
            target: rng.gen_range(-2.0..2.0),
        })
        .collect();
    let (loss, grad) = net.loss_and_grad(&batch);
    assert_eq!(loss, net.loss(&batch));
    let h = 1e-6;
    for i in 0..net.num_params() {
        let orig = net.params()[i];
        net.params_mut()[i] = orig + h;
        let up = net.loss(&batch);
        net.params_mut()[i] = orig - h;
        let down = net.loss(&batch);
        net.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        assert!(
            (numeric - grad[i]).abs() <= 1e-6 * (1.0 + numeric.abs()),
            "param {i}: analytic {} numeric {numeric}",
            grad[i]
        );
    }
}
