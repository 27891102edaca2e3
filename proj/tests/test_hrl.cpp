#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "hierlab/envs/episode.hpp"
#include "hierlab/hrl/goal_agent.hpp"
#include "hierlab/hrl/options_agent.hpp"
#include "hierlab/hrl/relabel.hpp"
#include "oracles.hpp"

using namespace hierlab;
using namespace hierlab::hrl;
using Vec = Eigen::VectorXd;
using V2 = Eigen::Vector2d;

namespace {

HrlConfig small_cfg(Paradigm p = Paradigm::GoalConditioned) {
  HrlConfig c;
  c.paradigm = p;
  c.high.hidden = c.low.hidden = {16, 16};
  c.option_selector.hidden = {16};
  c.batch_size = 16;
  return c;
}

// A short logged episode on MazeDesk driven by the agent itself.
template <typename Agent>
replay::Trajectory rollout(const Agent& agent, int steps, Rng& rng, std::vector<HierarchyState>* states = nullptr) {
  envs::EpisodeRunner runner(envs::make_spec(envs::TaskId::MazeDesk), Rng(rng.engine()()));
  HierarchyState hs;
  for (int i = 0; i < steps; ++i) {
    auto [a, next] = agent.act_hierarchy(runner.obs(), hs, true, rng);
    hs = next;
    if (states) states->push_back(hs);
    const auto out = runner.step(a, hs.goal, hs.option, hs.anchor);
    if (out.episode_over) break;
  }
  return runner.finish();
}

}  // namespace

TEST(Intrinsic, Cases) {
  EXPECT_EQ(intrinsic_reward(V2(1, 1), V2(0.5, -1), V2(1.5, 0)), 0.0);
  EXPECT_DOUBLE_EQ(intrinsic_reward(V2(0, 0), V2(3, 4), V2(0, 0)), -5.0);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const V2 a(rng.normal(), rng.normal()), g(rng.normal(), rng.normal()), n(rng.normal(), rng.normal());
    const double dx = a.x() + g.x() - n.x(), dy = a.y() + g.y() - n.y();
    EXPECT_NEAR(intrinsic_reward(a, g, n), -std::sqrt(dx * dx + dy * dy), 1e-12);
    const V2 shift(rng.normal(0, 10), rng.normal(0, 10));
    EXPECT_NEAR(intrinsic_reward(a + shift, g, n + shift), intrinsic_reward(a, g, n), 1e-12);
  }
}

TEST(Intrinsic, LowFeaturesCarryRemainingDisplacement) {
  Vec obs(6);
  obs << 1, 2, 0.1, 0.2, 3, 4;
  const Vec f = low_features(obs, V2(0.5, 0.5), Vec::Constant(2, 1.0));
  ASSERT_EQ(f.size(), 8);
  EXPECT_EQ(f.head(6), obs);
  EXPECT_DOUBLE_EQ(f[6], 0.5);
  EXPECT_DOUBLE_EQ(f[7], -0.5);
}

TEST(GoalAgent, RejectsOptionsParadigm) {
  Rng rng(2);
  EXPECT_THROW(GoalConditionedAgent(6, small_cfg(Paradigm::Options), rng), std::invalid_argument);
  EXPECT_THROW(OptionsAgent(6, small_cfg(Paradigm::GoalConditioned), rng), std::invalid_argument);
  auto bad = small_cfg();
  bad.c_train = 0;
  EXPECT_THROW(GoalConditionedAgent(6, bad, rng), std::invalid_argument);
}

TEST(GoalAgent, DimensionsMatchRoles) {
  Rng rng(3);
  GoalConditionedAgent agent(6, small_cfg(), rng);
  EXPECT_EQ(agent.high().action_dim(), 2);
  EXPECT_EQ(agent.high().obs_dim(), 6);
  EXPECT_EQ(agent.low().obs_dim(), 8);
}

TEST(GoalAgent, GoalEveryStepWhenHorizonIsOne) {
  Rng rng(4);
  auto cfg = small_cfg();
  cfg.c_expl = 1;
  GoalConditionedAgent agent(6, cfg, rng);
  std::vector<HierarchyState> states;
  rollout(agent, 12, rng, &states);
  for (std::size_t i = 1; i < states.size(); ++i) EXPECT_NE(states[i].goal, states[i - 1].goal);
}

TEST(GoalAgent, GoalChangesOnlyEveryTenSteps) {
  Rng rng(5);
  GoalConditionedAgent agent(6, small_cfg(), rng);
  std::vector<HierarchyState> states;
  rollout(agent, 30, rng, &states);
  ASSERT_EQ(states.size(), 30u);
  for (std::size_t i = 1; i < states.size(); ++i) {
    const bool changed = states[i].goal != states[i - 1].goal;
    EXPECT_EQ(changed, i % 10 == 0) << "step " << i;
  }
}

TEST(GoalAgent, GreedyGoalsStayInBox) {
  Rng rng(6);
  GoalConditionedAgent agent(6, small_cfg(), rng);
  for (int i = 0; i < 200; ++i) {
    const Vec obs = Vec::NullaryExpr(6, [&] { return rng.uniform(-4, 4); });
    auto [a, hs] = agent.act_hierarchy(obs, HierarchyState{}, true, rng);
    ASSERT_TRUE((hs.goal.array().abs() <= 2.0).all());
    ASSERT_TRUE((a.array().abs() <= 1.0).all());
  }
}

TEST(GoalAgent, AppendsFrozenCompatibleRecords) {
  Rng rng(7);
  GoalConditionedAgent agent(6, small_cfg(), rng);
  const auto traj = rollout(agent, 200, rng);
  const auto lows = agent.low_records(traj);
  ASSERT_EQ(lows.size(), traj.size());
  for (std::size_t i = 0; i < lows.size(); ++i) {
    // g_next keeps the absolute target of the following step
    if (i + 1 < lows.size()) {
      const V2 next_target = traj[i + 1].anchor + traj[i + 1].goal;
      EXPECT_LT((lows[i].anchor + lows[i].g_next - next_target).norm(), 1e-12);
    }
    EXPECT_LE(lows[i].r_int, 0.0);
  }
  EXPECT_THROW(agent.low_level_train_step_goal({lows[9]}, rng), std::invalid_argument);
  EXPECT_NO_THROW(agent.low_level_train_step_goal({replay::freeze_goal(lows[9])}, rng));
}

TEST(GoalAgent, BufferedBatchesAreFrozen) {
  Rng rng(8);
  GoalConditionedAgent agent(6, small_cfg(), rng);
  agent.ingest(rollout(agent, 200, rng));
  for (int i = 0; i < 20; ++i) {
    const auto out = agent.train_step(rng);
    ASSERT_TRUE(out.low.has_value());
    ASSERT_TRUE(out.high.has_value());
  }
}

TEST(GoalAgent, RecordAtGoalHasZeroTarget) {
  Rng rng(9);
  GoalConditionedAgent agent(6, small_cfg(), rng);
  GoalTransition g;
  g.s = Vec::Zero(6);
  g.anchor = V2(0, 0);
  g.g = g.g_next = Vec::Constant(2, 1.0);
  g.a = Vec::Zero(2);
  g.s_next = Vec::Zero(6);
  g.s_next.head<2>() = V2(1, 1);
  g.r_int = intrinsic_reward(g.anchor, g.g, replay::xy_of(g.s_next));
  g.done = true;
  ASSERT_EQ(g.r_int, 0.0);
  agents::Transition t{low_features(g.s, g.anchor, g.g), g.a, g.r_int, low_features(g.s_next, g.anchor, g.g), true, 1};
  EXPECT_EQ(agent.low().targets({t}, rng)[0], 0.0);
}

TEST(GoalAgent, LowCriticLossTrendsDown) {
  Rng rng(10);
  GoalConditionedAgent agent(6, small_cfg(), rng);
  auto lows = agent.low_records(rollout(agent, 200, rng));
  std::vector<GoalTransition> batch;
  for (std::size_t i = 0; i < 32; ++i) batch.push_back(replay::freeze_goal(lows[i * 5]));
  std::vector<double> losses;
  for (int i = 0; i < 200; ++i) losses.push_back(agent.low_level_train_step_goal(batch, rng).critic);
  double head = 0, tail = 0;
  for (int i = 0; i < 20; ++i) {
    head += losses[static_cast<std::size_t>(i)];
    tail += losses[losses.size() - 1 - static_cast<std::size_t>(i)];
  }
  EXPECT_LT(tail, head);
}

TEST(GoalAgent, HindsightRecordsAreConsistent) {
  Rng rng(11);
  GoalConditionedAgent agent(6, small_cfg(Paradigm::GoalConditionedHindsight), rng);
  const auto traj = rollout(agent, 200, rng);
  agent.ingest(traj);
  const auto& buf = agent.low_buffer();
  ASSERT_EQ(buf.size(), 2 * traj.size());
  // originals first, then the relabelled copies for each window
  std::size_t relabelled = 0;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const auto& r = buf[i];
    if (r.g != r.g_next) continue;
    const V2 target = r.anchor + r.g;
    const V2 reached = r.s_next.head<2>();
    EXPECT_NEAR(r.r_int, -std::hypot(target.x() - reached.x(), target.y() - reached.y()), 1e-12);
    ++relabelled;
  }
  EXPECT_GE(relabelled, traj.size());
  // the last step of every window reaches its relabelled goal exactly
  const std::size_t n = traj.size();
  for (std::size_t w = 0; w < n / 10; ++w) EXPECT_NEAR(buf[n + w * 10 + 9].r_int, 0.0, 1e-12);
}

TEST(GoalAgent, HighRecordsFollowTrainHorizon) {
  Rng rng(12);
  auto cfg = small_cfg();
  cfg.c_train = 5;
  GoalConditionedAgent agent(6, cfg, rng);
  const auto traj = rollout(agent, 200, rng);
  const auto highs = agent.high_records(traj);
  ASSERT_EQ(highs.size(), (traj.size() + 9) / 10);
  for (std::size_t k = 0; k < highs.size(); ++k) {
    const auto w = oracle::brute_window(traj, k * 10, 5);
    EXPECT_NEAR(highs[k].r_sum, w.sum, 1e-12);
    EXPECT_EQ(highs[k].goal, traj[k * 10].goal);
    EXPECT_EQ(highs[k].nominal_horizon, 5);
  }
  auto wrong = highs;
  wrong[0].nominal_horizon = 10;
  EXPECT_THROW(agent.high_level_train_step(wrong, rng), std::invalid_argument);
}

TEST(GoalAgent, UnitTrainHorizonIsFlatOverGoals) {
  auto cfg = small_cfg();
  cfg.c_train = 1;
  Rng a(13), b(13);
  GoalConditionedAgent agent(6, cfg, a);
  auto flat = agents::Td3Agent::make(6, cfg.goal_box(), cfg.high, b);
  ASSERT_EQ(agent.high().heads().actor.online().params(), flat.heads().actor.online().params());
  Rng r(14);
  std::vector<CStepTransition> batch;
  std::vector<agents::Transition> plain;
  for (int i = 0; i < 8; ++i) {
    CStepTransition c;
    c.s = Vec::NullaryExpr(6, [&] { return r.uniform(-1, 1); });
    c.goal = Vec::NullaryExpr(2, [&] { return r.uniform(-2, 2); });
    c.r_sum = r.normal();
    c.s_next = Vec::NullaryExpr(6, [&] { return r.uniform(-1, 1); });
    batch.push_back(c);
    plain.push_back({c.s, c.goal, c.r_sum, c.s_next, false, 1});
  }
  Rng n1(15), n2(15);
  for (int i = 0; i < 4; ++i) {
    agent.high_level_train_step(batch, n1);
    flat.train_step(plain, n2);
  }
  EXPECT_EQ(agent.high().heads().actor.online().params(), flat.heads().actor.online().params());
  EXPECT_EQ(agent.high().heads().critic1.online().params(), flat.heads().critic1.online().params());
}

TEST(GoalAgent, TerminalHighRecordTargetIsReward) {
  Rng rng(16);
  GoalConditionedAgent agent(6, small_cfg(), rng);
  CStepTransition c;
  c.s = c.s_next = Vec::Zero(6);
  c.goal = Vec::Zero(2);
  c.r_sum = -3.25;
  c.done = true;
  c.nominal_horizon = 10;
  c.horizon = 4;
  EXPECT_EQ(agent.high().targets(agent.high_transitions({c}), rng)[0], -3.25);
}

TEST(GoalAgent, TrainingTargetsIgnoreExplorationHorizon) {
  auto c1 = small_cfg();
  auto c2 = small_cfg();
  c2.c_expl = 3;
  Rng a(17), b(17);
  GoalConditionedAgent x(6, c1, a), y(6, c2, b);
  Rng r(18);
  std::vector<CStepTransition> batch;
  for (int i = 0; i < 8; ++i) {
    CStepTransition c;
    c.s = Vec::NullaryExpr(6, [&] { return r.uniform(-1, 1); });
    c.goal = Vec::NullaryExpr(2, [&] { return r.uniform(-2, 2); });
    c.r_sum = r.normal();
    c.s_next = Vec::NullaryExpr(6, [&] { return r.uniform(-1, 1); });
    c.nominal_horizon = 10;
    c.horizon = 10;
    batch.push_back(c);
  }
  Rng n1(19), n2(19);
  const Vec tx = x.high().targets(x.high_transitions(batch), n1);
  const Vec ty = y.high().targets(y.high_transitions(batch), n2);
  EXPECT_EQ(tx, ty);
}

TEST(GoalAgent, CombinedNetworksShareOneTrunk) {
  Rng rng(20);
  auto cfg = small_cfg();
  cfg.combined_networks = true;
  GoalConditionedAgent agent(6, cfg, rng);
  EXPECT_EQ(agent.high().heads().actor.group(), agent.low().heads().actor.group());
  EXPECT_EQ(agent.groups().size(), 3u);
  agent.ingest(rollout(agent, 200, rng));
  EXPECT_NO_THROW(agent.train_step(rng));
}

TEST(Options, GreedySelectionIsArgmax) {
  Rng rng(21);
  auto cfg = small_cfg(Paradigm::Options);
  cfg.option_selector.epsilon = 0.0;
  OptionsAgent agent(6, cfg, rng);
  for (int i = 0; i < 50; ++i) {
    const Vec obs = Vec::NullaryExpr(6, [&] { return rng.uniform(-4, 4); });
    auto [a, hs] = agent.act_hierarchy(obs, HierarchyState{}, true, rng);
    EXPECT_EQ(hs.option, agents::argmax_lowest(agent.high().values(obs)));
  }
}

TEST(Options, OptionsSwitchOnSchedule) {
  Rng rng(22);
  OptionsAgent agent(6, small_cfg(Paradigm::Options), rng);
  std::vector<HierarchyState> states;
  const auto traj = rollout(agent, 60, rng, &states);
  for (std::size_t i = 1; i < traj.size(); ++i)
    if (i % 10 != 0) {
      EXPECT_EQ(traj[i].option, traj[i - 1].option);
    }
  EXPECT_TRUE(agent.config().option_selector.epsilon == 0.5);
}

TEST(Options, RecordsRouteToActiveOption) {
  Rng rng(23);
  auto cfg = small_cfg(Paradigm::Options);
  cfg.low_level_nstep = 3;
  OptionsAgent agent(6, cfg, rng);
  const auto traj = rollout(agent, 200, rng);
  agent.ingest(traj);
  std::size_t total = 0;
  for (int o = 0; o < 5; ++o) {
    const auto& buf = agent.option_buffer(o);
    total += buf.size();
    std::size_t k = 0;
    for (std::size_t t = 0; t < traj.size(); ++t) {
      if (traj[t].option != o) continue;
      const auto w = oracle::brute_window(traj, t, 3);
      EXPECT_NEAR(buf[k].r, w.sum, 1e-12);
      EXPECT_EQ(buf[k].s, traj[t].obs);
      EXPECT_EQ(buf[k].a, traj[t].action);
      ++k;
    }
    EXPECT_EQ(k, buf.size());
  }
  EXPECT_EQ(total, traj.size());
}

TEST(Options, TrainingOneOptionLeavesOthers) {
  Rng rng(24);
  OptionsAgent agent(6, small_cfg(Paradigm::Options), rng);
  agent.ingest(rollout(agent, 200, rng));
  std::vector<Vec> before;
  for (int o = 0; o < 5; ++o) before.push_back(agent.option(o).heads().actor.online().params());
  std::vector<agents::Transition> batch;
  for (int i = 0; i < 8; ++i)
    batch.push_back({Vec::Constant(6, 0.1 * i), Vec::Zero(2), -1.0, Vec::Constant(6, 0.1 * i + 0.05), false, 3});
  for (int i = 0; i < 4; ++i) agent.low_level_train_step_options(2, batch, rng);
  for (int o = 0; o < 5; ++o) {
    const bool same = before[static_cast<std::size_t>(o)] == agent.option(o).heads().actor.online().params();
    EXPECT_EQ(same, o != 2);
  }
  EXPECT_THROW(agent.low_level_train_step_options(5, batch, rng), std::out_of_range);
}

TEST(Options, SingleOptionIsFlat) {
  auto cfg = small_cfg(Paradigm::Options);
  cfg.m = 1;
  Rng a(25), b(25);
  OptionsAgent agent(6, cfg, a);
  auto flat = agents::Td3Agent::make(6, atomic_box(), cfg.low, b);
  std::vector<agents::Transition> batch;
  Rng r(26);
  for (int i = 0; i < 8; ++i)
    batch.push_back({Vec::NullaryExpr(6, [&] { return r.uniform(-1, 1); }), Vec::Zero(2), r.normal(),
                     Vec::NullaryExpr(6, [&] { return r.uniform(-1, 1); }), false, 1});
  Rng n1(27), n2(27);
  for (int i = 0; i < 4; ++i) {
    agent.low_level_train_step_options(0, batch, n1);
    flat.train_step(batch, n2);
  }
  EXPECT_EQ(agent.option(0).heads().actor.online().params(), flat.heads().actor.online().params());
}

TEST(Options, HighLevelTrainsOnIndices) {
  Rng rng(28);
  OptionsAgent agent(6, small_cfg(Paradigm::Options), rng);
  agent.ingest(rollout(agent, 200, rng));
  ASSERT_EQ(agent.high_buffer().size(), 20u);
  const auto out = agent.train_step(rng);
  EXPECT_TRUE(out.high.has_value());
  auto wrong = std::vector<CStepTransition>{agent.high_buffer()[0]};
  wrong[0].nominal_horizon = 3;
  EXPECT_THROW(agent.high_level_train_step(wrong), std::invalid_argument);
}

namespace {

CStepTransition window_record(Rng& rng, int len) {
  CStepTransition c;
  c.s = Vec::NullaryExpr(6, [&] { return rng.uniform(-3, 3); });
  c.goal = Vec::NullaryExpr(2, [&] { return rng.uniform(-2, 2); });
  Vec s = c.s;
  for (int k = 0; k < len; ++k) {
    c.window_obs.push_back(s);
    c.window_actions.push_back(Vec::NullaryExpr(2, [&] { return rng.uniform(-1, 1); }));
    s.head<2>() += 0.5 * c.window_actions.back();
  }
  c.s_next = s;
  c.horizon = c.nominal_horizon = len;
  return c;
}

}  // namespace

TEST(Relabel, ExactPolicyKeepsOriginalGoal) {
  Rng rng(30);
  auto rec = window_record(rng, 3);
  // a policy that emits exactly the logged actions when fed the stored goal
  std::vector<Vec> feats;
  for (const auto& o : rec.window_obs) feats.push_back(low_features(o, rec.s.head<2>(), rec.goal));
  LowPolicy policy = [&](const Vec& f) -> Vec {
    for (std::size_t k = 0; k < feats.size(); ++k)
      if (f == feats[k]) return rec.window_actions[k];
    return Vec::Constant(2, 5.0);
  };
  HrlConfig cfg;
  const auto out = hiro_offpolicy_relabel(rec, policy, 10, 2.0, cfg.goal_box(), rng);
  EXPECT_EQ(out.goal, rec.goal);
}

TEST(Relabel, SingleCandidateReturned) {
  Rng rng(31);
  auto rec = window_record(rng, 3);
  LowPolicy zero = [](const Vec&) -> Vec { return Vec::Zero(2); };
  HrlConfig cfg;
  EXPECT_EQ(hiro_offpolicy_relabel(rec, zero, 1, 2.0, cfg.goal_box(), rng).goal, rec.goal);
}

TEST(Relabel, MissingWindowRejected) {
  Rng rng(32);
  CStepTransition c;
  c.s = c.s_next = Vec::Zero(6);
  c.goal = Vec::Zero(2);
  LowPolicy zero = [](const Vec&) -> Vec { return Vec::Zero(2); };
  HrlConfig cfg;
  EXPECT_THROW(hiro_offpolicy_relabel(c, zero, 10, 2.0, cfg.goal_box(), rng), std::invalid_argument);
}

TEST(Relabel, LinearPolicyBruteForce) {
  Rng rng(33);
  HrlConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    auto rec = window_record(rng, 3);
    Eigen::MatrixXd w = Eigen::MatrixXd::NullaryExpr(2, 8, [&] { return rng.normal(0, 0.5); });
    LowPolicy policy = [&](const Vec& f) -> Vec { return w * f; };
    Rng draw = rng;
    const auto cands = relabel_candidates(rec, 10, 2.0, cfg.goal_box(), draw);
    ASSERT_EQ(cands.size(), 10u);
    std::size_t best = 0;
    double best_score = -1e300;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      double score = 0;
      for (std::size_t k = 0; k < 3; ++k) {
        // features written out by hand: obs, anchor + goal - position
        Vec f(8);
        const Vec& o = rec.window_obs[k];
        f << o, rec.s[0] + cands[i][0] - o[0], rec.s[1] + cands[i][1] - o[1];
        const Vec d = w * f - rec.window_actions[k];
        score -= d[0] * d[0] + d[1] * d[1];
      }
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    const auto out = hiro_offpolicy_relabel(rec, policy, 10, 2.0, cfg.goal_box(), rng);
    EXPECT_EQ(out.goal, cands[best]);
  }
}

TEST(Relabel, CandidatesHonourGoalBox) {
  Rng rng(34);
  HrlConfig cfg;
  auto rec = window_record(rng, 3);
  rec.s_next.head<2>() = rec.s.head<2>() + V2(10, -10);
  const auto cands = relabel_candidates(rec, 10, 2.0, cfg.goal_box(), rng);
  for (std::size_t i = 1; i < cands.size(); ++i) ASSERT_TRUE((cands[i].array().abs() <= 2.0).all());
  EXPECT_EQ(cands[1], Vec(V2(2, -2)));
}
