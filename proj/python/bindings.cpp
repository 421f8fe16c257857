#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <sstream>

#include "pifo/cli/cli.hpp"
#include "pifo/cli/report.hpp"
#include "pifo/env/demo.hpp"
#include "pifo/env/env.hpp"
#include "pifo/errors.hpp"
#include "pifo/pipeline/pipeline.hpp"
#include "pifo/rl/config.hpp"
#include "pifo/rl/ppo.hpp"

namespace py = pybind11;
using namespace pifo;

namespace {

py::array_t<std::uint8_t> frame_array(const env::Frame& f) {
  py::array_t<std::uint8_t> out({env::kFrameSide, env::kFrameSide});
  std::memcpy(out.mutable_data(), f.pixels().data(), env::kFramePixels);
  return out;
}

using Pixels = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

py::list trajectories_of(const env::DemoSet& d) {
  py::list out;
  for (const auto& traj : d.trajectories) {
    py::array_t<std::uint8_t> a({traj.size(), env::kFrameSide, env::kFrameSide});
    for (std::size_t t = 0; t < traj.size(); ++t) {
      std::memcpy(a.mutable_data() + t * env::kFramePixels, traj[t].pixels().data(), env::kFramePixels);
    }
    out.append(a);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_pifo, m) {
  m.doc() = "Imitation from video-only demonstrations with a proprioceptive policy";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<UsageError>(m, "UsageError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<StateError>(m, "StateError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<EvaluationError>(m, "EvaluationError", base.ptr());
  py::register_exception<NonFiniteError>(m, "NonFiniteError", base.ptr());
  py::register_exception<CheckpointError>(m, "CheckpointError", base.ptr());

  py::class_<env::EnvSpec>(m, "EnvSpec")
      .def_property_readonly("id", [](const env::EnvSpec& s) { return std::string(env::to_string(s.id)); })
      .def_readonly("proprio_dim", &env::EnvSpec::proprio_dim)
      .def_readonly("action_dim", &env::EnvSpec::action_dim)
      .def_readonly("action_low", &env::EnvSpec::action_low)
      .def_readonly("action_high", &env::EnvSpec::action_high)
      .def_readonly("max_steps", &env::EnvSpec::max_steps);

  py::class_<env::EnvState>(m, "EnvState")
      .def(py::init<std::vector<double>, int>(), py::arg("s"), py::arg("step_index") = 0)
      .def_readwrite("s", &env::EnvState::s)
      .def_readwrite("step_index", &env::EnvState::step_index)
      .def(py::self == py::self);

  py::class_<env::StepResult>(m, "StepResult")
      .def_readonly("next", &env::StepResult::next)
      .def_readonly("reward", &env::StepResult::reward)
      .def_readonly("done", &env::StepResult::done);

  m.def("spec", [](const std::string& id) { return env::spec_for(id); }, py::arg("env"));
  m.def("reset", [](const std::string& id, std::uint64_t seed) { return env::reset(env::spec_for(id), seed); },
        py::arg("env"), py::arg("seed"));
  m.def("step", [](const std::string& id, const env::EnvState& s, const std::vector<double>& a) {
    return env::step(env::spec_for(id), s, a);
  }, py::arg("env"), py::arg("state"), py::arg("action"));
  m.def("render", [](const std::string& id, const env::EnvState& s) {
    return frame_array(env::render(env::spec_for(id), s));
  }, py::arg("env"), py::arg("state"));

  py::class_<rl::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_static("parse", [](const std::string& text) { return rl::parse_config(text); })
      .def("serialize", &rl::serialize_config)
      .def("set", &rl::set_config_value)
      .def("validate", &rl::validate)
      .def(py::self == py::self)
      .def_readwrite("gamma", &rl::TrainConfig::gamma)
      .def_readwrite("gae_lambda", &rl::TrainConfig::gae_lambda)
      .def_readwrite("clip_ratio", &rl::TrainConfig::clip_ratio)
      .def_readwrite("entropy_coef", &rl::TrainConfig::entropy_coef)
      .def_readwrite("policy_lr", &rl::TrainConfig::policy_lr)
      .def_readwrite("value_lr", &rl::TrainConfig::value_lr)
      .def_readwrite("disc_lr", &rl::TrainConfig::disc_lr)
      .def_readwrite("rollout_steps", &rl::TrainConfig::rollout_steps)
      .def_readwrite("minibatch", &rl::TrainConfig::minibatch)
      .def_readwrite("ppo_epochs", &rl::TrainConfig::ppo_epochs)
      .def_readwrite("iterations", &rl::TrainConfig::iterations)
      .def_readwrite("seed", &rl::TrainConfig::seed)
      .def_readwrite("disc_epochs", &rl::TrainConfig::disc_epochs)
      .def_readwrite("disc_minibatch", &rl::TrainConfig::disc_minibatch)
      .def_readwrite("num_envs", &rl::TrainConfig::num_envs)
      .def_readwrite("eval_every", &rl::TrainConfig::eval_every)
      .def_readwrite("eval_episodes", &rl::TrainConfig::eval_episodes)
      .def_readwrite("checkpoint_every", &rl::TrainConfig::checkpoint_every)
      .def_readwrite("stop_score", &rl::TrainConfig::stop_score)
      .def_readwrite("record_wall_clock", &rl::TrainConfig::record_wall_clock)
      .def_readwrite("env", &rl::TrainConfig::env)
      .def_readwrite("mode", &rl::TrainConfig::mode)
      .def_readwrite("demos", &rl::TrainConfig::demos)
      .def_readwrite("expert_checkpoint", &rl::TrainConfig::expert_checkpoint)
      .def_readwrite("label", &rl::TrainConfig::label);

  m.def("compute_gae", [](const std::vector<double>& rewards, const std::vector<double>& values,
                          const std::vector<std::uint8_t>& dones, double bootstrap, double gamma, double lambda) {
    const auto est = rl::compute_gae(rewards, values, dones, bootstrap, gamma, lambda);
    return py::make_tuple(est.advantages, est.returns);
  }, py::arg("rewards"), py::arg("values"), py::arg("dones"), py::arg("bootstrap"), py::arg("gamma"),
        py::arg("gae_lambda"));
  m.def("normalized_score", &normalized_score, py::arg("r"), py::arg("r_random"), py::arg("r_expert"));

  py::class_<env::DemoSet>(m, "DemoSet")
      .def(py::init([](std::string id, const std::vector<Pixels>& trajs) {
        env::DemoSet d{std::move(id), {}};
        for (const auto& t : trajs) {
          if (t.ndim() != 3 || t.shape(1) != env::kFrameSide || t.shape(2) != env::kFrameSide) {
            throw ShapeError("trajectory must be [T, 64, 64]");
          }
          std::vector<env::Frame> frames(static_cast<std::size_t>(t.shape(0)));
          for (std::size_t i = 0; i < frames.size(); ++i) {
            for (std::size_t k = 0; k < env::kFramePixels; ++k) {
              frames[i].pixels()[k] = t.data()[i * env::kFramePixels + k] ? 1 : 0;
            }
          }
          d.trajectories.push_back(std::move(frames));
        }
        return d;
      }), py::arg("env_id"), py::arg("trajectories"))
      .def_readonly("env_id", &env::DemoSet::env_id)
      .def_property_readonly("trajectories", &trajectories_of)
      .def("total_frames", &env::DemoSet::total_frames)
      .def("encode", [](const env::DemoSet& d) { return py::bytes(env::encode_demos(d)); })
      .def_static("decode", [](const py::bytes& b) { return env::decode_demos(std::string(b)); })
      .def("save", [](const env::DemoSet& d, const std::filesystem::path& p) { env::save_demos(d, p); })
      .def_static("load", &env::load_demos);

  py::class_<MetricsRow>(m, "MetricsRow")
      .def_readonly("iteration", &MetricsRow::iteration)
      .def_readonly("disc_loss", &MetricsRow::disc_loss)
      .def_readonly("mean_D_imitator", &MetricsRow::mean_D_imitator)
      .def_readonly("mean_D_expert", &MetricsRow::mean_D_expert)
      .def_readonly("policy_loss", &MetricsRow::policy_loss)
      .def_readonly("value_loss", &MetricsRow::value_loss)
      .def_readonly("entropy", &MetricsRow::entropy)
      .def_readonly("clip_fraction", &MetricsRow::clip_fraction)
      .def_readonly("mean_true_return", &MetricsRow::mean_true_return)
      .def_readonly("mean_episode_len", &MetricsRow::mean_episode_len)
      .def_readonly("normalized_score", &MetricsRow::normalized_score);

  py::class_<RunRecord>(m, "RunRecord")
      .def_readonly("dir", &RunRecord::dir)
      .def_readonly("config", &RunRecord::config)
      .def_readonly("rows", &RunRecord::rows)
      .def_readonly("checkpoints", &RunRecord::checkpoints)
      .def_readonly("best_checkpoint", &RunRecord::best_checkpoint)
      .def_readonly("stopped_at", &RunRecord::stopped_at);

  py::class_<EvaluationReport>(m, "EvaluationReport")
      .def_readonly("mean_return", &EvaluationReport::mean_return)
      .def_readonly("std_error", &EvaluationReport::std_error)
      .def_readonly("normalized_score", &EvaluationReport::normalized_score)
      .def_readonly("random_return", &EvaluationReport::random_return)
      .def_readonly("expert_return", &EvaluationReport::expert_return);

  m.def("train_expert", [](const rl::TrainConfig& cfg, const std::filesystem::path& out) {
    py::gil_scoped_release release;
    return train_expert(cfg, out);
  }, py::arg("config"), py::arg("out_dir"));
  m.def("record_demos", [](const std::filesystem::path& ck, const std::string& id, std::size_t n, bool det,
                           std::uint64_t seed) {
    py::gil_scoped_release release;
    return record_demos(ck, env::parse_env_id(id), n, det, seed);
  }, py::arg("checkpoint"), py::arg("env"), py::arg("episodes"), py::arg("deterministic") = true,
        py::arg("seed") = 0);
  m.def("imitate", [](const env::DemoSet& demos, const rl::TrainConfig& cfg, const std::filesystem::path& out) {
    py::gil_scoped_release release;
    return imitate(demos, cfg, out);
  }, py::arg("demos"), py::arg("config"), py::arg("out_dir"));
  m.def("evaluate", [](const std::filesystem::path& ck, const std::string& id, std::size_t episodes,
                       const std::filesystem::path& expert, std::uint64_t seed) {
    py::gil_scoped_release release;
    return evaluate(ck, env::parse_env_id(id), episodes, expert, seed);
  }, py::arg("checkpoint"), py::arg("env"), py::arg("episodes"), py::arg("expert_checkpoint"), py::arg("seed") = 0);
  m.def("emit_report", &cli::emit_report, py::arg("run_dirs"), py::arg("out_dir"));

  m.def("main", [](const std::vector<std::string>& args) {
    std::vector<const char*> argv{"pifo"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs the command line; returns (exit code, stdout, stderr).");
}
