#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "wmnav/harness.hpp"
#include "wmnav/scene_gen.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace wmnav;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::tuple xy(Vec2 p) { return py::make_tuple(p.x, p.y); }

}  // namespace

PYBIND11_MODULE(_wmnav, m) {
  m.doc() = "world-model object-goal navigation core";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);

  py::class_<Pose>(m, "Pose")
      .def(py::init<double, double, double, double>(), "x"_a, "y"_a, "z"_a = 0.88, "yaw"_a = 0.0)
      .def_readonly("x", &Pose::x)
      .def_readonly("y", &Pose::y)
      .def_readonly("z", &Pose::z)
      .def_readonly("yaw", &Pose::yaw)
      .def("__repr__", [](const Pose& p) {
        return "Pose(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ", yaw=" + std::to_string(p.yaw) + ")";
      });

  py::class_<Scene, std::shared_ptr<Scene>>(m, "Scene")
      .def_property_readonly("categories", &Scene::categories)
      .def_property_readonly("bounds", [](const Scene& s) { return py::make_tuple(xy(s.bounds().min), xy(s.bounds().max)); })
      .def_property_readonly("room_labels", [](const Scene& s) {
        std::vector<std::string> out;
        for (const auto& r : s.rooms()) out.push_back(r.label);
        return out;
      })
      .def("instances", [](const Scene& s, const std::string& category) {
        std::vector<py::tuple> out;
        for (const auto* o : s.instances_of(category)) out.push_back(xy(o->position));
        return out;
      });

  m.def("load_scene", [](const std::filesystem::path& p) { return std::make_shared<Scene>(load_scene(p)); }, "path"_a);

  py::class_<Episode>(m, "Episode")
      .def_readonly("id", &Episode::id)
      .def_readonly("goal_category", &Episode::goal_category)
      .def_readonly("start", &Episode::start)
      .def_property_readonly("scene", [](const Episode& e) { return std::make_shared<Scene>(*e.scene); });

  m.def("load_episode", &load_episode, "path"_a);
  m.def("optimal_path_length", [](const Episode& e) { return optimal_path_length(e); }, "episode"_a,
        "Geodesic length from the start to the goal region, None when unreachable.");
  m.def(
      "geodesic_distance",
      [](const Scene& s, std::pair<double, double> a, std::pair<double, double> b, double resolution) {
        return geodesic_distance(s, {a.first, a.second}, {b.first, b.second}, AgentBody{}, resolution);
      },
      "scene"_a, "a"_a, "b"_a, "resolution"_a = 0.1);

  py::class_<EpisodeResult>(m, "EpisodeResult")
      .def(py::init([](bool success, double path_length, double optimal_length, std::string goal_category) {
             EpisodeResult r;
             r.success = success;
             r.path_length = path_length;
             r.optimal_length = optimal_length;
             r.goal_category = std::move(goal_category);
             return r;
           }),
           "success"_a, "path_length"_a, "optimal_length"_a, "goal_category"_a = "")
      .def_readwrite("id", &EpisodeResult::id)
      .def_readwrite("goal_category", &EpisodeResult::goal_category)
      .def_readwrite("success", &EpisodeResult::success)
      .def_readwrite("path_length", &EpisodeResult::path_length)
      .def_readwrite("optimal_length", &EpisodeResult::optimal_length)
      .def_readwrite("steps", &EpisodeResult::steps)
      .def_property_readonly("failure_reason",
                             [](const EpisodeResult& r) -> std::optional<std::string> {
                               if (!r.failure_reason) return std::nullopt;
                               return std::string(to_string(*r.failure_reason));
                             })
      .def("to_dict", [](const EpisodeResult& r) { return to_python(result_to_json(r)); });

  m.def("compute_spl", [](const std::vector<EpisodeResult>& rs) { return compute_spl(rs); }, "results"_a);
  m.def("compute_sr", [](const std::vector<EpisodeResult>& rs) { return compute_sr(rs); }, "results"_a);
  m.def("load_results", &load_results, "path"_a);
  m.def("curiosity_to_gray", &curiosity_to_gray, "score"_a);

  m.def(
      "write_suite",
      [](const std::filesystem::path& dir, int count, std::uint64_t seed) {
        std::vector<std::string> ids;
        for (const auto& e : write_suite(dir, count, seed)) ids.push_back(e.id);
        return ids;
      },
      "dir"_a, "count"_a = 20, "seed"_a = 7);

  m.def(
      "run_benchmark",
      [](const std::filesystem::path& suite, const std::filesystem::path& out, const std::string& backend,
         std::optional<int> max_steps, int jobs, std::optional<std::filesystem::path> replay_file,
         std::optional<std::filesystem::path> record) {
        BenchmarkOptions opt;
        const auto kind = backend_kind_from_string(backend);
        if (!kind) throw py::value_error("backend must be oracle, http or replay");
        opt.backend = *kind;
        opt.out_dir = out;
        opt.max_steps = max_steps;
        opt.jobs = jobs;
        opt.replay_file = std::move(replay_file);
        opt.record = std::move(record);
        BenchmarkRun run;
        {
          py::gil_scoped_release release;
          run = run_benchmark(suite, opt);
        }
        return to_python(summary_to_json(run.summary));
      },
      "suite"_a, "out_dir"_a, "backend"_a = "oracle", "max_steps"_a = py::none(), "jobs"_a = 0,
      "replay_file"_a = py::none(), "record"_a = py::none(),
      "Runs a suite and returns the summary as a dict; artifacts land in out_dir.");
}
