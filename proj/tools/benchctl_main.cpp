// Benchmark driver: sweeps path counts or batch sizes against a running
// gateway, separating cold from hot runs, and writes CSV/JSON reports.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mcesvc/bench.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mcesvc benchmark harness"};
  app.require_subcommand(1);

  // --- sweep ---------------------------------------------------------------
  CLI::App* sweep = app.add_subcommand("sweep", "run a measurement sweep");
  std::string axis = "paths";
  std::vector<std::uint64_t> values;
  mce::SweepSpec spec;
  std::string backends_csv = "local-cpu";
  std::string target = "http://127.0.0.1:8080";
  std::string out_dir = "bench-out";
  std::vector<std::string> formats = {"csv", "json"};
  sweep->add_option("--axis", axis, "sweep axis: paths|batch")
      ->check(CLI::IsMember({"paths", "batch"}))
      ->capture_default_str();
  sweep->add_option("--values", values, "axis values, strictly increasing")
      ->required()
      ->delimiter(',');
  sweep->add_option("--paths", spec.fixed_paths,
                    "paths per option when sweeping batch size")
      ->capture_default_str();
  sweep->add_option("--batch", spec.fixed_batch,
                    "options per request when sweeping paths")
      ->capture_default_str();
  sweep->add_option("--backends", backends_csv,
                    "comma-separated backend profile names")
      ->capture_default_str();
  sweep->add_option("--reps", spec.repetitions, "hot repetitions per cell")
      ->capture_default_str();
  sweep->add_option("--concurrency", spec.concurrency,
                    "client threads for hot runs")
      ->capture_default_str();
  sweep->add_option("--seed-base", spec.seed_base, "seed base for requests")
      ->capture_default_str();
  sweep->add_option("--target", target, "gateway base URL")
      ->capture_default_str();
  sweep->add_option("--out", out_dir, "output directory")
      ->capture_default_str();
  sweep->add_option("--format", formats, "outputs to write: csv,json")
      ->delimiter(',');

  // --- report --------------------------------------------------------------
  CLI::App* report_cmd =
      app.add_subcommand("report", "summarize previously recorded runs");
  std::string in_dir;
  report_cmd->add_option("--in", in_dir, "directory holding records.csv")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sweep) {
      spec.axis = mce::sweep_axis_from_string(axis);
      spec.values = values;
      spec.backends.clear();
      std::string name;
      for (const char c : backends_csv + ",") {
        if (c == ',') {
          if (!name.empty()) spec.backends.push_back(name);
          name.clear();
        } else {
          name += c;
        }
      }

      const std::vector<mce::RunRecord> records =
          mce::run_sweep(spec, target);
      const mce::Report report = mce::summarize(spec.axis, records);

      std::filesystem::create_directories(out_dir);
      bool want_csv = false, want_json = false;
      for (const std::string& f : formats) {
        if (f == "csv") want_csv = true;
        if (f == "json") want_json = true;
      }
      if (want_csv) {
        mce::write_records_csv(records, spec.axis, out_dir + "/records.csv");
        mce::write_summary_csv(report, out_dir + "/summary.csv");
      }
      if (want_json) {
        mce::write_report_json(report, records, out_dir + "/summary.json");
      }
      std::fputs(mce::render_report(report).c_str(), stdout);
      return 0;
    }

    mce::SweepAxis in_axis = mce::SweepAxis::kPaths;
    const std::vector<mce::RunRecord> records =
        mce::read_records_csv(in_dir + "/records.csv", &in_axis);
    std::fputs(mce::render_report(mce::summarize(in_axis, records)).c_str(),
               stdout);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "benchctl: %s\n", e.what());
    return 1;
  }
}
