#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ctxlab/campaign.hpp"
#include "ctxlab/errors.hpp"

namespace {

int cmd_run(const std::string& config_path, bool dry_run, bool allow_invalid, bool live,
            const std::string& output_override) {
  ctxlab::CampaignConfig config;
  try {
    config = ctxlab::load_campaign_config(config_path);
  } catch (const ctxlab::ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  ctxlab::CampaignOptions options;
  options.dry_run = dry_run;
  options.allow_invalid = allow_invalid;
  options.live_enabled = live;
  options.output_override = output_override;
  return ctxlab::run_campaign(config, options, std::cout);
}

int cmd_validate(const std::string& benchmark_path, const std::string& sites_path) {
  auto report = ctxlab::validate_benchmark_dir(benchmark_path, sites_path);
  if (report.empty()) {
    std::cout << "ok: no violations\n";
    return 0;
  }
  std::cout << report.size() << " violation(s):\n";
  for (const auto& v : report) std::cout << "  " << v << "\n";
  return 1;
}

int cmd_generate(const std::string& template_path, const std::string& out_dir) {
  try {
    ctxlab::Benchmark benchmark = ctxlab::generate_benchmark(template_path, nullptr);
    ctxlab::save_benchmark(benchmark, out_dir);
    std::cout << "wrote " << benchmark.samples.size() << " samples ("
              << benchmark.manifest.counts.size() << " " << benchmark.manifest.count_key
              << " groups) to " << out_dir << "\n";
    return 0;
  } catch (const ctxlab::ValidationError& e) {
    std::cerr << "generate error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_report(const std::string& records_path, const std::string& csv_path) {
  try {
    ctxlab::RecordLog log = ctxlab::read_record_log(records_path);
    if (log.outcomes.empty()) {
      std::cerr << "no records in " << records_path << "\n";
      return 1;
    }
    auto result =
        ctxlab::compute_asr(log.outcomes, {"category", "vector", "level", "defense"});
    if (log.config_hash) result.config_hash = *log.config_hash;
    std::cout << ctxlab::format_asr_table(result);
    if (!csv_path.empty()) {
      std::ofstream csv(csv_path);
      if (!csv) {
        std::cerr << "cannot write " << csv_path << "\n";
        return 1;
      }
      csv << "category,vector,level,defense,runs,full,partial,invalid,asr_full,asr_partial\n";
      for (const auto& [key, stats] : result.groups) {
        std::string fields = key;
        for (auto& c : fields) {
          if (c == '|') c = ',';
        }
        csv << fields << "," << stats.runs << "," << stats.full << "," << stats.partial << ","
            << stats.invalid << "," << stats.asr_full() << "," << stats.asr_partial() << "\n";
      }
      std::cout << "csv: " << csv_path << "\n";
    }
    return 0;
  } catch (const ctxlab::ValidationError& e) {
    std::cerr << "report error: " << e.what() << "\n";
    return 2;
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"ctxlab: context-manipulation attack testbed for web agents"};
  app.require_subcommand(1);

  std::string config_path;
  bool dry_run = false;
  bool allow_invalid = false;
  bool live = false;
  std::string output_override;
  auto* run = app.add_subcommand("run", "run an attack campaign from a config file");
  run->add_option("config", config_path, "campaign config (JSON)")->required();
  run->add_flag("--dry-run", dry_run, "print the condition matrix and episode count, then exit");
  run->add_flag("--allow-invalid", allow_invalid, "exit 0 even when episodes were invalid");
  run->add_flag("--live", live, "allow http engines (spends API budget; reads CTXLAB_API_BASE/"
                                "CTXLAB_API_KEY or OPENAI_BASE_URL/OPENAI_API_KEY)");
  run->add_option("--output", output_override, "override the config's output directory");

  std::string benchmark_path;
  std::string sites_path = "assets/sites";
  auto* validate = app.add_subcommand("validate", "validate a benchmark against site graphs");
  validate->add_option("benchmark", benchmark_path, "benchmark directory")->required();
  validate->add_option("--sites", sites_path, "site graph directory");

  std::string template_path;
  std::string out_dir;
  auto* generate = app.add_subcommand("generate", "generate a benchmark from a template");
  generate->add_option("template", template_path, "template file (JSON)")->required();
  generate->add_option("out", out_dir, "output benchmark directory")->required();

  std::string records_path;
  std::string csv_path;
  auto* report = app.add_subcommand("report", "print the ASR table from a record log");
  report->add_option("records", records_path, "records.jsonl path")->required();
  report->add_option("--csv", csv_path, "also export rows as CSV");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(config_path, dry_run, allow_invalid, live, output_override);
  if (validate->parsed()) return cmd_validate(benchmark_path, sites_path);
  if (generate->parsed()) return cmd_generate(template_path, out_dir);
  if (report->parsed()) return cmd_report(records_path, csv_path);
  return 1;
}
