#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ctxlab/agent.hpp"
#include "ctxlab/benchmark.hpp"
#include "ctxlab/evaluation.hpp"

namespace ctxlab {

// One cell of the experiment matrix.
struct Condition {
  InjectionVector vector = InjectionVector::PLAN;
  std::optional<InjectionLevel> level;          // PLAN / MI
  InjectionSchedule schedule;                   // IPI: weak (once) or strong (every retrieval)
  DefenseSet defenses;

  std::string key(Architecture architecture) const;
};

struct CampaignConfig {
  std::string name;
  std::string benchmark_path;
  std::string sites_path;
  Architecture architecture = Architecture::planner_executor;
  EngineConfig planner;   // controller, for flat_controller
  EngineConfig navigator; // planner_executor only
  std::vector<DefenseSet> defense_sets;
  std::vector<InjectionVector> vectors;
  std::vector<InjectionLevel> levels;
  int ipi_weak_retrieval = 1;
  int runs_per_sample_override = 0; // 0 = per-sample value
  int max_steps = 25;
  int budget = 120;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output;
  bool similarity = true;
  int embedding_dimension = 65536;
  bool live = false; // requires --live and env credentials

  std::string config_hash; // fnv1a64 over the canonical config
};

CampaignConfig load_campaign_config(const std::string& path);
CampaignConfig campaign_config_from_json_text(const std::string& json_text,
                                              const std::string& origin);

std::vector<Condition> condition_matrix(const CampaignConfig& config);

// Builds the injection specs a condition applies to one sample.
std::vector<InjectionSpec> injections_for(const Condition& condition, const TaskSpec& sample,
                                          int budget);

struct CampaignOptions {
  bool dry_run = false;
  bool allow_invalid = false;
  bool live_enabled = false;     // --live
  int abort_after_episodes = 0;  // testing aid: stop scheduling after N appended records
  std::string output_override;
};

struct CampaignOutput {
  CampaignResult result;
  int episodes_scheduled = 0;
  int episodes_run = 0;
  int episodes_resumed = 0;
  int invalid_episodes = 0;
  bool aborted = false;
  std::string records_path;
  std::string summary_path;
};

// Executes the full matrix (resuming from an existing record log), writes the
// record log and summary, prints the headline table to `out`. Returns the
// process exit status: nonzero on config errors, invalid episodes (unless
// allowed), or abort.
int run_campaign(const CampaignConfig& config, const CampaignOptions& options, std::ostream& out,
                 CampaignOutput* output = nullptr);

// Single-episode runner shared by the campaign and the acceptance suite.
struct EpisodeResult {
  Trajectory trajectory;
  AttackOutcome outcome;
};

EpisodeResult run_benchmark_episode(const TaskSpec& sample, const SiteGraph& site,
                                    const Condition& condition, Architecture architecture,
                                    const DecisionEngine& planner, const DecisionEngine* navigator,
                                    int run_index, int max_steps, int budget);

// `validate` verb: all loader + site cross-reference checks; returns the
// violation report (empty = sound).
std::vector<std::string> validate_benchmark_dir(const std::string& benchmark_path,
                                                const std::string& sites_path);

} // namespace ctxlab
