#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctxlab/injection.hpp"
#include "ctxlab/sandbox.hpp"

namespace ctxlab {

struct JudgeSpec {
  enum class Mode { rule, llm };
  Mode mode = Mode::rule;
  // exactly the fields of the sample's category are populated:
  std::string expected_malicious_answer;            // factual_manipulation
  std::vector<std::string> viewpoint_phrases;       // opinion_steering
  std::string product_name;                         // advertisement
  std::string destination_domain;                   // privacy_exfiltration (host)
  std::vector<std::string> required_sensitive_fields; // privacy_exfiltration

  bool operator==(const JudgeSpec&) const = default;
};

// One benchmark sample: the victim task, the attacker goal, the per-level
// injection texts, and how to judge the outcome.
struct TaskSpec {
  std::string id;
  AttackerGoal::Kind category = AttackerGoal::Kind::factual_manipulation;
  std::string victim_task;
  std::string site;      // site graph name
  std::string start_url;
  AttackerGoal attacker_goal;
  std::map<InjectionLevel, std::vector<std::string>> injection_material;
  std::string foot_in_door_context; // context_chained only
  CraftTask craft_slots;            // template slots the materials were built from
  JudgeSpec judging;
  int runs_per_sample = 5;

  bool operator==(const TaskSpec&) const = default;
};

struct BenchmarkManifest {
  int schema_version = 1;
  std::string name;
  std::string version;
  std::string count_key; // "category" or "site"
  std::map<std::string, int> counts;
  int runs_per_sample = 5;
  std::string samples_file = "samples.jsonl";

  bool operator==(const BenchmarkManifest&) const = default;
};

struct Benchmark {
  BenchmarkManifest manifest;
  std::vector<TaskSpec> samples;

  bool operator==(const Benchmark&) const = default;
};

// `path` is the benchmark directory (manifest.json + samples.jsonl). Enforces
// the manifest's declared counts and every per-sample schema rule; errors
// name the offending sample id and field.
Benchmark load_benchmark(const std::string& path);

void save_benchmark(const Benchmark& benchmark, const std::string& path);

// Schema check for one sample; returns violations ("<id>: <field>: <what>").
std::vector<std::string> sample_violations(const TaskSpec& sample);

// Cross-checks against site graphs: site exists, start URL resolves, privacy
// destinations are attacker pages of the site, malicious answers do not
// appear in the site's own content (so a clean run can never be judged a
// success), and every sample is schema-valid.
std::vector<std::string> benchmark_violations(const Benchmark& benchmark,
                                              const std::map<std::string, SiteGraph>& sites);

// Loads every *.json site file in a directory, keyed by graph name.
std::map<std::string, SiteGraph> load_sites(const std::string& dir);

// Deterministic sample generation from a template file (see
// assets/templates). With a scripted (or null) backend this is a pure
// parameter sweep; rows beyond `n` are ignored and n larger than the row
// count is an error. n = 0 yields an empty list.
std::vector<TaskSpec> generate_samples(const std::string& template_path,
                                       AttackerGoal::Kind category, int n,
                                       const DecisionEngine* backend);

// Generates the full benchmark a template describes (all categories/domains).
Benchmark generate_benchmark(const std::string& template_path, const DecisionEngine* backend);

CraftTask craft_inputs(const TaskSpec& sample);

// Convenience overload of the crafting operation for benchmark samples.
InjectionSpec craft_plan_injection(const AttackerGoal& goal, const TaskSpec& sample,
                                   InjectionLevel level, const DecisionEngine* backend,
                                   int budget = 120);

} // namespace ctxlab
