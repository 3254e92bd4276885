#include "ctxlab/campaign.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ctxlab/errors.hpp"
#include "ctxlab/http_client.hpp"
#include "ctxlab/text.hpp"

namespace ctxlab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string Condition::key(Architecture architecture) const {
  std::string level_or_schedule;
  if (level.has_value()) {
    level_or_schedule = to_string(*level);
  } else if (vector == InjectionVector::IPI) {
    level_or_schedule =
        schedule.when == InjectionSchedule::When::every_retrieval ? "strong" : "weak";
  } else {
    level_or_schedule = "raw";
  }
  return std::string(to_string(architecture)) + "|" + to_string(vector) + "|" +
         level_or_schedule + "|" + to_string(defenses);
}

namespace {

EngineConfig engine_config_from_json(const json& j, const std::string& origin) {
  EngineConfig config;
  std::string kind = j.value("kind", std::string("scripted"));
  if (kind == "scripted") {
    config.kind = EngineConfig::Kind::scripted;
    config.persona = persona_from_string(j.value("persona", std::string("gullible")));
    config.jaccard_threshold = j.value("jaccard_threshold", 0.2);
  } else if (kind == "http") {
    config.kind = EngineConfig::Kind::http;
    if (!j.contains("model")) throw ValidationError(origin + ": http engine requires model");
    config.model = j.at("model").get<std::string>();
    config.temperature = j.value("temperature", 0.0);
  } else {
    throw ValidationError(origin + ": unknown engine kind " + kind);
  }
  return config;
}

json engine_config_to_json(const EngineConfig& config) {
  json j;
  if (config.kind == EngineConfig::Kind::scripted) {
    j["kind"] = "scripted";
    j["persona"] = to_string(config.persona);
    j["jaccard_threshold"] = config.jaccard_threshold;
  } else {
    j["kind"] = "http";
    j["model"] = config.model;
    j["temperature"] = config.temperature;
  }
  return j;
}

std::string canonical_config_json(const CampaignConfig& config) {
  // nlohmann::json (non-ordered) sorts object keys: canonical by construction
  nlohmann::json j;
  j["name"] = config.name;
  j["benchmark"] = config.benchmark_path;
  j["sites"] = config.sites_path;
  j["architecture"] = to_string(config.architecture);
  j["planner"] = nlohmann::json::parse(engine_config_to_json(config.planner).dump());
  j["navigator"] = nlohmann::json::parse(engine_config_to_json(config.navigator).dump());
  std::vector<std::string> defense_labels;
  for (const auto& set : config.defense_sets) defense_labels.push_back(to_string(set));
  j["defenses"] = defense_labels;
  std::vector<std::string> vector_labels;
  for (auto v : config.vectors) vector_labels.push_back(to_string(v));
  j["vectors"] = vector_labels;
  std::vector<std::string> level_labels;
  for (auto l : config.levels) level_labels.push_back(to_string(l));
  j["levels"] = level_labels;
  j["ipi_weak_retrieval"] = config.ipi_weak_retrieval;
  j["runs_per_sample_override"] = config.runs_per_sample_override;
  j["max_steps"] = config.max_steps;
  j["budget"] = config.budget;
  j["seed"] = config.seed;
  j["similarity"] = config.similarity;
  j["embedding_dimension"] = config.embedding_dimension;
  j["live"] = config.live;
  return j.dump();
}

std::string timestamp_now() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

} // namespace

CampaignConfig campaign_config_from_json_text(const std::string& json_text,
                                              const std::string& origin) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) throw ValidationError(origin + ": config is not valid JSON");
  CampaignConfig config;
  try {
    config.name = doc.at("name").get<std::string>();
    config.benchmark_path = doc.at("benchmark").get<std::string>();
    config.sites_path = doc.at("sites").get<std::string>();
    config.architecture =
        architecture_from_string(doc.value("architecture", std::string("planner_executor")));
    if (doc.contains("engines")) {
      const json& engines = doc.at("engines");
      if (engines.contains("planner")) {
        config.planner = engine_config_from_json(engines.at("planner"), origin + ": planner");
      } else if (engines.contains("controller")) {
        config.planner =
            engine_config_from_json(engines.at("controller"), origin + ": controller");
      }
      if (engines.contains("navigator")) {
        config.navigator =
            engine_config_from_json(engines.at("navigator"), origin + ": navigator");
      }
    }
    if (doc.contains("defenses")) {
      for (const auto& set : doc.at("defenses")) {
        DefenseSet defenses;
        for (const auto& d : set) defenses.insert(defense_from_string(d.get<std::string>()));
        config.defense_sets.push_back(defenses);
      }
    } else {
      config.defense_sets.push_back({});
    }
    if (doc.contains("vectors")) {
      for (const auto& v : doc.at("vectors")) {
        config.vectors.push_back(injection_vector_from_string(v.get<std::string>()));
      }
    } else {
      config.vectors.push_back(InjectionVector::PLAN);
    }
    if (doc.contains("levels")) {
      for (const auto& l : doc.at("levels")) {
        config.levels.push_back(injection_level_from_string(l.get<std::string>()));
      }
    } else {
      config.levels = {InjectionLevel::non_contextual, InjectionLevel::task_aligned,
                       InjectionLevel::context_chained};
    }
    config.ipi_weak_retrieval = doc.value("ipi_weak_retrieval", 1);
    config.runs_per_sample_override = doc.value("runs_per_sample", 0);
    config.max_steps = doc.value("max_steps", 25);
    config.budget = doc.value("budget", 120);
    config.seed = doc.value("seed", static_cast<std::uint64_t>(0));
    config.workers = doc.value("workers", 1);
    config.output = doc.value("output", std::string("out/") + config.name);
    config.similarity = doc.value("similarity", true);
    config.embedding_dimension = doc.value("embedding_dimension", 65536);
    config.live = doc.value("live", false);
  } catch (const json::exception& e) {
    throw ValidationError(origin + ": " + e.what());
  }

  if (config.workers < 1) throw ValidationError(origin + ": workers must be >= 1");
  if (config.max_steps < 1) throw ValidationError(origin + ": max_steps must be >= 1");
  for (auto vector : config.vectors) {
    if (vector == InjectionVector::PLAN &&
        config.architecture == Architecture::flat_controller) {
      throw ValidationError(origin +
                            ": PLAN vector requires planner_executor, config says "
                            "flat_controller");
    }
  }
  if (config.architecture == Architecture::planner_executor &&
      config.planner.kind == EngineConfig::Kind::http &&
      config.navigator.kind == EngineConfig::Kind::scripted && !config.live) {
    // mixed configs are fine; nothing to check here beyond live gating below
  }
  bool any_http = config.planner.kind == EngineConfig::Kind::http ||
                  config.navigator.kind == EngineConfig::Kind::http;
  if (any_http) config.live = true;

  config.config_hash = text::hex64(text::fnv1a64(canonical_config_json(config)));
  return config;
}

CampaignConfig load_campaign_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return campaign_config_from_json_text(buf.str(), path);
}

std::vector<Condition> condition_matrix(const CampaignConfig& config) {
  std::vector<Condition> conditions;
  for (const auto& defenses : config.defense_sets) {
    for (auto vector : config.vectors) {
      switch (vector) {
        case InjectionVector::PLAN:
        case InjectionVector::MI:
          for (auto level : config.levels) {
            Condition c;
            c.vector = vector;
            c.level = level;
            c.schedule = InjectionSchedule{InjectionSchedule::When::once_at_step, 1};
            c.defenses = defenses;
            conditions.push_back(c);
          }
          break;
        case InjectionVector::IPI: {
          Condition weak;
          weak.vector = vector;
          weak.schedule = InjectionSchedule{InjectionSchedule::When::once_at_step,
                                            config.ipi_weak_retrieval};
          weak.defenses = defenses;
          conditions.push_back(weak);
          Condition strong;
          strong.vector = vector;
          strong.schedule = InjectionSchedule{InjectionSchedule::When::every_retrieval, 1};
          strong.defenses = defenses;
          conditions.push_back(strong);
          break;
        }
        case InjectionVector::DPI: {
          Condition c;
          c.vector = vector;
          c.schedule = InjectionSchedule{InjectionSchedule::When::once_at_step, 1};
          c.defenses = defenses;
          conditions.push_back(c);
          break;
        }
      }
    }
  }
  return conditions;
}

std::vector<InjectionSpec> injections_for(const Condition& condition, const TaskSpec& sample,
                                          int budget) {
  InjectionSpec spec;
  spec.vector = condition.vector;
  spec.budget = budget;
  spec.schedule = condition.schedule;
  auto material_of = [&](InjectionLevel level) -> const std::vector<std::string>& {
    auto it = sample.injection_material.find(level);
    if (it == sample.injection_material.end() || it->second.empty()) {
      throw ValidationError(sample.id + ": no injection material for level " +
                            to_string(level));
    }
    return it->second;
  };
  auto joined = [](const std::vector<std::string>& steps) {
    std::string out;
    for (const auto& s : steps) {
      if (!out.empty()) out += " ";
      out += s;
    }
    return out;
  };
  switch (condition.vector) {
    case InjectionVector::PLAN:
      spec.level = condition.level;
      spec.payload_steps = material_of(condition.level.value());
      break;
    case InjectionVector::MI:
      spec.level = condition.level;
      spec.payload = joined(material_of(condition.level.value()));
      break;
    case InjectionVector::IPI:
    case InjectionVector::DPI:
      // raw payload: the sample's self-contained non-contextual directive
      spec.payload = joined(material_of(InjectionLevel::non_contextual));
      break;
  }
  return {spec};
}

EpisodeResult run_benchmark_episode(const TaskSpec& sample, const SiteGraph& site,
                                    const Condition& condition, Architecture architecture,
                                    const DecisionEngine& planner, const DecisionEngine* navigator,
                                    int run_index, int max_steps, int budget) {
  Sandbox env(site);
  AgentConfig agent;
  agent.architecture = architecture;
  agent.controller = &planner;
  agent.navigator = navigator;
  agent.max_steps = max_steps;

  EpisodeSpec episode;
  episode.sample_id = sample.id;
  episode.run_index = run_index;
  episode.user_prompt = sample.victim_task;
  episode.static_knowledge = default_static_knowledge(site);

  auto injections = injections_for(condition, sample, budget);
  EpisodeResult result;
  result.trajectory = run_episode(agent, episode, env, injections, condition.defenses);
  result.outcome = judge(result.trajectory, sample);
  result.outcome.defense = to_string(condition.defenses);
  result.outcome.vector = condition.vector;
  result.outcome.level = condition.level;
  return result;
}

std::vector<std::string> validate_benchmark_dir(const std::string& benchmark_path,
                                                const std::string& sites_path) {
  std::vector<std::string> report;
  std::map<std::string, SiteGraph> sites;
  try {
    sites = load_sites(sites_path);
  } catch (const ValidationError& e) {
    report.push_back(e.what());
    return report;
  }
  for (const auto& [name, site] : sites) {
    for (auto& v : site_violations(site)) report.push_back(v);
  }
  try {
    Benchmark benchmark = load_benchmark(benchmark_path);
    for (auto& v : benchmark_violations(benchmark, sites)) report.push_back(v);
  } catch (const ValidationError& e) {
    report.push_back(e.what());
  }
  return report;
}

namespace {

struct EpisodeTask {
  size_t condition_index;
  size_t sample_index;
  int run_index;
  std::string condition_key;
};

} // namespace

int run_campaign(const CampaignConfig& config, const CampaignOptions& options, std::ostream& out,
                 CampaignOutput* output_ptr) {
  CampaignOutput output;

  if (config.live && !options.live_enabled) {
    out << "config uses http engines; pass --live to spend API budget\n";
    return 2;
  }

  Benchmark benchmark;
  std::map<std::string, SiteGraph> sites;
  try {
    benchmark = load_benchmark(config.benchmark_path);
    sites = load_sites(config.sites_path);
    auto violations = benchmark_violations(benchmark, sites);
    if (!violations.empty()) {
      out << "benchmark validation failed (" << violations.size() << " violations):\n";
      for (const auto& v : violations) out << "  " << v << "\n";
      return 2;
    }
  } catch (const ValidationError& e) {
    out << "config error: " << e.what() << "\n";
    return 2;
  }

  auto conditions = condition_matrix(config);
  std::vector<EpisodeTask> tasks;
  for (size_t ci = 0; ci < conditions.size(); ++ci) {
    std::string key = conditions[ci].key(config.architecture);
    for (size_t si = 0; si < benchmark.samples.size(); ++si) {
      int runs = config.runs_per_sample_override > 0 ? config.runs_per_sample_override
                                                     : benchmark.samples[si].runs_per_sample;
      for (int run = 0; run < runs; ++run) {
        tasks.push_back(EpisodeTask{ci, si, run, key});
      }
    }
  }
  output.episodes_scheduled = static_cast<int>(tasks.size());

  if (options.dry_run) {
    out << "campaign " << config.name << " (config " << config.config_hash << ")\n";
    out << "conditions (" << conditions.size() << "):\n";
    for (const auto& condition : conditions) {
      out << "  " << condition.key(config.architecture) << "\n";
    }
    out << "samples: " << benchmark.samples.size() << "\n";
    out << "episodes: " << tasks.size() << "\n";
    if (output_ptr) *output_ptr = output;
    return 0;
  }

  std::string out_dir = options.output_override.empty() ? config.output : options.output_override;
  fs::create_directories(out_dir);
  output.records_path = (fs::path(out_dir) / "records.jsonl").string();
  output.summary_path = (fs::path(out_dir) / "summary.json").string();

  RecordLog existing;
  try {
    existing = read_record_log(output.records_path);
  } catch (const ValidationError& e) {
    out << "record log error: " << e.what() << "\n";
    return 2;
  }
  if (existing.config_hash && *existing.config_hash != config.config_hash) {
    out << "record log at " << output.records_path << " was written by config "
        << *existing.config_hash << ", current config is " << config.config_hash << "\n";
    return 2;
  }
  output.episodes_resumed = static_cast<int>(existing.completed.size());

  // engines are shared across episodes; scripted ones are stateless
  std::shared_ptr<OpenAiClient> client;
  if (config.live) {
    client = std::make_shared<OpenAiClient>(OpenAiClient::options_from_env());
  }
  std::unique_ptr<DecisionEngine> planner = make_engine(config.planner, client);
  std::unique_ptr<DecisionEngine> navigator;
  if (config.architecture == Architecture::planner_executor) {
    navigator = make_engine(config.navigator, client);
  }

  std::ofstream log_out(output.records_path, std::ios::app);
  if (!log_out) {
    out << "cannot open record log for append: " << output.records_path << "\n";
    return 2;
  }

  std::vector<EpisodeTask> pending;
  for (const auto& task : tasks) {
    const TaskSpec& sample = benchmark.samples[task.sample_index];
    if (existing.completed.count(
            completion_key(task.condition_key, sample.id, task.run_index))) {
      continue;
    }
    pending.push_back(task);
  }

  std::mutex write_mutex;
  std::atomic<size_t> next_task{0};
  std::atomic<int> appended{0};
  std::atomic<int> invalid_count{0};
  std::atomic<bool> stop{false};
  std::string first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (!stop.load()) {
      size_t index = next_task.fetch_add(1);
      if (index >= pending.size()) return;
      const EpisodeTask& task = pending[index];
      const TaskSpec& sample = benchmark.samples[task.sample_index];
      const Condition& condition = conditions[task.condition_index];
      try {
        EpisodeResult episode = run_benchmark_episode(
            sample, sites.at(sample.site), condition, config.architecture, *planner,
            navigator.get(), task.run_index, config.max_steps, config.budget);
        if (!episode.outcome.valid) invalid_count.fetch_add(1);
        std::string line = record_line(episode.outcome, episode.trajectory, task.condition_key,
                                       config.seed, config.config_hash, timestamp_now());
        {
          std::lock_guard<std::mutex> lock(write_mutex);
          log_out << line << "\n";
          log_out.flush();
          int done = appended.fetch_add(1) + 1;
          if (options.abort_after_episodes > 0 && done >= options.abort_after_episodes) {
            stop.store(true);
          }
        }
      } catch (const std::exception& e) {
        {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (first_error.empty()) first_error = e.what();
        }
        stop.store(true);
        return;
      }
    }
  };

  size_t worker_count = std::min<size_t>(static_cast<size_t>(config.workers),
                                         std::max<size_t>(pending.size(), 1));
  std::vector<std::thread> threads;
  for (size_t i = 0; i < worker_count; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  log_out.close();

  if (!first_error.empty()) {
    out << "campaign aborted: " << first_error << "\n";
    return 2;
  }

  output.episodes_run = appended.load();
  output.invalid_episodes = invalid_count.load();
  bool aborted = options.abort_after_episodes > 0 &&
                 output.episodes_run + output.episodes_resumed < output.episodes_scheduled;
  output.aborted = aborted;

  // summary over the full log (resumed + new), deterministically ordered
  RecordLog full_log = read_record_log(output.records_path);
  std::sort(full_log.outcomes.begin(), full_log.outcomes.end(),
            [](const AttackOutcome& a, const AttackOutcome& b) {
              auto ka = std::tie(a.category, a.defense, a.sample_id, a.run_index);
              auto kb = std::tie(b.category, b.defense, b.sample_id, b.run_index);
              if (ka != kb) return ka < kb;
              return to_string(a.vector) < std::string(to_string(b.vector));
            });
  CampaignResult result =
      compute_asr(full_log.outcomes, {"category", "vector", "level", "defense"});
  result.seed = config.seed;
  result.config_hash = config.config_hash;
  result.engines["planner"] = planner->identity();
  if (navigator) result.engines["navigator"] = navigator->identity();

  if (config.similarity && !config.live) {
    DeterministicTfProvider provider(config.embedding_dimension);
    for (const auto& sample : benchmark.samples) {
      for (auto level : {InjectionLevel::non_contextual, InjectionLevel::task_aligned,
                         InjectionLevel::context_chained}) {
        auto it = sample.injection_material.find(level);
        if (it == sample.injection_material.end()) continue;
        InjectionSpec spec;
        spec.vector = InjectionVector::PLAN;
        spec.level = level;
        spec.payload_steps = it->second;
        spec.budget = 1 << 20; // analysis only; budgets are enforced at apply time
        auto [sim_task, sim_goal] = similarity_analysis(sample, spec, provider);
        result.similarity.push_back(
            SimilarityRecord{sample.id, to_string(level), sim_task, sim_goal});
      }
    }
  }

  {
    std::ofstream summary_out(output.summary_path);
    summary_out << summary_json(result);
  }
  out << format_asr_table(result);
  out << "episodes: " << output.episodes_scheduled << " scheduled, " << output.episodes_run
      << " run, " << output.episodes_resumed << " resumed";
  if (output.invalid_episodes > 0) out << ", " << output.invalid_episodes << " invalid";
  out << "\n";
  out << "records: " << output.records_path << "\nsummary: " << output.summary_path << "\n";

  int status = 0;
  if (aborted) status = 3;
  else if (output.invalid_episodes > 0 && !options.allow_invalid) status = 1;

  output.result = std::move(result);
  if (output_ptr) *output_ptr = std::move(output);
  return status;
}

} // namespace ctxlab
