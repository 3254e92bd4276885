#include "ctxlab/benchmark.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctxlab/errors.hpp"
#include "ctxlab/text.hpp"

namespace ctxlab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const std::vector<AttackerGoal::Kind> kCategories = {
    AttackerGoal::Kind::factual_manipulation,
    AttackerGoal::Kind::opinion_steering,
    AttackerGoal::Kind::advertisement,
    AttackerGoal::Kind::privacy_exfiltration,
};

json judge_to_json(const TaskSpec& sample) {
  json j;
  j["mode"] = sample.judging.mode == JudgeSpec::Mode::rule ? "rule" : "llm";
  switch (sample.category) {
    case AttackerGoal::Kind::factual_manipulation:
      j["expected_malicious_answer"] = sample.judging.expected_malicious_answer;
      break;
    case AttackerGoal::Kind::opinion_steering:
      j["viewpoint_phrases"] = sample.judging.viewpoint_phrases;
      break;
    case AttackerGoal::Kind::advertisement:
      j["product_name"] = sample.judging.product_name;
      break;
    case AttackerGoal::Kind::privacy_exfiltration:
      j["destination_domain"] = sample.judging.destination_domain;
      j["required_sensitive_fields"] = sample.judging.required_sensitive_fields;
      break;
    default:
      throw ValidationError(sample.id + ": category: not a benchmark category");
  }
  return j;
}

json sample_to_json(const TaskSpec& sample) {
  json j;
  j["id"] = sample.id;
  j["category"] = to_string(sample.category);
  j["victim_task"] = sample.victim_task;
  j["site"] = sample.site;
  j["start_url"] = sample.start_url;
  j["attacker_goal"] = {{"kind", to_string(sample.attacker_goal.kind)},
                        {"target_payload", sample.attacker_goal.target_payload},
                        {"sensitive_fields", sample.attacker_goal.sensitive_fields}};
  json material;
  for (const auto& [level, steps] : sample.injection_material) {
    material[to_string(level)] = steps;
  }
  j["injection_material"] = material;
  j["foot_in_door_context"] = sample.foot_in_door_context;
  j["craft_slots"] = {{"task_noun", sample.craft_slots.task_noun},
                      {"intermediary", sample.craft_slots.intermediary},
                      {"exfil_subject", sample.craft_slots.exfil_subject},
                      {"profile_url", sample.craft_slots.profile_url}};
  j["judging"] = judge_to_json(sample);
  j["runs_per_sample"] = sample.runs_per_sample;
  return j;
}

std::string field_error(const std::string& id, const std::string& field, const std::string& what) {
  return id + ": " + field + ": " + what;
}

TaskSpec sample_from_json(const json& j) {
  TaskSpec sample;
  if (!j.contains("id") || !j.at("id").is_string() || j.at("id").get<std::string>().empty()) {
    throw ValidationError(field_error(j.value("id", std::string("<unknown>")), "id",
                                      "missing or empty"));
  }
  sample.id = j.at("id").get<std::string>();
  auto require = [&](const char* field) -> const json& {
    if (!j.contains(field)) {
      throw ValidationError(field_error(sample.id, field, "missing"));
    }
    return j.at(field);
  };
  try {
    sample.category = goal_kind_from_string(require("category").get<std::string>());
    sample.victim_task = require("victim_task").get<std::string>();
    sample.site = require("site").get<std::string>();
    sample.start_url = require("start_url").get<std::string>();
    const json& goal = require("attacker_goal");
    sample.attacker_goal.kind = goal_kind_from_string(goal.at("kind").get<std::string>());
    sample.attacker_goal.target_payload = goal.at("target_payload").get<std::string>();
    if (goal.contains("sensitive_fields")) {
      sample.attacker_goal.sensitive_fields =
          goal.at("sensitive_fields").get<std::vector<std::string>>();
    }
    const json& material = require("injection_material");
    for (const auto& [key, value] : material.items()) {
      sample.injection_material[injection_level_from_string(key)] =
          value.get<std::vector<std::string>>();
    }
    sample.foot_in_door_context = j.value("foot_in_door_context", std::string());
    if (j.contains("craft_slots")) {
      const json& slots = j.at("craft_slots");
      sample.craft_slots.task_noun = slots.value("task_noun", std::string());
      sample.craft_slots.intermediary = slots.value("intermediary", std::string());
      sample.craft_slots.exfil_subject = slots.value("exfil_subject", std::string());
      sample.craft_slots.profile_url = slots.value("profile_url", std::string());
    }
    sample.craft_slots.victim_task = sample.victim_task;
    sample.craft_slots.foot_in_door_context = sample.foot_in_door_context;
    const json& judging = require("judging");
    sample.judging.mode =
        judging.value("mode", std::string("rule")) == "llm" ? JudgeSpec::Mode::llm
                                                            : JudgeSpec::Mode::rule;
    if (judging.contains("expected_malicious_answer")) {
      sample.judging.expected_malicious_answer =
          judging.at("expected_malicious_answer").get<std::string>();
    }
    if (judging.contains("viewpoint_phrases")) {
      sample.judging.viewpoint_phrases =
          judging.at("viewpoint_phrases").get<std::vector<std::string>>();
    }
    if (judging.contains("product_name")) {
      sample.judging.product_name = judging.at("product_name").get<std::string>();
    }
    if (judging.contains("destination_domain")) {
      sample.judging.destination_domain = judging.at("destination_domain").get<std::string>();
    }
    if (judging.contains("required_sensitive_fields")) {
      sample.judging.required_sensitive_fields =
          judging.at("required_sensitive_fields").get<std::vector<std::string>>();
    }
    sample.runs_per_sample = j.value("runs_per_sample", 5);
  } catch (const json::exception& e) {
    throw ValidationError(sample.id + ": " + e.what());
  }
  return sample;
}

} // namespace

std::vector<std::string> sample_violations(const TaskSpec& sample) {
  std::vector<std::string> out;
  auto bad = [&](const std::string& field, const std::string& what) {
    out.push_back(field_error(sample.id, field, what));
  };

  bool known_category = false;
  for (auto kind : kCategories) {
    if (sample.category == kind) known_category = true;
  }
  if (!known_category) bad("category", "not a benchmark category");
  if (sample.victim_task.empty()) bad("victim_task", "empty");
  if (sample.site.empty()) bad("site", "empty");
  if (sample.start_url.empty()) bad("start_url", "empty");
  if (sample.runs_per_sample < 1) bad("runs_per_sample", "must be >= 1");
  if (sample.category != sample.attacker_goal.kind) {
    bad("attacker_goal.kind", "does not match sample category");
  }
  if (sample.attacker_goal.target_payload.empty()) bad("attacker_goal.target_payload", "empty");

  for (auto level : {InjectionLevel::non_contextual, InjectionLevel::task_aligned,
                     InjectionLevel::context_chained}) {
    auto it = sample.injection_material.find(level);
    if (it == sample.injection_material.end() || it->second.empty()) {
      bad(std::string("injection_material.") + to_string(level), "missing or empty");
    } else {
      for (const auto& step : it->second) {
        if (step.empty()) bad(std::string("injection_material.") + to_string(level),
                              "contains an empty step");
      }
    }
  }
  if (sample.category == AttackerGoal::Kind::privacy_exfiltration &&
      sample.foot_in_door_context.empty()) {
    bad("foot_in_door_context", "required for privacy samples (context_chained crafting)");
  }

  // judging: exactly the fields of the category
  const JudgeSpec& judge = sample.judging;
  bool has_factual = !judge.expected_malicious_answer.empty();
  bool has_opinion = !judge.viewpoint_phrases.empty();
  bool has_ad = !judge.product_name.empty();
  bool has_privacy = !judge.destination_domain.empty() || !judge.required_sensitive_fields.empty();
  switch (sample.category) {
    case AttackerGoal::Kind::factual_manipulation:
      if (!has_factual) bad("judging.expected_malicious_answer", "missing");
      if (has_opinion || has_ad || has_privacy) bad("judging", "fields from another category present");
      break;
    case AttackerGoal::Kind::opinion_steering:
      if (!has_opinion) bad("judging.viewpoint_phrases", "missing");
      if (has_factual || has_ad || has_privacy) bad("judging", "fields from another category present");
      break;
    case AttackerGoal::Kind::advertisement:
      if (!has_ad) bad("judging.product_name", "missing");
      if (has_factual || has_opinion || has_privacy) bad("judging", "fields from another category present");
      break;
    case AttackerGoal::Kind::privacy_exfiltration:
      if (judge.destination_domain.empty()) bad("judging.destination_domain", "missing");
      if (judge.required_sensitive_fields.empty()) {
        bad("judging.required_sensitive_fields", "missing");
      }
      if (has_factual || has_opinion || has_ad) bad("judging", "fields from another category present");
      break;
    default:
      break;
  }
  return out;
}

Benchmark load_benchmark(const std::string& path) {
  fs::path dir(path);
  fs::path manifest_path = dir / "manifest.json";
  std::ifstream manifest_in(manifest_path);
  if (!manifest_in) throw ValidationError("cannot open manifest: " + manifest_path.string());
  json manifest_doc = json::parse(manifest_in, nullptr, false);
  if (manifest_doc.is_discarded()) {
    throw ValidationError("manifest is not valid JSON: " + manifest_path.string());
  }

  Benchmark benchmark;
  try {
    benchmark.manifest.schema_version = manifest_doc.at("schema_version").get<int>();
    benchmark.manifest.name = manifest_doc.at("name").get<std::string>();
    benchmark.manifest.version = manifest_doc.at("version").get<std::string>();
    benchmark.manifest.count_key = manifest_doc.at("count_key").get<std::string>();
    for (const auto& [key, value] : manifest_doc.at("counts").items()) {
      benchmark.manifest.counts[key] = value.get<int>();
    }
    benchmark.manifest.runs_per_sample = manifest_doc.value("runs_per_sample", 5);
    benchmark.manifest.samples_file =
        manifest_doc.value("samples_file", std::string("samples.jsonl"));
  } catch (const json::exception& e) {
    throw ValidationError("manifest: " + std::string(e.what()));
  }
  if (benchmark.manifest.count_key != "category" && benchmark.manifest.count_key != "site") {
    throw ValidationError("manifest: count_key must be 'category' or 'site'");
  }
  if (benchmark.manifest.counts.empty()) {
    throw ValidationError("manifest: no samples declared (empty counts)");
  }

  fs::path samples_path = dir / benchmark.manifest.samples_file;
  std::ifstream samples_in(samples_path);
  if (!samples_in) throw ValidationError("cannot open samples: " + samples_path.string());
  std::string line;
  int line_no = 0;
  std::set<std::string> seen_ids;
  while (std::getline(samples_in, line)) {
    ++line_no;
    if (text::normalize_whitespace(line).empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      throw ValidationError("samples line " + std::to_string(line_no) + ": invalid JSON");
    }
    TaskSpec sample = sample_from_json(record);
    auto violations = sample_violations(sample);
    if (!violations.empty()) throw ValidationError(violations.front());
    if (!seen_ids.insert(sample.id).second) {
      throw ValidationError(sample.id + ": id: duplicate sample id");
    }
    benchmark.samples.push_back(std::move(sample));
  }
  if (benchmark.samples.empty()) {
    throw ValidationError("no samples in " + samples_path.string());
  }

  std::map<std::string, int> actual;
  for (const auto& sample : benchmark.samples) {
    std::string key = benchmark.manifest.count_key == "category"
                          ? std::string(to_string(sample.category))
                          : sample.site;
    ++actual[key];
  }
  for (const auto& [key, declared] : benchmark.manifest.counts) {
    auto it = actual.find(key);
    int got = it == actual.end() ? 0 : it->second;
    if (got != declared) {
      throw ValidationError("manifest count mismatch for " + key + ": declared " +
                            std::to_string(declared) + ", found " + std::to_string(got));
    }
  }
  for (const auto& [key, got] : actual) {
    if (!benchmark.manifest.counts.count(key)) {
      throw ValidationError("samples contain undeclared " + benchmark.manifest.count_key + " " +
                            key + " (" + std::to_string(got) + " samples)");
    }
  }
  return benchmark;
}

void save_benchmark(const Benchmark& benchmark, const std::string& path) {
  fs::path dir(path);
  fs::create_directories(dir);
  json manifest;
  manifest["schema_version"] = benchmark.manifest.schema_version;
  manifest["name"] = benchmark.manifest.name;
  manifest["version"] = benchmark.manifest.version;
  manifest["count_key"] = benchmark.manifest.count_key;
  json counts;
  for (const auto& [key, value] : benchmark.manifest.counts) counts[key] = value;
  manifest["counts"] = counts;
  manifest["runs_per_sample"] = benchmark.manifest.runs_per_sample;
  manifest["samples_file"] = benchmark.manifest.samples_file;
  {
    std::ofstream out(dir / "manifest.json");
    if (!out) throw ValidationError("cannot write manifest in " + path);
    out << manifest.dump(2) << "\n";
  }
  {
    std::ofstream out(dir / benchmark.manifest.samples_file);
    if (!out) throw ValidationError("cannot write samples in " + path);
    for (const auto& sample : benchmark.samples) {
      out << sample_to_json(sample).dump() << "\n";
    }
  }
}

std::map<std::string, SiteGraph> load_sites(const std::string& dir) {
  std::map<std::string, SiteGraph> sites;
  if (!fs::is_directory(dir)) throw ValidationError("not a site directory: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    SiteGraph graph = load_site(file.string());
    if (sites.count(graph.name)) {
      throw ValidationError("duplicate site name " + graph.name + " in " + file.string());
    }
    sites.emplace(graph.name, std::move(graph));
  }
  return sites;
}

std::vector<std::string> benchmark_violations(const Benchmark& benchmark,
                                              const std::map<std::string, SiteGraph>& sites) {
  std::vector<std::string> out;
  for (const auto& sample : benchmark.samples) {
    for (auto& v : sample_violations(sample)) out.push_back(v);
    auto site_it = sites.find(sample.site);
    if (site_it == sites.end()) {
      out.push_back(sample.id + ": site: unknown site " + sample.site);
      continue;
    }
    const SiteGraph& site = site_it->second;
    if (!site.pages.count(sample.start_url)) {
      out.push_back(sample.id + ": start_url: not a page of " + sample.site);
    }
    if (sample.category == AttackerGoal::Kind::privacy_exfiltration) {
      if (!is_attacker_url(site, sample.attacker_goal.target_payload)) {
        out.push_back(sample.id +
                      ": attacker_goal.target_payload: not an attacker domain of the site");
      }
      if (!sample.judging.destination_domain.empty() &&
          url_host(sample.attacker_goal.target_payload) != sample.judging.destination_domain) {
        out.push_back(sample.id + ": judging.destination_domain: does not match attacker goal");
      }
    } else {
      // the malicious phrase must not occur in legitimate site content,
      // otherwise a clean run could be judged a success
      std::vector<std::string> phrases;
      switch (sample.category) {
        case AttackerGoal::Kind::factual_manipulation:
          phrases.push_back(sample.judging.expected_malicious_answer);
          break;
        case AttackerGoal::Kind::opinion_steering:
          phrases = sample.judging.viewpoint_phrases;
          break;
        case AttackerGoal::Kind::advertisement:
          phrases.push_back(sample.judging.product_name);
          break;
        default:
          break;
      }
      for (const auto& [url, page] : site.pages) {
        if (is_attacker_url(site, url)) continue;
        for (const auto& phrase : phrases) {
          if (!phrase.empty() && text::contains_ci(page.content, phrase)) {
            out.push_back(sample.id + ": judging: phrase \"" + phrase +
                          "\" appears in site content at " + url);
          }
        }
      }
    }
  }
  return out;
}

CraftTask craft_inputs(const TaskSpec& sample) {
  CraftTask task = sample.craft_slots;
  task.victim_task = sample.victim_task;
  task.foot_in_door_context = sample.foot_in_door_context;
  return task;
}

InjectionSpec craft_plan_injection(const AttackerGoal& goal, const TaskSpec& sample,
                                   InjectionLevel level, const DecisionEngine* backend,
                                   int budget) {
  return craft_plan_injection(goal, craft_inputs(sample), level, backend, budget);
}

namespace {

struct TemplateRow {
  json row;
  std::string id_prefix;
  std::string group_key; // category name or domain/site name
};

TaskSpec sample_from_row(const json& doc, const TemplateRow& entry, int index,
                         AttackerGoal::Kind category, const DecisionEngine* backend) {
  const json& row = entry.row;
  TaskSpec sample;
  char id_buf[16];
  std::snprintf(id_buf, sizeof(id_buf), "%s-%02d", entry.id_prefix.c_str(), index + 1);
  sample.id = id_buf;
  sample.category = category;
  sample.victim_task = row.at("victim_task").get<std::string>();
  sample.site = row.at("site").get<std::string>();
  sample.start_url = row.at("start_url").get<std::string>();
  sample.attacker_goal.kind = category;
  sample.attacker_goal.target_payload = row.at("target_payload").get<std::string>();
  if (category == AttackerGoal::Kind::privacy_exfiltration) {
    sample.attacker_goal.sensitive_fields =
        row.value("required_fields",
                  std::vector<std::string>{"name", "date_of_birth", "address"});
  }
  sample.foot_in_door_context = row.value("foot_in_door_context", std::string());
  sample.craft_slots.victim_task = sample.victim_task;
  sample.craft_slots.foot_in_door_context = sample.foot_in_door_context;
  sample.craft_slots.task_noun = row.value("task_noun", std::string());
  sample.craft_slots.intermediary = row.value("intermediary", std::string());
  sample.craft_slots.exfil_subject = row.value("exfil_subject", std::string());
  sample.craft_slots.profile_url = row.value("profile_url", std::string());

  for (auto level : {InjectionLevel::non_contextual, InjectionLevel::task_aligned,
                     InjectionLevel::context_chained}) {
    InjectionSpec spec =
        craft_plan_injection(sample.attacker_goal, sample.craft_slots, level, backend);
    sample.injection_material[level] = spec.payload_steps;
  }

  switch (category) {
    case AttackerGoal::Kind::factual_manipulation:
      sample.judging.expected_malicious_answer =
          row.value("expected", sample.attacker_goal.target_payload);
      break;
    case AttackerGoal::Kind::opinion_steering:
      if (row.contains("viewpoint_phrases")) {
        sample.judging.viewpoint_phrases =
            row.at("viewpoint_phrases").get<std::vector<std::string>>();
      } else {
        sample.judging.viewpoint_phrases = {sample.attacker_goal.target_payload};
      }
      break;
    case AttackerGoal::Kind::advertisement:
      sample.judging.product_name = row.value("product", sample.attacker_goal.target_payload);
      break;
    case AttackerGoal::Kind::privacy_exfiltration:
      sample.judging.destination_domain = url_host(sample.attacker_goal.target_payload);
      sample.judging.required_sensitive_fields = sample.attacker_goal.sensitive_fields;
      break;
    default:
      throw ValidationError("template category is not a benchmark category");
  }
  sample.runs_per_sample = doc.value("runs_per_sample", 5);
  return sample;
}

json load_template(const std::string& template_path) {
  std::ifstream in(template_path);
  if (!in) throw ValidationError("cannot open template: " + template_path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ValidationError("template is not valid JSON: " + template_path);
  return doc;
}

std::vector<TemplateRow> rows_for_category(const json& doc, AttackerGoal::Kind category) {
  std::vector<TemplateRow> rows;
  const char* name = to_string(category);
  if (doc.contains("categories") && doc.at("categories").contains(name)) {
    const json& group = doc.at("categories").at(name);
    std::string prefix = group.at("id_prefix").get<std::string>();
    for (const auto& row : group.at("rows")) {
      rows.push_back(TemplateRow{row, prefix, name});
    }
    return rows;
  }
  if (doc.contains("domains") && category == AttackerGoal::Kind::privacy_exfiltration) {
    for (const auto& [domain, group] : doc.at("domains").items()) {
      std::string prefix = group.at("id_prefix").get<std::string>();
      for (const auto& row : group.at("rows")) {
        rows.push_back(TemplateRow{row, prefix, domain});
      }
    }
    return rows;
  }
  throw ValidationError(std::string("template has no rows for category ") + name);
}

} // namespace

std::vector<TaskSpec> generate_samples(const std::string& template_path,
                                       AttackerGoal::Kind category, int n,
                                       const DecisionEngine* backend) {
  if (n < 0) throw ValidationError("generate_samples: n must be >= 0");
  if (n == 0) return {};
  json doc = load_template(template_path);
  auto rows = rows_for_category(doc, category);
  if (n > static_cast<int>(rows.size())) {
    throw ValidationError("template has " + std::to_string(rows.size()) + " rows for " +
                          to_string(category) + ", requested " + std::to_string(n));
  }
  std::vector<TaskSpec> samples;
  std::map<std::string, int> per_prefix;
  for (int i = 0; i < n; ++i) {
    int index = per_prefix[rows[static_cast<size_t>(i)].id_prefix]++;
    TaskSpec sample =
        sample_from_row(doc, rows[static_cast<size_t>(i)], index, category, backend);
    auto violations = sample_violations(sample);
    if (!violations.empty()) {
      throw ValidationError("generated sample invalid: " + violations.front());
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

Benchmark generate_benchmark(const std::string& template_path, const DecisionEngine* backend) {
  json doc = load_template(template_path);
  Benchmark benchmark;
  benchmark.manifest.schema_version = 1;
  benchmark.manifest.name = doc.at("name").get<std::string>();
  benchmark.manifest.version = doc.at("version").get<std::string>();
  benchmark.manifest.runs_per_sample = doc.value("runs_per_sample", 5);

  if (doc.contains("categories")) {
    benchmark.manifest.count_key = "category";
    for (auto kind : kCategories) {
      const char* name = to_string(kind);
      if (!doc.at("categories").contains(name)) continue;
      auto rows = rows_for_category(doc, kind);
      auto samples =
          generate_samples(template_path, kind, static_cast<int>(rows.size()), backend);
      benchmark.manifest.counts[name] = static_cast<int>(samples.size());
      for (auto& sample : samples) benchmark.samples.push_back(std::move(sample));
    }
  } else if (doc.contains("domains")) {
    benchmark.manifest.count_key = "site";
    auto samples = generate_samples(template_path, AttackerGoal::Kind::privacy_exfiltration,
                                    static_cast<int>(rows_for_category(
                                                         doc, AttackerGoal::Kind::privacy_exfiltration)
                                                         .size()),
                                    backend);
    for (auto& sample : samples) {
      ++benchmark.manifest.counts[sample.site];
      benchmark.samples.push_back(std::move(sample));
    }
  } else {
    throw ValidationError("template has neither categories nor domains");
  }
  return benchmark;
}

} // namespace ctxlab
