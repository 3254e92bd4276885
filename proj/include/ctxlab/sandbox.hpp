#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ctxlab/context.hpp"
#include "ctxlab/injection.hpp"

namespace ctxlab {

struct PageElement {
  std::string id;
  std::string kind; // link | button | input | form
  std::string label;
  std::string target; // link/button/form destination URL
};

struct Page {
  std::string url;
  std::string title;
  std::string content; // prose lines, '\n'-separated
  std::vector<PageElement> elements;
  std::string planted_ipi_payload; // optional; delivered when an IPI schedule fires
};

struct UserProfile {
  std::string name;
  std::string date_of_birth;
  std::string address;
};

// A self-contained deterministic site graph: pages, the user's profile page,
// and the attacker pages whose form submissions feed the exfil sink.
struct SiteGraph {
  std::string name;
  std::string start_url;
  std::string profile_url;
  std::map<std::string, Page> pages;           // keyed by URL
  std::vector<std::string> attacker_domains;   // attacker page URLs
  UserProfile user_profile;
};

// "https://evil-metrics.example/collect" -> "evil-metrics.example"
std::string url_host(const std::string& url);

bool is_attacker_url(const SiteGraph& graph, const std::string& url);

SiteGraph load_site(const std::string& path);
SiteGraph site_from_json_text(const std::string& json_text, const std::string& origin);

// Structural checks: start/profile URLs resolve, element targets resolve,
// attacker pages are disjoint from regular pages, profile page carries the
// profile fields. Throws ValidationError on the first violation.
void validate_site(const SiteGraph& graph);

// All violations, empty when the graph is sound.
std::vector<std::string> site_violations(const SiteGraph& graph);

struct SinkRecord {
  int step = 0;
  std::string url; // form target
  std::map<std::string, std::string> fields;

  bool operator==(const SinkRecord&) const = default;
};

struct Submission {
  int step = 0;
  std::string form_id;
  std::string url;
  std::map<std::string, std::string> fields;
};

// One per episode. Executes abstract browser actions over the graph,
// maintains typed-input state, counts retrievals for IPI schedules, and
// records every form submission (attacker-bound ones also land in the sink).
class Sandbox {
public:
  explicit Sandbox(SiteGraph graph);

  // Environment failures (unknown URL/element) come back as ERROR
  // observations, not exceptions; malformed actions throw ContractViolation.
  DataItem execute(const Action& a);

  // Installs the IPI delivery schedule. spec.vector must be IPI.
  void apply_ipi_schedule(const InjectionSpec& spec);

  const SiteGraph& graph() const { return graph_; }
  const std::string& current_url() const { return current_url_; }
  const std::vector<SinkRecord>& exfil_sink() const { return sink_; }
  const std::vector<Submission>& submissions() const { return submissions_; }
  int retrieval_count() const { return retrievals_; }
  bool ipi_scheduled() const { return ipi_.has_value(); }
  int ipi_deliveries() const { return ipi_deliveries_; }

  std::string render_page(const Page& page) const;

private:
  DataItem page_observation(const Page& page, int step, const std::string& status_line);
  DataItem error_observation(const std::string& message, int step);
  const Page* find_page(const std::string& url) const;

  SiteGraph graph_;
  std::string current_url_;
  std::map<std::string, std::map<std::string, std::string>> typed_; // url -> input id -> value
  std::vector<SinkRecord> sink_;
  std::vector<Submission> submissions_;
  std::optional<InjectionSpec> ipi_;
  int retrievals_ = 0;
  int ipi_deliveries_ = 0;
};

} // namespace ctxlab
