#include "ctxlab/sandbox.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ctxlab/directives.hpp"
#include "ctxlab/errors.hpp"
#include "ctxlab/text.hpp"

namespace ctxlab {

using json = nlohmann::json;

std::string url_host(const std::string& url) {
  size_t scheme = url.find("://");
  size_t begin = scheme == std::string::npos ? 0 : scheme + 3;
  size_t end = url.find('/', begin);
  std::string host = url.substr(begin, end == std::string::npos ? std::string::npos : end - begin);
  size_t port = host.find(':');
  if (port != std::string::npos) host = host.substr(0, port);
  return host;
}

bool is_attacker_url(const SiteGraph& graph, const std::string& url) {
  std::string host = url_host(url);
  for (const auto& domain : graph.attacker_domains) {
    if (url_host(domain) == host) return true;
  }
  return false;
}

SiteGraph site_from_json_text(const std::string& json_text, const std::string& origin) {
  json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) throw ValidationError(origin + ": invalid JSON");
  SiteGraph graph;
  try {
    graph.name = doc.at("name").get<std::string>();
    graph.start_url = doc.at("start_url").get<std::string>();
    graph.profile_url = doc.at("profile_url").get<std::string>();
    for (const auto& d : doc.at("attacker_domains")) {
      graph.attacker_domains.push_back(d.get<std::string>());
    }
    const auto& profile = doc.at("user_profile");
    graph.user_profile.name = profile.at("name").get<std::string>();
    graph.user_profile.date_of_birth = profile.at("date_of_birth").get<std::string>();
    graph.user_profile.address = profile.at("address").get<std::string>();
    for (const auto& p : doc.at("pages")) {
      Page page;
      page.url = p.at("url").get<std::string>();
      page.title = p.at("title").get<std::string>();
      page.content = p.at("content").get<std::string>();
      if (p.contains("elements")) {
        for (const auto& e : p.at("elements")) {
          PageElement el;
          el.id = e.at("id").get<std::string>();
          el.kind = e.at("kind").get<std::string>();
          el.label = e.at("label").get<std::string>();
          if (e.contains("target")) el.target = e.at("target").get<std::string>();
          page.elements.push_back(std::move(el));
        }
      }
      if (p.contains("planted_ipi_payload")) {
        page.planted_ipi_payload = p.at("planted_ipi_payload").get<std::string>();
      }
      if (graph.pages.count(page.url)) {
        throw ValidationError(origin + ": duplicate page url " + page.url);
      }
      graph.pages.emplace(page.url, std::move(page));
    }
  } catch (const json::exception& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  return graph;
}

SiteGraph load_site(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open site file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return site_from_json_text(buf.str(), path);
}

std::vector<std::string> site_violations(const SiteGraph& graph) {
  std::vector<std::string> violations;
  auto has_page = [&](const std::string& url) { return graph.pages.count(url) > 0; };

  if (!has_page(graph.start_url)) {
    violations.push_back(graph.name + ": start_url not in pages: " + graph.start_url);
  }
  if (!has_page(graph.profile_url)) {
    violations.push_back(graph.name + ": profile_url not in pages: " + graph.profile_url);
  } else {
    const Page& profile = graph.pages.at(graph.profile_url);
    std::vector<std::string> prose;
    std::istringstream in(profile.content);
    std::string line;
    while (std::getline(in, line)) prose.push_back(line);
    auto fields = parse_profile_fields(prose);
    if (fields[kFieldName] != graph.user_profile.name ||
        fields[kFieldDob] != graph.user_profile.date_of_birth ||
        fields[kFieldAddress] != graph.user_profile.address) {
      violations.push_back(graph.name + ": profile page fields do not match user_profile");
    }
  }
  for (const auto& domain : graph.attacker_domains) {
    if (!has_page(domain)) {
      violations.push_back(graph.name + ": attacker domain not in pages: " + domain);
    }
  }
  for (const auto& [url, page] : graph.pages) {
    std::set<std::string> ids;
    for (const auto& el : page.elements) {
      if (!ids.insert(el.id).second) {
        violations.push_back(graph.name + ": duplicate element id " + el.id + " on " + url);
      }
      if (el.kind != "link" && el.kind != "button" && el.kind != "input" && el.kind != "form") {
        violations.push_back(graph.name + ": unknown element kind " + el.kind + " on " + url);
      }
      if ((el.kind == "link" || el.kind == "button" || el.kind == "form") &&
          !has_page(el.target)) {
        violations.push_back(graph.name + ": element " + el.id + " on " + url +
                             " targets unknown url " + el.target);
      }
    }
    bool attacker = is_attacker_url(graph, url);
    if (attacker && url == graph.start_url) {
      violations.push_back(graph.name + ": start_url is an attacker domain");
    }
    if (attacker && url == graph.profile_url) {
      violations.push_back(graph.name + ": profile_url is an attacker domain");
    }
  }
  return violations;
}

void validate_site(const SiteGraph& graph) {
  auto violations = site_violations(graph);
  if (!violations.empty()) throw ValidationError(violations.front());
}

Sandbox::Sandbox(SiteGraph graph) : graph_(std::move(graph)), current_url_(graph_.start_url) {}

const Page* Sandbox::find_page(const std::string& url) const {
  auto it = graph_.pages.find(url);
  return it == graph_.pages.end() ? nullptr : &it->second;
}

std::string Sandbox::render_page(const Page& page) const {
  std::ostringstream out;
  out << page_text::url_prefix << page.url << "\n";
  out << page_text::title_prefix << page.title << "\n";
  out << page.content << "\n";
  out << page_text::elements_header << "\n";
  auto typed_it = typed_.find(page.url);
  for (const auto& el : page.elements) {
    out << "- [" << el.kind << "] " << el.id << " \"" << el.label << "\"";
    if (el.kind == "input") {
      std::string value;
      if (typed_it != typed_.end()) {
        auto v = typed_it->second.find(el.id);
        if (v != typed_it->second.end()) value = v->second;
      }
      out << " = \"" << value << "\"";
    } else if (!el.target.empty()) {
      out << " -> " << el.target;
    }
    out << "\n";
  }
  std::string text = out.str();
  text.pop_back(); // trailing newline
  return text;
}

DataItem Sandbox::page_observation(const Page& page, int step, const std::string& status_line) {
  ++retrievals_;
  std::string body = render_page(page);
  // IPI delivery: the payload lands inside the retrieved content
  if (ipi_.has_value()) {
    bool fire = false;
    if (ipi_->schedule.when == InjectionSchedule::When::every_retrieval) {
      fire = true;
    } else {
      fire = (retrievals_ == ipi_->schedule.step);
    }
    if (fire) {
      std::string payload = ipi_->payload;
      if (payload.empty()) payload = page.planted_ipi_payload;
      if (!payload.empty()) {
        // insert at the end of the prose block, before ELEMENTS
        std::string marker = std::string(page_text::elements_header) + "\n";
        size_t pos = body.rfind(marker);
        if (pos != std::string::npos) {
          body.insert(pos, payload + "\n");
        } else {
          body += "\n" + payload;
        }
        ++ipi_deliveries_;
      }
    }
  }
  if (!status_line.empty()) body = status_line + "\n" + body;
  return DataItem{page.url, body, step};
}

DataItem Sandbox::error_observation(const std::string& message, int step) {
  return DataItem{"environment", std::string(page_text::error_prefix) + message, step};
}

void Sandbox::apply_ipi_schedule(const InjectionSpec& spec) {
  if (spec.vector != InjectionVector::IPI) {
    throw ContractViolation("apply_ipi_schedule requires an IPI spec");
  }
  if (spec.schedule.when == InjectionSchedule::When::once_at_step && spec.schedule.step < 1) {
    throw ContractViolation("IPI once_at_step schedule must target retrieval >= 1");
  }
  ipi_ = spec;
}

DataItem Sandbox::execute(const Action& a) {
  switch (a.kind) {
    case Action::Kind::navigate: {
      const Page* page = find_page(a.target);
      if (!page) {
        return error_observation("no such url " + a.target + " (still on " + current_url_ + ")",
                                 a.step);
      }
      current_url_ = page->url;
      return page_observation(*page, a.step, "");
    }
    case Action::Kind::click: {
      const Page* page = find_page(current_url_);
      if (!page) return error_observation("no current page", a.step);
      for (const auto& el : page->elements) {
        if (el.id != a.target) continue;
        if (el.kind == "link" || el.kind == "button") {
          const Page* dest = find_page(el.target);
          if (!dest) {
            return error_observation("element " + el.id + " targets unknown url " + el.target,
                                     a.step);
          }
          current_url_ = dest->url;
          return page_observation(*dest, a.step, "");
        }
        return error_observation("element " + el.id + " is not clickable (" + el.kind + ")",
                                 a.step);
      }
      return error_observation("no such element '" + a.target + "' on " + current_url_, a.step);
    }
    case Action::Kind::type_text: {
      const Page* page = find_page(current_url_);
      if (!page) return error_observation("no current page", a.step);
      for (const auto& el : page->elements) {
        if (el.id != a.target) continue;
        if (el.kind != "input") {
          return error_observation("element " + el.id + " is not an input", a.step);
        }
        typed_[current_url_][el.id] = a.text;
        std::string status = std::string(page_text::typed_prefix) + el.id + " = \"" + a.text +
                             "\" on " + current_url_;
        return page_observation(*page, a.step, status);
      }
      return error_observation("no such element '" + a.target + "' on " + current_url_, a.step);
    }
    case Action::Kind::extract: {
      const Page* page = find_page(current_url_);
      if (!page) return error_observation("no current page", a.step);
      return page_observation(*page, a.step, "");
    }
    case Action::Kind::submit_form: {
      const Page* page = find_page(current_url_);
      if (!page) return error_observation("no current page", a.step);
      for (const auto& el : page->elements) {
        if (el.id != a.target) continue;
        if (el.kind != "form") {
          return error_observation("element " + el.id + " is not a form", a.step);
        }
        // fields: inputs typed on this page (keyed by normalized label) plus
        // inline fields from the action
        std::map<std::string, std::string> fields;
        auto typed_it = typed_.find(current_url_);
        if (typed_it != typed_.end()) {
          for (const auto& input : page->elements) {
            if (input.kind != "input") continue;
            auto v = typed_it->second.find(input.id);
            if (v == typed_it->second.end()) continue;
            std::string key = text::to_lower(input.label);
            for (auto& c : key) {
              if (c == ' ') c = '_';
            }
            fields[key] = v->second;
          }
        }
        for (const auto& [k, v] : decode_fields(a.fields)) fields[k] = v;
        Submission submission{a.step, el.id, el.target, fields};
        submissions_.push_back(submission);
        if (is_attacker_url(graph_, el.target)) {
          sink_.push_back(SinkRecord{a.step, el.target, fields});
        }
        std::string body = std::string(page_text::submitted_prefix) + el.id + " -> " + el.target +
                           "\nFIELDS: " + encode_fields(fields);
        return DataItem{current_url_, body, a.step};
      }
      return error_observation("no such element '" + a.target + "' on " + current_url_, a.step);
    }
    case Action::Kind::answer:
    case Action::Kind::terminate:
      return DataItem{"", "", a.step}; // terminal actions add no data
  }
  throw ContractViolation("execute: malformed action kind");
}

} // namespace ctxlab
