#include "ctxlab/directives.hpp"

#include <algorithm>
#include <cctype>

#include "ctxlab/defense.hpp"
#include "ctxlab/text.hpp"

namespace ctxlab {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string strip_terminal_punct(std::string s) {
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?' ||
                        s.back() == ',' || s.back() == ';' || s.back() == ':' ||
                        s.back() == ')' || s.back() == ']' || s.back() == '"')) {
    s.pop_back();
  }
  return s;
}

// Leading list markers ("1. ", "- ", "* ") and quotes are not part of the
// sentence for matching purposes.
std::string strip_list_marker(std::string s) {
  size_t i = 0;
  while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])))) ++i;
  if (i > 0 && i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && s[i] == ' ') ++i;
    return s.substr(i);
  }
  if (!s.empty() && (s[0] == '-' || s[0] == '*')) {
    size_t j = 1;
    while (j < s.size() && s[j] == ' ') ++j;
    return s.substr(j);
  }
  return s;
}

std::optional<std::string> url_at(const std::string& sentence, size_t pos) {
  size_t end = pos;
  while (end < sentence.size() && !std::isspace(static_cast<unsigned char>(sentence[end]))) ++end;
  std::string url = strip_terminal_punct(sentence.substr(pos, end - pos));
  if (url.empty()) return std::nullopt;
  return url;
}

// Matches `prefix` at the start of `lower`; returns the remainder of the
// original-cased sentence.
std::optional<std::string> after_prefix(const std::string& sentence, const std::string& lower,
                                        const std::string& prefix) {
  if (text::starts_with(lower, prefix)) return sentence.substr(prefix.size());
  return std::nullopt;
}

} // namespace

std::optional<std::string> first_url(const std::string& sentence) {
  std::string lower = text::to_lower(sentence);
  size_t pos = lower.find("http://");
  size_t pos2 = lower.find("https://");
  if (pos == std::string::npos || (pos2 != std::string::npos && pos2 < pos)) pos = pos2;
  if (pos == std::string::npos) return std::nullopt;
  return url_at(sentence, pos);
}

std::optional<std::string> last_url(const std::string& sentence) {
  std::string lower = text::to_lower(sentence);
  size_t best = std::string::npos;
  for (const char* scheme : {"http://", "https://"}) {
    size_t from = 0;
    while (true) {
      size_t pos = lower.find(scheme, from);
      if (pos == std::string::npos) break;
      if (best == std::string::npos || pos > best) best = pos;
      from = pos + 1;
    }
  }
  if (best == std::string::npos) return std::nullopt;
  return url_at(sentence, best);
}

std::optional<Directive> parse_directive_sentence(const std::string& raw_sentence) {
  std::string sentence = strip_list_marker(trim(raw_sentence));
  if (sentence.empty()) return std::nullopt;
  std::string lower = text::to_lower(sentence);

  Directive d;
  d.raw = sentence;
  d.normalized = text::normalize_whitespace(lower);

  // answer-that family first: "report that" must win over plain "report".
  for (const char* prefix : {"answer that ", "state that ", "say that ", "claim that ",
                             "report that ", "declare that "}) {
    if (auto rest = after_prefix(sentence, lower, prefix)) {
      d.kind = Directive::Kind::answer;
      d.claim = strip_terminal_punct(trim(*rest));
      return d;
    }
  }
  if (auto rest = after_prefix(sentence, lower, "recommend ")) {
    d.kind = Directive::Kind::answer;
    d.claim = strip_terminal_punct(trim(*rest));
    return d;
  }

  // exfil: send|submit ... to <url>
  if (text::starts_with(lower, "send ") || text::starts_with(lower, "submit ")) {
    size_t to_pos = lower.rfind(" to http");
    if (to_pos != std::string::npos) {
      d.kind = Directive::Kind::exfil;
      d.url = *url_at(sentence, to_pos + 4);
      std::string subject = sentence.substr(sentence.find(' ') + 1, to_pos - sentence.find(' ') - 1);
      size_t from_pos = text::to_lower(subject).rfind(" from http");
      if (from_pos != std::string::npos) {
        if (auto src = url_at(subject, from_pos + 6)) d.source_url = *src;
        subject = subject.substr(0, from_pos);
      }
      d.claim = trim(subject);
      return d;
    }
    return std::nullopt; // send/submit without a destination URL is prose
  }

  // navigation family
  for (const char* prefix : {"open ", "go to ", "navigate to ", "visit "}) {
    if (text::starts_with(lower, prefix)) {
      if (auto url = first_url(sentence)) {
        d.kind = Directive::Kind::navigate;
        d.url = *url;
        return d;
      }
      return std::nullopt;
    }
  }
  if (text::starts_with(lower, "look up ")) {
    if (auto url = first_url(sentence)) {
      d.kind = Directive::Kind::navigate;
      d.url = *url;
      return d;
    }
    return std::nullopt;
  }

  if (auto rest = after_prefix(sentence, lower, "click ")) {
    d.kind = Directive::Kind::click;
    d.element = strip_terminal_punct(trim(*rest));
    // bare element id only; "click the Submit button" style prose is ignored
    if (d.element.find(' ') != std::string::npos) return std::nullopt;
    return d;
  }

  if (text::starts_with(lower, "type ")) {
    size_t q1 = sentence.find('"');
    size_t q2 = q1 == std::string::npos ? std::string::npos : sentence.find('"', q1 + 1);
    size_t into = lower.rfind(" into ");
    if (q1 != std::string::npos && q2 != std::string::npos && into != std::string::npos &&
        into > q2) {
      d.kind = Directive::Kind::type_into;
      d.text = sentence.substr(q1 + 1, q2 - q1 - 1);
      d.element = strip_terminal_punct(trim(sentence.substr(into + 6)));
      return d;
    }
    return std::nullopt;
  }

  if (auto rest = after_prefix(sentence, lower, "report ")) {
    d.kind = Directive::Kind::report;
    d.claim = strip_terminal_punct(trim(*rest));
    return d;
  }
  if (auto rest = after_prefix(sentence, lower, "find ")) {
    // "Find X and report Y" style task sentences: a find sentence with a URL
    // navigates; without one it is prose.
    (void)rest;
    if (auto url = first_url(sentence)) {
      d.kind = Directive::Kind::navigate;
      d.url = *url;
      return d;
    }
    return std::nullopt;
  }

  if (lower == "extract" || text::starts_with(lower, "extract ")) {
    d.kind = Directive::Kind::extract;
    return d;
  }

  return std::nullopt;
}

std::vector<Directive> parse_directives(const std::string& text_block) {
  std::vector<Directive> out;
  for (const auto& sentence : text::split_sentences(text_block)) {
    if (auto d = parse_directive_sentence(sentence)) out.push_back(*d);
  }
  return out;
}

std::optional<ParsedPage> parse_page_extract(const std::string& content) {
  std::string inner = sandwich_inner(content);
  ParsedPage page;
  bool have_url = false;
  bool in_elements = false;
  size_t start = 0;
  while (start <= inner.size()) {
    size_t nl = inner.find('\n', start);
    std::string line = inner.substr(start, nl == std::string::npos ? std::string::npos : nl - start);
    start = nl == std::string::npos ? inner.size() + 1 : nl + 1;

    if (!have_url) {
      if (text::starts_with(line, page_text::url_prefix)) {
        page.url = trim(line.substr(std::string(page_text::url_prefix).size()));
        have_url = true;
      }
      // status lines (TYPED:/SUBMITTED:/ERROR:) before the URL line are skipped
      continue;
    }
    if (text::starts_with(line, page_text::title_prefix)) {
      page.title = trim(line.substr(std::string(page_text::title_prefix).size()));
      continue;
    }
    if (line == page_text::elements_header) {
      in_elements = true;
      continue;
    }
    if (in_elements) {
      // - [kind] id "Label" -> target   |   - [input] id "Label" = "value"
      if (!text::starts_with(line, "- [")) continue;
      ParsedElement el;
      size_t kind_end = line.find(']');
      if (kind_end == std::string::npos) continue;
      el.kind = line.substr(3, kind_end - 3);
      size_t id_start = kind_end + 2;
      size_t id_end = line.find(' ', id_start);
      if (id_end == std::string::npos) continue;
      el.id = line.substr(id_start, id_end - id_start);
      size_t q1 = line.find('"', id_end);
      size_t q2 = q1 == std::string::npos ? std::string::npos : line.find('"', q1 + 1);
      if (q1 != std::string::npos && q2 != std::string::npos) {
        el.label = line.substr(q1 + 1, q2 - q1 - 1);
      }
      size_t arrow = line.find(" -> ", q2 == std::string::npos ? id_end : q2);
      if (arrow != std::string::npos) {
        el.target = trim(line.substr(arrow + 4));
      } else {
        size_t eq = line.find(" = \"", q2 == std::string::npos ? id_end : q2);
        if (eq != std::string::npos) {
          std::string rest = line.substr(eq + 4);
          if (!rest.empty() && rest.back() == '"') rest.pop_back();
          el.value = rest;
        }
      }
      page.elements.push_back(std::move(el));
    } else {
      if (!trim(line).empty()) page.prose.push_back(line);
    }
  }
  if (!have_url) return std::nullopt;
  return page;
}

std::map<std::string, std::string> parse_profile_fields(const std::vector<std::string>& prose) {
  std::map<std::string, std::string> fields;
  for (const auto& line : prose) {
    std::string lower = text::to_lower(line);
    if (text::starts_with(lower, "name:")) {
      fields[kFieldName] = trim(line.substr(5));
    } else if (text::starts_with(lower, "date of birth:")) {
      fields[kFieldDob] = trim(line.substr(14));
    } else if (text::starts_with(lower, "address:")) {
      fields[kFieldAddress] = trim(line.substr(8));
    }
  }
  return fields;
}

std::vector<std::string> requested_fields(const std::string& exfil_subject) {
  std::string lower = text::to_lower(exfil_subject);
  std::vector<std::string> fields;
  if (lower.find("name") != std::string::npos) fields.push_back(kFieldName);
  if (lower.find("birth") != std::string::npos || lower.find("dob") != std::string::npos) {
    fields.push_back(kFieldDob);
  }
  if (lower.find("address") != std::string::npos) fields.push_back(kFieldAddress);
  if (fields.empty()) return {kFieldName, kFieldDob, kFieldAddress};
  return fields;
}

std::string encode_fields(const std::map<std::string, std::string>& fields) {
  std::string out;
  for (const auto& [key, value] : fields) {
    if (!out.empty()) out += "; ";
    out += key + "=" + value;
  }
  return out;
}

std::map<std::string, std::string> decode_fields(const std::string& encoded) {
  std::map<std::string, std::string> fields;
  size_t start = 0;
  while (start < encoded.size()) {
    size_t end = encoded.find("; ", start);
    std::string pair =
        encoded.substr(start, end == std::string::npos ? std::string::npos : end - start);
    size_t eq = pair.find('=');
    if (eq != std::string::npos) {
      fields[trim(pair.substr(0, eq))] = trim(pair.substr(eq + 1));
    }
    start = end == std::string::npos ? encoded.size() : end + 2;
  }
  return fields;
}

} // namespace ctxlab
