#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ctxlab {

// The directive mini-grammar. Plan steps, injected payloads, and victim-task
// sentences are ordinary English sentences; a sentence is a directive when it
// opens with one of the recognized verb patterns. Scripted personas execute
// directives; everything else is prose. The grammar is documented in the
// README (Directive grammar).
struct Directive {
  enum class Kind {
    navigate,  // open / go to / navigate to / visit / look up ... at <url>
    exfil,     // send|submit <subject> to <url>, optional "from <url>" source
    answer,    // answer|state|say|claim|report that <claim>; recommend <claim>
    report,    // report <subject>  (answer assembled from retrieved data)
    click,     // click <element-id>
    type_into, // type "<text>" into <element-id>
    extract    // extract
  };
  Kind kind = Kind::extract;
  std::string url;        // navigate target / exfil destination
  std::string source_url; // exfil: optional "from" URL
  std::string claim;      // answer claim / report subject / exfil subject
  std::string element;    // click / type_into target
  std::string text;       // type_into text
  std::string raw;        // original sentence
  std::string normalized; // lowercase, whitespace-normalized raw (identity for dedup)
};

std::optional<Directive> parse_directive_sentence(const std::string& sentence);

// Splits into sentences and keeps the ones that parse as directives.
std::vector<Directive> parse_directives(const std::string& text);

// First http(s) URL in the sentence, with trailing punctuation trimmed.
std::optional<std::string> first_url(const std::string& sentence);
std::optional<std::string> last_url(const std::string& sentence);

// --- Page-extract text format -------------------------------------------
//
// The sandbox renders every page observation in this shape; personas parse it
// back. Confirmations reuse the shape with a leading status line.
//
//   URL: https://site.example/page
//   TITLE: Page title
//   <prose lines>
//   ELEMENTS:
//   - [link] element-id "Label" -> https://target
//   - [input] element-id "Label" = "current value"
//   - [form] element-id "Label" -> https://target

namespace page_text {
inline constexpr const char* url_prefix = "URL: ";
inline constexpr const char* title_prefix = "TITLE: ";
inline constexpr const char* elements_header = "ELEMENTS:";
inline constexpr const char* submitted_prefix = "SUBMITTED: ";
inline constexpr const char* typed_prefix = "TYPED: ";
inline constexpr const char* error_prefix = "ERROR: ";
} // namespace page_text

struct ParsedElement {
  std::string kind; // link | button | input | form
  std::string id;
  std::string label;
  std::string target; // link/button/form
  std::string value;  // input
};

struct ParsedPage {
  std::string url;
  std::string title;
  std::vector<std::string> prose; // content lines between TITLE and ELEMENTS
  std::vector<ParsedElement> elements;
};

// Parses a page extract (sandwich wrapper and confirmation status lines are
// skipped). Returns nullopt when the text has no URL line.
std::optional<ParsedPage> parse_page_extract(const std::string& content);

// The sensitive-field names used across the testbed.
inline constexpr const char* kFieldName = "name";
inline constexpr const char* kFieldDob = "date_of_birth";
inline constexpr const char* kFieldAddress = "address";

// Scans prose lines for "Name:", "Date of birth:" and "Address:" values.
std::map<std::string, std::string> parse_profile_fields(const std::vector<std::string>& prose);

// Fields named by an exfil subject ("the user's address" -> {address});
// subjects naming no specific field request all three.
std::vector<std::string> requested_fields(const std::string& exfil_subject);

// Serializes/parses the inline submit_form field list: "k=v; k2=v2".
std::string encode_fields(const std::map<std::string, std::string>& fields);
std::map<std::string, std::string> decode_fields(const std::string& encoded);

} // namespace ctxlab
