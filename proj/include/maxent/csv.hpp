#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "maxent/error.hpp"

namespace maxent::csv {

// Minimal RFC-4180 record reader: quoted fields, doubled quotes, embedded
// line breaks, CRLF or LF terminators.
class Reader {
 public:
  explicit Reader(std::istream& in, char delimiter = ',') : in_(in), delim_(delimiter) {}

  std::optional<std::vector<std::string>> next() {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool any = false;
    int c = 0;
    while ((c = in_.get()) != std::char_traits<char>::eof()) {
      any = true;
      const char ch = static_cast<char>(c);
      if (quoted) {
        if (ch == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field.push_back('"');
          } else {
            quoted = false;
          }
        } else {
          field.push_back(ch);
        }
        continue;
      }
      if (ch == '"') {
        quoted = true;
      } else if (ch == delim_) {
        fields.push_back(std::move(field));
        field.clear();
      } else if (ch == '\n') {
        fields.push_back(std::move(field));
        ++line_;
        return fields;
      } else if (ch == '\r') {
        if (in_.peek() == '\n') in_.get();
        fields.push_back(std::move(field));
        ++line_;
        return fields;
      } else {
        field.push_back(ch);
      }
    }
    if (quoted) throw IngestError("unterminated quoted field near line " + std::to_string(line_ + 1));
    if (!any) return std::nullopt;
    fields.push_back(std::move(field));
    ++line_;
    return fields;
  }

  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  char delim_;
  std::size_t line_ = 0;
};

}  // namespace maxent::csv
