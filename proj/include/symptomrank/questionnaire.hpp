#pragma once

// Questionnaire file grammar (UTF-8, line oriented):
//
//   # comment            ignored, as are blank lines
//   item <id>: <name>    starts a symptom, id in 1..21
//   <n>: <statement>     option of intensity n, n = 0..3 in order; leading
//                        whitespace allowed
//
// A valid file has 21 items, each id exactly once, each with 4 options.

#include <algorithm>
#include <array>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "symptomrank/error.hpp"
#include "symptomrank/text.hpp"
#include "symptomrank/types.hpp"

namespace symptomrank {

struct Symptom {
  SymptomId id = 0;
  std::string name;
  std::array<std::string, kOptionsPerSymptom> options;  // intensity 0..3

  friend bool operator==(const Symptom&, const Symptom&) = default;
};

class Questionnaire {
 public:
  Questionnaire() = default;

  /// Validates and sorts by id.
  explicit Questionnaire(std::vector<Symptom> symptoms) : symptoms_(std::move(symptoms)) {
    if (symptoms_.size() != static_cast<std::size_t>(kNumSymptoms))
      throw ValidationError("expected 21 symptoms, found " + std::to_string(symptoms_.size()));
    std::array<bool, kNumSymptoms + 1> seen{};
    for (const auto& s : symptoms_) {
      if (!is_valid_symptom(s.id))
        throw ValidationError("symptom id out of range: " + std::to_string(s.id));
      if (seen[s.id]) throw ValidationError("duplicate symptom id " + std::to_string(s.id));
      seen[s.id] = true;
    }
    std::sort(symptoms_.begin(), symptoms_.end(),
              [](const Symptom& a, const Symptom& b) { return a.id < b.id; });
  }

  const Symptom& at(SymptomId id) const {
    if (!is_valid_symptom(id) || symptoms_.empty())
      throw ValidationError("no symptom with id " + std::to_string(id));
    return symptoms_[id - 1];
  }

  const std::vector<Symptom>& symptoms() const noexcept { return symptoms_; }

 private:
  std::vector<Symptom> symptoms_;
};

inline Questionnaire load_questionnaire(std::istream& in) {
  std::vector<Symptom> symptoms;
  std::vector<int> option_counts;
  std::string raw;
  std::size_t line_no = 0;

  auto finish_item = [&]() {
    if (symptoms.empty()) return;
    if (option_counts.back() != kOptionsPerSymptom)
      throw ValidationError("symptom " + std::to_string(symptoms.back().id) + " has " +
                            std::to_string(option_counts.back()) + " options, expected 4");
  };

  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::trim(text::chomp(raw));
    if (line.empty() || line.front() == '#') continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw ParseError("expected ':'", line_no);
    const auto head = text::trim(line.substr(0, colon));
    const auto body = std::string(text::trim(line.substr(colon + 1)));

    if (head.starts_with("item")) {
      finish_item();
      const auto id = text::parse_int<int>(text::trim(head.substr(4)));
      if (!id) throw ParseError("bad item id", line_no);
      if (body.empty()) throw ParseError("empty symptom name", line_no);
      Symptom s;
      s.id = *id;
      s.name = body;
      symptoms.push_back(std::move(s));
      option_counts.push_back(0);
      continue;
    }

    const auto intensity = text::parse_int<int>(head);
    if (!intensity) throw ParseError("expected 'item <id>:' or '<intensity>:'", line_no);
    if (symptoms.empty()) throw ParseError("option before first item", line_no);
    auto& count = option_counts.back();
    const auto sid = std::to_string(symptoms.back().id);
    if (count >= kOptionsPerSymptom)
      throw ValidationError("symptom " + sid + " has more than 4 options");
    if (*intensity != count)
      throw ValidationError("symptom " + sid + ": expected option " + std::to_string(count) +
                            ", found " + std::to_string(*intensity));
    if (body.empty()) throw ParseError("empty option text", line_no);
    symptoms.back().options[count++] = body;
  }
  finish_item();
  return Questionnaire(std::move(symptoms));
}

inline void write_questionnaire(std::ostream& out, const Questionnaire& q) {
  for (const auto& s : q.symptoms()) {
    out << "item " << s.id << ": " << s.name << '\n';
    for (int i = 0; i < kOptionsPerSymptom; ++i) out << "  " << i << ": " << s.options[i] << '\n';
  }
}

}  // namespace symptomrank
