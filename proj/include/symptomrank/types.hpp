#pragma once

#include <string>

#include "symptomrank/error.hpp"

namespace symptomrank {

/// BDI-II item number, 1..21.
using SymptomId = int;

inline constexpr int kNumSymptoms = 21;
inline constexpr int kOptionsPerSymptom = 4;

constexpr bool is_valid_symptom(SymptomId id) { return id >= 1 && id <= kNumSymptoms; }

inline SymptomId checked_symptom(long long id) {
  if (id < 1 || id > kNumSymptoms)
    throw ValidationError("symptom id out of range 1..21: " + std::to_string(id));
  return static_cast<SymptomId>(id);
}

/// One annotated (sentence, symptom) pair with its two binary labels.
/// Invariant: unanimity implies majority.
struct LabeledInstance {
  std::string doc_id;
  SymptomId symptom_id = 1;
  bool majority = false;
  bool unanimity = false;
  bool synthetic = false;

  friend bool operator==(const LabeledInstance&, const LabeledInstance&) = default;
};

}  // namespace symptomrank
