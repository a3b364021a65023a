#pragma once

#include <map>
#include <string>
#include <vector>

namespace wordimp {

enum class PosTag { Noun, Verb, Adj, Prep, Dete, Punc, Others, None };

/// Fertility taxonomy: one-to-many (GE2), one-to-one (ONE), many-to-one
/// fractional (FRAC), null-aligned (ZERO).
enum class FertilityClass { GE2, ONE, FRAC, ZERO };

struct TokenAnnotation {
  PosTag pos = PosTag::None;
  FertilityClass fertility_class = FertilityClass::ZERO;
  double fertility_raw = 0.0;
  int depth = -1;             // -1 = absent
  int under_translated = -1;  // -1 = absent, else 0/1
};

const char* pos_tag_name(PosTag tag);
const char* fertility_class_name(FertilityClass cls);
PosTag parse_pos_tag(const std::string& tag);  // throws on unknown tag

struct AlignmentLink {
  int src = 0;
  int tgt = 0;
};

/// POS file: one line per sentence, whitespace-separated `token/TAG`.
std::vector<std::vector<std::pair<std::string, PosTag>>> read_pos_file(
    const std::string& path);

/// Pharaoh alignment: `i-j` pairs per line, 0-indexed source-target.
std::vector<std::vector<AlignmentLink>> read_alignment_file(
    const std::string& path);

/// Dependency depth: whitespace-separated non-negative integers per line.
std::vector<std::vector<int>> read_depth_file(const std::string& path);

/// Under-translation gold: `sentence_id pos pos ...` per line, 0-indexed
/// surface-word positions.
std::map<int, std::vector<int>> read_undertranslation_file(
    const std::string& path);

}  // namespace wordimp
