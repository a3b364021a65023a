#include "wordimp/annotations.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "wordimp/corpus.hpp"

namespace wordimp {

const char* pos_tag_name(PosTag tag) {
  switch (tag) {
    case PosTag::Noun: return "Noun";
    case PosTag::Verb: return "Verb";
    case PosTag::Adj: return "Adj";
    case PosTag::Prep: return "Prep";
    case PosTag::Dete: return "Dete";
    case PosTag::Punc: return "Punc";
    case PosTag::Others: return "Others";
    case PosTag::None: return "None";
  }
  return "?";
}

const char* fertility_class_name(FertilityClass cls) {
  switch (cls) {
    case FertilityClass::GE2: return ">=2";
    case FertilityClass::ONE: return "1";
    case FertilityClass::FRAC: return "(0,1)";
    case FertilityClass::ZERO: return "0";
  }
  return "?";
}

PosTag parse_pos_tag(const std::string& tag) {
  static const std::map<std::string, PosTag> table = {
      {"N", PosTag::Noun},     {"NOUN", PosTag::Noun},
      {"V", PosTag::Verb},     {"VERB", PosTag::Verb},
      {"ADJ", PosTag::Adj},    {"A", PosTag::Adj},
      {"PREP", PosTag::Prep},  {"P", PosTag::Prep},
      {"DET", PosTag::Dete},   {"D", PosTag::Dete},
      {"DETE", PosTag::Dete},  {"PUNC", PosTag::Punc},
      {"PUNCT", PosTag::Punc}, {"OTH", PosTag::Others},
      {"OTHER", PosTag::Others}, {"OTHERS", PosTag::Others},
      {"X", PosTag::Others},   {"NONE", PosTag::None}};
  std::string upper;
  for (char c : tag) upper.push_back(static_cast<char>(std::toupper(c)));
  auto it = table.find(upper);
  if (it == table.end())
    throw std::runtime_error("unknown POS tag: " + tag);
  return it->second;
}

std::vector<std::vector<std::pair<std::string, PosTag>>> read_pos_file(
    const std::string& path) {
  std::vector<std::vector<std::pair<std::string, PosTag>>> out;
  int lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    std::vector<std::pair<std::string, PosTag>> sent;
    for (const auto& item : split_whitespace(line)) {
      size_t slash = item.rfind('/');
      if (slash == std::string::npos || slash == 0 ||
          slash + 1 == item.size())
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": expected token/TAG, got '" + item + "'");
      sent.emplace_back(item.substr(0, slash),
                        parse_pos_tag(item.substr(slash + 1)));
    }
    out.push_back(std::move(sent));
  }
  return out;
}

std::vector<std::vector<AlignmentLink>> read_alignment_file(
    const std::string& path) {
  std::vector<std::vector<AlignmentLink>> out;
  int lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    std::vector<AlignmentLink> links;
    for (const auto& item : split_whitespace(line)) {
      size_t dash = item.find('-');
      AlignmentLink link;
      try {
        if (dash == std::string::npos) throw std::invalid_argument(item);
        size_t used_a = 0, used_b = 0;
        std::string a = item.substr(0, dash), b = item.substr(dash + 1);
        link.src = std::stoi(a, &used_a);
        link.tgt = std::stoi(b, &used_b);
        if (used_a != a.size() || used_b != b.size() || link.src < 0 ||
            link.tgt < 0)
          throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": malformed alignment link '" + item + "'");
      }
      links.push_back(link);
    }
    out.push_back(std::move(links));
  }
  return out;
}

std::vector<std::vector<int>> read_depth_file(const std::string& path) {
  std::vector<std::vector<int>> out;
  int lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    std::vector<int> depths;
    for (const auto& item : split_whitespace(line)) {
      try {
        size_t used = 0;
        int d = std::stoi(item, &used);
        if (used != item.size() || d < 0) throw std::invalid_argument(item);
        depths.push_back(d);
      } catch (const std::exception&) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": malformed depth '" + item + "'");
      }
    }
    out.push_back(std::move(depths));
  }
  return out;
}

std::map<int, std::vector<int>> read_undertranslation_file(
    const std::string& path) {
  std::map<int, std::vector<int>> out;
  int lineno = 0;
  for (const auto& line : read_lines(path)) {
    ++lineno;
    auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    try {
      int id = std::stoi(fields[0]);
      std::vector<int> positions;
      for (size_t i = 1; i < fields.size(); ++i)
        positions.push_back(std::stoi(fields[i]));
      out[id] = std::move(positions);
    } catch (const std::exception&) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": malformed under-translation record");
    }
  }
  return out;
}

}  // namespace wordimp
