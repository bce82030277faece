// ctccrf/alphabet.cc

#include "ctccrf/alphabet.h"

#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "ctccrf/common.h"

namespace ctccrf {

Alphabet::Alphabet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  std::set<std::string> seen;
  for (const auto& l : labels_) {
    if (l.empty()) throw DataError("alphabet: empty label name");
    if (l == kBlankName || l == "<eps>") throw DataError("alphabet: reserved label name " + l);
    if (!seen.insert(l).second) throw DataError("alphabet: duplicate label " + l);
  }
}

const std::string& Alphabet::Name(int state_id) const {
  static const std::string blank = kBlankName;
  if (state_id == kBlank) return blank;
  if (state_id < 0 || state_id > NumLabels()) {
    throw DataError("state id " + std::to_string(state_id) + " outside alphabet");
  }
  return labels_[state_id - 1];
}

int Alphabet::Find(const std::string& name) const {
  if (name == kBlankName) return kBlank;
  for (int i = 0; i < NumLabels(); ++i) {
    if (labels_[i] == name) return i + 1;
  }
  return kNoSymbol;
}

SymbolTable Alphabet::StateSymbols() const {
  SymbolTable t;
  t.AddSymbol(kBlankName);
  for (const auto& l : labels_) t.AddSymbol(l);
  return t;
}

SymbolTable Alphabet::LabelSymbols() const {
  SymbolTable t;
  for (const auto& l : labels_) t.AddSymbol(l);
  return t;
}

std::vector<int> Alphabet::Encode(std::span<const std::string> names) const {
  std::vector<int> ids;
  ids.reserve(names.size());
  for (const auto& n : names) {
    int id = Find(n);
    if (id == kNoSymbol || id == kBlank) throw DataError("label not in alphabet: " + n);
    ids.push_back(id);
  }
  return ids;
}

std::vector<std::string> Alphabet::Decode(std::span<const int> ids) const {
  std::vector<std::string> names;
  names.reserve(ids.size());
  for (int id : ids) names.push_back(Name(id));
  return names;
}

Alphabet Alphabet::Read(std::istream& is) {
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream fields(line);
    std::string name;
    if (fields >> name) labels.push_back(name);
  }
  return Alphabet(std::move(labels));
}

void Alphabet::Write(std::ostream& os) const {
  for (const auto& l : labels_) os << l << '\n';
}

std::vector<int> MapB(std::span<const int> states, int num_states) {
  std::vector<int> out;
  int prev = -1;
  for (int s : states) {
    if (s < 0 || s >= num_states) {
      throw DataError("state id " + std::to_string(s) + " outside alphabet");
    }
    if (s != prev && s != Alphabet::kBlank) out.push_back(s);
    prev = s;
  }
  return out;
}

}  // namespace ctccrf
