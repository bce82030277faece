// ctccrf/symbol_table.cc

#include "ctccrf/symbol_table.h"

#include <istream>
#include <ostream>
#include <sstream>

#include "ctccrf/common.h"

namespace ctccrf {

SymbolTable::SymbolTable() { AddSymbol("<eps>"); }

int SymbolTable::AddSymbol(std::string_view symbol) {
  std::string key(symbol);
  if (auto it = index_.find(key); it != index_.end()) return it->second;
  int id = static_cast<int>(symbols_.size());
  symbols_.push_back(key);
  index_.emplace(std::move(key), id);
  return id;
}

int SymbolTable::Find(std::string_view symbol) const {
  auto it = index_.find(std::string(symbol));
  return it == index_.end() ? kNoSymbol : it->second;
}

const std::string& SymbolTable::Symbol(int id) const {
  if (id < 0 || id >= size()) {
    throw DataError("symbol id " + std::to_string(id) + " out of range");
  }
  return symbols_[id];
}

std::uint64_t SymbolTable::Hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 1099511628211ULL;
  };
  for (const auto& s : symbols_) {
    for (char c : s) mix(static_cast<unsigned char>(c));
    mix(0);
  }
  return h;
}

void SymbolTable::Write(std::ostream& os) const {
  for (int i = 0; i < size(); ++i) os << symbols_[i] << '\t' << i << '\n';
}

SymbolTable SymbolTable::Read(std::istream& is) {
  SymbolTable table;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string symbol;
    int id = -1;
    if (!(fields >> symbol >> id)) {
      throw DataError("symbol table line " + std::to_string(lineno) + ": expected `symbol id`");
    }
    if (id == 0) {
      if (symbol != "<eps>") {
        throw DataError("symbol table line " + std::to_string(lineno) + ": id 0 must be <eps>");
      }
      continue;
    }
    if (id != table.size() || table.Find(symbol) != kNoSymbol) {
      throw DataError("symbol table line " + std::to_string(lineno) +
                      ": ids must be dense and symbols unique");
    }
    table.AddSymbol(symbol);
  }
  return table;
}

}  // namespace ctccrf
