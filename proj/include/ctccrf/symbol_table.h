// ctccrf/symbol_table.h

#ifndef CTCCRF_SYMBOL_TABLE_H_
#define CTCCRF_SYMBOL_TABLE_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ctccrf {

inline constexpr int kEpsilon = 0;
inline constexpr int kNoSymbol = -1;

/// Dense id <-> string mapping. Id 0 is always "<eps>".
class SymbolTable {
 public:
  SymbolTable();

  /// Returns the id of `symbol`, adding it if absent.
  int AddSymbol(std::string_view symbol);

  /// kNoSymbol when absent.
  int Find(std::string_view symbol) const;
  const std::string& Symbol(int id) const;
  int size() const { return static_cast<int>(symbols_.size()); }

  /// FNV-1a over the ordered content; two tables with equal hashes are
  /// treated as the same alphabet regardless of where they came from.
  std::uint64_t Hash() const;

  /// `symbol<TAB>id` per line.
  void Write(std::ostream& os) const;
  static SymbolTable Read(std::istream& is);

  bool operator==(const SymbolTable& other) const {
    return symbols_ == other.symbols_;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace ctccrf

#endif  // CTCCRF_SYMBOL_TABLE_H_
