// ctccrf/lm_fst.cc

#include <map>
#include <set>

#include "ctccrf/ngram.h"

namespace ctccrf::lm {

namespace {

using NGram = NGramModel::NGram;

class BackoffFstBuilder {
 public:
  BackoffFstBuilder(const NGramModel& lm, std::vector<int> label_of, SymbolTable table,
                    SemiringKind kind)
      : lm_(lm), label_of_(std::move(label_of)), fst_(table, table, kind) {}

  fst::Wfst Build() {
    const bool has_bos = lm_.order() > 1 && lm_.Find(std::vector<int>{lm_.Bos()});
    // State 0 is the start: the <s> history, or a bare start state.
    int start = fst_.AddState();
    fst_.SetStart(start);
    if (has_bos) state_of_[{lm_.Bos()}] = start;
    state_of_[{}] = fst_.AddState();
    if (!has_bos) fst_.AddArc(start, {kEpsilon, kEpsilon, 0.0, state_of_[{}]});

    for (int k = 1; k < lm_.order(); ++k) {
      for (const auto& [g, e] : lm_.Entries(k)) {
        if (g.back() == lm_.Eos() || state_of_.count(g)) continue;
        state_of_[g] = fst_.AddState();
      }
    }

    for (int k = 1; k <= lm_.order(); ++k) {
      for (const auto& [g, e] : lm_.Entries(k)) {
        const int w = g.back();
        if (w == lm_.Bos()) continue;
        NGram history(g.begin(), g.end() - 1);
        auto from = state_of_.find(history);
        if (from == state_of_.end()) continue;
        if (w == lm_.Eos()) {
          fst_.SetFinal(from->second, e.logprob);
          continue;
        }
        const int label = label_of_[w];
        fst_.AddArc(from->second, {label, label, e.logprob, Destination(g)});
      }
    }

    for (const auto& [history, state] : state_of_) {
      if (history.empty() || Complete(history)) continue;
      const NGramModel::Entry* e = lm_.Find(history);
      const double bow = e && e->has_backoff ? e->backoff : 0.0;
      NGram shorter(history.begin() + 1, history.end());
      fst_.AddArc(state, {kEpsilon, kEpsilon, bow, Destination(shorter)});
    }

    if (lm_.NumEntries(1) == 0) {
      // Nothing to predict: accept the empty sentence only.
      fst::Wfst empty(fst_.isyms(), fst_.osyms(), fst_.semiring());
      empty.SetStart(empty.AddState());
      empty.SetFinal(0, 0.0);
      return empty;
    }
    return std::move(fst_);
  }

 private:
  // Longest suffix of `g` (at most order - 1 symbols) that is a history state.
  int Destination(const NGram& g) const {
    std::size_t keep = std::min<std::size_t>(g.size(), lm_.order() - 1);
    for (std::size_t start = g.size() - keep; start <= g.size(); ++start) {
      NGram suffix(g.begin() + start, g.end());
      auto it = state_of_.find(suffix);
      if (it != state_of_.end()) return it->second;
    }
    return state_of_.at({});
  }

  // Every symbol that can follow has an explicit n-gram, so backing off
  // would only add mass the exact model never assigns.
  bool Complete(const NGram& history) const {
    NGram g = history;
    g.push_back(0);
    for (int w = 1; w <= lm_.NumWords() + 2; ++w) {
      if (w == lm_.Bos()) continue;
      g.back() = w;
      if (!lm_.Find(g)) return false;
    }
    return true;
  }

  const NGramModel& lm_;
  std::vector<int> label_of_;
  fst::Wfst fst_;
  std::map<NGram, int> state_of_;
};

}  // namespace

fst::Wfst LmToFst(const NGramModel& lm, const SymbolTable& target, SemiringKind kind) {
  std::vector<int> label_of(lm.NumWords() + 3, kEpsilon);
  std::set<int> used;
  for (int w = 1; w <= lm.NumWords(); ++w) {
    int id = target.Find(lm.words()[w - 1]);
    if (id == kNoSymbol || id == kEpsilon) {
      throw DataError("LM word '" + lm.words()[w - 1] + "' missing from the symbol table");
    }
    label_of[w] = id;
    used.insert(id);
  }
  if (static_cast<int>(used.size()) != target.size() - 1) {
    throw DataError("symbol table has symbols the LM does not cover");
  }
  return BackoffFstBuilder(lm, std::move(label_of), target, kind).Build();
}

fst::Wfst LmToFst(const NGramModel& lm, SemiringKind kind) {
  return LmToFst(lm, lm.WordSymbols(), kind);
}

}  // namespace ctccrf::lm
