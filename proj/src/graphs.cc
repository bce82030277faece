// ctccrf/graphs.cc

#include "ctccrf/graphs.h"

#include <istream>
#include <set>
#include <sstream>

namespace ctccrf::fst {

Wfst BuildDenominatorGraph(const Alphabet& alphabet, const lm::NGramModel& lm) {
  std::set<std::string> lm_words(lm.words().begin(), lm.words().end());
  std::set<std::string> labels(alphabet.labels().begin(), alphabet.labels().end());
  if (lm_words != labels) {
    throw DataError("denominator LM vocabulary differs from the label alphabet");
  }
  Wfst t = BuildCtcTopology(alphabet, SemiringKind::kLog);
  Wfst g = lm::LmToFst(lm, alphabet.LabelSymbols(), SemiringKind::kLog);
  return Compose(t, g);
}

Lexicon Lexicon::Read(std::istream& is) {
  Lexicon lex;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::vector<std::string> pron;
    for (std::string p; fields >> p;) pron.push_back(p);
    if (pron.empty()) {
      throw DataError("lexicon line " + std::to_string(lineno) + ": word '" + word +
                      "' has an empty pronunciation");
    }
    lex.entries.emplace_back(word, std::move(pron));
  }
  return lex;
}

SymbolTable DecodingWordSymbols(const lm::NGramModel& word_lm) {
  return word_lm.WordSymbols();
}

namespace {

Wfst BuildLexiconFst(const Alphabet& alphabet, const std::optional<Lexicon>& lexicon,
                     const SymbolTable& words) {
  Wfst l(alphabet.LabelSymbols(), words, SemiringKind::kTropical);
  int root = l.AddState();
  l.SetStart(root);
  l.SetFinal(root, 0.0);

  std::vector<char> covered(words.size(), 0);
  if (!lexicon) {
    for (int w = 1; w < words.size(); ++w) {
      int label = alphabet.Find(words.Symbol(w));
      if (label == kNoSymbol || label == Alphabet::kBlank) continue;
      l.AddArc(root, {label, w, 0.0, root});
      covered[w] = 1;
    }
  } else {
    for (const auto& [word, pron] : lexicon->entries) {
      int w = words.Find(word);
      if (w == kNoSymbol) continue;  // not in the LM: unreachable anyway
      std::vector<int> labels = alphabet.Encode(pron);
      int cur = root;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        int next = i + 1 == labels.size() ? root : l.AddState();
        l.AddArc(cur, {labels[i], i == 0 ? w : kEpsilon, 0.0, next});
        cur = next;
      }
      covered[w] = 1;
    }
  }
  for (int w = 1; w < words.size(); ++w) {
    if (!covered[w]) throw DataError("word has no pronunciation: " + words.Symbol(w));
  }
  return l;
}

}  // namespace

Wfst BuildDecodingGraph(const Alphabet& alphabet, const std::optional<Lexicon>& lexicon,
                        const lm::NGramModel& word_lm) {
  if (word_lm.NumWords() == 0 || word_lm.NumEntries(1) == 0) {
    throw DataError("decoding graph: word LM is empty");
  }
  Wfst g = lm::LmToFst(word_lm, SemiringKind::kTropical);
  Wfst l = BuildLexiconFst(alphabet, lexicon, g.isyms());
  Wfst t = BuildCtcTopology(alphabet, SemiringKind::kTropical);
  return Trim(Compose(t, Compose(l, g)));
}

}  // namespace ctccrf::fst
