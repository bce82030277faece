// ctccrf/den_table.cc

#include "ctccrf/den_table.h"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ctccrf/alphabet.h"

namespace ctccrf::crf {

DenominatorTable::DenominatorTable(int num_states, int num_labels, int start,
                                   std::vector<double> finals,
                                   std::vector<DenTransition> transitions)
    : num_states_(num_states), num_labels_(num_labels), start_(start), finals_(std::move(finals)) {
  if (num_states < 0 || num_labels <= 0) throw DataError("den table: bad dimensions");
  if (static_cast<int>(finals_.size()) != num_states) throw DataError("den table: finals size");
  if (num_states > 0 && (start < 0 || start >= num_states)) throw DataError("den table: bad start");
  for (const auto& tr : transitions) {
    if (tr.from < 0 || tr.from >= num_states || tr.to < 0 || tr.to >= num_states ||
        tr.label < 0 || tr.label >= num_labels) {
      throw DataError("den table: transition out of range");
    }
  }
  std::sort(transitions.begin(), transitions.end(), [](const auto& a, const auto& b) {
    return std::tie(a.from, a.label, a.to) < std::tie(b.from, b.label, b.to);
  });
  for (const auto& tr : transitions) {
    if (tr.weight == kLogZero) continue;
    if (!transitions_.empty()) {
      auto& last = transitions_.back();
      if (last.from == tr.from && last.label == tr.label && last.to == tr.to) {
        last.weight = LogAdd(last.weight, tr.weight);
        continue;
      }
    }
    transitions_.push_back(tr);
  }
  BuildIndex();
}

void DenominatorTable::BuildIndex() {
  out_begin_.assign(num_states_ + 1, 0);
  in_begin_.assign(num_states_ + 1, 0);
  for (const auto& tr : transitions_) {
    ++out_begin_[tr.from + 1];
    ++in_begin_[tr.to + 1];
  }
  std::partial_sum(out_begin_.begin(), out_begin_.end(), out_begin_.begin());
  std::partial_sum(in_begin_.begin(), in_begin_.end(), in_begin_.begin());
  in_order_.resize(transitions_.size());
  std::vector<int> fill(in_begin_.begin(), in_begin_.end() - 1);
  for (int i = 0; i < static_cast<int>(transitions_.size()); ++i) {
    in_order_[fill[transitions_[i].to]++] = i;
  }
}

void DenominatorTable::Write(std::ostream& os) const {
  char buf[40];
  os << "ctccrf-den-table " << num_states_ << ' ' << num_labels_ << ' ' << start_ << '\n';
  for (const auto& tr : transitions_) {
    std::snprintf(buf, sizeof(buf), "%.17g", tr.weight);
    os << tr.from << '\t' << tr.to << '\t' << tr.label << '\t' << buf << '\n';
  }
  for (int s = 0; s < num_states_; ++s) {
    if (finals_[s] == kLogZero) continue;
    std::snprintf(buf, sizeof(buf), "%.17g", finals_[s]);
    os << "final\t" << s << '\t' << buf << '\n';
  }
}

DenominatorTable DenominatorTable::Read(std::istream& is) {
  std::string line, magic;
  int n = 0, labels = 0, start = 0;
  if (!std::getline(is, line)) throw DataError("den table: empty input");
  std::istringstream header(line);
  if (!(header >> magic >> n >> labels >> start) || magic != "ctccrf-den-table") {
    throw DataError("den table: bad header");
  }
  std::vector<double> finals(n, kLogZero);
  std::vector<DenTransition> transitions;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream f(line);
    std::string first;
    f >> first;
    bool ok = true;
    if (first == "final") {
      int s = -1;
      std::string w;
      ok = static_cast<bool>(f >> s >> w) && s >= 0 && s < n;
      if (ok) finals[s] = std::stod(w);
    } else {
      DenTransition tr;
      std::string w;
      try {
        tr.from = std::stoi(first);
      } catch (const std::exception&) {
        ok = false;
      }
      ok = ok && static_cast<bool>(f >> tr.to >> tr.label >> w);
      if (ok) {
        tr.weight = std::stod(w);
        transitions.push_back(tr);
      }
    }
    if (!ok) throw DataError("den table line " + std::to_string(lineno) + ": malformed");
  }
  return DenominatorTable(n, labels, start, std::move(finals), std::move(transitions));
}

namespace {

struct EpsArc {
  int to;
  double weight;
};

// Iterative Tarjan. Components come out in reverse topological order: an
// edge A -> B between components implies id(B) < id(A).
std::vector<int> StronglyConnected(const std::vector<std::vector<EpsArc>>& graph, int* count) {
  const int n = static_cast<int>(graph.size());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1), stack;
  std::vector<char> on_stack(n, 0);
  int next_index = 0, next_comp = 0;
  struct Frame {
    int v;
    std::size_t edge;
  };
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> call{{root, 0}};
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.edge < graph[f.v].size()) {
        int w = graph[f.v][f.edge++].to;
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      const int v = f.v;
      if (low[v] == index[v]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = next_comp;
        } while (w != v);
        ++next_comp;
      }
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
    }
  }
  *count = next_comp;
  return comp;
}

// Kleene star in the log semiring: -log(1 - exp(w)).
double Star(double w) {
  if (w == kLogZero) return 0.0;
  if (w >= 0.0) {
    throw NumericalError("epsilon cycle with non-negative log weight: closure diverges");
  }
  return -std::log1p(-std::exp(w));
}

// All-pairs closure of one strongly connected block (Lehmann / Floyd-Warshall
// over the log semiring). Returns the reflexive closure.
std::vector<double> BlockClosure(const std::vector<int>& members,
                                 const std::vector<std::vector<EpsArc>>& graph,
                                 const std::vector<int>& local) {
  const std::size_t m = members.size();
  std::vector<double> d(m * m, kLogZero);
  for (std::size_t i = 0; i < m; ++i) {
    for (const EpsArc& a : graph[members[i]]) {
      int j = local[a.to];
      if (j < 0) continue;
      d[i * m + j] = LogAdd(d[i * m + j], a.weight);
    }
  }
  for (std::size_t k = 0; k < m; ++k) {
    const double star = Star(d[k * m + k]);
    std::vector<double> next = d;
    for (std::size_t i = 0; i < m; ++i) {
      if (d[i * m + k] == kLogZero) continue;
      for (std::size_t j = 0; j < m; ++j) {
        if (d[k * m + j] == kLogZero) continue;
        next[i * m + j] = LogAdd(next[i * m + j], d[i * m + k] + star + d[k * m + j]);
      }
    }
    d = std::move(next);
  }
  for (std::size_t i = 0; i < m; ++i) d[i * m + i] = LogAdd(d[i * m + i], 0.0);
  return d;
}

}  // namespace

DenominatorTable FlattenDenominator(const fst::Wfst& den_fst) {
  const int n = den_fst.NumStates();
  const int num_labels = den_fst.isyms().size() - 1;
  if (num_labels <= 0) throw DataError("flatten: input symbol table has no symbols");
  if (n == 0 || den_fst.Start() == fst::kNoState) {
    return DenominatorTable(0, num_labels, 0, {}, {});
  }

  std::vector<std::vector<EpsArc>> eps(n);
  bool any_eps = false;
  for (int s = 0; s < n; ++s) {
    for (const auto& a : den_fst.Arcs(s)) {
      if (a.ilabel == kEpsilon) {
        eps[s].push_back({a.nextstate, a.weight});
        any_eps = true;
      } else if (a.ilabel > num_labels) {
        throw DataError("flatten: input label outside the state alphabet");
      }
    }
  }

  int num_comps = 0;
  std::vector<int> comp = any_eps ? StronglyConnected(eps, &num_comps) : std::vector<int>(n);
  if (!any_eps) {
    std::iota(comp.begin(), comp.end(), 0);
    num_comps = n;
  }
  std::vector<std::vector<int>> members(num_comps);
  for (int s = 0; s < n; ++s) members[comp[s]].push_back(s);
  std::vector<int> local(n, -1);
  std::vector<std::vector<double>> closure(num_comps);
  for (int c = 0; c < num_comps; ++c) {
    const auto& mem = members[c];
    bool cyclic = mem.size() > 1;
    for (const auto& a : eps[mem[0]]) cyclic = cyclic || a.to == mem[0];
    if (!cyclic) continue;
    for (std::size_t i = 0; i < mem.size(); ++i) local[mem[i]] = static_cast<int>(i);
    closure[c] = BlockClosure(mem, eps, local);
    for (int s : mem) local[s] = -1;
  }

  std::vector<DenTransition> transitions;
  std::vector<double> finals(n, kLogZero);
  std::vector<double> acc(n, kLogZero), dist(n, kLogZero);
  std::vector<char> seen(n, 0);
  std::vector<int> reach, comps, stack;
  for (int src = 0; src < n; ++src) {
    // Components reachable from src over epsilon arcs.
    reach.clear();
    stack.assign(1, src);
    seen[src] = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      reach.push_back(v);
      for (const auto& a : eps[v]) {
        if (!seen[a.to]) {
          seen[a.to] = 1;
          stack.push_back(a.to);
        }
      }
    }
    comps.clear();
    for (int v : reach) comps.push_back(comp[v]);
    std::sort(comps.begin(), comps.end(), std::greater<>());
    comps.erase(std::unique(comps.begin(), comps.end()), comps.end());

    acc[src] = 0.0;
    for (int c : comps) {
      const auto& mem = members[c];
      if (closure[c].empty()) {
        dist[mem[0]] = acc[mem[0]];
      } else {
        const std::size_t m = mem.size();
        for (std::size_t j = 0; j < m; ++j) {
          double total = kLogZero;
          for (std::size_t i = 0; i < m; ++i) {
            if (acc[mem[i]] != kLogZero) total = LogAdd(total, acc[mem[i]] + closure[c][i * m + j]);
          }
          dist[mem[j]] = total;
        }
      }
      for (int q : mem) {
        if (dist[q] == kLogZero || !seen[q]) continue;
        for (const auto& a : eps[q]) {
          if (comp[a.to] != c) acc[a.to] = LogAdd(acc[a.to], dist[q] + a.weight);
        }
      }
    }

    for (int q : reach) {
      if (dist[q] == kLogZero) continue;
      if (den_fst.IsFinal(q)) finals[src] = LogAdd(finals[src], dist[q] + den_fst.Final(q));
      for (const auto& a : den_fst.Arcs(q)) {
        if (a.ilabel == kEpsilon) continue;
        transitions.push_back({src, a.nextstate, FromFstInput(a.ilabel), dist[q] + a.weight});
      }
    }
    for (int v : reach) {
      acc[v] = dist[v] = kLogZero;
      seen[v] = 0;
    }
  }

  // Connect: keep states reachable from the start and co-reachable to a final.
  std::vector<std::vector<int>> fwd(n), bwd(n);
  for (const auto& tr : transitions) {
    fwd[tr.from].push_back(tr.to);
    bwd[tr.to].push_back(tr.from);
  }
  auto sweep = [n](const std::vector<std::vector<int>>& g, std::vector<int> roots) {
    std::vector<char> mark(n, 0);
    for (int r : roots) mark[r] = 1;
    while (!roots.empty()) {
      int v = roots.back();
      roots.pop_back();
      for (int w : g[v]) {
        if (!mark[w]) {
          mark[w] = 1;
          roots.push_back(w);
        }
      }
    }
    return mark;
  };
  std::vector<int> final_states;
  for (int s = 0; s < n; ++s) {
    if (finals[s] != kLogZero) final_states.push_back(s);
  }
  const auto accessible = sweep(fwd, {den_fst.Start()});
  const auto coaccessible = sweep(bwd, final_states);
  std::vector<int> remap(n, -1);
  int kept = 0;
  for (int s = 0; s < n; ++s) {
    if (accessible[s] && coaccessible[s]) remap[s] = kept++;
  }
  if (remap[den_fst.Start()] < 0) return DenominatorTable(0, num_labels, 0, {}, {});
  std::vector<double> kept_finals(kept, kLogZero);
  for (int s = 0; s < n; ++s) {
    if (remap[s] >= 0) kept_finals[remap[s]] = finals[s];
  }
  std::vector<DenTransition> kept_transitions;
  kept_transitions.reserve(transitions.size());
  for (const auto& tr : transitions) {
    if (remap[tr.from] < 0 || remap[tr.to] < 0) continue;
    kept_transitions.push_back({remap[tr.from], remap[tr.to], tr.label, tr.weight});
  }
  return DenominatorTable(kept, num_labels, remap[den_fst.Start()], std::move(kept_finals),
                          std::move(kept_transitions));
}

}  // namespace ctccrf::crf
