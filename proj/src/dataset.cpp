#include "kgx/dataset.hpp"

#include <algorithm>
#include <fstream>

#include "kgx/error.hpp"

namespace kgx {

namespace {

std::vector<Triple> sorted_unique(std::vector<Triple> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

Dataset Dataset::from_parts(std::shared_ptr<Vocabulary> vocab, std::vector<Triple> train,
                            std::vector<Triple> valid, std::vector<Triple> test) {
  if (train.empty()) throw DataError("training split is empty");
  Dataset ds;
  ds.vocab = std::move(vocab);
  ds.valid = sorted_unique(std::move(valid));
  ds.test = sorted_unique(std::move(test));
  std::vector<Triple> all = train;
  all.insert(all.end(), ds.valid.begin(), ds.valid.end());
  all.insert(all.end(), ds.test.begin(), ds.test.end());
  ds.train = KnowledgeGraph(ds.vocab, std::move(train));
  ds.universe = KnowledgeGraph(ds.vocab, std::move(all));
  return ds;
}

Dataset Dataset::from_streams(std::istream& train, std::istream* valid, std::istream* test) {
  auto vocab = std::make_shared<Vocabulary>();
  auto tr = read_triples(train, *vocab);
  if (tr.empty()) throw ParseError("training split has no triples");
  std::vector<Triple> va, te;
  if (valid) va = read_triples(*valid, *vocab);
  if (test) te = read_triples(*test, *vocab);
  return from_parts(std::move(vocab), std::move(tr), std::move(va), std::move(te));
}

Dataset Dataset::from_files(const std::filesystem::path& train, const std::filesystem::path& valid,
                            const std::filesystem::path& test) {
  auto vocab = std::make_shared<Vocabulary>();
  auto load = [&](const std::filesystem::path& p) -> std::vector<Triple> {
    if (p.empty()) return {};
    std::ifstream in(p);
    if (!in) throw DataError("cannot open " + p.string());
    try {
      return read_triples(in, *vocab);
    } catch (const ParseError& e) {
      throw ParseError(p.string() + ": " + e.what());
    }
  };
  auto tr = load(train);
  if (tr.empty()) throw ParseError(train.string() + ": no triples");
  auto va = load(valid);
  auto te = load(test);
  return from_parts(std::move(vocab), std::move(tr), std::move(va), std::move(te));
}

std::vector<Triple> Dataset::test_facts(PredicateId p) const {
  std::vector<Triple> out;
  for (const auto& t : test)
    if (t.p == p) out.push_back(t);
  return out;
}

std::vector<PredicateId> Dataset::test_predicates() const {
  std::vector<PredicateId> out;
  for (const auto& t : test) out.push_back(t.p);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace kgx
