#include "kgx/embeddings.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "kgx/error.hpp"

namespace kgx {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kTransE: return "transe";
    case ModelKind::kComplEx: return "complex";
    case ModelKind::kHolE: return "hole";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "transe") return ModelKind::kTransE;
  if (lower == "complex") return ModelKind::kComplEx;
  if (lower == "hole") return ModelKind::kHolE;
  throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

EmbeddingModel::EmbeddingModel(ModelKind kind, int dim, int norm, std::size_t entities,
                               std::size_t predicates)
    : kind_(kind), dim_(dim), norm_(norm), entity_count_(entities), predicate_count_(predicates) {
  if (dim < 1) throw std::invalid_argument("embedding dimension must be >= 1");
  if (norm != 1 && norm != 2) throw std::invalid_argument("norm order must be 1 or 2");
  width_ = kind == ModelKind::kComplEx ? 2 * static_cast<std::size_t>(dim)
                                       : static_cast<std::size_t>(dim);
  entities_.assign(entities * width_, 0.0);
  predicates_.assign(predicates * width_, 0.0);
}

std::span<const double> EmbeddingModel::entity(EntityId e) const {
  if (e >= entity_count_) throw DataError("entity id out of range");
  return std::span(entities_).subspan(e * width_, width_);
}
std::span<double> EmbeddingModel::entity(EntityId e) {
  if (e >= entity_count_) throw DataError("entity id out of range");
  return std::span(entities_).subspan(e * width_, width_);
}
std::span<const double> EmbeddingModel::predicate(PredicateId p) const {
  if (p >= predicate_count_) throw DataError("predicate id out of range");
  return std::span(predicates_).subspan(p * width_, width_);
}
std::span<double> EmbeddingModel::predicate(PredicateId p) {
  if (p >= predicate_count_) throw DataError("predicate id out of range");
  return std::span(predicates_).subspan(p * width_, width_);
}

double EmbeddingModel::score(const Triple& t) const {
  return score_rows(kind_, norm_, entity(t.s), predicate(t.p), entity(t.o));
}

Scorer EmbeddingModel::scorer() const {
  return [this](const Triple& t) { return score(t); };
}

EmbeddingModel init_model(ModelKind kind, int dim, std::size_t entities, std::size_t predicates,
                          std::uint64_t seed, int norm) {
  EmbeddingModel model(kind, dim, norm, entities, predicates);
  const double bound = 6.0 / std::sqrt(static_cast<double>(dim));
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& v : model.entity_table()) v = u(rng);
  for (auto& v : model.predicate_table()) v = u(rng);
  return model;
}

std::complex<double> complex_trilinear(std::span<const double> s, std::span<const double> p,
                                       std::span<const double> o) {
  std::complex<double> sum = 0.0;
  for (std::size_t j = 0; j + 1 < s.size(); j += 2) {
    const std::complex<double> sj(s[j], s[j + 1]), pj(p[j], p[j + 1]), oj(o[j], o[j + 1]);
    sum += sj * pj * std::conj(oj);
  }
  return sum;
}

std::vector<double> circular_correlation(std::span<const double> s, std::span<const double> o) {
  const std::size_t d = s.size();
  std::vector<double> out(d, 0.0);
  for (std::size_t k = 0; k < d; ++k)
    for (std::size_t i = 0; i < d; ++i) out[k] += s[i] * o[(i + k) % d];
  return out;
}

double score_rows(ModelKind kind, int norm, std::span<const double> s, std::span<const double> p,
                  std::span<const double> o) {
  switch (kind) {
    case ModelKind::kTransE: {
      double acc = 0.0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        const double r = s[i] + p[i] - o[i];
        acc += norm == 1 ? std::abs(r) : r * r;
      }
      return norm == 1 ? -acc : -std::sqrt(acc);
    }
    case ModelKind::kComplEx: {
      double acc = 0.0;
      for (std::size_t j = 0; j + 1 < s.size(); j += 2) {
        const double sr = s[j], si = s[j + 1], pr = p[j], pi = p[j + 1], orr = o[j], oi = o[j + 1];
        acc += sr * pr * orr + si * pr * oi + sr * pi * oi - si * pi * orr;
      }
      return acc;
    }
    case ModelKind::kHolE: {
      const auto corr = circular_correlation(s, o);
      return std::inner_product(p.begin(), p.end(), corr.begin(), 0.0);
    }
  }
  return 0.0;
}

SlotGradient score_gradient(ModelKind kind, int norm, std::span<const double> s,
                            std::span<const double> p, std::span<const double> o) {
  const std::size_t w = s.size();
  SlotGradient g{std::vector<double>(w, 0.0), std::vector<double>(w, 0.0),
                 std::vector<double>(w, 0.0)};
  switch (kind) {
    case ModelKind::kTransE: {
      std::vector<double> r(w);
      double len = 0.0;
      for (std::size_t i = 0; i < w; ++i) {
        r[i] = s[i] + p[i] - o[i];
        len += r[i] * r[i];
      }
      len = std::sqrt(len);
      for (std::size_t i = 0; i < w; ++i) {
        double d = 0.0;  // d||r|| / d r_i
        if (norm == 1)
          d = r[i] > 0 ? 1.0 : (r[i] < 0 ? -1.0 : 0.0);
        else if (len > 0)
          d = r[i] / len;
        g.subject[i] = -d;
        g.predicate[i] = -d;
        g.object[i] = d;
      }
      break;
    }
    case ModelKind::kComplEx: {
      for (std::size_t j = 0; j + 1 < w; j += 2) {
        const double sr = s[j], si = s[j + 1], pr = p[j], pi = p[j + 1], orr = o[j], oi = o[j + 1];
        g.subject[j] = pr * orr + pi * oi;
        g.subject[j + 1] = pr * oi - pi * orr;
        g.predicate[j] = sr * orr + si * oi;
        g.predicate[j + 1] = sr * oi - si * orr;
        g.object[j] = sr * pr - si * pi;
        g.object[j + 1] = si * pr + sr * pi;
      }
      break;
    }
    case ModelKind::kHolE: {
      // d/dp_k = (s ⋆ o)_k; d/ds_i = sum_k p_k o_{(i+k)}; d/do_j = sum_k p_k s_{(j-k)}.
      g.predicate = circular_correlation(s, o);
      for (std::size_t i = 0; i < w; ++i)
        for (std::size_t k = 0; k < w; ++k) {
          g.subject[i] += p[k] * o[(i + k) % w];
          g.object[(i + k) % w] += p[k] * s[i];
        }
      break;
    }
  }
  return g;
}

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
double squared_norm(std::span<const double> v) {
  return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

}  // namespace

double fact_loss(ModelKind kind, int norm, Loss loss, double label, double l2,
                 std::span<const double> s, std::span<const double> p, std::span<const double> o) {
  const double sc = score_rows(kind, norm, s, p, o);
  if (loss == Loss::kMargin) return -label * sc;
  return softplus(-label * sc) + l2 * (squared_norm(s) + squared_norm(p) + squared_norm(o));
}

SlotGradient fact_loss_gradient(ModelKind kind, int norm, Loss loss, double label, double l2,
                                std::span<const double> s, std::span<const double> p,
                                std::span<const double> o) {
  auto g = score_gradient(kind, norm, s, p, o);
  double factor = -label;
  if (loss == Loss::kLogistic) factor = -label * sigmoid(-label * score_rows(kind, norm, s, p, o));
  for (auto* v : {&g.subject, &g.predicate, &g.object})
    for (auto& x : *v) x *= factor;
  if (loss == Loss::kLogistic && l2 != 0.0) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      g.subject[i] += 2 * l2 * s[i];
      g.predicate[i] += 2 * l2 * p[i];
      g.object[i] += 2 * l2 * o[i];
    }
  }
  return g;
}

SlotGradient gradient(const EmbeddingModel& model, const Triple& fact, Loss loss, double label,
                      double l2) {
  return fact_loss_gradient(model.kind(), model.norm(), loss, label, l2, model.entity(fact.s),
                            model.predicate(fact.p), model.entity(fact.o));
}

void TrainConfig::validate() const {
  std::vector<std::string> bad;
  if (!(learning_rate > 0)) bad.emplace_back("learning_rate must be > 0");
  if (epochs < 0) bad.emplace_back("epochs must be >= 0");
  if (batch_size < 1) bad.emplace_back("batch_size must be >= 1");
  if (!(margin > 0)) bad.emplace_back("margin must be > 0");
  if (negatives < 1) bad.emplace_back("negatives must be >= 1");
  if (!(l2 >= 0)) bad.emplace_back("l2 must be >= 0");
  if (!seed) bad.emplace_back("seed is required");
  if (!bad.empty()) {
    std::string msg = "invalid training config:";
    for (const auto& b : bad) msg += " " + b + ";";
    throw std::invalid_argument(msg);
  }
}

namespace {

// Row-sparse gradient accumulator for one mini-batch.
class BatchGradient {
 public:
  BatchGradient(std::size_t entity_rows, std::size_t predicate_rows, std::size_t width)
      : width_(width),
        entity_(entity_rows * width, 0.0),
        predicate_(predicate_rows * width, 0.0),
        entity_touched_(entity_rows, false),
        predicate_touched_(predicate_rows, false) {}

  void add(const Triple& t, const SlotGradient& g) {
    accumulate(entity_, entity_touched_, touched_entities_, t.s, g.subject);
    accumulate(predicate_, predicate_touched_, touched_predicates_, t.p, g.predicate);
    accumulate(entity_, entity_touched_, touched_entities_, t.o, g.object);
  }

  void apply(EmbeddingModel& model, double lr) {
    std::sort(touched_entities_.begin(), touched_entities_.end());
    std::sort(touched_predicates_.begin(), touched_predicates_.end());
    for (auto e : touched_entities_) step(model.entity(e), entity_, e, lr, entity_touched_);
    for (auto p : touched_predicates_)
      step(model.predicate(p), predicate_, p, lr, predicate_touched_);
    touched_entities_.clear();
    touched_predicates_.clear();
  }

 private:
  void accumulate(std::vector<double>& buf, std::vector<bool>& touched,
                  std::vector<std::uint32_t>& list, std::uint32_t row,
                  const std::vector<double>& g) {
    if (!touched[row]) {
      touched[row] = true;
      list.push_back(row);
    }
    for (std::size_t i = 0; i < width_; ++i) buf[row * width_ + i] += g[i];
  }
  void step(std::span<double> target, std::vector<double>& buf, std::uint32_t row, double lr,
            std::vector<bool>& touched) {
    for (std::size_t i = 0; i < width_; ++i) {
      target[i] -= lr * buf[row * width_ + i];
      buf[row * width_ + i] = 0.0;
    }
    touched[row] = false;
  }

  std::size_t width_;
  std::vector<double> entity_, predicate_;
  std::vector<bool> entity_touched_, predicate_touched_;
  std::vector<std::uint32_t> touched_entities_, touched_predicates_;
};

void renormalize_entities(EmbeddingModel& model) {
  for (EntityId e = 0; e < model.entity_count(); ++e) {
    auto row = model.entity(e);
    const double len = std::sqrt(squared_norm(row));
    if (len > 0)
      for (auto& v : row) v /= len;
  }
}

}  // namespace

TrainReport train(EmbeddingModel& model, const KnowledgeGraph& graph, const TrainConfig& cfg) {
  cfg.validate();
  if (graph.facts().empty()) throw DataError("cannot train on an empty graph");
  if (graph.entity_count() > model.entity_count() ||
      graph.predicate_count() > model.predicate_count())
    throw DataError("model tables are smaller than the graph vocabulary");

  TrainReport report;
  Rng rng(*cfg.seed);
  const bool transe = model.kind() == ModelKind::kTransE;
  const int norm = model.norm();
  const auto kind = model.kind();
  std::vector<Triple> order(graph.facts().begin(), graph.facts().end());
  BatchGradient batch(model.entity_count(), model.predicate_count(), model.width());

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t i = start; i < stop; ++i) {
        const Triple& pos = order[i];
        const auto negs = corrupt_fact(graph, pos, rng, cfg.negatives).negatives;
        const auto ps = model.entity(pos.s);
        const auto pp = model.predicate(pos.p);
        const auto po = model.entity(pos.o);
        if (transe) {
          const double pos_score = score_rows(kind, norm, ps, pp, po);
          for (const auto& neg : negs) {
            const double neg_score =
                score_rows(kind, norm, model.entity(neg.s), model.predicate(neg.p),
                           model.entity(neg.o));
            const double hinge = cfg.margin + neg_score - pos_score;
            if (hinge <= 0) continue;
            total += hinge;
            batch.add(pos, fact_loss_gradient(kind, norm, Loss::kMargin, 1.0, 0.0, ps, pp, po));
            batch.add(neg, fact_loss_gradient(kind, norm, Loss::kMargin, -1.0, 0.0,
                                              model.entity(neg.s), model.predicate(neg.p),
                                              model.entity(neg.o)));
          }
        } else {
          total += fact_loss(kind, norm, Loss::kLogistic, 1.0, cfg.l2, ps, pp, po);
          batch.add(pos, fact_loss_gradient(kind, norm, Loss::kLogistic, 1.0, cfg.l2, ps, pp, po));
          for (const auto& neg : negs) {
            const auto ns = model.entity(neg.s);
            const auto np = model.predicate(neg.p);
            const auto no = model.entity(neg.o);
            total += fact_loss(kind, norm, Loss::kLogistic, -1.0, cfg.l2, ns, np, no);
            batch.add(neg,
                      fact_loss_gradient(kind, norm, Loss::kLogistic, -1.0, cfg.l2, ns, np, no));
          }
        }
      }
      batch.apply(model, cfg.learning_rate);
    }
    if (transe) renormalize_entities(model);
    const double mean = total / static_cast<double>(order.size());
    if (!std::isfinite(mean))
      throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                         " (non-finite loss); lower the learning rate");
    for (double v : model.entity_table())
      if (!std::isfinite(v))
        throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                           " (non-finite embedding)");
    report.epoch_loss.push_back(mean);
  }
  return report;
}

std::vector<double> pair_vector(const EmbeddingModel& model, EntityId s, EntityId o) {
  const auto a = model.entity(s);
  const auto b = model.entity(o);
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

namespace {

constexpr char kMagic[8] = {'K', 'G', 'X', 'E', 'M', 'B', '0', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}
void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}
std::uint64_t get_bytes(std::istream& in, int n) {
  unsigned char b[8] = {};
  if (!in.read(reinterpret_cast<char*>(b), n)) throw ParseError("truncated model checkpoint");
  std::uint64_t v = 0;
  for (int i = n - 1; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace

void save_model(const EmbeddingModel& model, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  put_u32(out, static_cast<std::uint32_t>(model.kind()));
  put_u32(out, static_cast<std::uint32_t>(model.dim()));
  put_u32(out, static_cast<std::uint32_t>(model.norm()));
  put_u32(out, 0);
  put_u64(out, model.entity_count());
  put_u64(out, model.predicate_count());
  for (auto table : {model.entity_table(), model.predicate_table()})
    for (double v : table) put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw DataError("failed to write model checkpoint");
}

EmbeddingModel load_model(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + 8, kMagic))
    throw ParseError("not a model checkpoint (bad magic)");
  const auto kind = static_cast<std::uint32_t>(get_bytes(in, 4));
  const auto dim = static_cast<int>(get_bytes(in, 4));
  const auto norm = static_cast<int>(get_bytes(in, 4));
  get_bytes(in, 4);
  const auto entities = get_bytes(in, 8);
  const auto predicates = get_bytes(in, 8);
  if (kind > 2) throw ParseError("unknown model kind in checkpoint");
  EmbeddingModel model(static_cast<ModelKind>(kind), dim, norm, entities, predicates);
  for (auto table : {model.entity_table(), model.predicate_table()})
    for (double& v : table) v = std::bit_cast<double>(get_bytes(in, 8));
  return model;
}

void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  save_model(model, out);
}

EmbeddingModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return load_model(in);
}

void export_csv(const EmbeddingModel& model, const Vocabulary& vocab, std::ostream& out) {
  out.precision(17);
  auto rows = [&](const char* table, const Dictionary& dict, std::size_t n, auto row_of) {
    for (std::uint32_t i = 0; i < n; ++i) {
      out << table << ',' << (i < dict.size() ? dict.label(i) : std::to_string(i));
      for (double v : row_of(i)) out << ',' << v;
      out << '\n';
    }
  };
  rows("entity", vocab.entities, model.entity_count(),
       [&](std::uint32_t i) { return model.entity(i); });
  rows("predicate", vocab.predicates, model.predicate_count(),
       [&](std::uint32_t i) { return model.predicate(i); });
}

}  // namespace kgx
