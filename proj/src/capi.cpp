#include <cstring>
#include <memory>
#include <sstream>
#include <string>

#include "kgx/error.hpp"
#include "kgx/kgx.h"
#include "kgx/pipeline.hpp"

struct kgx_config {
  kgx::PipelineConfig cfg;
};

struct kgx_dataset {
  std::shared_ptr<const kgx::Dataset> ds;
};

struct kgx_model {
  kgx::EmbeddingModel model;
};

struct kgx_explanation_set {
  std::shared_ptr<const kgx::Dataset> ds;
  kgx::ScopeResult result;
};

namespace {

thread_local std::string last_error;

template <typename F>
kgx_status guarded(F&& f) {
  try {
    last_error.clear();
    f();
    return KGX_OK;
  } catch (const kgx::ConfigError& e) {
    last_error = e.what();
    return KGX_ERR_USAGE;
  } catch (const kgx::ParseError& e) {
    last_error = e.what();
    return KGX_ERR_DATA;
  } catch (const kgx::DataError& e) {
    last_error = e.what();
    return KGX_ERR_DATA;
  } catch (const kgx::NumericError& e) {
    last_error = e.what();
    return KGX_ERR_NUMERIC;
  } catch (const std::invalid_argument& e) {
    last_error = e.what();
    return KGX_ERR_USAGE;
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return KGX_ERR_DATA;
  } catch (const std::exception& e) {
    last_error = e.what();
    return KGX_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return KGX_ERR_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (!p) throw std::invalid_argument(std::string(name) + " must not be null");
}

char* duplicate(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void fill(const kgx::FidelityRecord& r, kgx_fidelity* out) {
  out->roc_auc = r.roc_auc.value_or(0.0);
  out->s_mrr = r.s_mrr.value_or(0.0);
  out->o_mrr = r.o_mrr.value_or(0.0);
  out->has_roc_auc = r.roc_auc.has_value();
  out->has_s_mrr = r.s_mrr.has_value();
  out->has_o_mrr = r.o_mrr.has_value();
  out->test_size = r.test_size;
}

const kgx::Explanation& at(const kgx_explanation_set* set, size_t index) {
  require(set, "set");
  if (index >= set->result.explanations.size()) throw std::invalid_argument("explanation index out of range");
  return set->result.explanations[index];
}

}  // namespace

extern "C" {

const char* kgx_last_error(void) { return last_error.c_str(); }

const char* kgx_version(void) { return "0.1.0"; }

void kgx_string_free(char* s) { std::free(s); }

kgx_status kgx_config_new(kgx_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new kgx_config{kgx::PipelineConfig::defaults()};
  });
}

kgx_status kgx_config_load(const char* path, kgx_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new kgx_config{kgx::PipelineConfig::load(path)};
  });
}

kgx_status kgx_config_set(kgx_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg, "cfg");
    require(key, "key");
    require(value, "value");
    cfg->cfg.set(key, value);
  });
}

kgx_status kgx_config_set_seed(kgx_config* cfg, uint64_t seed) {
  return guarded([&] {
    require(cfg, "cfg");
    cfg->cfg.set_seed(seed);
  });
}

kgx_status kgx_config_validate(const kgx_config* cfg) {
  return guarded([&] {
    require(cfg, "cfg");
    cfg->cfg.validate();
  });
}

kgx_status kgx_config_render(const kgx_config* cfg, char** out) {
  return guarded([&] {
    require(cfg, "cfg");
    require(out, "out");
    *out = duplicate(cfg->cfg.render());
  });
}

void kgx_config_free(kgx_config* cfg) { delete cfg; }

kgx_status kgx_run(const kgx_config* cfg, const char* command, char** log) {
  std::ostringstream messages;
  const auto status = guarded([&] {
    require(cfg, "cfg");
    require(command, "command");
    kgx::run(kgx::parse_command(command), cfg->cfg, messages);
  });
  if (log) *log = duplicate(messages.str());
  return status;
}

kgx_status kgx_dataset_load(const char* train, const char* valid, const char* test, kgx_dataset** out) {
  return guarded([&] {
    require(train, "train");
    require(out, "out");
    auto ds = kgx::Dataset::from_files(train, valid ? valid : "", test ? test : "");
    *out = new kgx_dataset{std::make_shared<const kgx::Dataset>(std::move(ds))};
  });
}

kgx_status kgx_dataset_counts(const kgx_dataset* ds, size_t* entities, size_t* predicates, size_t* train_facts,
                              size_t* test_facts) {
  return guarded([&] {
    require(ds, "ds");
    if (entities) *entities = ds->ds->vocab->entities.size();
    if (predicates) *predicates = ds->ds->vocab->predicates.size();
    if (train_facts) *train_facts = ds->ds->train.facts().size();
    if (test_facts) *test_facts = ds->ds->test.size();
  });
}

void kgx_dataset_free(kgx_dataset* ds) { delete ds; }

kgx_status kgx_model_train(const kgx_dataset* ds, const kgx_config* cfg, kgx_model** out) {
  return guarded([&] {
    require(ds, "ds");
    require(cfg, "cfg");
    require(out, "out");
    const auto& c = cfg->cfg;
    c.validate();
    const auto& d = *ds->ds;
    auto model = kgx::init_model(c.model_kind, c.dim, d.vocab->entities.size(), d.vocab->predicates.size(),
                                 c.model_seed(), c.norm);
    kgx::train(model, d.train, c.training);
    *out = new kgx_model{std::move(model)};
  });
}

kgx_status kgx_model_load(const char* path, kgx_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new kgx_model{kgx::load_model(std::filesystem::path(path))};
  });
}

kgx_status kgx_model_save(const kgx_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    kgx::save_model(model->model, std::filesystem::path(path));
  });
}

kgx_status kgx_model_score(const kgx_model* model, const kgx_dataset* ds, const char* subject,
                           const char* predicate, const char* object, double* out) {
  return guarded([&] {
    require(model, "model");
    require(ds, "ds");
    require(subject, "subject");
    require(predicate, "predicate");
    require(object, "object");
    require(out, "out");
    const auto& v = *ds->ds->vocab;
    const kgx::Triple t{v.entities.at(subject), v.predicates.at(predicate), v.entities.at(object)};
    if (t.s >= model->model.entity_count() || t.o >= model->model.entity_count() ||
        t.p >= model->model.predicate_count())
      throw kgx::DataError("model does not cover the dataset vocabulary");
    *out = model->model.score(t);
  });
}

void kgx_model_free(kgx_model* model) { delete model; }

kgx_status kgx_explain(const kgx_model* model, const kgx_dataset* ds, const kgx_config* cfg, const char* predicate,
                       kgx_explanation_set** out) {
  return guarded([&] {
    require(model, "model");
    require(ds, "ds");
    require(cfg, "cfg");
    require(predicate, "predicate");
    require(out, "out");
    const auto& c = cfg->cfg;
    c.validate();
    const auto& d = *ds->ds;
    const auto& m = model->model;
    if (m.entity_count() != d.vocab->entities.size() || m.predicate_count() != d.vocab->predicates.size())
      throw kgx::DataError("model does not match the dataset vocabulary");
    const auto p = d.vocab->predicates.at(predicate);
    auto sc = c.scoping;
    sc.seed = kgx::predicate_seed(c.explain_seed(), p);
    const auto f = m.scorer();
    const auto global = kgx::predicate_context(d, p, sc.seed);
    const double theta = kgx::predicate_threshold(f, global, sc);
    auto result = kgx::explain_scope(f, m, {d.train, d.universe}, global, c.scope, sc, theta);
    *out = new kgx_explanation_set{ds->ds, std::move(result)};
  });
}

size_t kgx_explanation_count(const kgx_explanation_set* set) { return set ? set->result.explanations.size() : 0; }

kgx_status kgx_explanation_set_fidelity(const kgx_explanation_set* set, kgx_fidelity* out) {
  return guarded([&] {
    require(set, "set");
    require(out, "out");
    fill(set->result.aggregate, out);
  });
}

kgx_status kgx_explanation_fidelity(const kgx_explanation_set* set, size_t index, kgx_fidelity* out) {
  return guarded([&] {
    require(out, "out");
    fill(at(set, index).fidelity, out);
  });
}

kgx_status kgx_explanation_rule_count(const kgx_explanation_set* set, size_t index, size_t* out) {
  return guarded([&] {
    require(out, "out");
    *out = at(set, index).rules.size();
  });
}

kgx_status kgx_explanation_covered(const kgx_explanation_set* set, size_t index, int* out) {
  return guarded([&] {
    require(out, "out");
    *out = at(set, index).covered();
  });
}

kgx_status kgx_explanation_json(const kgx_explanation_set* set, size_t index, char** out) {
  return guarded([&] {
    require(out, "out");
    std::ostringstream s;
    kgx::write_explanation(at(set, index), *set->ds->vocab, s);
    *out = duplicate(s.str());
  });
}

kgx_status kgx_explanation_surrogate_score(const kgx_explanation_set* set, size_t index, const char* subject,
                                           const char* object, double* out) {
  return guarded([&] {
    require(subject, "subject");
    require(object, "object");
    require(out, "out");
    const auto& e = at(set, index);
    const auto& v = *set->ds->vocab;
    *out = kgx::surrogate_score(e, set->ds->train, {v.entities.at(subject), e.predicate, v.entities.at(object)});
  });
}

void kgx_explanation_set_free(kgx_explanation_set* set) { delete set; }

}  // extern "C"
